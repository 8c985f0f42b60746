//! Entity ↔ multi-label tag vector conversion.
//!
//! Every token carries one independent value per label, so a token can be
//! `B-gene` and `B-chemical` at once. Encoding writes entities into such
//! vectors; decoding thresholds each class separately and chunks the result.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CharSpan, Entity};
use crate::tagio::schema::{chunks, LabelSpace, Tag, TagSchema};
use crate::tagio::tokenize::{surface_text, Token};

pub const DECODER_SOURCE: &str = "decoder";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LabelMode {
    Soft,
    #[default]
    Hard,
}

impl std::str::FromStr for LabelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soft" => Ok(LabelMode::Soft),
            "hard" => Ok(LabelMode::Hard),
            other => Err(Error::InvalidArgument(format!("unknown label mode `{other}`"))),
        }
    }
}

/// Per-token label probabilities. Stored token-major: row `t` is the label
/// vector of token `t`. Columns need not sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    values: Array2<f64>,
}

impl ProbMatrix {
    /// Wraps a `tokens × labels` array, checking every value is in `[0, 1]`.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        for ((token, label), &value) in values.indexed_iter() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ProbabilityOutOfRange { token, label, value });
            }
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: usize) -> Result<Self> {
        Self::new(rows_to_array(rows, labels)?)
    }

    pub fn zeros(tokens: usize, labels: usize) -> Self {
        Self {
            values: Array2::zeros((tokens, labels)),
        }
    }

    pub fn num_tokens(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_labels(&self) -> usize {
        self.values.ncols()
    }

    #[inline]
    pub fn prob(&self, label: usize, token: usize) -> f64 {
        self.values[[token, label]]
    }

    pub fn token_vector(&self, token: usize) -> ArrayView1<'_, f64> {
        self.values.row(token)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        array_to_rows(&self.values)
    }

    fn check_space(&self, space: &LabelSpace, tokens: usize) -> Result<()> {
        if self.num_labels() != space.len() || self.num_tokens() != tokens {
            return Err(Error::ShapeMismatch {
                expected: format!("{} tokens × {} labels", tokens, space.len()),
                actual: format!("{} tokens × {} labels", self.num_tokens(), self.num_labels()),
            });
        }
        Ok(())
    }
}

/// Per-token training targets, same layout as [`ProbMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSequence {
    values: Array2<f64>,
}

impl TargetSequence {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if let Some(((token, label), &value)) = values.indexed_iter().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::ProbabilityOutOfRange { token, label, value });
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: usize) -> Result<Self> {
        Self::new(rows_to_array(rows, labels)?)
    }

    pub fn num_tokens(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_labels(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        array_to_rows(&self.values)
    }

    pub fn is_hard(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

fn rows_to_array(rows: &[Vec<f64>], labels: usize) -> Result<Array2<f64>> {
    let mut flat = Vec::with_capacity(rows.len() * labels);
    for (t, row) in rows.iter().enumerate() {
        if row.len() != labels {
            return Err(Error::ShapeMismatch {
                expected: format!("{labels} labels"),
                actual: format!("{} labels at token {t}", row.len()),
            });
        }
        flat.extend_from_slice(row);
    }
    Ok(Array2::from_shape_vec((rows.len(), labels), flat).expect("shape checked"))
}

fn array_to_rows(values: &Array2<f64>) -> Vec<Vec<f64>> {
    values.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Writes `entities` into per-token target vectors.
///
/// The first token overlapping an entity gets `B-c` (`I-c` under IO), later
/// overlapping tokens get `I-c`. Hard mode writes 1; soft mode writes the
/// entity confidence, keeping the maximum where entities collide. `O` is
/// `1 - max(active values)`, which is 1 exactly when nothing is active.
pub fn encode(entities: &[Entity], tokens: &[Token], space: &LabelSpace, mode: LabelMode) -> Result<TargetSequence> {
    let mut values = Array2::<f64>::zeros((tokens.len(), space.len()));
    let mut active = vec![0.0_f64; tokens.len()];
    for entity in entities {
        let class = space
            .class_index(&entity.entity_class)
            .ok_or_else(|| Error::UnknownClass(entity.entity_class.clone()))?;
        let value = match mode {
            LabelMode::Hard => 1.0,
            LabelMode::Soft => entity.confidence,
        };
        let mut first = true;
        for (t, token) in tokens.iter().enumerate() {
            if !entity.overlaps(&token.span) {
                continue;
            }
            let label = match (first, space.begin_index(class)) {
                (true, Some(b)) => b,
                _ => space.inside_index(class),
            };
            first = false;
            let cell = &mut values[[t, label]];
            *cell = cell.max(value);
            active[t] = active[t].max(value);
        }
    }
    for (t, &max_active) in active.iter().enumerate() {
        values[[t, space.outside_index()]] = match mode {
            LabelMode::Hard => {
                if max_active > 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
            LabelMode::Soft => 1.0 - max_active,
        };
    }
    TargetSequence::new(values)
}

/// One-hot targets from a single-label tag sequence.
pub fn conll_to_targets<S: AsRef<str>>(tags: &[S], space: &LabelSpace) -> Result<TargetSequence> {
    let mut values = Array2::<f64>::zeros((tags.len(), space.len()));
    for (t, tag) in tags.iter().enumerate() {
        let tag: Tag = tag.as_ref().parse()?;
        let index = space.tag_index(&tag).map_err(|e| match e {
            Error::UnknownClass(_) => Error::UnknownTag(tag.to_string()),
            other => other,
        })?;
        values[[t, index]] = 1.0;
    }
    TargetSequence::new(values)
}

pub(crate) fn check_threshold(threshold: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidThreshold(threshold));
    }
    Ok(())
}

/// Tags for one class, each with the probability of the chosen tag.
///
/// A token is tagged when `max(p(B), p(I)) >= threshold`; the larger of the
/// two wins and `B` wins ties. Under IO the token is `I` iff
/// `p(I) >= threshold`. Everything else is `O`.
pub fn class_tags(matrix: &ProbMatrix, class: usize, space: &LabelSpace, threshold: f64) -> Result<Vec<(Tag, f64)>> {
    check_threshold(threshold)?;
    if class >= space.num_classes() {
        return Err(Error::InvalidArgument(format!(
            "class index {class} out of range for {} classes",
            space.num_classes()
        )));
    }
    if matrix.num_labels() != space.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} labels", space.len()),
            actual: format!("{} labels", matrix.num_labels()),
        });
    }
    let name = &space.classes()[class];
    let inside = space.inside_index(class);
    let begin = space.begin_index(class);
    let out = (0..matrix.num_tokens())
        .map(|t| {
            let p_inside = matrix.prob(inside, t);
            match begin {
                Some(b) => {
                    let p_begin = matrix.prob(b, t);
                    if p_begin.max(p_inside) < threshold {
                        (Tag::Outside, matrix.prob(space.outside_index(), t))
                    } else if p_begin >= p_inside {
                        (Tag::Begin(name.clone()), p_begin)
                    } else {
                        (Tag::Inside(name.clone()), p_inside)
                    }
                }
                None if p_inside >= threshold => (Tag::Inside(name.clone()), p_inside),
                None => (Tag::Outside, matrix.prob(space.outside_index(), t)),
            }
        })
        .collect();
    Ok(out)
}

/// Decodes a probability matrix into contiguous entities, class by class.
///
/// Entities come out grouped by class (label-space order), then by start.
/// Confidence is the mean probability of the chosen tags.
pub fn decode(matrix: &ProbMatrix, tokens: &[Token], space: &LabelSpace, threshold: f64) -> Result<Vec<Entity>> {
    check_threshold(threshold)?;
    matrix.check_space(space, tokens.len())?;
    let mut entities = Vec::new();
    for class in 0..space.num_classes() {
        let tagged = class_tags(matrix, class, space, threshold)?;
        let tags: Vec<Tag> = tagged.iter().map(|(t, _)| t.clone()).collect();
        for chunk in chunks(&tags) {
            let n = (chunk.end - chunk.start + 1) as f64;
            let confidence = tagged[chunk.start..=chunk.end].iter().map(|(_, p)| p).sum::<f64>() / n;
            let span = CharSpan::new(tokens[chunk.start].start(), tokens[chunk.end].end())?;
            let entity = Entity::new(vec![span], chunk.class, confidence.clamp(0.0, 1.0), DECODER_SOURCE)?
                .with_match_text(surface_text(tokens, chunk.start, chunk.end));
            entities.push(entity);
        }
    }
    Ok(entities)
}

/// Whether `schema` can represent two same-class entities that touch.
pub fn delimits_adjacent(schema: TagSchema) -> bool {
    schema == TagSchema::Bio
}
