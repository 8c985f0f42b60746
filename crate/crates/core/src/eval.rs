//! Entity-level precision, recall and F1.
//!
//! Multi-label predictions are scored one class at a time: for class `i`
//! only the `B-i`, `I-i` and `O` rows are turned into a single-class tag
//! sequence, chunked, and matched exactly against the gold chunks of that
//! class.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tagio::codec::{check_threshold, class_tags};
use crate::tagio::{chunks, parse_tags, Chunk, ConllSentence, LabelSpace, ProbMatrix, ProbRecord, Tag};

/// Set of `(class, start, end)` chunks; `end` is inclusive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChunkSet(BTreeSet<Chunk>);

impl ChunkSet {
    pub fn from_tags(tags: &[Tag]) -> Self {
        ChunkSet(chunks(tags).into_iter().collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Chunk> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, chunk: &Chunk) -> bool {
        self.0.contains(chunk)
    }
}

impl FromIterator<Chunk> for ChunkSet {
    fn from_iter<I: IntoIterator<Item = Chunk>>(iter: I) -> Self {
        ChunkSet(iter.into_iter().collect())
    }
}

/// True-positive / false-positive / false-negative counts for one class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl AddAssign for Counts {
    fn add_assign(&mut self, rhs: Self) {
        self.tp += rhs.tp;
        self.fp += rhs.fp;
        self.fn_ += rhs.fn_;
    }
}

impl Counts {
    pub fn support(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }

    fn is_empty(&self) -> bool {
        self.tp + self.fp + self.fn_ == 0
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    #[serde(flatten)]
    pub counts: Counts,
}

impl From<Counts> for ClassMetrics {
    fn from(counts: Counts) -> Self {
        ClassMetrics {
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
            support: counts.support(),
            counts,
        }
    }
}

/// Per-class metrics and their unweighted mean F1.
///
/// Only classes that occur in gold or prediction are reported; an empty
/// report has `macro_f1 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class: BTreeMap<String, ClassMetrics>,
    pub macro_f1: f64,
}

impl EvalReport {
    pub fn from_counts(counts: &BTreeMap<String, Counts>) -> Self {
        let per_class: BTreeMap<String, ClassMetrics> = counts
            .iter()
            .filter(|(_, c)| !c.is_empty())
            .map(|(k, c)| (k.clone(), ClassMetrics::from(*c)))
            .collect();
        let macro_f1 = if per_class.is_empty() {
            0.0
        } else {
            per_class.values().map(|m| m.f1).sum::<f64>() / per_class.len() as f64
        };
        EvalReport { per_class, macro_f1 }
    }

    pub fn total_support(&self) -> usize {
        self.per_class.values().map(|m| m.support).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let width = self
            .per_class
            .keys()
            .map(|k| k.chars().count())
            .chain(std::iter::once("macro avg".len()))
            .max()
            .unwrap_or(9);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>7}",
            "class", "precision", "recall", "f1", "support"
        );
        for (class, m) in &self.per_class {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}",
                class, m.precision, m.recall, m.f1, m.support
            );
        }
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>9}  {:>9.4}  {:>7}",
            "macro avg",
            "",
            "",
            self.macro_f1,
            self.total_support()
        );
        out
    }
}

/// Single-class tag sequence for class `class` read from the `B-`, `I-` and
/// `O` rows of `matrix`, using the decoder's threshold rule.
pub fn per_class_split(matrix: &ProbMatrix, class: usize, space: &LabelSpace, threshold: f64) -> Result<Vec<Tag>> {
    Ok(class_tags(matrix, class, space, threshold)?
        .into_iter()
        .map(|(tag, _)| tag)
        .collect())
}

/// Exact-match counts per class between two chunk sets.
pub fn count_matches(gold: &ChunkSet, pred: &ChunkSet) -> BTreeMap<String, Counts> {
    let mut counts: BTreeMap<String, Counts> = BTreeMap::new();
    for chunk in pred.iter() {
        let c = counts.entry(chunk.class.clone()).or_default();
        if gold.contains(chunk) {
            c.tp += 1;
        } else {
            c.fp += 1;
        }
    }
    for chunk in gold.iter() {
        if !pred.contains(chunk) {
            counts.entry(chunk.class.clone()).or_default().fn_ += 1;
        }
    }
    counts
}

/// Entity-level P/R/F1 with exact `(class, start, end)` matching.
pub fn entity_prf1(gold: &ChunkSet, pred: &ChunkSet) -> EvalReport {
    EvalReport::from_counts(&count_matches(gold, pred))
}

/// Scores probability predictions against single-label gold sentences.
///
/// Every class of `space` is evaluated separately over the whole corpus:
/// predictions are split per class, gold tags of other classes are read as
/// `O`, and TP/FP/FN are summed over sentences before computing metrics.
pub fn evaluate_corpus(
    preds: &[ProbRecord],
    gold: &[ConllSentence],
    space: &LabelSpace,
    threshold: f64,
) -> Result<EvalReport> {
    check_threshold(threshold)?;
    if preds.len() != gold.len() {
        return Err(Error::SentenceMismatch {
            sentence: preds.len().min(gold.len()),
            message: format!("{} predicted vs {} gold sentences", preds.len(), gold.len()),
        });
    }
    let mut totals: BTreeMap<String, Counts> = BTreeMap::new();
    for (i, (pred, gold)) in preds.iter().zip(gold).enumerate() {
        let sentence_err = |message: String| Error::SentenceMismatch { sentence: i, message };
        if pred.tokens.len() != gold.tokens.len() {
            return Err(sentence_err(format!(
                "{} predicted vs {} gold tokens",
                pred.tokens.len(),
                gold.tokens.len()
            )));
        }
        let matrix = pred.matrix(space.len()).map_err(|e| sentence_err(e.to_string()))?;
        let gold_tags = parse_tags(&gold.tags).map_err(|e| sentence_err(e.to_string()))?;
        if let Some(unknown) = gold_tags
            .iter()
            .filter_map(Tag::class)
            .find(|c| space.class_index(c).is_none())
        {
            return Err(sentence_err(format!(
                "gold class `{unknown}` is not in the label space"
            )));
        }
        for (class_idx, class) in space.classes().iter().enumerate() {
            let pred_tags = per_class_split(&matrix, class_idx, space, threshold)?;
            let gold_class: Vec<Tag> = gold_tags.iter().map(|t| t.restricted_to(class)).collect();
            let counts = count_matches(&ChunkSet::from_tags(&gold_class), &ChunkSet::from_tags(&pred_tags));
            *totals.entry(class.clone()).or_default() += counts.get(class).copied().unwrap_or_default();
        }
    }
    Ok(EvalReport::from_counts(&totals))
}
