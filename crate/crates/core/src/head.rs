//! Sigmoid classifier head over per-token embeddings.
//!
//! `o = sigmoid(h W + b)` with one independent output per label, trained
//! with mean binary cross-entropy against hard or soft targets. Token
//! embeddings come from [`HashFeaturizer`], a deterministic character
//! n-gram hashing scheme standing in for contextual encoder states.

use std::collections::HashMap;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::Entity;
use crate::tagio::{decode, tokenize, LabelSpace, ProbMatrix, TargetSequence, Token};

/// Probabilities are clamped to `[EPS, 1 - EPS]` inside the loss.
pub const BCE_EPS: f64 = 1e-12;

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Parameters of the dense head: `weights` is `d × labels`, `bias` has one
/// entry per label.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseHeadParams {
    pub labels: Vec<String>,
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseHeadParams {
    /// All-zero parameters: every output is exactly 0.5.
    pub fn zeros(dim: usize, space: &LabelSpace) -> Self {
        DenseHeadParams {
            labels: space.labels().to_vec(),
            weights: Array2::zeros((dim, space.len())),
            bias: Array1::zeros(space.len()),
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn num_labels(&self) -> usize {
        self.weights.ncols()
    }

    pub fn label_space(&self) -> Result<LabelSpace> {
        LabelSpace::from_labels(&self.labels)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bias.len() != self.num_labels() || self.labels.len() != self.num_labels() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} labels", self.num_labels()),
                actual: format!("bias {} / labels {}", self.bias.len(), self.labels.len()),
            });
        }
        if self.weights.iter().chain(self.bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "head parameters contain non-finite values".into(),
            ));
        }
        Ok(())
    }
}

/// On-disk form of a trained head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadFile {
    pub d: usize,
    pub labels: Vec<String>,
    /// `d` rows of `labels.len()` values.
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub featurizer: Option<HashFeaturizer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl HeadFile {
    pub fn from_params(params: &DenseHeadParams) -> Self {
        HeadFile {
            d: params.dim(),
            labels: params.labels.clone(),
            w: params.weights.rows().into_iter().map(|r| r.to_vec()).collect(),
            b: params.bias.to_vec(),
            featurizer: None,
            threshold: None,
        }
    }

    pub fn params(&self) -> Result<DenseHeadParams> {
        let labels = self.labels.len();
        if self.w.len() != self.d || self.w.iter().any(|r| r.len() != labels) {
            return Err(Error::ShapeMismatch {
                expected: format!("W of {} × {}", self.d, labels),
                actual: format!("{} rows", self.w.len()),
            });
        }
        let flat: Vec<f64> = self.w.iter().flatten().copied().collect();
        let params = DenseHeadParams {
            labels: self.labels.clone(),
            weights: Array2::from_shape_vec((self.d, labels), flat).expect("shape checked"),
            bias: Array1::from(self.b.clone()),
        };
        params.validate()?;
        Ok(params)
    }
}

fn check_dim(h: &Array2<f64>, params: &DenseHeadParams) -> Result<()> {
    if h.ncols() != params.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!(
                "embeddings of dimension {} (W is {} × {})",
                params.dim(),
                params.dim(),
                params.num_labels()
            ),
            actual: format!("{} × {}", h.nrows(), h.ncols()),
        });
    }
    Ok(())
}

fn logits(h: &Array2<f64>, params: &DenseHeadParams) -> Array2<f64> {
    h.dot(&params.weights) + &params.bias
}

/// Per-token label probabilities for an `n × d` embedding batch.
pub fn forward(h: &Array2<f64>, params: &DenseHeadParams) -> Result<ProbMatrix> {
    check_dim(h, params)?;
    ProbMatrix::new(logits(h, params).mapv_into(sigmoid))
}

fn check_targets(probs: (usize, usize), targets: &TargetSequence) -> Result<()> {
    if probs != (targets.num_tokens(), targets.num_labels()) {
        return Err(Error::ShapeMismatch {
            expected: format!("{} × {}", probs.0, probs.1),
            actual: format!("{} × {}", targets.num_tokens(), targets.num_labels()),
        });
    }
    Ok(())
}

fn mean_bce(p: &Array2<f64>, t: &Array2<f64>) -> f64 {
    if p.is_empty() {
        return 0.0;
    }
    let total: f64 = p
        .iter()
        .zip(t.iter())
        .map(|(&p, &t)| {
            let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
            -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        })
        .sum();
    total / p.len() as f64
}

/// Mean binary cross-entropy over every (token, label) element. Targets may
/// be soft.
pub fn bce_loss(probs: &ProbMatrix, targets: &TargetSequence) -> Result<f64> {
    check_targets((probs.num_tokens(), probs.num_labels()), targets)?;
    Ok(mean_bce(probs.values(), targets.values()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradient {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

fn gradient_from_probs(h: &Array2<f64>, p: &Array2<f64>, t: &Array2<f64>) -> HeadGradient {
    let n = p.len().max(1) as f64;
    let residual = (p - t) / n;
    HeadGradient {
        weights: h.t().dot(&residual),
        bias: residual.sum_axis(Axis(0)),
    }
}

/// Gradient of [`bce_loss`]∘[`forward`] with respect to `W` and `b`.
/// Per element the logit derivative is `(p - t) / N`, `N` the element count.
pub fn grad(h: &Array2<f64>, params: &DenseHeadParams, targets: &TargetSequence) -> Result<HeadGradient> {
    check_dim(h, params)?;
    check_targets((h.nrows(), params.num_labels()), targets)?;
    let p = logits(h, params).mapv_into(sigmoid);
    Ok(gradient_from_probs(h, &p, targets.values()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Seed of the featurizer the head is trained with.
    pub seed: u64,
    /// Decoding threshold stored with the trained head.
    pub threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 5.0,
            epochs: 300,
            seed: 0,
            threshold: 0.5,
        }
    }
}

/// A tokenized sentence with its targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub tokens: Vec<String>,
    pub targets: TargetSequence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: DenseHeadParams,
    /// `loss_trace[0]` is the starting loss, `loss_trace[e]` the loss after
    /// `e` epochs.
    pub loss_trace: Vec<f64>,
}

/// Full-batch gradient descent from zero parameters.
pub fn train(
    examples: &[TrainingExample],
    featurizer: &HashFeaturizer,
    space: &LabelSpace,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    train_from(
        DenseHeadParams::zeros(featurizer.dim, space),
        examples,
        featurizer,
        config,
    )
}

/// Full-batch gradient descent starting at `params`. Every epoch uses all
/// tokens of all examples; the loss is the mean over all elements.
pub fn train_from(
    mut params: DenseHeadParams,
    examples: &[TrainingExample],
    featurizer: &HashFeaturizer,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if examples.is_empty() || examples.iter().all(|e| e.tokens.is_empty()) {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    if !(config.learning_rate >= 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "learning rate {} must be finite and non-negative",
            config.learning_rate
        )));
    }
    params.validate()?;
    let (h, t) = stack(examples, featurizer, params.num_labels())?;
    check_dim(&h, &params)?;

    let mut loss_trace = Vec::with_capacity(config.epochs + 1);
    for epoch in 0..=config.epochs {
        let p = logits(&h, &params).mapv_into(sigmoid);
        let loss = mean_bce(&p, &t);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        loss_trace.push(loss);
        if epoch == config.epochs {
            break;
        }
        let g = gradient_from_probs(&h, &p, &t);
        params.weights.scaled_add(-config.learning_rate, &g.weights);
        params.bias.scaled_add(-config.learning_rate, &g.bias);
        if params.weights.iter().chain(params.bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch: epoch + 1 });
        }
    }
    Ok(TrainOutcome { params, loss_trace })
}

fn stack(
    examples: &[TrainingExample],
    featurizer: &HashFeaturizer,
    labels: usize,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let n: usize = examples.iter().map(|e| e.tokens.len()).sum();
    let mut h = Array2::zeros((n, featurizer.dim));
    let mut t = Array2::zeros((n, labels));
    let mut cache = HashMap::new();
    let mut row = 0;
    for (i, ex) in examples.iter().enumerate() {
        if ex.targets.num_tokens() != ex.tokens.len() || ex.targets.num_labels() != labels {
            return Err(Error::SentenceMismatch {
                sentence: i,
                message: format!(
                    "{} tokens × {} labels expected, targets are {} × {}",
                    ex.tokens.len(),
                    labels,
                    ex.targets.num_tokens(),
                    ex.targets.num_labels()
                ),
            });
        }
        for (k, token) in ex.tokens.iter().enumerate() {
            let v = cache
                .entry(token.as_str())
                .or_insert_with(|| featurizer.featurize(token));
            h.row_mut(row).assign(v);
            t.row_mut(row).assign(&ex.targets.values().row(k));
            row += 1;
        }
    }
    Ok((h, t))
}

/// Deterministic token embedding from hashed character 2- and 3-grams.
///
/// The token is wrapped in `<`/`>` boundary markers so single characters
/// still produce n-grams. Each n-gram adds ±1 to one of `dim` buckets; the
/// result is L2-normalized. The empty token maps to the zero vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashFeaturizer {
    pub dim: usize,
    pub seed: u64,
}

impl HashFeaturizer {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be > 0".into()));
        }
        Ok(Self { dim, seed })
    }

    pub fn featurize(&self, token: &str) -> Array1<f64> {
        let mut v = Array1::zeros(self.dim);
        if token.is_empty() {
            return v;
        }
        let chars: Vec<char> = std::iter::once('<')
            .chain(token.chars())
            .chain(std::iter::once('>'))
            .collect();
        let mut buf = String::new();
        for n in [2, 3] {
            for gram in chars.windows(n) {
                buf.clear();
                buf.extend(gram);
                let mut hasher = Sha256::new();
                hasher.update(self.seed.to_le_bytes());
                hasher.update([n as u8]);
                hasher.update(buf.as_bytes());
                let digest = hasher.finalize();
                let x = u64::from_le_bytes(digest[..8].try_into().expect("32-byte digest"));
                let bucket = (x % self.dim as u64) as usize;
                v[bucket] += if x >> 63 == 0 { 1.0 } else { -1.0 };
            }
        }
        let norm = v.dot(&v).sqrt();
        if norm > 0.0 {
            v /= norm;
        }
        v
    }

    /// `n × dim` embedding batch for a token sequence.
    pub fn embed<S: AsRef<str>>(&self, tokens: &[S]) -> Array2<f64> {
        let mut h = Array2::zeros((tokens.len(), self.dim));
        for (i, tok) in tokens.iter().enumerate() {
            h.row_mut(i).assign(&self.featurize(tok.as_ref()));
        }
        h
    }
}

/// A trained head bundled with its featurizer and label space.
#[derive(Debug, Clone)]
pub struct HeadTagger {
    pub params: DenseHeadParams,
    pub featurizer: HashFeaturizer,
    pub space: LabelSpace,
    pub threshold: f64,
}

impl HeadTagger {
    pub fn new(params: DenseHeadParams, featurizer: HashFeaturizer, threshold: f64) -> Result<Self> {
        crate::tagio::codec::check_threshold(threshold)?;
        if featurizer.dim != params.dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("featurizer dimension {}", params.dim()),
                actual: featurizer.dim.to_string(),
            });
        }
        let space = params.label_space()?;
        Ok(Self {
            params,
            featurizer,
            space,
            threshold,
        })
    }

    pub fn from_file(file: &HeadFile) -> Result<Self> {
        let featurizer = file.featurizer.unwrap_or(HashFeaturizer { dim: file.d, seed: 0 });
        Self::new(file.params()?, featurizer, file.threshold.unwrap_or(0.5))
    }

    pub fn to_file(&self) -> HeadFile {
        HeadFile {
            featurizer: Some(self.featurizer),
            threshold: Some(self.threshold),
            ..HeadFile::from_params(&self.params)
        }
    }

    pub fn predict<S: AsRef<str>>(&self, tokens: &[S]) -> Result<ProbMatrix> {
        forward(&self.featurizer.embed(tokens), &self.params)
    }

    pub fn tag_tokens(&self, tokens: &[Token]) -> Result<Vec<Entity>> {
        let texts: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
        let probs = self.predict(&texts)?;
        decode(&probs, tokens, &self.space, self.threshold)
    }

    pub fn tag_text(&self, text: &str) -> Result<Vec<Entity>> {
        self.tag_tokens(&tokenize(text))
    }
}
