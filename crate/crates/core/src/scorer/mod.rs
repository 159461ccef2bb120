//! Dual-encoder candidate scoring.
//!
//! Candidates are rendered, encoded patch by patch, mean-pooled and projected
//! into a shared space; the target word's context is encoded into the same
//! space; logits are inner products. Training minimizes the ranking
//! cross-entropy plus an optional bag-of-marks or positional auxiliary loss
//! weighted by `0.5 / N_cands`.

mod checkpoint;
mod gradcheck;
mod model;
mod tensor;
mod train;

use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checkpoint::{Checkpoint, CHECKPOINT_HEADER};
pub use gradcheck::{grad_check, GradCheckReport};
pub use model::{
    ngram_rows, Activation, AuxMode, CandidateInput, ContextInput, Example, ExampleOutput, Model, ModelConfig, PatchInput,
    AUX_WEIGHT, MAX_POSITIONS,
};
pub use tensor::Matrix;
pub use train::{TraceRow, TrainConfig, TrainError, Trainer, TrainingSet};

use crate::corpus::Sentence;
use crate::render::RenderedImage;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("dimension mismatch: context has {context}, candidate {index} has {candidate}")]
    DimensionMismatch { context: usize, index: usize, candidate: usize },
    #[error("no candidates to score")]
    EmptyCandidates,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("token {0} is not a Hebrew word of the sentence")]
    BadTargetIndex(usize),
    #[error("gold index {0} is outside the candidate set")]
    BadGoldIndex(usize),
    #[error("cannot derive auxiliary targets: {0}")]
    TargetDerivation(String),
    #[error("render failed: {0}")]
    Render(String),
}

/// A vector in the shared embedding space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding(pub Vec<f64>);

impl Embedding {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for Embedding {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Embedding {
    fn from(v: Vec<f64>) -> Self {
        Embedding(v)
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDistribution {
    pub logits: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl ScoreDistribution {
    pub fn from_logits(logits: Vec<f64>) -> Self {
        let probabilities = softmax(&logits);
        Self { logits, probabilities }
    }

    /// Highest logit; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, l) in self.logits.iter().enumerate() {
            if *l > self.logits[best] {
                best = i;
            }
        }
        best
    }
}

/// Inner-product logits of each candidate against the context.
pub fn score(context: &[f64], candidates: &[Embedding]) -> Result<ScoreDistribution, ScoreError> {
    if candidates.is_empty() {
        return Err(ScoreError::EmptyCandidates);
    }
    let logits = candidates
        .iter()
        .enumerate()
        .map(|(index, c)| {
            if c.dim() != context.len() {
                Err(ScoreError::DimensionMismatch {
                    context: context.len(),
                    index,
                    candidate: c.dim(),
                })
            } else {
                Ok(tensor::dot(context, c))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScoreDistribution::from_logits(logits))
}

/// Per-candidate auxiliary predictions and their targets.
pub type AuxPredictions<'a> = (&'a [Vec<f64>], &'a [Vec<f64>]);

/// The combined objective evaluated on probabilities directly:
/// `CE(probs, gold) + 0.5/N * sum_i mean_j BCE(pred_ij, target_ij)`.
/// With `aux` absent only the cross-entropy is returned.
pub fn objective_from_probabilities(
    probabilities: &[f64],
    gold: usize,
    aux: Option<AuxPredictions<'_>>,
) -> Result<f64, ScoreError> {
    let n = probabilities.len();
    if n == 0 {
        return Err(ScoreError::EmptyCandidates);
    }
    if gold >= n {
        return Err(ScoreError::BadGoldIndex(gold));
    }
    let mut loss = -probabilities[gold].ln();
    if let Some((preds, targets)) = aux {
        if preds.len() != n || targets.len() != n {
            return Err(ScoreError::TargetDerivation("one prediction and target per candidate".into()));
        }
        let xlogy = |x: f64, y: f64| if x == 0.0 { 0.0 } else { x * y.ln() };
        let mut sum = 0.0;
        for (p, t) in preds.iter().zip(targets) {
            if p.len() != t.len() || p.is_empty() {
                return Err(ScoreError::TargetDerivation("prediction and target widths differ".into()));
            }
            let bce: f64 = p.iter().zip(t).map(|(&p, &y)| -(xlogy(y, p) + xlogy(1.0 - y, 1.0 - p))).sum();
            sum += bce / p.len() as f64;
        }
        loss += AUX_WEIGHT / n as f64 * sum;
    }
    Ok(loss)
}

/// The scoring contract shared by the reference model and externally
/// produced embeddings.
pub trait DualEncoder: Sync {
    fn render_config(&self) -> &crate::render::RenderConfig;
    fn embed_candidate(&self, image: &RenderedImage) -> Result<Embedding, ScoreError>;
    fn embed_context(&self, sentence: &Sentence, index: usize) -> Result<Embedding, ScoreError>;
}

impl DualEncoder for Model {
    fn render_config(&self) -> &crate::render::RenderConfig {
        &self.config().render
    }

    fn embed_candidate(&self, image: &RenderedImage) -> Result<Embedding, ScoreError> {
        self.encode_candidate(image)
    }

    fn embed_context(&self, sentence: &Sentence, index: usize) -> Result<Embedding, ScoreError> {
        self.encode_context(sentence, index)
    }
}
