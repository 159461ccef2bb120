//! Mini-batch SGD over oracle candidate sets.

use std::collections::HashMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{Example, Model};
use super::ScoreError;
use crate::candgen::{CandidateGenerator, GenError, DEFAULT_C, DEFAULT_K};
use crate::corpus::{Lexicon, SamplingTable, Sentence};
use crate::script::{ParseOptions, Pattern, Word};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("training corpus holds no usable words")]
    EmptyDataset,
    #[error("loss diverged at step {step}")]
    Diverged { step: usize },
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Candidates(#[from] GenError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
    /// Cap each word's dominant pattern at the count of its alternatives
    /// when sampling.
    pub balanced: bool,
    pub k: usize,
    pub c: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            batch_size: 32,
            learning_rate: 0.05,
            momentum: 0.9,
            seed: 0,
            balanced: false,
            k: DEFAULT_K,
            c: DEFAULT_C,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be a finite non-negative number");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if self.k == 0 || self.c == 0 {
            return bad("k and c must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub loss: f64,
    /// Fraction of the batch whose gold candidate had the top logit.
    pub accuracy: f64,
}

struct PatternGroup {
    candidates: Vec<Word>,
    gold_index: usize,
    occurrences: Vec<(usize, usize)>,
}

struct FormEntry {
    groups: Vec<PatternGroup>,
    weights: Vec<u64>,
    pick: WeightedIndex<u64>,
}

/// Training occurrences grouped by form and pattern, with oracle candidate
/// sets computed once per group.
pub struct TrainingSet {
    sentences: Vec<Sentence>,
    forms: HashMap<String, FormEntry>,
    table: SamplingTable,
    occurrences: usize,
}

impl TrainingSet {
    /// Collects every parseable word of `sentences`. Candidates come from
    /// `lexicon`; sampling weights from the corpus itself, balanced when
    /// `config.balanced` is set.
    pub fn new(sentences: Vec<Sentence>, lexicon: &Lexicon, config: &TrainConfig) -> Result<Self, TrainError> {
        config.validate()?;
        let mut by_word: HashMap<Word, Vec<(usize, usize)>> = HashMap::new();
        for (si, s) in sentences.iter().enumerate() {
            for ti in s.word_indices() {
                if let Ok(w) = s.parse_word(ti, ParseOptions::default()) {
                    by_word.entry(w).or_default().push((si, ti));
                }
            }
        }
        let occurrences = by_word.values().map(Vec::len).sum();
        if occurrences == 0 {
            return Err(TrainError::EmptyDataset);
        }
        let counts = {
            let words: Vec<Word> = by_word
                .iter()
                .flat_map(|(w, occ)| std::iter::repeat_n(w.clone(), occ.len()))
                .collect();
            let lex = Lexicon::from_words(&words);
            if config.balanced {
                lex.balanced_cap()
            } else {
                lex
            }
        };
        let generator = CandidateGenerator::new(lexicon);
        let mut forms = HashMap::new();
        for (form, list) in counts.iter() {
            let mut groups = Vec::with_capacity(list.len());
            let mut weights = Vec::with_capacity(list.len());
            for pc in list {
                let gold = pc.pattern.apply(form).expect("pattern was extracted from this form");
                let set = generator.oracle(form, &gold, config.k, config.c)?;
                let mut occ = by_word.remove(&gold).unwrap_or_default();
                occ.sort_unstable();
                groups.push(PatternGroup {
                    candidates: set.candidates,
                    gold_index: set.gold_index.expect("oracle sets carry the gold index"),
                    occurrences: occ,
                });
                weights.push(pc.count);
            }
            let pick = WeightedIndex::new(weights.iter().copied()).map_err(|e| TrainError::Config(e.to_string()))?;
            forms.insert(form.to_string(), FormEntry { groups, weights, pick });
        }
        let table = SamplingTable::from_lexicon(&counts).ok_or(TrainError::EmptyDataset)?;
        Ok(Self {
            sentences,
            forms,
            table,
            occurrences,
        })
    }

    pub fn len(&self) -> usize {
        self.occurrences
    }

    pub fn is_empty(&self) -> bool {
        self.occurrences == 0
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    /// Draws a form by sampling weight, a pattern by (capped) count and an
    /// occurrence uniformly. Returns (sentence, token, candidates, gold).
    fn draw<R: Rng>(&self, rng: &mut R) -> (usize, usize, &[Word], usize) {
        let form = self.table.sample(rng);
        let entry = &self.forms[form];
        let group = &entry.groups[entry.pick.sample(rng)];
        let (si, ti) = group.occurrences[rng.gen_range(0..group.occurrences.len())];
        (si, ti, &group.candidates, group.gold_index)
    }

    /// Probability of drawing `pattern` once `form` has been drawn.
    pub fn pattern_probability(&self, form: &str, pattern: &Pattern) -> Option<f64> {
        let entry = self.forms.get(form)?;
        let i = entry
            .groups
            .iter()
            .position(|g| g.candidates[g.gold_index].pattern() == *pattern)?;
        let total: u64 = entry.weights.iter().sum();
        Some(entry.weights[i] as f64 / total as f64)
    }

    /// Probability of drawing `form`.
    pub fn form_probability(&self, form: &str) -> Option<f64> {
        self.table.items().iter().find(|(f, _)| f == form).map(|(_, w)| *w)
    }
}

/// Runs SGD with momentum over a [`TrainingSet`].
pub struct Trainer {
    model: Model,
    velocity: Model,
    set: TrainingSet,
    config: TrainConfig,
    rng: ChaCha8Rng,
    step: usize,
    trace: Vec<TraceRow>,
}

impl Trainer {
    pub fn new(model: Model, set: TrainingSet, config: TrainConfig) -> Result<Self, TrainError> {
        config.validate()?;
        model.config().validate().map_err(TrainError::Config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        Ok(Self {
            velocity: model.zeros_like(),
            model,
            set,
            config,
            rng,
            step: 0,
            trace: Vec::new(),
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn into_model(self) -> Model {
        self.model
    }

    pub fn trace(&self) -> &[TraceRow] {
        &self.trace
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    fn batch(&mut self) -> Result<Vec<Example>, TrainError> {
        let draws: Vec<(usize, usize, Vec<Word>, usize)> = (0..self.config.batch_size)
            .map(|_| {
                let (s, t, c, g) = self.set.draw(&mut self.rng);
                (s, t, c.to_vec(), g)
            })
            .collect();
        let sentences = &self.set.sentences;
        let config = self.model.config();
        // preprocessing runs in parallel; collect keeps draw order
        let examples = draws
            .par_iter()
            .map(|(s, t, c, g)| Example::new(&sentences[*s], *t, c, *g, config))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(examples)
    }

    /// One SGD step over a freshly sampled batch.
    pub fn step(&mut self) -> Result<TraceRow, TrainError> {
        let batch = self.batch()?;
        let (loss, grads, outputs) = self.model.loss_and_gradient(&batch)?;
        self.step += 1;
        if !loss.is_finite() {
            return Err(TrainError::Diverged { step: self.step });
        }
        let (lr, mu) = (self.config.learning_rate, self.config.momentum);
        for (((_, p), (_, v)), (_, g)) in self
            .model
            .tensors_mut()
            .into_iter()
            .zip(self.velocity.tensors_mut())
            .zip(grads.tensors())
        {
            for ((pi, vi), gi) in p.data.iter_mut().zip(v.data.iter_mut()).zip(&g.data) {
                *vi = mu * *vi + gi;
                *pi -= lr * *vi;
            }
        }
        if !self.model.is_finite() {
            return Err(TrainError::Diverged { step: self.step });
        }
        let correct = outputs
            .iter()
            .zip(&batch)
            .filter(|(o, ex)| super::ScoreDistribution::from_logits(o.logits.clone()).argmax() == ex.gold)
            .count();
        let row = TraceRow {
            step: self.step,
            loss,
            accuracy: correct as f64 / batch.len() as f64,
        };
        self.trace.push(row);
        Ok(row)
    }

    pub fn run(&mut self, steps: usize) -> Result<(), TrainError> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }
}
