//! The reference dual encoder and its hand-written backward pass.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{axpy, dot, Matrix};
use super::{softmax, Embedding, ScoreDistribution, ScoreError};
use crate::corpus::Sentence;
use crate::render::{render_word, RenderConfig, RenderedImage, PATCH_DIM};
use crate::script::{is_hebrew_mark, Word, MARK_COUNT};

/// Longest word position covered by the positional auxiliary head.
pub const MAX_POSITIONS: usize = 16;

/// Weight of the auxiliary term, before division by the candidate count.
pub const AUX_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation output.
    fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

/// Auxiliary objective added to the ranking cross-entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuxMode {
    None,
    /// Multi-hot bag of the marks present anywhere in the candidate.
    Bag,
    /// Multi-hot of (letter position, mark) pairs.
    Positional,
}

impl std::str::FromStr for AuxMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(AuxMode::None),
            "bag" => Ok(AuxMode::Bag),
            "positional" => Ok(AuxMode::Positional),
            other => Err(format!("unknown aux mode {other:?} (expected none, bag or positional)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Hidden width of both encoders.
    pub hidden: usize,
    /// Shared embedding dimension.
    pub embed: usize,
    /// Rows of the hashed character n-gram table.
    pub buckets: usize,
    /// Tokens on each side of the target that feed the context encoder.
    pub window_radius: usize,
    pub activation: Activation,
    pub aux: AuxMode,
    pub render: RenderConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            embed: 64,
            buckets: 2048,
            window_radius: 2,
            activation: Activation::Tanh,
            aux: AuxMode::None,
            render: RenderConfig::default(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.hidden == 0 || self.embed == 0 || self.buckets == 0 {
            return Err("hidden, embed and buckets must be positive".into());
        }
        self.render.validate().map_err(|e| e.to_string())
    }

    fn aux_width(&self) -> usize {
        match self.aux {
            AuxMode::None => 0,
            AuxMode::Bag => MARK_COUNT,
            AuxMode::Positional => MAX_POSITIONS * MARK_COUNT,
        }
    }
}

/// A patch stored as its darkness `1 - pixel`, which is sparse for text.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchInput {
    darkness: Vec<(u16, f64)>,
}

impl PatchInput {
    pub fn from_pixels(pixels: &[f64]) -> Self {
        debug_assert_eq!(pixels.len(), PATCH_DIM);
        let darkness = pixels
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != 1.0)
            .map(|(i, p)| (i as u16, 1.0 - p))
            .collect();
        Self { darkness }
    }
}

/// Encoder input for one candidate plus its auxiliary targets.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateInput {
    pub patches: Vec<PatchInput>,
    /// Bag-of-marks multi-hot, length `MARK_COUNT`.
    pub bag: Vec<f64>,
    /// Positional multi-hot, length `MAX_POSITIONS * MARK_COUNT`.
    pub positions: Vec<f64>,
    /// Letter positions that take part in the positional loss.
    pub positions_used: usize,
}

impl CandidateInput {
    pub fn from_image(image: &RenderedImage) -> Self {
        Self {
            patches: image.patches().iter().map(|p| PatchInput::from_pixels(p)).collect(),
            bag: vec![0.0; MARK_COUNT],
            positions: vec![0.0; MAX_POSITIONS * MARK_COUNT],
            positions_used: 0,
        }
    }

    /// Renders the word and derives both auxiliary targets from its pattern.
    pub fn from_word(word: &Word, render: &RenderConfig) -> Result<Self, ScoreError> {
        let image = render_word(word, render).map_err(|e| ScoreError::Render(e.to_string()))?;
        let mut input = Self::from_image(&image);
        let pattern = word.pattern();
        for (i, slot) in pattern.slots().iter().enumerate() {
            for m in slot.iter() {
                input.bag[m.index()] = 1.0;
                if i < MAX_POSITIONS {
                    input.positions[i * MARK_COUNT + m.index()] = 1.0;
                }
            }
        }
        input.positions_used = pattern.len().min(MAX_POSITIONS);
        Ok(input)
    }
}

/// Hashed n-gram rows of the target word and of each window token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextInput {
    pub target: Vec<usize>,
    pub window: Vec<Vec<usize>>,
}

impl ContextInput {
    pub fn from_sentence(sentence: &Sentence, index: usize, radius: usize, buckets: usize) -> Result<Self, ScoreError> {
        let token = sentence.tokens.get(index).ok_or(ScoreError::BadTargetIndex(index))?;
        if !token.is_hebrew_word {
            return Err(ScoreError::BadTargetIndex(index));
        }
        let target = ngram_rows(sentence.token_text(index), buckets);
        let lo = index.saturating_sub(radius);
        let hi = (index + radius).min(sentence.tokens.len() - 1);
        let window = (lo..=hi)
            .filter(|&j| j != index)
            .map(|j| ngram_rows(sentence.token_text(j), buckets))
            .filter(|rows| !rows.is_empty())
            .collect();
        Ok(Self { target, window })
    }
}

/// Rows for the character 1- to 3-grams of `<token>`, with Hebrew marks
/// removed so the context never sees diacritics.
pub fn ngram_rows(token: &str, buckets: usize) -> Vec<usize> {
    let mut chars = vec!['<'];
    chars.extend(token.chars().filter(|c| !is_hebrew_mark(*c)));
    chars.push('>');
    let mut rows = Vec::new();
    for n in 1..=3usize {
        for gram in chars.windows(n) {
            if n == 1 && (gram[0] == '<' || gram[0] == '>') {
                continue;
            }
            rows.push((fnv1a(n as u8, gram) % buckets as u64) as usize);
        }
    }
    rows
}

fn fnv1a(tag: u8, chars: &[char]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |b: u8| {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    };
    feed(tag);
    let mut buf = [0u8; 4];
    for c in chars {
        for b in c.encode_utf8(&mut buf).bytes() {
            feed(b);
        }
    }
    h
}

/// One training or scoring instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub context: ContextInput,
    pub candidates: Vec<CandidateInput>,
    pub gold: usize,
}

impl Example {
    pub fn new(sentence: &Sentence, index: usize, candidates: &[Word], gold: usize, config: &ModelConfig) -> Result<Self, ScoreError> {
        if candidates.is_empty() {
            return Err(ScoreError::EmptyCandidates);
        }
        if gold >= candidates.len() {
            return Err(ScoreError::BadGoldIndex(gold));
        }
        Ok(Self {
            context: ContextInput::from_sentence(sentence, index, config.window_radius, config.buckets)?,
            candidates: candidates
                .iter()
                .map(|w| CandidateInput::from_word(w, &config.render))
                .collect::<Result<_, _>>()?,
            gold,
        })
    }
}

/// Parameters of the candidate encoder, the context encoder and the
/// optional auxiliary head. Also used as a gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    patch_proj: Matrix,
    patch_bias: Matrix,
    cand_out: Matrix,
    cand_out_bias: Matrix,
    ngram_table: Matrix,
    target_mix: Matrix,
    context_mix: Matrix,
    mix_bias: Matrix,
    ctx_out: Matrix,
    ctx_out_bias: Matrix,
    aux_head: Matrix,
    aux_bias: Matrix,
}

pub(crate) struct Precomputed {
    patch_proj_sums: Vec<f64>,
}

struct CandCache {
    hidden: Vec<Vec<f64>>,
    mean: Vec<f64>,
    embedding: Vec<f64>,
}

struct CtxCache {
    target: Vec<f64>,
    context: Vec<f64>,
    mixed: Vec<f64>,
    embedding: Vec<f64>,
}

/// Loss and logits of one example.
#[derive(Debug, Clone)]
pub struct ExampleOutput {
    pub loss: f64,
    pub logits: Vec<f64>,
}

fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Model {
    /// All-zero parameters.
    pub fn zeros(config: ModelConfig) -> Self {
        let (h, d, aux) = (config.hidden, config.embed, config.aux_width());
        Self {
            patch_proj: Matrix::zeros(h, PATCH_DIM),
            patch_bias: Matrix::zeros(h, 1),
            cand_out: Matrix::zeros(d, h),
            cand_out_bias: Matrix::zeros(d, 1),
            ngram_table: Matrix::zeros(config.buckets, h),
            target_mix: Matrix::zeros(h, h),
            context_mix: Matrix::zeros(h, h),
            mix_bias: Matrix::zeros(h, 1),
            ctx_out: Matrix::zeros(d, h),
            ctx_out_bias: Matrix::zeros(d, 1),
            aux_head: Matrix::zeros(aux, d),
            aux_bias: Matrix::zeros(aux, 1),
            config,
        }
    }

    /// Uniform fan-in scaled weights, zero biases.
    pub fn init(config: ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (h, d, aux) = (config.hidden, config.embed, config.aux_width());
        let s = |fan_in: usize| 1.0 / (fan_in as f64).sqrt();
        let mut m = Self::zeros(config.clone());
        m.patch_proj = Matrix::uniform(h, PATCH_DIM, s(PATCH_DIM), &mut rng);
        m.cand_out = Matrix::uniform(d, h, s(h), &mut rng);
        m.ngram_table = Matrix::uniform(config.buckets, h, 0.5, &mut rng);
        m.target_mix = Matrix::uniform(h, h, s(h), &mut rng);
        m.context_mix = Matrix::uniform(h, h, s(h), &mut rng);
        m.ctx_out = Matrix::uniform(d, h, s(h), &mut rng);
        m.aux_head = Matrix::uniform(aux, d, s(d), &mut rng);
        m
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.config.clone())
    }

    /// Every parameter tensor with its name, in a fixed order.
    pub fn tensors(&self) -> Vec<(&'static str, &Matrix)> {
        vec![
            ("candidate.patch_projection", &self.patch_proj),
            ("candidate.patch_bias", &self.patch_bias),
            ("candidate.output_projection", &self.cand_out),
            ("candidate.output_bias", &self.cand_out_bias),
            ("context.ngram_table", &self.ngram_table),
            ("context.target_mix", &self.target_mix),
            ("context.context_mix", &self.context_mix),
            ("context.mix_bias", &self.mix_bias),
            ("context.output_projection", &self.ctx_out),
            ("context.output_bias", &self.ctx_out_bias),
            ("aux.head", &self.aux_head),
            ("aux.bias", &self.aux_bias),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Matrix)> {
        vec![
            ("candidate.patch_projection", &mut self.patch_proj),
            ("candidate.patch_bias", &mut self.patch_bias),
            ("candidate.output_projection", &mut self.cand_out),
            ("candidate.output_bias", &mut self.cand_out_bias),
            ("context.ngram_table", &mut self.ngram_table),
            ("context.target_mix", &mut self.target_mix),
            ("context.context_mix", &mut self.context_mix),
            ("context.mix_bias", &mut self.mix_bias),
            ("context.output_projection", &mut self.ctx_out),
            ("context.output_bias", &mut self.ctx_out_bias),
            ("aux.head", &mut self.aux_head),
            ("aux.bias", &mut self.aux_bias),
        ]
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.data.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.is_finite())
    }

    /// Hex SHA-256 over every parameter's little-endian bits.
    pub fn checksum(&self) -> String {
        let mut bytes = Vec::with_capacity(self.parameter_count() * 8);
        for (_, t) in self.tensors() {
            for v in &t.data {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        crate::sha256_hex(bytes)
    }

    pub(crate) fn precompute(&self) -> Precomputed {
        Precomputed {
            patch_proj_sums: self.patch_proj.row_sums(),
        }
    }

    fn cand_forward(&self, pre: &Precomputed, cand: &CandidateInput) -> Result<CandCache, ScoreError> {
        let h = self.config.hidden;
        if cand.patches.is_empty() {
            return Err(ScoreError::ShapeMismatch("candidate image has no patches".into()));
        }
        let act = self.config.activation;
        let mut hidden = Vec::with_capacity(cand.patches.len());
        let mut mean = vec![0.0; h];
        for patch in &cand.patches {
            // W p + b with p = 1 - darkness
            let mut a: Vec<f64> = pre
                .patch_proj_sums
                .iter()
                .zip(&self.patch_bias.data)
                .map(|(s, b)| s + b)
                .collect();
            for &(col, v) in &patch.darkness {
                let col = col as usize;
                for (r, ar) in a.iter_mut().enumerate() {
                    *ar -= self.patch_proj.data[r * PATCH_DIM + col] * v;
                }
            }
            let y: Vec<f64> = a.into_iter().map(|x| act.apply(x)).collect();
            axpy(&mut mean, 1.0, &y);
            hidden.push(y);
        }
        let inv = 1.0 / cand.patches.len() as f64;
        mean.iter_mut().for_each(|m| *m *= inv);
        let mut embedding = self.cand_out.matvec(&mean);
        axpy(&mut embedding, 1.0, &self.cand_out_bias.data);
        Ok(CandCache { hidden, mean, embedding })
    }

    fn cand_backward(&self, cand: &CandidateInput, cache: &CandCache, d_emb: &[f64], grads: &mut Gradients) {
        let g = &mut grads.model;
        g.cand_out.add_outer(d_emb, &cache.mean, 1.0);
        axpy(&mut g.cand_out_bias.data, 1.0, d_emb);
        let d_mean = self.cand_out.matvec_t(d_emb);
        let inv = 1.0 / cand.patches.len() as f64;
        let act = self.config.activation;
        for (patch, y) in cand.patches.iter().zip(&cache.hidden) {
            let d_a: Vec<f64> = d_mean
                .iter()
                .zip(y)
                .map(|(dm, yi)| dm * inv * act.grad_from_output(*yi))
                .collect();
            axpy(&mut g.patch_bias.data, 1.0, &d_a);
            axpy(&mut grads.patch_proj_ones, 1.0, &d_a);
            for &(col, v) in &patch.darkness {
                let col = col as usize;
                for (r, dar) in d_a.iter().enumerate() {
                    g.patch_proj.data[r * PATCH_DIM + col] -= dar * v;
                }
            }
        }
    }

    fn mean_rows(&self, rows: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.config.hidden];
        if rows.is_empty() {
            return out;
        }
        for &r in rows {
            axpy(&mut out, 1.0, self.ngram_table.row(r));
        }
        let inv = 1.0 / rows.len() as f64;
        out.iter_mut().for_each(|x| *x *= inv);
        out
    }

    fn ctx_forward(&self, ctx: &ContextInput) -> Result<CtxCache, ScoreError> {
        let h = self.config.hidden;
        if ctx.target.iter().chain(ctx.window.iter().flatten()).any(|&r| r >= self.config.buckets) {
            return Err(ScoreError::ShapeMismatch("n-gram row outside the table".into()));
        }
        let target = self.mean_rows(&ctx.target);
        let mut context = vec![0.0; h];
        if !ctx.window.is_empty() {
            for rows in &ctx.window {
                axpy(&mut context, 1.0, &self.mean_rows(rows));
            }
            let inv = 1.0 / ctx.window.len() as f64;
            context.iter_mut().for_each(|x| *x *= inv);
        }
        let mut a = self.target_mix.matvec(&target);
        axpy(&mut a, 1.0, &self.context_mix.matvec(&context));
        axpy(&mut a, 1.0, &self.mix_bias.data);
        let act = self.config.activation;
        let mixed: Vec<f64> = a.into_iter().map(|x| act.apply(x)).collect();
        let mut embedding = self.ctx_out.matvec(&mixed);
        axpy(&mut embedding, 1.0, &self.ctx_out_bias.data);
        Ok(CtxCache {
            target,
            context,
            mixed,
            embedding,
        })
    }

    fn ctx_backward(&self, ctx: &ContextInput, cache: &CtxCache, d_emb: &[f64], grads: &mut Gradients) {
        let g = &mut grads.model;
        g.ctx_out.add_outer(d_emb, &cache.mixed, 1.0);
        axpy(&mut g.ctx_out_bias.data, 1.0, d_emb);
        let d_mixed = self.ctx_out.matvec_t(d_emb);
        let act = self.config.activation;
        let d_a: Vec<f64> = d_mixed
            .iter()
            .zip(&cache.mixed)
            .map(|(d, y)| d * act.grad_from_output(*y))
            .collect();
        g.target_mix.add_outer(&d_a, &cache.target, 1.0);
        g.context_mix.add_outer(&d_a, &cache.context, 1.0);
        axpy(&mut g.mix_bias.data, 1.0, &d_a);
        if !ctx.target.is_empty() {
            let d_target = self.target_mix.matvec_t(&d_a);
            let inv = 1.0 / ctx.target.len() as f64;
            for &r in &ctx.target {
                axpy(g.ngram_table.row_mut(r), inv, &d_target);
            }
        }
        if !ctx.window.is_empty() {
            let d_context = self.context_mix.matvec_t(&d_a);
            let per_word = 1.0 / ctx.window.len() as f64;
            for rows in &ctx.window {
                let inv = per_word / rows.len() as f64;
                for &r in rows {
                    axpy(g.ngram_table.row_mut(r), inv, &d_context);
                }
            }
        }
    }

    /// Auxiliary loss of one candidate (mean BCE over the used slots) and,
    /// when requested, the gradient with respect to its logits.
    fn aux_loss(&self, cand: &CandidateInput, logits: &[f64]) -> (f64, Vec<f64>) {
        let (targets, used) = match self.config.aux {
            AuxMode::None => return (0.0, Vec::new()),
            AuxMode::Bag => (&cand.bag[..], MARK_COUNT),
            AuxMode::Positional => (&cand.positions[..], cand.positions_used * MARK_COUNT),
        };
        let mut grad = vec![0.0; logits.len()];
        if used == 0 {
            return (0.0, grad);
        }
        let inv = 1.0 / used as f64;
        let mut loss = 0.0;
        for i in 0..used {
            loss += bce_with_logit(logits[i], targets[i]);
            grad[i] = (sigmoid(logits[i]) - targets[i]) * inv;
        }
        (loss * inv, grad)
    }

    /// Forward pass of one example; accumulates `scale`-weighted gradients
    /// when `grads` is given.
    pub(crate) fn run_example(
        &self,
        pre: &Precomputed,
        ex: &Example,
        grads: Option<(&mut Gradients, f64)>,
    ) -> Result<ExampleOutput, ScoreError> {
        let n = ex.candidates.len();
        if n == 0 {
            return Err(ScoreError::EmptyCandidates);
        }
        if ex.gold >= n {
            return Err(ScoreError::BadGoldIndex(ex.gold));
        }
        let ctx = self.ctx_forward(&ex.context)?;
        let cands: Vec<CandCache> = ex
            .candidates
            .iter()
            .map(|c| self.cand_forward(pre, c))
            .collect::<Result<_, _>>()?;
        let logits: Vec<f64> = cands.iter().map(|c| dot(&ctx.embedding, &c.embedding)).collect();
        let probs = softmax(&logits);
        let mut loss = -probs[ex.gold].ln();
        if !loss.is_finite() {
            // exact log-softmax when the probability underflows
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
            loss = lse - logits[ex.gold];
        }
        let aux_scale = AUX_WEIGHT / n as f64;
        let mut aux_grads = Vec::with_capacity(n);
        for (cand, cache) in ex.candidates.iter().zip(&cands) {
            if self.config.aux == AuxMode::None {
                break;
            }
            let mut z = self.aux_head.matvec(&cache.embedding);
            axpy(&mut z, 1.0, &self.aux_bias.data);
            let (l, g) = self.aux_loss(cand, &z);
            loss += aux_scale * l;
            aux_grads.push(g);
        }
        if let Some((grads, scale)) = grads {
            let d_logits: Vec<f64> = probs
                .iter()
                .enumerate()
                .map(|(i, p)| scale * (p - if i == ex.gold { 1.0 } else { 0.0 }))
                .collect();
            let mut d_ctx = vec![0.0; self.config.embed];
            for (i, cache) in cands.iter().enumerate() {
                axpy(&mut d_ctx, d_logits[i], &cache.embedding);
                let mut d_emb: Vec<f64> = ctx.embedding.iter().map(|c| c * d_logits[i]).collect();
                if let Some(g) = aux_grads.get(i) {
                    let dz: Vec<f64> = g.iter().map(|v| v * aux_scale * scale).collect();
                    grads.model.aux_head.add_outer(&dz, &cache.embedding, 1.0);
                    axpy(&mut grads.model.aux_bias.data, 1.0, &dz);
                    axpy(&mut d_emb, 1.0, &self.aux_head.matvec_t(&dz));
                }
                self.cand_backward(&ex.candidates[i], cache, &d_emb, grads);
            }
            self.ctx_backward(&ex.context, &ctx, &d_ctx, grads);
        }
        Ok(ExampleOutput { loss, logits })
    }

    /// Total loss of one example: ranking cross-entropy plus the weighted
    /// auxiliary term.
    pub fn loss(&self, ex: &Example) -> Result<f64, ScoreError> {
        Ok(self.run_example(&self.precompute(), ex, None)?.loss)
    }

    /// Mean loss and gradient over a batch.
    pub fn loss_and_gradient(&self, batch: &[Example]) -> Result<(f64, Model, Vec<ExampleOutput>), ScoreError> {
        let pre = self.precompute();
        let mut grads = Gradients::new(self);
        let scale = 1.0 / batch.len().max(1) as f64;
        let mut total = 0.0;
        let mut outputs = Vec::with_capacity(batch.len());
        for ex in batch {
            let out = self.run_example(&pre, ex, Some((&mut grads, scale)))?;
            total += out.loss * scale;
            outputs.push(out);
        }
        Ok((total, grads.finish(), outputs))
    }

    pub fn embed_candidate_input(&self, cand: &CandidateInput) -> Result<Embedding, ScoreError> {
        Ok(Embedding(self.cand_forward(&self.precompute(), cand)?.embedding))
    }

    /// Candidate embedding of a rendered image.
    pub fn encode_candidate(&self, image: &RenderedImage) -> Result<Embedding, ScoreError> {
        self.embed_candidate_input(&CandidateInput::from_image(image))
    }

    /// Context embedding of token `index` of `sentence`.
    pub fn encode_context(&self, sentence: &Sentence, index: usize) -> Result<Embedding, ScoreError> {
        let ctx = ContextInput::from_sentence(sentence, index, self.config.window_radius, self.config.buckets)?;
        Ok(Embedding(self.ctx_forward(&ctx)?.embedding))
    }

    /// Scores an example's candidates.
    pub fn score_example(&self, ex: &Example) -> Result<ScoreDistribution, ScoreError> {
        let out = self.run_example(&self.precompute(), ex, None)?;
        Ok(ScoreDistribution::from_logits(out.logits))
    }

    pub(crate) fn from_parts(config: ModelConfig, tensors: Vec<(String, Matrix)>) -> Result<Self, String> {
        let mut model = Self::zeros(config);
        let mut slots = model.tensors_mut();
        if slots.len() != tensors.len() {
            return Err(format!("expected {} tensors, found {}", slots.len(), tensors.len()));
        }
        for ((name, slot), (got_name, t)) in slots.iter_mut().zip(tensors) {
            if *name != got_name {
                return Err(format!("expected tensor {name}, found {got_name}"));
            }
            if slot.rows != t.rows || slot.cols != t.cols || t.data.len() != t.rows * t.cols {
                return Err(format!(
                    "tensor {name}: expected {}x{}, found {}x{} with {} values",
                    slot.rows,
                    slot.cols,
                    t.rows,
                    t.cols,
                    t.data.len()
                ));
            }
            **slot = t;
        }
        Ok(model)
    }
}

/// Gradient accumulator. The dense `1 * d_a^T` part of the patch
/// projection gradient is summed separately and expanded once.
pub(crate) struct Gradients {
    pub model: Model,
    patch_proj_ones: Vec<f64>,
}

impl Gradients {
    pub fn new(model: &Model) -> Self {
        Self {
            model: model.zeros_like(),
            patch_proj_ones: vec![0.0; model.config.hidden],
        }
    }

    pub fn finish(mut self) -> Model {
        for (r, s) in self.patch_proj_ones.iter().enumerate() {
            if *s != 0.0 {
                self.model.patch_proj.row_mut(r).iter_mut().for_each(|x| *x += s);
            }
        }
        self.model
    }
}
