//! Hebrew diacritics restoration framed as word-level candidate ranking.
//!
//! The pipeline is:
//!
//! 1. [`corpus`] chunks and tokenizes a diacritized corpus and folds it into a
//!    [`corpus::Lexicon`] of per-word diacritization patterns.
//! 2. [`candgen`] transfers patterns from positionally similar lexicon words to
//!    produce a small candidate set for any undiacritized word.
//! 3. [`render`] rasterizes each candidate into a fixed-geometry image whose
//!    width does not depend on its diacritics.
//! 4. [`scorer`] embeds candidate images and the word's context into a shared
//!    space and ranks candidates by inner product.
//! 5. [`evalkit`] computes the DEC/CHA/WOR/VOC metrics, the majority and
//!    nearest-neighbour baselines, and the oracle and KNN evaluation schemes.

pub mod candgen;
pub mod corpus;
pub mod evalkit;
pub mod render;
pub mod scorer;
pub mod script;
pub mod synthetic;

mod digest;

pub use candgen::{CandidateSet, GenError, NeighborList};
pub use corpus::{Lexicon, SamplingTable, Sentence, Token};
pub use digest::sha256_hex;
pub use evalkit::{EvalReport, Scheme, WordJudgment};
pub use render::{RenderConfig, RenderedImage};
pub use scorer::{Model, ModelConfig, ScoreDistribution, TrainConfig};
pub use script::{LetterCluster, Mark, MarkSet, Pattern, Word};
