//! Nearest-neighbour candidate generation.
//!
//! Neighbours of a word are lexicon keys of the same length, ranked by the
//! number of positions holding the same letter. Their frequency-ordered
//! pattern lists are concatenated in neighbour order, applied to the query,
//! de-duplicated and truncated to `c` candidates.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::corpus::Lexicon;
use crate::script::{is_hebrew_letter, Word};

/// Neighbour count used by default.
pub const DEFAULT_K: usize = 5;
/// Candidate-set size used by default.
pub const DEFAULT_C: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("no lexicon word has the same length as {0:?}")]
    NoNeighbors(String),
    #[error("query {0:?} must be a non-empty sequence of Hebrew letters")]
    BadQuery(String),
    #[error("gold form {gold:?} does not strip to the query {query:?}")]
    GoldMismatch { query: String, gold: String },
    #[error("k and c must be positive")]
    ZeroParameter,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighbor {
    pub form: String,
    pub similarity: usize,
    pub corpus_freq: u64,
}

/// At most `k` neighbours: similarity descending, then frequency
/// descending, then form ascending.
pub type NeighborList = Vec<Neighbor>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    pub query: String,
    pub candidates: Vec<Word>,
    pub gold_index: Option<usize>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn contains(&self, word: &Word) -> bool {
        self.candidates.contains(word)
    }
}

/// Positional similarity: number of indices holding equal letters. Both
/// sides must have the same length.
pub fn positional_similarity(a: &[char], b: &[char]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x == y).count()
}

struct Key {
    form: String,
    letters: Vec<char>,
    freq: u64,
}

/// Exact neighbour search over per-length buckets of a lexicon.
pub struct CandidateGenerator<'a> {
    lexicon: &'a Lexicon,
    buckets: HashMap<usize, Vec<Key>>,
}

impl<'a> CandidateGenerator<'a> {
    pub fn new(lexicon: &'a Lexicon) -> Self {
        let mut buckets: HashMap<usize, Vec<Key>> = HashMap::new();
        for (form, list) in lexicon.iter() {
            let letters: Vec<char> = form.chars().collect();
            buckets.entry(letters.len()).or_default().push(Key {
                form: form.to_string(),
                letters,
                freq: list.iter().map(|pc| pc.count).sum(),
            });
        }
        Self { lexicon, buckets }
    }

    pub fn lexicon(&self) -> &'a Lexicon {
        self.lexicon
    }

    pub fn neighbors(&self, query: &str, k: usize) -> Result<NeighborList, GenError> {
        if k == 0 {
            return Err(GenError::ZeroParameter);
        }
        let letters: Vec<char> = query.chars().collect();
        if letters.is_empty() || !letters.iter().all(|c| is_hebrew_letter(*c)) {
            return Err(GenError::BadQuery(query.to_string()));
        }
        let bucket = self
            .buckets
            .get(&letters.len())
            .ok_or_else(|| GenError::NoNeighbors(query.to_string()))?;
        let mut scored: Vec<(usize, &Key)> = bucket
            .iter()
            .map(|key| (positional_similarity(&letters, &key.letters), key))
            .collect();
        let order = |a: &(usize, &Key), b: &(usize, &Key)| {
            b.0.cmp(&a.0)
                .then(b.1.freq.cmp(&a.1.freq))
                .then_with(|| a.1.form.cmp(&b.1.form))
        };
        if scored.len() > k {
            scored.select_nth_unstable_by(k - 1, order);
            scored.truncate(k);
        }
        scored.sort_by(order);
        Ok(scored
            .into_iter()
            .map(|(similarity, key)| Neighbor {
                form: key.form.clone(),
                similarity,
                corpus_freq: key.freq,
            })
            .collect())
    }

    /// Up to `c` distinct candidates for `query`, built from the pattern
    /// lists of its `k` nearest neighbours.
    pub fn generate(&self, query: &str, k: usize, c: usize) -> Result<CandidateSet, GenError> {
        if c == 0 {
            return Err(GenError::ZeroParameter);
        }
        let neighbors = self.neighbors(query, k)?;
        let mut seen = HashSet::new();
        let mut candidates = Vec::with_capacity(c);
        'outer: for n in &neighbors {
            let list = self.lexicon.get(&n.form).unwrap_or_default();
            for pc in list {
                let word = pc
                    .pattern
                    .apply(query)
                    .expect("neighbour patterns have the query's length");
                if seen.insert(word.clone()) {
                    candidates.push(word);
                    if candidates.len() == c {
                        break 'outer;
                    }
                }
            }
        }
        Ok(CandidateSet {
            query: query.to_string(),
            candidates,
            gold_index: None,
        })
    }

    /// Generated candidates with the gold form guaranteed present: it
    /// replaces the last candidate of a full set or is appended otherwise.
    /// A query without neighbours yields the singleton gold set.
    pub fn oracle(&self, query: &str, gold: &Word, k: usize, c: usize) -> Result<CandidateSet, GenError> {
        if gold.strip() != query {
            return Err(GenError::GoldMismatch {
                query: query.to_string(),
                gold: gold.to_text(),
            });
        }
        let mut set = match self.generate(query, k, c) {
            Ok(set) => set,
            Err(GenError::NoNeighbors(_)) => CandidateSet {
                query: query.to_string(),
                candidates: Vec::new(),
                gold_index: None,
            },
            Err(e) => return Err(e),
        };
        let index = match set.candidates.iter().position(|w| w == gold) {
            Some(i) => i,
            None if set.candidates.len() >= c => {
                let last = set.candidates.len() - 1;
                set.candidates[last] = gold.clone();
                last
            }
            None => {
                set.candidates.push(gold.clone());
                set.candidates.len() - 1
            }
        };
        set.gold_index = Some(index);
        Ok(set)
    }

    /// Fraction of `(query, gold)` pairs whose gold form is generated.
    /// Queries without neighbours count as misses.
    pub fn coverage<'w>(&self, pairs: impl IntoIterator<Item = &'w Word>, k: usize, c: usize) -> f64 {
        let mut hits = 0usize;
        let mut total = 0usize;
        for gold in pairs {
            total += 1;
            if let Ok(set) = self.generate(&gold.strip(), k, c) {
                if set.contains(gold) {
                    hits += 1;
                }
            }
        }
        if total == 0 {
            0.0
        } else {
            hits as f64 / total as f64
        }
    }
}

pub fn knn_neighbors(lexicon: &Lexicon, query: &str, k: usize) -> Result<NeighborList, GenError> {
    CandidateGenerator::new(lexicon).neighbors(query, k)
}

pub fn generate_candidates(lexicon: &Lexicon, query: &str, k: usize, c: usize) -> Result<CandidateSet, GenError> {
    CandidateGenerator::new(lexicon).generate(query, k, c)
}

pub fn oracle_candidates(lexicon: &Lexicon, query: &str, gold: &Word, k: usize, c: usize) -> Result<CandidateSet, GenError> {
    CandidateGenerator::new(lexicon).oracle(query, gold, k, c)
}

pub fn coverage(lexicon: &Lexicon, golds: &[Word], k: usize, c: usize) -> f64 {
    CandidateGenerator::new(lexicon).coverage(golds, k, c)
}
