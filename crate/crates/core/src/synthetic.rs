//! Seeded generators of random words and of a small cue-word corpus with a
//! fully learnable (or, with shuffled labels, unlearnable) diacritization
//! choice.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Sentence;
use crate::script::{LetterCluster, Mark, MarkSet, Pattern, Word, DAGESH, MARK_INVENTORY, SHIN, SHIN_DOT, SIN_DOT};

/// The 27 Hebrew letters, final forms included.
pub fn hebrew_letters() -> Vec<char> {
    ('\u{05D0}'..='\u{05EA}').collect()
}

fn vowels() -> Vec<Mark> {
    MARK_INVENTORY.iter().copied().filter(|m| m.is_vowel()).collect()
}

/// Random marks for one letter: an optional vowel, an optional dagesh and,
/// on shin, an optional shin or sin dot.
pub fn random_marks<R: Rng + ?Sized>(rng: &mut R, base: char) -> MarkSet {
    let vowels = vowels();
    let mut marks = MarkSet::new();
    if rng.gen_bool(0.7) {
        marks.insert(*vowels.choose(rng).unwrap());
    }
    if rng.gen_bool(0.3) {
        marks.insert(Mark::new(DAGESH).unwrap());
    }
    if base == SHIN && rng.gen_bool(0.8) {
        let dot = if rng.gen_bool(0.5) { SHIN_DOT } else { SIN_DOT };
        marks.insert(Mark::new(dot).unwrap());
    }
    marks
}

/// A random well-formed word of `len` letters.
pub fn random_word_of_len<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Word {
    let letters = hebrew_letters();
    let clusters = (0..len)
        .map(|_| {
            let base = *letters.choose(rng).unwrap();
            LetterCluster::new(base, random_marks(rng, base)).expect("generated marks are well formed")
        })
        .collect();
    Word::from_clusters(clusters).expect("generated words are non-empty")
}

/// A random well-formed word of 1 to `max_len` letters.
pub fn random_word<R: Rng + ?Sized>(rng: &mut R, max_len: usize) -> Word {
    let len = rng.gen_range(1..=max_len.max(1));
    random_word_of_len(rng, len)
}

/// A random pattern for the undiacritized `form`, distinct from `avoid`.
fn random_pattern_for<R: Rng + ?Sized>(rng: &mut R, form: &str, avoid: &[Pattern]) -> Pattern {
    loop {
        let slots: Vec<MarkSet> = form.chars().map(|b| random_marks(rng, b)).collect();
        let p = Pattern::new(slots).expect("generated slots are well formed");
        if !avoid.contains(&p) {
            return p;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CueCorpusConfig {
    /// Ambiguous target forms, each with two diacritizations.
    pub targets: usize,
    /// Cue words per (target, diacritization) pair.
    pub cues_per_class: usize,
    /// Size of the neutral filler vocabulary.
    pub fillers: usize,
    pub train_sentences: usize,
    pub test_sentences: usize,
    /// Probability that a sentence uses the first diacritization.
    pub first_class_rate: f64,
    /// Draw gold labels independently of the cue.
    pub shuffled: bool,
    pub seed: u64,
}

impl Default for CueCorpusConfig {
    fn default() -> Self {
        Self {
            targets: 4,
            cues_per_class: 3,
            fillers: 40,
            train_sentences: 2000,
            test_sentences: 400,
            first_class_rate: 0.7,
            shuffled: false,
            seed: 0,
        }
    }
}

/// One ambiguous form with its two diacritizations.
#[derive(Debug, Clone, PartialEq)]
pub struct CueTarget {
    pub form: String,
    pub variants: [Word; 2],
}

/// Held-out position of a target word and the index of its gold variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CueItem {
    pub sentence: usize,
    pub token: usize,
    pub target: usize,
    pub gold: usize,
}

#[derive(Debug, Clone)]
pub struct CueCorpus {
    pub targets: Vec<CueTarget>,
    pub train: Vec<Sentence>,
    pub test: Vec<Sentence>,
    pub test_items: Vec<CueItem>,
}

fn latin_token<R: Rng + ?Sized>(rng: &mut R, prefix: &str) -> String {
    let s: String = (0..4).map(|_| rng.gen_range(b'a'..=b'z') as char).collect();
    format!("{prefix}{s}")
}

/// Builds a corpus of sentences `filler cue TARGET filler.` in which the cue
/// word alone decides which variant of the target is written. Cue and filler
/// words are Latin-script; the target is the only Hebrew word.
pub fn cue_corpus(config: &CueCorpusConfig) -> CueCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let letters = hebrew_letters();
    let mut targets: Vec<CueTarget> = Vec::new();
    while targets.len() < config.targets {
        let form: String = (0..rng.gen_range(3..=5)).map(|_| *letters.choose(&mut rng).unwrap()).collect();
        if targets.iter().any(|t| t.form == form) {
            continue;
        }
        let a = random_pattern_for(&mut rng, &form, &[Pattern::empty(form.chars().count())]);
        let b = random_pattern_for(&mut rng, &form, &[Pattern::empty(form.chars().count()), a.clone()]);
        let variants = [a.apply(&form).unwrap(), b.apply(&form).unwrap()];
        if variants[0] == variants[1] {
            continue;
        }
        targets.push(CueTarget { form, variants });
    }
    let cues: Vec<[Vec<String>; 2]> = (0..config.targets)
        .map(|_| {
            [
                (0..config.cues_per_class).map(|_| latin_token(&mut rng, "q")).collect(),
                (0..config.cues_per_class).map(|_| latin_token(&mut rng, "z")).collect(),
            ]
        })
        .collect();
    let fillers: Vec<String> = (0..config.fillers).map(|_| latin_token(&mut rng, "f")).collect();

    let make = |n: usize, rng: &mut ChaCha8Rng| {
        let mut sentences = Vec::with_capacity(n);
        let mut items = Vec::with_capacity(n);
        for i in 0..n {
            let t = rng.gen_range(0..targets.len());
            let class = usize::from(!rng.gen_bool(config.first_class_rate));
            let cue = cues[t][class].choose(rng).unwrap();
            let gold = if config.shuffled {
                usize::from(!rng.gen_bool(config.first_class_rate))
            } else {
                class
            };
            let left = fillers.choose(rng).unwrap();
            let right = fillers.choose(rng).unwrap();
            let text = format!("{left} {cue} {} {right}.", targets[t].variants[gold]);
            let sentence = Sentence::new(text);
            let token = sentence
                .word_indices()
                .next()
                .expect("the target is the only Hebrew word");
            items.push(CueItem {
                sentence: i,
                token,
                target: t,
                gold,
            });
            sentences.push(sentence);
        }
        (sentences, items)
    };
    let (train, _) = make(config.train_sentences, &mut rng);
    let (test, test_items) = make(config.test_sentences, &mut rng);
    CueCorpus {
        targets,
        train,
        test,
        test_items,
    }
}
