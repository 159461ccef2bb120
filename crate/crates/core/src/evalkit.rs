//! Diacritization metrics, baselines and evaluation schemes.
//!
//! Each letter carries up to three decisions: its vowel (or none), whether
//! it has a dagesh, and for shin only, shin dot / sin dot / none.
//!
//! * DEC: fraction of decisions that match.
//! * CHA: fraction of letters whose decisions all match.
//! * WOR: fraction of words whose letters all match.
//! * VOC: fraction of words that match once vowels are replaced by their
//!   vocalization class.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candgen::{CandidateGenerator, GenError};
use crate::corpus::{tokenize, Lexicon, Sentence};
use crate::render::render_word;
use crate::scorer::{score, DualEncoder, ScoreError};
use crate::script::{self, LetterCluster, Mark, ParseOptions, ScriptError, Word, SHIN};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction {pred:?} does not strip to gold {gold:?}")]
    StripMismatch { gold: String, pred: String },
    #[error("alignment error at word {position}: {msg}")]
    Alignment { position: usize, msg: String },
    #[error("nothing to evaluate")]
    Empty,
    #[error("bad vocalization table line {line}: {msg}")]
    VocTable { line: usize, msg: String },
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Candidates(#[from] GenError),
}

/// Where candidate sets come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// The gold form is forced into every candidate set.
    Oracle,
    /// Candidate sets are used as generated.
    Knn,
    /// Predictions made outside the ranking pipeline (baselines, other
    /// systems).
    External,
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(Scheme::Oracle),
            "knn" => Ok(Scheme::Knn),
            "external" => Ok(Scheme::External),
            other => Err(format!("unknown scheme {other:?} (expected oracle or knn)")),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Oracle => "oracle",
            Scheme::Knn => "knn",
            Scheme::External => "external",
        })
    }
}

/// Vowel-to-class map used by VOC. Marks outside the map form their own
/// class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocTable {
    classes: HashMap<Mark, String>,
}

impl Default for VocTable {
    fn default() -> Self {
        let groups: [(&str, &[char]); 6] = [
            ("A", &[script::PATAH, script::QAMATS, script::HATAF_PATAH]),
            ("E", &[script::TSERE, script::SEGOL, script::HATAF_SEGOL]),
            ("I", &[script::HIRIQ]),
            ("O", &[script::HOLAM, script::HATAF_QAMATS, script::QAMATS_QATAN]),
            ("U", &[script::QUBUTS]),
            ("SHEVA", &[script::SHEVA]),
        ];
        let classes = groups
            .iter()
            .flat_map(|(name, marks)| marks.iter().map(move |m| (Mark::new(*m).unwrap(), name.to_string())))
            .collect();
        Self { classes }
    }
}

impl VocTable {
    /// Parses lines of `CLASS<TAB>HEX,HEX,...`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, EvalError> {
        let mut classes = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let err = |msg: String| EvalError::VocTable { line: i + 1, msg };
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (name, marks) = line.split_once('\t').ok_or_else(|| err("expected CLASS<TAB>marks".into()))?;
            for hex in marks.split(',') {
                let cp = u32::from_str_radix(hex.trim(), 16).map_err(|_| err(format!("bad hex {hex:?}")))?;
                let mark = char::from_u32(cp)
                    .and_then(Mark::new)
                    .filter(|m| m.is_vowel())
                    .ok_or_else(|| err(format!("U+{cp:04X} is not a vowel mark")))?;
                if classes.insert(mark, name.trim().to_string()).is_some() {
                    return Err(err(format!("U+{cp:04X} listed twice")));
                }
            }
        }
        Ok(Self { classes })
    }

    fn class_of(&self, vowel: Option<Mark>) -> Option<String> {
        vowel.map(|m| {
            self.classes
                .get(&m)
                .cloned()
                .unwrap_or_else(|| format!("U+{:04X}", m.as_char() as u32))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordJudgment {
    pub gold: Word,
    pub pred: Option<Word>,
    pub decisions_total: usize,
    pub decisions_correct: usize,
    pub chars_total: usize,
    pub chars_correct: usize,
    pub word_correct: bool,
    pub voc_correct: bool,
}

fn decisions(c: &LetterCluster) -> usize {
    if c.base() == SHIN {
        3
    } else {
        2
    }
}

/// Compares a prediction with the gold form. `None` is an abstention and
/// scores zero on every axis.
pub fn judge_word(gold: &Word, pred: Option<&Word>, voc: &VocTable) -> Result<WordJudgment, EvalError> {
    let decisions_total: usize = gold.clusters().iter().map(decisions).sum();
    let chars_total = gold.len();
    let Some(pred) = pred else {
        return Ok(WordJudgment {
            gold: gold.clone(),
            pred: None,
            decisions_total,
            decisions_correct: 0,
            chars_total,
            chars_correct: 0,
            word_correct: false,
            voc_correct: false,
        });
    };
    if pred.strip() != gold.strip() {
        return Err(EvalError::StripMismatch {
            gold: gold.to_text(),
            pred: pred.to_text(),
        });
    }
    let mut decisions_correct = 0;
    let mut chars_correct = 0;
    let mut voc_correct = true;
    for (g, p) in gold.clusters().iter().zip(pred.clusters()) {
        let (gm, pm) = (g.marks(), p.marks());
        let vowel = gm.vowel() == pm.vowel();
        let dagesh = gm.has_dagesh() == pm.has_dagesh();
        let shin = g.base() != SHIN || gm.shin_sin() == pm.shin_sin();
        let ok = [vowel, dagesh, shin];
        decisions_correct += ok[..decisions(g)].iter().filter(|b| **b).count();
        if vowel && dagesh && shin {
            chars_correct += 1;
        }
        if !(dagesh && shin && voc.class_of(gm.vowel()) == voc.class_of(pm.vowel())) {
            voc_correct = false;
        }
    }
    Ok(WordJudgment {
        gold: gold.clone(),
        pred: Some(pred.clone()),
        decisions_total,
        decisions_correct,
        chars_total,
        chars_correct,
        word_correct: chars_correct == chars_total,
        voc_correct,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisCount {
    pub correct: usize,
    pub total: usize,
}

impl AxisCount {
    pub fn percent(&self) -> f64 {
        100.0 * self.correct as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scheme: Scheme,
    pub system: String,
    pub dec: f64,
    pub cha: f64,
    pub wor: f64,
    pub voc: f64,
    pub decisions: AxisCount,
    pub chars: AxisCount,
    pub words: AxisCount,
    pub voc_words: AxisCount,
    /// Words with no prediction (out-of-vocabulary or without neighbours).
    pub absent: usize,
}

impl EvalReport {
    pub fn from_judgments(scheme: Scheme, system: &str, judgments: &[WordJudgment]) -> Result<Self, EvalError> {
        if judgments.is_empty() {
            return Err(EvalError::Empty);
        }
        let mut r = Self {
            scheme,
            system: system.to_string(),
            dec: 0.0,
            cha: 0.0,
            wor: 0.0,
            voc: 0.0,
            decisions: AxisCount::default(),
            chars: AxisCount::default(),
            words: AxisCount::default(),
            voc_words: AxisCount::default(),
            absent: 0,
        };
        for j in judgments {
            r.decisions.correct += j.decisions_correct;
            r.decisions.total += j.decisions_total;
            r.chars.correct += j.chars_correct;
            r.chars.total += j.chars_total;
            r.words.correct += usize::from(j.word_correct);
            r.voc_words.correct += usize::from(j.voc_correct);
            r.absent += usize::from(j.pred.is_none());
        }
        r.words.total = judgments.len();
        r.voc_words.total = judgments.len();
        r.dec = r.decisions.percent();
        r.cha = r.chars.percent();
        r.wor = r.words.percent();
        r.voc = r.voc_words.percent();
        Ok(r)
    }

    /// Plain-text table in DEC, CHA, WOR, VOC column order.
    pub fn table(reports: &[EvalReport]) -> String {
        let width = reports.iter().map(|r| r.label().chars().count()).max().unwrap_or(6).max(6);
        let mut out = format!("{:<width$}  {:>6}  {:>6}  {:>6}  {:>6}\n", "System", "DEC", "CHA", "WOR", "VOC");
        for r in reports {
            let _ = writeln!(
                out,
                "{:<width$}  {:>6.2}  {:>6.2}  {:>6.2}  {:>6.2}",
                r.label(),
                r.dec,
                r.cha,
                r.wor,
                r.voc
            );
        }
        out
    }

    fn label(&self) -> String {
        match self.scheme {
            Scheme::External => self.system.clone(),
            s => format!("{} ({s})", self.system),
        }
    }
}

/// Aggregates judgments of aligned gold words and predictions.
pub fn evaluate(golds: &[Word], preds: &[Option<Word>], scheme: Scheme, system: &str, voc: &VocTable) -> Result<EvalReport, EvalError> {
    if golds.len() != preds.len() {
        return Err(EvalError::Alignment {
            position: golds.len().min(preds.len()),
            msg: format!("{} gold words but {} predictions", golds.len(), preds.len()),
        });
    }
    let judgments = golds
        .iter()
        .zip(preds)
        .enumerate()
        .map(|(i, (g, p))| {
            judge_word(g, p.as_ref(), voc).map_err(|e| EvalError::Alignment {
                position: i,
                msg: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    EvalReport::from_judgments(scheme, system, &judgments)
}

/// Word tokens of a text, line by line, without sentence chunking.
fn text_words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let s = Sentence::new(line);
        for i in s.word_indices() {
            out.push(s.token_text(i).to_string());
        }
    }
    out
}

fn parse_token(token: &str) -> Result<Word, ScriptError> {
    let s = Sentence {
        text: token.to_string(),
        offset: 0,
        tokens: tokenize(token),
    };
    s.parse_word(0, ParseOptions::default())
}

/// Evaluates a predicted text against a gold text with the same letters.
/// Gold words that fail to parse are left out; predicted words that fail to
/// parse count as abstentions.
pub fn evaluate_texts(gold: &str, predicted: &str, system: &str, voc: &VocTable) -> Result<EvalReport, EvalError> {
    let (g, p) = (text_words(gold), text_words(predicted));
    if g.len() != p.len() {
        return Err(EvalError::Alignment {
            position: g.len().min(p.len()),
            msg: format!("{} gold words but {} predicted words", g.len(), p.len()),
        });
    }
    let mut golds = Vec::new();
    let mut preds = Vec::new();
    for (i, (gt, pt)) in g.iter().zip(&p).enumerate() {
        let Ok(gw) = parse_token(gt) else { continue };
        let pw = parse_token(pt).ok();
        if let Some(pw) = &pw {
            if pw.strip() != gw.strip() {
                return Err(EvalError::Alignment {
                    position: i,
                    msg: format!("{gt:?} vs {pt:?}"),
                });
            }
        }
        golds.push(gw);
        preds.push(pw);
    }
    evaluate(&golds, &preds, Scheme::External, system, voc)
}

/// Most frequent observed pattern of `w`, or `None` when unseen.
pub fn majority_predict(lexicon: &Lexicon, w: &str) -> Option<Word> {
    let top = lexicon.get(w)?.first()?;
    top.pattern.apply(w).ok()
}

/// Top candidate of a one-neighbour, one-candidate generator.
pub fn knn1_predict(generator: &CandidateGenerator<'_>, w: &str) -> Option<Word> {
    generator.generate(w, 1, 1).ok()?.candidates.into_iter().next()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Majority,
    Knn1,
}

impl std::str::FromStr for Baseline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "majority" => Ok(Baseline::Majority),
            "knn1" | "knn" => Ok(Baseline::Knn1),
            other => Err(format!("unknown baseline {other:?} (expected majority or knn1)")),
        }
    }
}

/// Gold word tokens of a corpus with their positions; unparseable tokens
/// are skipped.
pub fn gold_words(corpus: &[Sentence]) -> Vec<(usize, usize, Word)> {
    let mut out = Vec::new();
    for (si, s) in corpus.iter().enumerate() {
        for ti in s.word_indices() {
            if let Ok(w) = s.parse_word(ti, ParseOptions::default()) {
                out.push((si, ti, w));
            }
        }
    }
    out
}

pub fn run_baseline(baseline: Baseline, lexicon: &Lexicon, test: &[Sentence], voc: &VocTable) -> Result<EvalReport, EvalError> {
    let generator = CandidateGenerator::new(lexicon);
    let golds: Vec<Word> = gold_words(test).into_iter().map(|(_, _, w)| w).collect();
    let preds: Vec<Option<Word>> = golds
        .par_iter()
        .map(|g| {
            let w = g.strip();
            match baseline {
                Baseline::Majority => majority_predict(lexicon, &w),
                Baseline::Knn1 => knn1_predict(&generator, &w),
            }
        })
        .collect();
    let name = match baseline {
        Baseline::Majority => "majority",
        Baseline::Knn1 => "knn1",
    };
    evaluate(&golds, &preds, Scheme::External, name, voc)
}

/// Candidate-ranking evaluation: build each word's candidate set, embed the
/// rendered candidates and the context, and predict the top-scoring one.
pub fn run_scheme(
    scheme: Scheme,
    encoder: &dyn DualEncoder,
    lexicon: &Lexicon,
    test: &[Sentence],
    k: usize,
    c: usize,
    voc: &VocTable,
) -> Result<EvalReport, EvalError> {
    let generator = CandidateGenerator::new(lexicon);
    let items = gold_words(test);
    let preds = items
        .par_iter()
        .map(|(si, ti, gold)| -> Result<Option<Word>, EvalError> {
            let w = gold.strip();
            let set = match scheme {
                Scheme::Oracle => generator.oracle(&w, gold, k, c)?,
                Scheme::Knn | Scheme::External => match generator.generate(&w, k, c) {
                    Ok(set) => set,
                    Err(GenError::NoNeighbors(_)) => return Ok(None),
                    Err(e) => return Err(e.into()),
                },
            };
            let embeddings = set
                .candidates
                .iter()
                .map(|cand| {
                    let img = render_word(cand, encoder.render_config()).map_err(|e| ScoreError::Render(e.to_string()))?;
                    encoder.embed_candidate(&img)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let context = encoder.embed_context(&test[*si], *ti)?;
            let dist = score(&context, &embeddings)?;
            Ok(Some(set.candidates[dist.argmax()].clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let golds: Vec<Word> = items.into_iter().map(|(_, _, w)| w).collect();
    evaluate(&golds, &preds, scheme, "model", voc)
}

/// One `k,c,coverage` row per parameter pair, in the order given.
pub fn coverage_rows(lexicon: &Lexicon, test: &[Sentence], ks: &[usize], cs: &[usize]) -> Vec<(usize, usize, f64)> {
    let generator = CandidateGenerator::new(lexicon);
    let golds: Vec<Word> = gold_words(test).into_iter().map(|(_, _, w)| w).collect();
    let mut rows = Vec::new();
    for &k in ks {
        for &c in cs {
            rows.push((k, c, generator.coverage(&golds, k, c)));
        }
    }
    rows
}

pub fn coverage_csv(rows: &[(usize, usize, f64)]) -> String {
    let mut out = String::from("k,c,coverage\n");
    for (k, c, cov) in rows {
        let _ = writeln!(out, "{k},{c},{cov:.6}");
    }
    out
}
