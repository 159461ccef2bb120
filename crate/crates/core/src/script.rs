//! Letter clusters, diacritic marks and diacritization patterns.
//!
//! A word is a sequence of [`LetterCluster`]s: one Hebrew base letter plus the
//! set of niqqud marks attached to it. Stripping the base letters off leaves a
//! [`Pattern`], which can be re-applied to any undiacritized word of the same
//! length.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

pub const SHEVA: char = '\u{05B0}';
pub const HATAF_SEGOL: char = '\u{05B1}';
pub const HATAF_PATAH: char = '\u{05B2}';
pub const HATAF_QAMATS: char = '\u{05B3}';
pub const HIRIQ: char = '\u{05B4}';
pub const TSERE: char = '\u{05B5}';
pub const SEGOL: char = '\u{05B6}';
pub const PATAH: char = '\u{05B7}';
pub const QAMATS: char = '\u{05B8}';
pub const HOLAM: char = '\u{05B9}';
pub const HOLAM_HASER_FOR_VAV: char = '\u{05BA}';
pub const QUBUTS: char = '\u{05BB}';
pub const DAGESH: char = '\u{05BC}';
pub const METEG: char = '\u{05BD}';
pub const SHIN_DOT: char = '\u{05C1}';
pub const SIN_DOT: char = '\u{05C2}';
pub const QAMATS_QATAN: char = '\u{05C7}';

pub const SHIN: char = '\u{05E9}';

/// Every mark a [`Mark`] may hold, in canonical (ascending codepoint) order.
/// Holam haser for vav is folded into holam at parse time and so is absent.
pub const MARK_INVENTORY: [Mark; 15] = [
    Mark(SHEVA),
    Mark(HATAF_SEGOL),
    Mark(HATAF_PATAH),
    Mark(HATAF_QAMATS),
    Mark(HIRIQ),
    Mark(TSERE),
    Mark(SEGOL),
    Mark(PATAH),
    Mark(QAMATS),
    Mark(HOLAM),
    Mark(QUBUTS),
    Mark(DAGESH),
    Mark(SHIN_DOT),
    Mark(SIN_DOT),
    Mark(QAMATS_QATAN),
];

/// Number of distinct marks; the width of the multi-hot auxiliary targets.
pub const MARK_COUNT: usize = MARK_INVENTORY.len();

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error("empty input")]
    EmptyInput,
    #[error("combining mark U+{0:04X} at offset {1} has no preceding Hebrew letter")]
    OrphanMark(u32, usize),
    #[error("unsupported mark U+{0:04X}")]
    UnsupportedMark(u32),
    #[error("character U+{0:04X} is not a Hebrew letter")]
    InvalidBase(u32),
    #[error("conflicting marks on letter U+{0:04X}: {1}")]
    ConflictingMarks(u32, &'static str),
    #[error("word has {letters} letters but pattern has {slots} slots")]
    LengthMismatch { letters: usize, slots: usize },
    #[error("malformed pattern encoding {0:?}")]
    BadPatternEncoding(String),
}

/// Hebrew letters alef through tav, including final forms.
pub fn is_hebrew_letter(ch: char) -> bool {
    ('\u{05D0}'..='\u{05EA}').contains(&ch)
}

/// Any combining mark of the Hebrew block: niqqud, meteg and cantillation.
/// Maqaf, paseq, sof pasuq and nun hafukha are punctuation, not marks.
pub fn is_hebrew_mark(ch: char) -> bool {
    matches!(ch, '\u{0591}'..='\u{05BD}' | '\u{05BF}' | '\u{05C1}' | '\u{05C2}' | '\u{05C4}' | '\u{05C5}' | '\u{05C7}')
}

/// A single in-scope niqqud mark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mark(char);

impl Mark {
    /// Accepts the closed inventory; holam haser for vav folds into holam.
    pub fn new(ch: char) -> Option<Mark> {
        match ch {
            HOLAM_HASER_FOR_VAV => Some(Mark(HOLAM)),
            '\u{05B0}'..='\u{05BC}' | SHIN_DOT | SIN_DOT | QAMATS_QATAN => Some(Mark(ch)),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        self.0
    }

    /// Vowel-class marks: at most one per letter.
    pub fn is_vowel(self) -> bool {
        matches!(self.0, '\u{05B0}'..='\u{05BB}' | QAMATS_QATAN)
    }

    pub fn is_shin_sin_dot(self) -> bool {
        matches!(self.0, SHIN_DOT | SIN_DOT)
    }

    /// Position in [`MARK_INVENTORY`].
    pub fn index(self) -> usize {
        MARK_INVENTORY
            .iter()
            .position(|m| *m == self)
            .expect("Mark is always constructed from the inventory")
    }
}

/// Ordered set of marks; iteration yields ascending codepoints.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MarkSet(BTreeSet<Mark>);

impl MarkSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, mark: Mark) {
        self.0.insert(mark);
    }

    pub fn remove(&mut self, mark: Mark) {
        self.0.remove(&mark);
    }

    pub fn contains(&self, mark: Mark) -> bool {
        self.0.contains(&mark)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = Mark> + '_ {
        self.0.iter().copied()
    }

    /// The single vowel-class mark, if any.
    pub fn vowel(&self) -> Option<Mark> {
        self.iter().find(|m| m.is_vowel())
    }

    pub fn has_dagesh(&self) -> bool {
        self.contains(Mark(DAGESH))
    }

    pub fn shin_sin(&self) -> Option<Mark> {
        self.iter().find(|m| m.is_shin_sin_dot())
    }

    /// Checks the slot rules shared by clusters and patterns: one vowel at
    /// most and never both shin and sin dots.
    fn check_slot(&self, base: u32) -> Result<(), ScriptError> {
        if self.iter().filter(|m| m.is_vowel()).count() > 1 {
            return Err(ScriptError::ConflictingMarks(base, "more than one vowel"));
        }
        if self.contains(Mark(SHIN_DOT)) && self.contains(Mark(SIN_DOT)) {
            return Err(ScriptError::ConflictingMarks(base, "shin and sin dots together"));
        }
        Ok(())
    }
}

impl FromIterator<Mark> for MarkSet {
    fn from_iter<I: IntoIterator<Item = Mark>>(iter: I) -> Self {
        MarkSet(iter.into_iter().collect())
    }
}

/// A base letter with its marks.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LetterCluster {
    base: char,
    marks: MarkSet,
}

impl LetterCluster {
    pub fn new(base: char, marks: MarkSet) -> Result<Self, ScriptError> {
        if !is_hebrew_letter(base) {
            return Err(ScriptError::InvalidBase(base as u32));
        }
        marks.check_slot(base as u32)?;
        if base != SHIN && marks.shin_sin().is_some() {
            return Err(ScriptError::ConflictingMarks(base as u32, "shin/sin dot on a letter other than shin"));
        }
        Ok(Self { base, marks })
    }

    pub fn base(&self) -> char {
        self.base
    }

    pub fn marks(&self) -> &MarkSet {
        &self.marks
    }
}

/// Parsing options.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Reject meteg, cantillation and other out-of-inventory marks instead
    /// of dropping them.
    pub strict: bool,
}

/// A non-empty, logically ordered sequence of letter clusters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Word {
    clusters: Vec<LetterCluster>,
}

impl Word {
    pub fn from_clusters(clusters: Vec<LetterCluster>) -> Result<Self, ScriptError> {
        if clusters.is_empty() {
            return Err(ScriptError::EmptyInput);
        }
        Ok(Self { clusters })
    }

    /// Lenient parse; see [`Word::parse_with`].
    pub fn parse(text: &str) -> Result<Self, ScriptError> {
        Self::parse_with(text, ParseOptions::default())
    }

    /// Parses a word made of Hebrew letters and combining marks. The input is
    /// NFD-normalized first so precomposed presentation forms split into
    /// base plus marks.
    pub fn parse_with(text: &str, opts: ParseOptions) -> Result<Self, ScriptError> {
        let mut clusters: Vec<(char, MarkSet)> = Vec::new();
        for (offset, ch) in text.nfd().enumerate() {
            if is_hebrew_letter(ch) {
                clusters.push((ch, MarkSet::new()));
            } else if is_hebrew_mark(ch) || is_other_combining(ch) {
                let Some((_, marks)) = clusters.last_mut() else {
                    return Err(ScriptError::OrphanMark(ch as u32, offset));
                };
                match Mark::new(ch) {
                    Some(mark) => marks.insert(mark),
                    None if opts.strict => return Err(ScriptError::UnsupportedMark(ch as u32)),
                    None => {}
                }
            } else {
                return Err(ScriptError::InvalidBase(ch as u32));
            }
        }
        if clusters.is_empty() {
            return Err(ScriptError::EmptyInput);
        }
        let clusters = clusters
            .into_iter()
            .map(|(base, marks)| LetterCluster::new(base, marks))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { clusters })
    }

    pub fn clusters(&self) -> &[LetterCluster] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// The undiacritized form: base letters only.
    pub fn strip(&self) -> String {
        self.clusters.iter().map(|c| c.base).collect()
    }

    pub fn pattern(&self) -> Pattern {
        Pattern {
            slots: self.clusters.iter().map(|c| c.marks.clone()).collect(),
        }
    }

    /// Canonical text: each base followed by its marks in ascending order.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.clusters.len() * 4);
        for c in &self.clusters {
            out.push(c.base);
            out.extend(c.marks.iter().map(Mark::as_char));
        }
        out
    }

    /// True when any letter carries a mark.
    pub fn is_diacritized(&self) -> bool {
        self.clusters.iter().any(|c| !c.marks.is_empty())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn is_other_combining(ch: char) -> bool {
    // Generic combining diacritics that may trail a Hebrew letter in noisy text.
    matches!(ch, '\u{0300}'..='\u{036F}' | '\u{FB1E}')
}

/// Per-letter mark sets with the base letters removed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pattern {
    slots: Vec<MarkSet>,
}

impl Pattern {
    /// Shin/sin dots are allowed in any slot; they are validated on
    /// application.
    pub fn new(slots: Vec<MarkSet>) -> Result<Self, ScriptError> {
        for slot in &slots {
            slot.check_slot(0)?;
        }
        Ok(Self { slots })
    }

    pub fn empty(len: usize) -> Self {
        Self {
            slots: vec![MarkSet::new(); len],
        }
    }

    pub fn slots(&self) -> &[MarkSet] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Applies the pattern to an undiacritized word. Shin/sin dots landing on
    /// a letter other than shin are dropped.
    pub fn apply(&self, undiac: &str) -> Result<Word, ScriptError> {
        let letters: Vec<char> = undiac.chars().collect();
        if letters.is_empty() {
            return Err(ScriptError::EmptyInput);
        }
        if letters.len() != self.slots.len() {
            return Err(ScriptError::LengthMismatch {
                letters: letters.len(),
                slots: self.slots.len(),
            });
        }
        let clusters = letters
            .into_iter()
            .zip(&self.slots)
            .map(|(base, slot)| {
                let mut marks = slot.clone();
                if base != SHIN {
                    marks.remove(Mark(SHIN_DOT));
                    marks.remove(Mark(SIN_DOT));
                }
                LetterCluster::new(base, marks)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Word { clusters })
    }

    /// Line-format encoding: slots joined by `|`, marks as four-digit
    /// uppercase hex joined by `+`, `-` for an empty slot.
    pub fn encode(&self) -> String {
        let mut out = String::new();
        for (i, slot) in self.slots.iter().enumerate() {
            if i > 0 {
                out.push('|');
            }
            if slot.is_empty() {
                out.push('-');
                continue;
            }
            for (j, mark) in slot.iter().enumerate() {
                if j > 0 {
                    out.push('+');
                }
                out.push_str(&format!("{:04X}", mark.as_char() as u32));
            }
        }
        out
    }

    pub fn decode(text: &str) -> Result<Self, ScriptError> {
        let bad = || ScriptError::BadPatternEncoding(text.to_string());
        if text.is_empty() {
            return Err(bad());
        }
        let mut slots = Vec::new();
        for slot in text.split('|') {
            if slot == "-" {
                slots.push(MarkSet::new());
                continue;
            }
            let mut marks = MarkSet::new();
            for hex in slot.split('+') {
                if hex.len() != 4 {
                    return Err(bad());
                }
                let cp = u32::from_str_radix(hex, 16).map_err(|_| bad())?;
                let ch = char::from_u32(cp).ok_or_else(bad)?;
                match Mark::new(ch) {
                    Some(mark) if mark.as_char() == ch => marks.insert(mark),
                    _ => return Err(ScriptError::UnsupportedMark(cp)),
                }
            }
            slots.push(marks);
        }
        Pattern::new(slots)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MLK: &str = "\u{05DE}\u{05DC}\u{05DA}";
    const MELEKH: &str = "\u{05DE}\u{05B6}\u{05DC}\u{05B6}\u{05DA}\u{05B0}";
    const MALAKH: &str = "\u{05DE}\u{05B8}\u{05DC}\u{05B7}\u{05DA}\u{05B0}";

    fn set(marks: &[char]) -> MarkSet {
        marks.iter().map(|&c| Mark::new(c).unwrap()).collect()
    }

    #[test]
    fn parses_undiacritized_word() {
        let w = Word::parse(MLK).unwrap();
        assert_eq!(w.len(), 3);
        assert!(w.clusters().iter().all(|c| c.marks().is_empty()));
    }

    #[test]
    fn parses_melekh() {
        let w = Word::parse(MELEKH).unwrap();
        let got: Vec<(char, MarkSet)> = w.clusters().iter().map(|c| (c.base(), c.marks().clone())).collect();
        assert_eq!(
            got,
            vec![
                ('\u{05DE}', set(&[SEGOL])),
                ('\u{05DC}', set(&[SEGOL])),
                ('\u{05DA}', set(&[SHEVA])),
            ]
        );
    }

    #[test]
    fn orphan_mark_is_rejected() {
        assert!(matches!(Word::parse("\u{05B6}\u{05DE}"), Err(ScriptError::OrphanMark(0x05B6, 0))));
    }

    #[test]
    fn empty_input_is_rejected() {
        assert_eq!(Word::parse(""), Err(ScriptError::EmptyInput));
    }

    #[test]
    fn meteg_dropped_in_lenient_rejected_in_strict() {
        let text = "\u{05DE}\u{05B6}\u{05BD}\u{05DC}";
        let w = Word::parse(text).unwrap();
        assert_eq!(w.to_text(), "\u{05DE}\u{05B6}\u{05DC}");
        let strict = Word::parse_with(text, ParseOptions { strict: true });
        assert_eq!(strict, Err(ScriptError::UnsupportedMark(0x05BD)));
        let cantillation = Word::parse_with("\u{05DE}\u{0591}", ParseOptions { strict: true });
        assert_eq!(cantillation, Err(ScriptError::UnsupportedMark(0x0591)));
    }

    #[test]
    fn holam_haser_folds_into_holam() {
        let a = Word::parse("\u{05D5}\u{05BA}").unwrap();
        let b = Word::parse("\u{05D5}\u{05B9}").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mark_order_is_canonicalized() {
        // dagesh before sheva in the source; canonical output puts sheva first
        let w = Word::parse("\u{05D1}\u{05BC}\u{05B0}").unwrap();
        assert_eq!(w.to_text(), "\u{05D1}\u{05B0}\u{05BC}");
    }

    #[test]
    fn presentation_forms_decompose() {
        // U+FB2A is shin with shin dot
        let w = Word::parse("\u{FB2A}").unwrap();
        assert_eq!(w.to_text(), "\u{05E9}\u{05C1}");
    }

    #[test]
    fn two_vowels_conflict() {
        assert!(matches!(
            Word::parse("\u{05DE}\u{05B6}\u{05B8}"),
            Err(ScriptError::ConflictingMarks(..))
        ));
    }

    #[test]
    fn shin_dot_only_on_shin() {
        assert!(Word::parse("\u{05E9}\u{05C2}").is_ok());
        assert!(matches!(Word::parse("\u{05DE}\u{05C1}"), Err(ScriptError::ConflictingMarks(..))));
        assert!(Word::parse("\u{05E9}\u{05C1}\u{05C2}").is_err());
    }

    #[test]
    fn qamats_qatan_kept_distinct_from_qamats() {
        let a = Word::parse("\u{05DB}\u{05C7}").unwrap();
        let b = Word::parse("\u{05DB}\u{05B8}").unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn strip_examples() {
        assert_eq!(Word::parse(MELEKH).unwrap().strip(), MLK);
        assert_eq!(Word::parse(MLK).unwrap().strip(), MLK);
        assert_eq!(Word::parse(MALAKH).unwrap().strip(), MLK);
    }

    #[test]
    fn extract_examples() {
        assert_eq!(Word::parse(MELEKH).unwrap().pattern().slots(), &[set(&[SEGOL]), set(&[SEGOL]), set(&[SHEVA])]);
        assert_eq!(Word::parse(MLK).unwrap().pattern(), Pattern::empty(3));
        assert_eq!(Word::parse(MALAKH).unwrap().pattern().slots(), &[set(&[QAMATS]), set(&[PATAH]), set(&[SHEVA])]);
    }

    #[test]
    fn apply_examples() {
        let p = Pattern::new(vec![set(&[SEGOL]), set(&[SEGOL]), set(&[SHEVA])]).unwrap();
        assert_eq!(p.apply(MLK).unwrap(), Word::parse(MELEKH).unwrap());
        let short = Pattern::new(vec![set(&[SEGOL]), set(&[SEGOL])]).unwrap();
        assert_eq!(short.apply(MLK), Err(ScriptError::LengthMismatch { letters: 3, slots: 2 }));
        assert_eq!(p.apply("abc"), Err(ScriptError::InvalidBase('a' as u32)));
    }

    #[test]
    fn apply_drops_shin_dots_on_other_letters() {
        let p = Pattern::new(vec![set(&[SHIN_DOT, QAMATS]), set(&[SIN_DOT])]).unwrap();
        let w = p.apply("\u{05DE}\u{05E9}").unwrap();
        assert_eq!(w.to_text(), "\u{05DE}\u{05B8}\u{05E9}\u{05C2}");
    }

    #[test]
    fn serialization_order_example() {
        assert_eq!(Word::parse(MELEKH).unwrap().to_text(), MELEKH);
        assert!(SHEVA < DAGESH);
    }

    #[test]
    fn pattern_encoding() {
        let p = Word::parse("\u{05D1}\u{05BC}\u{05B0}\u{05DC}").unwrap().pattern();
        assert_eq!(p.encode(), "05B0+05BC|-");
        assert_eq!(Pattern::decode("05B0+05BC|-").unwrap(), p);
        assert!(Pattern::decode("").is_err());
        assert!(Pattern::decode("5B0").is_err());
        assert!(Pattern::decode("05B6+05B8").is_err());
        assert!(Pattern::decode("05BA").is_err());
    }

    #[test]
    fn inventory_is_sorted_and_indexed() {
        for (i, m) in MARK_INVENTORY.iter().enumerate() {
            assert_eq!(m.index(), i);
        }
        assert!(MARK_INVENTORY.windows(2).all(|w| w[0] < w[1]));
    }
}
