//! Corpus ingestion: sentence chunking, tokenization, the pattern lexicon and
//! training-time sampling weights.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use thiserror::Error;

use crate::script::{is_hebrew_letter, is_hebrew_mark, ParseOptions, Pattern, ScriptError, Word};

/// A chunk becomes eligible to end at a line break once it holds this many
/// Unicode scalars.
pub const CHUNK_LINE_BREAK_THRESHOLD: usize = 200;

/// First line of a lexicon file.
pub const LEXICON_HEADER: &str = "DIVRIT-LEX 1";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("sentence {sentence}, byte {offset}: {token:?}: {source}")]
    Parse {
        sentence: usize,
        offset: usize,
        token: String,
        #[source]
        source: ScriptError,
    },
    #[error("lexicon line {line}: {msg}")]
    Format { line: usize, msg: String },
}

/// A token span within a sentence. Offsets are byte offsets into
/// [`Sentence::text`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub start: usize,
    pub end: usize,
    /// The span holds at least one Hebrew letter.
    pub is_hebrew_word: bool,
    /// The span also holds letters or digits from another script.
    pub mixed_script: bool,
}

impl Token {
    pub fn text<'a>(&self, sentence: &'a str) -> &'a str {
        &sentence[self.start..self.end]
    }

    /// Whether the token takes part in the lexicon and the word metrics.
    pub fn is_word(&self) -> bool {
        self.is_hebrew_word && !self.mixed_script
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub text: String,
    /// Byte offset of `text` in the text it was chunked from.
    pub offset: usize,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let tokens = tokenize(&text);
        Self { text, offset: 0, tokens }
    }

    pub fn token_text(&self, index: usize) -> &str {
        self.tokens[index].text(&self.text)
    }

    /// Word tokens (see [`Token::is_word`]) by index.
    pub fn word_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.tokens.iter().enumerate().filter(|(_, t)| t.is_word()).map(|(i, _)| i)
    }

    /// Parses token `index` as a word. Internal punctuation (geresh,
    /// gershayim, quotes) is not part of the letter sequence and is dropped.
    pub fn parse_word(&self, index: usize, opts: ParseOptions) -> Result<Word, ScriptError> {
        let letters: String = self.token_text(index).chars().filter(|c| !is_internal_punct(*c)).collect();
        Word::parse_with(&letters, opts)
    }
}

fn is_internal_punct(ch: char) -> bool {
    matches!(ch, '\u{05F3}' | '\u{05F4}' | '\'' | '"')
}

/// Splits raw text into sentences: after every `.`, and at the first line
/// break once the current chunk has reached 200 scalars. Chunks are trimmed
/// and empty chunks dropped.
pub fn chunk_text(raw: &str) -> Vec<Sentence> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut scalars = 0;
    let mut push = |from: usize, to: usize| {
        let piece = &raw[from..to];
        let trimmed = piece.trim();
        if !trimmed.is_empty() {
            let lead = piece.len() - piece.trim_start().len();
            let mut s = Sentence::new(trimmed);
            s.offset = from + lead;
            out.push(s);
        }
    };
    for (i, ch) in raw.char_indices() {
        if ch == '.' {
            push(start, i + 1);
            start = i + 1;
            scalars = 0;
        } else if ch == '\n' && scalars >= CHUNK_LINE_BREAK_THRESHOLD {
            push(start, i);
            start = i;
            scalars = 0;
        } else {
            scalars += 1;
        }
    }
    push(start, raw.len());
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Space,
    Word,
    Symbol,
}

fn classify(ch: char) -> CharClass {
    if ch.is_whitespace() {
        CharClass::Space
    } else if is_hebrew_letter(ch) || is_hebrew_mark(ch) || is_internal_punct(ch) || ch.is_alphanumeric() {
        CharClass::Word
    } else {
        CharClass::Symbol
    }
}

/// Tokenizes one sentence. Word runs (letters, digits, Hebrew marks and
/// internal punctuation) and symbol runs alternate; whitespace separates.
/// Internal punctuation at either edge of a word run is split off.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut runs: Vec<(usize, usize, CharClass)> = Vec::new();
    for (i, ch) in text.char_indices() {
        let class = classify(ch);
        let end = i + ch.len_utf8();
        match runs.last_mut() {
            Some(last) if last.2 == class && last.1 == i => last.1 = end,
            _ => runs.push((i, end, class)),
        }
    }
    let mut tokens = Vec::new();
    for (start, end, class) in runs {
        match class {
            CharClass::Space => {}
            CharClass::Symbol => tokens.push(symbol_token(start, end)),
            CharClass::Word => split_word_run(text, start, end, &mut tokens),
        }
    }
    tokens
}

fn symbol_token(start: usize, end: usize) -> Token {
    Token {
        start,
        end,
        is_hebrew_word: false,
        mixed_script: false,
    }
}

fn split_word_run(text: &str, start: usize, end: usize, tokens: &mut Vec<Token>) {
    let run = &text[start..end];
    let core_start = start + (run.len() - run.trim_start_matches(is_internal_punct).len());
    let core_end = start + run.trim_end_matches(is_internal_punct).len();
    if core_start >= core_end {
        tokens.push(symbol_token(start, end));
        return;
    }
    if core_start > start {
        tokens.push(symbol_token(start, core_start));
    }
    let core = &text[core_start..core_end];
    let hebrew = core.chars().any(is_hebrew_letter);
    let foreign = core
        .chars()
        .any(|c| c.is_alphanumeric() && !is_hebrew_letter(c) && !is_hebrew_mark(c));
    tokens.push(Token {
        start: core_start,
        end: core_end,
        is_hebrew_word: hebrew,
        mixed_script: hebrew && foreign,
    });
    if core_end < end {
        tokens.push(symbol_token(core_end, end));
    }
}

/// One observed pattern of a lexicon entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternCount {
    pub pattern: Pattern,
    pub count: u64,
}

/// Maps each undiacritized form to its observed patterns, most frequent
/// first (ties by ascending pattern encoding).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<PatternCount>>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Counts every word. Words must be valid; see [`Lexicon::build`] for
    /// corpus input.
    pub fn from_words<'a>(words: impl IntoIterator<Item = &'a Word>) -> Self {
        let mut counts: HashMap<String, HashMap<Pattern, u64>> = HashMap::new();
        for w in words {
            *counts.entry(w.strip()).or_default().entry(w.pattern()).or_default() += 1;
        }
        let entries = counts
            .into_iter()
            .map(|(key, pats)| {
                let list = pats.into_iter().map(|(pattern, count)| PatternCount { pattern, count }).collect();
                (key, list)
            })
            .collect();
        let mut lex = Self { entries };
        lex.sort_entries();
        lex
    }

    /// Builds the lexicon from a diacritized corpus. In lenient mode tokens
    /// that do not parse are skipped; in strict mode the first failure is
    /// returned with its location.
    pub fn build(corpus: &[Sentence], opts: ParseOptions) -> Result<Self, CorpusError> {
        let mut words = Vec::new();
        for (si, sentence) in corpus.iter().enumerate() {
            for ti in sentence.word_indices() {
                match sentence.parse_word(ti, opts) {
                    Ok(w) => words.push(w),
                    Err(source) if opts.strict => {
                        return Err(CorpusError::Parse {
                            sentence: si,
                            offset: sentence.offset + sentence.tokens[ti].start,
                            token: sentence.token_text(ti).to_string(),
                            source,
                        })
                    }
                    Err(_) => {}
                }
            }
        }
        Ok(Self::from_words(&words))
    }

    fn sort_entries(&mut self) {
        for list in self.entries.values_mut() {
            list.sort_by_cached_key(|pc| (std::cmp::Reverse(pc.count), pc.pattern.encode()));
        }
    }

    pub fn get(&self, undiac: &str) -> Option<&[PatternCount]> {
        self.entries.get(undiac).map(Vec::as_slice)
    }

    pub fn contains(&self, undiac: &str) -> bool {
        self.entries.contains_key(undiac)
    }

    /// Total occurrences of a form.
    pub fn frequency(&self, undiac: &str) -> u64 {
        self.get(undiac).map_or(0, |l| l.iter().map(|pc| pc.count).sum())
    }

    /// Entries in ascending key order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[PatternCount])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_tokens(&self) -> u64 {
        self.entries.values().flatten().map(|pc| pc.count).sum()
    }

    /// Caps each entry's top pattern at the combined count of its
    /// alternatives, then re-sorts.
    pub fn balanced_cap(&self) -> Lexicon {
        let mut out = self.clone();
        for list in out.entries.values_mut() {
            if list.len() < 2 {
                continue;
            }
            let rest: u64 = list[1..].iter().map(|pc| pc.count).sum();
            list[0].count = list[0].count.min(rest);
        }
        out.sort_entries();
        out
    }

    /// Serializes to the line-oriented `DIVRIT-LEX 1` format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(LEXICON_HEADER);
        out.push('\n');
        for (key, list) in &self.entries {
            let total: u64 = list.iter().map(|pc| pc.count).sum();
            let _ = write!(out, "{key}\t{total}\t");
            for (i, pc) in list.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}:{}", pc.pattern.encode(), pc.count);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CorpusError> {
        let err = |line: usize, msg: String| CorpusError::Format { line, msg };
        let mut lines = text.lines();
        match lines.next() {
            Some(LEXICON_HEADER) => {}
            other => return Err(err(1, format!("expected header {LEXICON_HEADER:?}, found {other:?}"))),
        }
        let mut entries = BTreeMap::new();
        let mut previous: Option<String> = None;
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let fields: Vec<&str> = line.split('\t').collect();
            let [key, total, pats] = fields[..] else {
                return Err(err(lineno, "expected three tab-separated fields".into()));
            };
            if key.is_empty() || !key.chars().all(is_hebrew_letter) {
                return Err(err(lineno, format!("bad key {key:?}")));
            }
            if previous.as_deref().is_some_and(|p| p >= key) {
                return Err(err(lineno, "keys out of order or duplicated".into()));
            }
            let total: u64 = total.parse().map_err(|_| err(lineno, format!("bad total {total:?}")))?;
            let letters = key.chars().count();
            let mut list = Vec::new();
            for item in pats.split(',') {
                let (pat, count) = item
                    .rsplit_once(':')
                    .ok_or_else(|| err(lineno, format!("bad pattern item {item:?}")))?;
                let pattern = Pattern::decode(pat).map_err(|e| err(lineno, e.to_string()))?;
                if pattern.len() != letters {
                    return Err(err(lineno, format!("pattern {pat} does not match key length {letters}")));
                }
                let count: u64 = count.parse().map_err(|_| err(lineno, format!("bad count {count:?}")))?;
                if count == 0 {
                    return Err(err(lineno, "zero count".into()));
                }
                list.push(PatternCount { pattern, count });
            }
            if list.iter().map(|pc| pc.count).sum::<u64>() != total {
                return Err(err(lineno, "total does not equal the sum of pattern counts".into()));
            }
            let mut seen: Vec<&Pattern> = list.iter().map(|pc| &pc.pattern).collect();
            seen.sort();
            seen.dedup();
            if seen.len() != list.len() {
                return Err(err(lineno, "duplicate pattern".into()));
            }
            previous = Some(key.to_string());
            entries.insert(key.to_string(), list);
        }
        let lex = Self { entries };
        let mut sorted = lex.clone();
        sorted.sort_entries();
        if sorted != lex {
            return Err(err(0, "pattern lists are not in frequency order".into()));
        }
        Ok(lex)
    }
}

/// `freq^0.75`, the training-time sampling weight of a word.
pub fn sampling_weight(freq: u64) -> f64 {
    (freq as f64).powf(0.75)
}

/// Normalized sampling distribution over undiacritized forms.
#[derive(Debug, Clone)]
pub struct SamplingTable {
    items: Vec<(String, f64)>,
    normalization: f64,
    index: WeightedIndex<f64>,
}

impl SamplingTable {
    /// Weights every lexicon form by its (possibly capped) total frequency.
    /// Returns `None` for an empty lexicon.
    pub fn from_lexicon(lexicon: &Lexicon) -> Option<Self> {
        Self::from_frequencies(lexicon.iter().map(|(k, l)| (k.to_string(), l.iter().map(|pc| pc.count).sum())))
    }

    pub fn from_frequencies(freqs: impl IntoIterator<Item = (String, u64)>) -> Option<Self> {
        let raw: Vec<(String, f64)> = freqs
            .into_iter()
            .filter(|(_, f)| *f > 0)
            .map(|(k, f)| (k, sampling_weight(f)))
            .collect();
        let normalization: f64 = raw.iter().map(|(_, w)| w).sum();
        if raw.is_empty() {
            return None;
        }
        let items: Vec<(String, f64)> = raw.into_iter().map(|(k, w)| (k, w / normalization)).collect();
        let index = WeightedIndex::new(items.iter().map(|(_, w)| *w)).ok()?;
        Some(Self {
            items,
            normalization,
            index,
        })
    }

    /// Normalized weights.
    pub fn items(&self) -> &[(String, f64)] {
        &self.items
    }

    /// Sum of the unnormalized weights.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &str {
        &self.items[self.index.sample(rng)].0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MELEKH: &str = "\u{05DE}\u{05B6}\u{05DC}\u{05B6}\u{05DA}\u{05B0}";
    const MALAKH: &str = "\u{05DE}\u{05B8}\u{05DC}\u{05B7}\u{05DA}\u{05B0}";
    const MLK: &str = "\u{05DE}\u{05DC}\u{05DA}";

    fn texts(s: &[Sentence]) -> Vec<&str> {
        s.iter().map(|s| s.text.as_str()).collect()
    }

    #[test]
    fn chunk_on_periods() {
        assert_eq!(texts(&chunk_text("A. B.")), vec!["A.", "B."]);
        assert!(chunk_text("").is_empty());
        assert!(chunk_text("  \n ").is_empty());
    }

    #[test]
    fn chunk_on_line_break_after_threshold() {
        let mut raw = "x".repeat(230);
        raw.push('\n');
        raw.push_str(&"y".repeat(19));
        let chunks = chunk_text(&raw);
        assert_eq!(chunks.len(), 2);
        assert_eq!(chunks[0].text.chars().count(), 230);
        assert_eq!(chunks[1].text, "y".repeat(19));
        assert_eq!(chunks[1].offset, 231);
    }

    #[test]
    fn line_break_before_threshold_does_not_split() {
        let raw = format!("{}\n{}", "a".repeat(100), "b".repeat(50));
        assert_eq!(chunk_text(&raw).len(), 1);
    }

    #[test]
    fn threshold_counts_marks() {
        // 100 letters with one mark each = 200 scalars, so the break splits
        let raw = format!("{}\n\u{05D0}", "\u{05D1}\u{05B0}".repeat(100));
        assert_eq!(chunk_text(&raw).len(), 2);
    }

    #[test]
    fn tokenize_splits_punctuation() {
        let text = format!("{MELEKH}.");
        let toks = tokenize(&text);
        assert_eq!(toks.len(), 2);
        assert_eq!(toks[0].text(&text), MELEKH);
        assert!(toks[0].is_hebrew_word);
        assert_eq!(toks[1].text(&text), ".");
        assert!(!toks[1].is_hebrew_word);
    }

    #[test]
    fn tokenize_latin() {
        let toks = tokenize("abc");
        assert_eq!(toks.len(), 1);
        assert!(!toks[0].is_hebrew_word);
    }

    #[test]
    fn tokenize_keeps_internal_punctuation() {
        let text = "\u{05E6}\u{05D4}\"\u{05DC} \"\u{05DE}\u{05DC}\u{05DA}\",";
        let toks = tokenize(text);
        let got: Vec<&str> = toks.iter().map(|t| t.text(text)).collect();
        assert_eq!(got, vec!["\u{05E6}\u{05D4}\"\u{05DC}", "\"", MLK, "\"", ","]);
        let s = Sentence::new(text);
        assert_eq!(s.parse_word(0, ParseOptions::default()).unwrap().strip(), "\u{05E6}\u{05D4}\u{05DC}");
    }

    #[test]
    fn tokenize_flags_mixed_script() {
        let text = "\u{05D1}1 abc\u{05D0}";
        let toks = tokenize(text);
        assert_eq!(toks.len(), 2);
        assert!(toks.iter().all(|t| t.is_hebrew_word && t.mixed_script && !t.is_word()));
    }

    #[test]
    fn tokenize_maqaf_splits() {
        let text = "\u{05DB}\u{05BE}\u{05D0}";
        let toks = tokenize(text);
        assert_eq!(toks.len(), 3);
        assert!(toks[0].is_word() && !toks[1].is_hebrew_word && toks[2].is_word());
    }

    #[test]
    fn build_lexicon_counts() {
        let corpus = chunk_text(&format!("{MELEKH} {MELEKH} {MALAKH}"));
        let lex = Lexicon::build(&corpus, ParseOptions::default()).unwrap();
        let entry = lex.get(MLK).unwrap();
        assert_eq!(entry.len(), 2);
        assert_eq!(entry[0].pattern, Word::parse(MELEKH).unwrap().pattern());
        assert_eq!(entry[0].count, 2);
        assert_eq!(entry[1].pattern, Word::parse(MALAKH).unwrap().pattern());
        assert_eq!(entry[1].count, 1);
        assert_eq!(lex.total_tokens(), 3);
    }

    #[test]
    fn empty_corpus_gives_empty_lexicon() {
        let lex = Lexicon::build(&[], ParseOptions::default()).unwrap();
        assert!(lex.is_empty());
        assert_eq!(lex.to_text(), "DIVRIT-LEX 1\n");
        assert_eq!(Lexicon::from_text("DIVRIT-LEX 1\n").unwrap(), lex);
    }

    #[test]
    fn strict_build_reports_location() {
        let corpus = chunk_text("\u{05D0} \u{05D1}\u{05B6}\u{05B8}");
        let err = Lexicon::build(&corpus, ParseOptions { strict: true }).unwrap_err();
        match err {
            CorpusError::Parse { sentence, offset, .. } => {
                assert_eq!(sentence, 0);
                assert_eq!(offset, 3);
            }
            other => panic!("{other}"),
        }
        let lenient = Lexicon::build(&corpus, ParseOptions::default()).unwrap();
        assert_eq!(lenient.total_tokens(), 1);
    }

    #[test]
    fn lexicon_text_format() {
        let corpus = chunk_text(&format!("{MELEKH} {MELEKH} {MALAKH} \u{05D0}"));
        let lex = Lexicon::build(&corpus, ParseOptions::default()).unwrap();
        let text = lex.to_text();
        let expected = format!("DIVRIT-LEX 1\n\u{05D0}\t1\t-:1\n{MLK}\t3\t05B6|05B6|05B0:2,05B8|05B7|05B0:1\n");
        assert_eq!(text, expected);
        assert_eq!(Lexicon::from_text(&text).unwrap(), lex);
    }

    #[test]
    fn lexicon_reader_rejects_bad_files() {
        assert!(Lexicon::from_text("").is_err());
        assert!(Lexicon::from_text("DIVRIT-LEX 2\n").is_err());
        let bad_total = format!("DIVRIT-LEX 1\n{MLK}\t4\t05B6|05B6|05B0:2,05B8|05B7|05B0:1\n");
        assert!(Lexicon::from_text(&bad_total).is_err());
        let bad_len = format!("DIVRIT-LEX 1\n{MLK}\t2\t05B6|05B6:2\n");
        assert!(Lexicon::from_text(&bad_len).is_err());
        let bad_order = format!("DIVRIT-LEX 1\n{MLK}\t3\t05B8|05B7|05B0:1,05B6|05B6|05B0:2\n");
        assert!(Lexicon::from_text(&bad_order).is_err());
        let unsorted_keys = format!("DIVRIT-LEX 1\n{MLK}\t1\t-|-|-:1\n\u{05D0}\t1\t-:1\n");
        assert!(Lexicon::from_text(&unsorted_keys).is_err());
    }

    #[test]
    fn sampling_weight_examples() {
        assert!((sampling_weight(16) - 8.0).abs() < 1e-12);
        assert_eq!(sampling_weight(1), 1.0);
        assert!((sampling_weight(10000) - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn sampling_table_normalizes() {
        let t = SamplingTable::from_frequencies(vec![("a".into(), 1), ("b".into(), 16)]).unwrap();
        let sum: f64 = t.items().iter().map(|(_, w)| w).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!((t.normalization() - 9.0).abs() < 1e-12);
        assert!((t.items()[1].1 - 8.0 / 9.0).abs() < 1e-12);
        assert!(SamplingTable::from_frequencies(Vec::new()).is_none());
    }

    fn lex_with(counts: &[u64]) -> Lexicon {
        let vowels = ['\u{05B0}', '\u{05B4}', '\u{05B5}', '\u{05B6}'];
        let mut words = Vec::new();
        for (i, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                words.push(Word::parse(&format!("\u{05D0}{}", vowels[i])).unwrap());
            }
        }
        Lexicon::from_words(&words)
    }

    fn counts(lex: &Lexicon) -> Vec<u64> {
        lex.get("\u{05D0}").unwrap().iter().map(|pc| pc.count).collect()
    }

    #[test]
    fn balanced_cap_examples() {
        assert_eq!(counts(&lex_with(&[10, 3, 1]).balanced_cap()), vec![4, 3, 1]);
        assert_eq!(counts(&lex_with(&[5]).balanced_cap()), vec![5]);
        assert_eq!(counts(&lex_with(&[2, 2]).balanced_cap()), vec![2, 2]);
    }
}
