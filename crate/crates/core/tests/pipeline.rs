use niqqud::corpus::{chunk_text, Lexicon};
use niqqud::evalkit::{coverage_rows, gold_words, run_baseline, run_scheme, Baseline, Scheme, VocTable};
use niqqud::scorer::{Model, ModelConfig};
use niqqud::script::ParseOptions;
use niqqud::synthetic::{cue_corpus, CueCorpusConfig};

fn small_model() -> Model {
    Model::init(
        ModelConfig {
            hidden: 8,
            embed: 8,
            buckets: 128,
            ..ModelConfig::default()
        },
        1,
    )
}

#[test]
fn schemes_respect_their_bounds() {
    let corpus = cue_corpus(&CueCorpusConfig {
        train_sentences: 200,
        test_sentences: 60,
        ..CueCorpusConfig::default()
    });
    let lexicon = Lexicon::build(&corpus.train, ParseOptions::default()).unwrap();
    let model = small_model();
    let voc = VocTable::default();

    let oracle = run_scheme(Scheme::Oracle, &model, &lexicon, &corpus.test, 5, 1, &voc).unwrap();
    assert_eq!(oracle.wor, 100.0);
    assert_eq!(oracle.scheme, Scheme::Oracle);

    for c in 1..=3 {
        let knn = run_scheme(Scheme::Knn, &model, &lexicon, &corpus.test, 5, c, &voc).unwrap();
        let coverage = coverage_rows(&lexicon, &corpus.test, &[5], &[c])[0].2;
        assert!(knn.wor <= 100.0 * coverage + 1e-9);
        assert_eq!(knn.words.total, corpus.test_items.len());
    }
}

#[test]
fn scheme_runs_are_deterministic() {
    let corpus = cue_corpus(&CueCorpusConfig {
        train_sentences: 100,
        test_sentences: 40,
        ..CueCorpusConfig::default()
    });
    let lexicon = Lexicon::build(&corpus.train, ParseOptions::default()).unwrap();
    let model = small_model();
    let a = run_scheme(Scheme::Knn, &model, &lexicon, &corpus.test, 5, 2, &VocTable::default()).unwrap();
    let b = run_scheme(Scheme::Knn, &model, &lexicon, &corpus.test, 5, 2, &VocTable::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn knn_coverage_at_one_candidate_equals_knn_baseline_words() {
    let train = chunk_text(
        "\u{05DE}\u{05B6}\u{05DC}\u{05B6}\u{05DA}\u{05B0} \u{05DE}\u{05B6}\u{05DC}\u{05B6}\u{05DA}\u{05B0}. \
         \u{05DE}\u{05B8}\u{05DC}\u{05B7}\u{05DA}\u{05B0} \u{05D8}\u{05D5}\u{05B9}\u{05D1}.",
    );
    let test = chunk_text(
        "\u{05DE}\u{05B8}\u{05DC}\u{05B7}\u{05DA}\u{05B0} \u{05DE}\u{05B6}\u{05DC}\u{05B6}\u{05D0}. \
         \u{05D8}\u{05D5}\u{05B9}\u{05D1} \u{05D0}\u{05B8}.",
    );
    let lexicon = Lexicon::build(&train, ParseOptions::default()).unwrap();
    let knn = run_baseline(Baseline::Knn1, &lexicon, &test, &VocTable::default()).unwrap();
    let coverage = coverage_rows(&lexicon, &test, &[1, 5], &[1]);
    let words = gold_words(&test).len();
    assert_eq!(knn.words.total, words);
    for (_, _, cov) in coverage {
        assert_eq!((cov * words as f64).round() as usize, knn.words.correct);
    }
}
