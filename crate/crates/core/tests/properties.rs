use niqqud::candgen::CandidateGenerator;
use niqqud::evalkit::{judge_word, knn1_predict, majority_predict, VocTable};
use niqqud::render::{render_word, RenderConfig};
use niqqud::scorer::{AuxMode, Checkpoint, Model, ModelConfig};
use niqqud::script::{Pattern, Word};
use niqqud::synthetic::{random_word, random_word_of_len};
use niqqud::Lexicon;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn word() -> impl Strategy<Value = Word> {
    any::<u64>().prop_map(|s| random_word(&mut ChaCha8Rng::seed_from_u64(s), 8))
}

/// Words of one to four letters over a three-letter alphabet.
fn dense_words(n: usize) -> impl Strategy<Value = Vec<Word>> {
    prop::collection::vec((any::<u64>(), 2usize..=4), 1..n).prop_map(|seeds| {
        seeds
            .into_iter()
            .map(|(s, len)| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let w = random_word(&mut rng, len);
                let form: String = w
                    .strip()
                    .chars()
                    .map(|c| ['\u{05D0}', '\u{05D1}', '\u{05DE}'][c as usize % 3])
                    .collect();
                w.pattern().apply(&form).unwrap()
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn strip_and_pattern_reassemble_the_word(w in word()) {
        prop_assert_eq!(w.pattern().apply(&w.strip()).unwrap(), w.clone());
        prop_assert_eq!(Word::parse(&w.to_text()).unwrap(), w.clone());
        prop_assert_eq!(Pattern::decode(&w.pattern().encode()).unwrap(), w.pattern());
    }

    #[test]
    fn lexicon_text_round_trips(words in dense_words(60)) {
        let lex = Lexicon::from_words(&words);
        let text = lex.to_text();
        let back = Lexicon::from_text(&text).unwrap();
        prop_assert_eq!(back.to_text(), text);
        prop_assert_eq!(back, lex.clone());
        prop_assert_eq!(lex.total_tokens(), words.len() as u64);
    }

    #[test]
    fn coverage_is_monotone_in_k_and_c(train in dense_words(60), test in dense_words(30)) {
        let lex = Lexicon::from_words(&train);
        let generator = CandidateGenerator::new(&lex);
        for k in 1..4 {
            for c in 1..4 {
                let here = generator.coverage(&test, k, c);
                prop_assert!(generator.coverage(&test, k, c + 1) >= here);
                prop_assert!(generator.coverage(&test, k + 1, c) >= here);
            }
        }
    }

    #[test]
    fn oracle_sets_hold_gold(train in dense_words(40), gold in dense_words(10), k in 1usize..5, c in 1usize..4) {
        let lex = Lexicon::from_words(&train);
        let generator = CandidateGenerator::new(&lex);
        for g in &gold {
            let set = generator.oracle(&g.strip(), g, k, c).unwrap();
            prop_assert!(set.len() <= c);
            prop_assert_eq!(&set.candidates[set.gold_index.unwrap()], g);
        }
    }

    #[test]
    fn baselines_agree_in_vocabulary(train in dense_words(60)) {
        let lex = Lexicon::from_words(&train);
        let generator = CandidateGenerator::new(&lex);
        for w in &train {
            let form = w.strip();
            prop_assert_eq!(majority_predict(&lex, &form), knn1_predict(&generator, &form));
        }
    }

    #[test]
    fn per_word_judgments_coarsen(gold in word(), seed in any::<u64>()) {
        let other = random_word_of_len(&mut ChaCha8Rng::seed_from_u64(seed), gold.len());
        let pred = other.pattern().apply(&gold.strip()).unwrap();
        for p in [Some(&pred), Some(&gold), None] {
            let j = judge_word(&gold, p, &VocTable::default()).unwrap();
            prop_assert!(j.decisions_correct <= j.decisions_total && j.chars_correct <= j.chars_total);
            if j.word_correct {
                prop_assert!(j.chars_correct == j.chars_total && j.voc_correct);
            }
            if j.chars_correct == j.chars_total {
                prop_assert_eq!(j.decisions_correct, j.decisions_total);
            }
        }
    }

    #[test]
    fn rendering_ignores_marks_for_geometry(w in word(), mirror in any::<bool>()) {
        let config = RenderConfig { mirror, ..RenderConfig::default() };
        let a = render_word(&w, &config).unwrap();
        let b = render_word(&Word::parse(&w.strip()).unwrap(), &config).unwrap();
        prop_assert_eq!(a.dims(), b.dims());
        prop_assert_eq!(a.mirror().mirror(), a);
    }
}

#[test]
fn png_output_decodes_to_the_same_pixels() {
    let dir = tempfile::tempdir().unwrap();
    let w = Word::parse("\u{05E9}\u{05C1}\u{05B8}\u{05DC}\u{05D5}\u{05B9}\u{05DD}").unwrap();
    let img = render_word(&w, &RenderConfig::default()).unwrap();
    let path = dir.path().join("w.png");
    img.save(&path).unwrap();
    let decoded = image::open(&path).unwrap().into_luma8();
    assert_eq!((decoded.height() as usize, decoded.width() as usize), img.dims());
    assert_eq!(decoded.into_raw(), img.to_gray8());
}

#[test]
fn checkpoints_round_trip() {
    for aux in [AuxMode::None, AuxMode::Bag, AuxMode::Positional] {
        let config = ModelConfig {
            hidden: 6,
            embed: 5,
            buckets: 32,
            aux,
            ..ModelConfig::default()
        };
        let model = Model::init(config, 42);
        let run = serde_json::json!({"steps": 0});
        let text = Checkpoint::new(model.clone(), run.clone()).to_text();
        let back = Checkpoint::from_text(&text).unwrap();
        assert_eq!(back.model, model);
        assert_eq!(back.run, run);
        let tampered = text.replacen("0.", "1.", 1);
        assert!(Checkpoint::from_text(&tampered).is_err());
    }
}
