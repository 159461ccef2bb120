//! Acceptance suite. Each test prints one `PASS` or `FAIL` line naming its
//! criterion, then asserts.
//!
//! Criteria 1 to 3 need the public Nakdimon train/test split under
//! `data/nakdimon/{train,test}` at the workspace root (plain UTF-8 `.txt`
//! files, searched recursively). They fail when the data is missing.

use std::path::{Path, PathBuf};

use niqqud::candgen::CandidateGenerator;
use niqqud::corpus::{chunk_text, Lexicon, Sentence};
use niqqud::evalkit::{self, run_baseline, Baseline, EvalReport, Scheme, VocTable};
use niqqud::render::{render_word, RenderConfig};
use niqqud::scorer::{
    grad_check, objective_from_probabilities, score, Activation, AuxMode, Embedding, Example, Model,
    ModelConfig, TraceRow, TrainConfig, Trainer, TrainingSet,
};
use niqqud::script::{ParseOptions, Pattern, Word};
use niqqud::synthetic::{cue_corpus, random_marks, random_word, CueCorpus, CueCorpusConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, pass: bool, detail: &str) {
    println!("{} criterion {id:>2}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} failed: {detail}");
}

// Nakdimon data

struct Split {
    lexicon: Lexicon,
    test: Vec<Sentence>,
}

fn data_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/nakdimon")
}

fn read_dir_text(dir: &Path) -> std::io::Result<Vec<Sentence>> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "txt") {
                files.push(path);
            }
        }
    }
    files.sort();
    let mut sentences = Vec::new();
    for f in files {
        sentences.extend(chunk_text(&std::fs::read_to_string(f)?));
    }
    Ok(sentences)
}

fn load_split() -> Result<Split, String> {
    let root = data_root();
    let train = read_dir_text(&root.join("train")).map_err(|e| format!("{}: {e}", root.join("train").display()))?;
    let test = read_dir_text(&root.join("test")).map_err(|e| format!("{}: {e}", root.join("test").display()))?;
    if train.is_empty() || test.is_empty() {
        return Err(format!("no .txt files under {}", root.display()));
    }
    let lexicon = Lexicon::build(&train, ParseOptions::default()).map_err(|e| e.to_string())?;
    Ok(Split { lexicon, test })
}

fn check_table_row(id: u32, baseline: Baseline, expected: [f64; 4]) {
    let split = match load_split() {
        Ok(s) => s,
        Err(e) => return report(id, false, &format!("test corpus unavailable ({e})")),
    };
    let r = run_baseline(baseline, &split.lexicon, &split.test, &VocTable::default()).unwrap();
    let got = [r.dec, r.cha, r.wor, r.voc];
    let ok = got.iter().zip(expected).all(|(g, e)| (g - e).abs() <= 1.0);
    report(
        id,
        ok,
        &format!("{baseline:?} DEC/CHA/WOR/VOC {got:.2?}, expected {expected:?} within 1.0"),
    );
}

#[test]
fn criterion_01_majority_baseline() {
    check_table_row(1, Baseline::Majority, [93.79, 90.01, 84.87, 86.19]);
}

#[test]
fn criterion_02_knn_baseline() {
    check_table_row(2, Baseline::Knn1, [96.20, 94.09, 87.09, 87.39]);
}

#[test]
fn criterion_03_coverage_curve() {
    let split = match load_split() {
        Ok(s) => s,
        Err(e) => return report(3, false, &format!("test corpus unavailable ({e})")),
    };
    let golds: Vec<Word> = evalkit::gold_words(&split.test).into_iter().map(|(_, _, w)| w).collect();
    let generator = CandidateGenerator::new(&split.lexicon);
    let curve: Vec<f64> = (1..=8).map(|c| generator.coverage(&golds, 5, c)).collect();
    let gains: Vec<f64> = curve.windows(2).map(|w| w[1] - w[0]).collect();
    let monotone = gains.iter().all(|g| *g >= 0.0);
    let diminishing = gains.windows(2).all(|g| g[1] <= g[0] + 1e-12);
    let best = gains
        .iter()
        .enumerate()
        .fold(0, |b, (i, g)| if *g > gains[b] { i } else { b })
        + 2;
    let knn = run_baseline(Baseline::Knn1, &split.lexicon, &split.test, &VocTable::default()).unwrap();
    let identity = (curve[0] * golds.len() as f64).round() as usize == knn.words.correct && knn.words.total == golds.len();
    report(
        3,
        monotone && diminishing && identity && best <= 4,
        &format!("coverage {curve:.4?}, largest gain at c={best}, c=1 matches KNN WOR: {identity}"),
    );
}

// Round trips

#[test]
fn criterion_04_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = 0;
    let mut words = Vec::with_capacity(10_000);
    for _ in 0..10_000 {
        let w = random_word(&mut rng, 10);
        let p = w.pattern();
        let ok = p.apply(&w.strip()).as_ref() == Ok(&w)
            && Word::parse(&w.to_text()).as_ref() == Ok(&w)
            && Pattern::decode(&p.encode()).as_ref() == Ok(&p);
        failures += usize::from(!ok);
        words.push(w);
    }
    let lexicon = Lexicon::from_words(&words);
    let lexicon_ok = Lexicon::from_text(&lexicon.to_text()).is_ok_and(|l| l == lexicon);
    report(
        4,
        failures == 0 && lexicon_ok,
        &format!("{failures} failures over 10000 words; lexicon round trip {lexicon_ok}"),
    );
}

// Metric coarsening

fn corrupt(rng: &mut ChaCha8Rng, gold: &Word, rate: f64) -> Word {
    let text = gold.strip();
    let slots = gold
        .pattern()
        .slots()
        .iter()
        .zip(text.chars())
        .map(|(slot, base)| {
            let fresh = random_marks(rng, base);
            let mut out = slot.clone();
            if rng.gen_bool(rate) {
                match fresh.vowel() {
                    Some(v) => {
                        if let Some(old) = out.vowel() {
                            out.remove(old);
                        }
                        out.insert(v);
                    }
                    None => {
                        if let Some(old) = out.vowel() {
                            out.remove(old);
                        }
                    }
                }
            }
            if rng.gen_bool(rate) {
                let dagesh = niqqud::script::Mark::new(niqqud::script::DAGESH).unwrap();
                if out.has_dagesh() {
                    out.remove(dagesh);
                } else {
                    out.insert(dagesh);
                }
            }
            if rng.gen_bool(rate) {
                if let Some(old) = out.shin_sin() {
                    out.remove(old);
                }
                if let Some(new) = fresh.shin_sin() {
                    out.insert(new);
                }
            }
            out
        })
        .collect();
    Pattern::new(slots).unwrap().apply(&text).unwrap()
}

/// Predictions are gold words with each decision independently resampled.
/// Abstentions are left out: an absent long word can pull the micro-averaged
/// CHA below WOR.
#[test]
fn criterion_05_metric_coarsening() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let voc = VocTable::default();
    let mut violations = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(20..200);
        let rate = rng.gen_range(0.0..0.3);
        let golds: Vec<Word> = (0..n).map(|_| random_word(&mut rng, 8)).collect();
        let preds: Vec<Option<Word>> = golds
            .iter()
            .map(|g| Some(corrupt(&mut rng, g, rate)))
            .collect();
        let r = evalkit::evaluate(&golds, &preds, Scheme::External, "random", &voc).unwrap();
        if !(r.dec >= r.cha && r.cha >= r.wor && r.voc >= r.wor) {
            violations += 1;
        }
    }
    report(5, violations == 0, &format!("{violations} violations over 1000 corpus pairs"));
}

// Objective values

fn tiny_config(aux: AuxMode) -> ModelConfig {
    ModelConfig {
        hidden: 8,
        embed: 8,
        buckets: 64,
        window_radius: 2,
        activation: Activation::Tanh,
        aux,
        render: RenderConfig::default(),
    }
}

fn example_for(rng: &mut ChaCha8Rng, n: usize, config: &ModelConfig) -> Example {
    let context: Vec<String> = (0..rng.gen_range(1..5)).map(|_| random_word(rng, 5).strip()).collect();
    let target = random_word(rng, 6).strip();
    let pos = rng.gen_range(0..=context.len());
    let mut tokens = context.clone();
    tokens.insert(pos, target.clone());
    let sentence = Sentence::new(tokens.join(" "));
    let mut candidates: Vec<Word> = Vec::new();
    while candidates.len() < n {
        let slots = target.chars().map(|b| random_marks(rng, b)).collect();
        let w = Pattern::new(slots).unwrap().apply(&target).unwrap();
        if !candidates.contains(&w) {
            candidates.push(w);
        }
    }
    let gold = rng.gen_range(0..n);
    Example::new(&sentence, pos, &candidates, gold, config).unwrap()
}

#[test]
fn criterion_06_objective_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for n in 1..=8 {
        let probs = vec![1.0 / n as f64; n];
        let direct = objective_from_probabilities(&probs, n - 1, None).unwrap();
        let config = tiny_config(AuxMode::None);
        let ex = example_for(&mut rng, n, &config);
        let via_model = Model::zeros(config).loss(&ex).unwrap();
        worst = worst
            .max((direct - (n as f64).ln()).abs())
            .max((via_model - (n as f64).ln()).abs());
    }
    let half = vec![vec![0.5; 15]; 2];
    let targets = vec![vec![1.0; 15], vec![0.0; 15]];
    let aux = objective_from_probabilities(&[0.5, 0.5], 0, Some((&half, &targets))).unwrap();
    let expected = 1.5 * std::f64::consts::LN_2;
    let mut aux_err = (aux - expected).abs();
    for mode in [AuxMode::Bag, AuxMode::Positional] {
        let config = tiny_config(mode);
        let ex = example_for(&mut rng, 2, &config);
        aux_err = aux_err.max((Model::zeros(config).loss(&ex).unwrap() - expected).abs());
    }
    report(
        6,
        worst <= 1e-9 && aux_err <= 1e-9,
        &format!("uniform loss error {worst:.2e}, auxiliary example error {aux_err:.2e}"),
    );
}

#[test]
fn criterion_07_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let modes = [AuxMode::None, AuxMode::Bag, AuxMode::Positional];
    let mut worst: f64 = 0.0;
    let mut at = None;
    for i in 0..100 {
        let config = tiny_config(modes[i % 3]);
        let model = Model::init(config.clone(), rng.gen());
        let n = rng.gen_range(1..=4);
        let ex = example_for(&mut rng, n, &config);
        let r = grad_check(&model, &ex, 1e-5).unwrap();
        if r.max_relative_error > worst {
            worst = r.max_relative_error;
            at = r.worst;
        }
    }
    report(
        7,
        worst <= 1e-4,
        &format!("max relative gradient error {worst:.2e} over 100 models (worst at {at:?})"),
    );
}

#[test]
fn criterion_08_scoring_contracts() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut norm, mut perm, mut scale) = (0usize, 0usize, 0usize);
    for _ in 0..1000 {
        let d = rng.gen_range(1..16);
        let n = rng.gen_range(1..10);
        let context: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let cands: Vec<Embedding> = (0..n)
            .map(|_| (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect::<Vec<_>>().into())
            .collect();
        let dist = score(&context, &cands).unwrap();
        if (dist.probabilities.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            norm += 1;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let permuted: Vec<Embedding> = order.iter().map(|&i| cands[i].clone()).collect();
        let pd = score(&context, &permuted).unwrap();
        if order.iter().enumerate().any(|(j, &i)| pd.logits[j] != dist.logits[i]) {
            perm += 1;
        }
        let a = rng.gen_range(0.01..100.0);
        let scaled: Vec<f64> = context.iter().map(|v| v * a).collect();
        let sd = score(&scaled, &cands).unwrap();
        let top = dist.logits[dist.argmax()];
        if dist.logits[sd.argmax()] != top {
            scale += 1;
        }
    }
    report(
        8,
        norm == 0 && perm == 0 && scale == 0,
        &format!("violations: normalization {norm}, permutation {perm}, scaling {scale} over 1000 instances"),
    );
}

#[test]
fn criterion_09_render_contracts() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let config = RenderConfig::default();
    let (mut dims, mut mirror, mut rerender) = (0usize, 0usize, 0usize);
    for _ in 0..1000 {
        let w = random_word(&mut rng, 12);
        let plain = Word::parse(&w.strip()).unwrap();
        let a = render_word(&w, &config).unwrap();
        let b = render_word(&plain, &config).unwrap();
        dims += usize::from(a.dims() != b.dims());
        mirror += usize::from(a.mirror().mirror() != a);
        rerender += usize::from(render_word(&w, &config).unwrap().to_pgm() != a.to_pgm());
    }
    report(
        9,
        dims + mirror + rerender == 0,
        &format!("violations: dimensions {dims}, mirror involution {mirror}, re-render {rerender} over 1000 words"),
    );
}

// Learning on the cue corpus

fn learning_config() -> ModelConfig {
    ModelConfig {
        hidden: 32,
        embed: 32,
        buckets: 1024,
        window_radius: 2,
        activation: Activation::Tanh,
        aux: AuxMode::None,
        render: RenderConfig::default(),
    }
}

fn train_config(seed: u64) -> TrainConfig {
    TrainConfig {
        steps: 5000,
        batch_size: 16,
        learning_rate: 0.05,
        momentum: 0.9,
        seed,
        balanced: false,
        k: 5,
        c: 2,
    }
}

fn held_out_examples(corpus: &CueCorpus, lexicon: &Lexicon, config: &ModelConfig) -> Vec<Example> {
    let generator = CandidateGenerator::new(lexicon);
    corpus
        .test_items
        .iter()
        .map(|item| {
            let gold = &corpus.targets[item.target].variants[item.gold];
            let set = generator.oracle(&gold.strip(), gold, 5, 2).unwrap();
            assert_eq!(set.len(), 2);
            let sentence = &corpus.test[item.sentence];
            Example::new(sentence, item.token, &set.candidates, set.gold_index.unwrap(), config).unwrap()
        })
        .collect()
}

fn accuracy(model: &Model, examples: &[Example]) -> f64 {
    let hits = examples
        .iter()
        .filter(|ex| model.score_example(ex).unwrap().argmax() == ex.gold)
        .count();
    hits as f64 / examples.len() as f64
}

/// Trains until held-out accuracy reaches `target` (checked every 100
/// steps) or `max_steps` pass. Returns (steps, accuracy).
fn train_on(corpus: &CueCorpus, model_config: ModelConfig, config: TrainConfig, target: f64, max_steps: usize) -> (usize, f64) {
    let lexicon = Lexicon::build(&corpus.train, ParseOptions::default()).unwrap();
    let held_out = held_out_examples(corpus, &lexicon, &model_config);
    let set = TrainingSet::new(corpus.train.clone(), &lexicon, &config).unwrap();
    let model = Model::init(model_config, config.seed);
    let mut trainer = Trainer::new(model, set, config).unwrap();
    let mut acc = accuracy(trainer.model(), &held_out);
    while trainer.steps_done() < max_steps && acc < target {
        trainer.run(100).unwrap();
        acc = accuracy(trainer.model(), &held_out);
    }
    (trainer.steps_done(), acc)
}

#[test]
fn criterion_10_learning_sanity() {
    let base = CueCorpusConfig {
        first_class_rate: 0.5,
        test_sentences: 1000,
        seed: 10,
        ..CueCorpusConfig::default()
    };
    let clean = cue_corpus(&base);
    let (steps, acc) = train_on(&clean, learning_config(), train_config(10), 0.95, 5000);
    let shuffled = cue_corpus(&CueCorpusConfig { shuffled: true, ..base });
    let (_, noise) = train_on(&shuffled, learning_config(), train_config(10), f64::INFINITY, steps.max(1000));
    report(
        10,
        acc >= 0.95 && noise <= 0.55,
        &format!("held-out accuracy {acc:.3} after {steps} steps; shuffled labels {noise:.3}"),
    );
}

fn trace_for(corpus: &CueCorpus, mut model_config: ModelConfig, mut config: TrainConfig, switch: &str) -> Vec<TraceRow> {
    match switch {
        "bag" => model_config.aux = AuxMode::Bag,
        "positional" => model_config.aux = AuxMode::Positional,
        "balanced" => config.balanced = true,
        "mirrored" => model_config.render.mirror = true,
        _ => {}
    }
    let lexicon = Lexicon::build(&corpus.train, ParseOptions::default()).unwrap();
    let set = TrainingSet::new(corpus.train.clone(), &lexicon, &config).unwrap();
    let model = Model::init(model_config, config.seed);
    let mut trainer = Trainer::new(model, set, config).unwrap();
    trainer.run(50).unwrap();
    trainer.trace().to_vec()
}

#[test]
fn criterion_11_ablation_switches() {
    let corpus = cue_corpus(&CueCorpusConfig {
        first_class_rate: 0.8,
        train_sentences: 500,
        test_sentences: 0,
        seed: 11,
        ..CueCorpusConfig::default()
    });
    let baseline = trace_for(&corpus, learning_config(), train_config(11), "none");
    let mut differing = Vec::new();
    let mut same = Vec::new();
    for switch in ["bag", "positional", "balanced", "mirrored"] {
        let trace = trace_for(&corpus, learning_config(), train_config(11), switch);
        let distinct = trace.len() == baseline.len() && trace.iter().zip(&baseline).any(|(a, b)| a.loss != b.loss);
        if distinct {
            differing.push(switch);
        } else {
            same.push(switch);
        }
    }
    report(
        11,
        same.is_empty(),
        &format!("switches with distinct loss curves {differing:?}, unchanged {same:?}"),
    );
}

#[test]
fn reports_render_as_a_table() {
    let w = Word::parse("\u{05DE}\u{05B6}\u{05DC}\u{05B6}\u{05DA}\u{05B0}").unwrap();
    let r = evalkit::evaluate(std::slice::from_ref(&w), &[Some(w.clone())], Scheme::External, "gold", &VocTable::default()).unwrap();
    assert!(EvalReport::table(&[r]).contains("100.00"));
}
