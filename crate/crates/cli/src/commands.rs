//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use niqqud::candgen::{CandidateGenerator, GenError};
use niqqud::corpus::{chunk_text, CorpusError, Lexicon, Sentence};
use niqqud::evalkit::{self, Baseline, EvalError, EvalReport, Scheme, VocTable};
use niqqud::render::{render_instance, render_text, RenderConfig, RenderError};
use niqqud::scorer::{AuxMode, Checkpoint, Model, ModelConfig, TrainConfig, TrainError, Trainer, TrainingSet};
use niqqud::script::{ParseOptions, Word};
use niqqud::sha256_hex;
use serde::Serialize;

use crate::config::{
    parse_range, read_text, write_bytes, write_provenance, write_timestamp, FileConfig, Provenance, RunConfig,
};
use crate::error::CliError;
use crate::{BaselineArgs, BuildLexiconArgs, CandidatesArgs, CoverageArgs, EvaluateArgs, RenderArgs, TrainArgs};

/// Field-wise `flags.or(file)`.
fn merge(flags: FileConfig, file: FileConfig) -> FileConfig {
    macro_rules! pick {
        ($($f:ident),*) => { FileConfig { $($f: flags.$f.or(file.$f)),* } };
    }
    pick!(
        k,
        c,
        k_range,
        c_range,
        scheme,
        aux,
        mirror,
        balanced,
        seed,
        batch_size,
        steps,
        learning_rate,
        momentum,
        hidden,
        embed,
        buckets,
        window_radius,
        cell_height,
        strict,
        threads
    )
}

fn resolve(
    subcommand: &str,
    inputs: &[PathBuf],
    output: Option<&Path>,
    flags: FileConfig,
    globals: FileConfig,
    file: FileConfig,
) -> Result<RunConfig, CliError> {
    let flags = FileConfig {
        seed: globals.seed,
        threads: globals.threads,
        ..flags
    };
    let m = merge(flags, file);
    let train = TrainConfig::default();
    let model = ModelConfig::default();
    Ok(RunConfig {
        subcommand: subcommand.to_string(),
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        output: output.map(|p| p.display().to_string()),
        k: m.k.unwrap_or(train.k),
        c: m.c.unwrap_or(train.c),
        k_range: parse_range(m.k_range.as_deref().unwrap_or("5"))?,
        c_range: parse_range(m.c_range.as_deref().unwrap_or("1..8"))?,
        scheme: m.scheme.unwrap_or_else(|| "oracle".into()),
        aux: m.aux.unwrap_or_else(|| "none".into()),
        mirror: m.mirror.unwrap_or(false),
        balanced: m.balanced.unwrap_or(train.balanced),
        seed: m.seed.unwrap_or(train.seed),
        batch_size: m.batch_size.unwrap_or(train.batch_size),
        steps: m.steps.unwrap_or(train.steps),
        learning_rate: m.learning_rate.unwrap_or(train.learning_rate),
        momentum: m.momentum.unwrap_or(train.momentum),
        hidden: m.hidden.unwrap_or(model.hidden),
        embed: m.embed.unwrap_or(model.embed),
        buckets: m.buckets.unwrap_or(model.buckets),
        window_radius: m.window_radius.unwrap_or(model.window_radius),
        cell_height: m.cell_height.unwrap_or(model.render.cell_height),
        strict: m.strict.unwrap_or(false),
        threads: m.threads,
    })
}

/// Reads files and remembers their hashes for provenance.
#[derive(Default)]
struct Inputs {
    hashes: Vec<(PathBuf, String)>,
}

impl Inputs {
    fn text(&mut self, path: &Path) -> Result<String, CliError> {
        let text = read_text(path)?;
        self.hashes.push((path.to_path_buf(), sha256_hex(text.as_bytes())));
        Ok(text)
    }

    fn lexicon(&mut self, path: &Path) -> Result<Lexicon, CliError> {
        let text = self.text(path)?;
        Lexicon::from_text(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    /// Chunks every file and, when `strict`, validates every word token,
    /// reporting the first failure as `file:line:column`.
    fn corpus(&mut self, paths: &[PathBuf], strict: bool) -> Result<Vec<Sentence>, CliError> {
        let mut all = Vec::new();
        for path in paths {
            let text = self.text(path)?;
            let sentences = chunk_text(&text);
            if strict {
                if let Err(CorpusError::Parse { offset, token, source, .. }) =
                    Lexicon::build(&sentences, ParseOptions { strict: true })
                {
                    let (line, col) = line_col(&text, offset);
                    return Err(CliError::Data(format!(
                        "{}:{line}:{col}: {token:?}: {source}",
                        path.display()
                    )));
                }
            }
            all.extend(sentences);
        }
        Ok(all)
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

fn parse_opts(run: &RunConfig) -> ParseOptions {
    ParseOptions { strict: run.strict }
}

fn voc_table(path: Option<&Path>, inputs: &mut Inputs) -> Result<VocTable, CliError> {
    match path {
        Some(p) => {
            let text = inputs.text(p)?;
            VocTable::parse(&text).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))
        }
        None => Ok(VocTable::default()),
    }
}

fn gen_error(e: GenError) -> CliError {
    match e {
        GenError::BadQuery(_) | GenError::ZeroParameter => CliError::Usage(e.to_string()),
        GenError::GoldMismatch { .. } | GenError::NoNeighbors(_) => CliError::Internal(e.to_string()),
    }
}

fn eval_error(e: EvalError) -> CliError {
    match e {
        EvalError::Empty | EvalError::Alignment { .. } | EvalError::VocTable { .. } | EvalError::StripMismatch { .. } => {
            CliError::Data(e.to_string())
        }
        EvalError::Candidates(e) => gen_error(e),
        EvalError::Score(e) => CliError::Internal(e.to_string()),
    }
}

fn train_error(e: TrainError) -> CliError {
    match e {
        TrainError::Config(m) => CliError::Usage(m),
        TrainError::EmptyDataset => CliError::Data(e.to_string()),
        TrainError::Diverged { .. } | TrainError::Score(_) | TrainError::Candidates(_) => CliError::Internal(e.to_string()),
    }
}

fn render_error(e: RenderError) -> CliError {
    match e {
        RenderError::BadConfig(m) => CliError::Usage(m),
        RenderError::Io(m) => CliError::Data(m),
        other => CliError::Data(other.to_string()),
    }
}

/// Writes an artifact with its provenance and timestamp sidecars.
fn emit(path: &Path, bytes: &[u8], provenance: &Provenance) -> Result<(), CliError> {
    write_bytes(path, bytes)?;
    write_provenance(path, provenance)?;
    write_timestamp(path)
}

pub fn build_lexicon(a: BuildLexiconArgs, globals: FileConfig, file: FileConfig) -> Result<(), CliError> {
    let flags = FileConfig {
        strict: a.strict,
        ..FileConfig::default()
    };
    let run = resolve("build-lexicon", &a.corpus, Some(&a.output), flags, globals, file)?;
    let mut inputs = Inputs::default();
    let corpus = inputs.corpus(&a.corpus, run.strict)?;
    let lexicon = Lexicon::build(&corpus, parse_opts(&run)).map_err(|e| CliError::Data(e.to_string()))?;
    log::info!(
        "{} forms from {} tokens in {} sentences",
        lexicon.len(),
        lexicon.total_tokens(),
        corpus.len()
    );
    emit(&a.output, lexicon.to_text().as_bytes(), &Provenance::new(&run, &inputs.hashes))
}

pub fn candidates(a: CandidatesArgs, globals: FileConfig, file: FileConfig) -> Result<(), CliError> {
    let flags = FileConfig {
        k: a.k,
        c: a.c,
        ..FileConfig::default()
    };
    let mut input_paths = vec![a.lexicon.clone()];
    input_paths.extend(a.input.clone());
    let run = resolve("candidates", &input_paths, a.output.as_deref(), flags, globals, file)?;
    let mut inputs = Inputs::default();
    let lexicon = inputs.lexicon(&a.lexicon)?;
    let mut words = a.words.clone();
    if let Some(path) = &a.input {
        words.extend(inputs.text(path)?.split_whitespace().map(str::to_string));
    }
    let generator = CandidateGenerator::new(&lexicon);
    let mut out = String::new();
    for raw in &words {
        let query = Word::parse(raw)
            .map_err(|e| CliError::Data(format!("{raw:?}: {e}")))?
            .strip();
        match generator.generate(&query, run.k, run.c) {
            Ok(set) => {
                for (i, cand) in set.candidates.iter().enumerate() {
                    let _ = writeln!(out, "{query}\t{}\t{cand}\t{}", i + 1, cand.pattern().encode());
                }
            }
            Err(GenError::NoNeighbors(_)) => log::warn!("{query}: no lexicon word of the same length"),
            Err(e) => return Err(gen_error(e)),
        }
    }
    match &a.output {
        Some(path) => emit(path, out.as_bytes(), &Provenance::new(&run, &inputs.hashes)),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

pub fn coverage(a: CoverageArgs, globals: FileConfig, file: FileConfig) -> Result<(), CliError> {
    let flags = FileConfig {
        k_range: a.k_range,
        c_range: a.c_range,
        ..FileConfig::default()
    };
    let mut input_paths = vec![a.lexicon.clone()];
    input_paths.extend(a.test.iter().cloned());
    let run = resolve("coverage", &input_paths, a.output.as_deref(), flags, globals, file)?;
    let mut inputs = Inputs::default();
    let lexicon = inputs.lexicon(&a.lexicon)?;
    let test = inputs.corpus(&a.test, run.strict)?;
    let rows = evalkit::coverage_rows(&lexicon, &test, &run.k_range, &run.c_range);
    let csv = evalkit::coverage_csv(&rows);
    match &a.output {
        Some(path) => emit(path, csv.as_bytes(), &Provenance::new(&run, &inputs.hashes)),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

pub fn render(a: RenderArgs, globals: FileConfig, file: FileConfig) -> Result<(), CliError> {
    let flags = FileConfig {
        cell_height: a.cell_height,
        mirror: a.mirror,
        ..FileConfig::default()
    };
    let input_paths: Vec<PathBuf> = a.input.iter().cloned().collect();
    let run = resolve("render", &input_paths, Some(&a.output), flags, globals, file)?;
    let mut inputs = Inputs::default();
    let text = match (&a.text, &a.input) {
        (Some(t), _) => t.clone(),
        (None, Some(p)) => inputs.text(p)?.split_whitespace().collect::<Vec<_>>().join(" "),
        (None, None) => return Err(CliError::Usage("give --text or --input".into())),
    };
    let config = RenderConfig {
        cell_height: run.cell_height,
        advance_width: run.cell_height,
        mirror: run.mirror,
        ..RenderConfig::default()
    };
    let image = if a.truncate {
        render_instance(&text, &config).map_err(render_error)?
    } else {
        let img = render_text(&text, &config).map_err(render_error)?;
        if config.mirror {
            img.mirror()
        } else {
            img
        }
    };
    image.save(&a.output).map_err(render_error)?;
    let provenance = Provenance::new(&run, &inputs.hashes);
    write_provenance(&a.output, &provenance)?;
    write_timestamp(&a.output)
}

fn model_config(run: &RunConfig) -> Result<ModelConfig, CliError> {
    let aux: AuxMode = run.aux.parse().map_err(CliError::Usage)?;
    let config = ModelConfig {
        hidden: run.hidden,
        embed: run.embed,
        buckets: run.buckets,
        window_radius: run.window_radius,
        aux,
        render: RenderConfig {
            cell_height: run.cell_height,
            advance_width: run.cell_height,
            mirror: run.mirror,
            ..RenderConfig::default()
        },
        ..ModelConfig::default()
    };
    config.validate().map_err(CliError::Usage)?;
    Ok(config)
}

pub fn train(a: TrainArgs, globals: FileConfig, file: FileConfig) -> Result<(), CliError> {
    let flags = FileConfig {
        k: a.k,
        c: a.c,
        aux: a.aux,
        mirror: a.mirror,
        balanced: a.balanced,
        batch_size: a.batch_size,
        steps: a.steps,
        learning_rate: a.learning_rate,
        momentum: a.momentum,
        hidden: a.hidden,
        embed: a.embed,
        buckets: a.buckets,
        window_radius: a.window_radius,
        cell_height: a.cell_height,
        ..FileConfig::default()
    };
    let mut input_paths = a.corpus.clone();
    input_paths.extend(a.lexicon.clone());
    let run = resolve("train", &input_paths, Some(&a.output), flags, globals, file)?;
    let model_config = model_config(&run)?;
    let train_config = TrainConfig {
        steps: run.steps,
        batch_size: run.batch_size,
        learning_rate: run.learning_rate,
        momentum: run.momentum,
        seed: run.seed,
        balanced: run.balanced,
        k: run.k,
        c: run.c,
    };
    train_config.validate().map_err(train_error)?;
    let mut inputs = Inputs::default();
    let corpus = inputs.corpus(&a.corpus, run.strict)?;
    let lexicon = match &a.lexicon {
        Some(p) => inputs.lexicon(p)?,
        None => Lexicon::build(&corpus, parse_opts(&run)).map_err(|e| CliError::Data(e.to_string()))?,
    };
    let set = TrainingSet::new(corpus, &lexicon, &train_config).map_err(train_error)?;
    log::info!("{} training occurrences", set.len());
    let model = Model::init(model_config, run.seed);
    let mut trainer = Trainer::new(model, set, train_config).map_err(train_error)?;
    let mut trace = String::from("step,loss,accuracy\n");
    for _ in 0..run.steps {
        let row = trainer.step().map_err(train_error)?;
        let _ = writeln!(trace, "{},{},{}", row.step, row.loss, row.accuracy);
        if row.step % 100 == 0 {
            log::info!("step {} loss {:.4} accuracy {:.3}", row.step, row.loss, row.accuracy);
        }
    }
    let provenance = Provenance::new(&run, &inputs.hashes);
    let checkpoint = Checkpoint::new(trainer.into_model(), provenance.to_value());
    write_bytes(&a.output, checkpoint.to_text().as_bytes())?;
    write_timestamp(&a.output)?;
    let trace_path = a.trace.clone().unwrap_or_else(|| {
        let mut name = a.output.as_os_str().to_owned();
        name.push(".trace.csv");
        PathBuf::from(name)
    });
    emit(&trace_path, trace.as_bytes(), &provenance)
}

#[derive(Serialize)]
struct ReportFile<'a> {
    format: &'static str,
    report: &'a EvalReport,
    provenance: serde_json::Value,
}

fn write_report(report: &EvalReport, output: Option<&Path>, provenance: &Provenance) -> Result<(), CliError> {
    let table = EvalReport::table(std::slice::from_ref(report));
    print!("{table}");
    if let Some(path) = output {
        let file = ReportFile {
            format: "niqqud-report 1",
            report,
            provenance: provenance.to_value(),
        };
        let json = serde_json::to_string_pretty(&file).expect("report serializes");
        write_bytes(path, format!("{json}\n").as_bytes())?;
        write_timestamp(path)?;
        let mut name = path.as_os_str().to_owned();
        name.push(".txt");
        emit(Path::new(&name), table.as_bytes(), provenance)?;
    }
    Ok(())
}

pub fn evaluate(a: EvaluateArgs, globals: FileConfig, file: FileConfig) -> Result<(), CliError> {
    let flags = FileConfig {
        k: a.k,
        c: a.c,
        scheme: a.scheme.clone(),
        ..FileConfig::default()
    };
    let mut input_paths: Vec<PathBuf> = a.checkpoint.iter().chain(&a.lexicon).chain(&a.test).cloned().collect();
    input_paths.extend(a.gold.iter().chain(&a.predicted).cloned());
    input_paths.extend(a.voc_table.clone());
    let run = resolve("evaluate", &input_paths, a.output.as_deref(), flags, globals, file)?;
    let mut inputs = Inputs::default();
    let report = if let (Some(gold), Some(pred)) = (&a.gold, &a.predicted) {
        let (g, p) = (inputs.text(gold)?, inputs.text(pred)?);
        let voc = voc_table(a.voc_table.as_deref(), &mut inputs)?;
        let name = pred.file_stem().map_or("predicted".into(), |s| s.to_string_lossy().into_owned());
        evalkit::evaluate_texts(&g, &p, &name, &voc).map_err(eval_error)?
    } else {
        let scheme: Scheme = run.scheme.parse().map_err(CliError::Usage)?;
        if scheme == Scheme::External {
            return Err(CliError::Usage("external evaluation takes --gold and --predicted".into()));
        }
        let (Some(ckpt), Some(lex)) = (&a.checkpoint, &a.lexicon) else {
            return Err(CliError::Usage("--checkpoint and --lexicon are required".into()));
        };
        let text = inputs.text(ckpt)?;
        let model = Checkpoint::from_text(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", ckpt.display())))?
            .model;
        let lexicon = inputs.lexicon(lex)?;
        let test = inputs.corpus(&a.test, run.strict)?;
        let voc = voc_table(a.voc_table.as_deref(), &mut inputs)?;
        evalkit::run_scheme(scheme, &model, &lexicon, &test, run.k, run.c, &voc).map_err(eval_error)?
    };
    write_report(&report, a.output.as_deref(), &Provenance::new(&run, &inputs.hashes))
}

pub fn baseline(a: BaselineArgs, globals: FileConfig, file: FileConfig) -> Result<(), CliError> {
    let kind: Baseline = a.kind.parse().map_err(CliError::Usage)?;
    let mut input_paths = vec![a.lexicon.clone()];
    input_paths.extend(a.test.iter().cloned());
    input_paths.extend(a.voc_table.clone());
    let run = resolve(
        &format!("baseline {}", a.kind),
        &input_paths,
        a.output.as_deref(),
        FileConfig::default(),
        globals,
        file,
    )?;
    let mut inputs = Inputs::default();
    let lexicon = inputs.lexicon(&a.lexicon)?;
    let test = inputs.corpus(&a.test, run.strict)?;
    let voc = voc_table(a.voc_table.as_deref(), &mut inputs)?;
    let report = evalkit::run_baseline(kind, &lexicon, &test, &voc).map_err(eval_error)?;
    write_report(&report, a.output.as_deref(), &Provenance::new(&run, &inputs.hashes))
}
