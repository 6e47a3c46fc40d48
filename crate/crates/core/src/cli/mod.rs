//! Command-line interface.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 reader or filesystem error.

pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bench::{
    emit_par_curve, emit_record_curves, evaluate_par, gen_corpus, latency_bench, BenchComponent,
    EvalSetup, NoiseProfile, ParResult, Policy, SyntheticKind, SyntheticTaskConfig,
};
use crate::compressor::TopKCompressor;
use crate::error::Error;
use crate::io::{read_json, read_jsonl, JsonlWriter, OutputMeta};
use crate::pipeline::{
    check_metric_consistency, collect_calibration, poc_compress, CalibrationRecord, CollectConfig,
    DatasetRecord, ReaderKind,
};
use crate::predictor::{
    calibrate_agnostic, common_ratios, train_aware, AgnosticPredictor, AwarePredictorModel,
    PredictorKind, RetentionPredictor, TrainingSample,
};
use crate::text::{tokenize, ImportanceConfig, ImportanceScorer};
use config::{load_config, ConfigError, Override, PolicyKind, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_EXTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "poc", version, about = "Compress long contexts under a performance floor")]
pub struct Cli {
    /// TOML config file; flags override it and POC_<SECTION>_<KEY> variables override flags.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Random seed (required by `gen`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for collection and evaluation.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset (JSONL).
    Gen(GenArgs),
    /// Measure retention curves with a reader and write calibration JSONL.
    Collect(CollectArgs),
    /// Fit the context-agnostic predictor on calibration data.
    Calibrate(CalibrateArgs),
    /// Train the context-aware predictor on calibration data.
    Train(TrainArgs),
    /// Compress one text file under a performance floor.
    Compress(CompressArgs),
    /// Sweep floors over a dataset and report the area under the curve.
    Evaluate(EvaluateArgs),
    /// Export performance-compression curves as CSV.
    Curves(CurvesArgs),
    /// Time the predictor, compressor and pipeline on one chunk.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// needle-qa, coverage-summ or distractor.
    #[arg(long)]
    pub kind: Option<String>,
    /// Number of records.
    #[arg(long)]
    pub count: Option<usize>,
    /// Tokens per context.
    #[arg(long)]
    pub context_length: Option<usize>,
    /// Output JSONL path.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CollectArgs {
    /// Dataset JSONL.
    #[arg(long, value_name = "PATH")]
    pub dataset: Option<PathBuf>,
    /// Calibration JSONL; appended to if it exists.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// synthetic-needle, synthetic-coverage or http; inferred from the dataset tag if omitted.
    #[arg(long)]
    pub reader: Option<String>,
    /// Reader endpoint URL for the http reader.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// grid or uniform.
    #[arg(long)]
    pub sampler: Option<String>,
    /// Number of sampled ratios per record (r = 1 is always added).
    #[arg(long)]
    pub ratios: Option<usize>,
    /// f1, em or rouge_geo.
    #[arg(long)]
    pub metric: Option<String>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Calibration JSONL.
    #[arg(long, value_name = "PATH")]
    pub calibration: Option<PathBuf>,
    /// Output model JSON.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Calibration JSONL.
    #[arg(long, value_name = "PATH")]
    pub calibration: Option<PathBuf>,
    /// Output model JSON.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Training log JSON.
    #[arg(long, value_name = "PATH")]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    /// Text file to compress.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Performance floor in [0, 1].
    #[arg(long)]
    pub floor: Option<f64>,
    /// agnostic or aware.
    #[arg(long)]
    pub predictor: Option<String>,
    /// Predictor model JSON.
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// Compressed text output; stdout if omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Per-chunk report JSON.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Dataset JSONL.
    #[arg(long, value_name = "PATH")]
    pub dataset: Option<PathBuf>,
    /// poc or fixed-ratio.
    #[arg(long)]
    pub policy: Option<String>,
    /// agnostic or aware (poc policy).
    #[arg(long)]
    pub predictor: Option<String>,
    /// Predictor model JSON (poc policy).
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// Comma-separated floors (or ratios for fixed-ratio).
    #[arg(long, value_delimiter = ',')]
    pub floors: Option<Vec<f64>>,
    /// Reader kind; inferred from the dataset tag if omitted.
    #[arg(long)]
    pub reader: Option<String>,
    /// Reader endpoint URL for the http reader.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// f1, em or rouge_geo.
    #[arg(long)]
    pub metric: Option<String>,
    /// Result JSON; stdout if omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// Calibration JSONL to export per-tag mean and sample curves from.
    #[arg(long, value_name = "PATH")]
    pub calibration: Option<PathBuf>,
    /// Result JSON written by `evaluate`.
    #[arg(long, value_name = "PATH")]
    pub par: Option<PathBuf>,
    /// Name prefix for the `--par` curve file.
    #[arg(long, default_value = "eval")]
    pub tag: String,
    /// Per-tag number of sample curves.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// predictor, compressor or pipeline; all three if omitted.
    #[arg(long)]
    pub component: Option<String>,
    /// Timed runs per component.
    #[arg(long)]
    pub runs: Option<usize>,
    /// agnostic or aware.
    #[arg(long)]
    pub predictor: Option<String>,
    /// Predictor model JSON; a freshly initialized aware model if omitted.
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// Result JSON; stdout if omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            e if e.is_external() => EXIT_EXTERNAL,
            Error::InvalidFloor(_) | Error::InvalidConfig(_) | Error::InvalidTask(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        let code = match e {
            ConfigError::Read { .. } => EXIT_EXTERNAL,
            ConfigError::Parse(_) => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match dispatch(cli, |k| std::env::var(k).ok()) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

struct Overrides(Vec<Override>);

impl Overrides {
    fn set<V: Into<toml::Value>>(&mut self, key: &str, v: Option<V>) {
        if let Some(v) = v {
            self.0.push((key.to_owned(), v.into()));
        }
    }

    fn path(&mut self, key: &str, p: &Option<PathBuf>) {
        self.set(key, p.as_ref().map(|p| p.to_string_lossy().into_owned()));
    }

    fn int(&mut self, key: &str, v: Option<u64>) {
        self.set(key, v.map(|v| v as i64));
    }
}

fn overrides(cli: &Cli) -> Overrides {
    let mut o = Overrides(Vec::new());
    o.int("seed", cli.seed);
    o.int("workers", cli.workers.map(|w| w as u64));
    match &cli.command {
        Command::Gen(a) => {
            o.set("gen.kind", a.kind.clone());
            o.int("gen.count", a.count.map(|v| v as u64));
            o.int("gen.context_length", a.context_length.map(|v| v as u64));
            o.path("paths.output", &a.out);
        }
        Command::Collect(a) => {
            o.path("paths.dataset", &a.dataset);
            o.path("paths.output", &a.out);
            o.set("reader.kind", a.reader.clone());
            o.set("reader.endpoint", a.endpoint.clone());
            o.set("collect.sampler", a.sampler.clone());
            o.int("collect.ratios", a.ratios.map(|v| v as u64));
            o.set("collect.metric", a.metric.clone());
        }
        Command::Calibrate(a) => {
            o.path("paths.calibration", &a.calibration);
            o.path("paths.output", &a.out);
        }
        Command::Train(a) => {
            o.path("paths.calibration", &a.calibration);
            o.path("paths.output", &a.out);
            o.int("train.epochs", a.epochs.map(|v| v as u64));
            o.set("train.learning_rate", a.learning_rate);
            o.int("train.batch_size", a.batch_size.map(|v| v as u64));
            o.int("train.hidden", a.hidden.map(|v| v as u64));
        }
        Command::Compress(a) => {
            o.path("paths.dataset", &a.input);
            o.path("paths.model", &a.model);
            o.path("paths.output", &a.out);
            o.set("predictor.floor", a.floor);
            o.set("predictor.kind", a.predictor.clone());
        }
        Command::Evaluate(a) => {
            o.path("paths.dataset", &a.dataset);
            o.path("paths.model", &a.model);
            o.path("paths.output", &a.out);
            o.set("evaluate.policy", a.policy.clone());
            o.set("predictor.kind", a.predictor.clone());
            o.set("evaluate.floors", a.floors.clone());
            o.set("reader.kind", a.reader.clone());
            o.set("reader.endpoint", a.endpoint.clone());
            o.set("collect.metric", a.metric.clone());
        }
        Command::Curves(a) => {
            o.path("paths.calibration", &a.calibration);
            o.path("paths.output", &a.out_dir);
            o.int("curves.samples", a.samples.map(|v| v as u64));
        }
        Command::Bench(a) => {
            o.path("paths.model", &a.model);
            o.path("paths.output", &a.out);
            o.set("predictor.kind", a.predictor.clone());
            o.int("bench.runs", a.runs.map(|v| v as u64));
        }
    }
    o
}

/// Runs a parsed command. `env` supplies environment lookups for config
/// overrides.
pub fn dispatch<E>(cli: Cli, env: E) -> CliResult
where
    E: Fn(&str) -> Option<String>,
{
    let flags = overrides(&cli);
    let config = load_config(cli.config.as_deref(), &flags.0, env)?;
    if config.workers == 0 {
        return Err(CliError::usage("workers must be at least 1"));
    }
    let meta = OutputMeta::new(config.hash(), config.seed);
    match &cli.command {
        Command::Gen(_) => cmd_gen(&config, &meta),
        Command::Collect(_) => cmd_collect(&config, &meta),
        Command::Calibrate(_) => cmd_calibrate(&config, &meta),
        Command::Train(a) => cmd_train(&config, &meta, a.log.as_deref()),
        Command::Compress(a) => cmd_compress(&config, &meta, a.report.as_deref()),
        Command::Evaluate(_) => cmd_evaluate(&config, &meta),
        Command::Curves(a) => cmd_curves(&config, &meta, a.par.as_deref(), &a.tag),
        Command::Bench(a) => cmd_bench(&config, &meta, a.component.as_deref()),
    }
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    p.as_deref()
        .ok_or_else(|| CliError::usage(format!("missing required --{flag}")))
}

#[derive(Serialize)]
struct WithMeta<'a, T: Serialize> {
    meta: &'a OutputMeta,
    #[serde(flatten)]
    body: &'a T,
}

fn write_output<T: Serialize>(path: Option<&Path>, meta: &OutputMeta, body: &T) -> CliResult {
    let json = serde_json::to_string_pretty(&WithMeta { meta, body }).map_err(Error::from)? + "\n";
    match path {
        Some(p) => std::fs::write(p, json).map_err(|e| Error::io(p, e))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(json.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))?;
        }
    }
    Ok(())
}

fn build_compressor(config: &RunConfig) -> TopKCompressor {
    let scorer = ImportanceScorer::new(ImportanceConfig {
        position_weight: config.compressor.position_weight,
        ..ImportanceConfig::default()
    });
    TopKCompressor::new(scorer, config.compressor.chunk_size)
}

fn load_predictor(config: &RunConfig) -> CliResult<Box<dyn RetentionPredictor>> {
    let path = required(&config.paths.model, "model")?;
    Ok(match config.predictor.kind {
        PredictorKind::Agnostic => Box::new(AgnosticPredictor::load(path)?),
        PredictorKind::Aware => Box::new(AwarePredictorModel::load(path)?),
    })
}

fn reader_kind(config: &RunConfig, dataset: &[DatasetRecord]) -> CliResult<ReaderKind> {
    if let Some(k) = config.reader.kind {
        return Ok(k);
    }
    dataset
        .first()
        .and_then(|r| r.tag.parse::<SyntheticKind>().ok())
        .map(SyntheticKind::reader)
        .ok_or_else(|| CliError::usage("cannot infer the reader from the dataset; pass --reader"))
}

fn cmd_gen(config: &RunConfig, meta: &OutputMeta) -> CliResult {
    let seed = config
        .seed
        .ok_or_else(|| CliError::usage("gen requires --seed"))?;
    let out = required(&config.paths.output, "out")?;
    let g = &config.gen;
    let defaults = g.kind.default_noise();
    let base = SyntheticTaskConfig {
        kind: g.kind,
        context_length: g.context_length,
        chunk_size: config.compressor.chunk_size,
        needle_tokens: g.needle_tokens,
        needle_position: g.needle_position,
        salient_fraction: g.salient_fraction,
        decoys: g.decoys,
        noise: NoiseProfile {
            competitor_fraction: g.competitor_fraction.unwrap_or(defaults.competitor_fraction),
            stop_fraction: g.stop_fraction.unwrap_or(defaults.stop_fraction),
        },
        seed,
    };
    let records = gen_corpus(&base, g.count, seed)?;
    let mut w = JsonlWriter::create(out, meta)?;
    for r in &records {
        w.write(r)?;
    }
    w.flush()?;
    eprintln!("wrote {} records to {}", records.len(), out.display());
    Ok(())
}

fn cmd_collect(config: &RunConfig, meta: &OutputMeta) -> CliResult {
    let dataset_path = required(&config.paths.dataset, "dataset")?;
    let out = required(&config.paths.output, "out")?;
    let dataset: Vec<DatasetRecord> = read_jsonl(dataset_path)?;
    let reader = config
        .reader
        .to_config(reader_kind(config, &dataset)?)
        .build()
        .map_err(|e| CliError::usage(e.to_string()))?;
    let compressor = build_compressor(config);
    let collect = CollectConfig {
        sampler: config.collect.sampler(config.seed.unwrap_or(0)),
        anchor_zero: config.collect.anchor_zero,
        metric: config.collect.metric,
        workers: config.workers,
    };
    let summary = collect_calibration(&dataset, &collect, &compressor, reader.as_ref(), out, meta)?;
    eprintln!(
        "{}",
        serde_json::to_string(&summary).map_err(Error::from)?
    );
    if summary.written == 0 && !summary.failed.is_empty() {
        return Err(CliError {
            code: EXIT_EXTERNAL,
            message: format!("all {} records failed", summary.failed.len()),
        });
    }
    Ok(())
}

fn load_calibration(config: &RunConfig) -> CliResult<Vec<CalibrationRecord>> {
    let path = required(&config.paths.calibration, "calibration")?;
    let records: Vec<CalibrationRecord> = read_jsonl(path)?;
    if records.is_empty() {
        return Err(Error::EmptyInput("calibration records").into());
    }
    for r in &records {
        r.validate()?;
    }
    check_metric_consistency(&records)?;
    Ok(records)
}

fn dataset_id(records: &[CalibrationRecord]) -> String {
    let mut tags: Vec<&str> = records.iter().map(|r| r.dataset_tag.as_str()).collect();
    tags.sort_unstable();
    tags.dedup();
    tags.join("+")
}

fn cmd_calibrate(config: &RunConfig, meta: &OutputMeta) -> CliResult {
    let records = load_calibration(config)?;
    let out = required(&config.paths.output, "out")?;
    let knots = common_ratios(&records);
    let predictor = calibrate_agnostic(&records, &knots, &dataset_id(&records))?;
    write_output(Some(out), meta, &predictor)
}

fn cmd_train(config: &RunConfig, meta: &OutputMeta, log_path: Option<&Path>) -> CliResult {
    let records = load_calibration(config)?;
    let out = required(&config.paths.output, "out")?;
    let samples: Vec<TrainingSample> = records.iter().map(CalibrationRecord::to_training_sample).collect();
    let mut train = config.train.clone();
    if let Some(s) = config.seed {
        train.seed = s;
    }
    let (model, log) = train_aware(&samples, &train)?;
    write_output(Some(out), meta, &model)?;
    if let Some(p) = log_path {
        write_output(Some(p), meta, &log)?;
    }
    eprintln!(
        "best epoch {} with validation PPE {:.6}",
        log.best_epoch, log.best_score
    );
    Ok(())
}

fn cmd_compress(config: &RunConfig, meta: &OutputMeta, report_path: Option<&Path>) -> CliResult {
    let floor = config
        .predictor
        .floor
        .ok_or_else(|| CliError::usage("missing required --floor"))?;
    if !(0.0..=1.0).contains(&floor) {
        return Err(CliError::usage(format!(
            "floor {floor} is outside the valid range [0, 1]"
        )));
    }
    let input = required(&config.paths.dataset, "input")?;
    let text = std::fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    let predictor = load_predictor(config)?;
    let compressor = build_compressor(config);
    let (compressed, report) = poc_compress(&tokenize(&text), floor, predictor.as_ref(), &compressor)?;
    let body = compressed.text() + "\n";
    match &config.paths.output {
        Some(p) => std::fs::write(p, &body).map_err(|e| Error::io(p, e))?,
        None => std::io::stdout()
            .lock()
            .write_all(body.as_bytes())
            .map_err(|e| Error::io("<stdout>", e))?,
    }
    if let Some(p) = report_path {
        write_output(Some(p), meta, &report)?;
    }
    eprintln!(
        "kept {} of {} tokens (ratio {:.4})",
        report.kept_tokens, report.total_tokens, report.overall_ratio
    );
    Ok(())
}

fn cmd_evaluate(config: &RunConfig, meta: &OutputMeta) -> CliResult {
    let dataset_path = required(&config.paths.dataset, "dataset")?;
    let dataset: Vec<DatasetRecord> = read_jsonl(dataset_path)?;
    let reader = config
        .reader
        .to_config(reader_kind(config, &dataset)?)
        .build()
        .map_err(|e| CliError::usage(e.to_string()))?;
    let compressor = build_compressor(config);
    let setup = EvalSetup {
        compressor: &compressor,
        reader: reader.as_ref(),
        metric: config.collect.metric,
        workers: config.workers,
    };
    let predictor;
    let policy = match config.evaluate.policy {
        PolicyKind::Poc => {
            predictor = load_predictor(config)?;
            Policy::Poc(predictor.as_ref())
        }
        PolicyKind::FixedRatio => Policy::FixedRatio,
    };
    let result = evaluate_par(policy, &dataset, &config.evaluate.floors, &setup)?;
    eprintln!("{} P@R = {:.6}", result.policy, result.par_value);
    write_output(config.paths.output.as_deref(), meta, &result)
}

fn cmd_curves(config: &RunConfig, meta: &OutputMeta, par: Option<&Path>, tag: &str) -> CliResult {
    let dir = required(&config.paths.output, "out-dir")?;
    if config.paths.calibration.is_none() && par.is_none() {
        return Err(CliError::usage("curves needs --calibration and/or --par"));
    }
    let mut written = Vec::new();
    if config.paths.calibration.is_some() {
        let records = load_calibration(config)?;
        written.extend(emit_record_curves(
            &records,
            dir,
            config.curves.samples,
            config.seed.unwrap_or(0),
            meta,
        )?);
    }
    if let Some(p) = par {
        let result: ParResult = read_json(p)?;
        written.push(emit_par_curve(&result, dir, tag, meta)?);
    }
    for w in written {
        eprintln!("wrote {}", w.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct BenchReport {
    chunk_tokens: usize,
    predictor_kind: PredictorKind,
    floor: f64,
    results: Vec<crate::bench::LatencyStats>,
    hardware_note: String,
}

fn hardware_note() -> String {
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{}-{}, {cpus} logical CPUs available; single-threaded wall clock, {} build",
        std::env::consts::OS,
        std::env::consts::ARCH,
        if cfg!(debug_assertions) { "debug" } else { "release" }
    )
}

fn cmd_bench(config: &RunConfig, meta: &OutputMeta, component: Option<&str>) -> CliResult {
    let components = match component {
        None | Some("all") => vec![
            BenchComponent::Predictor,
            BenchComponent::Compressor,
            BenchComponent::Pipeline,
        ],
        Some(c) => vec![c.parse::<BenchComponent>().map_err(CliError::usage)?],
    };
    let seed = config.seed.unwrap_or(0);
    let predictor: Box<dyn RetentionPredictor> = if config.paths.model.is_some() {
        load_predictor(config)?
    } else {
        Box::new(AwarePredictorModel::init(config.train.hidden, seed))
    };
    let compressor = build_compressor(config);
    let task = SyntheticTaskConfig {
        context_length: config.bench.chunk_tokens,
        chunk_size: config.bench.chunk_tokens,
        seed,
        ..SyntheticTaskConfig::new(SyntheticKind::NeedleQa)
    };
    let record = crate::bench::gen_synthetic(&task)?;
    let ctx = tokenize(&record.context);
    let mut results = Vec::new();
    for c in components {
        results.push(latency_bench(
            c,
            &ctx,
            config.bench.runs,
            predictor.as_ref(),
            &compressor,
            config.bench.floor,
        )?);
    }
    let report = BenchReport {
        chunk_tokens: config.bench.chunk_tokens,
        predictor_kind: predictor.kind(),
        floor: config.bench.floor,
        results,
        hardware_note: hardware_note(),
    };
    write_output(config.paths.output.as_deref(), meta, &report)
}
