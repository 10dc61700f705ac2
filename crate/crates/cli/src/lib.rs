//! Experiment orchestration for the `cpnn` binary: configuration, multi-seed runs, result files
//! and the significance report.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cpnn::io::{self as files, RunRecords, SummaryRow};
use cpnn::prequential::run_stream;
use cpnn::seed::{generator_seed, model_seed, rng_from_seed};
use cpnn::streamgen::generate_scenario;
use cpnn::{DriftScenario, Error, Mode, ProgressiveNet, TrainConfig, WalkConfig};
use rayon::prelude::*;

#[derive(Debug, Parser)]
#[command(name = "cpnn", version, about = "Prequential experiments with continuous progressive neural networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every (seed, mode) cell and write records, summary and report.
    Run(RunArgs),
    /// Build the significance report from one or more summary files.
    Report(ReportArgs),
    /// Write the stream of one seed as CSV.
    Generate(GenerateArgs),
}

/// Flags shared by `run` and `generate`. Unset flags fall back to the config file, then to the
/// defaults.
#[derive(Debug, Args, Default, Clone)]
pub struct ExperimentArgs {
    /// `key=value` file; keys are the long flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated concept functions, e.g. `s1+,s1-`.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Comma-separated subset of cpnn,clstm,mclstm.
    #[arg(long)]
    pub modes: Option<String>,
    /// Root seeds, e.g. `1..10` or `1,4,7`.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub points_per_concept: Option<usize>,
    #[arg(long)]
    pub step_max: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Output directory.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Parallel (seed, mode) cells; defaults to the number of CPUs.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Also write the stream of every seed.
    #[arg(long)]
    pub dump_streams: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Summary CSV files.
    #[arg(required = true)]
    pub summaries: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Root seed of the stream.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Fully resolved experiment settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: DriftScenario,
    pub modes: Vec<Mode>,
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
    pub hidden: usize,
    pub step_max: f64,
    pub alpha: f64,
}

/// Failure of a CLI command, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or unusable paths (exit 2).
    Config(String),
    /// Non-finite values during training (exit 3).
    Numerical(String),
    /// Anything else (exit 1).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Numerical(_) => ExitCode::from(3),
            CliError::Runtime(_) => ExitCode::from(1),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) => CliError::Numerical(e.to_string()),
            Error::Generation(_) | Error::FrozenColumn | Error::BatchTooShort { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses `1..10` (inclusive), `3`, `1,2,5` or combinations like `1..3,7`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, CliError> {
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |s: &str| s.trim().parse::<u64>().map_err(|_| config_err(format!("bad seed `{s}`")));
        match part.split_once("..") {
            Some((lo, hi)) => {
                let (lo, hi) = (num(lo)?, num(hi.trim_start_matches('='))?);
                if lo > hi {
                    return Err(config_err(format!("empty seed range `{part}`")));
                }
                seeds.extend(lo..=hi);
            }
            None => seeds.push(num(part)?),
        }
    }
    if seeds.is_empty() {
        return Err(config_err("no seeds given"));
    }
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != seeds.len() {
        return Err(config_err("seeds must be distinct"));
    }
    Ok(seeds)
}

pub fn parse_modes(text: &str) -> Result<Vec<Mode>, CliError> {
    let modes = text
        .split(',')
        .map(str::trim)
        .filter(|m| !m.is_empty())
        .map(|m| m.parse::<Mode>().map_err(CliError::from))
        .collect::<Result<Vec<_>, _>>()?;
    if modes.is_empty() {
        return Err(config_err("no modes given"));
    }
    let mut unique = modes.clone();
    unique.sort();
    unique.dedup();
    if unique.len() != modes.len() {
        return Err(config_err("modes must be distinct"));
    }
    Ok(modes)
}

/// Reads a `key=value` file. Blank lines and `#` comments are ignored; `_` and `-` are
/// interchangeable in keys.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("{}:{}: expected key=value", path.display(), n + 1)))?;
        map.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(map)
}

const CONFIG_KEYS: [&str; 11] = [
    "scenario",
    "modes",
    "seeds",
    "batch-size",
    "window",
    "epochs",
    "lr",
    "hidden",
    "points-per-concept",
    "step-max",
    "alpha",
];

impl ExperimentArgs {
    /// Merges flags over the config file over the defaults and validates the result.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let file = match &self.config {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        if let Some(k) = file.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(config_err(format!("unknown config key `{k}`")));
        }
        fn pick<T: std::str::FromStr>(
            flag: Option<T>,
            file: &BTreeMap<String, String>,
            key: &str,
            default: T,
        ) -> Result<T, CliError> {
            if let Some(v) = flag {
                return Ok(v);
            }
            match file.get(key) {
                Some(raw) => raw.parse().map_err(|_| config_err(format!("bad value `{raw}` for {key}"))),
                None => Ok(default),
            }
        }
        let defaults = TrainConfig::default();
        let scenario_text = pick(self.scenario.clone(), &file, "scenario", "s1+,s1-".to_string())?;
        let modes_text = pick(self.modes.clone(), &file, "modes", "cpnn,clstm,mclstm".to_string())?;
        let seeds_text = pick(self.seeds.clone(), &file, "seeds", "1..10".to_string())?;
        let train = TrainConfig {
            batch_size: pick(self.batch_size, &file, "batch-size", defaults.batch_size)?,
            window: pick(self.window, &file, "window", defaults.window)?,
            epochs: pick(self.epochs, &file, "epochs", defaults.epochs)?,
            lr: pick(self.lr, &file, "lr", defaults.lr)?,
        };
        let ppc = pick(self.points_per_concept, &file, "points-per-concept", 50_000)?;
        let cfg = ExperimentConfig {
            scenario: DriftScenario::parse(&scenario_text, ppc)?,
            modes: parse_modes(&modes_text)?,
            seeds: parse_seeds(&seeds_text)?,
            train,
            hidden: pick(self.hidden, &file, "hidden", 50)?,
            step_max: pick(self.step_max, &file, "step-max", WalkConfig::DEFAULT_STEP_MAX)?,
            alpha: pick(self.alpha, &file, "alpha", 0.05)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.train;
        if t.window == 0 || t.window > t.batch_size {
            return Err(config_err(format!("window must be in 1..=batch-size, got {}", t.window)));
        }
        if t.epochs == 0 {
            return Err(config_err("epochs must be at least 1"));
        }
        if !(t.lr > 0.0 && t.lr.is_finite()) {
            return Err(config_err("lr must be positive"));
        }
        if self.hidden == 0 {
            return Err(config_err("hidden must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(config_err("alpha must be in (0, 1)"));
        }
        self.walk(0).validate()?;
        Ok(())
    }

    /// Walk settings of the stream shared by every mode of `seed`.
    pub fn walk(&self, seed: u64) -> WalkConfig {
        WalkConfig { step_max: self.step_max, ..WalkConfig::new(generator_seed(seed, &self.scenario.spec())) }
    }

    /// The `key=value` pairs embedded in every output file.
    pub fn header(&self) -> Vec<(String, String)> {
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let modes: Vec<&str> = self.modes.iter().map(|m| m.as_str()).collect();
        [
            ("scenario", self.scenario.spec()),
            ("modes", modes.join(",")),
            ("seeds", seeds.join(",")),
            ("batch-size", self.train.batch_size.to_string()),
            ("window", self.train.window.to_string()),
            ("epochs", self.train.epochs.to_string()),
            ("lr", self.train.lr.to_string()),
            ("hidden", self.hidden.to_string()),
            ("points-per-concept", self.scenario.points_per_concept().to_string()),
            ("step-max", self.step_max.to_string()),
            ("alpha", self.alpha.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

/// Runs one (seed, mode) cell.
pub fn run_cell(cfg: &ExperimentConfig, seed: u64, mode: Mode) -> Result<RunRecords, CliError> {
    let stream = generate_scenario(&cfg.scenario, &cfg.walk(seed))?;
    let mut net = ProgressiveNet::new(mode, cfg.hidden, rng_from_seed(model_seed(seed, mode.as_str())));
    let records = run_stream(&mut net, stream, &cfg.train)
        .map_err(|e| match e {
            Error::Numerical(m) => CliError::Numerical(format!("seed {seed}, mode {mode}: {m}")),
            other => other.into(),
        })?;
    Ok(RunRecords { seed, mode, scenario: cfg.scenario.spec(), records })
}

pub fn record_path(out: &Path, seed: u64, mode: Mode) -> PathBuf {
    out.join("records").join(format!("seed{seed}-{mode}.csv"))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, CliError> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| config_err(format!("cannot write {}: {e}", path.display())))
}

fn write_err(path: &Path) -> impl Fn(Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("writing {}: {e}", path.display()))
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct RunOutputs {
    pub records: Vec<PathBuf>,
    pub summary: PathBuf,
    pub report: PathBuf,
}

/// Runs every (seed, mode) cell on up to `workers` threads, then writes the summary and report.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, workers: Option<usize>, dump_streams: bool) -> Result<RunOutputs, CliError> {
    let header = cfg.header();
    fs::create_dir_all(out.join("records")).map_err(|e| config_err(format!("cannot create {}: {e}", out.display())))?;
    if dump_streams {
        fs::create_dir_all(out.join("streams")).map_err(|e| config_err(format!("cannot create {}: {e}", out.display())))?;
        for &seed in &cfg.seeds {
            let path = out.join("streams").join(format!("seed{seed}.csv"));
            let stream = generate_scenario(&cfg.scenario, &cfg.walk(seed))?;
            files::write_stream(create(&path)?, &header, &stream).map_err(write_err(&path))?;
        }
    }

    let cells: Vec<(u64, Mode)> = cfg.seeds.iter().flat_map(|&s| cfg.modes.iter().map(move |&m| (s, m))).collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(config_err("workers must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Runtime(e.to_string()))?;
    let runs: Vec<(PathBuf, RunRecords)> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(seed, mode)| {
                let run = run_cell(cfg, seed, mode)?;
                let path = record_path(out, seed, mode);
                files::write_records(create(&path)?, &header, &run).map_err(write_err(&path))?;
                Ok((path, run))
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;

    let rows: Vec<SummaryRow> = runs.iter().flat_map(|(_, run)| files::summarize(run)).collect();
    let summary = out.join("summary.csv");
    files::write_summary(create(&summary)?, &header, &rows).map_err(write_err(&summary))?;
    let report = out.join("report.txt");
    let text = files::render_report(&rows, cfg.alpha)?;
    write_text(&report, &header, &text)?;
    Ok(RunOutputs { records: runs.into_iter().map(|(p, _)| p).collect(), summary, report })
}

fn write_text(path: &Path, header: &[(String, String)], body: &str) -> Result<(), CliError> {
    let mut w = create(path)?;
    files::write_config_header(&mut w, header).map_err(write_err(path))?;
    std::io::Write::write_all(&mut w, body.as_bytes())
        .and_then(|_| std::io::Write::flush(&mut w))
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))
}

/// Builds the report from summary files.
pub fn report_from_files(paths: &[PathBuf], alpha: f64) -> Result<String, CliError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(config_err("alpha must be in (0, 1)"));
    }
    let mut rows = Vec::new();
    for p in paths {
        let file = fs::File::open(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?;
        rows.extend(files::read_summary(std::io::BufReader::new(file))?);
    }
    Ok(files::render_report(&rows, alpha)?)
}

/// Entry point shared by the binary and the tests.
pub fn execute(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.experiment.resolve()?;
            let outputs = run_experiment(&cfg, &args.out, args.workers, args.dump_streams)?;
            Ok(format!(
                "wrote {} record files, {} and {}",
                outputs.records.len(),
                outputs.summary.display(),
                outputs.report.display()
            ))
        }
        Command::Report(args) => {
            let text = report_from_files(&args.summaries, args.alpha)?;
            match &args.out {
                Some(path) => {
                    write_text(path, &[("alpha".to_string(), args.alpha.to_string())], &text)?;
                    Ok(format!("wrote {}", path.display()))
                }
                None => Ok(text),
            }
        }
        Command::Generate(args) => {
            let cfg = args.experiment.resolve()?;
            let stream = generate_scenario(&cfg.scenario, &cfg.walk(args.seed))?;
            let mut header = cfg.header();
            header.retain(|(k, _)| matches!(k.as_str(), "scenario" | "points-per-concept" | "step-max"));
            header.push(("seed".into(), args.seed.to_string()));
            files::write_stream(create(&args.out)?, &header, &stream).map_err(write_err(&args.out))?;
            Ok(format!("wrote {} points to {}", stream.len(), args.out.display()))
        }
    }
}
