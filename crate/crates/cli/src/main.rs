//! Command-line front end: load XES/CSV event logs, train activity
//! embeddings, anonymize to k-anonymity and t-closeness, evaluate utility
//! loss, and run the full (measure, k, t) experiment sweep.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use logsan::distance::{DistanceMeasure, MeasureKind, Penalties};
use logsan::embedding::{train_act2vec, EmbeddingModel, EventDistanceTable, TrainConfig};
use logsan::eventlog::{parse_csv, parse_xes, write_csv, write_xes, CsvColumns, EventLog};
use logsan::metrics;
use logsan::pretsa::{anonymize, AnonymizationReport, PrivacyParams};
use logsan::sweep::{
    comparison_rows, run_sweep, write_comparison_csv, write_sweep_csv, write_timings_csv,
    SweepConfig,
};

/// Environment variable naming a directory in which relative input paths are
/// looked up when they do not resolve from the working directory.
const DATA_DIR_VAR: &str = "LOGSAN_DATA_DIR";

enum CliError {
    /// Wrong invocation (missing/invalid flags, bad config file) → exit 1.
    Usage(String),
    /// The invocation was fine but the data was not → exit 2.
    Data(String),
}

impl From<logsan::Error> for CliError {
    fn from(e: logsan::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "logsan",
    version,
    about = "Anonymize business-process event logs to k-anonymity and t-closeness \
             by merging similar traces, and measure the utility lost doing so."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print descriptive statistics of an event log.
    Stats {
        #[command(flatten)]
        io: IoOpts,
    },
    /// Learn activity embeddings from a log and save the model file.
    Train {
        #[command(flatten)]
        io: IoOpts,
        #[command(flatten)]
        train: TrainOpts,
        /// Where to write the model file.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Also export the input vectors as a CSV table.
        #[arg(long, value_name = "PATH")]
        export_csv: Option<PathBuf>,
    },
    /// Anonymize a log so every variant has at least k traces and group
    /// duration distributions stay within t of the population.
    Anonymize {
        #[command(flatten)]
        io: IoOpts,
        /// Minimum traces per variant.
        #[arg(long)]
        k: Option<usize>,
        /// t-closeness threshold in [0, 1]; 1.0 disables the duration check.
        #[arg(long)]
        t: Option<f64>,
        /// Trace similarity: levenshtein or embedding.
        #[arg(long, value_name = "MEASURE")]
        distance: Option<String>,
        /// Saved model for the embedding measure; trained on the fly if absent.
        #[arg(long, value_name = "PATH")]
        embedding_model: Option<PathBuf>,
        /// Per-event penalty when the merge target is longer.
        #[arg(long)]
        rho_a: Option<f64>,
        /// Per-event penalty when the merge target is shorter.
        #[arg(long)]
        rho_r: Option<f64>,
        #[command(flatten)]
        train: TrainOpts,
        /// Anonymized log destination (stdout if absent); format follows the
        /// extension, falling back to the input's format.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// CSV of the individual merge decisions.
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
    },
    /// Compare an anonymized log against its original and report utility metrics.
    Evaluate {
        /// The original log.
        #[arg(long, value_name = "PATH")]
        original: Option<PathBuf>,
        /// The anonymized log.
        #[arg(long, value_name = "PATH")]
        anonymized: Option<PathBuf>,
        /// Metric CSV destination (stdout if absent).
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
        /// Model file enabling the embedding-space diagnostics.
        #[arg(long, value_name = "PATH")]
        embedding_model: Option<PathBuf>,
        /// Relative tolerance of the sampling-preservation score.
        #[arg(long)]
        epsilon: Option<f64>,
        /// x values for the top-x follower share, comma separated.
        #[arg(long, value_name = "X,X,..", value_delimiter = ',')]
        top_x: Option<Vec<usize>>,
        #[command(flatten)]
        io: FormatOpts,
    },
    /// Anonymize under a grid of (measure, k, t) settings and write result CSVs.
    Sweep {
        #[command(flatten)]
        io: IoOpts,
        /// k grid, comma separated.
        #[arg(long, value_name = "K,K,..", value_delimiter = ',')]
        k_values: Option<Vec<usize>>,
        /// t grid, comma separated.
        #[arg(long, value_name = "T,T,..", value_delimiter = ',')]
        t_values: Option<Vec<f64>>,
        /// Measures to run, comma separated (levenshtein, embedding).
        #[arg(long, value_name = "M,M,..", value_delimiter = ',')]
        measures: Option<Vec<String>>,
        /// Relative tolerance of the sampling-preservation score.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        rho_a: Option<f64>,
        #[arg(long)]
        rho_r: Option<f64>,
        #[command(flatten)]
        train: TrainOpts,
        /// Result CSV destination (stdout if absent).
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Per-setting measure comparison CSV.
        #[arg(long, value_name = "PATH")]
        comparison: Option<PathBuf>,
        /// Per-setting wall-time CSV (nondeterministic, hence separate).
        #[arg(long, value_name = "PATH")]
        timings: Option<PathBuf>,
    },
}

/// CSV column mapping shared by every log-reading subcommand.
#[derive(Args)]
struct FormatOpts {
    /// Flat `key = value` defaults for any flag of the subcommand; explicit
    /// flags win on conflict.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// CSV column holding the case identifier.
    #[arg(long, value_name = "NAME")]
    case_column: Option<String>,
    /// CSV column holding the activity label.
    #[arg(long, value_name = "NAME")]
    activity_column: Option<String>,
    /// CSV column holding the event timestamp.
    #[arg(long, value_name = "NAME")]
    timestamp_column: Option<String>,
    /// strftime pattern for CSV timestamps.
    #[arg(long, value_name = "PATTERN")]
    timestamp_format: Option<String>,
}

impl FormatOpts {
    fn merge(&mut self, cfg: &mut ConfigFile) -> CliResult<()> {
        fill(&mut self.case_column, cfg.take("case-column"));
        fill(&mut self.activity_column, cfg.take("activity-column"));
        fill(&mut self.timestamp_column, cfg.take("timestamp-column"));
        fill(&mut self.timestamp_format, cfg.take("timestamp-format"));
        Ok(())
    }

    fn columns(&self) -> CsvColumns {
        let mut columns = CsvColumns::default();
        if let Some(c) = &self.case_column {
            columns.case = c.clone();
        }
        if let Some(c) = &self.activity_column {
            columns.activity = c.clone();
        }
        if let Some(c) = &self.timestamp_column {
            columns.timestamp = c.clone();
        }
        if let Some(f) = &self.timestamp_format {
            columns.timestamp_format = f.clone();
        }
        columns
    }
}

/// [`FormatOpts`] plus the single input log path.
#[derive(Args)]
struct IoOpts {
    /// Input event log (.xes or .csv; content is sniffed for other names).
    #[arg(long = "in", value_name = "PATH")]
    input: Option<PathBuf>,
    #[command(flatten)]
    format: FormatOpts,
}

impl IoOpts {
    fn merge(&mut self, cfg: &mut ConfigFile) -> CliResult<()> {
        fill(&mut self.input, cfg.take("in").map(PathBuf::from));
        self.format.merge(cfg)
    }

    fn input(&self) -> CliResult<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| CliError::Usage("missing required option --in <PATH>".into()))
    }
}

/// Embedding hyperparameters; unset flags fall back to the defaults.
#[derive(Args)]
struct TrainOpts {
    /// Embedding dimensionality.
    #[arg(long)]
    dimension: Option<usize>,
    /// Skip-gram context window radius.
    #[arg(long)]
    window: Option<usize>,
    /// Negative samples per positive pair.
    #[arg(long)]
    negative_samples: Option<usize>,
    /// Training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Initial learning rate.
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Learning-rate floor of the linear decay.
    #[arg(long)]
    min_learning_rate: Option<f64>,
    /// RNG seed; fixing it makes training (and sweeps) reproducible.
    #[arg(long)]
    seed: Option<u64>,
    /// Average input and context vectors instead of using input vectors alone.
    #[arg(long)]
    average_with_context: bool,
}

impl TrainOpts {
    fn merge(&mut self, cfg: &mut ConfigFile) -> CliResult<()> {
        fill(&mut self.dimension, cfg.take_parsed("dimension")?);
        fill(&mut self.window, cfg.take_parsed("window")?);
        fill(&mut self.negative_samples, cfg.take_parsed("negative-samples")?);
        fill(&mut self.epochs, cfg.take_parsed("epochs")?);
        fill(&mut self.learning_rate, cfg.take_parsed("learning-rate")?);
        fill(&mut self.min_learning_rate, cfg.take_parsed("min-learning-rate")?);
        fill(&mut self.seed, cfg.take_parsed("seed")?);
        if let Some(avg) = cfg.take_parsed::<bool>("average-with-context")? {
            self.average_with_context = self.average_with_context || avg;
        }
        Ok(())
    }

    fn config(&self) -> TrainConfig {
        let mut config = TrainConfig::default();
        if let Some(v) = self.dimension {
            config.dimension = v;
        }
        if let Some(v) = self.window {
            config.window = v;
        }
        if let Some(v) = self.negative_samples {
            config.negative_samples = v;
        }
        if let Some(v) = self.epochs {
            config.epochs = v;
        }
        if let Some(v) = self.learning_rate {
            config.learning_rate = v;
        }
        if let Some(v) = self.min_learning_rate {
            config.min_learning_rate = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        config.average_with_context = self.average_with_context;
        config
    }
}

/// Flat `key = value` file; `#` starts a comment line. Every key must be
/// consumed by the subcommand, so typos fail loudly.
struct ConfigFile {
    values: BTreeMap<String, String>,
    path: PathBuf,
}

impl ConfigFile {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        let path = match path {
            None => PathBuf::new(),
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::Usage(format!("cannot read config {}: {e}", path.display()))
                })?;
                for (i, raw) in text.lines().enumerate() {
                    let line = raw.trim();
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    let Some((key, value)) = line.split_once('=') else {
                        return Err(CliError::Usage(format!(
                            "{}:{}: expected `key = value`, got `{raw}`",
                            path.display(),
                            i + 1
                        )));
                    };
                    values.insert(key.trim().to_string(), value.trim().to_string());
                }
                path.to_path_buf()
            }
        };
        Ok(Self { values, path })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    fn take_parsed<T: FromStr>(&mut self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|e| {
                CliError::Usage(format!(
                    "{}: invalid value `{raw}` for `{key}`: {e}",
                    self.path.display()
                ))
            }),
        }
    }

    fn take_list<T: FromStr>(&mut self, key: &str) -> CliResult<Option<Vec<T>>>
    where
        T::Err: Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|item| {
                    item.trim().parse().map_err(|e| {
                        CliError::Usage(format!(
                            "{}: invalid value `{item}` for `{key}`: {e}",
                            self.path.display()
                        ))
                    })
                })
                .collect::<CliResult<Vec<T>>>()
                .map(Some),
        }
    }

    fn finish(self) -> CliResult<()> {
        if self.values.is_empty() {
            return Ok(());
        }
        let keys: Vec<&str> = self.values.keys().map(String::as_str).collect();
        Err(CliError::Usage(format!(
            "unknown config keys in {}: {}",
            self.path.display(),
            keys.join(", ")
        )))
    }
}

/// Fills `slot` from a config value only when no flag set it.
fn fill<T>(slot: &mut Option<T>, value: Option<T>) {
    if slot.is_none() {
        *slot = value;
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            eprintln!("Run `logsan --help` for usage.");
            ExitCode::from(1)
        }
        Err(CliError::Data(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Stats { io } => cmd_stats(io),
        Command::Train {
            io,
            train,
            out,
            export_csv,
        } => cmd_train(io, train, out, export_csv),
        Command::Anonymize {
            io,
            k,
            t,
            distance,
            embedding_model,
            rho_a,
            rho_r,
            train,
            out,
            report,
        } => cmd_anonymize(io, k, t, distance, embedding_model, rho_a, rho_r, train, out, report),
        Command::Evaluate {
            original,
            anonymized,
            report,
            embedding_model,
            epsilon,
            top_x,
            io,
        } => cmd_evaluate(original, anonymized, report, embedding_model, epsilon, top_x, io),
        Command::Sweep {
            io,
            k_values,
            t_values,
            measures,
            epsilon,
            rho_a,
            rho_r,
            train,
            out,
            comparison,
            timings,
        } => cmd_sweep(
            io, k_values, t_values, measures, epsilon, rho_a, rho_r, train, out, comparison,
            timings,
        ),
    }
}

// ---------------------------------------------------------------------------
// I/O plumbing

#[derive(Clone, Copy, PartialEq)]
enum LogFormat {
    Xes,
    Csv,
}

/// Relative paths that do not exist locally are retried under the directory
/// named by LOGSAN_DATA_DIR.
fn resolve_input(path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    if let Ok(dir) = std::env::var(DATA_DIR_VAR) {
        if !dir.is_empty() {
            let candidate = Path::new(&dir).join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_path_buf()
}

/// Extension decides when recognized; otherwise a leading `<` means XES.
fn detect_format(path: &Path, bytes: &[u8]) -> LogFormat {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("xes") => LogFormat::Xes,
        Some("csv") => LogFormat::Csv,
        _ => {
            let first = bytes.iter().find(|b| !b.is_ascii_whitespace());
            if first == Some(&b'<') {
                LogFormat::Xes
            } else {
                LogFormat::Csv
            }
        }
    }
}

fn read_log(path: &Path, columns: &CsvColumns) -> CliResult<(EventLog, LogFormat)> {
    let resolved = resolve_input(path);
    let bytes = fs::read(&resolved)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", resolved.display())))?;
    let format = detect_format(&resolved, &bytes);
    let log = match format {
        LogFormat::Xes => parse_xes(&bytes),
        LogFormat::Csv => parse_csv(&bytes, columns),
    }
    .map_err(|e| CliError::Data(format!("{}: {e}", resolved.display())))?;
    Ok((log.with_durations(), format))
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(bytes)
                .map_err(|e| CliError::Data(format!("cannot write to stdout: {e}")))
        }
    }
}

fn serialize_log(log: &EventLog, format: LogFormat, columns: &CsvColumns) -> CliResult<Vec<u8>> {
    Ok(match format {
        LogFormat::Xes => write_xes(log)?,
        LogFormat::Csv => write_csv(log, columns)?,
    })
}

fn parse_measure(name: &str) -> CliResult<MeasureKind> {
    MeasureKind::from_str(name).map_err(|e| CliError::Usage(e.to_string()))
}

fn load_model(path: &Path) -> CliResult<EmbeddingModel> {
    let resolved = resolve_input(path);
    let bytes = fs::read(&resolved)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", resolved.display())))?;
    EmbeddingModel::from_bytes(&bytes)
        .map_err(|e| CliError::Data(format!("{}: {e}", resolved.display())))
}

fn log_stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("log")
        .to_string()
}

// ---------------------------------------------------------------------------
// Subcommands

fn cmd_stats(mut io: IoOpts) -> CliResult<()> {
    let mut cfg = ConfigFile::load(io.format.config.as_deref())?;
    io.merge(&mut cfg)?;
    cfg.finish()?;
    let (log, _) = read_log(io.input()?, &io.format.columns())?;
    let stats = log.stats()?;
    println!("{stats} activities={} events={}", log.activities.len(), log.event_count());
    Ok(())
}

fn cmd_train(
    mut io: IoOpts,
    mut train: TrainOpts,
    mut out: Option<PathBuf>,
    export_csv: Option<PathBuf>,
) -> CliResult<()> {
    let mut cfg = ConfigFile::load(io.format.config.as_deref())?;
    io.merge(&mut cfg)?;
    train.merge(&mut cfg)?;
    fill(&mut out, cfg.take("out").map(PathBuf::from));
    cfg.finish()?;
    let out = out.ok_or_else(|| CliError::Usage("missing required option --out <PATH>".into()))?;

    let (log, _) = read_log(io.input()?, &io.format.columns())?;
    let config = train.config();
    let started = std::time::Instant::now();
    let model = train_act2vec(&log, &config)?;
    log::info!(
        "trained {} activity vectors (dimension {}) in {:.2} s",
        model.vocab().len(),
        model.dimension(),
        started.elapsed().as_secs_f64()
    );
    write_output(Some(&out), &model.to_bytes())?;
    if let Some(path) = export_csv {
        write_output(Some(&path), &model.export_csv())?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_anonymize(
    mut io: IoOpts,
    mut k: Option<usize>,
    mut t: Option<f64>,
    mut distance: Option<String>,
    mut embedding_model: Option<PathBuf>,
    mut rho_a: Option<f64>,
    mut rho_r: Option<f64>,
    mut train: TrainOpts,
    mut out: Option<PathBuf>,
    mut report: Option<PathBuf>,
) -> CliResult<()> {
    let mut cfg = ConfigFile::load(io.format.config.as_deref())?;
    io.merge(&mut cfg)?;
    train.merge(&mut cfg)?;
    fill(&mut k, cfg.take_parsed("k")?);
    fill(&mut t, cfg.take_parsed("t")?);
    fill(&mut distance, cfg.take("distance"));
    fill(&mut embedding_model, cfg.take("embedding-model").map(PathBuf::from));
    fill(&mut rho_a, cfg.take_parsed("rho-a")?);
    fill(&mut rho_r, cfg.take_parsed("rho-r")?);
    fill(&mut out, cfg.take("out").map(PathBuf::from));
    fill(&mut report, cfg.take("report").map(PathBuf::from));
    cfg.finish()?;

    let k = k.ok_or_else(|| CliError::Usage("missing required option --k <K>".into()))?;
    let params = PrivacyParams::new(k, t.unwrap_or(1.0))?;
    let kind = parse_measure(distance.as_deref().unwrap_or("levenshtein"))?;
    let penalties = match (rho_a, rho_r) {
        (None, None) => Penalties::default(),
        (a, r) => Penalties::new(
            a.unwrap_or_else(|| Penalties::default().rho_a()),
            r.unwrap_or_else(|| Penalties::default().rho_r()),
        )?,
    };

    let columns = io.format.columns();
    let (log, input_format) = read_log(io.input()?, &columns)?;

    let table;
    let measure = match kind {
        MeasureKind::Levenshtein => DistanceMeasure::Levenshtein,
        MeasureKind::Embedding => {
            let model = match &embedding_model {
                Some(path) => load_model(path)?,
                None => {
                    let config = train.config();
                    log::info!("no --embedding-model given; training on the input log");
                    train_act2vec(&log, &config)?
                }
            };
            table = EventDistanceTable::build(&model, &log)?;
            DistanceMeasure::Embedding {
                table: &table,
                penalties,
            }
        }
    };

    let (anonymized, anon_report) = anonymize(&log, &params, &measure)?;
    log::info!(
        "k={k} t={} measure={}: {} merges, {} truncated, {} dropped, {} traces out",
        params.t_close(),
        kind.name(),
        anon_report.merges.len(),
        anon_report.truncated,
        anon_report.dropped,
        anonymized.traces.len()
    );

    let out_format = match &out {
        Some(path) => detect_format(path, &[]),
        None => input_format,
    };
    write_output(out.as_deref(), &serialize_log(&anonymized, out_format, &columns)?)?;
    if let Some(path) = report {
        write_output(Some(&path), &merge_report_csv(&anon_report))?;
    }
    Ok(())
}

fn merge_report_csv(report: &AnonymizationReport) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["case", "source_variant", "target_variant", "distance"])
        .expect("write to Vec cannot fail");
    for merge in &report.merges {
        writer
            .write_record([
                merge.case_id.clone(),
                merge.source_variant.clone(),
                merge.target_variant.clone(),
                merge.distance.to_string(),
            ])
            .expect("write to Vec cannot fail");
    }
    writer.into_inner().expect("write to Vec cannot fail")
}

fn cmd_evaluate(
    mut original: Option<PathBuf>,
    mut anonymized: Option<PathBuf>,
    mut report: Option<PathBuf>,
    mut embedding_model: Option<PathBuf>,
    mut epsilon: Option<f64>,
    mut top_x: Option<Vec<usize>>,
    mut io: FormatOpts,
) -> CliResult<()> {
    let mut cfg = ConfigFile::load(io.config.as_deref())?;
    io.merge(&mut cfg)?;
    fill(&mut original, cfg.take("original").map(PathBuf::from));
    fill(&mut anonymized, cfg.take("anonymized").map(PathBuf::from));
    fill(&mut report, cfg.take("report").map(PathBuf::from));
    fill(&mut embedding_model, cfg.take("embedding-model").map(PathBuf::from));
    fill(&mut epsilon, cfg.take_parsed("epsilon")?);
    fill(&mut top_x, cfg.take_list("top-x")?);
    cfg.finish()?;

    let original = original
        .ok_or_else(|| CliError::Usage("missing required option --original <PATH>".into()))?;
    let anonymized = anonymized
        .ok_or_else(|| CliError::Usage("missing required option --anonymized <PATH>".into()))?;
    let columns = io.columns();
    let (original_log, _) = read_log(&original, &columns)?;
    let (anonymized_log, _) = read_log(&anonymized, &columns)?;
    let model = embedding_model.as_deref().map(load_model).transpose()?;
    let xs = top_x.unwrap_or_else(|| vec![1, 2, 3]);

    let metrics = metrics::evaluate(
        &original_log,
        &anonymized_log,
        model.as_ref(),
        epsilon.unwrap_or(0.1),
        &xs,
    )?;
    write_output(report.as_deref(), &metric_report_csv(&metrics))
}

fn metric_report_csv(report: &metrics::MetricReport) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["metric", "value", "detail"])
        .expect("write to Vec cannot fail");
    let mut push = |metric: &str, value: String, detail: &str| {
        writer
            .write_record([metric, &value, detail])
            .expect("write to Vec cannot fail");
    };
    push(
        "behavioural_appropriateness",
        report.behavioural_appropriateness.to_string(),
        "fraction of follows/precedes relations preserved",
    );
    push(
        "truly_sampled_score",
        report.truly_sampled_score.to_string(),
        "percent of directly-follows relations sampled within tolerance",
    );
    push(
        "total_duration_error",
        report.total_duration_error.to_string(),
        if report.duration_error_is_absolute {
            "absolute seconds (original total duration is zero)"
        } else {
            "relative to the original total duration"
        },
    );
    if let (Some(avg), Some(stdev)) = (report.event_distance_avg, report.event_distance_stdev) {
        push("event_distance_avg", avg.to_string(), "mean pairwise activity distance");
        push(
            "event_distance_stdev",
            stdev.to_string(),
            "population standard deviation of pairwise activity distances",
        );
    }
    for (x, share) in &report.top_x_follower_share {
        push(
            &format!("top_{x}_follower_share"),
            share.to_string(),
            "median percent of successor observations covered",
        );
    }
    writer.into_inner().expect("write to Vec cannot fail")
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    mut io: IoOpts,
    mut k_values: Option<Vec<usize>>,
    mut t_values: Option<Vec<f64>>,
    mut measures: Option<Vec<String>>,
    mut epsilon: Option<f64>,
    mut rho_a: Option<f64>,
    mut rho_r: Option<f64>,
    mut train: TrainOpts,
    mut out: Option<PathBuf>,
    mut comparison: Option<PathBuf>,
    mut timings: Option<PathBuf>,
) -> CliResult<()> {
    let mut cfg = ConfigFile::load(io.format.config.as_deref())?;
    io.merge(&mut cfg)?;
    train.merge(&mut cfg)?;
    fill(&mut k_values, cfg.take_list("k-values")?);
    fill(&mut t_values, cfg.take_list("t-values")?);
    fill(&mut measures, cfg.take_list("measures")?);
    fill(&mut epsilon, cfg.take_parsed("epsilon")?);
    fill(&mut rho_a, cfg.take_parsed("rho-a")?);
    fill(&mut rho_r, cfg.take_parsed("rho-r")?);
    fill(&mut out, cfg.take("out").map(PathBuf::from));
    fill(&mut comparison, cfg.take("comparison").map(PathBuf::from));
    fill(&mut timings, cfg.take("timings").map(PathBuf::from));
    cfg.finish()?;

    let input = io.input()?;
    let columns = io.format.columns();
    let (log, _) = read_log(input, &columns)?;

    let mut config = SweepConfig {
        log_name: log_stem(input),
        train: train.config(),
        ..SweepConfig::default()
    };
    config.seed = config.train.seed;
    if let Some(values) = k_values {
        config.k_values = values;
    }
    if let Some(values) = t_values {
        config.t_values = values;
    }
    if let Some(names) = measures {
        config.measures = names
            .iter()
            .map(|n| parse_measure(n))
            .collect::<CliResult<Vec<_>>>()?;
    }
    if let Some(e) = epsilon {
        config.epsilon = e;
    }
    if rho_a.is_some() || rho_r.is_some() {
        config.penalties = Penalties::new(
            rho_a.unwrap_or_else(|| Penalties::default().rho_a()),
            rho_r.unwrap_or_else(|| Penalties::default().rho_r()),
        )?;
    }

    let started = std::time::Instant::now();
    let rows = run_sweep(&log, &config)?;
    log::info!(
        "{} settings in {:.2} s",
        rows.len(),
        started.elapsed().as_secs_f64()
    );
    write_output(out.as_deref(), &write_sweep_csv(&rows))?;
    if let Some(path) = comparison {
        write_output(Some(&path), &write_comparison_csv(&comparison_rows(&rows)))?;
    }
    if let Some(path) = timings {
        write_output(Some(&path), &write_timings_csv(&rows))?;
    }
    Ok(())
}
