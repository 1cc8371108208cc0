//! Command-line front end: `validate`, `pipeline`, `mine` and `synth`.

mod config;
mod mine;
mod pipeline;

pub use config::{CohortDef, RunManifest};
pub use mine::{ContrastTableRow, PatternRow};
pub use pipeline::{aggregate_events, read_classifications, ClassificationRow, PipelineSummary};

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::Duration;
use clap::{Args, Parser, Subcommand};

use crate::classify::OrdinalClass;
use crate::error::{Error, Result};
use crate::event::{read_log, ParseStats};
use crate::manifest::load_manifest;
use crate::mining::{EncodeOptions, Granularity, MinSupport, MiningParams};
use crate::report::{Modality, OutputFormat};
use crate::synth::{generate_corpus, CorpusSpec};

use config::Resolved;

#[derive(Debug, Parser)]
#[command(name = "edx-ordinal", version, about = "Engagement analytics over edX tracking logs")]
pub struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count parsed, retained, malformed and filtered lines per log.
    Validate {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
    },
    /// Aggregate, classify and write every report table.
    Pipeline(PipelineArgs),
    /// Mine frequent event sequences per class.
    Mine(MineArgs),
    /// Generate a labelled synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    /// Run configuration JSON.
    #[arg(long)]
    pub run_config: Option<PathBuf>,
    /// Course manifest JSON (overrides the run configuration).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub gap_minutes: Option<i64>,
    #[arg(long)]
    pub passing_threshold: Option<f64>,
    #[arg(long, default_value = "csv")]
    pub format: OutputFormat,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub common: AnalysisArgs,
    /// Also report class shares with no-shows removed.
    #[arg(long)]
    pub exclude_no_show: bool,
    #[arg(required = true)]
    pub logs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[command(flatten)]
    pub common: AnalysisArgs,
    /// Classifications table written by `pipeline`.
    #[arg(long)]
    pub classifications: PathBuf,
    /// Restrict mining to these classes (repeatable).
    #[arg(long = "class")]
    pub classes: Vec<OrdinalClass>,
    /// Absolute count, or a fraction in (0, 1] of the class's sequences.
    #[arg(long, default_value = "0.05")]
    pub min_support: MinSupport,
    #[arg(long, default_value_t = 6)]
    pub max_len: usize,
    /// One sequence per session (default).
    #[arg(long, conflicts_with = "per_user")]
    pub per_session: bool,
    /// One sequence per user.
    #[arg(long)]
    pub per_user: bool,
    /// Encode problem checks as passing or failing symbols.
    #[arg(long)]
    pub split_check: bool,
    /// Collapse consecutive repeats of a symbol.
    #[arg(long)]
    pub collapse_runs: bool,
    #[arg(required = true)]
    pub logs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Corpus specification JSON; defaults to every built-in persona.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Course manifest to generate against.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Users per built-in persona.
    #[arg(long, default_value_t = 50)]
    pub users: usize,
    #[arg(long, default_value = "online")]
    pub modality: Modality,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` and runs the command, writing human-readable output to
/// `stdout` and errors to `stderr`. Returns the process exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match run(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.workers {
        Some(0) => Err(Error::Config("--workers must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
            let mut buf = Vec::new();
            let result = pool.install(|| dispatch(cli.command, &mut buf));
            stdout.write_all(&buf).map_err(out_err)?;
            result
        }
        None => dispatch(cli.command, stdout),
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Validate { logs } => cmd_validate(&logs, stdout),
        Command::Pipeline(args) => cmd_pipeline(&args, stdout),
        Command::Mine(args) => cmd_mine(&args, stdout),
        Command::Synth(args) => cmd_synth(&args, stdout),
    }
}

fn out_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn stats_line(label: &str, s: &ParseStats) -> String {
    format!(
        "{label}: lines_read={} parsed={} retained={} malformed={} filtered_out={}",
        s.lines_read, s.parsed, s.retained, s.malformed, s.filtered_out
    )
}

/// Per-file and total parse tallies.
pub fn cmd_validate(logs: &[PathBuf], stdout: &mut dyn Write) -> Result<()> {
    let mut total = ParseStats::default();
    for path in logs {
        let batch = read_log(path)?;
        writeln!(stdout, "{}", stats_line(&path.display().to_string(), &batch.stats))
            .map_err(out_err)?;
        total += batch.stats;
    }
    writeln!(stdout, "{}", stats_line("total", &total)).map_err(out_err)
}

fn resolve(common: &AnalysisArgs) -> Result<Resolved> {
    let mut run = match &common.run_config {
        Some(p) => RunManifest::load(p)?,
        None => RunManifest::default(),
    };
    if let Some(m) = &common.manifest {
        run.manifest = Some(m.clone());
    }
    if let Some(g) = common.gap_minutes {
        run.session_gap_minutes = g;
    }
    if let Some(t) = common.passing_threshold {
        run.passing_threshold = t;
    }
    Resolved::new(&run)
}

fn check_inputs(logs: &[PathBuf]) -> Result<()> {
    for p in logs {
        if !p.is_file() {
            return Err(Error::io(
                p,
                std::io::Error::new(std::io::ErrorKind::NotFound, "log file not found"),
            ));
        }
    }
    Ok(())
}

pub fn cmd_pipeline(args: &PipelineArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = resolve(&args.common)?;
    check_inputs(&args.logs)?;
    let summary = pipeline::run(
        &cfg,
        &args.logs,
        &args.common.out,
        &pipeline::PipelineOptions {
            format: args.common.format,
            exclude_no_show: args.exclude_no_show,
        },
    )?;
    writeln!(stdout, "{}", stats_line("parsed", &summary.parse)).map_err(out_err)?;
    writeln!(stdout, "students: {}", summary.students).map_err(out_err)?;
    for (class, n) in &summary.classes {
        writeln!(stdout, "  {class}: {n}").map_err(out_err)?;
    }
    for p in &summary.outputs {
        writeln!(stdout, "wrote {}", p.display()).map_err(out_err)?;
    }
    Ok(())
}

pub fn cmd_mine(args: &MineArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = resolve(&args.common)?;
    check_inputs(&args.logs)?;
    if args.max_len == 0 {
        return Err(Error::Config("--max-len must be at least 1".into()));
    }
    let granularity = if args.per_user {
        Granularity::PerUser
    } else {
        Granularity::PerSession
    };
    let opts = mine::MineOptions {
        classes: args.classes.clone(),
        params: MiningParams {
            min_support: args.min_support,
            max_len: args.max_len,
            granularity,
            split_check_outcome: args.split_check,
            collapse_runs: args.collapse_runs,
        },
        encode: EncodeOptions {
            granularity,
            split_check_outcome: args.split_check,
            passing_threshold: cfg.metrics.passing_threshold,
            collapse_runs: args.collapse_runs,
            session_gap: Duration::minutes(cfg.gap_minutes),
        },
        format: args.common.format,
    };
    let results = mine::run(&args.classifications, &args.logs, &args.common.out, &opts)?;
    for (class, r) in &results {
        writeln!(
            stdout,
            "{class}: {} sequences, {} patterns",
            r.n_sequences,
            r.patterns.len()
        )
        .map_err(out_err)?;
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn to_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    Ok(text)
}

/// Writes `events.jsonl`, `labels.csv`, `manifest.json`, the effective
/// `spec.json`, and a `run.json` that points the pipeline at them.
pub fn cmd_synth(args: &SynthArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut spec = match &args.spec {
        Some(p) => CorpusSpec::load(p)?,
        None => CorpusSpec::with_default_personas(args.users, args.modality, 0),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(m) = &args.manifest {
        spec.manifest = load_manifest(m)?;
    }
    let corpus = generate_corpus(&spec)?;

    let out = &args.out;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_file(&out.join("events.jsonl"), &corpus.log_text())?;
    write_file(&out.join("labels.csv"), &corpus.labels_csv())?;
    let manifest_path = out.join("manifest.json");
    write_file(&manifest_path, &to_json(&manifest_path, &spec.manifest)?)?;
    let spec_path = out.join("spec.json");
    write_file(&spec_path, &to_json(&spec_path, &spec)?)?;

    let run = RunManifest {
        cohorts: vec![CohortDef {
            course_id_pattern: format!("^{}$", regex::escape(spec.course_id())),
            modality: spec.modality,
            term_label: "synthetic".into(),
            anchor: Some(spec.term_start),
        }],
        manifest: Some(PathBuf::from("manifest.json")),
        ..RunManifest::default()
    };
    let run_path = out.join("run.json");
    write_file(&run_path, &to_json(&run_path, &run)?)?;

    writeln!(
        stdout,
        "{} users, {} events written to {}",
        corpus.labels.len(),
        corpus.lines.len(),
        out.display()
    )
    .map_err(out_err)
}
