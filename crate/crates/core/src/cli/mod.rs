//! The `ckpt-drift` command line: `diff`, `heatmap`, `sample`, `format` and
//! `eval`, sharing `--threads` and `--config`.
//!
//! Exit status is 0 on success, 1 for usage errors (nothing is written) and
//! 2 for data errors (outputs written so far are removed). Progress and
//! errors go to stderr as `key=value` lines.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

pub const THREADS_ENV: &str = "CKPT_DRIFT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "ckpt-drift", version, about = "Measure, plot and probe how fine-tuning moves model parameters")]
pub struct Cli {
    /// Worker threads (default: $CKPT_DRIFT_THREADS, else all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// JSON object whose keys mirror flags; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare two checkpoints matrix by matrix.
    Diff(DiffArgs),
    /// Render one or more diff reports as an SVG heatmap.
    Heatmap(HeatmapArgs),
    /// Draw a seeded few-shot split from a knowledge graph.
    Sample(SampleArgs),
    /// Turn tuples into input/target text with relation prompts.
    Format(FormatArgs),
    /// Score generations against references, averaged over runs.
    Eval(EvalArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Diff(_) => "diff",
            Command::Heatmap(_) => "heatmap",
            Command::Sample(_) => "sample",
            Command::Format(_) => "format",
            Command::Eval(_) => "eval",
        }
    }
}

#[derive(Debug, Args)]
pub struct DiffArgs {
    /// Checkpoint before fine-tuning.
    #[arg(long, value_name = "FILE")]
    pub before: PathBuf,
    /// Checkpoint after fine-tuning.
    #[arg(long, value_name = "FILE")]
    pub after: PathBuf,
    /// Name-classification rules (JSON); defaults to the built-in T5 table.
    #[arg(long, value_name = "FILE")]
    pub rules: Option<PathBuf>,
    /// Rounding quantum for the change distribution.
    #[arg(long, default_value_t = crate::drift::DEFAULT_QUANTUM)]
    pub quantum: f64,
    /// Report JSON to write.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Also write the cells as CSV.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
    /// Load both checkpoints fully instead of streaming them.
    #[arg(long)]
    pub in_memory: bool,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    /// Diff report JSON; repeat for several panels.
    #[arg(long = "report", value_name = "FILE", required = true)]
    pub reports: Vec<PathBuf>,
    /// l1, angular or auc.
    #[arg(long, default_value = "l1")]
    pub measure: String,
    /// per-panel or shared.
    #[arg(long, default_value = "per-panel")]
    pub scale: String,
    /// Panel label; repeat once per report.
    #[arg(long = "label", value_name = "TEXT")]
    pub labels: Vec<String>,
    /// Decimals in cell annotations.
    #[arg(long, default_value_t = 3)]
    pub precision: usize,
    /// Leave cells unannotated.
    #[arg(long)]
    pub no_values: bool,
    /// Average all reports cell by cell into a single panel.
    #[arg(long)]
    pub aggregate: bool,
    /// SVG to write.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Knowledge graph TSV (head, relation, tail).
    #[arg(long, value_name = "FILE")]
    pub kg: PathBuf,
    /// Examples per relation.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for train.tsv, valid.tsv, pretrain.tsv and manifest.json.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    /// Also draw n validation tuples per relation.
    #[arg(long)]
    pub validation: bool,
    /// Draw validation tuples from this TSV instead of the training graph.
    #[arg(long, value_name = "FILE", requires = "validation")]
    pub validation_pool: Option<PathBuf>,
    /// Sample only these relations; the rest become the pretraining pool.
    #[arg(long = "holdout", value_name = "RELATION")]
    pub holdout: Vec<String>,
    /// Write formatted input/target files in this mode instead of raw tuples.
    #[arg(long)]
    pub mode: Option<String>,
    /// Prompt inventory JSON (defaults to the built-in one for the mode).
    #[arg(long, value_name = "FILE", requires = "mode")]
    pub prompts: Option<PathBuf>,
    /// Seed of the prompt derangement in shuffled mode.
    #[arg(long)]
    pub shuffle_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FormatArgs {
    /// Tuple TSV, e.g. a train.tsv written by `sample`.
    #[arg(long, value_name = "FILE")]
    pub split: PathBuf,
    /// Prompt inventory JSON (defaults to the built-in one for the mode).
    #[arg(long, value_name = "FILE")]
    pub prompts: Option<PathBuf>,
    /// natural, paraphrase, shuffled[:SEED] or embedding.
    #[arg(long, default_value = "natural")]
    pub mode: String,
    /// Seed of the prompt derangement in shuffled mode.
    #[arg(long)]
    pub shuffle_seed: Option<u64>,
    /// Two-column TSV to write.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Generations TSV (head, relation, candidate); repeat once per run.
    #[arg(long = "generations", value_name = "FILE", required = true)]
    pub generations: Vec<PathBuf>,
    /// Reference TSV (head, relation, tail), several lines per key allowed.
    #[arg(long, value_name = "FILE")]
    pub references: PathBuf,
    /// Comma-separated subset of bleu1,meteor,rougeL,cider.
    #[arg(long, default_value = "bleu1,meteor,rougeL,cider")]
    pub metrics: String,
    /// Metrics JSON to write.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug)]
pub(crate) enum Failure {
    Usage(String),
    Data(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
        }
    }
}

pub(crate) fn log(pairs: &[(&str, &dyn std::fmt::Display)]) {
    let line: Vec<String> = pairs
        .iter()
        .map(|(k, v)| {
            let v = v.to_string();
            if v.is_empty() || v.contains([' ', '"', '=', '\t']) {
                format!("{k}={v:?}")
            } else {
                format!("{k}={v}")
            }
        })
        .collect();
    eprintln!("{}", line.join(" "));
}

fn resolve_threads(flag: Option<usize>) -> Result<usize, Failure> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("{THREADS_ENV}={v:?} is not a thread count")))?,
            Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        },
    };
    if n == 0 {
        return Err(Failure::Usage("thread count must be at least 1".into()));
    }
    Ok(n)
}

/// Runs the tool on `args` (including the program name) and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let started = Instant::now();
    match run_inner(args) {
        Ok(Some(cmd)) => {
            log(&[("event", &"done"), ("cmd", &cmd), ("elapsed_ms", &started.elapsed().as_millis())]);
            0
        }
        Ok(None) => 0,
        Err(f) => {
            let (kind, msg) = match &f {
                Failure::Usage(m) => ("usage", m),
                Failure::Data(m) => ("data", m),
            };
            log(&[("level", &"error"), ("kind", &kind), ("msg", msg)]);
            f.code()
        }
    }
}

fn run_inner(args: Vec<OsString>) -> Result<Option<&'static str>, Failure> {
    let args = config::apply_config(args)?;
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return Ok(None);
            }
            return Err(Failure::Usage(e.render().to_string().trim_end().to_owned()));
        }
    };
    let threads = resolve_threads(cli.threads)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Data(format!("cannot start thread pool: {e}")))?;
    let name = cli.command.name();
    log(&[("event", &"start"), ("cmd", &name), ("threads", &threads)]);
    pool.install(|| commands::execute(cli.command))?;
    Ok(Some(name))
}
