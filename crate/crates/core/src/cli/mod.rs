//! The `ordex` command line: convert, distill and extract over a manifest of
//! county documents, evaluate records against ground truth, and inspect the
//! decision trees.
//!
//! Exit codes: 0 on success, 1 when any document or input failed, 2 for
//! usage and configuration errors.

mod config;
mod manifest;
mod output;
mod pipeline;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::eval::{evaluate, load_ground_truth, load_records, render_text, EvalError};
use crate::ingest::CommandConverter;
use crate::ordinance::{build_wind_tree_with, FeatureType, ReferenceTurbine};
use crate::tree::{validate, ConversationGraph};

pub use config::{parse_features, BackendKind, RunConfig};
pub use manifest::{Manifest, ManifestEntry};
pub use output::write_atomic;
pub use pipeline::{
    load_tree_overrides, run_pipeline, DocFailure, RunSummary, Stage, DISTILLED_DIR, JOURNAL_FILE,
    RECORDS_FILE, REVIEW_FILE, SUMMARY_FILE, TEXT_DIR,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

pub const EVALUATION_JSON: &str = "evaluation.json";
pub const EVALUATION_TEXT: &str = "evaluation.txt";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ordex",
    version,
    about = "Extract wind siting ordinances from county documents"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert manifest documents to cleaned text.
    Convert(PipelineArgs),
    /// Convert, then keep only wind-relevant passages.
    Distill(PipelineArgs),
    /// Convert, distill and extract ordinance records.
    Extract(PipelineArgs),
    /// Score a records file against ground truth.
    Evaluate(EvaluateArgs),
    /// Inspect decision trees.
    #[command(subcommand)]
    Tree(TreeCommand),
}

#[derive(Debug, Clone)]
pub struct FeatureList(pub Vec<FeatureType>);

fn feature_list(s: &str) -> Result<FeatureList, String> {
    parse_features(s).map(FeatureList)
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// TOML list of `[[document]]` entries (county, state, path, format)
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// Directory of JSON scripts for the scripted backend.
    #[arg(long)]
    pub script_dir: Option<PathBuf>,
    /// Comma-separated feature names, or `all`.
    #[arg(long, value_parser = feature_list)]
    pub features: Option<FeatureList>,
    /// Minimum n-gram similarity for a distilled excerpt.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Documents processed at once.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Response cache directory (default: <out>/cache).
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Disable the response cache
    #[arg(long)]
    pub no_cache: bool,
    /// Directory of `<feature>.toml` trees replacing the built-in ones.
    #[arg(long)]
    pub tree_dir: Option<PathBuf>,
    /// PDF converter command line; `{input}` is replaced by the PDF path.
    #[arg(long)]
    pub converter: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Records file written by `extract`.
    #[arg(long)]
    pub records: PathBuf,
    /// Ground truth CSV.
    #[arg(long)]
    pub truth: PathBuf,
    /// Directory for evaluation.json and evaluation.txt.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum TreeCommand {
    /// Print a built-in tree as TOML.
    Dump {
        #[arg(long)]
        feature: FeatureType,
        #[arg(long)]
        hub_height_ft: Option<f64>,
        #[arg(long)]
        blade_length_ft: Option<f64>,
    },
    /// Check tree files for structural problems.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

/// Split a converter command line on whitespace; `{input}` is appended
/// when absent.
pub fn parse_converter(line: &str) -> Result<CommandConverter, String> {
    let mut parts = line.split_whitespace().map(str::to_string);
    let program = parts.next().ok_or("converter command is empty")?;
    let mut args: Vec<String> = parts.collect();
    if !args.iter().any(|a| a.contains("{input}")) {
        args.push("{input}".into());
    }
    Ok(CommandConverter::new(program, args))
}

impl PipelineArgs {
    /// Config file values, overridden by any flags given.
    pub fn resolve(&self) -> Result<(RunConfig, Manifest, PathBuf), CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.manifest {
            cfg.manifest = Some(v.clone());
        }
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        if let Some(v) = self.backend {
            cfg.backend = v;
        }
        if let Some(v) = &self.script_dir {
            cfg.script_dir = Some(v.clone());
        }
        if let Some(v) = &self.features {
            cfg.features = Some(v.0.clone());
        }
        if let Some(v) = self.threshold {
            cfg.ngram.threshold = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = &self.cache_dir {
            cfg.cache_dir = Some(v.clone());
        }
        if self.no_cache {
            cfg.no_cache = true;
        }
        if let Some(v) = &self.tree_dir {
            cfg.tree_dir = Some(v.clone());
        }
        if let Some(v) = &self.converter {
            cfg.converter = parse_converter(v).map_err(CliError::Usage)?;
        }
        cfg.validate()?;
        let manifest_path = cfg
            .manifest
            .clone()
            .ok_or_else(|| CliError::Usage("--manifest is required".into()))?;
        let out = cfg
            .out
            .clone()
            .ok_or_else(|| CliError::Usage("--out is required".into()))?;
        let manifest = Manifest::load(&manifest_path)?;
        Ok((cfg, manifest, out))
    }
}

fn cmd_pipeline(stage: Stage, args: &PipelineArgs) -> Result<u8, CliError> {
    let (cfg, manifest, out) = args.resolve()?;
    let summary = run_pipeline(stage, &cfg, &manifest, &out)?;
    eprintln!("{}", summary.status_line());
    if stage == Stage::Extract {
        eprintln!(
            "{} record(s): {} found, {} not found, {} for review; {} backend call(s), {} cache hit(s)",
            summary.records,
            summary.found,
            summary.not_found,
            summary.needs_review,
            summary.backend_calls,
            summary.cache_hits
        );
    }
    Ok(if summary.failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<u8, CliError> {
    let records = load_records(&args.records)?;
    let truth = load_ground_truth(&args.truth)?;
    let report = evaluate(&records, &truth);
    let text = render_text(&report);
    output::write_json(&args.out.join(EVALUATION_JSON), &report)?;
    write_atomic(&args.out.join(EVALUATION_TEXT), text.as_bytes())?;
    print!("{text}");
    Ok(EXIT_OK)
}

fn cmd_tree(cmd: &TreeCommand) -> Result<u8, CliError> {
    match cmd {
        TreeCommand::Dump {
            feature,
            hub_height_ft,
            blade_length_ft,
        } => {
            let mut turbine = ReferenceTurbine::default();
            if let Some(h) = hub_height_ft {
                turbine.hub_height_ft = *h;
            }
            if let Some(b) = blade_length_ft {
                turbine.blade_length_ft = *b;
            }
            turbine
                .validate()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let toml = build_wind_tree_with(*feature, &turbine)
                .to_toml()
                .map_err(|e| CliError::Failed(e.to_string()))?;
            print!("{toml}");
            Ok(EXIT_OK)
        }
        TreeCommand::Validate { files } => {
            let mut bad = 0;
            for path in files {
                let problems = match std::fs::read_to_string(path) {
                    Err(e) => vec![e.to_string()],
                    Ok(text) => match ConversationGraph::from_toml(&text) {
                        Err(e) => vec![e.to_string()],
                        Ok(g) => validate(&g).iter().map(ToString::to_string).collect(),
                    },
                };
                if problems.is_empty() {
                    println!("ok       {}", path.display());
                } else {
                    bad += 1;
                    println!("invalid  {}", path.display());
                    for p in problems {
                        println!("  {p}");
                    }
                }
            }
            Ok(if bad == 0 { EXIT_OK } else { EXIT_FAILURE })
        }
    }
}

pub fn execute(cli: &Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Convert(a) => cmd_pipeline(Stage::Convert, a),
        Command::Distill(a) => cmd_pipeline(Stage::Distill, a),
        Command::Extract(a) => cmd_pipeline(Stage::Extract, a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Tree(t) => cmd_tree(t),
    }
}

/// Parse `args` (program name first) and run; returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}
