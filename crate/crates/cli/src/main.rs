//! `dialogsynth`: command-line front end for the dialogue synthesis pipeline.

mod analyze;
mod backend;
mod clean;
mod config;
mod evaluate;
mod export;
mod generate;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dialogsynth_core::corpus::CorpusError;
use dialogsynth_core::genclient::GenError;

use crate::config::PipelineConfig;

/// Input that fails validation: bad config values, malformed records, too
/// few candidates and the like.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct Invalid(pub String);

/// Exit codes are a stable contract for scripts driving the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Failure {
    Validation = 1,
    Provider = 2,
    Io = 3,
}

impl Failure {
    fn name(self) -> &'static str {
        match self {
            Failure::Validation => "validation",
            Failure::Provider => "provider",
            Failure::Io => "io",
        }
    }

    /// The first recognizable cause in the chain decides the class.
    fn classify(err: &anyhow::Error) -> Failure {
        for cause in err.chain() {
            if let Some(e) = cause.downcast_ref::<GenError>() {
                if e.is_provider_failure() {
                    return Failure::Provider;
                }
            }
            if let Some(e) = cause.downcast_ref::<CorpusError>() {
                if e.is_io() {
                    return Failure::Io;
                }
            }
            if cause.is::<std::io::Error>() {
                return Failure::Io;
            }
        }
        Failure::Validation
    }
}

#[derive(Debug, Parser)]
#[command(name = "dialogsynth", version, about = "Synthesize, analyze and evaluate multi-turn support dialogues")]
struct Cli {
    /// Pipeline config (TOML). Defaults apply when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// Override the top-level seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the worker count.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct MockArgs {
    /// Serve requests from the bundled mock provider on a local port.
    #[arg(long)]
    pub mock: bool,

    /// Mock provider script (JSON). Implies --mock.
    #[arg(long)]
    pub mock_script: Option<PathBuf>,
}

impl MockArgs {
    pub fn enabled(&self) -> bool {
        self.mock || self.mock_script.is_some()
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Apply ordered replacement rules and truncation to a QA corpus.
    Clean(clean::CleanArgs),
    /// Generate dialogues with one of the prompt methods.
    Generate(generate::GenerateArgs),
    /// Diversity report for a dialogue corpus.
    Analyze(analyze::AnalyzeArgs),
    /// Split dialogues into training sessions and write chat records.
    ExportSft(export::ExportArgs),
    /// Score system responses against references.
    Evaluate(evaluate::EvaluateArgs),
    /// Build shuffled rater bundles and their hidden keys.
    Bundle(evaluate::BundleArgs),
    /// Unblind vote sheets, majority-vote and measure agreement.
    Tally(evaluate::TallyArgs),
    /// Run the mock provider as a standalone HTTP server.
    MockServer(backend::MockServerArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = cli.workers {
        cfg.workers = workers;
        cfg.validate()?;
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build()?;
    pool.install(|| match cli.command {
        Command::Clean(a) => clean::run(&cfg, a),
        Command::Generate(a) => generate::run(&cfg, a),
        Command::Analyze(a) => analyze::run(&cfg, a),
        Command::ExportSft(a) => export::run(&cfg, a),
        Command::Evaluate(a) => evaluate::run(&cfg, a),
        Command::Bundle(a) => evaluate::bundle(&cfg, a),
        Command::Tally(a) => evaluate::tally(&cfg, a),
        Command::MockServer(a) => backend::serve(&cfg, a),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let kind = Failure::classify(&err);
            let report = serde_json::json!({
                "error": {
                    "kind": kind.name(),
                    "exit_code": kind as u8,
                    "message": err.to_string(),
                    "causes": err.chain().skip(1).map(|c| c.to_string()).collect::<Vec<_>>(),
                }
            });
            eprintln!("{report}");
            ExitCode::from(kind as u8)
        }
    }
}
