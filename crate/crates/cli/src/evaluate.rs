use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use clap::Args;
use dialogsynth_core::corpus::{read_jsonl, write_jsonl};
use dialogsynth_core::evalharness::{
    aggregate_votes, evaluate_all, fleiss_kappa, make_judgment_bundles, unblind, vote_matrix, BundleKey, EvalCase, HashingCharEmbedder,
    SlotVote, TokenEmbedder, WholeTextEmbedder,
};
use dialogsynth_core::rng::SeededRng;
use serde::Serialize;

use crate::backend::Backends;
use crate::config::{BertScoreSource, PipelineConfig};
use crate::report::{output_path, print_summary, write_json};
use crate::{Invalid, MockArgs};

fn load_cases(path: &Path) -> Result<Vec<EvalCase>> {
    let cases: Vec<EvalCase> = read_jsonl(path)?.into_iter().map(|(_, c)| c).collect();
    if cases.is_empty() {
        bail!(Invalid(format!("{} contains no eval cases", path.display())));
    }
    Ok(cases)
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Eval cases (JSONL): case_id, history, reference, candidates.
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated systems; every candidate name found in the first
    /// case by default.
    #[arg(long)]
    pub systems: Option<String>,
    /// Score table path; `<output_dir>/scores.json` by default.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub mock: MockArgs,
}

pub fn run(cfg: &PipelineConfig, args: EvaluateArgs) -> Result<()> {
    let cases = load_cases(&args.input)?;
    let systems = match &args.systems {
        Some(s) => split_list(s),
        None => cases[0].candidates.keys().cloned().collect(),
    };
    if systems.is_empty() {
        bail!(Invalid("no systems to evaluate".into()));
    }
    let names: Vec<&str> = systems.iter().map(String::as_str).collect();
    let metrics = cfg.metric_config();
    let table = match cfg.evaluation.bertscore {
        BertScoreSource::HashedChars => evaluate_all(&cases, &names, &HashingCharEmbedder::default(), &metrics)?,
        BertScoreSource::Provider => {
            let backends = Backends::connect(cfg, &args.mock)?;
            let embedder: &dyn TokenEmbedder = &WholeTextEmbedder(&backends.embedder);
            evaluate_all(&cases, &names, embedder, &metrics)?
        }
    };
    let rounded = dialogsynth_core::evalharness::ScoreTable {
        rows: table.rows.iter().map(|r| r.rounded()).collect(),
    };
    let path = output_path(&cfg.paths.output_dir, args.output.as_deref(), "scores.json")?;
    write_json(&rounded, &path)?;
    print!("{table}");
    println!("scores written to {} (BLEU averaged per sentence)", path.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct BundleArgs {
    /// Eval cases (JSONL).
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated systems to compare; `reference` stands for the
    /// ground-truth reply.
    #[arg(long)]
    pub systems: String,
    /// Cases to sample; `evaluation.bundle_sample` by default.
    #[arg(long)]
    pub sample: Option<usize>,
    /// Directory for bundles.jsonl and bundle_keys.jsonl; `output_dir` by default.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct BundleSummary {
    bundles: usize,
    bundles_path: PathBuf,
    keys_path: PathBuf,
}

pub fn bundle(cfg: &PipelineConfig, args: BundleArgs) -> Result<()> {
    let cases = load_cases(&args.input)?;
    let systems = split_list(&args.systems);
    let names: Vec<&str> = systems.iter().map(String::as_str).collect();
    let sample = args.sample.unwrap_or(cfg.evaluation.bundle_sample).min(cases.len());
    let mut idx = SeededRng::derived(cfg.seed, "bundle_sample").sample_indices(cases.len(), sample);
    idx.sort_unstable();
    let picked: Vec<EvalCase> = idx.into_iter().map(|i| cases[i].clone()).collect();
    let (bundles, keys) = make_judgment_bundles(&picked, &names, cfg.seed)?;
    let dir = args.output_dir.unwrap_or_else(|| cfg.paths.output_dir.clone());
    let bundles_path = output_path(&dir, None, "bundles.jsonl")?;
    let keys_path = output_path(&dir, None, "bundle_keys.jsonl")?;
    write_jsonl(&bundles, &bundles_path)?;
    write_jsonl(&keys, &keys_path)?;
    print_summary(&BundleSummary {
        bundles: bundles.len(),
        bundles_path,
        keys_path,
    })
}

#[derive(Debug, Args)]
pub struct TallyArgs {
    /// Vote sheet (JSONL): case_id, rater, preferred slot.
    #[arg(long)]
    pub votes: PathBuf,
    /// Hidden keys written by `bundle`.
    #[arg(long)]
    pub keys: PathBuf,
    /// The two systems compared, as `A,B`; the win rate is A's.
    #[arg(long)]
    pub pair: String,
    /// Result path; `<output_dir>/tally.json` by default.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Serialize)]
struct TallyReport {
    #[serde(flatten)]
    summary: dialogsynth_core::evalharness::VoteSummary,
    fleiss_kappa: f64,
}

pub fn tally(cfg: &PipelineConfig, args: TallyArgs) -> Result<()> {
    let pair = split_list(&args.pair);
    let [a, b] = pair.as_slice() else {
        bail!(Invalid(format!("--pair needs exactly two systems, got `{}`", args.pair)));
    };
    let votes: Vec<SlotVote> = read_jsonl(&args.votes)?.into_iter().map(|(_, v)| v).collect();
    let keys: Vec<BundleKey> = read_jsonl(&args.keys)?.into_iter().map(|(_, k)| k).collect();
    let system_votes = unblind(&votes, &keys)?;
    let summary = aggregate_votes(&system_votes, a, b)?;
    let (_, matrix) = vote_matrix(&system_votes)?;
    let report = TallyReport {
        summary,
        fleiss_kappa: fleiss_kappa(&matrix)?,
    };
    let path = output_path(&cfg.paths.output_dir, args.output.as_deref(), "tally.json")?;
    write_json(&report, &path)?;
    print_summary(&report)
}
