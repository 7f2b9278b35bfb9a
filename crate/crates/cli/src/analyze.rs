use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use dialogsynth_core::analysis::{
    dialogue_to_string, distinct_n, label_topics, pairwise_cosine, topic_entropy, transform_similarity, CharTokenizer, DistinctReport,
    LabelMode, Tokenizer, TopicLabeling, TransformRecord, TransformReport, VocabTokenizer,
};
use dialogsynth_core::corpus::{load_qa_corpus, read_dialogue_corpus, write_jsonl, QaPair};
use dialogsynth_core::dialogue::{corpus_statistics, CorpusStatistics, Dialogue};
use dialogsynth_core::genclient::{EmbeddingVector, GenError};
use dialogsynth_core::promptgen::TopicSet;
use dialogsynth_core::rng::SeededRng;
use rayon::prelude::*;
use serde::Serialize;

use crate::backend::Backends;
use crate::config::{read_required, PipelineConfig};
use crate::report::{output_path, write_json};
use crate::{Invalid, MockArgs};

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Dialogue corpus (JSONL).
    #[arg(long)]
    pub input: PathBuf,
    /// Dialogues generated without seeds, used for the repel side of the
    /// transformation check. Without it, each seeded dialogue is compared
    /// against another dialogue of the same corpus.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Seed QA corpus for the transformation check; `paths.corpus` by default.
    #[arg(long)]
    pub seeds: Option<PathBuf>,
    /// Skip topic annotation.
    #[arg(long)]
    pub no_annotate: bool,
    /// Override the configured label mode (limited or unlimited).
    #[arg(long)]
    pub label_mode: Option<LabelMode>,
    /// Report path; `<output_dir>/analysis.json` by default.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub mock: MockArgs,
}

#[derive(Debug, Serialize)]
struct SimilaritySummary {
    dialogues: usize,
    pairs: usize,
    mean: f64,
    stddev: f64,
    median: f64,
    boundary_mu_minus_3sigma: f64,
}

#[derive(Debug, Serialize)]
struct TopicSummary {
    mode: LabelMode,
    labeled_dialogues: usize,
    labels: usize,
    distinct_labels: usize,
    entropy_bits: f64,
}

#[derive(Debug, Serialize)]
struct TransformSummary {
    records: usize,
    baseline: &'static str,
    attract_mean: f64,
    attract_stddev: f64,
    attract_median: f64,
    repel_mean: f64,
    repel_median: f64,
    boundary_mu_minus_3sigma: f64,
    attract_above_boundary: f64,
    repel_above_boundary: f64,
    attract_wins: f64,
}

#[derive(Debug, Serialize)]
struct AnalysisReport {
    input: PathBuf,
    tokenizer: &'static str,
    statistics: CorpusStatistics,
    distinct: Vec<DistinctReport>,
    similarity: SimilaritySummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    topics: Option<TopicSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transform: Option<TransformSummary>,
}

fn embed_all(backends: &Backends, texts: &[String]) -> Result<Vec<EmbeddingVector<f64>>, GenError> {
    texts.par_iter().map(|t| backends.embedder.embed(t)).collect()
}

fn similarity(cfg: &PipelineConfig, backends: &Backends, texts: &[String]) -> Result<SimilaritySummary> {
    let picked: Vec<String> = if texts.len() > cfg.analysis.pairwise_sample {
        let mut idx = SeededRng::derived(cfg.seed, "pairwise").sample_indices(texts.len(), cfg.analysis.pairwise_sample);
        idx.sort_unstable();
        idx.into_iter().map(|i| texts[i].clone()).collect()
    } else {
        texts.to_vec()
    };
    if picked.len() < 2 {
        bail!(Invalid("pairwise similarity needs at least 2 dialogues".into()));
    }
    let dist = pairwise_cosine(&embed_all(backends, &picked)?)?;
    Ok(SimilaritySummary {
        dialogues: picked.len(),
        pairs: dist.len(),
        mean: dist.mean,
        stddev: dist.stddev,
        median: dist.median,
        boundary_mu_minus_3sigma: dist.boundary_mu_minus_3sigma,
    })
}

fn topics(cfg: &PipelineConfig, backends: &Backends, dialogues: &[Dialogue], mode: LabelMode) -> Result<(TopicSummary, Vec<TopicLabeling>)> {
    let set = TopicSet::load(&cfg.paths.topics)?;
    let template = read_required(&cfg.paths.annotation_template, "annotation template")?;
    let params = cfg.annotation_params();
    let labelings: Vec<TopicLabeling> = dialogues
        .par_iter()
        .map(|d| {
            let annotator = |prompt: &str, p: &_| backends.client.complete_text(&format!("annotate-{}", d.id), prompt, p);
            label_topics(d, &set, mode, &template, annotator, &params, cfg.analysis.annotation_attempts)
        })
        .collect::<Result<_, _>>()?;
    let labels: Vec<&String> = labelings.iter().flat_map(|l| &l.topics).collect();
    let distinct: std::collections::BTreeSet<&&String> = labels.iter().collect();
    let summary = TopicSummary {
        mode,
        labeled_dialogues: labelings.iter().filter(|l| !l.topics.is_empty()).count(),
        labels: labels.len(),
        distinct_labels: distinct.len(),
        entropy_bits: topic_entropy(&labelings)?,
    };
    Ok((summary, labelings))
}

fn transform(cfg: &PipelineConfig, backends: &Backends, args: &AnalyzeArgs, dialogues: &[Dialogue]) -> Result<Option<TransformSummary>> {
    let seeded: Vec<&Dialogue> = dialogues.iter().filter(|d| d.seed_qa_id.is_some()).collect();
    if seeded.is_empty() {
        return Ok(None);
    }
    let seeds_path = args.seeds.clone().unwrap_or_else(|| cfg.paths.corpus.clone());
    if args.seeds.is_none() && !seeds_path.exists() {
        log::warn!("seed corpus {} not found; skipping the transformation check", seeds_path.display());
        return Ok(None);
    }
    let (qas, _) = load_qa_corpus(&seeds_path)?;
    let by_id: HashMap<&str, &QaPair> = qas.iter().map(|q| (q.id.as_str(), q)).collect();
    let (baselines, source) = match &args.baseline {
        Some(p) => (read_dialogue_corpus(p)?, "file"),
        None => (dialogues.to_vec(), "shifted"),
    };
    if baselines.is_empty() || (source == "shifted" && baselines.len() < 2) {
        log::warn!("not enough baseline dialogues; skipping the transformation check");
        return Ok(None);
    }
    let embed = |text: &str| backends.embedder.embed(text);
    let mut records: Vec<TransformRecord<f64>> = Vec::new();
    for (i, d) in seeded.iter().enumerate() {
        let id = d.seed_qa_id.as_deref().unwrap_or_default();
        let Some(qa) = by_id.get(id) else {
            log::warn!("dialogue {}: seed QA `{id}` not in {}", d.id, seeds_path.display());
            continue;
        };
        let baseline = if source == "shifted" {
            let own = dialogues.iter().position(|x| x.id == d.id).unwrap_or(i);
            &baselines[(own + 1) % baselines.len()]
        } else {
            &baselines[i % baselines.len()]
        };
        records.push(transform_similarity(qa, d, baseline, embed)?);
    }
    if records.is_empty() {
        return Ok(None);
    }
    let rep = TransformReport::from_records(&records)?;
    Ok(Some(TransformSummary {
        records: records.len(),
        baseline: source,
        attract_mean: rep.attract.mean,
        attract_stddev: rep.attract.stddev,
        attract_median: rep.attract.median,
        repel_mean: rep.repel.mean,
        repel_median: rep.repel.median,
        boundary_mu_minus_3sigma: rep.boundary,
        attract_above_boundary: rep.attract_above_boundary,
        repel_above_boundary: rep.repel_above_boundary,
        attract_wins: TransformReport::attract_wins(&records),
    }))
}

fn render(report: &AnalysisReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", report.statistics);
    let _ = writeln!(out, "{:<12}{:>12}{:>12}{:>11}", "n-gram", "# Unique", "# Total", "Distinct");
    for d in &report.distinct {
        let _ = writeln!(out, "{:<12}{:>12}{:>12}{:>11.3}", d.n, d.unique_ngrams, d.total_ngrams, d.distinct_ratio);
    }
    let s = &report.similarity;
    let _ = writeln!(
        out,
        "\npairwise cosine over {} pairs: mean {:.4}, std {:.4}, median {:.4}, mean-3std {:.4}",
        s.pairs, s.mean, s.stddev, s.median, s.boundary_mu_minus_3sigma
    );
    if let Some(t) = &report.topics {
        let _ = writeln!(out, "topic entropy ({}): {:.4} bits over {} labels", t.mode, t.entropy_bits, t.labels);
    }
    if let Some(t) = &report.transform {
        let _ = writeln!(
            out,
            "attract mean {:.4} / repel mean {:.4}; boundary {:.4}; attract above {:.1}%, repel above {:.1}%",
            t.attract_mean,
            t.repel_mean,
            t.boundary_mu_minus_3sigma,
            100.0 * t.attract_above_boundary,
            100.0 * t.repel_above_boundary
        );
    }
    out
}

pub fn run(cfg: &PipelineConfig, args: AnalyzeArgs) -> Result<()> {
    let dialogues = read_dialogue_corpus(&args.input)?;
    if dialogues.is_empty() {
        bail!(Invalid(format!("{} contains no dialogues", args.input.display())));
    }
    let statistics = corpus_statistics(&dialogues)?;
    let strings: Vec<_> = dialogues.iter().map(|d| dialogue_to_string(d, "")).collect();
    let (tokenizer, tokenizer_name): (Box<dyn Tokenizer>, _) = match &cfg.paths.vocab {
        Some(p) => (Box::new(VocabTokenizer::from_file(p)?), "vocab"),
        None => (Box::new(CharTokenizer), "char"),
    };
    let distinct = (1..=3)
        .map(|n| distinct_n(&strings, n, tokenizer.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;

    let backends = Backends::connect(cfg, &args.mock)?;
    let texts: Vec<String> = strings.into_iter().map(|s| s.text).collect();
    let similarity = similarity(cfg, &backends, &texts)?;

    let dir = &cfg.paths.output_dir;
    let topics = if cfg.analysis.annotate && !args.no_annotate {
        let mode = args.label_mode.unwrap_or(cfg.analysis.label_mode);
        let (summary, labelings) = topics(cfg, &backends, &dialogues, mode)?;
        write_jsonl(&labelings, &output_path(dir, None, "topic_labels.jsonl")?)?;
        Some(summary)
    } else {
        None
    };
    let transform = transform(cfg, &backends, &args, &dialogues)?;

    let report = AnalysisReport {
        input: args.input.clone(),
        tokenizer: tokenizer_name,
        statistics,
        distinct,
        similarity,
        topics,
        transform,
    };
    let path = output_path(dir, args.output.as_deref(), "analysis.json")?;
    write_json(&report, &path)?;
    print!("{}", render(&report));
    println!("report written to {}", path.display());
    Ok(())
}
