use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use dialogsynth_core::corpus::{load_qa_corpus, sample_seed_qas, write_dialogue_corpus, write_jsonl};
use dialogsynth_core::dialogue::{accept_generation, Dialogue, Method};
use dialogsynth_core::genclient::{AttemptOutcome, GenError};
use dialogsynth_core::promptgen::{
    build_smile_prompt, build_standard_prompt, build_standardt_prompt, sample_topic, PromptText, TopicSet, DEFAULT_QA_BUDGET,
};
use dialogsynth_core::rng::derive_seed;
use rayon::prelude::*;
use serde::Serialize;

use crate::backend::Backends;
use crate::config::{read_required, PipelineConfig};
use crate::report::{output_path, print_summary};
use crate::{Invalid, MockArgs};

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Prompt method: standard, standardT or smile.
    #[arg(long)]
    pub method: Method,
    /// Number of dialogues to generate.
    #[arg(long)]
    pub count: usize,
    /// Seed QA corpus for smile; `paths.corpus` by default.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Dialogue corpus path; `<output_dir>/dialogues_<method>.jsonl` by default.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub mock: MockArgs,
}

#[derive(Serialize)]
struct Summary {
    method: Method,
    requested: usize,
    accepted: usize,
    exhausted: usize,
    attempts: usize,
    format_rejects: usize,
    turns_rejects: usize,
    transport_errors: usize,
    output: PathBuf,
    attempt_log: PathBuf,
    audit_log: PathBuf,
}

fn build_prompts(cfg: &PipelineConfig, args: &GenerateArgs) -> Result<Vec<(String, PromptText)>> {
    let method = args.method;
    let id = |i: usize| format!("{method}-{i:05}");
    match method {
        Method::Standard => {
            let template = read_required(&cfg.paths.standard_template, "template")?;
            let prompt = build_standard_prompt(&template)?;
            Ok((0..args.count).map(|i| (id(i), prompt.clone())).collect())
        }
        Method::StandardT => {
            let template = read_required(&cfg.paths.standardt_template, "template")?;
            let topics = TopicSet::load(&cfg.paths.topics)?;
            (0..args.count)
                .map(|i| {
                    let topic = sample_topic(&topics, derive_seed(cfg.seed, &format!("topic:{i}")));
                    Ok((id(i), build_standardt_prompt(&template, topic)?))
                })
                .collect()
        }
        Method::Smile => {
            let template = read_required(&cfg.paths.smile_template, "template")?;
            let input = args.input.clone().unwrap_or_else(|| cfg.paths.corpus.clone());
            let (corpus, _) = load_qa_corpus(&input)?;
            let pool = cfg.sampling.pool_size.min(corpus.len());
            let seeds = sample_seed_qas(&corpus, pool, args.count, derive_seed(cfg.seed, "seed_qa"))
                .with_context(|| format!("sampling {} seed QAs from {}", args.count, input.display()))?;
            seeds
                .iter()
                .enumerate()
                .map(|(i, qa)| Ok((id(i), build_smile_prompt(&template, qa, DEFAULT_QA_BUDGET)?)))
                .collect()
        }
        Method::Seed => bail!(Invalid("method `seed` names source QAs and cannot be generated".into())),
    }
}

pub fn run(cfg: &PipelineConfig, args: GenerateArgs) -> Result<()> {
    if args.count == 0 {
        bail!(Invalid("--count must be at least 1".into()));
    }
    let prompts = build_prompts(cfg, &args)?;
    let backends = Backends::connect(cfg, &args.mock)?;
    let markers = cfg.markers();
    let min_turns = cfg.filter.min_turns;
    let validator = |raw: &str| accept_generation(raw, &markers, min_turns);
    let params = cfg.synthesis_params();

    let results: Vec<Result<Dialogue, GenError>> = prompts
        .par_iter()
        .map(|(id, prompt)| {
            backends
                .client
                .generate_with_retry(id, prompt, &params, &validator, cfg.provider.max_attempts)
        })
        .collect();

    let mut dialogues = Vec::with_capacity(results.len());
    let mut exhausted = Vec::new();
    let mut fatal = None;
    for r in results {
        match r {
            Ok(d) => dialogues.push(d),
            Err(GenError::Exhausted { prompt_id, .. }) => exhausted.push(prompt_id),
            Err(e) => {
                fatal.get_or_insert(e);
            }
        }
    }
    dialogues.sort_by(|a, b| a.id.cmp(&b.id));

    let dir = &cfg.paths.output_dir;
    let method = args.method;
    let output = output_path(dir, args.output.as_deref(), &format!("dialogues_{method}.jsonl"))?;
    let attempt_path = output.with_file_name(format!("attempts_{method}.jsonl"));
    let audit_path = output.with_file_name(format!("audit_{method}.jsonl"));
    let attempts = backends.client.attempt_log().sorted();
    write_dialogue_corpus(&dialogues, &output)?;
    write_jsonl(&attempts, &attempt_path)?;
    write_jsonl(&backends.audit.sorted(), &audit_path)?;

    let outcome = |o: AttemptOutcome| attempts.iter().filter(|a| a.outcome == o).count();
    print_summary(&Summary {
        method,
        requested: prompts.len(),
        accepted: dialogues.len(),
        exhausted: exhausted.len(),
        attempts: attempts.len(),
        format_rejects: outcome(AttemptOutcome::FormatReject),
        turns_rejects: outcome(AttemptOutcome::TurnsReject),
        transport_errors: outcome(AttemptOutcome::TransportError),
        output,
        attempt_log: attempt_path,
        audit_log: audit_path,
    })?;

    if let Some(e) = fatal {
        return Err(e.into());
    }
    if let Some(first) = exhausted.first() {
        let attempts: Vec<_> = backends.client.attempt_log().sorted().into_iter().filter(|a| &a.prompt_id == first).collect();
        return Err(anyhow::Error::new(GenError::Exhausted {
            prompt_id: first.clone(),
            attempts,
        })
        .context(format!("{} of {} prompts produced no acceptable dialogue", exhausted.len(), prompts.len())));
    }
    Ok(())
}
