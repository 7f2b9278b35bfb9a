use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use dialogsynth_core::corpus::{load_qa_corpus, write_jsonl, write_qa_corpus};
use dialogsynth_core::preprocess::{clean_qa, CleaningConfig, PreprocessError};
use serde::Serialize;

use crate::config::{read_required, PipelineConfig};
use crate::Invalid;
use crate::report::{output_path, print_summary};

#[derive(Debug, Args)]
pub struct CleanArgs {
    /// QA corpus (JSONL); `paths.corpus` by default.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Cleaned corpus path; `<output_dir>/cleaned.jsonl` by default.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Serialize)]
struct Summary {
    records: usize,
    changed: usize,
    dropped: usize,
    review_flags: usize,
    output: PathBuf,
    log: PathBuf,
    flags: PathBuf,
}

pub fn run(cfg: &PipelineConfig, args: CleanArgs) -> Result<()> {
    let input = args.input.unwrap_or_else(|| cfg.paths.corpus.clone());
    let cleaning = CleaningConfig::from_toml_str(&read_required(&cfg.paths.rules, "rule file")?)
        .map_err(|e| Invalid(format!("rule file {}: {e}", cfg.paths.rules.display())))?;
    let rules = cleaning.rule_list()?;
    let (qas, _) = load_qa_corpus(&input)?;

    let mut cleaned = Vec::with_capacity(qas.len());
    let mut log = Vec::new();
    let mut flags = Vec::new();
    let mut dropped = 0;
    for qa in &qas {
        let (out, entry, mut f) = match clean_qa(qa, &rules, &cleaning) {
            Ok(r) => r,
            Err(PreprocessError::QuestionTooLong { .. }) => {
                log::warn!("dropping `{}`: question leaves no room for the answer", qa.id);
                dropped += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        cleaned.push(out);
        log.extend(entry);
        flags.append(&mut f);
    }

    let dir = &cfg.paths.output_dir;
    let output = output_path(dir, args.output.as_deref(), "cleaned.jsonl")?;
    let log_path = output_path(dir, None, "clean_log.jsonl")?;
    let flags_path = output_path(dir, None, "review_flags.jsonl")?;
    write_qa_corpus(&cleaned, &output)?;
    write_jsonl(&log, &log_path)?;
    write_jsonl(&flags, &flags_path)?;
    print_summary(&Summary {
        records: cleaned.len(),
        changed: log.len(),
        dropped,
        review_flags: flags.len(),
        output,
        log: log_path,
        flags: flags_path,
    })
}
