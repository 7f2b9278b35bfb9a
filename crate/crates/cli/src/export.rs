use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use dialogsynth_core::corpus::read_dialogue_corpus;
use dialogsynth_core::sft::export_sft;
use serde::Serialize;

use crate::config::{read_required, PipelineConfig};
use crate::report::{output_path, print_summary};

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Dialogue corpus (JSONL).
    #[arg(long)]
    pub input: PathBuf,
    /// Chat-record file; `<output_dir>/sft.jsonl` by default.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Serialize)]
struct Summary {
    dialogues: usize,
    records: usize,
    output: PathBuf,
}

pub fn run(cfg: &PipelineConfig, args: ExportArgs) -> Result<()> {
    let system_prompt = read_required(&cfg.paths.system_prompt, "system prompt")?;
    let dialogues = read_dialogue_corpus(&args.input)?;
    let output = output_path(&cfg.paths.output_dir, args.output.as_deref(), "sft.jsonl")?;
    let records = export_sft(&dialogues, system_prompt.trim(), &output)?;
    print_summary(&Summary {
        dialogues: dialogues.len(),
        records,
        output,
    })
}
