//! Pipeline configuration file.
//!
//! Every setting has a default, so a config only needs the entries it
//! changes. Relative paths resolve against the directory of the config file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dialogsynth_core::dialogue::{MarkerConfig, DEFAULT_MIN_TURNS};
use dialogsynth_core::evalharness::{MeteorParams, MetricConfig};
use dialogsynth_core::genclient::{
    GenParams, DEFAULT_CHAT_MODEL, DEFAULT_CONTEXT_BUDGET_CHARS, DEFAULT_EMBEDDING_DIMENSION, DEFAULT_EMBEDDING_MAX_CHARS,
    DEFAULT_EMBEDDING_MODEL, DEFAULT_MAX_ATTEMPTS, DEFAULT_MAX_OUTPUT_TOKENS,
};
use dialogsynth_core::analysis::LabelMode;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Top-level seed; every component derives its own stream from it.
    pub seed: u64,
    pub workers: usize,
    pub paths: Paths,
    pub provider: ProviderConfig,
    pub filter: FilterConfig,
    pub sampling: SamplingConfig,
    pub analysis: AnalysisConfig,
    pub evaluation: EvaluationConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    pub rules: PathBuf,
    pub topics: PathBuf,
    pub standard_template: PathBuf,
    pub standardt_template: PathBuf,
    pub smile_template: PathBuf,
    pub annotation_template: PathBuf,
    pub system_prompt: PathBuf,
    pub output_dir: PathBuf,
    /// Optional subword vocabulary for distinct-n; characters otherwise.
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    /// Overrides `OPENAI_BASE_URL` when set.
    pub base_url: Option<String>,
    pub chat_model: String,
    pub annotation_model: String,
    pub embedding_model: String,
    pub embedding_dimension: usize,
    pub embedding_max_chars: usize,
    pub temperature: f64,
    pub top_p: f64,
    pub max_output_tokens: u32,
    pub annotation_temperature: f64,
    pub annotation_top_p: f64,
    pub max_attempts: u32,
    pub retry_base_delay_ms: u64,
    pub retry_max_delay_ms: u64,
    pub timeout_secs: u64,
    pub context_budget_chars: usize,
    /// Requests per minute across all workers; unlimited when unset.
    pub requests_per_minute: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub min_turns: usize,
    pub help_seeker_marker: String,
    pub supporter_marker: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub pool_size: usize,
    pub sample_size: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Cap on the number of dialogues entering the pairwise comparison.
    pub pairwise_sample: usize,
    pub annotate: bool,
    pub label_mode: LabelMode,
    pub annotation_attempts: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BertScoreSource {
    /// Hashed character vectors, no provider needed.
    HashedChars,
    /// One provider embedding per text.
    Provider,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub bleu_smoothing: Option<f64>,
    pub rouge_beta: f64,
    pub meteor_alpha: f64,
    pub meteor_beta: f64,
    pub meteor_gamma: f64,
    pub bertscore: BertScoreSource,
    pub bundle_sample: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 1234,
            workers: 4,
            paths: Paths::default(),
            provider: ProviderConfig::default(),
            filter: FilterConfig::default(),
            sampling: SamplingConfig::default(),
            analysis: AnalysisConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            corpus: "data/qa.jsonl".into(),
            rules: "config/cleaning.toml".into(),
            topics: "config/topics.toml".into(),
            standard_template: "templates/standard.txt".into(),
            standardt_template: "templates/standardt.txt".into(),
            smile_template: "templates/smile.txt".into(),
            annotation_template: "templates/annotation.txt".into(),
            system_prompt: "templates/system_prompt.txt".into(),
            output_dir: "out".into(),
            vocab: None,
        }
    }
}

impl Default for ProviderConfig {
    fn default() -> Self {
        let synthesis = GenParams::synthesis(DEFAULT_CHAT_MODEL);
        let annotation = GenParams::annotation(DEFAULT_CHAT_MODEL);
        Self {
            base_url: None,
            chat_model: DEFAULT_CHAT_MODEL.into(),
            annotation_model: DEFAULT_CHAT_MODEL.into(),
            embedding_model: DEFAULT_EMBEDDING_MODEL.into(),
            embedding_dimension: DEFAULT_EMBEDDING_DIMENSION,
            embedding_max_chars: DEFAULT_EMBEDDING_MAX_CHARS,
            temperature: synthesis.temperature,
            top_p: synthesis.top_p,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            annotation_temperature: annotation.temperature,
            annotation_top_p: annotation.top_p,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            retry_base_delay_ms: 500,
            retry_max_delay_ms: 30_000,
            timeout_secs: 120,
            context_budget_chars: DEFAULT_CONTEXT_BUDGET_CHARS,
            requests_per_minute: None,
        }
    }
}

impl Default for FilterConfig {
    fn default() -> Self {
        let m = MarkerConfig::default();
        Self {
            min_turns: DEFAULT_MIN_TURNS,
            help_seeker_marker: m.help_seeker,
            supporter_marker: m.supporter,
        }
    }
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            pool_size: 5000,
            sample_size: 500,
        }
    }
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            pairwise_sample: 500,
            annotate: true,
            label_mode: LabelMode::Limited,
            annotation_attempts: 3,
        }
    }
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        let m = MeteorParams::default();
        Self {
            bleu_smoothing: None,
            rouge_beta: 1.0,
            meteor_alpha: m.alpha,
            meteor_beta: m.beta,
            meteor_gamma: m.gamma,
            bertscore: BertScoreSource::HashedChars,
            bundle_sample: 100,
        }
    }
}

impl PipelineConfig {
    /// Reads `path`, or returns defaults rooted at the working directory.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            let cfg = Self::default();
            cfg.validate()?;
            return Ok(cfg);
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| crate::Invalid(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.paths.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.provider;
        let mut problems = Vec::new();
        if self.workers == 0 || self.workers > 256 {
            problems.push(format!("workers must be in 1..=256, got {}", self.workers));
        }
        if p.max_attempts == 0 {
            problems.push("provider.max_attempts must be at least 1".to_string());
        }
        if p.embedding_dimension == 0 {
            problems.push("provider.embedding_dimension must be positive".to_string());
        }
        if self.filter.min_turns == 0 {
            problems.push("filter.min_turns must be at least 1".to_string());
        }
        if self.filter.help_seeker_marker.trim().is_empty()
            || self.filter.supporter_marker.trim().is_empty()
            || self.filter.help_seeker_marker == self.filter.supporter_marker
        {
            problems.push("filter role markers must be non-empty and distinct".to_string());
        }
        if self.sampling.sample_size == 0 || self.sampling.sample_size > self.sampling.pool_size {
            problems.push("sampling.sample_size must be in 1..=pool_size".to_string());
        }
        if self.analysis.pairwise_sample < 2 {
            problems.push("analysis.pairwise_sample must be at least 2".to_string());
        }
        if self.analysis.annotation_attempts == 0 {
            problems.push("analysis.annotation_attempts must be at least 1".to_string());
        }
        let e = &self.evaluation;
        if !(0.0..=1.0).contains(&e.meteor_alpha) || e.meteor_beta <= 0.0 || !(0.0..=1.0).contains(&e.meteor_gamma) {
            problems.push("evaluation.meteor_* parameters out of range".to_string());
        }
        if e.rouge_beta <= 0.0 {
            problems.push("evaluation.rouge_beta must be positive".to_string());
        }
        if let Err(err) = self.synthesis_params().validate().and(self.annotation_params().validate()) {
            problems.push(err.to_string());
        }
        if !problems.is_empty() {
            bail!(crate::Invalid(problems.join("; ")));
        }
        Ok(())
    }

    pub fn markers(&self) -> MarkerConfig {
        MarkerConfig {
            help_seeker: self.filter.help_seeker_marker.clone(),
            supporter: self.filter.supporter_marker.clone(),
        }
    }

    pub fn synthesis_params(&self) -> GenParams {
        GenParams {
            temperature: self.provider.temperature,
            top_p: self.provider.top_p,
            max_output_tokens: self.provider.max_output_tokens,
            model_name: self.provider.chat_model.clone(),
        }
    }

    pub fn annotation_params(&self) -> GenParams {
        GenParams {
            temperature: self.provider.annotation_temperature,
            top_p: self.provider.annotation_top_p,
            model_name: self.provider.annotation_model.clone(),
            ..GenParams::annotation(&self.provider.annotation_model)
        }
    }

    pub fn metric_config(&self) -> MetricConfig {
        let e = &self.evaluation;
        MetricConfig {
            bleu_smoothing: e.bleu_smoothing,
            rouge_beta: e.rouge_beta,
            meteor: MeteorParams {
                alpha: e.meteor_alpha,
                beta: e.meteor_beta,
                gamma: e.meteor_gamma,
                ..MeteorParams::default()
            },
        }
    }
}

impl Paths {
    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.corpus,
            &mut self.rules,
            &mut self.topics,
            &mut self.standard_template,
            &mut self.standardt_template,
            &mut self.smile_template,
            &mut self.annotation_template,
            &mut self.system_prompt,
            &mut self.output_dir,
        ] {
            fix(p);
        }
        if let Some(v) = &mut self.vocab {
            fix(v);
        }
    }
}

/// Reads a required input file, naming the path on failure.
pub fn read_required(path: &Path, what: &str) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {what} {}", path.display()))
}
