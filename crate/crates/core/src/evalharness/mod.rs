//! Automatic response metrics and the human-evaluation workflow.

mod bertscore;
mod human;
mod metrics;
mod table;

use thiserror::Error;

use crate::genclient::GenError;

pub use bertscore::{bertscore, BertScore, BertScoreMode, HashingCharEmbedder, TokenEmbedder, WholeTextEmbedder};
pub use human::{
    aggregate_votes, fleiss_kappa, make_judgment_bundles, unblind, vote_matrix, BundleKey, BundleResponse, JudgmentBundle, SlotVote,
    SystemVote, VoteSummary, REFERENCE_SYSTEM,
};
pub use metrics::{
    align, bleu_n, count_chunks, distinct_responses, lcs_len, meteor, meteor_from_alignment, rouge_l, tokenize_chars, Alignment,
    MeteorParams,
};
pub use table::{evaluate, evaluate_all, score_case, CaseScores, EvalCase, MetricConfig, ScoreRow, ScoreTable};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{0} is empty")]
    EmptyInput(&'static str),
    #[error("n-gram order {0} is not supported")]
    InvalidOrder(usize),
    #[error("case `{case_id}` has no response from `{system}`")]
    MissingResponse { case_id: String, system: String },
    #[error("case `{case_id}`: {reason}")]
    InvalidCase { case_id: String, reason: String },
    #[error("{0}")]
    InvalidVotes(String),
    #[error(transparent)]
    Embedding(#[from] GenError),
}
