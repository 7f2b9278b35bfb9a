//! Corpus diversity and transformation analytics.

mod distinct;
mod similarity;
mod tokenize;
mod topics;
mod transform;

use thiserror::Error;

use crate::genclient::GenError;
use crate::promptgen::PromptError;

pub use distinct::{count_ngrams, dialogue_to_string, distinct_n, qa_to_string, DialogueString, DistinctReport};
pub use similarity::{cosine, pairwise_cosine, SimilarityDistribution};
pub use tokenize::{CharTokenizer, Tokenizer, VocabTokenizer};
pub use topics::{entropy_of_counts, label_topics, parse_topic_list, topic_entropy, LabelMode, TopicLabeling};
pub use transform::{transform_similarity, TransformRecord, TransformReport};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("n-gram order {0} is outside 1..=3")]
    InvalidOrder(usize),
    #[error("no string has {n} or more tokens; distinct-{n} is undefined")]
    NoNgrams { n: usize },
    #[error("pairwise similarity needs at least 2 embeddings, got {0}")]
    TooFewEmbeddings(usize),
    #[error("embedding {index} has dimension {found}, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, found: usize },
    #[error("embedding {index} has zero norm")]
    ZeroVector { index: usize },
    #[error("no topic labels to measure")]
    EmptyLabelings,
    #[error("annotator output for `{dialogue_id}` had no topic labels after {attempts} attempts")]
    UnparseableAnnotation { dialogue_id: String, attempts: u32 },
    #[error(transparent)]
    Embedding(#[from] GenError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("{0}")]
    Tokenizer(String),
}
