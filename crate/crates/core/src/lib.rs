//! Multi-turn support-dialogue synthesis from single-turn QA corpora.
//!
//! The pipeline cleans a QA corpus ([`preprocess`]), renders generation
//! prompts ([`promptgen`]), calls a chat-completion provider with format
//! validation and bounded retries ([`genclient`], [`dialogue`]), measures
//! the diversity of the resulting corpus ([`analysis`]), exports
//! fine-tuning records ([`sft`]) and scores model replies ([`evalharness`]).
//!
//! Numeric kernels are generic over [`scalar::Scalar`]; the aliases below
//! fix them to `f64`.

pub mod analysis;
pub mod corpus;
pub mod dialogue;
pub mod evalharness;
pub mod genclient;
pub mod preprocess;
pub mod promptgen;
pub mod rng;
pub mod scalar;
pub mod sft;

pub use corpus::QaPair;
pub use dialogue::{Dialogue, MarkerConfig, Method, Role, Utterance};
pub use genclient::{GenClient, GenParams};
pub use scalar::Scalar;

pub type Embedding = genclient::EmbeddingVector<f64>;
pub type SimilarityStats = analysis::SimilarityDistribution<f64>;
pub type TransformStats = analysis::TransformReport<f64>;
