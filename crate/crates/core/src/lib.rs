//! Relevance data tooling: mix-structured summaries for query-document
//! pairs, LLM-driven query augmentation, and 3-grade relevance metrics.

pub mod augment;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod scorer;
pub mod summarizer;
pub mod textseg;

pub use corpus::{DatasetStats, LabeledPair, RelevanceLabel};
pub use error::{AugmentError, CorpusError, MetricError, ProviderError, SummaryError, TextError};
pub use metrics::{GsbCounts, ScoredPrediction};
pub use summarizer::{MixSummary, SummaryBudget};
pub use textseg::{SegmentedDocument, Sentence, Token};
