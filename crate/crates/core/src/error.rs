use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("empty document")]
    EmptyDocument,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CorpusError {
    pub(crate) fn line(line: usize, reason: impl Into<String>) -> Self {
        CorpusError::Line {
            line,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SummaryError {
    #[error("empty query")]
    EmptyQuery,
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("invalid budget: {0}")]
    InvalidBudget(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("AUC undefined: single reference class")]
    SingleClass,
    #[error("no judgments")]
    NoJudgments,
    #[error("non-finite predicted score at index {0}")]
    NonFinite(usize),
}

/// Failures reported by an [`LlmProvider`](crate::augment::LlmProvider).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    Response(String),
    #[error("provider configuration: {0}")]
    Config(String),
}

impl ProviderError {
    /// Transport failures, rate limiting and server errors are retried.
    pub fn is_retryable(&self) -> bool {
        match self {
            ProviderError::Transport(_) => true,
            ProviderError::Status { status, .. } => *status == 429 || *status >= 500,
            ProviderError::Response(_) | ProviderError::Config(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AugmentError {
    #[error("antonym rewriting requires relevant source")]
    AntonymNeedsRelevant,
    #[error("query generation requires relevant source")]
    GenerationNeedsRelevant,
    #[error("unparseable completion ({reason}): {raw:?}")]
    Parse { reason: String, raw: String },
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("failure rate {failed}/{attempted} exceeds threshold {threshold}")]
    FailureRate {
        failed: usize,
        attempted: usize,
        threshold: f64,
        provider_failures: usize,
    },
    #[error("invalid augmentation config: {0}")]
    Config(String),
}

impl AugmentError {
    pub fn is_provider(&self) -> bool {
        matches!(self, AugmentError::Provider(_))
    }
}
