use thiserror::Error;

/// Errors reported by the testing procedure and its supporting machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The global significance level must lie in (0, 1].
    #[error("alpha must be in (0, 1], got {0}")]
    InvalidAlpha(f64),

    /// A subfamily must contain at least one p-value.
    #[error("subfamily must contain at least one p-value")]
    EmptySubfamily,

    /// Every p-value must lie in [0, 1].
    #[error("p-value at index {index} must be in [0, 1], got {value}")]
    InvalidPValue { index: usize, value: f64 },

    /// A heads count outside the support of the experiment.
    #[error("count {k} is outside the support 0..={n}")]
    OutOfSupport { k: u32, n: u32 },

    /// Toss counts are limited so tail sums stay exact in integer arithmetic.
    #[error("number of tosses must be in 1..=64, got {0}")]
    InvalidTossCount(u32),

    /// A per-toss success probability outside [0, 1].
    #[error("per-toss probability must be in [0, 1], got {0}")]
    InvalidTossProbability(f64),

    /// A simulation or scenario parameter outside its documented range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
