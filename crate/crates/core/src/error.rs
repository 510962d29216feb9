use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("cutoff too small for amplitude (|alpha|^2 = {abs2}, n_max = {n_max})")]
    CutoffTooSmall { abs2: f64, n_max: usize },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("mixed cutoffs in ensemble: {0} vs {1}")]
    MixedCutoffs(usize, usize),

    #[error("state is not normalized (trace = {0})")]
    NotNormalized(f64),

    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),

    #[error("infinite relative entropy (support of rho not contained in support of sigma, leaked weight {0:e})")]
    InfiniteRelativeEntropy(f64),

    #[error("operator out of range [0, 1] (eigenvalues in [{min}, {max}])")]
    OperatorOutOfRange { min: f64, max: f64 },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("empty state set")]
    EmptySet,

    #[error("invalid state set: {0}")]
    InvalidSet(String),

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("enumeration cap exceeded: {size} > {cap}")]
    CapExceeded { size: f64, cap: f64 },

    #[error("rejection budget of {draws} draws exceeded (acceptance estimate {acceptance:e})")]
    RejectionBudget { draws: u64, acceptance: f64 },

    #[error("rate check failed: M*L = {requested} exceeds K_n = {budget}")]
    RateBudget { requested: u64, budget: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{name} = {x}")))
    }
}
