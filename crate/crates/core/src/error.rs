use thiserror::Error;

/// Errors raised by the simulator, the analytic evaluators and the estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension must be at least 3, got {0}")]
    InvalidDimension(usize),

    #[error("degenerate grazing flight: chord denominator {denominator:e} underflows")]
    DegenerateGrazing { denominator: f64 },

    #[error("step budget of {max_steps} exhausted before first passage")]
    StepBudgetExhausted { max_steps: u64 },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("quadrature tolerance not met: requested {requested:e}, achieved {achieved:e}")]
    ToleranceNotMet { requested: f64, achieved: f64 },

    #[error("region is not contained in the unit disc")]
    RegionNotContained,

    #[error("insufficient tail data: {exceedances} samples exceed the upper fit bound, need {required}")]
    InsufficientTailData { exceedances: usize, required: usize },

    #[error("too few batches: {batches} (need at least {required})")]
    TooFewBatches { batches: usize, required: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
