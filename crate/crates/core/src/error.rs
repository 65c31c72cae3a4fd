use thiserror::Error;

/// Errors produced by sample construction, estimation, and bandwidth selection.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("evaluation point x = {x} must lie strictly inside (0, 1)")]
    EvaluationPoint { x: f64 },

    #[error("observation density degenerate at x = {x}: q(x) = {q:e} is at or below the floor {floor:e}")]
    DegenerateObservationDensity { x: f64, q: f64, floor: f64 },

    #[error("kernel `{name}` violates the kernel contract: {reason}")]
    KernelValidation { name: String, reason: String },

    #[error("kernel `{0}` provides no second derivative")]
    MissingSecondDerivative(String),

    #[error("an estimated observation density has no third derivative")]
    MissingThirdDerivative,

    #[error("unknown kernel `{0}`")]
    UnknownKernel(String),

    #[error("invalid bandwidth: {0}")]
    InvalidBandwidth(String),

    #[error("invalid distribution parameters: {0}")]
    InvalidDistribution(String),

    #[error("beta moment fit infeasible: {0}")]
    BetaFitInfeasible(String),

    #[error("degenerate bandwidth numerator: {0}")]
    DegenerateBandwidth(String),

    #[error("observation-density weight at or below floor for sample indices {indices:?}")]
    DegenerateWeights { indices: Vec<usize> },

    #[error("bin width {bin_width} exceeds bandwidth {h}; binned evaluation is invalid")]
    BinWidthTooLarge { bin_width: f64, h: f64 },

    #[error("sampler failure: {0}")]
    Sampling(String),
}

pub type Result<T> = std::result::Result<T, Error>;
