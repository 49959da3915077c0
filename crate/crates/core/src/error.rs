use thiserror::Error;

/// Errors raised by dataset validation, kernels, statistics and calibration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("group {group} is empty")]
    EmptyGroup { group: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("at least two groups are required, got {0}")]
    TooFewGroups(usize),
    #[error("discrete level {level} outside 1..={levels}")]
    DiscreteOutOfRange { level: usize, levels: usize },
    #[error("kernel does not apply to this data domain: {0}")]
    DomainMismatch(String),
    #[error("all points are identical; median heuristic bandwidth would be zero")]
    AllPointsIdentical,
    #[error("bandwidth must be resolved before evaluating the kernel")]
    UnresolvedBandwidth,
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("index ({i}, {j}) out of range for {n} observations")]
    IndexOutOfRange { i: usize, j: usize, n: usize },
    #[error("pairwise statistic needs two distinct groups, got ({0}, {0})")]
    SameGroup(usize),
    #[error("exact enumeration needs {count} assignments, above the limit of {limit}")]
    EnumerationTooLarge { count: String, limit: u64 },
    #[error("matrix built from {matrix} cannot drive the {statistic} statistic")]
    IncompatibleMatrix { matrix: String, statistic: String },
    #[error("variance proxy needs at least two observations")]
    SingletonDataset,
    #[error("closed form requires balanced two-sample data, got sizes {0:?}")]
    UnbalancedGroups(Vec<usize>),
    #[error("variance proxy is zero")]
    ZeroVariance,
    #[error("McDiarmid p-value requires a kernel bound B")]
    MissingBound,
    #[error("spectrum has no positive eigenvalue")]
    AllZero,
    #[error("variance entries must be positive: {0}")]
    NonpositiveVariance(String),
    #[error("probabilities do not form a valid simplex: {0}")]
    InvalidSimplex(String),
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("Gumbel approximation needs a balanced design, got sizes {0:?}")]
    UnbalancedDesign(Vec<usize>),
    #[error("Gumbel centering needs K >= 3, got {0}")]
    KTooSmall(usize),
    #[error("within-group dispersion is zero")]
    ZeroWithinDispersion,
    #[error("too few points: {0}")]
    TooFewPoints(String),
    #[error("degenerate truncation support: {0}")]
    DegenerateSupport(String),
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported combination: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
