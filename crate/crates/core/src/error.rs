use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension matrix of the independent parameters is singular (min/max pivot ratio {ratio:.3e})")]
    SingularDimensionMatrix { ratio: f64 },

    #[error("construction rows are linearly dependent (rank {rank} < {expected})")]
    DependentRows { rank: usize, expected: usize },

    #[error("target exponent must be non-zero")]
    ZeroTargetExponent,

    #[error("matrix of construction exponents is singular")]
    SingularBeta,

    #[error("renormalization system matrix is singular (rank {rank} of {size}): {matrix:?}")]
    SingularRenormMatrix {
        matrix: Vec<Vec<f64>>,
        rank: usize,
        size: usize,
    },

    #[error("parameter `{name}` must be strictly positive, got {value}")]
    NonPositiveParameter { name: String, value: f64 },

    #[error("missing value for parameter `{0}`")]
    MissingParameter(String),

    #[error("group constant #{index} must be strictly positive, got {value}")]
    NonPositiveConstant { index: usize, value: f64 },

    #[error("non-finite activation while evaluating row {row}")]
    NonFiniteActivation { row: usize },

    #[error("non-finite gradient")]
    NonFiniteGradient,

    #[error("training diverged: non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("collapse binning is degenerate: {0}")]
    DegenerateBins(String),

    #[error("argument out of domain: {0}")]
    OutOfDomain(String),

    #[error("root finder did not converge in {iterations} iterations (bracket [{lo}, {hi}])")]
    NoConvergence { iterations: usize, lo: f64, hi: f64 },

    #[error("dataset is empty after filtering ({rejected} rows rejected)")]
    EmptyDataset { rejected: usize },

    #[error("scaling column `{column}` has fewer than two distinct values; its exponents are unidentifiable")]
    Unidentifiable { column: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SingularDimensionMatrix { .. }
            | Error::SingularBeta
            | Error::SingularRenormMatrix { .. } => 3,
            Error::NonFiniteActivation { .. }
            | Error::NonFiniteGradient
            | Error::NonFiniteLoss { .. } => 4,
            Error::Io(_) => 5,
            _ => 2,
        }
    }

    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::SingularDimensionMatrix { .. } => "SingularDimensionMatrix",
            Error::DependentRows { .. } => "DependentRows",
            Error::ZeroTargetExponent => "ZeroTargetExponent",
            Error::SingularBeta => "SingularBeta",
            Error::SingularRenormMatrix { .. } => "SingularRenormMatrix",
            Error::NonPositiveParameter { .. } => "NonPositiveParameter",
            Error::MissingParameter(_) => "MissingParameter",
            Error::NonPositiveConstant { .. } => "NonPositiveConstant",
            Error::NonFiniteActivation { .. } => "NonFiniteActivation",
            Error::NonFiniteGradient => "NonFiniteGradient",
            Error::NonFiniteLoss { .. } => "NonFiniteLoss",
            Error::DegenerateBins(_) => "DegenerateBins",
            Error::OutOfDomain(_) => "OutOfDomain",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::EmptyDataset { .. } => "EmptyDataset",
            Error::Unidentifiable { .. } => "Unidentifiable",
            Error::Parse { .. } => "ParseError",
            Error::Config(_) => "ConfigError",
            Error::Io(_) => "IoError",
        }
    }
}
