use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("basis is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("scaling table level {level} exceeds the cap of {cap}")]
    TableTooLarge { level: u32, cap: u32 },

    #[error("state lies in the kernel of the embedding operator (trace {0:.3e})")]
    KernelOfOperator(f64),

    #[error("sample set is empty")]
    EmptySamples,

    #[error("closed-form MAP requires noise-free samples; use the posterior functional for noisy samples")]
    NoisySamples,

    #[error("sample {value} lies outside [{lo}, {hi}]")]
    SampleOutsideInterval { value: f64, lo: f64, hi: f64 },

    #[error("noise matrix is not row-stochastic: {0}")]
    NotStochastic(String),

    #[error("ratio undefined: kernel diagonal vanishes on the whole grid")]
    RatioUndefined,

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
