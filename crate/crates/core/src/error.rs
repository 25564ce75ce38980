use thiserror::Error;

pub type Result<T> = std::result::Result<T, AvnError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AvnError {
    #[error("factor {index} is not normalized (norm² = {norm_sqr})")]
    NotNormalized { index: usize, norm_sqr: f64 },
    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("expectation value has imaginary part {imag:e}")]
    ComplexExpectation { imag: f64 },
    #[error("parameter `{name}` = {value} is out of range")]
    ParameterOutOfRange { name: &'static str, value: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("negative outcome probability {0:e}")]
    NegativeProbability(f64),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("correlation estimate is undefined for an empty count table")]
    EmptyCountTable,
    #[error("configuration error: {0}")]
    Config(String),
}
