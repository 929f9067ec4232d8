use thiserror::Error;

/// Every failure the engine, simulator and oracles can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SoapError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("moment of order {order} is infinite for {law}")]
    InfiniteMoment { order: u32, law: String },
    #[error("age {age} is beyond the support of the size law (tail probability is zero)")]
    DeadAge { age: f64 },
    #[error("work variable has zero mean; its equilibrium transform is undefined")]
    ZeroMeanWork,
    #[error("rank length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("age {age} outside the generated rank pieces (ceiling {ceiling})")]
    AgeOutOfRange { age: f64, ceiling: f64 },
    #[error("empty worst-future window: age {age} is not below size {size}")]
    EmptyWindow { age: f64, size: f64 },
    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),
    #[error("policy `{policy}` needs parameter `{param}`")]
    MissingParam { policy: String, param: String },
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("more than {limit} recycled intervals below the age ceiling")]
    TruncationExceeded { limit: usize },
    #[error("quadrature did not reach the requested tolerance: {0}")]
    QuadratureBudget(String),
    #[error("unstable system: load {load} >= 1")]
    Unstable { load: f64 },
    #[error("fixed-point iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("unknown reference oracle `{0}`")]
    UnknownOracle(String),
    #[error("invalid simulation config: {0}")]
    ConfigInvalid(String),
    #[error("size {size} is outside the support of family `{family}`")]
    SizeOutOfSupport { size: f64, family: String },
}

pub type Result<T> = std::result::Result<T, SoapError>;
