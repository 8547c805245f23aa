use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field degree {0} (expected 2..=16)")]
    FieldDegree(u32),
    #[error("polynomial {poly:#x} is not a primitive polynomial of degree {m}")]
    NotPrimitive { poly: u32, m: u32 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("invalid code parameters: {0}")]
    CodeParams(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error("framing error: {0}")]
    Framing(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("key is outside the admissible set (n1 = {n1}, n_k = {n_k}, r1 = {r1})")]
    KeyNotAdmissible { n1: usize, n_k: usize, r1: f64 },
    #[error("requested {requested} key bits exceeds the secure rate limit of {max}")]
    RateViolation { requested: usize, max: usize },
    #[error("enumeration cost 2^{cost_log2:.1} exceeds the tractability limit 2^{limit_log2}")]
    Intractable { cost_log2: f64, limit_log2: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
