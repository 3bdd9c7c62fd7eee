use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("line id {0} appears more than once")]
    DuplicateId(u32),
    #[error("line {0} has zero multiplicity")]
    ZeroMultiplicity(u32),
    #[error("line {id} has non-finite eigenvalue")]
    NonFinite { id: u32 },
    #[error("unknown line id {0}")]
    UnknownId(u32),
    #[error("coefficient vector for line {id} has length {got}, expected {expected}")]
    LengthMismatch { id: u32, expected: usize, got: usize },
    #[error("line {id} (lambda = {lambda}) has no sigma partner")]
    Unpaired { id: u32, lambda: f64 },
    #[error("sigma pair ({plus}, {minus}) is invalid: {reason}")]
    BadPair { plus: u32, minus: u32, reason: String },
    #[error("sigma action on the kernel is invalid: {0}")]
    BadKernel(String),
    #[error("kernel of A has odd dimension {0}")]
    OddKernel(usize),
    #[error("sigma violates {identity} by {residual:e}")]
    SigmaIdentity { identity: &'static str, residual: f64 },
    #[error("expected {expected} chirality signs, got {got}")]
    SignCount { expected: usize, got: usize },
    #[error("chirality sign must be +1 or -1, got {0}")]
    BadSign(i32),
    #[error("sigma mixes boundary components")]
    SigmaMixesComponents,
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum ConditionError {
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("kernel of A (dim {0}) admits no splitting ker A = L + sigma L")]
    KernelSplit(usize),
    #[error("spectrum is not a doubled spectrum A0 + (-A0): {0}")]
    Doubling(String),
    #[error("invalid decomposition: {0}")]
    Decomposition(String),
    #[error("conditions are not nested (residual {0:e})")]
    NotNested(f64),
    #[error("condition is not selfadjoint (projector distance {0:e})")]
    NotSelfadjoint(f64),
    #[error("normal form does not exist: {0}")]
    Structural(String),
    #[error("bad recipe {0:?}")]
    Recipe(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
