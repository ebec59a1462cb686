use thiserror::Error;

/// Errors raised by the model, the Fock engine and the optimizer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("null state: every element is zero")]
    NullState,
    #[error("state is not normalized (trace {0})")]
    Unnormalized(f64),
    #[error("perturbation breakdown: element {0} is negative ({1})")]
    PerturbationBreakdown(&'static str, f64),
    #[error("unheraldable: purification probability is zero")]
    Unheraldable,
    #[error("swap {index} has zero success probability")]
    SwapFailed { index: usize },
    #[error("photon number {count} exceeds cap {cap} in mode `{mode}`")]
    CapOverflow { mode: String, count: u32, cap: u8 },
    #[error("unknown mode `{0}`")]
    UnknownMode(String),
    #[error("schema incomplete: residual weight {residual:e} of trace {trace:e}")]
    SchemaIncomplete { residual: f64, trace: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("target unreachable: best fidelity {ceiling:.6} below target {target:.6}")]
    TargetUnreachable { ceiling: f64, target: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
