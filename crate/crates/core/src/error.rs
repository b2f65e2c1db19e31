use thiserror::Error;

/// Errors raised by mesh construction, assembly and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("{which} is empty after discretization: {detail}")]
    EmptySubboundary { which: &'static str, detail: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("cholesky factorization of the {what} matrix failed")]
    Factorization { what: &'static str },

    #[error("linear solve at step {step} left relative residual {residual:e} (limit {limit:e})")]
    LinearSolve { step: usize, residual: f64, limit: f64 },

    #[error("symmetry defect {defect:e} of the weighted generator exceeds {limit:e}")]
    AssemblyDefect { defect: f64, limit: f64 },

    #[error("time {t} lies outside [0, {t_final}]")]
    TimeOutOfRange { t: f64, t_final: f64 },

    #[error("source does not vanish at the final time (norm {norm:e})")]
    SourceNotVanishing { norm: f64 },

    #[error("{kind} norm diverges on this grid (integrand above {threshold:e} near t = {time})")]
    DivergentNorm {
        kind: &'static str,
        time: f64,
        threshold: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
