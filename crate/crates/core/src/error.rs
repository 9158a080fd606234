use std::fmt;

use thiserror::Error;

/// The standing assumptions a model must satisfy before anything is built on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Assumption {
    /// Linear growth of drift and diffusion.
    A1,
    /// Continuously differentiable coefficients with Lipschitz derivatives.
    A2,
    /// Strictly positive diffusion.
    A3,
    /// Single downward crossing of `mu' = lambda`.
    A4,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Assumption::A1 => "A1",
            Assumption::A2 => "A2",
            Assumption::A3 => "A3",
            Assumption::A4 => "A4",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("assumption {assumption} violated at x = {x}: {detail}")]
    AssumptionViolation {
        assumption: Assumption,
        x: f64,
        detail: String,
    },

    #[error("x = {x} outside of the domain [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("ODE integration failed near x = {x}: {detail}")]
    IntegrationFailure { x: f64, detail: String },

    #[error("basis sign structure not achieved: {0}")]
    StructureFailure(String),

    #[error("h is singular at z0 = {z0} (requested x = {x})")]
    SingularAtZ0 { x: f64, z0: f64 },

    #[error("value {y} outside of the branch range [{lo}, {hi}]")]
    Range { y: f64, lo: f64, hi: f64 },

    #[error("g'' has {sign_changes} sign changes; classification is ambiguous")]
    ClassificationAmbiguous { sign_changes: usize },

    #[error("unsupported case: {0}")]
    UnsupportedCase(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("g'(x; beta) = {value} <= 0 at x = {x}, beta = {beta}")]
    NonpositiveDerivative { x: f64, beta: f64, value: f64 },

    #[error("root not bracketed: {0}")]
    BracketFailure(String),

    #[error("u3(beta) lies beyond the truncation point for beta = {beta}")]
    TruncationHit { beta: f64 },

    #[error("case mismatch: {0}")]
    CaseMismatch(String),

    #[error("verification failed: {0}")]
    VerificationFailure(String),

    #[error("identity check failed: {0}")]
    IdentityFailure(String),

    #[error("invalid configuration: {0}")]
    ConfigError(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
