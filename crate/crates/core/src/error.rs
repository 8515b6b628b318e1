use thiserror::Error;

/// Errors raised by the solver pipeline, the analyses and the Monte Carlo oracle.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range for grid with {len} nodes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("assumption {assumption} violated: {detail}")]
    Assumption {
        assumption: &'static str,
        detail: String,
    },

    #[error("no contraction: iterate ratio {ratio:.3} exceeds target {target} after {halvings} halvings of u0")]
    NoContraction {
        ratio: f64,
        target: f64,
        halvings: usize,
    },

    #[error("picard iteration hit the cap of {0} iterations")]
    MaxIterations(usize),

    #[error(
        "step not contractive at u = {u}: endpoint coefficient {coefficient} >= 1, refine the grid"
    )]
    StepNotContractive { u: f64, coefficient: f64 },

    #[error("non-positive solution g = {value:e} at u = {u}")]
    NonPositiveSolution { u: f64, value: f64 },

    #[error("tail not integrable-looking: fitted decay exponent {exponent:.4} <= {threshold}")]
    TailNotIntegrable { exponent: f64, threshold: f64 },

    #[error("divergent: u^gamma g(u) grows by {growth_per_octave:.3}x per octave over the last two octaves")]
    Divergent { growth_per_octave: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
