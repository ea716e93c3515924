use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage in which a scenario run failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Sampling,
    Validate,
    Nijenhuis,
    Levi,
    Conormal,
    Residuals,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Sampling => "sampling",
            Stage::Validate => "validate",
            Stage::Nijenhuis => "nijenhuis",
            Stage::Levi => "levi",
            Stage::Conormal => "conormal",
            Stage::Residuals => "residuals",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {position}: expected {expected}, found {found}")]
    Syntax {
        position: usize,
        expected: String,
        found: String,
    },

    #[error("unknown variable x{index} (declared dimension {dim})")]
    UnknownVariable { index: usize, dim: usize },

    #[error("domain error in `{node}`: argument {argument} at point {point:?}")]
    Domain {
        node: String,
        argument: f64,
        point: Vec<f64>,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("projection did not converge after {steps} steps (|rho| = {residual:e})")]
    NoConvergence { steps: usize, residual: f64 },

    #[error("degenerate gradient: |grad rho| = {norm:e} below floor {floor:e}")]
    DegenerateGradient { norm: f64, floor: f64 },

    #[error("invariant distribution has unexpected dimension (constraint rank {rank}, expected 2)")]
    UnexpectedDimension { rank: usize },

    #[error("vector not in the invariant distribution (|drho(v)| = {drho:e}, |theta(v)| = {theta:e})")]
    NotInDistribution { drho: f64, theta: f64 },

    #[error("conormal tangent basis is rank deficient ({rank} < {expected})")]
    RankDeficient { rank: usize, expected: usize },

    #[error("covector scale {lambda:e} is within the excluded zero-section band (|lambda| < {min:e})")]
    ZeroSection { lambda: f64, min: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("{stage} stage failed at sample {index}: {source}")]
    Sample {
        stage: Stage,
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at(self, stage: Stage, index: usize) -> Error {
        Error::Sample {
            stage,
            index,
            source: Box::new(self),
        }
    }

    /// True for configuration problems, including ones wrapped by a stage.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::Syntax { .. } | Error::UnknownVariable { .. } => true,
            Error::Sample { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
