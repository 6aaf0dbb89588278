use thiserror::Error;

use crate::vector::Vec3;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("kernel evaluated at coincident points {0:?}")]
    Singularity(Vec3),

    #[error("material data error: {0}")]
    Data(String),

    #[error("particles overlap: spacing {spacing} does not exceed 2a = {two_a}")]
    Overlap { spacing: f64, two_a: f64 },

    #[error("iterative solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("Psi vanishes at voxel {index:?} (|Psi| = {magnitude:.3e})")]
    Pole { index: [usize; 3], magnitude: f64 },

    #[error("target permeability is zero at voxel {index:?}")]
    ZeroPermeability { index: [usize; 3] },

    #[error("density is not tangential at node {node}: |(N, sigma)| = {normal_part:.3e}")]
    NotTangential { node: usize, normal_part: f64 },

    #[error("finite-difference stencil needs at least 5 points per axis, grid has {dims:?}")]
    Stencil { dims: [usize; 3] },

    #[error("asymptotic error sequence is not decreasing: {rel_error:?}")]
    AsymptoticsViolation { rel_error: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable snake_case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Singularity(_) => "singularity",
            Error::Data(_) => "data",
            Error::Overlap { .. } => "overlap",
            Error::Convergence { .. } => "convergence",
            Error::Singular(_) => "singular",
            Error::Pole { .. } => "pole",
            Error::ZeroPermeability { .. } => "zero_permeability",
            Error::NotTangential { .. } => "not_tangential",
            Error::Stencil { .. } => "stencil",
            Error::AsymptoticsViolation { .. } => "asymptotics_violation",
            Error::Dimension { .. } => "dimension",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
