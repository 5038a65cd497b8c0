use thiserror::Error;

use crate::optim::FitReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty domain: no grid cell intersects the inflated template")]
    EmptyDomain,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("image dimensions differ: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("field is not clamped: |phi| = {value:e} at vertex {vertex} is below {eps:e}")]
    UnclampedField { vertex: usize, value: f64, eps: f64 },

    #[error("gradient clamp violated on edge {edge}: |phi gap| = {gap:e} < {min:e}")]
    GradientClampViolated { edge: usize, gap: f64, min: f64 },

    #[error("degenerate tetrahedron {0}")]
    DegenerateTet(usize),

    #[error("degenerate vertex normal at triangle-mesh vertex {0}")]
    DegenerateNormal(usize),

    #[error("point is behind the camera (z_c = {0})")]
    BehindCamera(f64),

    #[error("triangle mesh carries no edge provenance")]
    MissingProvenance,

    #[error("normal map carries no fragment provenance at pixel ({0}, {1})")]
    MissingFragment(usize, usize),

    #[error("degenerate point set: {0}")]
    DegeneratePoints(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("optimization diverged at iteration {iteration} (loss {loss:e})")]
    Divergence {
        iteration: usize,
        loss: f64,
        partial: Box<FitReport>,
    },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
