use thiserror::Error;

use crate::fieldexpr::ExprError;
use crate::lie::GroupTag;

/// Errors raised by the geometry kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("group tag mismatch: {left} vs {right}")]
    TagMismatch { left: GroupTag, right: GroupTag },
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("singular matrix")]
    Singular,
    #[error("matrix is not an element of {tag} (residual {residual:e})")]
    NotInGroup { tag: GroupTag, residual: f64 },
    #[error("no principal logarithm")]
    NoPrincipalLog,
    #[error("point {point:?} lies outside the chart domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("point {point:?} is closer than {step:e} to the domain boundary")]
    TooCloseToBoundary { point: Vec<f64>, step: f64 },
    #[error("step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("lift diverged: {0}")]
    LiftDiverged(String),
    #[error("loop not closed (gap {gap:e})")]
    LoopNotClosed { gap: f64 },
    #[error("point is not on the reduced subbundle (residual {residual:e})")]
    NotOnSubbundle { residual: f64 },
    #[error("vector is not tangent to the reduced subbundle (residual {residual:e})")]
    NotTangent { residual: f64 },
    #[error("structure is not a Cartan connection")]
    NotCartan,
    #[error("point at infinity")]
    PointAtInfinity,
    #[error("input is not on the unit sphere (|y| = {norm})")]
    NotUnitSphere { norm: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

pub type Result<T> = std::result::Result<T, Error>;
