use alloc::string::String;
use alloc::vec::Vec;

use crate::geometry::LatticePoint;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Which of the kernel conditions failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelCondition {
    Normalization,
    Centering,
    Ellipticity,
}

impl core::fmt::Display for KernelCondition {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            KernelCondition::Normalization => "normalization",
            KernelCondition::Centering => "centering",
            KernelCondition::Ellipticity => "ellipticity",
        })
    }
}

/// A site where a transition kernel breaks one of its conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelViolation {
    pub point: LatticePoint,
    pub condition: KernelCondition,
    pub magnitude: f64,
    /// Drift vector at `point`.
    pub drift: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid step set: {0}")]
    InvalidStepSet(String),
    #[error("invalid kernel: {} violated at {} (magnitude {:e}, drift {:?})", .0.condition, .0.point, .0.magnitude, .0.drift)]
    InvalidKernel(KernelViolation),
    #[error("invalid kernel specification: {0}")]
    KernelSpec(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point {0} lies outside the domain")]
    OutsideDomain(LatticePoint),
    #[error("field has no value at {0}")]
    OutsideSupport(LatticePoint),
    #[error("field is incomplete: missing value at {0}")]
    IncompleteField(LatticePoint),
    #[error("boundary data does not match the boundary of the interior: {0}")]
    BoundaryDataMismatch(String),
    #[error("empty interior")]
    EmptyInterior,
    #[error("target point {0} is not on the boundary")]
    InvalidTarget(LatticePoint),
    #[error("source point {0} is not in the interior")]
    InvalidSource(LatticePoint),
    #[error("reference point {0} is unreachable from the source")]
    UnreachableReference(LatticePoint),
    #[error("solver did not converge: residual {residual:e} after {iterations} iterations")]
    ConvergenceFailure { residual: f64, iterations: usize },
    #[error("singular system: zero pivot at row {0}")]
    SingularSystem(usize),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("anchor {0} is not an interior point of the window")]
    InvalidAnchor(LatticePoint),
    #[error("degenerate measurement: {0}")]
    Degenerate(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("exhaustion did not stabilize: deviations {0:?}")]
    NonConvergence(Vec<f64>),
    #[error("no K in the grid reaches ratio 1; best ratios {0:?}")]
    OnsetNotFound(Vec<f64>),
    #[error("invalid simulation config: {0}")]
    InvalidSimulation(String),
    #[error("inconclusive simulation: all {0} paths were truncated")]
    InconclusiveSimulation(usize),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
}
