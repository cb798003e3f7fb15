use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian: relative asymmetry {residual:.3e}")]
    NotHermitian { residual: f64 },

    #[error("matrix is not unitary: ‖U*U − I‖ = {residual:.3e}")]
    NotUnitary { residual: f64 },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error(
        "branch ambiguity in unitary logarithm: eigenphase {phase:.6} is \
         equidistant from both admissible branches (step too large, refine)"
    )]
    BranchAmbiguity { phase: f64 },

    #[error("coefficient hypothesis violated at x = {x}: {what}")]
    HypothesisViolation { x: f64, what: String },

    #[error("boundary matrix invalid: {what} (residuals {residuals:?})")]
    InvalidBoundaryMatrix { what: String, residuals: [f64; 3] },

    #[error("solution frame is degenerate: {what}")]
    DegenerateFrame { what: String },

    #[error("step size underflow at x = {x} (h = {h:.3e}); undeclared discontinuity?")]
    StepUnderflow { x: f64, h: f64 },

    #[error("step budget exhausted after {steps} steps at x = {x}")]
    StepBudget { x: f64, steps: usize },

    #[error("nondegeneracy lost during integration at x = {x}: drift {drift:.3e}")]
    NondegeneracyLoss { x: f64, drift: f64 },

    #[error("requested point x = {x} outside trajectory span [{lo}, {hi}]")]
    OutsideTrajectory { x: f64, lo: f64, hi: f64 },

    #[error("ill-conditioned {what}: condition estimate {estimate:.3e}")]
    Conditioning { what: String, estimate: f64 },

    #[error(
        "truncated Weyl solution did not converge after {attempts} radius \
         increases (final radius {radius}); λ = {lambda} may meet the \
         essential spectrum or the gap is misdeclared"
    )]
    TruncationDiverged { attempts: u32, radius: f64, lambda: f64 },

    #[error(
        "spectral parameter λ = {lambda} is within tolerance of an eigenvalue \
         (Wronskian singular-value ratio {ratio:.3e}); counting refused"
    )]
    EigenvalueProximity { lambda: f64, ratio: f64 },

    #[error("window growth failed to stabilize after {expansions} expansions (last window {window})")]
    WindowUnstable { expansions: u32, window: f64 },

    #[error("geometry does not support this operation: {what}")]
    UnsupportedGeometry { what: String },

    #[error("quadrature did not reach requested tolerance: {what}")]
    QuadratureFailure { what: String },

    #[error("λ grid too coarse near λ = {lambda}: {what}")]
    GridTooCoarse { lambda: f64, what: String },

    #[error("invalid problem specification: {0}")]
    Spec(String),
}
