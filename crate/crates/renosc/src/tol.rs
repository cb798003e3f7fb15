//! Numeric tolerances shared across the crate.
//!
//! These are pinned once here so that identity checks, rank decisions and
//! acceptance thresholds stay consistent between modules and tests.

/// Relative rank tolerance: singular values below `RANK_REL * σ_max` count
/// as zero.
pub const RANK_REL: f64 = 1e-8;

/// Absolute floor for the reference singular value in rank decisions, so
/// that exactly-zero matrices report full nullity.
pub const RANK_ABS_FLOOR: f64 = 1e-30;

/// Default local error tolerance for the adaptive frame integrator.
pub const ODE_TOL: f64 = 1e-10;

/// Relative tolerance on decomposition-reconstruction residuals.
pub const DECOMP_RESIDUAL: f64 = 1e-12;

/// Hermitian symmetry slack accepted on input matrices.
pub const HERMITIAN_SLACK: f64 = 1e-10;

/// Unitarity slack accepted by the matrix logarithm of a unitary matrix.
pub const UNITARY_SLACK: f64 = 1e-8;

/// `exp(2iθ)` must reproduce its unitary input to this tolerance.
pub const UNITARY_LOG_RESIDUAL: f64 = 1e-10;

/// Nondegeneracy drift `‖Ψ*JΨ‖ / ‖Ψ‖²` tolerated along a trajectory.
pub const NONDEGENERACY: f64 = 1e-8;

/// Boundary-matrix identity residuals accepted by validation.
pub const BOUNDARY_RESIDUAL: f64 = 1e-10;

/// Relative tolerance for adaptive quadrature.
pub const QUADRATURE_REL: f64 = 1e-8;

/// Principal-angle convergence tolerance for truncated Weyl solutions.
pub const TRUNCATION_SPAN: f64 = 1e-8;

/// Smallest-singular-value ratio of the Weyl Wronskian below which a real
/// spectral parameter is treated as an eigenvalue and counting is refused.
pub const WRONSKIAN_EIGENVALUE_GUARD: f64 = 1e-8;

/// Singularity threshold used when inverting the Weyl Wronskian for the
/// Green's kernel.
pub const WRONSKIAN_KERNEL_GUARD: f64 = 1e-10;

/// Crossing locations are bisection-refined to this fraction of the window.
pub const LOCALIZATION_FRAC: f64 = 1e-8;

/// Largest spectral-norm hop of the unitary detector between consecutive
/// grid points; guarantees matched eigenphase motion below π/4.
pub const DETECTOR_MAX_HOP: f64 = 0.38; // < 2 sin(π/8)

/// λ-refinement width for shooting eigenvalues.
pub const SHOOTING_LAMBDA: f64 = 1e-10;

/// Number of sample points used to validate coefficient hypotheses at
/// system construction.
pub const HYPOTHESIS_SAMPLES: usize = 512;
