//! Hamiltonian (canonical) systems `J Ψ' = (z A(x) + B(x)) Ψ` and their
//! boundary data.
//!
//! A system is described by its half-dimension `m`, the rank `r` of the
//! weight, coefficient callbacks `W(x)` (positive definite `r×r`) and `B(x)`
//! (Hermitian `2m×2m`), and an interval geometry. The derived coefficients
//! are `A = diag(W, 0)`, `C = diag(W⁻¹, I)` and `E_r = C A = diag(I_r, 0)`.
//! Coefficient hypotheses are validated by sampling at construction;
//! integrators split steps at declared discontinuities.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, cr, CMatrix};
use crate::tol;

/// The standard symplectic matrix `[[0, -I], [I, 0]]` of size `2m`.
pub fn symplectic_j(m: usize) -> CMatrix {
    let mut j = CMatrix::zeros(2 * m, 2 * m);
    for k in 0..m {
        j[(k, m + k)] = cr(-1.0);
        j[(m + k, k)] = cr(1.0);
    }
    j
}

/// Interval geometry of the problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    Finite { a: f64, b: f64 },
    HalfLine { a: f64 },
    FullLine,
}

impl Geometry {
    pub fn left_endpoint(&self) -> Option<f64> {
        match self {
            Geometry::Finite { a, .. } | Geometry::HalfLine { a } => Some(*a),
            Geometry::FullLine => None,
        }
    }

    pub fn right_endpoint(&self) -> Option<f64> {
        match self {
            Geometry::Finite { b, .. } => Some(*b),
            _ => None,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match self {
            Geometry::Finite { a, b } => (*a..=*b).contains(&x),
            Geometry::HalfLine { a } => x >= *a,
            Geometry::FullLine => true,
        }
    }

    /// Bounded interval used for hypothesis sampling and as a default probe
    /// window on unbounded geometries.
    pub fn probe_interval(&self) -> (f64, f64) {
        match self {
            Geometry::Finite { a, b } => (*a, *b),
            Geometry::HalfLine { a } => (*a, *a + 60.0),
            Geometry::FullLine => (-30.0, 30.0),
        }
    }
}

pub type CoefficientFn = Arc<dyn Fn(f64) -> Result<CMatrix> + Send + Sync>;

/// A validated Hamiltonian system.
pub struct HamiltonianSystem {
    half_dim: usize,
    weight_rank: usize,
    geometry: Geometry,
    x0: f64,
    weight: CoefficientFn,
    potential: CoefficientFn,
    discontinuities: Vec<f64>,
    limit_point_asserted: bool,
    j: CMatrix,
}

impl std::fmt::Debug for HamiltonianSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HamiltonianSystem")
            .field("half_dim", &self.half_dim)
            .field("weight_rank", &self.weight_rank)
            .field("geometry", &self.geometry)
            .field("x0", &self.x0)
            .field("discontinuities", &self.discontinuities)
            .field("limit_point_asserted", &self.limit_point_asserted)
            .finish()
    }
}

impl HamiltonianSystem {
    /// Build a system from raw coefficient callbacks and validate the
    /// coefficient hypotheses on a sample grid.
    ///
    /// The limit-point property at infinite endpoints cannot be checked from
    /// samples; it is recorded as a user assertion.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        half_dim: usize,
        weight_rank: usize,
        geometry: Geometry,
        x0: f64,
        weight: CoefficientFn,
        potential: CoefficientFn,
        mut discontinuities: Vec<f64>,
        limit_point_asserted: bool,
    ) -> Result<Arc<Self>> {
        assert!(half_dim >= 1, "half-dimension must be positive");
        if weight_rank < 1 || weight_rank > 2 * half_dim {
            return Err(Error::Spec(format!(
                "weight rank must satisfy 1 ≤ r ≤ 2m, got r = {weight_rank}, m = {half_dim}"
            )));
        }
        if let Geometry::Finite { a, b } = geometry {
            if !(a < b) {
                return Err(Error::Spec(format!("empty interval [{a}, {b}]")));
            }
        }
        if !geometry.contains(x0) {
            return Err(Error::Spec(format!("reference point x0 = {x0} outside the interval")));
        }
        discontinuities.retain(|x| geometry.contains(*x));
        discontinuities.sort_by(f64::total_cmp);
        discontinuities.dedup();

        let sys = Arc::new(Self {
            half_dim,
            weight_rank,
            geometry,
            x0,
            weight,
            potential,
            discontinuities,
            limit_point_asserted,
            j: symplectic_j(half_dim),
        });
        sys.validate_hypotheses()?;
        Ok(sys)
    }

    fn validate_hypotheses(&self) -> Result<()> {
        let (lo, hi) = self.geometry.probe_interval();
        let n = tol::HYPOTHESIS_SAMPLES;
        let eps = 1e-9 * (hi - lo).max(1.0);
        let mut points: Vec<f64> =
            (0..n).map(|k| lo + (hi - lo) * (k as f64 + 0.5) / n as f64).collect();
        // straddle declared discontinuities instead of sampling on them
        for &d in &self.discontinuities {
            if d - eps > lo {
                points.push(d - eps);
            }
            if d + eps < hi {
                points.push(d + eps);
            }
        }
        points.push(self.x0);
        for &x in &points {
            self.check_point(x)?;
        }
        Ok(())
    }

    fn check_point(&self, x: f64) -> Result<()> {
        let m = self.half_dim;
        let r = self.weight_rank;
        let w = (self.weight)(x)?;
        if w.nrows() != r || w.ncols() != r {
            return Err(Error::ShapeMismatch {
                expected: format!("{r}x{r} weight"),
                got: format!("{}x{}", w.nrows(), w.ncols()),
            });
        }
        linalg::check_finite(&w)?;
        let eig = linalg::hermitian_eig(&w).map_err(|e| match e {
            Error::NotHermitian { residual } => Error::HypothesisViolation {
                x,
                what: format!("weight not Hermitian (relative asymmetry {residual:.3e})"),
            },
            other => other,
        })?;
        if eig.values[0] <= 0.0 {
            return Err(Error::HypothesisViolation {
                x,
                what: format!(
                    "weight not positive definite (smallest eigenvalue {:.3e})",
                    eig.values[0]
                ),
            });
        }
        let b = (self.potential)(x)?;
        if b.nrows() != 2 * m || b.ncols() != 2 * m {
            return Err(Error::ShapeMismatch {
                expected: format!("{0}x{0} potential", 2 * m),
                got: format!("{}x{}", b.nrows(), b.ncols()),
            });
        }
        linalg::check_finite(&b)?;
        let asym = (&b - b.adjoint()).norm();
        if asym > tol::HERMITIAN_SLACK * b.norm().max(1.0) {
            return Err(Error::HypothesisViolation {
                x,
                what: format!("potential not Hermitian (asymmetry {asym:.3e})"),
            });
        }
        // C(x) A(x) = E_r must hold by construction of the block coefficients
        let residual = (self.c_matrix(x)? * self.a_matrix(x)? - self.e_r_matrix()).norm();
        if residual > tol::DECOMP_RESIDUAL * (1.0 + self.weight_rank as f64) {
            return Err(Error::HypothesisViolation {
                x,
                what: format!("C·A deviates from E_r by {residual:.3e}"),
            });
        }
        Ok(())
    }

    pub fn half_dim(&self) -> usize {
        self.half_dim
    }

    pub fn weight_rank(&self) -> usize {
        self.weight_rank
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn reference_point(&self) -> f64 {
        self.x0
    }

    pub fn discontinuities(&self) -> &[f64] {
        &self.discontinuities
    }

    pub fn limit_point_asserted(&self) -> bool {
        self.limit_point_asserted
    }

    pub fn j_matrix(&self) -> &CMatrix {
        &self.j
    }

    /// `W(x)`, the positive-definite `r×r` weight.
    pub fn weight(&self, x: f64) -> Result<CMatrix> {
        (self.weight)(x)
    }

    /// `B(x)`, the Hermitian `2m×2m` potential.
    pub fn potential(&self, x: f64) -> Result<CMatrix> {
        (self.potential)(x)
    }

    /// `A(x) = diag(W(x), 0)` as a `2m×2m` matrix.
    pub fn a_matrix(&self, x: f64) -> Result<CMatrix> {
        let w = self.weight(x)?;
        let n = 2 * self.half_dim;
        let mut a = CMatrix::zeros(n, n);
        a.view_mut((0, 0), (self.weight_rank, self.weight_rank)).copy_from(&w);
        Ok(a)
    }

    /// `C(x) = diag(W(x)⁻¹, I)`.
    pub fn c_matrix(&self, x: f64) -> Result<CMatrix> {
        let w = self.weight(x)?;
        let winv = linalg::hermitian_eig(&w)?.apply(|v| cr(1.0 / v));
        let n = 2 * self.half_dim;
        let mut cm = CMatrix::identity(n, n);
        cm.view_mut((0, 0), (self.weight_rank, self.weight_rank)).copy_from(&winv);
        Ok(cm)
    }

    /// `E_r = diag(I_r, 0)`.
    pub fn e_r_matrix(&self) -> CMatrix {
        let n = 2 * self.half_dim;
        let mut e = CMatrix::zeros(n, n);
        for k in 0..self.weight_rank {
            e[(k, k)] = cr(1.0);
        }
        e
    }

    /// `(z A(x) + B(x)) · arg` without forming the zero blocks of `A`.
    fn apply_za_plus_b(&self, z: Complex64, x: f64, arg: &CMatrix) -> Result<CMatrix> {
        let mut out = self.potential(x)? * arg;
        let w = self.weight(x)?;
        let r = self.weight_rank;
        let top = w * arg.rows(0, r) * z;
        out.rows_mut(0, r).zip_apply(&top, |o, t| *o += t);
        Ok(out)
    }

    /// Right-hand side of the first-order system, `Ψ' = -J (zA + B) Ψ`.
    pub fn derivative(&self, z: Complex64, x: f64, psi: &CMatrix) -> Result<CMatrix> {
        let m = self.half_dim;
        let v = self.apply_za_plus_b(z, x, psi)?;
        // -J (v_top; v_bot) = (v_bot; -v_top)
        let mut out = CMatrix::zeros(2 * m, psi.ncols());
        out.rows_mut(0, m).copy_from(&v.rows(m, m));
        out.rows_mut(m, m).zip_apply(&v.rows(0, m), |o, t| *o = -t);
        Ok(out)
    }

    /// `F(x)* A(x) G(x)` for column stacks `F`, `G`.
    pub fn a_pairing(&self, x: f64, f: &CMatrix, g: &CMatrix) -> Result<CMatrix> {
        let r = self.weight_rank;
        let w = self.weight(x)?;
        Ok(f.rows(0, r).adjoint() * w * g.rows(0, r))
    }
}

/// Construct the Sturm–Liouville reduction
/// `R⁻¹[-(d/dx) P (d/dx) + Q]` with `W = R`, `B = diag(-Q, P⁻¹)`, `r = m`.
///
/// Solution frames carry `(u, P u')` in their two block rows.
pub fn from_sturm_liouville(
    p: CoefficientFn,
    q: CoefficientFn,
    r: CoefficientFn,
    geometry: Geometry,
    x0: f64,
    discontinuities: Vec<f64>,
) -> Result<Arc<HamiltonianSystem>> {
    let probe = p(x0)?;
    let m = probe.nrows();
    let weight = r.clone();
    let potential: CoefficientFn = Arc::new(move |x| {
        let pm = p(x)?;
        let qm = q(x)?;
        if pm.nrows() != m || qm.nrows() != m {
            return Err(Error::ShapeMismatch {
                expected: format!("{m}x{m} coefficients"),
                got: format!("{}x{} / {}x{}", pm.nrows(), pm.ncols(), qm.nrows(), qm.ncols()),
            });
        }
        let eig = linalg::hermitian_eig(&pm).map_err(|_| Error::HypothesisViolation {
            x,
            what: "leading coefficient P not Hermitian".into(),
        })?;
        if eig.values[0] <= 0.0 {
            return Err(Error::HypothesisViolation {
                x,
                what: format!(
                    "P not positive definite (smallest eigenvalue {:.3e})",
                    eig.values[0]
                ),
            });
        }
        let pinv = eig.apply(|v| cr(1.0 / v));
        let mut b = CMatrix::zeros(2 * m, 2 * m);
        b.view_mut((0, 0), (m, m)).copy_from(&(-&qm));
        b.view_mut((m, m), (m, m)).copy_from(&pinv);
        Ok(b)
    });
    HamiltonianSystem::new(m, m, geometry, x0, weight, potential, discontinuities, true)
}

/// Construct the Dirac-type reduction `J d/dx − B` with `A = I_{2m}`.
pub fn from_dirac(
    bfield: CoefficientFn,
    geometry: Geometry,
    x0: f64,
    discontinuities: Vec<f64>,
) -> Result<Arc<HamiltonianSystem>> {
    let probe = bfield(x0)?;
    if probe.nrows() % 2 != 0 || probe.nrows() == 0 {
        return Err(Error::Spec(format!("Dirac field must be 2m×2m, got {}", probe.nrows())));
    }
    let m = probe.nrows() / 2;
    let weight: CoefficientFn = Arc::new(move |_| Ok(CMatrix::identity(2 * m, 2 * m)));
    HamiltonianSystem::new(m, 2 * m, geometry, x0, weight, bfield, discontinuities, true)
}

/// Residuals of the three boundary-matrix identities
/// `α*α = I`, `α*Jα = 0`, `αα* − Jαα*J = I`.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryDiagnostics {
    pub residuals: [f64; 3],
    pub pass: bool,
}

/// Check a candidate boundary matrix without constructing one.
pub fn validate_boundary_matrix(alpha: &CMatrix) -> Result<BoundaryDiagnostics> {
    if alpha.nrows() != 2 * alpha.ncols() || alpha.ncols() == 0 {
        return Err(Error::ShapeMismatch {
            expected: "2m×m".into(),
            got: format!("{}x{}", alpha.nrows(), alpha.ncols()),
        });
    }
    linalg::check_finite(alpha)?;
    let m = alpha.ncols();
    let j = symplectic_j(m);
    let r1 = (alpha.adjoint() * alpha - CMatrix::identity(m, m)).norm();
    let r2 = (alpha.adjoint() * &j * alpha).norm();
    let aa = alpha * alpha.adjoint();
    let r3 = (&aa - &j * &aa * &j - CMatrix::identity(2 * m, 2 * m)).norm();
    let residuals = [r1, r2, r3];
    let pass = residuals.iter().all(|&r| r <= tol::BOUNDARY_RESIDUAL);
    Ok(BoundaryDiagnostics { residuals, pass })
}

/// A self-adjoint boundary condition, stored as a `2m×m` frame `α` with
/// `(α  Jα)` unitary.
#[derive(Debug, Clone)]
pub struct BoundaryMatrix {
    alpha: CMatrix,
}

impl BoundaryMatrix {
    pub fn new(alpha: CMatrix) -> Result<Self> {
        let diag = validate_boundary_matrix(&alpha)?;
        if !diag.pass {
            return Err(Error::InvalidBoundaryMatrix {
                what: "unitarity identities violated".into(),
                residuals: diag.residuals,
            });
        }
        Ok(Self { alpha })
    }

    /// Dirichlet condition `(0  I)ᵀ`: the first block row of the solution
    /// vanishes at the endpoint.
    pub fn dirichlet(m: usize) -> Self {
        let mut alpha = CMatrix::zeros(2 * m, m);
        for k in 0..m {
            alpha[(m + k, k)] = cr(1.0);
        }
        Self { alpha }
    }

    /// Neumann-type condition `(I  0)ᵀ`: the second block row vanishes.
    pub fn neumann_analog(m: usize) -> Self {
        let mut alpha = CMatrix::zeros(2 * m, m);
        for k in 0..m {
            alpha[(k, k)] = cr(1.0);
        }
        Self { alpha }
    }

    /// The family `(sin(t)·I  cos(t)·I)ᵀ` sweeping from Dirichlet (`t = 0`)
    /// to the Neumann analog (`t = π/2`).
    pub fn rotated(m: usize, t: f64) -> Self {
        let mut alpha = CMatrix::zeros(2 * m, m);
        for k in 0..m {
            alpha[(k, k)] = cr(t.sin());
            alpha[(m + k, k)] = cr(t.cos());
        }
        Self { alpha }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.alpha
    }

    pub fn half_dim(&self) -> usize {
        self.alpha.ncols()
    }

    /// `α* J G` — the boundary form whose kernel is the boundary condition.
    pub fn pair_with(&self, frame: &CMatrix) -> CMatrix {
        let j = symplectic_j(self.half_dim());
        self.alpha.adjoint() * j * frame
    }
}

/// Boundary matrix `(sin θ  cos θ)ᵀ` read off from the Prüfer angle of a
/// nondegenerate solution frame. The resulting condition annihilates the
/// frame: `γ* J Ψ = 0`.
pub fn boundary_from_solution(frame: &CMatrix) -> Result<BoundaryMatrix> {
    let prufer = crate::propagate::prufer_decompose(frame, None)?;
    let m = frame.ncols();
    let sin_t = linalg::herm_fn(&prufer.theta, |t| cr(t.sin()))?;
    let cos_t = linalg::herm_fn(&prufer.theta, |t| cr(t.cos()))?;
    let mut gamma = CMatrix::zeros(2 * m, m);
    gamma.view_mut((0, 0), (m, m)).copy_from(&sin_t);
    gamma.view_mut((m, 0), (m, m)).copy_from(&cos_t);
    let bm = BoundaryMatrix::new(gamma)?;
    let j = symplectic_j(m);
    let residual = (bm.matrix().adjoint() * j * frame).norm() / frame.norm().max(1.0);
    if residual > tol::NONDEGENERACY {
        return Err(Error::DegenerateFrame {
            what: format!("extracted boundary matrix fails γ*JΨ = 0 by {residual:.3e}"),
        });
    }
    Ok(bm)
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn constant_fn(m: CMatrix) -> CoefficientFn {
        Arc::new(move |_| Ok(m.clone()))
    }

    /// `-u'' = λ u`, the free Schrödinger system with `P = R = I`, `Q = 0`.
    pub fn free_schrodinger(geometry: Geometry, x0: f64) -> Arc<HamiltonianSystem> {
        let id = CMatrix::identity(1, 1);
        from_sturm_liouville(
            constant_fn(id.clone()),
            constant_fn(CMatrix::zeros(1, 1)),
            constant_fn(id),
            geometry,
            x0,
            vec![],
        )
        .unwrap()
    }
}
