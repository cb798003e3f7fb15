//! Frame propagation for `Ψ' = -J (zA(x) + B(x)) Ψ`.
//!
//! Solution frames (`2m×m` column stacks) are integrated with an embedded
//! Dormand–Prince 5(4) pair. Frames are renormalized by thin QR whenever
//! their norm leaves `[1e-6, 1e6]`; all downstream counting quantities are
//! invariant under right multiplication by invertible matrices, so only the
//! accumulated right factor needs to be recorded. For real spectral
//! parameters the Lagrangian-plane condition `Ψ*JΨ = 0` is monitored and a
//! drifting frame is projected back via its Prüfer form.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamsys::{symplectic_j, HamiltonianSystem};
use crate::linalg::{self, c, cr, CMatrix};
use crate::tol;

/// Hermitian angle and invertible radius of a nondegenerate frame:
/// `Ψ = (sin θ  cos θ)ᵀ ρ`.
#[derive(Debug, Clone)]
pub struct PruferFrame {
    pub theta: CMatrix,
    pub rho: CMatrix,
}

/// Relative size of `Ψ*JΨ` against `‖Ψ‖²`; zero for frames spanning a
/// Lagrangian plane.
pub fn nondegeneracy_drift(psi: &CMatrix) -> f64 {
    let m = psi.ncols();
    let j = symplectic_j(m);
    let denom = psi.norm_squared().max(1e-300);
    (psi.adjoint() * j * psi).norm() / denom
}

fn split_blocks(psi: &CMatrix) -> (CMatrix, CMatrix) {
    let m = psi.ncols();
    (psi.rows(0, m).into_owned(), psi.rows(m, m).into_owned())
}

fn join_blocks(top: &CMatrix, bottom: &CMatrix) -> CMatrix {
    let m = top.ncols();
    let mut out = CMatrix::zeros(2 * m, m);
    out.rows_mut(0, m).copy_from(top);
    out.rows_mut(m, m).copy_from(bottom);
    out
}

/// The unitary `V₋ V₊⁻¹ = e^{2iθ}` attached to a nondegenerate frame,
/// where `V± = (±I  iI) Ψ`. Invariant under right multiplication of `Ψ`
/// by invertible matrices.
pub fn frame_unitary(psi: &CMatrix) -> Result<CMatrix> {
    let q = linalg::orthonormalize(psi);
    let (top, bottom) = split_blocks(&q);
    let i = c(0.0, 1.0);
    let v_plus = &top + &bottom * i;
    let v_minus = -&top + &bottom * i;
    let (smin, smax) = linalg::singular_extremes(&v_plus)?;
    if smin <= 1e-12 * smax.max(1.0) {
        return Err(Error::Conditioning {
            what: "V₊ block of Prüfer decomposition".into(),
            estimate: smax / smin.max(1e-300),
        });
    }
    let inv = v_plus.clone().try_inverse().ok_or(Error::Conditioning {
        what: "V₊ inversion".into(),
        estimate: f64::INFINITY,
    })?;
    linalg::polar_unitary(&(v_minus * inv))
}

/// Prüfer decomposition of a nondegenerate frame.
///
/// With `theta_prev` given, the Hermitian angle is chosen on the branch
/// nearest the previous angle (continuity tracking); otherwise the principal
/// branch with eigenvalues in `(-π/2, π/2]` is used.
pub fn prufer_decompose(psi: &CMatrix, theta_prev: Option<&CMatrix>) -> Result<PruferFrame> {
    let m = psi.ncols();
    if psi.nrows() != 2 * m || m == 0 {
        return Err(Error::ShapeMismatch {
            expected: "2m×m frame".into(),
            got: format!("{}x{}", psi.nrows(), psi.ncols()),
        });
    }
    let drift = nondegeneracy_drift(psi);
    if drift > tol::NONDEGENERACY {
        return Err(Error::DegenerateFrame {
            what: format!("‖Ψ*JΨ‖/‖Ψ‖² = {drift:.3e} exceeds {:.1e}", tol::NONDEGENERACY),
        });
    }
    let (smin, smax) = linalg::singular_extremes(psi)?;
    if smin <= 1e-13 * smax.max(1e-300) {
        return Err(Error::DegenerateFrame {
            what: format!("Ψ*Ψ numerically singular (σ_min/σ_max = {:.3e})", smin / smax),
        });
    }

    let u = frame_unitary(psi)?;
    let theta = match theta_prev {
        Some(prev) => linalg::unitary_log_branch(&u, prev)?,
        None => linalg::unitary_log_principal(&u)?,
    };
    let eig = linalg::hermitian_eig(&theta)?;
    let sin_t = eig.apply(|t| cr(t.sin()));
    let cos_t = eig.apply(|t| cr(t.cos()));
    let (top, bottom) = split_blocks(psi);
    let rho = &sin_t * &top + &cos_t * &bottom;

    let rebuilt = join_blocks(&(&sin_t * &rho), &(&cos_t * &rho));
    let rel = (&rebuilt - psi).norm() / psi.norm().max(1e-300);
    if rel > tol::NONDEGENERACY {
        return Err(Error::Conditioning {
            what: "Prüfer reconstruction".into(),
            estimate: rel,
        });
    }
    Ok(PruferFrame { theta, rho })
}

/// Project a drifted frame back onto the Lagrangian manifold by replacing
/// the frame unitary with its nearest unitary matrix.
fn resymplectify(psi: &CMatrix) -> Result<CMatrix> {
    let (top, bottom) = split_blocks(psi);
    let i = c(0.0, 1.0);
    let v_plus = &top + &bottom * i;
    let v_minus = -&top + &bottom * i;
    let inv = v_plus.clone().try_inverse().ok_or(Error::Conditioning {
        what: "V₊ inversion during re-symplectification".into(),
        estimate: f64::INFINITY,
    })?;
    let u = linalg::polar_unitary(&(&v_minus * inv))?;
    let v_minus_new = &u * &v_plus;
    let top_new = (&v_plus - &v_minus_new) * cr(0.5);
    let bottom_new = (&v_plus + &v_minus_new) * c(0.0, -0.5);
    Ok(join_blocks(&top_new, &bottom_new))
}

/// Step-control parameters for the adaptive integrator.
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    /// Mixed absolute/relative local error tolerance per step.
    pub tolerance: f64,
    /// Upper bound on the step size.
    pub max_step: f64,
    /// Hard cap on accepted plus rejected steps.
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { tolerance: tol::ODE_TOL, max_step: 0.5, max_steps: 4_000_000 }
    }
}

impl StepControl {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self { tolerance, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub min_step: f64,
    pub renormalizations: usize,
    pub resymplectifications: usize,
}

/// One stored sample of a trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryNode {
    pub x: f64,
    /// Frame in the node's own (renormalized) right-normalization.
    pub frame: CMatrix,
    /// Cumulative right factor: the original-normalization solution is
    /// `frame · cum_renorm · exp(cum_log_scale)`.
    pub cum_renorm: CMatrix,
    pub cum_log_scale: f64,
}

/// A frame with an explicit scalar scale split off to avoid overflow.
#[derive(Debug, Clone)]
pub struct ScaledFrame {
    pub matrix: CMatrix,
    pub log_scale: f64,
}

impl ScaledFrame {
    /// The plain matrix; errors when the scale cannot be represented.
    pub fn materialize(&self) -> Result<CMatrix> {
        if self.log_scale.abs() > 600.0 {
            return Err(Error::Conditioning {
                what: "materializing a scaled frame".into(),
                estimate: self.log_scale,
            });
        }
        Ok(&self.matrix * cr(self.log_scale.exp()))
    }
}

/// An integrated solution frame sampled along the interval, ordered by
/// ascending `x` regardless of integration direction.
pub struct Trajectory {
    system: Arc<HamiltonianSystem>,
    z: Complex64,
    nodes: Vec<TrajectoryNode>,
    ctrl: StepControl,
    pub stats: IntegrationStats,
    /// Index of the node holding the initial condition (normalization anchor).
    start_index: usize,
}

impl std::fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (lo, hi) = self.span();
        f.debug_struct("Trajectory")
            .field("z", &self.z)
            .field("span", &(lo, hi))
            .field("nodes", &self.nodes.len())
            .field("stats", &self.stats)
            .finish()
    }
}

// Dormand–Prince 5(4) coefficients.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Stepper<'a> {
    system: &'a HamiltonianSystem,
    z: Complex64,
    ctrl: StepControl,
    stats: IntegrationStats,
}

impl<'a> Stepper<'a> {
    fn new(system: &'a HamiltonianSystem, z: Complex64, ctrl: StepControl) -> Self {
        Self { system, z, ctrl, stats: IntegrationStats { min_step: f64::INFINITY, ..Default::default() } }
    }

    /// One trial step from `(x, y)` over signed `h`; stage abscissae are
    /// clamped a hair inside the step so coefficient evaluations never land
    /// on a boundary shared with a declared discontinuity.
    fn trial(&self, x: f64, y: &CMatrix, h: f64) -> Result<(CMatrix, f64)> {
        let eps = 1e-12 * h.abs().max(1e-12);
        let (lo, hi) = if h > 0.0 { (x + eps, x + h - eps) } else { (x + h + eps, x - eps) };
        let eval_x = |s: f64| s.clamp(lo.min(hi), lo.max(hi));

        let mut k: Vec<CMatrix> = Vec::with_capacity(7);
        for stage in 0..7 {
            let mut arg = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = DP_A[stage][j];
                if a != 0.0 {
                    arg += kj * cr(a * h);
                }
            }
            let xs = eval_x(x + DP_C[stage] * h);
            k.push(self.system.derivative(self.z, xs, &arg)?);
        }

        let mut y5 = y.clone();
        let mut y4 = y.clone();
        for j in 0..7 {
            if DP_B5[j] != 0.0 {
                y5 += &k[j] * cr(DP_B5[j] * h);
            }
            if DP_B4[j] != 0.0 {
                y4 += &k[j] * cr(DP_B4[j] * h);
            }
        }
        let scale = self.ctrl.tolerance * (1.0 + y.norm().max(y5.norm()));
        let err = (&y5 - &y4).norm() / scale;
        Ok((y5, err))
    }

    /// Advance from `x_from` to `x_to` without renormalization or storage.
    fn advance_raw(&mut self, x_from: f64, y0: &CMatrix, x_to: f64) -> Result<CMatrix> {
        let mut sink = |_: f64, _: &CMatrix, _: Option<&CMatrix>| {};
        self.advance(x_from, y0, x_to, false, &mut sink)
    }

    /// Advance with optional renormalization, reporting each accepted node
    /// to `on_node(x, frame, renorm_factor)`.
    fn advance(
        &mut self,
        x_from: f64,
        y0: &CMatrix,
        x_to: f64,
        renormalize: bool,
        on_node: &mut dyn FnMut(f64, &CMatrix, Option<&CMatrix>),
    ) -> Result<CMatrix> {
        let span = (x_to - x_from).abs();
        if span == 0.0 {
            return Ok(y0.clone());
        }
        let dir = (x_to - x_from).signum();
        let breaks: Vec<f64> = self
            .system
            .discontinuities()
            .iter()
            .copied()
            .filter(|&d| (d - x_from) * dir > 0.0 && (x_to - d) * dir > 0.0)
            .collect();

        let real_z = self.z.im == 0.0;
        let mut x = x_from;
        let mut y = y0.clone();
        let mut h = dir * span.min(self.ctrl.max_step).min(span / 16.0).max(span * 1e-12);
        let h_floor = 1e-13 * (1.0 + x_from.abs().max(x_to.abs()));

        while (x_to - x) * dir > h_floor {
            // cap at interval end and at the next declared discontinuity
            let mut limit = x_to;
            for &b in &breaks {
                if (b - x) * dir > h_floor && (limit - b) * dir > 0.0 {
                    limit = b;
                }
            }
            if (h.abs()) > (limit - x).abs() {
                h = limit - x;
            }

            let (y5, err) = self.trial(x, &y, h)?;
            if err <= 1.0 {
                x += h;
                y = y5;
                self.stats.accepted += 1;
                self.stats.min_step = self.stats.min_step.min(h.abs());

                let mut renorm_factor = None;
                if renormalize {
                    let n = y.norm();
                    if !(1e-6..=1e6).contains(&n) {
                        let (q, r) = linalg::qr_thin(&y);
                        y = q;
                        renorm_factor = Some(r);
                        self.stats.renormalizations += 1;
                    }
                }
                if real_z {
                    let drift = nondegeneracy_drift(&y);
                    if drift > 1e-6 {
                        return Err(Error::NondegeneracyLoss { x, drift });
                    }
                    if drift > tol::NONDEGENERACY {
                        y = resymplectify(&y)?;
                        self.stats.resymplectifications += 1;
                    }
                }
                on_node(x, &y, renorm_factor.as_ref());
                let grow = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 4.0);
                h = (h * grow).clamp(-self.ctrl.max_step, self.ctrl.max_step);
            } else {
                self.stats.rejected += 1;
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
            if h.abs() < h_floor {
                return Err(Error::StepUnderflow { x, h });
            }
            if self.stats.accepted + self.stats.rejected > self.ctrl.max_steps {
                return Err(Error::StepBudget { x, steps: self.ctrl.max_steps });
            }
        }
        Ok(y)
    }
}

/// Integrate a solution frame of `Ψ' = -J (zA + B) Ψ` from `from_x` to
/// `to_x` (backward integration allowed).
pub fn integrate_frame(
    system: &Arc<HamiltonianSystem>,
    z: Complex64,
    from_x: f64,
    to_x: f64,
    initial: &CMatrix,
    ctrl: StepControl,
) -> Result<Trajectory> {
    let m = system.half_dim();
    if initial.nrows() != 2 * m {
        return Err(Error::ShapeMismatch {
            expected: format!("{}×k frame", 2 * m),
            got: format!("{}x{}", initial.nrows(), initial.ncols()),
        });
    }
    if from_x == to_x {
        return Err(Error::Spec("integration interval is empty".into()));
    }
    for &p in &[from_x, to_x] {
        if !system.geometry().contains(p) {
            return Err(Error::Spec(format!("point {p} outside the system geometry")));
        }
    }
    linalg::check_finite(initial)?;
    let (smin, smax) = linalg::singular_extremes(initial)?;
    if smin <= 1e-12 * smax.max(1e-300) {
        return Err(Error::DegenerateFrame {
            what: format!("initial frame rank-deficient (σ ratio {:.3e})", smin / smax),
        });
    }
    if z.im == 0.0 && initial.ncols() == m {
        let drift = nondegeneracy_drift(initial);
        if drift > 1e-6 {
            return Err(Error::DegenerateFrame {
                what: format!("initial frame off the Lagrangian manifold by {drift:.3e}"),
            });
        }
    }

    let mut stepper = Stepper::new(system, z, ctrl);
    let mut raw_nodes: Vec<(f64, CMatrix, Option<CMatrix>)> = vec![(from_x, initial.clone(), None)];
    {
        let mut on_node = |x: f64, frame: &CMatrix, renorm: Option<&CMatrix>| {
            raw_nodes.push((x, frame.clone(), renorm.cloned()));
        };
        stepper.advance(from_x, initial, to_x, true, &mut on_node)?;
    }
    let stats = stepper.stats;

    // cumulative right factors in integration order
    let mut nodes: Vec<TrajectoryNode> = Vec::with_capacity(raw_nodes.len());
    let mut cum = CMatrix::identity(initial.ncols(), initial.ncols());
    let mut log_scale = 0.0f64;
    for (x, frame, renorm) in raw_nodes {
        if let Some(r) = renorm {
            cum = r * &cum;
            let n = cum.norm();
            if n > 0.0 {
                log_scale += n.ln();
                cum /= cr(n);
            }
        }
        nodes.push(TrajectoryNode { x, frame, cum_renorm: cum.clone(), cum_log_scale: log_scale });
    }

    let backwards = to_x < from_x;
    if backwards {
        nodes.reverse();
    }
    let start_index = if backwards { nodes.len() - 1 } else { 0 };
    let mut traj = Trajectory { system: Arc::clone(system), z, nodes, ctrl, stats, start_index };
    if z.im == 0.0 && initial.ncols() == m {
        traj.densify_for_phase_tracking()?;
    }
    Ok(traj)
}

impl Trajectory {
    pub fn system(&self) -> &Arc<HamiltonianSystem> {
        &self.system
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn control(&self) -> StepControl {
        self.ctrl
    }

    pub fn nodes(&self) -> &[TrajectoryNode] {
        &self.nodes
    }

    /// Covered interval `(min x, max x)`.
    pub fn span(&self) -> (f64, f64) {
        (self.nodes.first().map(|n| n.x).unwrap_or(0.0), self.nodes.last().map(|n| n.x).unwrap_or(0.0))
    }

    fn check_inside(&self, x: f64) -> Result<()> {
        let (lo, hi) = self.span();
        let slack = 1e-9 * (hi - lo).max(1.0);
        if x < lo - slack || x > hi + slack {
            return Err(Error::OutsideTrajectory { x, lo, hi });
        }
        Ok(())
    }

    fn nearest_node(&self, x: f64) -> usize {
        let idx = self.nodes.partition_point(|n| n.x < x);
        if idx == 0 {
            0
        } else if idx >= self.nodes.len() {
            self.nodes.len() - 1
        } else if (x - self.nodes[idx - 1].x) <= (self.nodes[idx].x - x) {
            idx - 1
        } else {
            idx
        }
    }

    /// Frame at `x` in the normalization of the nearest stored node
    /// (re-integrated on demand).
    pub fn frame_at(&self, x: f64) -> Result<CMatrix> {
        self.check_inside(x)?;
        let node = &self.nodes[self.nearest_node(x)];
        if node.x == x {
            return Ok(node.frame.clone());
        }
        let mut stepper = Stepper::new(&self.system, self.z, self.ctrl);
        stepper.advance_raw(node.x, &node.frame, x)
    }

    /// Orthonormal basis of the solution plane at `x`.
    pub fn orthonormal_frame_at(&self, x: f64) -> Result<CMatrix> {
        Ok(linalg::orthonormalize(&self.frame_at(x)?))
    }

    /// Frame at `x` in the normalization of the initial condition, split
    /// into a tame matrix and a log scale.
    pub fn solution_at(&self, x: f64) -> Result<ScaledFrame> {
        self.check_inside(x)?;
        let node = &self.nodes[self.nearest_node(x)];
        let local = if node.x == x {
            node.frame.clone()
        } else {
            let mut stepper = Stepper::new(&self.system, self.z, self.ctrl);
            stepper.advance_raw(node.x, &node.frame, x)?
        };
        Ok(ScaledFrame { matrix: local * &node.cum_renorm, log_scale: node.cum_log_scale })
    }

    /// Insert nodes until the frame unitary moves by at most `2 sin(π/8)`
    /// between consecutive nodes, which keeps matched Prüfer eigenphase
    /// jumps below π/4.
    fn densify_for_phase_tracking(&mut self) -> Result<()> {
        const MAX_HOP: f64 = 0.765; // 2 sin(π/8)
        let mut unitaries: Vec<CMatrix> =
            self.nodes.iter().map(|n| frame_unitary(&n.frame)).collect::<Result<_>>()?;
        let mut i = 0;
        let mut budget = 200_000usize;
        while i + 1 < self.nodes.len() {
            let hop = (&unitaries[i + 1] - &unitaries[i]).norm();
            let gap = self.nodes[i + 1].x - self.nodes[i].x;
            if hop <= MAX_HOP || gap < 1e-12 * (1.0 + self.nodes[i].x.abs()) {
                i += 1;
                continue;
            }
            budget = budget.checked_sub(1).ok_or(Error::StepBudget {
                x: self.nodes[i].x,
                steps: 200_000,
            })?;
            let mid = 0.5 * (self.nodes[i].x + self.nodes[i + 1].x);
            let base = &self.nodes[i];
            let mut stepper = Stepper::new(&self.system, self.z, self.ctrl);
            let frame = stepper.advance_raw(base.x, &base.frame, mid)?;
            let node = TrajectoryNode {
                x: mid,
                frame,
                cum_renorm: base.cum_renorm.clone(),
                cum_log_scale: base.cum_log_scale,
            };
            let u = frame_unitary(&node.frame)?;
            if mid <= self.nodes[self.start_index].x {
                self.start_index += 1;
            }
            self.nodes.insert(i + 1, node);
            unitaries.insert(i + 1, u);
        }
        Ok(())
    }
}

/// Adaptive Gauss–Kronrod (7–15) quadrature for matrix-valued integrands.
pub mod quad {
    use super::*;

    const XGK: [f64; 8] = [
        0.991455371120813,
        0.949107912342759,
        0.864864423359769,
        0.741531185599394,
        0.586087235467691,
        0.405845151377397,
        0.207784955007898,
        0.0,
    ];
    const WGK: [f64; 8] = [
        0.022935322010529,
        0.063092092629979,
        0.104790010322250,
        0.140653259715525,
        0.169004726639267,
        0.190350578064785,
        0.204432940075298,
        0.209482141084728,
    ];
    const WG: [f64; 4] = [0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469];

    fn kronrod_panel<F>(f: &F, a: f64, b: f64) -> Result<(CMatrix, f64)>
    where
        F: Fn(f64) -> Result<CMatrix>,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let center = f(mid)?;
        let mut ik = &center * cr(WGK[7] * half);
        let mut ig = &center * cr(WG[3] * half);
        for j in 0..7 {
            let dx = half * XGK[j];
            let lo = f(mid - dx)?;
            let hi = f(mid + dx)?;
            let sum = &lo + &hi;
            ik += &sum * cr(WGK[j] * half);
            if j % 2 == 1 {
                ig += &sum * cr(WG[j / 2] * half);
            }
        }
        let err = (&ik - &ig).norm();
        Ok((ik, err))
    }

    /// Integrate `f` over `[a, b]`, splitting first at `split_points`, then
    /// adaptively until the accumulated error estimate is below
    /// `rel_tol · ‖I‖ + 1e-300`.
    pub fn integrate_matrix<F>(
        f: &F,
        a: f64,
        b: f64,
        rel_tol: f64,
        split_points: &[f64],
    ) -> Result<CMatrix>
    where
        F: Fn(f64) -> Result<CMatrix>,
    {
        assert!(a < b, "quadrature interval must be ordered");
        let mut edges: Vec<f64> = vec![a];
        for &s in split_points {
            if s > a && s < b {
                edges.push(s);
            }
        }
        edges.push(b);
        edges.sort_by(f64::total_cmp);
        edges.dedup();

        // (lo, hi, value, err, depth)
        let mut stack: Vec<(f64, f64, CMatrix, f64, u32)> = Vec::new();
        for w in edges.windows(2) {
            let (v, e) = kronrod_panel(f, w[0], w[1])?;
            stack.push((w[0], w[1], v, e, 0));
        }
        let mut guard = 0usize;
        loop {
            let total_norm: f64 = stack.iter().map(|s| s.2.norm()).sum();
            let total_err: f64 = stack.iter().map(|s| s.3).sum();
            let target = rel_tol * total_norm.max(1e-280) + 1e-300;
            if total_err <= target {
                break;
            }
            let (worst, _) = stack
                .iter()
                .enumerate()
                .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
                .expect("nonempty stack");
            let (lo, hi, _, err, depth) = stack.swap_remove(worst);
            if depth >= 40 || (hi - lo) < 1e-14 * (1.0 + lo.abs()) {
                return Err(Error::QuadratureFailure {
                    what: format!(
                        "panel [{lo}, {hi}] stuck at error {err:.3e} (target {target:.3e})"
                    ),
                });
            }
            let mid = 0.5 * (lo + hi);
            let (v1, e1) = kronrod_panel(f, lo, mid)?;
            let (v2, e2) = kronrod_panel(f, mid, hi)?;
            stack.push((lo, mid, v1, e1, depth + 1));
            stack.push((mid, hi, v2, e2, depth + 1));
            guard += 1;
            if guard > 100_000 {
                return Err(Error::QuadratureFailure {
                    what: "refinement budget exhausted".into(),
                });
            }
        }
        let dims = stack.first().map(|s| s.2.shape()).unwrap_or((1, 1));
        let mut acc = CMatrix::zeros(dims.0, dims.1);
        for (_, _, v, _, _) in stack {
            acc += v;
        }
        Ok(acc)
    }
}

/// Weighted inner product `∫ F(x)* A(x) G(x) dx` over a subinterval, by
/// adaptive quadrature split at the declared coefficient discontinuities.
pub fn inner_product_a<F, G>(
    system: &HamiltonianSystem,
    f: &F,
    g: &G,
    sub: (f64, f64),
) -> Result<Complex64>
where
    F: Fn(f64) -> Result<CMatrix>,
    G: Fn(f64) -> Result<CMatrix>,
{
    let (lo, hi) = sub;
    if !(lo < hi) {
        return Err(Error::Spec(format!("empty inner-product interval [{lo}, {hi}]")));
    }
    let integrand = |x: f64| -> Result<CMatrix> {
        let fv = f(x)?;
        let gv = g(x)?;
        system.a_pairing(x, &fv, &gv)
    };
    let value =
        quad::integrate_matrix(&integrand, lo, hi, tol::QUADRATURE_REL, system.discontinuities())?;
    Ok(value[(0, 0)])
}

/// Smallest eigenvalue of `∫_c^d Ψ*AΨ` along a trajectory; strictly positive
/// for systems satisfying the definiteness hypothesis.
pub fn definiteness_spot_check(traj: &Trajectory, c_lo: f64, d_hi: f64) -> Result<f64> {
    let integrand = |x: f64| -> Result<CMatrix> {
        let frame = traj.solution_at(x)?.materialize()?;
        traj.system().a_pairing(x, &frame, &frame)
    };
    let gram = quad::integrate_matrix(
        &integrand,
        c_lo,
        d_hi,
        1e-6,
        traj.system().discontinuities(),
    )?;
    Ok(linalg::hermitian_eig(&gram)?.values[0])
}

/// Frame identity for nondegenerate frames:
/// `Ψ[Ψ*Ψ]⁻¹Ψ* − JΨ[Ψ*Ψ]⁻¹Ψ*J = I`.
pub fn frame_identity_residual(psi: &CMatrix) -> Result<f64> {
    let m = psi.ncols();
    let j = symplectic_j(m);
    let gram = psi.adjoint() * psi;
    let inv = linalg::hermitian_eig(&gram)?.apply(|v| cr(1.0 / v));
    let proj = psi * inv * psi.adjoint();
    let lhs = &proj - &j * &proj * &j;
    Ok((lhs - CMatrix::identity(2 * m, 2 * m)).norm())
}
