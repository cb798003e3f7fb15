//! Dense complex small-matrix kernel.
//!
//! Everything here targets matrices of modest size (a few hundred rows at
//! most, usually `2m × m` with small `m`). Decompositions are delegated to
//! nalgebra; this module adds the domain conventions: sorted spectra,
//! tolerance-based rank decisions, Hermitian functional calculus, and the
//! branch-tracked logarithm of unitary matrices used by Prüfer angles.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

pub type Complex = Complex64;
pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Complex scalar from real and imaginary parts.
#[inline]
pub fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

/// Real scalar lifted to a complex one.
#[inline]
pub fn cr(re: f64) -> Complex {
    Complex::new(re, 0.0)
}

/// Row-major construction with a finiteness check.
pub fn cmat(rows: usize, cols: usize, entries: &[Complex]) -> Result<CMatrix> {
    if entries.len() != rows * cols {
        return Err(Error::ShapeMismatch {
            expected: format!("{} entries", rows * cols),
            got: format!("{}", entries.len()),
        });
    }
    let m = CMatrix::from_row_slice(rows, cols, entries);
    check_finite(&m)?;
    Ok(m)
}

/// Row-major construction from real entries.
pub fn cmat_real(rows: usize, cols: usize, entries: &[f64]) -> Result<CMatrix> {
    let lifted: Vec<Complex> = entries.iter().map(|&x| cr(x)).collect();
    cmat(rows, cols, &lifted)
}

pub fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Hermitian part `(M + M*)/2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * cr(0.5)
}

fn require_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() == m.ncols() {
        Ok(m.nrows())
    } else {
        Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() })
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the eigenvectors, ordered as `values`.
    pub vectors: CMatrix,
}

impl HermEig {
    /// `Q f(Λ) Q*`.
    pub fn apply<F: Fn(f64) -> Complex>(&self, f: F) -> CMatrix {
        let n = self.values.len();
        let d = CMatrix::from_fn(n, n, |i, j| if i == j { f(self.values[i]) } else { cr(0.0) });
        &self.vectors * d * self.vectors.adjoint()
    }
}

/// Hermitian eigendecomposition with an input-symmetry guard.
///
/// The input is symmetrized before decomposition; asymmetry beyond
/// `tol::HERMITIAN_SLACK` (relative) is an error.
pub fn hermitian_eig(h: &CMatrix) -> Result<HermEig> {
    require_square(h)?;
    check_finite(h)?;
    let scale = h.norm().max(1e-300);
    let asym = (h - h.adjoint()).norm() / scale;
    if asym > tol::HERMITIAN_SLACK {
        return Err(Error::NotHermitian { residual: asym });
    }
    let sym = hermitian_part(h);
    let se = nalgebra::SymmetricEigen::new(sym);
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &se.eigenvectors.column(i));
    }
    Ok(HermEig { values, vectors })
}

/// Singular value decomposition `M = left · diag(singulars) · right*`,
/// singular values descending, thin factors.
#[derive(Debug, Clone)]
pub struct Svd {
    pub left: CMatrix,
    pub singulars: Vec<f64>,
    pub right: CMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> CMatrix {
        let k = self.singulars.len();
        let d = CMatrix::from_fn(k, k, |i, j| if i == j { cr(self.singulars[i]) } else { cr(0.0) });
        &self.left * d * self.right.adjoint()
    }
}

pub fn svd(m: &CMatrix) -> Result<Svd> {
    check_finite(m)?;
    let dec = nalgebra::SVD::new(m.clone(), true, true);
    let u = dec.u.expect("requested");
    let vt = dec.v_t.expect("requested");
    let k = dec.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]));
    let singulars: Vec<f64> = order.iter().map(|&i| dec.singular_values[i]).collect();
    let mut left = CMatrix::zeros(u.nrows(), k);
    let mut right = CMatrix::zeros(vt.ncols(), k);
    for (col, &i) in order.iter().enumerate() {
        left.set_column(col, &u.column(i));
        right.set_column(col, &vt.row(i).adjoint());
    }
    Ok(Svd { left, singulars, right })
}

/// Kernel dimension of `M` under a relative rank tolerance.
///
/// A singular value counts as zero when it is at most
/// `rel_tol · max(σ_max, tol::RANK_ABS_FLOOR)`; columns beyond `min(r, c)`
/// contribute to the kernel unconditionally.
pub fn nullity(m: &CMatrix, rel_tol: f64) -> Result<usize> {
    assert!(rel_tol > 0.0, "rank tolerance must be positive");
    let dec = svd(m)?;
    let reference = dec.singulars.first().copied().unwrap_or(0.0).max(tol::RANK_ABS_FLOOR);
    let cutoff = rel_tol * reference;
    let rank = dec.singulars.iter().filter(|&&s| s > cutoff).count();
    Ok(m.ncols() - rank)
}

/// Smallest and largest singular values.
pub fn singular_extremes(m: &CMatrix) -> Result<(f64, f64)> {
    let dec = svd(m)?;
    let hi = dec.singulars.first().copied().unwrap_or(0.0);
    let lo = dec.singulars.last().copied().unwrap_or(0.0);
    Ok((lo, hi))
}

/// Thin QR with the upper-triangular right factor.
pub fn qr_thin(m: &CMatrix) -> (CMatrix, CMatrix) {
    let qr = m.clone().qr();
    (qr.q(), qr.r())
}

/// Orthonormal basis of the column span.
pub fn orthonormalize(m: &CMatrix) -> CMatrix {
    qr_thin(m).0
}

/// Nearest unitary matrix in Frobenius norm (polar factor).
pub fn polar_unitary(m: &CMatrix) -> Result<CMatrix> {
    let dec = svd(m)?;
    Ok(&dec.left * dec.right.adjoint())
}

/// Largest principal angle (radians) between the column spans of two
/// equally-shaped full-rank matrices.
pub fn max_principal_angle(f: &CMatrix, g: &CMatrix) -> Result<f64> {
    if f.shape() != g.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", f.shape()),
            got: format!("{:?}", g.shape()),
        });
    }
    let qf = orthonormalize(f);
    let qg = orthonormalize(g);
    let overlap = qf.adjoint() * qg;
    let dec = svd(&overlap)?;
    let smin = dec.singulars.last().copied().unwrap_or(0.0).clamp(-1.0, 1.0);
    Ok(smin.acos())
}

/// Eigendecomposition of a unitary matrix: orthonormal eigenvectors and
/// eigenphases in `(-π, π]`.
///
/// Computed by jointly diagonalizing the commuting Hermitian pair
/// `(U + U*)/2` and `(U − U*)/(2i)`; the cosine part fixes eigenspaces up to
/// the `±φ` ambiguity which the sine part then resolves.
#[derive(Debug, Clone)]
pub struct UnitaryEig {
    pub phases: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn unitary_eig(u: &CMatrix) -> Result<UnitaryEig> {
    let n = require_square(u)?;
    let residual = (u.adjoint() * u - CMatrix::identity(n, n)).norm();
    if residual > tol::UNITARY_SLACK {
        return Err(Error::NotUnitary { residual });
    }
    let cos_part = hermitian_part(u);
    let sin_part = (u - u.adjoint()) * c(0.0, -0.5);
    let base = hermitian_eig(&cos_part)?;
    let mut vectors = base.vectors.clone();

    // Refine nearly-degenerate cosine clusters with the sine part.
    const CLUSTER_GAP: f64 = 1e-7;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && base.values[end] - base.values[end - 1] <= CLUSTER_GAP {
            end += 1;
        }
        if end - start > 1 {
            let block = vectors.columns(start, end - start).into_owned();
            let small = hermitian_part(&(block.adjoint() * &sin_part * &block));
            let sub = hermitian_eig(&small)?;
            let rotated = block * sub.vectors;
            for (k, col) in (start..end).enumerate() {
                vectors.set_column(col, &rotated.column(k));
            }
        }
        start = end;
    }

    let phases: Vec<f64> = (0..n)
        .map(|j| {
            let q = vectors.column(j);
            let w = (q.adjoint() * u * q)[(0, 0)];
            w.arg()
        })
        .collect();
    Ok(UnitaryEig { phases, vectors })
}

fn log_branch_impl(u: &CMatrix, theta_prev: Option<&CMatrix>) -> Result<CMatrix> {
    let n = require_square(u)?;
    if let Some(prev) = theta_prev {
        if prev.nrows() != n || prev.ncols() != n {
            return Err(Error::ShapeMismatch {
                expected: format!("{n}x{n}"),
                got: format!("{}x{}", prev.nrows(), prev.ncols()),
            });
        }
    }
    let eig = unitary_eig(u)?;
    let mut theta_values = Vec::with_capacity(n);
    for j in 0..n {
        let half = eig.phases[j] * 0.5;
        let reference = match theta_prev {
            Some(prev) => {
                let q = eig.vectors.column(j);
                (q.adjoint() * prev * q)[(0, 0)].re
            }
            None => 0.0,
        };
        let t = (reference - half) / std::f64::consts::PI;
        let k = if theta_prev.is_some() {
            let k = t.round();
            if (t - k).abs() > 0.5 - 1e-6 / std::f64::consts::PI {
                return Err(Error::BranchAmbiguity { phase: eig.phases[j] });
            }
            k
        } else {
            // principal branch (-π/2, π/2], ties resolved upward
            (t + 0.5).floor()
        };
        theta_values.push(half + std::f64::consts::PI * k);
    }
    let d = CMatrix::from_fn(n, n, |i, j| if i == j { cr(theta_values[i]) } else { cr(0.0) });
    let theta = hermitian_part(&(&eig.vectors * d * eig.vectors.adjoint()));

    let back = hermitian_eig(&theta)?.apply(|t| Complex::from_polar(1.0, 2.0 * t));
    let err = (&back - u).norm() / (u.norm().max(1.0));
    if err > tol::UNITARY_LOG_RESIDUAL {
        return Err(Error::Conditioning {
            what: "unitary logarithm reconstruction".into(),
            estimate: err,
        });
    }
    Ok(theta)
}

/// Hermitian `θ` with `e^{2iθ} = U`, eigenphases on the branch nearest the
/// eigenphases of `theta_prev`.
///
/// Errors with [`Error::BranchAmbiguity`] when a phase lands halfway between
/// two admissible branches, which signals that the caller's step was too
/// large to track continuity.
pub fn unitary_log_branch(u: &CMatrix, theta_prev: &CMatrix) -> Result<CMatrix> {
    log_branch_impl(u, Some(theta_prev))
}

/// Hermitian `θ` with `e^{2iθ} = U` on the principal branch `(-π/2, π/2]`.
pub fn unitary_log_principal(u: &CMatrix) -> Result<CMatrix> {
    log_branch_impl(u, None)
}

/// `f` applied to a Hermitian matrix through its eigendecomposition.
pub fn herm_fn<F: Fn(f64) -> Complex>(h: &CMatrix, f: F) -> Result<CMatrix> {
    Ok(hermitian_eig(h)?.apply(f))
}

/// Wrap an angle to `(-π, π]`.
#[inline]
pub fn wrap_angle(phi: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = phi % two_pi;
    if w <= -std::f64::consts::PI {
        w += two_pi;
    } else if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn rng_matrix(n: usize, seed: u64) -> CMatrix {
        // simple deterministic LCG so unit tests need no RNG dependency
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        CMatrix::from_fn(n, n, |_, _| c(next(), next()))
    }

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        hermitian_part(&rng_matrix(n, seed))
    }

    fn random_unitary(n: usize, seed: u64) -> CMatrix {
        orthonormalize(&rng_matrix(n, seed))
    }

    /// Characteristic polynomial coefficients by Faddeev–LeVerrier; a route
    /// to eigenvalues that shares nothing with the eigensolver.
    fn char_poly(h: &CMatrix) -> Vec<f64> {
        let n = h.nrows();
        let mut coeffs = vec![0.0; n + 1];
        coeffs[n] = 1.0;
        let mut m = CMatrix::zeros(n, n);
        for k in 1..=n {
            m = h * &m + CMatrix::identity(n, n) * cr(coeffs[n + 1 - k]);
            let t = (h * &m).trace();
            coeffs[n - k] = -t.re / k as f64;
        }
        coeffs
    }

    fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
        coeffs.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
    }

    fn poly_roots_bisection(coeffs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
        let mut roots = Vec::new();
        let samples = 20000;
        let mut prev_x = lo;
        let mut prev_f = eval_poly(coeffs, lo);
        for i in 1..=samples {
            let x = lo + (hi - lo) * i as f64 / samples as f64;
            let f = eval_poly(coeffs, x);
            if prev_f == 0.0 {
                roots.push(prev_x);
            } else if prev_f * f < 0.0 {
                let (mut a, mut b) = (prev_x, x);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if eval_poly(coeffs, a) * eval_poly(coeffs, mid) <= 0.0 {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            prev_x = x;
            prev_f = f;
        }
        roots
    }

    #[test]
    fn hermitian_eig_diagonal() {
        let h = cmat_real(2, 2, &[2.0, 0.0, 0.0, 1.0]).unwrap();
        let e = hermitian_eig(&h).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn hermitian_eig_off_diagonal() {
        let h = cmat_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let e = hermitian_eig(&h).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hermitian_eig_matches_char_poly_roots() {
        let h = random_hermitian(4, 17);
        let e = hermitian_eig(&h).unwrap();
        let coeffs = char_poly(&h);
        let bound = h.norm() + 1.0;
        let roots = poly_roots_bisection(&coeffs, -bound, bound);
        assert_eq!(roots.len(), 4, "expected four simple roots");
        for (v, r) in e.values.iter().zip(roots.iter()) {
            assert!((v - r).abs() < 1e-10, "eig {v} vs root {r}");
        }
    }

    #[test]
    fn hermitian_eig_rejects_nonhermitian() {
        let h = cmat_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(hermitian_eig(&h), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn eig_reconstruction_residual() {
        for seed in 0..6 {
            let h = random_hermitian(5, 1000 + seed);
            let e = hermitian_eig(&h).unwrap();
            let rec = e.apply(cr);
            assert!((rec - &h).norm() <= tol::DECOMP_RESIDUAL * h.norm().max(1.0));
            let q = &e.vectors;
            assert!((q.adjoint() * q - CMatrix::identity(5, 5)).norm() <= 1e-12);
        }
    }

    #[test]
    fn svd_identity_and_rank_one() {
        let id = CMatrix::identity(3, 3);
        let s = svd(&id).unwrap();
        assert!(s.singulars.iter().all(|&x| (x - 1.0).abs() < 1e-14));

        let j = cmat_real(2, 2, &[0.0, -1.0, 1.0, 0.0]).unwrap();
        let s = svd(&j).unwrap();
        assert!(s.singulars.iter().all(|&x| (x - 1.0).abs() < 1e-14));

        let u = CVector::from_column_slice(&[c(1.0, 1.0), c(0.0, 2.0), c(3.0, 0.0)]);
        let v = CVector::from_column_slice(&[c(2.0, 0.0), c(0.0, -1.0)]);
        let outer: CMatrix = &u * v.adjoint();
        let s = svd(&outer).unwrap();
        assert!((s.singulars[0] - u.norm() * v.norm()).abs() < 1e-12);
        assert!(s.singulars[1].abs() < 1e-12);
        assert!((s.reconstruct() - &outer).norm() <= tol::DECOMP_RESIDUAL * s.singulars[0]);
    }

    #[test]
    fn nullity_examples() {
        let m = cmat_real(2, 2, &[1.0, 0.0, 0.0, 1e-14]).unwrap();
        assert_eq!(nullity(&m, 1e-8).unwrap(), 1);
        assert_eq!(nullity(&CMatrix::identity(3, 3), 1e-8).unwrap(), 0);
        assert_eq!(nullity(&CMatrix::zeros(3, 4), 1e-8).unwrap(), 4);
    }

    #[test]
    fn nullity_invariant_under_unitary_and_well_conditioned_factors() {
        for seed in 0..8 {
            let mut m = random_hermitian(4, 40 + seed);
            // force a two-dimensional kernel
            let e = hermitian_eig(&m).unwrap();
            m = e.apply(|v| if v.abs() < 1.5 { cr(0.0) } else { cr(v) });
            let base = nullity(&m, tol::RANK_REL).unwrap();
            let u = random_unitary(4, 90 + seed);
            let w = random_unitary(4, 120 + seed);
            assert_eq!(nullity(&(&u * &m), tol::RANK_REL).unwrap(), base);
            assert_eq!(nullity(&(&m * &w), tol::RANK_REL).unwrap(), base);

            // right factor with condition number ≤ 1e3
            let cond = hermitian_eig(&random_hermitian(4, 150 + seed))
                .unwrap()
                .apply(|v| cr(10f64.powf(v.clamp(-1.5, 1.5))));
            assert_eq!(nullity(&(&m * cond), tol::RANK_REL).unwrap(), base);
        }
    }

    #[test]
    fn unitary_log_examples() {
        let id = CMatrix::identity(2, 2);
        let zero = CMatrix::zeros(2, 2);
        let theta = unitary_log_branch(&id, &zero).unwrap();
        assert!(theta.norm() < 1e-12);

        let u = cmat(1, 1, &[c(0.0, 1.0)]).unwrap();
        let theta = unitary_log_branch(&u, &CMatrix::zeros(1, 1)).unwrap();
        assert!((theta[(0, 0)].re - FRAC_PI_4).abs() < 1e-12);

        let u = cmat(1, 1, &[cr(-1.0)]).unwrap();
        let prev = cmat(1, 1, &[cr(FRAC_PI_2 - 0.01)]).unwrap();
        let theta = unitary_log_branch(&u, &prev).unwrap();
        assert!((theta[(0, 0)].re - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn unitary_log_principal_tie_goes_up() {
        let u = cmat(1, 1, &[cr(-1.0)]).unwrap();
        let theta = unitary_log_principal(&u).unwrap();
        assert!((theta[(0, 0)].re - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn unitary_log_branch_ambiguity_detected() {
        let u = cmat(1, 1, &[cr(-1.0)]).unwrap();
        let prev = CMatrix::zeros(1, 1);
        assert!(matches!(
            unitary_log_branch(&u, &prev),
            Err(Error::BranchAmbiguity { .. })
        ));
    }

    #[test]
    fn unitary_log_round_trip_random() {
        for seed in 0..8 {
            let q = random_unitary(3, 7 + seed);
            let phases = [0.3, -2.8, 1.9];
            let d = CMatrix::from_fn(3, 3, |i, j| {
                if i == j {
                    Complex::from_polar(1.0, phases[i])
                } else {
                    cr(0.0)
                }
            });
            let u = &q * d * q.adjoint();
            let theta = unitary_log_principal(&u).unwrap();
            assert!((&theta - theta.adjoint()).norm() < 1e-12);
            let back = herm_fn(&theta, |t| Complex::from_polar(1.0, 2.0 * t)).unwrap();
            assert!((back - &u).norm() < tol::UNITARY_LOG_RESIDUAL);
        }
    }

    #[test]
    fn unitary_eig_separates_opposite_phases() {
        // cos(±φ) coincide; the sine part must split the pair.
        let q = random_unitary(2, 5);
        let d = CMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                Complex::from_polar(1.0, if i == 0 { 1.1 } else { -1.1 })
            } else {
                cr(0.0)
            }
        });
        let u = &q * d * q.adjoint();
        let mut phases = unitary_eig(&u).unwrap().phases;
        phases.sort_by(f64::total_cmp);
        assert!((phases[0] + 1.1).abs() < 1e-10);
        assert!((phases[1] - 1.1).abs() < 1e-10);
    }

    #[test]
    fn principal_angle_detects_span_difference() {
        let f = cmat_real(3, 1, &[1.0, 0.0, 0.0]).unwrap();
        let g = cmat_real(3, 1, &[0.0, 1.0, 0.0]).unwrap();
        assert!((max_principal_angle(&f, &g).unwrap() - PI / 2.0).abs() < 1e-12);
        let same = cmat_real(3, 1, &[2.0, 0.0, 0.0]).unwrap();
        assert!(max_principal_angle(&f, &same).unwrap() < 1e-8);
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(0.1) - 0.1).abs() < 1e-15);
    }
}
