//! Built-in coefficient families, so that systems can be specified entirely
//! by data (problem-spec files, demo presets, golden tests).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamsys::{self, CoefficientFn, Geometry, HamiltonianSystem};
use crate::linalg::{c, cr, CMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrigKind {
    Cos,
    Sin,
}

/// One term `amplitude · cos/sin(frequency · x + phase)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
    pub function: TrigKind,
}

/// A real scalar coefficient described by data.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarField {
    /// `coeffs[0] + coeffs[1] x + coeffs[2] x² + …`
    Polynomial { coeffs: Vec<f64> },
    Trigonometric { terms: Vec<TrigTerm> },
    /// `values[i]` on `[breaks[i-1], breaks[i])`, with `values.len() ==
    /// breaks.len() + 1`; right-continuous at the breakpoints.
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    Sum { terms: Vec<ScalarField> },
}

impl ScalarField {
    pub fn constant(v: f64) -> Self {
        ScalarField::Polynomial { coeffs: vec![v] }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScalarField::Polynomial { coeffs } => {
                if coeffs.is_empty() {
                    return Err(Error::Spec("polynomial needs at least one coefficient".into()));
                }
            }
            ScalarField::Trigonometric { terms } => {
                if terms.is_empty() {
                    return Err(Error::Spec("trigonometric field needs at least one term".into()));
                }
            }
            ScalarField::PiecewiseConstant { breaks, values } => {
                if values.len() != breaks.len() + 1 {
                    return Err(Error::Spec(format!(
                        "piecewise field needs {} values for {} breakpoints, got {}",
                        breaks.len() + 1,
                        breaks.len(),
                        values.len()
                    )));
                }
                if breaks.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Spec("piecewise breakpoints must be increasing".into()));
                }
            }
            ScalarField::Sum { terms } => {
                for t in terms {
                    t.validate()?;
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ScalarField::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
            }
            ScalarField::Trigonometric { terms } => terms
                .iter()
                .map(|t| {
                    let arg = t.frequency * x + t.phase;
                    t.amplitude
                        * match t.function {
                            TrigKind::Cos => arg.cos(),
                            TrigKind::Sin => arg.sin(),
                        }
                })
                .sum(),
            ScalarField::PiecewiseConstant { breaks, values } => {
                let idx = breaks.partition_point(|&b| b <= x);
                values[idx]
            }
            ScalarField::Sum { terms } => terms.iter().map(|t| t.eval(x)).sum(),
        }
    }

    pub fn discontinuities(&self) -> Vec<f64> {
        match self {
            ScalarField::PiecewiseConstant { breaks, .. } => breaks.clone(),
            ScalarField::Sum { terms } => {
                let mut all: Vec<f64> = terms.iter().flat_map(|t| t.discontinuities()).collect();
                all.sort_by(f64::total_cmp);
                all.dedup();
                all
            }
            _ => Vec::new(),
        }
    }
}

/// A Hermitian matrix coefficient described by data.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatrixField {
    /// Constant Hermitian matrix with `[re, im]` entry pairs, row-major.
    Constant { dim: usize, entries: Vec<[f64; 2]> },
    /// Diagonal composition of scalar fields.
    Diagonal { fields: Vec<ScalarField> },
    /// `field(x) · I_dim`.
    ScaledIdentity { dim: usize, field: ScalarField },
    Add { terms: Vec<MatrixField> },
}

impl MatrixField {
    pub fn constant_real_diag(values: &[f64]) -> Self {
        MatrixField::Diagonal {
            fields: values.iter().map(|&v| ScalarField::constant(v)).collect(),
        }
    }

    pub fn dim(&self) -> Result<usize> {
        match self {
            MatrixField::Constant { dim, .. } => Ok(*dim),
            MatrixField::Diagonal { fields } => Ok(fields.len()),
            MatrixField::ScaledIdentity { dim, .. } => Ok(*dim),
            MatrixField::Add { terms } => {
                let first = terms
                    .first()
                    .ok_or_else(|| Error::Spec("empty matrix-field sum".into()))?
                    .dim()?;
                for t in terms {
                    if t.dim()? != first {
                        return Err(Error::Spec("matrix-field sum mixes dimensions".into()));
                    }
                }
                Ok(first)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MatrixField::Constant { dim, entries } => {
                if entries.len() != dim * dim {
                    return Err(Error::Spec(format!(
                        "constant matrix field: expected {} entries, got {}",
                        dim * dim,
                        entries.len()
                    )));
                }
                let m = self.eval(0.0)?;
                let asym = (&m - m.adjoint()).norm();
                if asym > 1e-12 * m.norm().max(1.0) {
                    return Err(Error::Spec("constant matrix field is not Hermitian".into()));
                }
            }
            MatrixField::Diagonal { fields } => {
                if fields.is_empty() {
                    return Err(Error::Spec("diagonal matrix field needs entries".into()));
                }
                for f in fields {
                    f.validate()?;
                }
            }
            MatrixField::ScaledIdentity { dim, field } => {
                if *dim == 0 {
                    return Err(Error::Spec("scaled identity needs positive dimension".into()));
                }
                field.validate()?;
            }
            MatrixField::Add { terms } => {
                self.dim()?;
                for t in terms {
                    t.validate()?;
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> Result<CMatrix> {
        match self {
            MatrixField::Constant { dim, entries } => {
                let data: Vec<_> = entries.iter().map(|&[re, im]| c(re, im)).collect();
                crate::linalg::cmat(*dim, *dim, &data)
            }
            MatrixField::Diagonal { fields } => {
                let n = fields.len();
                let mut m = CMatrix::zeros(n, n);
                for (i, f) in fields.iter().enumerate() {
                    m[(i, i)] = cr(f.eval(x));
                }
                Ok(m)
            }
            MatrixField::ScaledIdentity { dim, field } => {
                Ok(CMatrix::identity(*dim, *dim) * cr(field.eval(x)))
            }
            MatrixField::Add { terms } => {
                let n = self.dim()?;
                let mut acc = CMatrix::zeros(n, n);
                for t in terms {
                    acc += t.eval(x)?;
                }
                Ok(acc)
            }
        }
    }

    pub fn discontinuities(&self) -> Vec<f64> {
        let mut all = match self {
            MatrixField::Constant { .. } => Vec::new(),
            MatrixField::Diagonal { fields } => {
                fields.iter().flat_map(|f| f.discontinuities()).collect()
            }
            MatrixField::ScaledIdentity { field, .. } => field.discontinuities(),
            MatrixField::Add { terms } => terms.iter().flat_map(|t| t.discontinuities()).collect(),
        };
        all.sort_by(f64::total_cmp);
        all.dedup();
        all
    }

    pub fn as_coefficient_fn(&self) -> CoefficientFn {
        let field = self.clone();
        Arc::new(move |x| field.eval(x))
    }
}

/// Sturm–Liouville system `R⁻¹[-(P u')' + Q u] = λ u` from data-described
/// coefficients.
pub fn schrodinger_system(
    p: &MatrixField,
    q: &MatrixField,
    r: &MatrixField,
    geometry: Geometry,
    x0: f64,
) -> Result<Arc<HamiltonianSystem>> {
    for f in [p, q, r] {
        f.validate()?;
    }
    let m = p.dim()?;
    if q.dim()? != m || r.dim()? != m {
        return Err(Error::Spec("P, Q, R must share one dimension".into()));
    }
    let mut disc = p.discontinuities();
    disc.extend(q.discontinuities());
    disc.extend(r.discontinuities());
    hamsys::from_sturm_liouville(
        p.as_coefficient_fn(),
        q.as_coefficient_fn(),
        r.as_coefficient_fn(),
        geometry,
        x0,
        disc,
    )
}

/// Dirac-type system `J u' − B u = λ u` from a data-described field.
pub fn dirac_system(
    bfield: &MatrixField,
    geometry: Geometry,
    x0: f64,
) -> Result<Arc<HamiltonianSystem>> {
    bfield.validate()?;
    hamsys::from_dirac(bfield.as_coefficient_fn(), geometry, x0, bfield.discontinuities())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_field_evaluation() {
        let p = ScalarField::Polynomial { coeffs: vec![1.0, 0.0, 2.0] };
        assert_eq!(p.eval(3.0), 19.0);

        let t = ScalarField::Trigonometric {
            terms: vec![TrigTerm {
                amplitude: 2.0,
                frequency: 2.0,
                phase: 0.0,
                function: TrigKind::Cos,
            }],
        };
        assert!((t.eval(0.25) - 2.0 * (0.5f64).cos()).abs() < 1e-15);

        let pw = ScalarField::PiecewiseConstant { breaks: vec![1.0, 2.0], values: vec![5.0, -3.0, 7.0] };
        assert_eq!(pw.eval(0.5), 5.0);
        assert_eq!(pw.eval(1.0), -3.0); // right-continuous
        assert_eq!(pw.eval(1.9), -3.0);
        assert_eq!(pw.eval(2.0), 7.0);
        assert_eq!(pw.discontinuities(), vec![1.0, 2.0]);
    }

    #[test]
    fn matrix_field_sum_and_diagonal() {
        let mass = MatrixField::constant_real_diag(&[1.0, -1.0]);
        let well = MatrixField::ScaledIdentity {
            dim: 2,
            field: ScalarField::PiecewiseConstant {
                breaks: vec![-1.0, 1.0],
                values: vec![0.0, -0.6, 0.0],
            },
        };
        let total = MatrixField::Add { terms: vec![mass, well] };
        total.validate().unwrap();
        let inside = total.eval(0.0).unwrap();
        assert!((inside[(0, 0)].re - 0.4).abs() < 1e-15);
        assert!((inside[(1, 1)].re + 1.6).abs() < 1e-15);
        let outside = total.eval(3.0).unwrap();
        assert!((outside[(0, 0)].re - 1.0).abs() < 1e-15);
        assert_eq!(total.discontinuities(), vec![-1.0, 1.0]);
    }

    #[test]
    fn piecewise_shape_mismatch_rejected() {
        let bad = ScalarField::PiecewiseConstant { breaks: vec![0.0], values: vec![1.0] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn serde_round_trip() {
        let f = MatrixField::Add {
            terms: vec![
                MatrixField::constant_real_diag(&[1.0, -1.0]),
                MatrixField::ScaledIdentity { dim: 2, field: ScalarField::constant(0.25) },
            ],
        };
        let text = serde_json::to_string(&f).unwrap();
        let back: MatrixField = serde_json::from_str(&text).unwrap();
        assert_eq!((back.eval(0.3).unwrap() - f.eval(0.3).unwrap()).norm(), 0.0);
    }
}
