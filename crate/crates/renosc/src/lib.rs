//! Renormalized oscillation theory for self-adjoint Hamiltonian (canonical)
//! systems `J Ψ' = (z A(x) + B(x)) Ψ`.
//!
//! The library counts eigenvalues of the associated operator inside an
//! essential spectral gap `(λ₀, λ₁)` by summing the kernel dimensions of the
//! matrix Wronskian `Ψ₊(λ₀,x)* J Ψ₋(λ₁,x)` of two Weyl–Titchmarsh solution
//! frames along the interval, and verifies the counts against independent
//! eigensolver oracles (shooting, finite differences, Nyström resolvent
//! discretization).
//!
//! Module map:
//! - [`linalg`]: dense complex small-matrix kernel (Hermitian eig, SVD,
//!   rank, continuous logarithms of unitary matrices).
//! - [`hamsys`]: Hamiltonian systems, boundary matrices, Sturm–Liouville and
//!   Dirac reductions.
//! - [`families`]: data-described coefficient fields for problem specs.
//! - [`propagate`]: adaptive integration of solution frames with QR
//!   renormalization, Prüfer decomposition, weighted inner products.
//! - [`weyl`]: Weyl–Titchmarsh solutions, Weyl matrices, Green's kernel and
//!   resolvent application.
//! - [`oscillation`]: Wronskian traces, crossing detection, the gap-counting
//!   entry points.
//! - [`oracle`]: independent spectra for verification.

pub mod error;
pub mod families;
pub mod hamsys;
pub mod linalg;
pub mod oracle;
pub mod oscillation;
pub mod propagate;
pub mod tol;
pub mod weyl;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, Complex};
