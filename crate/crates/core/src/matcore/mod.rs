//! Dense complex and Hermitian linear algebra shared by the rest of the crate.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. [`HermitianMatrix`] wraps one
//! and guarantees Hermiticity on construction; eigendecompositions use the
//! cyclic Jacobi solver in [`eig`].

mod eig;
mod tensor;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use eig::{hermitian_eig, hermitian_eig_raw, HermitianEigen};
pub use tensor::{
    kron, partial_trace, partial_transpose, partial_transpose_b, symmetric_isometry,
    symmetric_isometry_with_cap, Subsystem, SymmetricIsometry, DEFAULT_QUBIT_CAP,
};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

/// Inputs closer than this (relative to their max entry) to Hermitian are symmetrized.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Default absolute tolerance on the minimum eigenvalue for PSD tests.
pub const PSD_TOL: f64 = 1e-8;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entry modulus.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest entry modulus of `a - b`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Hermitian deviation `max |m - m^dagger|`.
pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for k in i..n {
            dev = dev.max((m[(i, k)] - m[(k, i)].conj()).norm());
        }
    }
    dev
}

/// Hermitian part `(m + m^dagger)/2` with an exactly real diagonal.
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.nrows();
    let mut out = m.clone();
    for i in 0..n {
        out[(i, i)] = c64(m[(i, i)].re, 0.0);
        for k in (i + 1)..n {
            let z = (m[(i, k)] + m[(k, i)].conj()) * 0.5;
            out[(i, k)] = z;
            out[(k, i)] = z.conj();
        }
    }
    out
}

/// `Re tr(a b)`, the Hilbert-Schmidt inner product for Hermitian arguments.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    trace_product_complex(a, b).re
}

/// `tr(a b)` without forming the product.
pub fn trace_product_complex(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    assert_eq!(a.ncols(), b.nrows());
    assert_eq!(a.nrows(), b.ncols());
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// A complex Hermitian matrix.
///
/// Construction symmetrizes inputs that are Hermitian up to
/// [`HERMITIAN_TOL`] and rejects anything further off.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    inner: ComplexMatrix,
}

impl HermitianMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: "square matrix".into(),
                found: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let dev = hermitian_deviation(&m);
        if dev > HERMITIAN_TOL * max_abs(&m).max(1.0) {
            return Err(Error::NotHermitian { deviation: dev });
        }
        Ok(Self {
            inner: hermitian_part(&m),
        })
    }

    /// Takes the Hermitian part of `m` without validating it.
    pub fn from_hermitian_part(m: &ComplexMatrix) -> Self {
        Self {
            inner: hermitian_part(m),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: ComplexMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            inner: ComplexMatrix::zeros(n, n),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut inner = ComplexMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            inner[(i, i)] = c64(d, 0.0);
        }
        Self { inner }
    }

    /// Projector `|psi><psi|` (not normalized).
    pub fn projector(psi: &[C64]) -> Self {
        let n = psi.len();
        let m = ComplexMatrix::from_fn(n, n, |i, k| psi[i] * psi[k].conj());
        Self::from_hermitian_part(&m)
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.inner
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.inner
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.inner[(i, i)].re).sum()
    }

    /// `tr(self * other)`, real for two Hermitian arguments.
    pub fn inner_product(&self, other: &HermitianMatrix) -> f64 {
        trace_product(&self.inner, &other.inner)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            inner: &self.inner * c64(s, 0.0),
        }
    }

    pub fn add(&self, other: &HermitianMatrix) -> Self {
        Self {
            inner: &self.inner + &other.inner,
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &HermitianMatrix, s: f64) -> Self {
        Self {
            inner: &self.inner + &other.inner * c64(s, 0.0),
        }
    }

    /// Unitary (or isometric) conjugation `u self u^dagger`.
    pub fn conjugate(&self, u: &ComplexMatrix) -> Self {
        Self::from_hermitian_part(&(u * &self.inner * u.adjoint()))
    }

    pub fn eig(&self) -> HermitianEigen {
        hermitian_eig(self)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(self)
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        is_psd(self, tol)
    }
}

/// Smallest eigenvalue of `h`.
pub fn min_eigenvalue(h: &HermitianMatrix) -> f64 {
    hermitian_eig(h).values[0]
}

/// `true` iff the minimum eigenvalue is at least `-tol`.
pub fn is_psd(h: &HermitianMatrix, tol: f64) -> bool {
    min_eigenvalue(h) >= -tol
}

/// Clips eigenvalues in `(-clip, 0)` to zero and renormalizes to unit trace.
///
/// Returns `None` if an eigenvalue lies below `-clip`.
pub fn purify_state(h: &HermitianMatrix, clip: f64) -> Option<HermitianMatrix> {
    let e = hermitian_eig(h);
    if e.values[0] < -clip {
        return None;
    }
    let clipped: Vec<f64> = e.values.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let scaled: Vec<f64> = clipped.iter().map(|l| l / total).collect();
    Some(e.reassemble_with(&scaled))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn symmetrizes_small_noise() {
        let m = ComplexMatrix::from_row_slice(
            2,
            2,
            &[c64(1.0, 1e-14), c64(0.5, 0.1), c64(0.5 + 1e-14, -0.1), c64(2.0, 0.0)],
        );
        let h = HermitianMatrix::new(m).unwrap();
        assert_eq!(h.matrix()[(0, 0)].im, 0.0);
        assert_eq!(h.matrix()[(0, 1)], h.matrix()[(1, 0)].conj());
    }

    #[test]
    fn rejects_non_square_and_nan() {
        assert!(HermitianMatrix::new(ComplexMatrix::zeros(2, 3)).is_err());
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 0)] = c64(f64::NAN, 0.0);
        assert_eq!(HermitianMatrix::new(m), Err(Error::NonFinite));
    }

    #[test]
    fn psd_tolerance_semantics() {
        assert_eq!(min_eigenvalue(&HermitianMatrix::identity(3)), 1.0);
        assert!(is_psd(&HermitianMatrix::identity(3), PSD_TOL));
        assert!(!is_psd(&HermitianMatrix::from_real_diagonal(&[1.0, -1e-6]), 1e-8));
        assert!(is_psd(&HermitianMatrix::from_real_diagonal(&[1.0, -1e-9]), 1e-8));
    }

    #[test]
    fn purify_clips_dust() {
        let h = HermitianMatrix::from_real_diagonal(&[0.5, 0.5 + 1e-10, -1e-10]);
        let p = purify_state(&h, 1e-9).unwrap();
        assert!((p.trace() - 1.0).abs() < 1e-15);
        assert!(p.min_eigenvalue() >= 0.0);
        assert!(purify_state(&HermitianMatrix::from_real_diagonal(&[1.0, -1e-3]), 1e-9).is_none());
    }
}
