//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each rotation acts on a pair `(p, q)`: the off-diagonal entry
//! `a_pq = |a_pq| e^{i phi}` is first rotated to a real value by the phase
//! `e^{i phi}` and then annihilated by an ordinary real plane rotation.
//! For real symmetric input the phase is `+-1` and every iterate stays real.

use super::{c64, hermitian_deviation, max_abs, ComplexMatrix, HermitianMatrix, C64, HERMITIAN_TOL};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition `H = U diag(values) U^dagger`, values ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn reassemble(&self) -> HermitianMatrix {
        self.reassemble_with(&self.values)
    }

    /// `U diag(values) U^dagger` with replacement eigenvalues.
    pub fn reassemble_with(&self, values: &[f64]) -> HermitianMatrix {
        let n = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        for (k, &l) in values.iter().enumerate() {
            for i in 0..n {
                scaled[(i, k)] *= l;
            }
        }
        HermitianMatrix::from_hermitian_part(&(scaled * self.vectors.adjoint()))
    }

    pub fn max_abs_value(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k).iter().copied().collect()
    }
}

/// Eigen-decomposition of a validated Hermitian matrix.
pub fn hermitian_eig(h: &HermitianMatrix) -> HermitianEigen {
    jacobi(h.matrix())
}

/// Eigen-decomposition of a raw matrix, rejecting non-Hermitian input.
pub fn hermitian_eig_raw(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: "square matrix".into(),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    let dev = hermitian_deviation(m);
    if dev > HERMITIAN_TOL * max_abs(m).max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(jacobi(&super::hermitian_part(m)))
}

fn off_diagonal_norm_sq(a: &ComplexMatrix) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            s += a[(p, q)].norm_sqr();
        }
    }
    s
}

fn jacobi(input: &ComplexMatrix) -> HermitianEigen {
    let n = input.nrows();
    let mut a = input.clone();
    let mut v = ComplexMatrix::identity(n, n);
    let frob_sq: f64 = a.iter().map(|z| z.norm_sqr()).sum();

    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm_sq(&a);
        if off == 0.0 || off <= (1e-17f64).powi(2) * frob_sq {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].re.total_cmp(&a[(y, y)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    HermitianEigen { values, vectors }
}

fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let b = apq.norm();
    if b == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // negligible against both diagonal entries: drop it outright
    if app.abs() + 1e3 * b == app.abs() && aqq.abs() + 1e3 * b == aqq.abs() {
        a[(p, q)] = C64::new(0.0, 0.0);
        a[(q, p)] = C64::new(0.0, 0.0);
        return;
    }
    let phase = apq / b;
    let theta = (aqq - app) / (2.0 * b);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let cc = c64(c, 0.0);
    // J = [[c, s e^{i phi}], [-s e^{-i phi}, c]] on the (p, q) plane
    let jpq = phase * s;
    let jqp = -phase.conj() * s;
    let n = a.nrows();

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * cc + akq * jqp;
        a[(k, q)] = akp * jpq + akq * cc;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * cc + aqk * jqp.conj();
        a[(q, k)] = apk * jpq.conj() + aqk * cc;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = c64(a[(p, p)].re, 0.0);
    a[(q, q)] = c64(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * cc + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * cc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::max_abs_diff;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
        let m = ComplexMatrix::from_fn(n, n, |_, _| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        HermitianMatrix::from_hermitian_part(&(&m + m.adjoint()))
    }

    fn check_reconstruction(h: &HermitianMatrix) {
        let e = hermitian_eig(h);
        let tol = 1e-10 * (1.0 + e.max_abs_value());
        assert!(max_abs_diff(e.reassemble().matrix(), h.matrix()) <= tol);
        let n = h.dim();
        let gram = e.vectors.adjoint() * &e.vectors;
        assert!(max_abs_diff(&gram, &ComplexMatrix::identity(n, n)) < 1e-12);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn diagonal_and_pauli_x() {
        let e = hermitian_eig(&HermitianMatrix::from_real_diagonal(&[0.5, -0.5]));
        assert_eq!(e.values, vec![-0.5, 0.5]);
        let x = ComplexMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]);
        let e = hermitian_eig_raw(&x).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_reconstruction_up_to_64() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &n in &[1usize, 2, 3, 5, 8, 17, 32, 64] {
            for _ in 0..3 {
                check_reconstruction(&random_hermitian(n, &mut rng));
            }
        }
    }

    #[test]
    fn degenerate_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = random_hermitian(6, &mut rng);
        let e = hermitian_eig(&h);
        let vals = [1.0, 1.0, 1.0, -2.0, -2.0, 0.0];
        let d = e.reassemble_with(&vals);
        check_reconstruction(&d);
        let e2 = hermitian_eig(&d);
        assert!((e2.values[0] + 2.0).abs() < 1e-12 && (e2.values[5] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian_raw() {
        let m = ComplexMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        assert!(matches!(hermitian_eig_raw(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn real_input_stays_real() {
        let m = ComplexMatrix::from_row_slice(
            3,
            3,
            &[2.0, -1.0, 0.5, -1.0, 3.0, 0.25, 0.5, 0.25, 1.0].map(|x| c64(x, 0.0)),
        );
        let e = hermitian_eig_raw(&m).unwrap();
        assert!(e.vectors.iter().all(|z| z.im == 0.0));
    }
}
