//! Gram-Schmidt preprocessing of constraint operators.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matcore::{c64, HermitianMatrix};

/// Residual norm (relative to the operator norm) below which an operator is
/// treated as linearly dependent on its predecessors.
const DEPENDENCE_TOL: f64 = 1e-9;
/// Allowed disagreement between the given and the implied value of a
/// dependent operator, relative to `max(1, |value|)`.
const CONSISTENCY_TOL: f64 = 1e-8;

/// Hilbert-Schmidt orthonormal operators `S_i` with values `t_i`, plus the
/// map back to the original operators: `S_i = sum_k transform[(i, k)] A_k`
/// and `t_i = sum_k transform[(i, k)] b_k`.
#[derive(Clone, Debug)]
pub struct OrthonormalBasis {
    pub ops: Vec<HermitianMatrix>,
    pub values: Vec<f64>,
    pub transform: DMatrix<f64>,
    /// Indices of the original operators that contributed a new direction.
    pub kept: Vec<usize>,
}

impl OrthonormalBasis {
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// `sum_i z_i S_i`.
    pub fn expand(&self, z: &[f64]) -> HermitianMatrix {
        assert_eq!(z.len(), self.ops.len());
        let n = self.ops.first().map_or(0, HermitianMatrix::dim);
        let mut out = HermitianMatrix::zeros(n);
        for (s, &zi) in self.ops.iter().zip(z) {
            out = out.add_scaled(s, zi);
        }
        out
    }

    /// Coordinates `tr(h S_i)` of `h` in the basis.
    pub fn coordinates(&self, h: &HermitianMatrix) -> Vec<f64> {
        self.ops.iter().map(|s| s.inner_product(h)).collect()
    }

    /// Coefficients on the original operators of `sum_i z_i S_i`.
    pub fn to_original(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.ops.len());
        (0..self.transform.ncols())
            .map(|k| (0..z.len()).map(|i| self.transform[(i, k)] * z[i]).sum())
            .collect()
    }
}

/// A dependent operator whose value disagrees with its predecessors.
#[derive(Clone, Debug)]
pub(crate) struct Inconsistency {
    pub mismatch: f64,
    /// `sum_k w_k A_k = 0` while `sum_k w_k b_k = mismatch`.
    pub combination: Vec<f64>,
}

pub(crate) fn gram_schmidt(
    ops: &[HermitianMatrix],
    values: &[f64],
) -> Result<(OrthonormalBasis, Option<Inconsistency>)> {
    if ops.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} values", ops.len()),
            found: format!("{} values", values.len()),
        });
    }
    let dim = ops.first().map_or(0, HermitianMatrix::dim);
    if let Some(bad) = ops.iter().find(|a| a.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: format!("{dim}x{dim}"),
            found: format!("{0}x{0}", bad.dim()),
        });
    }
    let m = ops.len();
    let mut basis: Vec<HermitianMatrix> = Vec::new();
    let mut t: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    let mut worst: Option<Inconsistency> = None;

    for (k, a) in ops.iter().enumerate() {
        let norm_a = a.inner_product(a).sqrt();
        let mut r = a.clone();
        let mut coeff = vec![0.0; basis.len()];
        // two passes of modified Gram-Schmidt keep the basis orthonormal to rounding
        for _ in 0..2 {
            for (i, s) in basis.iter().enumerate() {
                let c = s.inner_product(&r);
                r = r.add_scaled(s, -c);
                coeff[i] += c;
            }
        }
        let norm_r = r.inner_product(&r).sqrt();
        // combination expressing the residual through the original operators
        let mut w = vec![0.0; m];
        w[k] = 1.0;
        for (i, row) in rows.iter().enumerate() {
            for (wk, rk) in w.iter_mut().zip(row) {
                *wk -= coeff[i] * rk;
            }
        }
        if norm_r <= DEPENDENCE_TOL * norm_a.max(f64::MIN_POSITIVE) || norm_a == 0.0 {
            let implied: f64 = coeff.iter().zip(&t).map(|(c, ti)| c * ti).sum();
            let mismatch = values[k] - implied;
            if mismatch.abs() > CONSISTENCY_TOL * values[k].abs().max(1.0)
                && worst.as_ref().is_none_or(|x| x.mismatch.abs() < mismatch.abs())
            {
                worst = Some(Inconsistency {
                    mismatch,
                    combination: w,
                });
            }
            continue;
        }
        let scale = 1.0 / norm_r;
        let value = w.iter().zip(values).map(|(wk, bk)| wk * bk).sum::<f64>() * scale;
        basis.push(HermitianMatrix::from_hermitian_part(&(r.matrix() * c64(scale, 0.0))));
        t.push(value);
        rows.push(w.iter().map(|x| x * scale).collect());
        kept.push(k);
    }

    let transform = DMatrix::from_fn(rows.len(), m, |i, k| rows[i][k]);
    Ok((
        OrthonormalBasis {
            ops: basis,
            values: t,
            transform,
            kept,
        },
        worst,
    ))
}

/// Orthonormalizes `ops` in the Hilbert-Schmidt inner product, transforming
/// `values` alongside. Dependent operators are dropped when their values are
/// consistent and rejected otherwise.
pub fn orthonormalize(ops: &[HermitianMatrix], values: &[f64]) -> Result<OrthonormalBasis> {
    let (basis, bad) = gram_schmidt(ops, values)?;
    match bad {
        Some(x) => Err(Error::InconsistentConstraints {
            mismatch: x.mismatch.abs(),
        }),
        None => Ok(basis),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{kron, max_abs_diff, ComplexMatrix};

    fn paulis() -> Vec<ComplexMatrix> {
        let z = c64(0.0, 0.0);
        let o = c64(1.0, 0.0);
        let i = c64(0.0, 1.0);
        vec![
            ComplexMatrix::identity(2, 2),
            ComplexMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            ComplexMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            ComplexMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        ]
    }

    #[test]
    fn identity_and_sigma_z() {
        let p = paulis();
        let ops = [HermitianMatrix::identity(2), HermitianMatrix::new(p[3].clone()).unwrap()];
        let b = orthonormalize(&ops, &[1.0, 0.2]).unwrap();
        let s = 0.5f64.sqrt();
        assert!(max_abs_diff(b.ops[0].matrix(), &(ComplexMatrix::identity(2, 2) * c64(s, 0.0))) < 1e-15);
        assert!(max_abs_diff(b.ops[1].matrix(), &(&p[3] * c64(s, 0.0))) < 1e-15);
        assert!((b.values[0] - s).abs() < 1e-15 && (b.values[1] - 0.2 * s).abs() < 1e-15);
    }

    #[test]
    fn orthonormal_input_is_unchanged() {
        let ops: Vec<HermitianMatrix> = (0..3).map(|k| {
            let mut d = vec![0.0; 3];
            d[k] = 1.0;
            HermitianMatrix::from_real_diagonal(&d)
        }).collect();
        let b = orthonormalize(&ops, &[0.1, 0.2, 0.7]).unwrap();
        assert!(max_abs_diff(&b.transform.map(|x| c64(x, 0.0)), &ComplexMatrix::identity(3, 3)) < 1e-15);
        assert_eq!(b.values, vec![0.1, 0.2, 0.7]);
    }

    #[test]
    fn pauli_products_gram_is_identity() {
        let p = paulis();
        let mut ops = Vec::new();
        for a in &p {
            for b in &p {
                ops.push(HermitianMatrix::new(kron(a, b) + kron(a, &p[0]) * c64(0.3, 0.0)).unwrap());
            }
        }
        let values = vec![0.0; ops.len()];
        let b = orthonormalize(&ops, &values).unwrap();
        assert_eq!(b.len(), 16);
        for i in 0..16 {
            for k in 0..16 {
                let g = b.ops[i].inner_product(&b.ops[k]);
                let e = if i == k { 1.0 } else { 0.0 };
                assert!((g - e).abs() < 1e-12);
            }
        }
        // the recorded transform reproduces every S_i
        for i in 0..16 {
            let mut s = HermitianMatrix::zeros(4);
            for (k, a) in ops.iter().enumerate() {
                s = s.add_scaled(a, b.transform[(i, k)]);
            }
            assert!(max_abs_diff(s.matrix(), b.ops[i].matrix()) < 1e-11);
        }
    }

    #[test]
    fn dependent_rows() {
        let a = HermitianMatrix::from_real_diagonal(&[1.0, 0.0]);
        let c = HermitianMatrix::from_real_diagonal(&[0.0, 1.0]);
        let sum = a.add(&c);
        let b = orthonormalize(&[a.clone(), c.clone(), sum.clone()], &[0.3, 0.7, 1.0]).unwrap();
        assert_eq!(b.kept, vec![0, 1]);
        let err = orthonormalize(&[a, c, sum], &[0.3, 0.7, 1.5]).unwrap_err();
        assert!(matches!(err, Error::InconsistentConstraints { mismatch } if (mismatch - 0.5).abs() < 1e-12));
    }

    #[test]
    fn inconsistency_combination_annihilates_operators() {
        let a = HermitianMatrix::from_real_diagonal(&[1.0, 2.0]);
        let c = a.scale(3.0);
        let (_, bad) = gram_schmidt(&[a.clone(), c.clone()], &[1.0, 1.0]).unwrap();
        let bad = bad.unwrap();
        let combo = a.scale(bad.combination[0]).add_scaled(&c, bad.combination[1]);
        assert!(combo.inner_product(&combo).sqrt() < 1e-12);
        assert!((bad.combination[0] * 1.0 + bad.combination[1] * 1.0 - bad.mismatch).abs() < 1e-12);
    }
}
