//! Tensor-product utilities: Kronecker products, partial traces and
//! transposes, and the isometry onto the symmetric subspace of `n` qubits.

use super::{c64, ComplexMatrix};
use crate::error::{Error, Result};

/// Largest qubit count for which [`symmetric_isometry`] materializes `2^n` rows.
pub const DEFAULT_QUBIT_CAP: usize = 12;

/// Which factor of `C^{dA} (x) C^{dB}` to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Partial transpose on the second factor of `C^{da} (x) C^{db}`.
pub fn partial_transpose(x: &ComplexMatrix, da: usize, db: usize) -> Result<ComplexMatrix> {
    let n = da * db;
    if x.nrows() != n || x.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("{n}x{n}"),
            found: format!("{}x{}", x.nrows(), x.ncols()),
        });
    }
    Ok(ComplexMatrix::from_fn(n, n, |r, c| {
        let (i, k) = (r / db, r % db);
        let (j, l) = (c / db, c % db);
        x[(i * db + l, j * db + k)]
    }))
}

/// Partial transpose of the second qubit of a two-qubit operator.
pub fn partial_transpose_b(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    partial_transpose(x, 2, 2)
}

/// Traces out one factor of `C^{da} (x) C^{db}`.
pub fn partial_trace(x: &ComplexMatrix, da: usize, db: usize, keep: Subsystem) -> Result<ComplexMatrix> {
    let n = da * db;
    if x.nrows() != n || x.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("{n}x{n}"),
            found: format!("{}x{}", x.nrows(), x.ncols()),
        });
    }
    Ok(match keep {
        Subsystem::A => ComplexMatrix::from_fn(da, da, |i, j| {
            (0..db).map(|k| x[(i * db + k, j * db + k)]).sum()
        }),
        Subsystem::B => ComplexMatrix::from_fn(db, db, |k, l| {
            (0..da).map(|i| x[(i * db + k, i * db + l)]).sum()
        }),
    })
}

/// Isometry `V: C^{n+1} -> (C^2)^{(x) n}` onto the symmetric subspace.
///
/// Column `w` is the normalized sum of all computational basis vectors of
/// Hamming weight `w`. Qubit 1 is the most significant bit of the row index.
#[derive(Clone, Debug)]
pub struct SymmetricIsometry {
    n: usize,
    matrix: ComplexMatrix,
}

impl SymmetricIsometry {
    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `V^dagger x V`.
    pub fn restrict(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.matrix.adjoint() * x * &self.matrix
    }

    /// `V w V^dagger`.
    pub fn embed(&self, w: &ComplexMatrix) -> ComplexMatrix {
        &self.matrix * w * self.matrix.adjoint()
    }
}

pub fn symmetric_isometry(n: usize) -> Result<SymmetricIsometry> {
    symmetric_isometry_with_cap(n, DEFAULT_QUBIT_CAP)
}

pub fn symmetric_isometry_with_cap(n: usize, cap: usize) -> Result<SymmetricIsometry> {
    if n == 0 {
        return Err(Error::InvalidArgument("symmetric isometry needs n >= 1".into()));
    }
    if n > cap {
        return Err(Error::CapExceeded {
            what: "qubit count",
            cap,
            requested: n,
        });
    }
    let rows = 1usize << n;
    let mut matrix = ComplexMatrix::zeros(rows, n + 1);
    let norms: Vec<f64> = (0..=n).map(|w| binomial(n, w).sqrt().recip()).collect();
    for r in 0..rows {
        let w = r.count_ones() as usize;
        matrix[(r, w)] = c64(norms[w], 0.0);
    }
    Ok(SymmetricIsometry { n, matrix })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
