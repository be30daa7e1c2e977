//! Seeded samplers for states, rotations and directions.

use nalgebra::{Matrix3, UnitQuaternion};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::matcore::{c64, ComplexMatrix, HermitianMatrix, C64};

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Haar-random unit vector in `C^dim`.
pub fn random_pure_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| c64(normal(rng), normal(rng))).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Density operator from the Hilbert-Schmidt (Ginibre) ensemble.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianMatrix {
    random_state_with_rank(dim, dim, rng)
}

/// `G G^dagger / tr` with `G` a `dim x rank` Ginibre matrix.
pub fn random_state_with_rank<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> HermitianMatrix {
    let g = ComplexMatrix::from_fn(dim, rank, |_, _| c64(normal(rng), normal(rng)));
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    HermitianMatrix::from_hermitian_part(&(rho / c64(tr, 0.0)))
}

/// Separable symmetric two-qubit state: a random mixture of `k` product
/// states `|a><a| (x) |a><a|`, in the basis `(|00>, (|01>+|10>)/sqrt2, |11>)`.
pub fn random_separable_symmetric<R: Rng + ?Sized>(k: usize, rng: &mut R) -> HermitianMatrix {
    let mut out = ComplexMatrix::zeros(3, 3);
    let weights: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in weights {
        let a = random_pure_vector(2, rng);
        let v = [a[0] * a[0], a[0] * a[1] * c64(2f64.sqrt(), 0.0), a[1] * a[1]];
        out += ComplexMatrix::from_fn(3, 3, |i, l| v[i] * v[l].conj() * (w / total));
    }
    HermitianMatrix::from_hermitian_part(&out)
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v = [normal(rng), normal(rng), normal(rng)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Uniformly random rotation in SO(3).
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    let q = nalgebra::Quaternion::new(normal(rng), normal(rng), normal(rng), normal(rng));
    *UnitQuaternion::from_quaternion(q).to_rotation_matrix().matrix()
}
