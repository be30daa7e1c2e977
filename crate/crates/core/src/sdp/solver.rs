//! Primal-dual interior point method over the complex Hermitian cone.
//!
//! Search directions are the HKM direction: the complementarity equation
//! `XZ = sigma mu I` is linearized as `dX = (R_c - X dZ) Z^-1` and then
//! symmetrized. The Schur complement `M_ij = Re tr(A_i X A_j Z^-1)` is real
//! symmetric positive definite for independent constraints. Each iteration
//! takes a Mehrotra predictor step (`sigma = 0`) followed by a corrector with
//! `sigma = (mu_aff / mu)^3` and the second-order term `dX_aff dZ_aff`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{IterationRecord, SdpOptions, SdpSolution, SdpStatus};
use crate::matcore::{c64, trace_product, ComplexMatrix, HermitianMatrix, C64};

pub(crate) struct Iterate {
    pub x: ComplexMatrix,
    pub y: Vec<f64>,
    pub z: ComplexMatrix,
}

fn frob(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn herm(m: &ComplexMatrix) -> ComplexMatrix {
    crate::matcore::hermitian_part(m)
}

/// `A(W)_i = Re tr(A_i W)`.
fn apply_a(a: &[ComplexMatrix], w: &ComplexMatrix) -> Vec<f64> {
    a.iter().map(|ai| trace_product(ai, w)).collect()
}

/// `A^*(y) = sum_i y_i A_i`.
fn apply_at(a: &[ComplexMatrix], y: &[f64], n: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(n, n);
    for (ai, &yi) in a.iter().zip(y) {
        out += ai * c64(yi, 0.0);
    }
    out
}

/// Largest `alpha <= 1` keeping `m + alpha dm` inside the cone, scaled by `fraction`.
fn max_step(chol: &Cholesky<C64, Dyn>, dm: &ComplexMatrix, fraction: f64) -> f64 {
    let l = chol.l();
    let left = match l.solve_lower_triangular(dm) {
        Some(v) => v,
        None => return 0.0,
    };
    let w = match l.solve_lower_triangular(&left.adjoint()) {
        Some(v) => v,
        None => return 0.0,
    };
    let lam = HermitianMatrix::from_hermitian_part(&w).min_eigenvalue();
    if lam >= 0.0 {
        1.0
    } else {
        (fraction / -lam).min(1.0)
    }
}

struct Direction {
    dx: ComplexMatrix,
    dy: Vec<f64>,
    dz: ComplexMatrix,
}

struct Newton<'a> {
    a: &'a [ComplexMatrix],
    n: usize,
    x: &'a ComplexMatrix,
    z_inv: ComplexMatrix,
    schur: SchurFactor,
}

enum SchurFactor {
    Chol(Cholesky<f64, Dyn>),
    Lu(nalgebra::LU<f64, Dyn, Dyn>),
    Empty,
}

impl<'a> Newton<'a> {
    fn new(a: &'a [ComplexMatrix], x: &'a ComplexMatrix, z_inv: ComplexMatrix) -> Option<Self> {
        let n = x.nrows();
        let m = a.len();
        let schur = if m == 0 {
            SchurFactor::Empty
        } else {
            let g: Vec<ComplexMatrix> = a.iter().map(|aj| x * aj * &z_inv).collect();
            let mut s = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                for j in i..m {
                    let v = trace_product(&a[i], &g[j]);
                    s[(i, j)] = v;
                    s[(j, i)] = v;
                }
            }
            match Cholesky::new(s.clone()) {
                Some(c) => SchurFactor::Chol(c),
                None => {
                    let lu = s.lu();
                    if !lu.is_invertible() {
                        return None;
                    }
                    SchurFactor::Lu(lu)
                }
            }
        };
        Some(Self { a, n, x, z_inv, schur })
    }

    fn solve_schur(&self, h: Vec<f64>) -> Option<Vec<f64>> {
        let h = DVector::from_vec(h);
        let dy = match &self.schur {
            SchurFactor::Chol(c) => c.solve(&h),
            SchurFactor::Lu(lu) => lu.solve(&h)?,
            SchurFactor::Empty => return Some(Vec::new()),
        };
        Some(dy.iter().copied().collect())
    }

    /// Direction for `A(dX) = rp`, `A^*(dy) + dZ = rd`, `X dZ + dX Z = rc`.
    fn direction(&self, rp: &[f64], rd: &ComplexMatrix, rc: &ComplexMatrix) -> Option<Direction> {
        let base = (rc - self.x * rd) * &self.z_inv;
        let ab = apply_a(self.a, &base);
        let h: Vec<f64> = rp.iter().zip(&ab).map(|(p, q)| p - q).collect();
        let dy = self.solve_schur(h)?;
        let dz = rd - apply_at(self.a, &dy, self.n);
        let dx = herm(&((rc - self.x * &dz) * &self.z_inv));
        Some(Direction { dx, dy, dz })
    }
}

pub(crate) fn interior_point(
    c: &ComplexMatrix,
    a: &[ComplexMatrix],
    b: &[f64],
    start: Iterate,
    opts: &SdpOptions,
) -> SdpSolution {
    let n = c.nrows();
    let nf = n as f64;
    let Iterate { mut x, mut y, mut z } = start;
    let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let norm_c = frob(c);
    let mut history = Vec::new();
    let tol = opts.tolerance;

    let finish = |status: SdpStatus,
                  x: ComplexMatrix,
                  y: Vec<f64>,
                  z: ComplexMatrix,
                  history: Vec<IterationRecord>,
                  message: Option<String>| {
        let last = history.last().cloned().unwrap_or_default();
        SdpSolution {
            status,
            x: HermitianMatrix::from_hermitian_part(&x),
            y,
            z: HermitianMatrix::from_hermitian_part(&z),
            primal_objective: last.primal_objective,
            dual_objective: last.dual_objective,
            gap: (last.primal_objective - last.dual_objective).abs(),
            primal_residual: last.primal_residual,
            dual_residual: last.dual_residual,
            iterations: history.len().saturating_sub(1),
            history,
            message,
        }
    };

    for iter in 0..=opts.max_iterations {
        let ax = apply_a(a, &x);
        let rp: Vec<f64> = b.iter().zip(&ax).map(|(bi, v)| bi - v).collect();
        let aty = apply_at(a, &y, n);
        let rd = herm(&(c - &aty - &z));
        let pobj = trace_product(c, &x);
        let dobj: f64 = b.iter().zip(&y).map(|(bi, yi)| bi * yi).sum();
        let xz = trace_product(&x, &z);
        let mu = xz / nf;
        let pinf = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + norm_b);
        let dinf = frob(&rd) / (1.0 + norm_c);
        let mut record = IterationRecord {
            primal_objective: pobj,
            dual_objective: dobj,
            primal_residual: pinf,
            dual_residual: dinf,
            mu,
            step_primal: 0.0,
            step_dual: 0.0,
        };

        let gap = (pobj - dobj).abs();
        // absolute gap target, floored at rounding level for large objectives
        let gap_tol = tol.max(64.0 * f64::EPSILON * pobj.abs());
        if pinf <= tol && dinf <= tol && gap <= gap_tol && xz <= gap_tol {
            history.push(record);
            return finish(SdpStatus::Optimal, x, y, z, history, None);
        }
        // primal infeasibility: (y, Z) / b^T y approaches a ray with A^*(y) + Z = 0
        if dobj > 0.0 && frob(&(&aty + &z)) / dobj <= tol {
            history.push(record);
            let s = 1.0 / dobj;
            let yr = y.iter().map(|v| v * s).collect();
            let zr = &z * c64(s, 0.0);
            return finish(SdpStatus::PrimalInfeasible, x, yr, zr, history, None);
        }
        // dual infeasibility: X / (-<C, X>) approaches a ray with A(X) = 0
        if pobj < 0.0 && ax.iter().map(|v| v * v).sum::<f64>().sqrt() / -pobj <= tol {
            history.push(record);
            let s = 1.0 / -pobj;
            let xr = &x * c64(s, 0.0);
            return finish(SdpStatus::DualInfeasible, xr, y, z, history, None);
        }
        if iter == opts.max_iterations {
            history.push(record);
            let msg = format!("iteration limit reached (gap {gap:e}, primal {pinf:e}, dual {dinf:e})");
            return finish(SdpStatus::NumericalFailure, x, y, z, history, Some(msg));
        }

        let chol_x = Cholesky::new(x.clone());
        let chol_z = Cholesky::new(z.clone());
        let (chol_x, chol_z) = match (chol_x, chol_z) {
            (Some(cx), Some(cz)) => (cx, cz),
            _ => {
                history.push(record);
                let msg = "iterate left the cone".to_string();
                return finish(SdpStatus::NumericalFailure, x, y, z, history, Some(msg));
            }
        };
        let z_inv = chol_z.inverse();
        let newton = match Newton::new(a, &x, z_inv) {
            Some(nw) => nw,
            None => {
                history.push(record);
                let msg = "singular Schur complement".to_string();
                return finish(SdpStatus::NumericalFailure, x, y, z, history, Some(msg));
            }
        };
        let xzm = &x * &z;
        let predictor = newton.direction(&rp, &rd, &(-&xzm));
        let pred = match predictor {
            Some(d) => d,
            None => {
                history.push(record);
                let msg = "Schur solve failed".to_string();
                return finish(SdpStatus::NumericalFailure, x, y, z, history, Some(msg));
            }
        };
        let ap = max_step(&chol_x, &pred.dx, 1.0);
        let ad = max_step(&chol_z, &pred.dz, 1.0);
        let x_aff = &x + &pred.dx * c64(ap, 0.0);
        let z_aff = &z + &pred.dz * c64(ad, 0.0);
        let mu_aff = trace_product(&x_aff, &z_aff) / nf;
        let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };
        let mut rc = ComplexMatrix::identity(n, n) * c64(sigma * mu, 0.0) - &xzm - &pred.dx * &pred.dz;
        rc = rc.map(|v| if v.re.is_finite() && v.im.is_finite() { v } else { C64::new(0.0, 0.0) });
        let corr = match newton.direction(&rp, &rd, &rc) {
            Some(d) => d,
            None => {
                history.push(record);
                let msg = "Schur solve failed".to_string();
                return finish(SdpStatus::NumericalFailure, x, y, z, history, Some(msg));
            }
        };
        let ap = max_step(&chol_x, &corr.dx, opts.step_fraction);
        let ad = max_step(&chol_z, &corr.dz, opts.step_fraction);
        record.step_primal = ap;
        record.step_dual = ad;
        history.push(record);

        x = herm(&(&x + &corr.dx * c64(ap, 0.0)));
        z = herm(&(&z + &corr.dz * c64(ad, 0.0)));
        for (yi, dyi) in y.iter_mut().zip(&corr.dy) {
            *yi += ad * dyi;
        }
    }
    unreachable!("the loop returns on its last iteration")
}

/// Default starting point `X = xi I`, `y = 0`, `Z = eta I` with scales taken
/// from the problem data.
pub(crate) fn default_start(c: &ComplexMatrix, a: &[ComplexMatrix], b: &[f64]) -> Iterate {
    let n = c.nrows();
    let sqrt_n = (n as f64).sqrt();
    let mut xi = sqrt_n.max(1.0);
    let mut eta = sqrt_n.max(1.0);
    for (ai, bi) in a.iter().zip(b) {
        let na = frob(ai);
        xi = xi.max(sqrt_n * (1.0 + bi.abs()) / (1.0 + na));
        eta = eta.max((1.0 + na) / sqrt_n);
    }
    eta = eta.max((1.0 + frob(c)) / sqrt_n);
    Iterate {
        x: ComplexMatrix::identity(n, n) * c64(xi, 0.0),
        y: vec![0.0; a.len()],
        z: ComplexMatrix::identity(n, n) * c64(eta, 0.0),
    }
}
