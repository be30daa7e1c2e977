//! Dense semidefinite programming over the complex Hermitian cone.
//!
//! Problems are in standard form
//!
//! ```text
//!   minimize <C, X>  subject to  <A_i, X> = b_i,  X >= 0
//!   maximize b^T y   subject to  Z = C - sum_i y_i A_i >= 0
//! ```
//!
//! with `<A, B> = Re tr(A B)`. [`solve`] preprocesses the constraints with
//! [`orthonormalize`] and runs an infeasible-start primal-dual interior point
//! method. [`phase1_min_t`] is the feasibility contract used by the decision
//! procedures: it minimizes `t` subject to `X + t I >= 0` and the equality
//! constraints, starting from a strictly feasible primal-dual pair so that
//! every iterate brackets the optimum.

mod ortho;
mod solver;

use crate::error::{Error, Result};
use crate::matcore::{c64, ComplexMatrix, HermitianMatrix};

pub use ortho::{orthonormalize, OrthonormalBasis};
use solver::{default_start, interior_point, Iterate};

/// Solver configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpOptions {
    pub max_iterations: usize,
    /// Target for the relative residuals and the absolute duality gap.
    pub tolerance: f64,
    /// Fraction of the step to the cone boundary.
    pub step_fraction: f64,
    /// Largest accepted cone dimension.
    pub max_dim: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-8,
            step_fraction: 0.98,
            max_dim: 64,
        }
    }
}

/// An SDP in standard form.
#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub dim: usize,
    pub objective: HermitianMatrix,
    pub constraints: Vec<(HermitianMatrix, f64)>,
}

impl SdpProblem {
    pub fn new(objective: HermitianMatrix, constraints: Vec<(HermitianMatrix, f64)>) -> Result<Self> {
        let dim = objective.dim();
        for (a, b) in &constraints {
            if a.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: format!("{dim}x{dim}"),
                    found: format!("{0}x{0}", a.dim()),
                });
            }
            if !b.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self {
            dim,
            objective,
            constraints,
        })
    }

    /// `b - A(X)`.
    pub fn primal_residual(&self, x: &HermitianMatrix) -> Vec<f64> {
        self.constraints.iter().map(|(a, b)| b - a.inner_product(x)).collect()
    }

    /// `C - sum_i y_i A_i`.
    pub fn dual_slack(&self, y: &[f64]) -> HermitianMatrix {
        let mut z = self.objective.clone();
        for ((a, _), &yi) in self.constraints.iter().zip(y) {
            z = z.add_scaled(a, -yi);
        }
        z
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    /// `y` is a ray with `b^T y = 1` and `Z = -sum y_i A_i >= 0`.
    PrimalInfeasible,
    /// `X` is a ray with `<C, X> = -1`, `A(X) = 0`, `X >= 0`.
    DualInfeasible,
    NumericalFailure,
}

/// Per-iteration diagnostics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationRecord {
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub mu: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub x: HermitianMatrix,
    pub y: Vec<f64>,
    pub z: HermitianMatrix,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    /// `||b - A(X)|| / (1 + ||b||)` at the last iterate.
    pub primal_residual: f64,
    /// `||C - A^*(y) - Z|| / (1 + ||C||)` at the last iterate.
    pub dual_residual: f64,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub message: Option<String>,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

fn check_dim(dim: usize, opts: &SdpOptions) -> Result<()> {
    if dim > opts.max_dim {
        return Err(Error::CapExceeded {
            what: "SDP dimension",
            cap: opts.max_dim,
            requested: dim,
        });
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("SDP dimension must be positive".into()));
    }
    Ok(())
}

pub fn solve(p: &SdpProblem) -> Result<SdpSolution> {
    solve_with(p, &SdpOptions::default())
}

/// Solves `p` after orthonormalizing its constraints; `y` is reported for
/// the original constraints.
pub fn solve_with(p: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    check_dim(p.dim, opts)?;
    let ops: Vec<HermitianMatrix> = p.constraints.iter().map(|(a, _)| a.clone()).collect();
    let values: Vec<f64> = p.constraints.iter().map(|(_, b)| *b).collect();
    let (basis, bad) = ortho::gram_schmidt(&ops, &values)?;
    if let Some(bad) = bad {
        // sum_k w_k A_k = 0 with sum_k w_k b_k != 0 is a primal infeasibility ray
        let s = 1.0 / bad.mismatch;
        let y: Vec<f64> = bad.combination.iter().map(|w| w * s).collect();
        let z = p.dual_slack(&y).add_scaled(&p.objective, -1.0);
        return Ok(SdpSolution {
            status: SdpStatus::PrimalInfeasible,
            x: HermitianMatrix::zeros(p.dim),
            y,
            z,
            primal_objective: f64::NAN,
            dual_objective: f64::NAN,
            gap: f64::NAN,
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
            iterations: 0,
            history: Vec::new(),
            message: Some(format!("inconsistent linear constraints (mismatch {:e})", bad.mismatch)),
        });
    }
    let c = p.objective.matrix().clone();
    let a: Vec<ComplexMatrix> = basis.ops.iter().map(|s| s.matrix().clone()).collect();
    let start = default_start(&c, &a, &basis.values);
    let mut sol = interior_point(&c, &a, &basis.values, start, opts);
    sol.y = basis.to_original(&sol.y);
    Ok(sol)
}

/// Starting point for [`solve_with_start`].
#[derive(Clone, Debug)]
pub struct StartingPoint {
    pub x: HermitianMatrix,
    pub y: Vec<f64>,
    pub z: HermitianMatrix,
}

/// Runs the interior point method from `start` without preprocessing; the
/// constraint operators must be linearly independent and `start.x`,
/// `start.z` positive definite.
pub fn solve_with_start(p: &SdpProblem, start: StartingPoint, opts: &SdpOptions) -> Result<SdpSolution> {
    check_dim(p.dim, opts)?;
    if start.x.dim() != p.dim || start.z.dim() != p.dim || start.y.len() != p.constraints.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("starting point for dim {} with {} constraints", p.dim, p.constraints.len()),
            found: format!("dim {}/{} with {} multipliers", start.x.dim(), start.z.dim(), start.y.len()),
        });
    }
    let c = p.objective.matrix().clone();
    let a: Vec<ComplexMatrix> = p.constraints.iter().map(|(a, _)| a.matrix().clone()).collect();
    let b: Vec<f64> = p.constraints.iter().map(|(_, b)| *b).collect();
    let it = Iterate {
        x: start.x.into_matrix(),
        y: start.y,
        z: start.z.into_matrix(),
    };
    Ok(interior_point(&c, &a, &b, it, opts))
}

/// Outcome of [`phase1_min_t`].
#[derive(Clone, Debug)]
pub struct Phase1Result {
    /// Best estimate of `min t`; the primal bound when converged.
    pub t_star: f64,
    /// Certified bounds `t_lower <= min t <= t_upper`.
    pub t_lower: f64,
    pub t_upper: f64,
    /// `Y - t_upper I`: satisfies the equality constraints, and is PSD
    /// whenever `t_upper <= 0`.
    pub x: HermitianMatrix,
    /// Dual matrix `Z = I/n - sum_i y_i S_i`, trace one and PSD.
    pub z: HermitianMatrix,
    /// Orthonormalized constraints, `basis.ops[0] = I/sqrt(n)`.
    pub basis: OrthonormalBasis,
    pub solution: SdpSolution,
}

impl Phase1Result {
    pub fn converged(&self) -> bool {
        self.solution.is_optimal()
    }

    /// Coordinates `z_i = tr(Z S_i)` of the dual matrix.
    pub fn dual_coordinates(&self) -> Vec<f64> {
        self.basis.coordinates(&self.z)
    }
}

pub fn phase1_min_t(ops: &[HermitianMatrix], values: &[f64], dim: usize) -> Result<Phase1Result> {
    phase1_min_t_with(ops, values, dim, &SdpOptions::default())
}

/// Minimizes `t` subject to `X + t I >= 0`, `tr X = 1` and
/// `tr(A_k X) = b_k`.
///
/// The trace normalization is always imposed (an identity in `ops` must carry
/// the value 1). With `Y = X + t I` the problem becomes
/// `min <I/n, Y>` subject to `<S_i, Y> = t_i` for the traceless orthonormal
/// operators `S_i`, so `t = <I/n, Y> - 1/n`. The run starts from
/// `Y = rho_fix + s I` (`rho_fix = I/n + sum t_i S_i`), `y = 0`, `Z = I/n`,
/// which are strictly feasible; the primal and dual objectives therefore
/// bound the optimum at every iterate.
pub fn phase1_min_t_with(
    ops: &[HermitianMatrix],
    values: &[f64],
    dim: usize,
    opts: &SdpOptions,
) -> Result<Phase1Result> {
    check_dim(dim, opts)?;
    let mut all_ops = Vec::with_capacity(ops.len() + 1);
    all_ops.push(HermitianMatrix::identity(dim));
    all_ops.extend(ops.iter().cloned());
    let mut all_values = Vec::with_capacity(values.len() + 1);
    all_values.push(1.0);
    all_values.extend_from_slice(values);
    let basis = orthonormalize(&all_ops, &all_values)?;

    let n = dim as f64;
    let mut rho_fix = HermitianMatrix::identity(dim).scale(1.0 / n);
    for (s, &t) in basis.ops.iter().zip(&basis.values).skip(1) {
        rho_fix = rho_fix.add_scaled(s, t);
    }
    let shift = (-rho_fix.min_eigenvalue()).max(0.0) + 1.0 / n;
    let y0 = rho_fix.add_scaled(&HermitianMatrix::identity(dim), shift);
    let objective = HermitianMatrix::identity(dim).scale(1.0 / n);
    let constraints: Vec<(HermitianMatrix, f64)> = basis
        .ops
        .iter()
        .cloned()
        .zip(basis.values.iter().copied())
        .skip(1)
        .collect();
    let problem = SdpProblem::new(objective.clone(), constraints)?;
    let start = StartingPoint {
        x: y0,
        y: vec![0.0; problem.constraints.len()],
        z: objective,
    };
    let solution = solve_with_start(&problem, start, opts)?;
    let t_upper = solution.primal_objective - 1.0 / n;
    let t_lower = solution.dual_objective - 1.0 / n;
    let x = solution.x.add_scaled(&HermitianMatrix::identity(dim), -t_upper);
    let z = solution.z.clone();
    Ok(Phase1Result {
        t_star: t_upper,
        t_lower,
        t_upper,
        x,
        z,
        basis,
        solution,
    })
}

/// `sum_i y_i A_i` for a list of operators.
pub fn combine(ops: &[HermitianMatrix], y: &[f64]) -> HermitianMatrix {
    let n = ops.first().map_or(0, HermitianMatrix::dim);
    let mut out = ComplexMatrix::zeros(n, n);
    for (a, &yi) in ops.iter().zip(y) {
        out += a.matrix() * c64(yi, 0.0);
    }
    HermitianMatrix::from_hermitian_part(&out)
}
