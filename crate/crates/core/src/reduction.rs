//! Two-qubit reduction of spin-`j` states.
//!
//! A spin-`j` state is a state of `2j` qubits supported on the symmetric
//! subspace. Every first and second moment of the spin operators is a linear
//! function of the two-qubit marginal `rho_j`, which lives on the symmetric
//! two-qubit subspace. Matrices on that subspace use the basis
//! `(|00>, (|01>+|10>)/sqrt2, |11>)`, where `|1>` is spin up: the highest
//! weight state `|j,j>` reduces to `|11><11|`.
//!
//! In the spin basis (`m = j, ..., -j`) index `i` corresponds to the Dicke
//! vector with `2j - i` excitations; [`spin_to_dicke`] converts between them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matcore::{
    c64, partial_transpose_b, symmetric_isometry, trace_product_complex, ComplexMatrix, HermitianMatrix,
    SymmetricIsometry, C64, PSD_TOL,
};
use crate::spinalg::{MomentMatrix, SpinNumber, MOMENT_TOL};

/// Residual above which the reconstruction system is declared inconsistent.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

/// Single-qubit spin operators in the basis `(|0>, |1>)` with `|1>` = spin up.
pub fn qubit_spin_operators() -> [ComplexMatrix; 3] {
    let z = c64(0.0, 0.0);
    let h = 0.5;
    [
        ComplexMatrix::from_row_slice(2, 2, &[z, c64(h, 0.0), c64(h, 0.0), z]),
        ComplexMatrix::from_row_slice(2, 2, &[z, c64(0.0, h), c64(0.0, -h), z]),
        ComplexMatrix::from_row_slice(2, 2, &[c64(-h, 0.0), z, z, c64(h, 0.0)]),
    ]
}

/// Reverses the basis order: spin basis `m = j..-j` <-> Dicke weight `0..2j`.
pub fn spin_to_dicke(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.nrows();
    ComplexMatrix::from_fn(n, m.ncols(), |i, k| m[(n - 1 - i, m.ncols() - 1 - k)])
}

/// Operators `Lambda(L_k)` and `Lambda(L_k L_l)` on the symmetric two-qubit space.
#[derive(Clone, Debug)]
pub struct ReductionOperators {
    pub j: SpinNumber,
    lam1: [HermitianMatrix; 3],
    lam2: [[ComplexMatrix; 3]; 3],
    iso: SymmetricIsometry,
}

impl ReductionOperators {
    pub fn new(j: SpinNumber) -> Result<Self> {
        if j.two_j() < 2 {
            return Err(Error::SpinTooSmall(
                "the two-qubit reduction needs j >= 1; use the first-moment test for j = 1/2",
            ));
        }
        let iso = symmetric_isometry(2)?;
        let s = qubit_spin_operators();
        let id = ComplexMatrix::identity(2, 2);
        let n = j.two_j() as f64;
        let lam1 = [0, 1, 2].map(|k| {
            let full = s[k].kronecker(&id) * c64(n, 0.0);
            HermitianMatrix::from_hermitian_part(&iso.restrict(&full))
        });
        let lam2 = [0, 1, 2].map(|k| {
            [0, 1, 2].map(|l| {
                let full = (&s[k] * &s[l]).kronecker(&id) * c64(n, 0.0)
                    + s[k].kronecker(&s[l]) * c64(n * (n - 1.0), 0.0);
                iso.restrict(&full)
            })
        });
        Ok(Self { j, lam1, lam2, iso })
    }

    /// `Lambda(L_k)`.
    pub fn lam1(&self, k: usize) -> &HermitianMatrix {
        &self.lam1[k]
    }

    /// `Lambda(L_k L_l)`.
    pub fn lam2(&self, k: usize, l: usize) -> &ComplexMatrix {
        &self.lam2[k][l]
    }

    pub fn isometry(&self) -> &SymmetricIsometry {
        &self.iso
    }

    /// Moments `tr(Lambda(L_k L_l) rho)` of a symmetric two-qubit operator.
    pub fn moments_of(&self, rho: &SymmetricTwoQubitState) -> Result<MomentMatrix> {
        let m = ComplexMatrix::from_fn(3, 3, |k, l| trace_product_complex(&self.lam2[k][l], rho.rho.matrix()));
        MomentMatrix::new(self.j, m)
    }
}

/// Trace-one Hermitian operator on the symmetric two-qubit subspace.
///
/// Positivity is not enforced: a reconstruction that fails it certifies a
/// non-quantum moment matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricTwoQubitState {
    pub rho: HermitianMatrix,
}

impl SymmetricTwoQubitState {
    pub fn new(rho: HermitianMatrix) -> Result<Self> {
        if rho.dim() != 3 {
            return Err(Error::DimensionMismatch {
                expected: "3x3".into(),
                found: format!("{0}x{0}", rho.dim()),
            });
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::NotAState(format!("trace {tr}")));
        }
        Ok(Self { rho })
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.rho.is_psd(tol)
    }

    /// `V rho V^dagger` on `C^2 (x) C^2`.
    pub fn embedded(&self) -> ComplexMatrix {
        let iso = symmetric_isometry(2).expect("n = 2 is within the cap");
        iso.embed(self.rho.matrix())
    }

    /// Bloch vector `u_k = tr(rho sigma_k (x) 1)`.
    pub fn bloch(&self) -> [f64; 3] {
        let s = qubit_spin_operators();
        let full = self.embedded();
        let id = ComplexMatrix::identity(2, 2);
        [0, 1, 2].map(|k| 2.0 * trace_product_complex(&s[k].kronecker(&id), &full).re)
    }

    /// Correlations `T_kl = tr(rho sigma_k (x) sigma_l)`.
    pub fn correlations(&self) -> [[f64; 3]; 3] {
        let s = qubit_spin_operators();
        let full = self.embedded();
        [0, 1, 2].map(|k| [0, 1, 2].map(|l| 4.0 * trace_product_complex(&s[k].kronecker(&s[l]), &full).re))
    }

    /// `v_n - u_n^2 + (1 - v_n)/(2j)` along the unit direction `n`.
    pub fn direction_minor(&self, n: [f64; 3], j: SpinNumber) -> f64 {
        let u = self.bloch();
        let t = self.correlations();
        let un: f64 = (0..3).map(|k| n[k] * u[k]).sum();
        let vn: f64 = (0..3).flat_map(|k| (0..3).map(move |l| (k, l))).map(|(k, l)| n[k] * t[k][l] * n[l]).sum();
        vn - un * un + (1.0 - vn) / j.two_j() as f64
    }
}

/// Hermitian basis of 3x3 matrices, orthonormal in Hilbert-Schmidt norm.
pub(crate) fn hermitian_basis3() -> Vec<ComplexMatrix> {
    let s = 0.5f64.sqrt();
    let mut out = Vec::with_capacity(9);
    for k in 0..3 {
        let mut e = ComplexMatrix::zeros(3, 3);
        e[(k, k)] = c64(1.0, 0.0);
        out.push(e);
    }
    for k in 0..3 {
        for l in (k + 1)..3 {
            let mut re = ComplexMatrix::zeros(3, 3);
            re[(k, l)] = c64(s, 0.0);
            re[(l, k)] = c64(s, 0.0);
            out.push(re);
            let mut im = ComplexMatrix::zeros(3, 3);
            im[(k, l)] = c64(0.0, s);
            im[(l, k)] = c64(0.0, -s);
            out.push(im);
        }
    }
    out
}

/// Solves `tr(Lambda(L_k L_l) rho) = M_kl`, `tr rho = 1` for `rho_j(M)`.
pub fn reconstruct_rho(m: &MomentMatrix, ops: &ReductionOperators) -> Result<SymmetricTwoQubitState> {
    if m.j() != ops.j {
        return Err(Error::InvalidArgument(format!(
            "moment matrix has j = {}, reduction operators j = {}",
            m.j(),
            ops.j
        )));
    }
    solve_rho(m.matrix(), ops)
}

/// Like [`reconstruct_rho`] for an unvalidated 3x3 matrix, naming the
/// violated constraint on failure.
pub fn reconstruct_rho_raw(m: &ComplexMatrix, ops: &ReductionOperators) -> Result<SymmetricTwoQubitState> {
    if m.nrows() != 3 || m.ncols() != 3 {
        return Err(Error::DimensionMismatch {
            expected: "3x3".into(),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    let j = ops.j;
    let tr: f64 = (0..3).map(|k| m[(k, k)].re).sum();
    if (tr - j.casimir()).abs() > MOMENT_TOL * j.casimir().max(1.0) {
        return Err(Error::CasimirViolated {
            expected: j.casimir(),
            found: tr,
        });
    }
    solve_rho(m, ops)
}

fn solve_rho(m: &ComplexMatrix, ops: &ReductionOperators) -> Result<SymmetricTwoQubitState> {
    let basis = hermitian_basis3();
    let scale = 1.0 / ops.j.casimir();
    // 1 trace row + 9 complex rows split into real and imaginary parts
    let rows = 19;
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    let mut b = DVector::<f64>::zeros(rows);
    for (q, h) in basis.iter().enumerate() {
        a[(0, q)] = h.trace().re;
    }
    b[0] = 1.0;
    let mut r = 1;
    for k in 0..3 {
        for l in 0..3 {
            for (q, h) in basis.iter().enumerate() {
                let t = trace_product_complex(ops.lam2(k, l), h) * scale;
                a[(r, q)] = t.re;
                a[(r + 1, q)] = t.im;
            }
            b[r] = m[(k, l)].re * scale;
            b[r + 1] = m[(k, l)].im * scale;
            r += 2;
        }
    }
    // the 19x9 system has full column rank: solve the normal equations
    let x = (a.transpose() * &a)
        .cholesky()
        .ok_or_else(|| Error::InconsistentMoments("singular reconstruction system".into()))?
        .solve(&(a.transpose() * &b));
    let residual = (&a * &x - &b).amax();
    if residual > RECONSTRUCTION_TOL {
        return Err(Error::InconsistentMoments(format!(
            "no two-qubit operator reproduces M (residual {residual:e})"
        )));
    }
    let mut rho = ComplexMatrix::zeros(3, 3);
    for (q, h) in basis.iter().enumerate() {
        rho += h * c64(x[q], 0.0);
    }
    let rho = HermitianMatrix::from_hermitian_part(&rho);
    let tr = rho.trace();
    Ok(SymmetricTwoQubitState {
        rho: rho.scale(1.0 / tr),
    })
}

/// Renormalized coordinates `u_k = <L_k>/j`,
/// `v_k = <L_k^2>/(j(j-1/2)) - 1/(2j-1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenormalizedCoords {
    pub u: [f64; 3],
    pub v: [f64; 3],
    pub j: SpinNumber,
}

impl RenormalizedCoords {
    pub fn new(j: SpinNumber, u: [f64; 3], v: [f64; 3]) -> Result<Self> {
        if j.two_j() < 2 {
            return Err(Error::SpinTooSmall("renormalized coordinates need j >= 1"));
        }
        let sum: f64 = v.iter().sum();
        if (sum - 1.0).abs() > MOMENT_TOL {
            return Err(Error::CoordinateSum { sum });
        }
        Ok(Self { u, v, j })
    }
}

pub fn renormalized_coords(m: &MomentMatrix) -> Result<RenormalizedCoords> {
    let j = m.j();
    if j.two_j() < 2 {
        return Err(Error::SpinTooSmall("renormalized coordinates need j >= 1"));
    }
    let jj = j.j();
    let l = m.first_moments();
    let norm = jj * (jj - 0.5);
    let shift = 1.0 / (j.two_j() as f64 - 1.0);
    Ok(RenormalizedCoords {
        u: l.map(|x| x / jj),
        v: [0, 1, 2].map(|k| m.entry(k, k).re / norm - shift),
        j,
    })
}

/// Inverse of [`renormalized_coords`] with zero real off-diagonal moments.
pub fn moments_from_coords(c: &RenormalizedCoords) -> Result<MomentMatrix> {
    moments_from_coords_with_offdiag(c, [0.0; 3])
}

/// Inverse of [`renormalized_coords`] with real off-diagonal moments
/// `[Re M12, Re M13, Re M23]`.
pub fn moments_from_coords_with_offdiag(c: &RenormalizedCoords, offdiag: [f64; 3]) -> Result<MomentMatrix> {
    let c = RenormalizedCoords::new(c.j, c.u, c.v)?;
    let jj = c.j.j();
    let norm = jj * (jj - 0.5);
    let mut re = nalgebra::Matrix3::zeros();
    for k in 0..3 {
        re[(k, k)] = norm * c.v[k] + jj / 2.0;
    }
    for (idx, (k, l)) in [(0, 1), (0, 2), (1, 2)].into_iter().enumerate() {
        re[(k, l)] = offdiag[idx];
        re[(l, k)] = offdiag[idx];
    }
    MomentMatrix::from_parts(c.j, &re, c.u.map(|x| x * jj))
}

/// Reduced expectation value matrix of order `j`: the 4x4 matrix
/// `tr(Lambda(F_k^dagger F_l) rho)` with `F = {1, L1/j, L2/j, L3/j}`.
#[derive(Clone, Debug)]
pub struct ReducedEVM {
    pub tau: HermitianMatrix,
}

pub fn tau(rho: &SymmetricTwoQubitState, ops: &ReductionOperators) -> ReducedEVM {
    let jj = ops.j.j();
    let r = rho.rho.matrix();
    let mut t = ComplexMatrix::zeros(4, 4);
    t[(0, 0)] = c64(rho.rho.trace(), 0.0);
    for k in 0..3 {
        let first = trace_product_complex(ops.lam1(k).matrix(), r) / jj;
        t[(0, k + 1)] = first;
        t[(k + 1, 0)] = first.conj();
        for l in 0..3 {
            t[(k + 1, l + 1)] = trace_product_complex(ops.lam2(k, l), r) / (jj * jj);
        }
    }
    ReducedEVM {
        tau: HermitianMatrix::from_hermitian_part(&t),
    }
}

/// Separability of a symmetric two-qubit state: `rho >= 0` and `rho^Gamma >= 0`.
pub fn ppt_inner_test(rho: &SymmetricTwoQubitState) -> bool {
    ppt_inner_test_with_tol(rho, PSD_TOL)
}

pub fn ppt_inner_test_with_tol(rho: &SymmetricTwoQubitState, tol: f64) -> bool {
    if !rho.is_psd(tol) {
        return false;
    }
    let gamma = partial_transpose_b(&rho.embedded()).expect("embedded state is 4x4");
    HermitianMatrix::from_hermitian_part(&gamma).is_psd(tol)
}

/// `omega -> V2^dagger tr_{3..2j}(V omega V^dagger) V2` for `omega` on the
/// symmetric subspace of `2j` qubits, in Dicke coordinates.
#[derive(Clone, Debug)]
pub struct BoseMarginal {
    pub j: SpinNumber,
    /// `blocks[a * d + b]` is the image of `|a><b|`.
    blocks: Vec<ComplexMatrix>,
}

impl BoseMarginal {
    pub fn new(j: SpinNumber) -> Result<Self> {
        let n = j.two_j() as usize;
        if n < 2 {
            return Err(Error::SpinTooSmall("the two-qubit marginal needs j >= 1"));
        }
        let big = symmetric_isometry(n)?;
        let small = symmetric_isometry(2)?;
        let d = n + 1;
        let rest = 1usize << (n - 2);
        // column a reshaped to 4 x 2^(n-2): leading two qubits are the row
        let reshaped: Vec<ComplexMatrix> = (0..d)
            .map(|a| ComplexMatrix::from_fn(4, rest, |i, r| big.matrix()[(i * rest + r, a)]))
            .collect();
        let mut blocks = Vec::with_capacity(d * d);
        for a in 0..d {
            for b in 0..d {
                let pt = &reshaped[a] * reshaped[b].adjoint();
                blocks.push(small.restrict(&pt));
            }
        }
        Ok(Self { j, blocks })
    }

    pub fn dim(&self) -> usize {
        self.j.dim()
    }

    pub fn block(&self, a: usize, b: usize) -> &ComplexMatrix {
        &self.blocks[a * self.dim() + b]
    }

    /// The two-qubit marginal of `omega` (Dicke coordinates).
    pub fn apply(&self, omega: &ComplexMatrix) -> ComplexMatrix {
        let d = self.dim();
        let mut out = ComplexMatrix::zeros(3, 3);
        for a in 0..d {
            for b in 0..d {
                let w = omega[(a, b)];
                if w != C64::new(0.0, 0.0) {
                    out += self.block(a, b) * w;
                }
            }
        }
        out
    }

    /// The operator `C` with `tr(C omega) = tr(h apply(omega))` for all `omega`.
    pub fn pullback(&self, h: &ComplexMatrix) -> HermitianMatrix {
        let d = self.dim();
        let c = ComplexMatrix::from_fn(d, d, |b, a| trace_product_complex(h, self.block(a, b)));
        HermitianMatrix::from_hermitian_part(&c)
    }
}
