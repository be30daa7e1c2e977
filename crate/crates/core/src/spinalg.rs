//! Spin operators for total spin `j`, moment matrices and their standard form.
//!
//! Convention: the basis of `C^{2j+1}` is `|j,m>` ordered `m = j, j-1, ..., -j`,
//! so `L3 = diag(j, ..., -j)`, and `L1, L2` come from the ladder operators with
//! `<m+1|L+|m> = sqrt(j(j+1) - m(m+1))`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::matcore::{c64, hermitian_eig, max_abs_diff, ComplexMatrix, HermitianMatrix, C64, PSD_TOL};

/// Relative tolerance on the Casimir trace and on Hermiticity of `M`.
pub const MOMENT_TOL: f64 = 1e-9;

/// Total spin `j = two_j / 2`, stored as the integer `two_j >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinNumber {
    two_j: u32,
}

impl SpinNumber {
    pub fn new(two_j: u32) -> Result<Self> {
        if two_j == 0 {
            return Err(Error::InvalidSpin("two_j must be at least 1".into()));
        }
        Ok(Self { two_j })
    }

    pub fn two_j(self) -> u32 {
        self.two_j
    }

    pub fn j(self) -> f64 {
        self.two_j as f64 / 2.0
    }

    /// Hilbert space dimension `2j + 1`.
    pub fn dim(self) -> usize {
        self.two_j as usize + 1
    }

    /// `j (j + 1)`.
    pub fn casimir(self) -> f64 {
        let j = self.j();
        j * (j + 1.0)
    }
}

impl fmt::Display for SpinNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.two_j % 2 == 0 {
            write!(f, "{}", self.two_j / 2)
        } else {
            write!(f, "{}/2", self.two_j)
        }
    }
}

impl FromStr for SpinNumber {
    type Err = Error;

    /// Accepts `"5"`, `"5/2"` or `"2.5"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidSpin(format!("cannot parse spin number {s:?}"));
        if let Some((num, den)) = s.split_once('/') {
            let num: u32 = num.trim().parse().map_err(|_| bad())?;
            match den.trim() {
                "2" => Self::new(num),
                "1" => Self::new(2 * num),
                _ => Err(bad()),
            }
        } else {
            let x: f64 = s.parse().map_err(|_| bad())?;
            let two = 2.0 * x;
            if !two.is_finite() || two < 0.0 || (two - two.round()).abs() > 1e-12 {
                return Err(bad());
            }
            Self::new(two.round() as u32)
        }
    }
}

/// The three spin operators `L1, L2, L3` of spin `j`.
#[derive(Clone, Debug)]
pub struct SpinOperatorTriple {
    pub j: SpinNumber,
    ops: [HermitianMatrix; 3],
}

impl SpinOperatorTriple {
    /// Wraps arbitrary operators (used to probe [`validate_algebra`]).
    pub fn from_operators(j: SpinNumber, ops: [HermitianMatrix; 3]) -> Result<Self> {
        for op in &ops {
            if op.dim() != j.dim() {
                return Err(Error::DimensionMismatch {
                    expected: format!("{}", j.dim()),
                    found: format!("{}", op.dim()),
                });
            }
        }
        Ok(Self { j, ops })
    }

    /// `L_k` for `k` in `0..3`.
    pub fn op(&self, k: usize) -> &HermitianMatrix {
        &self.ops[k]
    }

    pub fn ops(&self) -> &[HermitianMatrix; 3] {
        &self.ops
    }

    /// `n . L` for a real 3-vector `n`.
    pub fn along(&self, n: [f64; 3]) -> HermitianMatrix {
        self.ops[0]
            .scale(n[0])
            .add_scaled(&self.ops[1], n[1])
            .add_scaled(&self.ops[2], n[2])
    }

    /// Symmetrized products `(L_k L_l + L_l L_k) / 2`.
    pub fn symmetrized_product(&self, k: usize, l: usize) -> HermitianMatrix {
        let a = self.ops[k].matrix();
        let b = self.ops[l].matrix();
        HermitianMatrix::from_hermitian_part(&((a * b + b * a) * c64(0.5, 0.0)))
    }
}

pub fn spin_operators(j: SpinNumber) -> SpinOperatorTriple {
    let d = j.dim();
    let jj = j.j();
    let mut lp = ComplexMatrix::zeros(d, d);
    let mut l3 = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        let m = jj - i as f64;
        l3[(i, i)] = c64(m, 0.0);
        if i > 0 {
            // <m+1| L+ |m>, with |m+1> at index i-1
            lp[(i - 1, i)] = c64((jj * (jj + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
    }
    let lm = lp.adjoint();
    let l1 = (&lp + &lm) * c64(0.5, 0.0);
    let l2 = (&lp - &lm) * c64(0.0, -0.5);
    SpinOperatorTriple {
        j,
        ops: [
            HermitianMatrix::from_hermitian_part(&l1),
            HermitianMatrix::from_hermitian_part(&l2),
            HermitianMatrix::from_hermitian_part(&l3),
        ],
    }
}

/// Levi-Civita symbol on `{0, 1, 2}`.
pub fn levi_civita(k: usize, l: usize, m: usize) -> f64 {
    match (k, l, m) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Max-norm residuals of the commutation relations and the Casimir identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlgebraReport {
    pub commutator_residual: f64,
    pub casimir_residual: f64,
}

pub fn validate_algebra(t: &SpinOperatorTriple) -> AlgebraReport {
    let d = t.j.dim();
    let mut commutator_residual = 0.0f64;
    for k in 0..3 {
        for l in 0..3 {
            let a = t.ops[k].matrix();
            let b = t.ops[l].matrix();
            let comm = a * b - b * a;
            let mut rhs = ComplexMatrix::zeros(d, d);
            for m in 0..3 {
                let e = levi_civita(k, l, m);
                if e != 0.0 {
                    rhs += t.ops[m].matrix() * c64(0.0, e);
                }
            }
            commutator_residual = commutator_residual.max(max_abs_diff(&comm, &rhs));
        }
    }
    let mut cas = ComplexMatrix::zeros(d, d);
    for op in &t.ops {
        cas += op.matrix() * op.matrix();
    }
    let target = ComplexMatrix::identity(d, d) * c64(t.j.casimir(), 0.0);
    AlgebraReport {
        commutator_residual,
        casimir_residual: max_abs_diff(&cas, &target),
    }
}

/// Second moments `M_kl = tr(L_k L_l rho)` of spin `j`, with the first moments
/// `l_m = tr(L_m rho)` encoded in the antisymmetric imaginary part
/// `Im M_kl = eps_klm l_m / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentMatrix {
    j: SpinNumber,
    m: ComplexMatrix,
    first: [f64; 3],
}

impl MomentMatrix {
    /// Validates a raw 3x3 matrix: Hermitian, Casimir trace, consistent
    /// imaginary parts.
    pub fn new(j: SpinNumber, m: ComplexMatrix) -> Result<Self> {
        if m.nrows() != 3 || m.ncols() != 3 {
            return Err(Error::DimensionMismatch {
                expected: "3x3".into(),
                found: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = j.casimir().max(1.0);
        let tol = MOMENT_TOL * scale;
        let mut dev = 0.0f64;
        for k in 0..3 {
            for l in 0..3 {
                dev = dev.max((m[(k, l)].re - m[(l, k)].re).abs());
            }
        }
        if dev > tol {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let first = extract_first_moments_with_tol(&m, tol)?;
        let tr: f64 = (0..3).map(|k| m[(k, k)].re).sum();
        if (tr - j.casimir()).abs() > tol {
            return Err(Error::CasimirViolated {
                expected: j.casimir(),
                found: tr,
            });
        }
        let re = Matrix3::from_fn(|k, l| 0.5 * (m[(k, l)].re + m[(l, k)].re));
        Ok(Self::assemble(j, &re, first))
    }

    /// Builds `M = Re + i A(l)` from a real symmetric part and first moments.
    pub fn from_parts(j: SpinNumber, re: &Matrix3<f64>, first: [f64; 3]) -> Result<Self> {
        let sym = Matrix3::from_fn(|k, l| 0.5 * (re[(k, l)] + re[(l, k)]));
        let tr = sym.trace();
        if (tr - j.casimir()).abs() > MOMENT_TOL * j.casimir().max(1.0) {
            return Err(Error::CasimirViolated {
                expected: j.casimir(),
                found: tr,
            });
        }
        Ok(Self::assemble(j, &sym, first))
    }

    fn assemble(j: SpinNumber, re: &Matrix3<f64>, first: [f64; 3]) -> Self {
        let im = antisymmetric_part(first);
        let m = ComplexMatrix::from_fn(3, 3, |k, l| c64(re[(k, l)], im[(k, l)]));
        Self { j, m, first }
    }

    pub fn j(&self) -> SpinNumber {
        self.j
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn first_moments(&self) -> [f64; 3] {
        self.first
    }

    pub fn entry(&self, k: usize, l: usize) -> C64 {
        self.m[(k, l)]
    }

    /// Real symmetric part `Re M`.
    pub fn real_part(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|k, l| self.m[(k, l)].re)
    }

    /// Values of the operators `[1, S11, S12, S13, S22, S23, S33, L1, L2, L3]`
    /// with `S_kl` the symmetrized products.
    pub fn moment_vector(&self) -> [f64; 10] {
        let r = |k, l| self.m[(k, l)].re;
        [
            1.0,
            r(0, 0),
            r(0, 1),
            r(0, 2),
            r(1, 1),
            r(1, 2),
            r(2, 2),
            self.first[0],
            self.first[1],
            self.first[2],
        ]
    }

    /// Moments of the rotated state: `R M R^T`, first moments `R l`.
    pub fn rotated(&self, r: &Matrix3<f64>) -> Self {
        let re = r * self.real_part() * r.transpose();
        let l = r * Vector3::from(self.first);
        Self::assemble(self.j, &re, [l[0], l[1], l[2]])
    }
}

/// `A(l)_kl = eps_klm l_m / 2`.
fn antisymmetric_part(l: [f64; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|k, p| (0..3).map(|m| levi_civita(k, p, m) * l[m]).sum::<f64>() * 0.5)
}

/// Recovers `l` from `Im M_kl = eps_klm l_m / 2`.
pub fn extract_first_moments(m: &ComplexMatrix) -> Result<[f64; 3]> {
    extract_first_moments_with_tol(m, MOMENT_TOL)
}

fn extract_first_moments_with_tol(m: &ComplexMatrix, tol: f64) -> Result<[f64; 3]> {
    let mut dev = 0.0f64;
    for k in 0..3 {
        dev = dev.max(m[(k, k)].im.abs());
        for l in (k + 1)..3 {
            dev = dev.max((m[(k, l)].im + m[(l, k)].im).abs());
        }
    }
    if dev > tol {
        return Err(Error::InconsistentFirstMoments { deviation: dev });
    }
    // l_m = Im M_kl - Im M_lk for (k, l, m) cyclic
    Ok([
        m[(1, 2)].im - m[(2, 1)].im,
        m[(2, 0)].im - m[(0, 2)].im,
        m[(0, 1)].im - m[(1, 0)].im,
    ])
}

/// `M_kl = tr(L_k L_l rho)` for a density operator `rho`.
pub fn moment_matrix(rho: &HermitianMatrix, t: &SpinOperatorTriple) -> Result<MomentMatrix> {
    check_state(rho, t.j.dim())?;
    let mut re = Matrix3::zeros();
    let mut first = [0.0; 3];
    for k in 0..3 {
        first[k] = t.ops[k].inner_product(rho);
        for l in k..3 {
            let v = t.symmetrized_product(k, l).inner_product(rho);
            re[(k, l)] = v;
            re[(l, k)] = v;
        }
    }
    Ok(MomentMatrix::assemble(t.j, &re, first))
}

pub(crate) fn check_state(rho: &HermitianMatrix, dim: usize) -> Result<()> {
    if rho.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: format!("{dim}x{dim}"),
            found: format!("{0}x{0}", rho.dim()),
        });
    }
    let tr = rho.trace();
    if (tr - 1.0).abs() > 1e-10 {
        return Err(Error::NotAState(format!("trace {tr}")));
    }
    let min = rho.min_eigenvalue();
    if min < -PSD_TOL {
        return Err(Error::NotAState(format!("minimum eigenvalue {min:e}")));
    }
    Ok(())
}

/// The 4x4 matrix `chi_kl = tr(F_k^dagger F_l rho)` over `F = {1, L1, L2, L3}`.
#[derive(Clone, Debug)]
pub struct ExpectationValueMatrix4 {
    pub chi: HermitianMatrix,
}

pub fn chi_matrix(m: &MomentMatrix) -> ExpectationValueMatrix4 {
    let l = m.first_moments();
    let mut chi = ComplexMatrix::zeros(4, 4);
    chi[(0, 0)] = c64(1.0, 0.0);
    for k in 0..3 {
        chi[(0, k + 1)] = c64(l[k], 0.0);
        chi[(k + 1, 0)] = c64(l[k], 0.0);
        for p in 0..3 {
            chi[(k + 1, p + 1)] = m.entry(k, p);
        }
    }
    ExpectationValueMatrix4 {
        chi: HermitianMatrix::from_hermitian_part(&chi),
    }
}

/// `R M R^T = D + i A(l')` with `D` diagonal, sorted descending, `det R = +1`.
#[derive(Clone, Debug)]
pub struct StandardForm {
    pub rotation: Matrix3<f64>,
    pub diagonal: [f64; 3],
    pub first_moments: [f64; 3],
}

impl StandardForm {
    /// `D + i A(l')` as a complex 3x3 matrix.
    pub fn reassemble(&self) -> ComplexMatrix {
        let im = antisymmetric_part(self.first_moments);
        ComplexMatrix::from_fn(3, 3, |k, l| {
            c64(if k == l { self.diagonal[k] } else { 0.0 }, im[(k, l)])
        })
    }

    pub fn to_moments(&self, j: SpinNumber) -> MomentMatrix {
        MomentMatrix::assemble(j, &Matrix3::from_diagonal(&Vector3::from(self.diagonal)), self.first_moments)
    }
}

/// Eigenvalues closer than this (relative) are treated as degenerate.
const TIE_TOL: f64 = 1e-9;

pub fn standard_form(m: &MomentMatrix) -> StandardForm {
    let re = m.real_part();
    let h = HermitianMatrix::from_hermitian_part(&ComplexMatrix::from_fn(3, 3, |k, l| c64(re[(k, l)], 0.0)));
    let e = hermitian_eig(&h);
    // descending order; eigenvectors are real for real symmetric input
    let vals = [e.values[2], e.values[1], e.values[0]];
    let vecs = Matrix3::from_fn(|i, c| e.vectors[(i, 2 - c)].re);

    // rows of R are eigenvectors; within each degenerate cluster pick the
    // orthonormal basis closest to the identity (orthogonal Procrustes)
    let mut r = vecs.transpose();
    let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut start = 0;
    while start < 3 {
        let mut end = start + 1;
        while end < 3 && (vals[end - 1] - vals[end]).abs() <= TIE_TOL * scale {
            end += 1;
        }
        align_cluster(&mut r, start, end);
        start = end;
    }
    if r.determinant() < 0.0 {
        let worst = (0..3).min_by(|&a, &b| r[(a, a)].total_cmp(&r[(b, b)])).unwrap();
        for c in 0..3 {
            r[(worst, c)] = -r[(worst, c)];
        }
    }
    let rm = r * re * r.transpose();
    let l = r * Vector3::from(m.first_moments());
    StandardForm {
        rotation: r,
        diagonal: [rm[(0, 0)], rm[(1, 1)], rm[(2, 2)]],
        first_moments: [l[0], l[1], l[2]],
    }
}

/// Replaces rows `start..end` of `r` (an orthonormal basis of a subspace)
/// with the basis of the same subspace closest to `e_start..e_end`.
fn align_cluster(r: &mut Matrix3<f64>, start: usize, end: usize) {
    let k = end - start;
    // P: 3 x k basis, E: 3 x k target columns
    let p = nalgebra::DMatrix::from_fn(3, k, |i, c| r[(start + c, i)]);
    let target = nalgebra::DMatrix::from_fn(3, k, |i, c| if i == start + c { 1.0 } else { 0.0 });
    let svd = (p.transpose() * &target).svd(true, true);
    let w = svd.u.unwrap() * svd.v_t.unwrap();
    let aligned = &p * w;
    for c in 0..k {
        for i in 0..3 {
            r[(start + c, i)] = aligned[(i, c)];
        }
    }
}

/// Rotation matrix about a unit axis.
pub fn axis_angle_rotation(axis: [f64; 3], angle: f64) -> Matrix3<f64> {
    let a = nalgebra::Unit::new_normalize(Vector3::from(axis));
    *nalgebra::Rotation3::from_axis_angle(&a, angle).matrix()
}
