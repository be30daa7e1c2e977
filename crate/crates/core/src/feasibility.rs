//! Decision procedures: is a moment matrix the moment matrix of a state?
//!
//! * [`first_moment_test`]: the closed form `|l| <= j` for first moments.
//! * [`exact_test_direct`]: phase-1 SDP over states of spin `j` with the
//!   moment constraints.
//! * [`exact_test_extension`]: phase-1 SDP over Bose-symmetric extensions of
//!   the reduced two-qubit state.
//! * [`inner_test`] / [`outer_test`]: the PPT sufficient condition and the
//!   `tau_j >= 0` necessary condition.
//! * [`witness_search`]: a separating hyperplane for non-quantum moments.
//! * [`classify`]: the staged pipeline combining all of the above.

use std::fmt;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::matcore::{c64, purify_state, ComplexMatrix, HermitianMatrix, PSD_TOL};
use crate::reduction::{
    hermitian_basis3, ppt_inner_test_with_tol, reconstruct_rho, spin_to_dicke, tau, BoseMarginal,
    ReductionOperators, SymmetricTwoQubitState,
};
use crate::sdp::{orthonormalize, phase1_min_t_with, OrthonormalBasis, Phase1Result, SdpOptions};
use crate::spinalg::{chi_matrix, spin_operators, MomentMatrix, SpinNumber, SpinOperatorTriple, MOMENT_TOL};

/// `|t*|` at or below this is reported as boundary.
pub const BOUNDARY_BAND: f64 = 1e-7;
/// Largest `2j` accepted by [`exact_test_extension`].
pub const EXTENSION_CAP: u32 = 12;
/// Eigenvalues of certificate states in `(-CLIP, 0)` are set to zero.
const CERTIFICATE_CLIP: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Quantum,
    NonQuantum,
    Boundary,
}

impl Status {
    /// Status implied by a phase-1 value.
    pub fn from_t_star(t: f64, band: f64) -> Self {
        if t < -band {
            Status::Quantum
        } else if t > band {
            Status::NonQuantum
        } else {
            Status::Boundary
        }
    }

    /// Membership in the (closed) quantum set.
    pub fn accepts(self) -> bool {
        self != Status::NonQuantum
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Quantum => "quantum",
            Status::NonQuantum => "non-quantum",
            Status::Boundary => "boundary",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stage {
    Validation,
    FirstMoments,
    Chi,
    Reconstruction,
    Inner,
    Outer,
    Exact,
    Extension,
    Witness,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Validation => "validation",
            Stage::FirstMoments => "first-moments",
            Stage::Chi => "chi",
            Stage::Reconstruction => "reconstruction",
            Stage::Inner => "inner",
            Stage::Outer => "outer",
            Stage::Exact => "exact",
            Stage::Extension => "extension",
            Stage::Witness => "witness",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One executed stage of a decision procedure.
#[derive(Clone, Debug)]
pub struct TestRecord {
    pub stage: Stage,
    /// Whether the stage's condition held (e.g. "chi is PSD", "rho is PPT").
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

/// Separating hyperplane `Z = sum_i z_i S_i >= 0`, `tr Z = 1`, with
/// `value = z . t < 0` on the detected input.
#[derive(Clone, Debug)]
pub struct Witness {
    /// Coordinates in the orthonormalized operator basis.
    pub z: Vec<f64>,
    pub operator: HermitianMatrix,
    /// `z . t` for the input's transformed values.
    pub value: f64,
    /// Coefficients of `Z` on the original operators (for moment inputs:
    /// `[1, S11, S12, S13, S22, S23, S33, L1, L2, L3]`).
    pub coefficients: Vec<f64>,
}

impl Witness {
    /// Witness `Z` expressed in `basis`; slightly negative spectra are shifted
    /// and renormalized to trace one.
    pub fn from_operator(z: &HermitianMatrix, basis: &OrthonormalBasis) -> Self {
        let mut op = z.clone();
        let min = op.min_eigenvalue();
        if min < 0.0 {
            op = op.add_scaled(&HermitianMatrix::identity(op.dim()), -min);
            op = op.scale(1.0 / op.trace());
        }
        let zc = basis.coordinates(&op);
        let value = zc.iter().zip(&basis.values).map(|(a, b)| a * b).sum();
        let coefficients = basis.to_original(&zc);
        Self {
            operator: basis.expand(&zc),
            z: zc,
            value,
            coefficients,
        }
    }

    /// `sum_k coefficients_k b_k`: the hyperplane evaluated on values of the
    /// original operators.
    pub fn evaluate(&self, b: &[f64]) -> f64 {
        assert_eq!(b.len(), self.coefficients.len());
        self.coefficients.iter().zip(b).map(|(c, x)| c * x).sum()
    }

    pub fn spectrum(&self) -> Vec<f64> {
        self.operator.eig().values
    }
}

#[derive(Clone, Debug)]
pub enum Certificate {
    /// A state (spin basis) reproducing the moments.
    State(HermitianMatrix),
    Witness(Witness),
    None,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub status: Status,
    /// Stage that decided the status.
    pub stage: Stage,
    pub certificate: Certificate,
    pub tests_run: Vec<TestRecord>,
    pub t_star: Option<f64>,
}

impl Verdict {
    pub fn state(&self) -> Option<&HermitianMatrix> {
        match &self.certificate {
            Certificate::State(s) => Some(s),
            _ => None,
        }
    }

    pub fn witness(&self) -> Option<&Witness> {
        match &self.certificate {
            Certificate::Witness(w) => Some(w),
            _ => None,
        }
    }
}

/// Result of a phase-1 feasibility run.
#[derive(Clone, Debug)]
pub struct Consistency {
    pub status: Status,
    pub t_star: f64,
    pub phase1: Phase1Result,
}

impl Consistency {
    /// A state satisfying the constraints, for accepting outcomes.
    pub fn certificate_state(&self) -> Option<HermitianMatrix> {
        if !self.status.accepts() {
            return None;
        }
        let clip = if self.status == Status::Boundary {
            BOUNDARY_BAND.max(CERTIFICATE_CLIP)
        } else {
            CERTIFICATE_CLIP
        };
        purify_state(&self.phase1.x, clip)
    }

    pub fn witness(&self) -> Witness {
        Witness::from_operator(&self.phase1.z, &self.phase1.basis)
    }
}

fn sdp_options() -> SdpOptions {
    SdpOptions {
        max_dim: 256,
        ..SdpOptions::default()
    }
}

/// Is there a state `rho` on `C^dim` with `tr rho = 1` and
/// `tr(A_k rho) = b_k`? Decided by the sign of the phase-1 value.
pub fn consistency_test(ops: &[HermitianMatrix], values: &[f64], dim: usize, band: f64) -> Result<Consistency> {
    let phase1 = phase1_min_t_with(ops, values, dim, &sdp_options())?;
    let status = if phase1.converged() {
        Status::from_t_star(phase1.t_star, band)
    } else if phase1.t_lower > band {
        Status::NonQuantum
    } else if phase1.t_upper < -band {
        Status::Quantum
    } else {
        return Err(Error::SolverFailure {
            iterations: phase1.solution.iterations,
            reason: phase1
                .solution
                .message
                .clone()
                .unwrap_or_else(|| "did not converge".into()),
        });
    };
    let t_star = if phase1.converged() {
        phase1.t_star
    } else {
        0.5 * (phase1.t_lower + phase1.t_upper)
    };
    Ok(Consistency { status, t_star, phase1 })
}

/// Operators `[S11, S12, S13, S22, S23, S33, L1, L2, L3]`; together with the
/// identity they match [`MomentMatrix::moment_vector`].
pub fn moment_operators(t: &SpinOperatorTriple) -> Vec<HermitianMatrix> {
    let mut ops = Vec::with_capacity(9);
    for k in 0..3 {
        for l in k..3 {
            ops.push(t.symmetrized_product(k, l));
        }
    }
    ops.extend(t.ops().iter().cloned());
    ops
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

/// Closed-form decision for first moments: `|l| <= j`.
pub fn first_moment_test(l: [f64; 3], j: SpinNumber) -> Verdict {
    let ((status, certificate, detail), elapsed) = timed(|| {
        let jj = j.j();
        let norm = (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]).sqrt();
        let t = spin_operators(j);
        let status = if (norm - jj).abs() <= 1e-9 * jj {
            Status::Boundary
        } else if norm < jj {
            Status::Quantum
        } else {
            Status::NonQuantum
        };
        let dim = j.dim();
        let certificate = if status.accepts() {
            // (1 - r) I/d + r |n><n| with |n> the top eigenvector of n.L
            let r = (norm / jj).min(1.0);
            let mixed = HermitianMatrix::identity(dim).scale(1.0 / dim as f64);
            let rho = if norm == 0.0 {
                mixed
            } else {
                let n = [l[0] / norm, l[1] / norm, l[2] / norm];
                let e = t.along(n).eig();
                let top = HermitianMatrix::projector(&e.vector(dim - 1));
                mixed.scale(1.0 - r).add_scaled(&top, r)
            };
            Certificate::State(rho)
        } else {
            // Z = (j - n.L)/(j d) >= 0 has trace one and z.b = (j - |l|)/(j d)
            let n = [l[0] / norm, l[1] / norm, l[2] / norm];
            let z = HermitianMatrix::identity(dim)
                .scale(jj)
                .add_scaled(&t.along(n), -1.0)
                .scale(1.0 / (jj * dim as f64));
            let mut ops = vec![HermitianMatrix::identity(dim)];
            ops.extend(t.ops().iter().cloned());
            let basis = orthonormalize(&ops, &[1.0, l[0], l[1], l[2]]).expect("spin operators are independent");
            Certificate::Witness(Witness::from_operator(&z, &basis))
        };
        (status, certificate, format!("|l| = {norm}, j = {jj}"))
    });
    Verdict {
        status,
        stage: Stage::FirstMoments,
        certificate,
        tests_run: vec![TestRecord {
            stage: Stage::FirstMoments,
            passed: status.accepts(),
            detail,
            elapsed,
        }],
        t_star: None,
    }
}

/// `I/(2j+1) + sum_k a_k L_k` with `a_k = l_k / tr(L_k^2)`: the unique
/// operator in the span of `{1, L_k}` with the given first moments.
pub fn build_fixed_state(l: [f64; 3], j: SpinNumber) -> HermitianMatrix {
    let t = spin_operators(j);
    let dim = j.dim() as f64;
    let norm_sq = j.casimir() * dim / 3.0;
    let mut rho = HermitianMatrix::identity(j.dim()).scale(1.0 / dim);
    for k in 0..3 {
        rho = rho.add_scaled(t.op(k), l[k] / norm_sq);
    }
    rho
}

/// First moments only: phase-1 SDP over `{1, L_m}` with second moments free.
pub fn exact_test_first_moments(l: [f64; 3], j: SpinNumber) -> Result<Verdict> {
    let t = spin_operators(j);
    let (res, elapsed) = timed(|| consistency_test(t.ops(), &l, j.dim(), BOUNDARY_BAND));
    let c = res?;
    Ok(verdict_from_consistency(&c, Stage::Exact, elapsed, |s| s))
}

fn verdict_from_consistency(
    c: &Consistency,
    stage: Stage,
    elapsed: Duration,
    map_state: impl Fn(HermitianMatrix) -> HermitianMatrix,
) -> Verdict {
    let certificate = if c.status.accepts() {
        c.certificate_state().map(map_state).map_or(Certificate::None, Certificate::State)
    } else {
        Certificate::Witness(c.witness())
    };
    Verdict {
        status: c.status,
        stage,
        certificate,
        tests_run: vec![TestRecord {
            stage,
            passed: c.status.accepts(),
            detail: format!("t* = {:e}", c.t_star),
            elapsed,
        }],
        t_star: Some(c.t_star),
    }
}

/// At `j = 1/2` the second moments are fixed (`L_k L_l = d_kl/4 + i e_klm L_m/2`).
fn check_forced_second_moments(m: &MomentMatrix) -> Result<()> {
    let re = m.real_part();
    let mut dev = 0.0f64;
    for k in 0..3 {
        for l in 0..3 {
            let target = if k == l { 0.25 } else { 0.0 };
            dev = dev.max((re[(k, l)] - target).abs());
        }
    }
    if dev > MOMENT_TOL {
        return Err(Error::InconsistentMoments(format!(
            "at j = 1/2 the second moments are fixed to delta_kl/4 (deviation {dev:e})"
        )));
    }
    Ok(())
}

/// Phase-1 SDP over states of spin `j` with `tr rho = 1`,
/// `tr(S_kl rho) = Re M_kl` and `tr(L_m rho) = l_m`.
pub fn exact_test_direct(m: &MomentMatrix) -> Result<Verdict> {
    exact_test_direct_with_band(m, BOUNDARY_BAND)
}

pub fn exact_test_direct_with_band(m: &MomentMatrix, band: f64) -> Result<Verdict> {
    let j = m.j();
    if j.two_j() == 1 {
        check_forced_second_moments(m)?;
        return Ok(first_moment_test(m.first_moments(), j));
    }
    let t = spin_operators(j);
    let ops = moment_operators(&t);
    let values = &m.moment_vector()[1..];
    let (res, elapsed) = timed(|| consistency_test(&ops, values, j.dim(), band));
    let c = res?;
    Ok(verdict_from_consistency(&c, Stage::Exact, elapsed, |s| s))
}

/// Phase-1 SDP over Bose-symmetric extensions `omega` of `rho` to `2j`
/// qubits, parametrized on the symmetric subspace. The certificate is `omega`
/// in the spin basis.
pub fn exact_test_extension(rho: &SymmetricTwoQubitState, j: SpinNumber) -> Result<Verdict> {
    if j.two_j() < 2 {
        return Err(Error::SpinTooSmall("extension test needs j >= 1"));
    }
    if j.two_j() > EXTENSION_CAP {
        return Err(Error::CapExceeded {
            what: "2j for the extension test (use exact_test_direct)",
            cap: EXTENSION_CAP as usize,
            requested: j.two_j() as usize,
        });
    }
    let (res, elapsed) = timed(|| -> Result<Consistency> {
        let marg = BoseMarginal::new(j)?;
        let basis = hermitian_basis3();
        let ops: Vec<HermitianMatrix> = basis.iter().map(|h| marg.pullback(h)).collect();
        let values: Vec<f64> = basis
            .iter()
            .map(|h| crate::matcore::trace_product(h, rho.rho.matrix()))
            .collect();
        consistency_test(&ops, &values, j.dim(), BOUNDARY_BAND)
    });
    let c = res?;
    let mut v = verdict_from_consistency(&c, Stage::Extension, elapsed, |s| {
        HermitianMatrix::from_hermitian_part(&spin_to_dicke(s.matrix()))
    });
    if let Certificate::Witness(_) = v.certificate {
        // the hyperplane lives on the extension space; keep it in Dicke coordinates
        v.certificate = Certificate::Witness(c.witness());
    }
    Ok(v)
}

/// `rho_j(M) >= 0` and PPT: sufficient for every `j`.
pub fn inner_test(m: &MomentMatrix, ops: &ReductionOperators) -> Result<bool> {
    let rho = reconstruct_rho(m, ops)?;
    Ok(ppt_inner_test_with_tol(&rho, PSD_TOL))
}

/// `rho >= 0` and `tau_j(rho) >= 0`: necessary for extendibility to `2j` qubits.
pub fn outer_test_state(rho: &SymmetricTwoQubitState, ops: &ReductionOperators, tol: f64) -> bool {
    rho.is_psd(tol) && tau(rho, ops).tau.is_psd(tol)
}

/// `tau_j(rho_j(M)) >= 0` (and `rho_j(M) >= 0`); `false` certifies that `M`
/// is not quantum.
pub fn outer_test(m: &MomentMatrix, ops: &ReductionOperators) -> Result<bool> {
    let rho = reconstruct_rho(m, ops)?;
    Ok(outer_test_state(&rho, ops, PSD_TOL))
}

#[derive(Clone, Debug)]
pub enum WitnessSearch {
    Found(Witness),
    /// The best hyperplane does not separate: `value >= -band`.
    NotFound { value: f64 },
}

/// Solves the dual `max -tr(Z rho_fix)` over `Z = sum z_i S_i >= 0`,
/// `tr Z = 1`, in the basis `{1, S_kl, L_m}`.
pub fn witness_search(m: &MomentMatrix) -> Result<WitnessSearch> {
    let j = m.j();
    let t = spin_operators(j);
    let (ops, values) = if j.two_j() == 1 {
        check_forced_second_moments(m)?;
        (t.ops().to_vec(), m.first_moments().to_vec())
    } else {
        (moment_operators(&t), m.moment_vector()[1..].to_vec())
    };
    let c = consistency_test(&ops, &values, j.dim(), BOUNDARY_BAND)?;
    let w = c.witness();
    if c.status == Status::NonQuantum && w.value < -BOUNDARY_BAND {
        Ok(WitnessSearch::Found(w))
    } else {
        Ok(WitnessSearch::NotFound { value: w.value })
    }
}

/// Pipeline configuration.
#[derive(Clone, Debug)]
pub struct ClassifyOptions {
    /// Tolerance for the PSD checks of the cheap stages.
    pub psd_tol: f64,
    /// Boundary band on `t*`.
    pub band: f64,
    /// Also solve the SDP for a certificate state when the inner test accepts.
    pub want_certificate: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            psd_tol: PSD_TOL,
            band: BOUNDARY_BAND,
            want_certificate: false,
        }
    }
}

/// Classifier for a fixed `j`, holding the operators shared across inputs.
#[derive(Clone, Debug)]
pub struct Classifier {
    pub j: SpinNumber,
    pub options: ClassifyOptions,
    reduction: Option<ReductionOperators>,
}

impl Classifier {
    pub fn new(j: SpinNumber) -> Result<Self> {
        Self::with_options(j, ClassifyOptions::default())
    }

    pub fn with_options(j: SpinNumber, options: ClassifyOptions) -> Result<Self> {
        let reduction = if j.two_j() >= 2 {
            Some(ReductionOperators::new(j)?)
        } else {
            None
        };
        Ok(Self { j, options, reduction })
    }

    pub fn reduction(&self) -> Option<&ReductionOperators> {
        self.reduction.as_ref()
    }

    /// validation -> chi -> reconstruction -> inner -> outer -> exact, with a
    /// witness attached to every rejection.
    pub fn classify(&self, m: &MomentMatrix) -> Result<Verdict> {
        if m.j() != self.j {
            return Err(Error::InvalidArgument(format!(
                "classifier built for j = {}, input has j = {}",
                self.j,
                m.j()
            )));
        }
        let opts = &self.options;
        let mut runs = vec![TestRecord {
            stage: Stage::Validation,
            passed: true,
            detail: "Hermitian, Casimir and first-moment checks passed".into(),
            elapsed: Duration::ZERO,
        }];

        let ops = match &self.reduction {
            None => {
                check_forced_second_moments(m)?;
                let mut v = first_moment_test(m.first_moments(), self.j);
                runs.append(&mut v.tests_run);
                v.tests_run = runs;
                return Ok(v);
            }
            Some(ops) => ops,
        };

        let (chi_min, elapsed) = timed(|| chi_matrix(m).chi.min_eigenvalue());
        let chi_ok = chi_min >= -opts.psd_tol;
        runs.push(TestRecord {
            stage: Stage::Chi,
            passed: chi_ok,
            detail: format!("min eigenvalue {chi_min:e}"),
            elapsed,
        });
        if !chi_ok {
            return self.reject(m, Stage::Chi, runs);
        }

        let (rho, elapsed) = timed(|| reconstruct_rho(m, ops));
        let rho = rho?;
        let rho_min = rho.rho.min_eigenvalue();
        let rho_ok = rho_min >= -opts.psd_tol;
        runs.push(TestRecord {
            stage: Stage::Reconstruction,
            passed: rho_ok,
            detail: format!("min eigenvalue of rho_j {rho_min:e}"),
            elapsed,
        });
        if !rho_ok {
            return self.reject(m, Stage::Reconstruction, runs);
        }

        let (ppt, elapsed) = timed(|| ppt_inner_test_with_tol(&rho, opts.psd_tol));
        runs.push(TestRecord {
            stage: Stage::Inner,
            passed: ppt,
            detail: if ppt { "PPT".into() } else { "not PPT".into() },
            elapsed,
        });
        if ppt {
            let mut certificate = Certificate::None;
            let mut t_star = None;
            if opts.want_certificate {
                let v = exact_test_direct_with_band(m, opts.band)?;
                t_star = v.t_star;
                certificate = v.certificate;
            }
            return Ok(Verdict {
                status: Status::Quantum,
                stage: Stage::Inner,
                certificate,
                tests_run: runs,
                t_star,
            });
        }

        let (tau_min, elapsed) = timed(|| tau(&rho, ops).tau.min_eigenvalue());
        let outer_ok = tau_min >= -opts.psd_tol;
        runs.push(TestRecord {
            stage: Stage::Outer,
            passed: outer_ok,
            detail: format!("min eigenvalue of tau_j {tau_min:e}"),
            elapsed,
        });
        if !outer_ok {
            return self.reject(m, Stage::Outer, runs);
        }

        let mut v = exact_test_direct_with_band(m, opts.band)?;
        runs.append(&mut v.tests_run);
        v.tests_run = runs;
        Ok(v)
    }

    /// A cheap stage rejected `m`: attach the SDP witness. If the hyperplane
    /// does not separate by more than the band, report boundary instead.
    fn reject(&self, m: &MomentMatrix, stage: Stage, mut runs: Vec<TestRecord>) -> Result<Verdict> {
        let (search, elapsed) = timed(|| witness_search(m));
        let search = search?;
        let (status, certificate, detail, t_star) = match search {
            WitnessSearch::Found(w) => {
                let d = format!("value {:e}", w.value);
                let t = -w.value;
                (Status::NonQuantum, Certificate::Witness(w), d, Some(t))
            }
            WitnessSearch::NotFound { value } => (
                Status::Boundary,
                Certificate::None,
                format!("no separating hyperplane beyond the band (value {value:e})"),
                Some(-value),
            ),
        };
        runs.push(TestRecord {
            stage: Stage::Witness,
            passed: status == Status::NonQuantum,
            detail,
            elapsed,
        });
        Ok(Verdict {
            status,
            stage,
            certificate,
            tests_run: runs,
            t_star,
        })
    }
}

pub fn classify(m: &MomentMatrix) -> Result<Verdict> {
    Classifier::new(m.j())?.classify(m)
}

/// Moment vector `[1, Re M11, ..., l3]` of a state.
pub fn state_moment_vector(rho: &HermitianMatrix, t: &SpinOperatorTriple) -> [f64; 10] {
    let mut out = [0.0; 10];
    out[0] = rho.trace();
    for (k, op) in moment_operators(t).iter().enumerate() {
        out[k + 1] = op.inner_product(rho);
    }
    out
}

/// `|0...0>` style helper: projector onto basis vector `i` of `C^dim`.
pub fn basis_projector(dim: usize, i: usize) -> HermitianMatrix {
    let mut psi = vec![c64(0.0, 0.0); dim];
    psi[i] = c64(1.0, 0.0);
    HermitianMatrix::projector(&psi)
}

/// Spin-basis state from a Dicke-basis state (and back: the map is an involution).
pub fn dicke_to_spin(omega: &ComplexMatrix) -> ComplexMatrix {
    spin_to_dicke(omega)
}
