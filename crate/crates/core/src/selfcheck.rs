//! Self-validation suite: algebra identities, SDP oracles and the
//! `R ⊆ S_j ⊆ T_j` sandwich on sampled states.
//!
//! Every check names the invariant it guards, so a failure (for instance from
//! a deliberately broken tolerance) says exactly what went wrong.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::feasibility::{exact_test_direct_with_band, outer_test_state, witness_search, WitnessSearch, BOUNDARY_BAND};
use crate::matcore::{c64, ComplexMatrix, HermitianMatrix};
use crate::random::{random_pure_vector, random_separable_symmetric, random_state};
use crate::reduction::{
    moments_from_coords, ppt_inner_test_with_tol, reconstruct_rho, RenormalizedCoords, ReductionOperators,
    SymmetricTwoQubitState,
};
use crate::sdp::{solve, SdpProblem, SdpStatus};
use crate::spinalg::{spin_operators, validate_algebra, AlgebraReport, SpinNumber};

/// Thresholds used by the suite. Overriding one with a nonsensical value is
/// the supported way to inject a fault.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Max-norm residual of the commutation relations and the Casimir identity.
    pub algebra: f64,
    /// Absolute error of SDP optima against eigenvalue oracles.
    pub oracle: f64,
    /// Duality gap at SDP optima.
    pub gap: f64,
    /// PSD tolerance of the inner and outer tests in the sandwich check.
    pub psd: f64,
    /// Max-abs error of the moments -> state -> moments round trip.
    pub round_trip: f64,
    /// `|value + t*|` of extracted witnesses.
    pub witness: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            algebra: 1e-10,
            oracle: 1e-6,
            gap: 1e-8,
            psd: 1e-7,
            round_trip: 1e-9,
            witness: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidateOptions {
    /// Algebra identities are checked for every `2j` in `1..=max_two_j`.
    pub max_two_j: u32,
    pub seed: u64,
    /// Random states per spin in the sandwich check.
    pub sandwich_samples: usize,
    /// Random instances in each SDP oracle check.
    pub oracle_instances: usize,
    pub tolerances: Tolerances,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            max_two_j: 30,
            seed: 0,
            sandwich_samples: 40,
            oracle_instances: 20,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    /// Name of the invariant.
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub checks: Vec<CheckOutcome>,
    /// Residuals per `2j`, in order.
    pub algebra: Vec<(u32, AlgebraReport)>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn timed(name: &'static str, f: impl FnOnce() -> (bool, String)) -> CheckOutcome {
    let start = Instant::now();
    let (passed, detail) = f();
    CheckOutcome {
        name,
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

/// Algebra residuals for every `2j` in `1..=max_two_j`.
pub fn algebra_residuals(max_two_j: u32) -> Vec<(u32, AlgebraReport)> {
    (1..=max_two_j)
        .map(|two_j| {
            let j = SpinNumber::new(two_j).expect("positive 2j");
            (two_j, validate_algebra(&spin_operators(j)))
        })
        .collect()
}

fn worst_by(residuals: &[(u32, AlgebraReport)], f: impl Fn(&AlgebraReport) -> f64) -> (u32, f64) {
    residuals
        .iter()
        .map(|(two_j, r)| (*two_j, f(r)))
        .fold((0, 0.0), |acc, x| if x.1 >= acc.1 { x } else { acc })
}

/// Smallest eigenvalue via nalgebra's real symmetric solver on the
/// realification `[[A, -B], [B, A]]` of `A + iB` (independent of the
/// crate's own eigensolver).
pub fn reference_min_eigenvalue(h: &HermitianMatrix) -> f64 {
    let m = h.matrix();
    let n = m.nrows();
    let r = DMatrix::from_fn(2 * n, 2 * n, |i, k| {
        let (a, b) = (i % n, k % n);
        let z = m[(a, b)];
        match (i < n, k < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    SymmetricEigen::new(r).eigenvalues.min()
}

fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianMatrix {
    let g = ComplexMatrix::from_fn(n, n, |_, _| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    HermitianMatrix::from_hermitian_part(&g)
}

fn check_algebra(report: &mut ValidationReport, opts: &ValidateOptions) {
    let tol = opts.tolerances.algebra;
    let residuals = algebra_residuals(opts.max_two_j);
    let (cj, cr) = worst_by(&residuals, |r| r.commutator_residual);
    let (kj, kr) = worst_by(&residuals, |r| r.casimir_residual);
    let n = residuals.len();
    report.checks.push(timed("commutation relations", || {
        (cr < tol, format!("max residual {cr:.2e} at 2j = {cj} over {n} spins (tol {tol:.0e})"))
    }));
    report.checks.push(timed("Casimir identity", || {
        (kr < tol, format!("max residual {kr:.2e} at 2j = {kj} over {n} spins (tol {tol:.0e})"))
    }));
    report.algebra = residuals;
}

/// `min <C, X>` s.t. `tr X = 1` equals `lambda_min(C)`; the gap must close.
fn check_sdp_oracle(report: &mut ValidationReport, opts: &ValidateOptions, rng: &mut ChaCha8Rng) {
    let tol = opts.tolerances;
    let mut worst_err = 0.0f64;
    let mut worst_gap = 0.0f64;
    let mut failures = 0;
    let start = Instant::now();
    for k in 0..opts.oracle_instances {
        let n = 2 + k % 4;
        let c = random_hermitian(n, rng);
        let p = SdpProblem::new(c.clone(), vec![(HermitianMatrix::identity(n), 1.0)]).expect("square data");
        match solve(&p) {
            Ok(s) if s.status == SdpStatus::Optimal => {
                worst_err = worst_err.max((s.primal_objective - reference_min_eigenvalue(&c)).abs());
                worst_gap = worst_gap.max(s.gap);
            }
            _ => failures += 1,
        }
    }
    let elapsed = start.elapsed();
    let m = opts.oracle_instances;
    report.checks.push(CheckOutcome {
        name: "SDP optimum matches eigenvalue oracle",
        passed: failures == 0 && worst_err <= tol.oracle,
        detail: format!("{m} instances, {failures} unsolved, max error {worst_err:.2e} (tol {:.0e})", tol.oracle),
        elapsed,
    });
    report.checks.push(CheckOutcome {
        name: "SDP duality gap at optimum",
        passed: failures == 0 && worst_gap <= tol.gap,
        detail: format!("max duality gap {worst_gap:.2e} (tol {:.0e})", tol.gap),
        elapsed: Duration::ZERO,
    });
    report.checks.push(timed("SDP infeasibility detection", || {
        // tr X = 1 and tr X = 2 cannot both hold
        let i = HermitianMatrix::identity(3);
        let p = SdpProblem::new(random_hermitian(3, rng), vec![(i.clone(), 1.0), (i, 2.0)]).expect("square data");
        match solve(&p) {
            Ok(s) if s.status == SdpStatus::PrimalInfeasible => (true, "inconsistent trace constraints detected".into()),
            Ok(s) => (false, format!("reported {:?}", s.status)),
            Err(e) => (false, e.to_string()),
        }
    }));
}

fn check_round_trip(report: &mut ValidationReport, opts: &ValidateOptions, rng: &mut ChaCha8Rng) {
    let tol = opts.tolerances.round_trip;
    report.checks.push(timed("reconstruction round trip", || {
        let mut worst = 0.0f64;
        for two_j in [2, 3, 4, 7, 10] {
            let j = SpinNumber::new(two_j).expect("positive 2j");
            let ops = ReductionOperators::new(j).expect("2j >= 2");
            for _ in 0..5 {
                let rho = SymmetricTwoQubitState::new(random_state(3, rng)).expect("random state");
                let m = match ops.moments_of(&rho) {
                    Ok(m) => m,
                    Err(e) => return (false, e.to_string()),
                };
                match reconstruct_rho(&m, &ops) {
                    Ok(back) => worst = worst.max(crate::matcore::max_abs_diff(back.rho.matrix(), rho.rho.matrix())),
                    Err(e) => return (false, e.to_string()),
                }
            }
        }
        (worst <= tol, format!("max |rho - rho'| = {worst:.2e} (tol {tol:.0e})"))
    }));
}

/// Sandwich `PPT => exact => tau_j >= 0` on random symmetric states.
fn check_sandwich(report: &mut ValidationReport, opts: &ValidateOptions, rng: &mut ChaCha8Rng) {
    let tol = opts.tolerances.psd;
    report.checks.push(timed("sandwich R ⊆ S_j ⊆ T_j", || {
        let mut violations = Vec::new();
        let mut counts = [0usize; 3];
        let mut total = 0;
        for two_j in [2u32, 4, 10] {
            let j = SpinNumber::new(two_j).expect("positive 2j");
            let ops = ReductionOperators::new(j).expect("2j >= 2");
            for k in 0..opts.sandwich_samples {
                let raw = match k % 3 {
                    0 => random_separable_symmetric(2, rng),
                    1 => HermitianMatrix::projector(&random_pure_vector(3, rng)),
                    _ => random_state(3, rng),
                };
                let rho = SymmetricTwoQubitState::new(raw).expect("random state");
                let m = match ops.moments_of(&rho) {
                    Ok(m) => m,
                    Err(e) => return (false, e.to_string()),
                };
                let in_r = ppt_inner_test_with_tol(&rho, tol);
                let in_t = outer_test_state(&rho, &ops, tol);
                let in_s = match exact_test_direct_with_band(&m, BOUNDARY_BAND) {
                    Ok(v) => v.status.accepts(),
                    Err(e) => return (false, format!("2j = {two_j}: {e}")),
                };
                total += 1;
                counts[0] += in_r as usize;
                counts[1] += in_s as usize;
                counts[2] += in_t as usize;
                if (in_r && !in_s) || (in_s && !in_t) {
                    violations.push(format!("2j = {two_j} sample {k} (R {in_r}, S {in_s}, T {in_t})"));
                }
            }
        }
        let detail = format!(
            "{total} states, {} in R, {} in S_j, {} in T_j, {} violations{}",
            counts[0],
            counts[1],
            counts[2],
            violations.len(),
            violations.first().map(|v| format!("; first: {v}")).unwrap_or_default()
        );
        (violations.is_empty(), detail)
    }));
}

/// Witness values equal `-t*` on a few points outside the quantum set.
fn check_witness(report: &mut ValidationReport, opts: &ValidateOptions) {
    let tol = opts.tolerances.witness;
    report.checks.push(timed("witness value equals -t*", || {
        let mut worst = 0.0f64;
        for (two_j, v) in [(4u32, [1.1, -0.05, -0.05]), (5, [-0.2, 1.4, -0.2]), (10, [0.6, 0.6, -0.2])] {
            let j = SpinNumber::new(two_j).expect("positive 2j");
            let c = RenormalizedCoords::new(j, [0.1, 0.2, 0.3], v).expect("coordinates sum to one");
            let m = moments_from_coords(&c).expect("valid coordinates");
            let t = match exact_test_direct_with_band(&m, BOUNDARY_BAND) {
                Ok(v) => v.t_star,
                Err(e) => return (false, e.to_string()),
            };
            match (witness_search(&m), t) {
                (Ok(WitnessSearch::Found(w)), Some(t)) => worst = worst.max((w.value + t).abs()),
                (Ok(WitnessSearch::NotFound { value }), _) => {
                    return (false, format!("2j = {two_j}: no witness found (value {value:.2e})"))
                }
                (Err(e), _) => return (false, e.to_string()),
                (_, None) => return (false, format!("2j = {two_j}: no phase-1 value")),
            }
        }
        (worst <= tol, format!("max |value + t*| = {worst:.2e} (tol {tol:.0e})"))
    }));
}

/// Runs the whole suite.
pub fn run_validation(opts: &ValidateOptions) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = ValidationReport::default();
    check_algebra(&mut report, opts);
    check_sdp_oracle(&mut report, opts, &mut rng);
    check_round_trip(&mut report, opts, &mut rng);
    check_sandwich(&mut report, opts, &mut rng);
    check_witness(&mut report, opts);
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> ValidateOptions {
        ValidateOptions {
            max_two_j: 12,
            sandwich_samples: 6,
            oracle_instances: 6,
            ..ValidateOptions::default()
        }
    }

    #[test]
    fn default_suite_is_green() {
        let r = run_validation(&quick());
        for c in &r.checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
        assert_eq!(r.algebra.len(), 12);
    }

    #[test]
    fn broken_algebra_tolerance_names_the_invariant() {
        let mut opts = quick();
        opts.tolerances.algebra = -1.0;
        let r = run_validation(&opts);
        let failed: Vec<_> = r.failures().map(|c| c.name).collect();
        assert_eq!(failed, vec!["commutation relations", "Casimir identity"]);
    }

    #[test]
    fn broken_gap_tolerance_names_the_invariant() {
        let mut opts = quick();
        opts.tolerances.gap = -1.0;
        let r = run_validation(&opts);
        let failed: Vec<_> = r.failures().map(|c| c.name).collect();
        assert_eq!(failed, vec!["SDP duality gap at optimum"]);
    }

    #[test]
    fn casimir_residual_small_at_j_fifteen() {
        let res = algebra_residuals(30);
        let (_, r) = res.iter().find(|(t, _)| *t == 30).unwrap();
        assert!(r.casimir_residual < 1e-9);
    }

    #[test]
    fn reference_eigenvalue_agrees_with_jacobi() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..6 {
            let h = random_hermitian(n, &mut rng);
            assert!((reference_min_eigenvalue(&h) - h.min_eigenvalue()).abs() < 1e-12);
        }
    }
}
