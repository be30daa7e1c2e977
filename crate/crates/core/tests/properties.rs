use proptest::prelude::*;
use spinmoment::matcore::{c64, max_abs_diff, ComplexMatrix, HermitianMatrix};
use spinmoment::reduction::{
    moments_from_coords, ppt_inner_test, reconstruct_rho, renormalized_coords, tau, RenormalizedCoords,
    ReductionOperators, SymmetricTwoQubitState,
};
use spinmoment::sdp::{solve, SdpProblem, SdpStatus};
use spinmoment::spinalg::{axis_angle_rotation, spin_operators, standard_form, validate_algebra};
use spinmoment::SpinNumber;

fn hermitian(n: usize, entries: &[f64]) -> HermitianMatrix {
    let m = ComplexMatrix::from_fn(n, n, |i, k| c64(entries[2 * (i * n + k)], entries[2 * (i * n + k) + 1]));
    HermitianMatrix::from_hermitian_part(&m)
}

fn state3(entries: &[f64]) -> HermitianMatrix {
    let g = ComplexMatrix::from_fn(3, 3, |i, k| c64(entries[2 * (i * 3 + k)], entries[2 * (i * 3 + k) + 1]));
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    HermitianMatrix::from_hermitian_part(&(rho / c64(tr, 0.0)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn algebra_holds_for_every_spin(two_j in 1u32..=40) {
        let r = validate_algebra(&spin_operators(SpinNumber::new(two_j).unwrap()));
        prop_assert!(r.commutator_residual < 1e-9);
        prop_assert!(r.casimir_residual < 1e-9);
    }

    #[test]
    fn coordinates_round_trip(
        two_j in 2u32..=30,
        u in prop::array::uniform3(-1.0f64..1.0),
        v1 in -0.5f64..1.5,
        v2 in -0.5f64..1.5,
    ) {
        let j = SpinNumber::new(two_j).unwrap();
        let c = RenormalizedCoords::new(j, u, [v1, v2, 1.0 - v1 - v2]).unwrap();
        let m = moments_from_coords(&c).unwrap();
        let back = renormalized_coords(&m).unwrap();
        for k in 0..3 {
            prop_assert!((back.u[k] - c.u[k]).abs() < 1e-12);
            prop_assert!((back.v[k] - c.v[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn reconstruction_is_independent_of_j(
        u in prop::array::uniform3(-0.5f64..0.5),
        v1 in -0.2f64..1.0,
        v2 in -0.2f64..1.0,
        two_j in 3u32..=16,
    ) {
        let v = [v1, v2, 1.0 - v1 - v2];
        let rho_at = |t: u32| {
            let j = SpinNumber::new(t).unwrap();
            let ops = ReductionOperators::new(j).unwrap();
            let m = moments_from_coords(&RenormalizedCoords::new(j, u, v).unwrap()).unwrap();
            reconstruct_rho(&m, &ops).unwrap().rho
        };
        prop_assert!(max_abs_diff(rho_at(2).matrix(), rho_at(two_j).matrix()) < 1e-8);
    }

    #[test]
    fn moments_of_reduced_states_reconstruct_them(entries in prop::collection::vec(-1.0f64..1.0, 18), two_j in 2u32..=12) {
        let j = SpinNumber::new(two_j).unwrap();
        let ops = ReductionOperators::new(j).unwrap();
        let rho = SymmetricTwoQubitState::new(state3(&entries)).unwrap();
        let m = ops.moments_of(&rho).unwrap();
        let back = reconstruct_rho(&m, &ops).unwrap();
        prop_assert!(max_abs_diff(back.rho.matrix(), rho.rho.matrix()) < 1e-9);
    }

    #[test]
    fn inner_set_lies_inside_outer_set(entries in prop::collection::vec(-1.0f64..1.0, 18), two_j in 2u32..=20) {
        let j = SpinNumber::new(two_j).unwrap();
        let ops = ReductionOperators::new(j).unwrap();
        let rho = SymmetricTwoQubitState::new(state3(&entries)).unwrap();
        if ppt_inner_test(&rho) {
            prop_assert!(tau(&rho, &ops).tau.min_eigenvalue() >= -1e-9);
        }
    }

    #[test]
    fn standard_form_diagonalizes_and_keeps_the_spectrum(
        axis in prop::array::uniform3(-1.0f64..1.0),
        angle in 0.0f64..3.0,
        v1 in 0.0f64..0.6,
        v2 in 0.0f64..0.4,
    ) {
        prop_assume!(axis.iter().map(|x| x * x).sum::<f64>() > 1e-3);
        let j = SpinNumber::new(6).unwrap();
        let m = moments_from_coords(&RenormalizedCoords::new(j, [0.1, 0.2, 0.0], [v1, v2, 1.0 - v1 - v2]).unwrap()).unwrap();
        let rotated = m.rotated(&axis_angle_rotation(axis, angle));
        let sf = standard_form(&rotated);
        let d = sf.to_moments(j).real_part();
        prop_assert!(d[(0, 1)].abs() < 1e-9 && d[(0, 2)].abs() < 1e-9 && d[(1, 2)].abs() < 1e-9);
        let mut a: Vec<f64> = (0..3).map(|k| d[(k, k)]).collect();
        let mut b: Vec<f64> = (0..3).map(|k| m.real_part()[(k, k)]).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for k in 0..3 {
            prop_assert!((a[k] - b[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn trace_constrained_sdp_finds_the_smallest_eigenvalue(n in 1usize..=5, entries in prop::collection::vec(-1.0f64..1.0, 50)) {
        let c = hermitian(n, &entries);
        let p = SdpProblem::new(c.clone(), vec![(HermitianMatrix::identity(n), 1.0)]).unwrap();
        let s = solve(&p).unwrap();
        prop_assert_eq!(s.status, SdpStatus::Optimal);
        prop_assert!((s.primal_objective - c.min_eigenvalue()).abs() < 1e-7);
        prop_assert!(s.x.min_eigenvalue() >= -1e-9);
        prop_assert!(s.z.min_eigenvalue() >= -1e-9);
    }
}
