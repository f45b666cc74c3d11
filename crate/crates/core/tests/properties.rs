use ecdsim_core::circuit::{closed_form_state, run_circuit, sample_circuit_indexed, state_energy};
use ecdsim_core::correlators::{c1_closed, c2_closed, EtaMode};
use ecdsim_core::fock::{cost_fock, run_circuit_fock};
use ecdsim_core::gaussian::{fidelity_pure, haar_unitary, one_mode_gaussian, random_distributed_squeezed};
use ecdsim_core::linalg::Mat;
use ecdsim_core::rng;
use ecdsim_core::targets::{fock_expand, sample_random_target, WindowRule};
use ecdsim_core::variance::{
    critical_depth, critical_energy, finite_difference_gradient, parameter_shift_gradient_with, variance_bounds,
    Backend, Evaluator,
};
use ecdsim_core::{circuit, DisplacementMatrix, EnsembleSpec, OneModeGaussianParams, SimConfig, TargetSpec, C64};
use proptest::prelude::*;
use rand::RngCore;

fn small_target() -> impl Strategy<Value = TargetSpec> {
    prop_oneof![
        (-1.5f64..1.5, -1.5f64..1.5).prop_map(|(a, b)| TargetSpec::coherent(C64::new(a, b))),
        (-1.0f64..1.0, 0.0f64..3.0, 0.0f64..1.0)
            .prop_map(|(a, t, z)| TargetSpec::OneModeGaussian(OneModeGaussianParams::new(C64::new(a, 0.3), t, z))),
        (0u32..5).prop_map(TargetSpec::Fock),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn branch_weights_are_normalised(seed in any::<u64>(), l in 1usize..7, e in 0.1f64..10.0) {
        let p = sample_circuit_indexed(&EnsembleSpec::new(1, l, e).unwrap(), seed, 0);
        let s = run_circuit(&p, &SimConfig::default()).unwrap();
        prop_assert!((s.weight_norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_agrees_with_sequential(seed in any::<u64>(), m in 1usize..3, l in 1usize..5) {
        let p = sample_circuit_indexed(&EnsembleSpec::new(m, l, 3.0).unwrap(), seed, 1);
        let cfg = SimConfig::default();
        let a = run_circuit(&p, &cfg).unwrap();
        let b = closed_form_state(&p, &cfg).unwrap();
        let worst = a.v.iter().zip(&b.v).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(worst < 1e-12);
    }

    #[test]
    fn costs_are_probabilities_and_backends_agree(seed in any::<u64>(), l in 1usize..5, t in small_target()) {
        let cfg = SimConfig::default();
        let p = sample_circuit_indexed(&EnsembleSpec::new(1, l, 2.0).unwrap(), seed, 2);
        let branch = circuit::overlap(&run_circuit(&p, &cfg).unwrap(), &t, &cfg).unwrap().norm_sqr();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&branch));
        let s = run_circuit_fock(&p, 90, &cfg).unwrap();
        let fock = cost_fock(&s, &fock_expand(&t, 90, 1e-10).unwrap()).unwrap();
        prop_assert!((branch - fock).abs() < 1e-8);
    }

    #[test]
    fn fock_energy_matches_branch_energy(seed in any::<u64>(), l in 1usize..5) {
        let cfg = SimConfig::default();
        let p = sample_circuit_indexed(&EnsembleSpec::new(1, l, 2.0).unwrap(), seed, 3);
        let a = state_energy(&run_circuit(&p, &cfg).unwrap())[0];
        let b = run_circuit_fock(&p, 70, &cfg).unwrap().energy_per_mode()[0];
        prop_assert!((a - b).abs() < 1e-8 * (1.0 + a));
    }

    #[test]
    fn parameter_shift_matches_finite_difference(seed in any::<u64>(), l in 1usize..5, k in 0usize..4, t in small_target()) {
        let cfg = SimConfig::default();
        let p = sample_circuit_indexed(&EnsembleSpec::new(1, l, 1.5).unwrap(), seed, 4);
        let k = k % l;
        for backend in [Backend::Branch, Backend::Fock { cutoff: Some(50) }] {
            let ev = Evaluator::new(&t, backend, 1.5, &cfg).unwrap();
            let ps = parameter_shift_gradient_with(&p, &ev, k).unwrap();
            let fd = finite_difference_gradient(&p, &ev, k, 1e-5).unwrap();
            prop_assert!((ps - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn displacement_symmetry_and_inverse(re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let b = C64::new(re, im);
        let d = DisplacementMatrix::new(b, 60);
        let di = DisplacementMatrix::new(-b, 60);
        for m in 0..15 {
            for n in 0..15 {
                prop_assert!((di.at(m, n) - d.at(n, m).conj()).norm() < 1e-12);
                let prod: C64 = (0..=60).map(|j| d.at(m, j) * di.at(j, n)).sum();
                let id = if m == n { 1.0 } else { 0.0 };
                prop_assert!((prod - id).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn passive_mixing_conserves_energy_and_purity(seed in any::<u64>(), m in 1usize..6, r in 0.0f64..2.0) {
        let g = random_distributed_squeezed(m, r, seed).unwrap();
        let s = r.sinh();
        prop_assert!((g.total_energy() - s * s).abs() < 1e-9 * (1.0 + s * s));
        prop_assert!(g.purity_defect() < 1e-8 * (1.0 + s * s));
    }

    #[test]
    fn gaussian_fidelity_is_symmetric_and_bounded(a in -1.0f64..1.0, t in 0.0f64..3.0, z in 0.0f64..1.5, b in -1.0f64..1.0) {
        let x = one_mode_gaussian(&OneModeGaussianParams::new(C64::new(a, 0.2), t, z));
        let y = one_mode_gaussian(&OneModeGaussianParams::new(C64::new(b, -0.1), 0.5, 0.3));
        let f = fidelity_pure(&x, &y).unwrap();
        prop_assert!((f - fidelity_pure(&y, &x).unwrap()).abs() < 1e-12);
        prop_assert!(f > 0.0 && f <= 1.0 + 1e-12);
        prop_assert!((fidelity_pure(&x, &x).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn one_mode_parameters_round_trip(a in -2.0f64..2.0, b in -2.0f64..2.0, t in -1.5f64..1.5, z in 0.05f64..2.0) {
        let p = OneModeGaussianParams::new(C64::new(a, b), t, z);
        let q = one_mode_gaussian(&p).one_mode_params().unwrap();
        prop_assert!((q.gamma - p.gamma).norm() < 1e-9);
        prop_assert!((q.zeta - p.zeta).abs() < 1e-9);
        let dt = (q.tau - p.tau).rem_euclid(std::f64::consts::PI);
        prop_assert!(dt.min(std::f64::consts::PI - dt) < 1e-8);
    }

    #[test]
    fn expansions_are_sub_normalised(t in small_target(), cutoff in 1usize..40) {
        let e = fock_expand(&t, cutoff, 1.0).unwrap();
        prop_assert!(e.norm_sqr() <= 1.0 + 1e-12);
        prop_assert!(e.leak >= -1e-12);
    }

    #[test]
    fn random_targets_land_in_window(seed in any::<u64>(), et in 0.5f64..5.0) {
        let cutoff = (2.0 * et).ceil() as usize;
        let t = sample_random_target(1, et, 0.1, cutoff, seed, WindowRule::Mean).unwrap();
        let e = t.energy_per_mode()[0];
        prop_assert!((e - et).abs() <= 0.1 + 1e-12);
        prop_assert!((t.norm_sqr() - 1.0).abs() < 1e-12);
        let again = sample_random_target(1, et, 0.1, cutoff, seed, WindowRule::Mean).unwrap();
        prop_assert_eq!(t.coeffs, again.coeffs);
    }

    #[test]
    fn bounds_are_ordered(l in 2usize..12, e in 1.0f64..500.0, t in small_target()) {
        let b = variance_bounds(1, l, &t, e).unwrap();
        prop_assert!(b.lower <= b.upper);
        prop_assert!(b.c2_min <= b.c2_max);
    }

    #[test]
    fn critical_depth_inverts_critical_energy(l in 0.0f64..40.0, n in 0u32..10) {
        for t in [TargetSpec::vacuum(), TargetSpec::Fock(n)] {
            for eta in [EtaMode::Lower, EtaMode::Upper] {
                let e = critical_energy(l, &t, eta).unwrap();
                prop_assert!((critical_depth(e, &t, eta).unwrap() - l).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fock_c2_sandwich_is_ordered(n in 0u32..12, e in 1.0f64..1000.0, z in 0.05f64..0.95) {
        let lo = c2_closed(&TargetSpec::Fock(n), e, &[z], EtaMode::Lower).unwrap();
        let hi = c2_closed(&TargetSpec::Fock(n), e, &[z], EtaMode::Upper).unwrap();
        prop_assert!(lo <= hi && lo > 0.0);
        prop_assert!(c1_closed(&TargetSpec::Fock(n), e).unwrap() > 0.0);
    }

    #[test]
    fn lu_inverse_and_determinant(seed in any::<u64>(), n in 1usize..7) {
        let mut r = rng::stream(seed, 99, 0);
        let mut data: Vec<f64> = (0..n * n).map(|_| rng::normal(&mut r)).collect();
        for i in 0..n { data[i * n + i] += 3.0; }
        let a = Mat::from_rows(n, data);
        let prod = a.mul(&a.inverse().unwrap());
        prop_assert!(prod.sub(&Mat::identity(n)).max_abs() < 1e-10);
        prop_assert!((a.mul(&a).det() - a.det() * a.det()).abs() < 1e-8 * (1.0 + a.det() * a.det()));
    }

    #[test]
    fn haar_unitaries_are_unitary(seed in any::<u64>(), n in 1usize..8) {
        let mut r = rng::stream(seed, 7, 0);
        let u = haar_unitary(n, &mut r);
        for i in 0..n {
            for j in 0..n {
                let dot: C64 = (0..n).map(|k| u.at(k, i).conj() * u.at(k, j)).sum();
                let id = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - id).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct(seed in any::<u64>(), d in 0u64..8, i in 0u64..1000) {
        let a = rng::stream(seed, d, i).next_u64();
        prop_assert_eq!(a, rng::stream(seed, d, i).next_u64());
        prop_assert_ne!(a, rng::stream(seed, d, i + 1).next_u64());
        prop_assert_ne!(a, rng::stream(seed, d + 1, i).next_u64());
    }
}
