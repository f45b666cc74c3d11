use ecdsim_core::circuit::{run_circuit, sample_circuit_indexed};
use ecdsim_core::correlators::{c2_fock_full, EtaMode};
use ecdsim_core::error::ErrorClass;
use ecdsim_core::fock::run_circuit_fock;
use ecdsim_core::stats::{linear_fit, log_log_slope, log_space};
use ecdsim_core::targets::{sample_random_target, WindowRule};
use ecdsim_core::trainer::{median_final_infidelity, seed_average, train, train_seed, Optimizer, TrainConfig};
use ecdsim_core::variance::{
    c1_coefficient, exact_c2_coefficient, lower_c2_coefficient, mc_gradient_variance, upper_c2_coefficient,
    variance_bounds_with_budget, Backend,
};
use ecdsim_core::{EnsembleSpec, Error, SimConfig, TargetSpec};

fn short_run(backend: Backend) -> TrainConfig {
    let mut c = TrainConfig::new(EnsembleSpec::new(1, 4, 1.0).unwrap(), TargetSpec::Fock(1));
    c.steps = 40;
    c.learning_rate = 0.05;
    c.backend = backend;
    c.seeds = vec![3, 4];
    c
}

#[test]
fn training_lowers_infidelity_on_both_backends() {
    let sim = SimConfig::default();
    for backend in [Backend::Branch, Backend::Fock { cutoff: None }] {
        let hs = train(&short_run(backend), &sim).unwrap();
        for h in &hs {
            assert_eq!(h.records.len(), 41);
            assert!(h.final_infidelity() < h.records[0].infidelity, "{backend:?} seed {}", h.seed);
        }
        assert_eq!(hs[0].cutoff.is_some(), matches!(backend, Backend::Fock { .. }));
    }
}

#[test]
fn backends_train_the_same_trajectory() {
    let sim = SimConfig::default();
    let a = train_seed(&short_run(Backend::Branch), 5, &sim).unwrap();
    let b = train_seed(&short_run(Backend::Fock { cutoff: Some(60) }), 5, &sim).unwrap();
    for (x, y) in a.records.iter().zip(&b.records) {
        assert!((x.infidelity - y.infidelity).abs() < 1e-6);
    }
}

#[test]
fn training_is_deterministic() {
    let sim = SimConfig::default();
    let cfg = short_run(Backend::Branch);
    assert_eq!(train(&cfg, &sim).unwrap(), train(&cfg, &sim).unwrap());
}

#[test]
fn frozen_displacements_stay_put() {
    let mut cfg = short_run(Backend::Branch);
    cfg.freeze_beta = true;
    cfg.optimizer = Optimizer::PlainSgd;
    let h = train_seed(&cfg, 9, &SimConfig::default()).unwrap();
    assert_eq!(h.initial.betas, h.final_params.betas);
    assert_ne!(h.initial.thetas, h.final_params.thetas);
    assert_eq!(h.circuit_energy_drift(), 0.0);
}

#[test]
fn seed_summaries() {
    let hs = train(&short_run(Backend::Branch), &SimConfig::default()).unwrap();
    let avg = seed_average(&hs);
    let want = 0.5 * (hs[0].records[7].infidelity + hs[1].records[7].infidelity);
    assert!((avg[7].infidelity - want).abs() < 1e-15);
    let med = median_final_infidelity(&hs);
    assert!((med - 0.5 * (hs[0].final_infidelity() + hs[1].final_infidelity())).abs() < 1e-15);
}

#[test]
fn training_config_is_validated() {
    let mut cfg = short_run(Backend::Branch);
    cfg.steps = 0;
    assert!(matches!(cfg.validate(), Err(Error::Invalid(_))));
    let mut cfg = short_run(Backend::Branch);
    cfg.target = TargetSpec::Tmsv(0.3);
    assert!(cfg.validate().is_err());
}

#[test]
fn capacity_errors_are_reported() {
    let p = sample_circuit_indexed(&EnsembleSpec::new(1, 8, 2.0).unwrap(), 1, 0);
    let tight = SimConfig { branch_budget: 16, ..SimConfig::default() };
    let e = run_circuit(&p, &tight).unwrap_err();
    assert!(matches!(e, Error::BranchBudget { needed: 128, limit: 16 }));
    assert_eq!(e.class(), ErrorClass::Capacity);

    let loud = sample_circuit_indexed(&EnsembleSpec::new(1, 3, 30.0).unwrap(), 1, 0);
    let e = run_circuit_fock(&loud, 5, &SimConfig::default()).unwrap_err();
    assert!(matches!(e, Error::Leak { .. }));

    let e = variance_bounds_with_budget(3, 12, &TargetSpec::Product(vec![TargetSpec::vacuum(); 3]), 5.0, 100);
    assert!(matches!(e, Err(Error::ScanBudget { needed: 1331, limit: 100 })));

    let e = sample_random_target(1, 1.0, 1e-9, 1, 2, WindowRule::Mean).unwrap_err();
    assert!(matches!(e, Error::InfeasibleWindow(_)));
}

#[test]
fn sample_errors_carry_their_index() {
    let spec = EnsembleSpec::new(1, 3, 40.0).unwrap();
    let e = mc_gradient_variance(&spec, &TargetSpec::vacuum(), 0, 50, Backend::Fock { cutoff: Some(4) }, 1, &SimConfig::default())
        .unwrap_err();
    match e {
        Error::AtSample { source, .. } => assert!(matches!(*source, Error::Leak { .. })),
        other => panic!("{other:?}"),
    }
}

#[test]
fn invalid_inputs_are_config_errors() {
    for e in [
        EnsembleSpec::new(0, 3, 1.0).unwrap_err(),
        EnsembleSpec::new(1, 3, -1.0).unwrap_err(),
        mc_gradient_variance(&EnsembleSpec::new(1, 2, 1.0).unwrap(), &TargetSpec::vacuum(), 0, 10, Backend::Branch, 0, &SimConfig::default())
            .unwrap_err(),
    ] {
        assert_eq!(e.class(), ErrorClass::Config, "{e}");
    }
}

#[test]
fn c2_coefficients_bracket_the_exact_one() {
    for k in 1..40 {
        let (lo, ex, hi) = (lower_c2_coefficient(k), exact_c2_coefficient(k), upper_c2_coefficient(k));
        assert!(lo <= ex + 1e-15 && ex <= hi + 1e-15, "K={k}: {lo} {ex} {hi}");
    }
    // K = 1: only r = s and r = −s exist, so the C2 weight vanishes
    assert!(exact_c2_coefficient(1).abs() < 1e-15);
    assert!((c1_coefficient(2) - 0.1875).abs() < 1e-15);
}

#[test]
fn fock_c2_is_continuous_at_half() {
    for n in [0u32, 1, 3, 8] {
        let mid = c2_fock_full(n, 12.0, 0.5, EtaMode::Upper);
        for d in [1e-5, 1e-7, 1e-9] {
            for z in [0.5 - d, 0.5 + d] {
                let v = c2_fock_full(n, 12.0, z, EtaMode::Upper);
                assert!(((v - mid) / mid).abs() < 1e-4, "n={n} z={z}: {v} vs {mid}");
            }
        }
    }
}

#[test]
fn fits_recover_exact_lines() {
    let x = [1.0, 2.0, 4.0, 7.0];
    let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
    let (a, b) = linear_fit(&x, &y);
    assert!((a - 3.0).abs() < 1e-14 && (b + 0.5).abs() < 1e-14);
    let es = log_space(10.0, 1000.0, 7);
    assert_eq!((es[0], es[6]), (10.0, 1000.0));
    let vs: Vec<f64> = es.iter().map(|e| 2.0 / (e * e)).collect();
    assert!((log_log_slope(&es, &vs) + 2.0).abs() < 1e-12);
}
