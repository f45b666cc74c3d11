//! Quick oracle and invariant checks, run by the `validate` subcommand.
//!
//! Each check is small enough for the whole suite to finish in seconds.
//! The full-scale criteria live in the core crate's acceptance test.

use ecdsim_core::circuit::{closed_form_state, overlap, run_circuit, sample_circuit_indexed, state_energy};
use ecdsim_core::correlators::{c1_closed, c2_closed, c3_closed_gaussian, hyp2f1_eta, mc_correlator, CorrelatorKind, EtaMode};
use ecdsim_core::fock::{cost_fock, run_circuit_fock, DisplacementMatrix};
use ecdsim_core::gaussian::tmsv;
use ecdsim_core::stats::{mean, std_error};
use ecdsim_core::targets::fock_expand;
use ecdsim_core::variance::{
    agreement_counts, finite_difference_gradient, full_support_probability, mc_gradients,
    parameter_shift_gradient_with, variance_bounds, Backend, Evaluator,
};
use ecdsim_core::{EnsembleSpec, SimConfig, TargetSpec, C64};

use crate::output::Table;

type Check = (&'static str, fn(u64) -> Result<String, String>);

fn ensure(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: ecdsim_core::Error) -> String {
    e.to_string()
}

fn closed_form_matches_sequential(seed: u64) -> Result<String, String> {
    let cfg = SimConfig::default();
    let mut worst = 0.0f64;
    for i in 0..20 {
        let spec = EnsembleSpec::new(1 + (i % 2) as usize, 1 + (i % 4) as usize, 3.0).map_err(err)?;
        let p = sample_circuit_indexed(&spec, seed, i);
        let (a, b) = (run_circuit(&p, &cfg).map_err(err)?, closed_form_state(&p, &cfg).map_err(err)?);
        for (x, y) in a.v.iter().zip(&b.v) {
            worst = worst.max((x - y).norm());
        }
        worst = worst.max((a.weight_norm_sqr() - 1.0).abs());
    }
    ensure(worst < 1e-10, format!("max deviation {worst:.1e}"))
}

fn backends_agree(seed: u64) -> Result<String, String> {
    let cfg = SimConfig::default();
    let t = TargetSpec::dsv(C64::new(0.7, 0.2), 0.5);
    let mut worst = 0.0f64;
    for i in 0..5 {
        let p = sample_circuit_indexed(&EnsembleSpec::new(1, 3, 2.0).map_err(err)?, seed, i);
        let b = overlap(&run_circuit(&p, &cfg).map_err(err)?, &t, &cfg).map_err(err)?.norm_sqr();
        let f = cost_fock(&run_circuit_fock(&p, 80, &cfg).map_err(err)?, &fock_expand(&t, 80, 1e-12).map_err(err)?)
            .map_err(err)?;
        worst = worst.max((b - f).abs());
    }
    ensure(worst < 1e-6, format!("max |Δcost| {worst:.1e}"))
}

fn shift_rule_matches_fd(seed: u64) -> Result<String, String> {
    let cfg = SimConfig::default();
    let t = TargetSpec::coherent(C64::new(0.4, -0.3));
    let ev = Evaluator::new(&t, Backend::Branch, 2.0, &cfg).map_err(err)?;
    let mut worst = 0.0f64;
    for i in 0..10u64 {
        let p = sample_circuit_indexed(&EnsembleSpec::new(1, 4, 2.0).map_err(err)?, seed, i);
        let k = i as usize % 4;
        let a = parameter_shift_gradient_with(&p, &ev, k).map_err(err)?;
        let b = finite_difference_gradient(&p, &ev, k, 1e-5).map_err(err)?;
        worst = worst.max((a - b).abs());
    }
    ensure(worst < 1e-6, format!("max |shift − FD| {worst:.1e}"))
}

fn displacement_unitary(_: u64) -> Result<String, String> {
    let d = DisplacementMatrix::new(C64::new(1.2, -0.8), 80);
    let mut worst = 0.0f64;
    for n in 0..=20 {
        let norm: f64 = (0..d.dim()).map(|m| d.at(m, n).norm_sqr()).sum();
        worst = worst.max((norm - 1.0).abs());
    }
    ensure(worst < 1e-10, format!("max column-norm defect {worst:.1e}"))
}

fn vacuum_correlators(_: u64) -> Result<String, String> {
    let v = TargetSpec::vacuum();
    let c1 = c1_closed(&v, 1.0).map_err(err)?;
    let c2 = c2_closed(&v, 1.0, &[0.25], EtaMode::Upper).map_err(err)?;
    let c3 = c3_closed_gaussian(&v, 1.0, &[1.0 / 3.0], &[1.0 / 3.0]).map_err(err)?;
    let dev = (c1 - 1.0 / 3.0).abs().max((c2 - 1.0 / (1.5 * 2.5)).abs()).max((c3 - 27.0 / 125.0).abs());
    ensure(dev < 1e-12, format!("C1 {c1:.6}, C2 {c2:.6}, C3 {c3:.6}"))
}

fn eta_values(_: u64) -> Result<String, String> {
    let dev = [(1u32, 0.5), (3, 0.3125), (8, 0.196380615234375)]
        .iter()
        .map(|&(n, want)| (hyp2f1_eta(n) - want).abs())
        .fold(0.0, f64::max);
    ensure(dev < 1e-14, format!("max deviation {dev:.1e}"))
}

fn tmsv_paths_agree(_: u64) -> Result<String, String> {
    let mut worst = 0.0f64;
    for zeta in [0.3, 1.2] {
        for e in [1.0, 100.0] {
            let (a, b) = (TargetSpec::Tmsv(zeta), TargetSpec::MultiModeGaussian(tmsv(zeta)));
            let (x, y) = (c1_closed(&a, e).map_err(err)?, c1_closed(&b, e).map_err(err)?);
            worst = worst.max(((x - y) / x).abs());
        }
    }
    ensure(worst < 1e-10, format!("max relative difference {worst:.1e}"))
}

fn mc_matches_closed_form(seed: u64) -> Result<String, String> {
    let t = TargetSpec::coherent(C64::new(1.0, 0.5));
    let m = mc_correlator(CorrelatorKind::C1, &t, 2.0, &[], &[], 20_000, seed).map_err(err)?;
    let c = c1_closed(&t, 2.0).map_err(err)?;
    ensure((m.value - c).abs() <= 4.0 * m.std_error, format!("MC {:.5} ± {:.1e} vs {c:.5}", m.value, m.std_error))
}

fn energy_regularized(seed: u64) -> Result<String, String> {
    let cfg = SimConfig::default();
    let spec = EnsembleSpec::new(1, 3, 4.0).map_err(err)?;
    let mut es = Vec::new();
    for i in 0..2000 {
        es.push(state_energy(&run_circuit(&sample_circuit_indexed(&spec, seed, i), &cfg).map_err(err)?)[0]);
    }
    let (m, se) = (mean(&es), std_error(&es));
    ensure((m - 4.0).abs() <= 4.0 * se, format!("mean energy {m:.3} ± {se:.3} for E = 4"))
}

fn gradient_mean_zero(seed: u64) -> Result<String, String> {
    let spec = EnsembleSpec::new(1, 4, 5.0).map_err(err)?;
    let g = mc_gradients(&spec, &TargetSpec::vacuum(), 1, 2000, Backend::Branch, seed, &SimConfig::default())
        .map_err(err)?;
    let (m, se) = (mean(&g), std_error(&g));
    ensure(m.abs() <= 4.0 * se, format!("mean {m:.2e} ± {se:.1e}"))
}

fn bounds_ordered(_: u64) -> Result<String, String> {
    for t in [TargetSpec::vacuum(), TargetSpec::Fock(4)] {
        for (l, e) in [(3, 2.0), (8, 50.0)] {
            let b = variance_bounds(1, l, &t, e).map_err(err)?;
            if !(0.0 < b.lower && b.lower <= b.upper) {
                return Err(format!("{} L={l} E={e}: [{:.3e}, {:.3e}]", t.family(), b.lower, b.upper));
            }
        }
    }
    Ok("0 < lower ≤ upper on 4 points".into())
}

fn sign_combinatorics(_: u64) -> Result<String, String> {
    let (m, l) = (2usize, 3usize);
    let n = m * l;
    let vec_of = |bits: usize| -> Vec<i8> { (0..n).map(|k| if bits >> k & 1 == 1 { 1 } else { -1 }).collect() };
    let (mut fav, mut total) = (0u128, 0u128);
    for a in 0..1usize << n {
        for b in 0..1usize << n {
            if b == a || b == !a & ((1 << n) - 1) {
                continue;
            }
            total += 1;
            fav += agreement_counts(&vec_of(a), &vec_of(b), m).iter().all(|&c| c > 0 && c < l) as u128;
        }
    }
    let (num, den) = full_support_probability(m as u32, l as u32);
    ensure(fav * den == num * total, format!("{fav}/{total} vs {num}/{den}"))
}

const CHECKS: &[Check] = &[
    ("closed-form branch weights", closed_form_matches_sequential),
    ("branch and Fock backends agree", backends_agree),
    ("shift rule matches finite differences", shift_rule_matches_fd),
    ("displacement matrix unitary", displacement_unitary),
    ("vacuum correlators", vacuum_correlators),
    ("η reference values", eta_values),
    ("TMSV closed-form paths agree", tmsv_paths_agree),
    ("Monte Carlo C1 matches closed form", mc_matches_closed_form),
    ("energy regularization", energy_regularized),
    ("gradient mean is zero", gradient_mean_zero),
    ("variance bounds ordered", bounds_ordered),
    ("sign-vector combinatorics", sign_combinatorics),
];

/// Runs every check; a failed check is recorded, not raised.
pub fn run(seed: u64) -> Table {
    let mut t = Table::new(&["check", "status", "detail"]);
    for (name, f) in CHECKS {
        let (status, detail) = match f(seed) {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        t.push(vec![(*name).into(), status.into(), detail.as_str().into()]);
    }
    t
}

pub fn failures(t: &Table) -> usize {
    t.column("status").map_or(0, |c| c.iter().filter(|s| **s == "FAIL".into()).count())
}
