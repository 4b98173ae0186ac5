//! Acceptance gate for the toolkit: twelve end-to-end checks with pinned
//! tolerances. Each test prints a single PASS/FAIL line with its measured
//! values (visible with `cargo test --test acceptance -- --nocapture`) and
//! then asserts it. The full accuracy ladder (check 02) runs for many
//! minutes and is gated behind `--ignored`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use slowfast_core::averaging::{from_improved, to_improved};
use slowfast_core::integrate::{
    averaged_field, exact_field, improved_field, integrate, integrate_to_event, pack_phase,
    unpack_phase, EventDirection, EventSpec, IntegratorConfig,
};
use slowfast_core::model::{
    benchmark_system, benchmark_system_scaled, closed_form_pseudophase, CriticalKind, PhaseState,
    SystemSpec,
};
use slowfast_core::resonance::{invert_pseudophase, pseudophase, pseudophase_theory, Inversion};
use slowfast_experiments::analysis::resonance_analysis;
use slowfast_experiments::sweep::{
    initial_action_for_invariant, run_single, run_table1, SweepConfig, TableRow,
};
use slowfast_experiments::uniformity::{run_uniformity, UniformityConfig, UniformityMode};
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

fn verdict(number: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {number:02} {name}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{name}: {detail}");
}

/// RMSE reference ladder for eps = 0.001 * 0.5^k, k = 1..10.
const REFERENCE_RMSE: [f64; 10] = [
    0.0013758, 0.0009735, 0.0007024, 0.0004924, 0.0003457, 0.0002458, 0.0001735, 0.0001227,
    0.0000876, 0.0000621,
];

fn ladder(k_min: i32, k_max: i32) -> Vec<f64> {
    (k_min..=k_max).map(|k| 1e-3 * 0.5_f64.powi(k)).collect()
}

fn rows_within_quarter_of_reference(rows: &[TableRow]) -> (bool, String) {
    let mut pass = true;
    let mut detail = String::new();
    for (row, &pin) in rows.iter().zip(&REFERENCE_RMSE) {
        let rel = (row.rmse - pin) / pin;
        pass &= rel.abs() <= 0.25 && row.failures == 0;
        let _ = write!(detail, "{:.2e}:{:+.0}% ", row.epsilon, 100.0 * rel);
    }
    (pass, detail)
}

#[test]
fn accuracy_table_subset_matches_reference_rows() {
    let sys = benchmark_system();
    let cfg = SweepConfig { epsilon_list: ladder(1, 5), ..SweepConfig::default() };
    let table = run_table1(&sys, &cfg).unwrap();
    let (pass, detail) = rows_within_quarter_of_reference(&table.rows);
    verdict(
        1,
        "accuracy table k=1..5, 250 phases, RMSE within 25% of reference",
        pass && table.rows.len() == 5,
        &detail,
    );
}

#[test]
#[ignore = "full ladder k=1..10 at 250 phases runs for many minutes"]
fn accuracy_table_full_matches_reference_rows_and_fit() {
    let sys = benchmark_system();
    let cfg = SweepConfig { epsilon_list: ladder(1, 10), ..SweepConfig::default() };
    let table = run_table1(&sys, &cfg).unwrap();
    let (mut pass, mut detail) = rows_within_quarter_of_reference(&table.rows);
    pass &= table.rows.len() == 10;
    match &table.fit {
        Some(fit) => {
            pass &= (0.45..=0.55).contains(&fit.slope);
            let _ = write!(detail, "fit slope {:.5}", fit.slope);
        }
        None => {
            pass = false;
            detail.push_str("fit missing");
        }
    }
    verdict(
        2,
        "accuracy table k=1..10 within 25% of reference; fit slope in [0.45, 0.55]",
        pass,
        &detail,
    );
}

#[test]
fn rmse_shrinks_like_square_root_of_epsilon() {
    let sys = benchmark_system();
    let cfg = SweepConfig {
        phi0_count: 16,
        epsilon_list: ladder(1, 10),
        ..SweepConfig::default()
    };
    let table = run_table1(&sys, &cfg).unwrap();
    let mut good = 0;
    let mut detail = String::from("ratios ");
    for pair in table.rows.windows(2) {
        let ratio = pair[0].rmse / pair[1].rmse;
        if (1.2..=1.7).contains(&ratio) {
            good += 1;
        }
        let _ = write!(detail, "{ratio:.3} ");
    }
    let _ = write!(detail, "({good}/9 in [1.2, 1.7])");
    verdict(3, "adjacent RMSE ratios near sqrt(2) for >= 7 of 9 pairs", good >= 7, &detail);
}

#[test]
fn quadrature_prediction_agrees_with_closed_form() {
    let sys = benchmark_system();
    let mut rng = ChaCha12Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let j0 = 0.5 + 1.5 * rng.gen::<f64>();
        let phi0 = TAU * rng.gen::<f64>();
        let eps = 2e-4 + 8e-4 * rng.gen::<f64>();
        let i0 = initial_action_for_invariant(&sys, j0, phi0, &[0.0], &[0.0], eps).unwrap();
        let state = PhaseState::new(i0, phi0, vec![0.0], vec![0.0], eps);
        let theory = pseudophase_theory(&sys, &state).unwrap();
        let closed = closed_form_pseudophase(j0, phi0, eps);
        worst = worst.max((theory - closed).abs());
    }
    verdict(
        4,
        "quadrature prediction vs closed form within 1e-8 on 20 random draws",
        worst < 1e-8,
        &format!("worst gap {worst:.2e}"),
    );
}

#[test]
fn conservation_suite_holds_across_flavors() {
    let sys = benchmark_system();
    let eps = 1e-3;
    let config = IntegratorConfig::default();

    let i0 = initial_action_for_invariant(&sys, 1.0, 0.0, &[0.0], &[0.0], eps).unwrap();
    let state0 = PhaseState::new(i0, 0.0, vec![0.0], vec![0.0], eps);
    let record = run_single(&sys, &state0, 10.0, &config).unwrap();

    let avg = integrate(&averaged_field(&sys), &[1.0, 0.0, 0.0], 0.0, 1.0, &config).unwrap();
    let h0_start = sys.h0.value(1.0, &[0.0], &[0.0]);
    let mut h0_drift: f64 = 0.0;
    let mut action_drift: f64 = 0.0;
    for j in 0..=200 {
        let s = avg.query(j as f64 / 200.0);
        action_drift = action_drift.max((s[0] - 1.0).abs());
        h0_drift = h0_drift.max((sys.h0.value(s[0], &s[1..2], &s[2..3]) - h0_start).abs());
    }

    let imp =
        integrate(&improved_field(&sys, eps, 1.0), &[0.0, 0.0, 0.0], 0.0, 1.0, &config).unwrap();
    let ha_start = sys.improved_hamiltonian(1.0, &[0.0], &[0.0], eps);
    let mut ha_drift: f64 = 0.0;
    for j in 0..=200 {
        let s = imp.query(j as f64 / 200.0);
        ha_drift =
            ha_drift.max((sys.improved_hamiltonian(1.0, &s[0..1], &s[1..2], eps) - ha_start).abs());
    }

    let pass =
        record.h_drift < 1e-9 && h0_drift < 1e-10 && action_drift < 1e-10 && ha_drift < 1e-10;
    verdict(
        5,
        "exact H drift < 1e-9; averaged H0/action and improved Hamiltonian < 1e-10 over one slow unit",
        pass,
        &format!(
            "exact {:.1e}, averaged H0 {h0_drift:.1e}, averaged action {action_drift:.1e}, improved {ha_drift:.1e}",
            record.h_drift
        ),
    );
}

#[test]
fn averaging_transform_round_trips_and_is_identity_at_zero() {
    let sys = benchmark_system();
    let mut rng = ChaCha12Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let action = 0.5 + 1.5 * rng.gen::<f64>();
        let phase = TAU * rng.gen::<f64>();
        let y = rng.gen::<f64>() - 0.5;
        let x = rng.gen::<f64>() - 0.5;
        let eps = 1e-3 * rng.gen::<f64>();
        let state = PhaseState::new(action, phase, vec![y], vec![x], eps);
        let ist = to_improved(&sys, &state).unwrap();
        let back = from_improved(&sys, &ist, eps).unwrap();
        worst = worst
            .max((back.action - action).abs())
            .max((back.phase - phase).abs())
            .max((back.y[0] - y).abs())
            .max((back.x[0] - x).abs());
    }

    let zero = PhaseState::new(1.3, 2.0, vec![0.2], vec![-0.3], 0.0);
    let ist = to_improved(&sys, &zero).unwrap();
    let back = from_improved(&sys, &ist, 0.0).unwrap();
    let identity = ist.j == zero.action
        && ist.psi == zero.phase
        && ist.eta == zero.y
        && ist.xi == zero.x
        && back == zero;

    verdict(
        6,
        "transform round-trip within 1e-12 on 100 random states; exact identity at eps=0",
        worst < 1e-12 && identity,
        &format!("worst round-trip deviation {worst:.2e}; zero-eps identity exact: {identity}"),
    );
}

fn scaling_probe(sys: &SystemSpec, eps: f64) -> (f64, f64) {
    let state0 = PhaseState::new(1.0, 1.0, vec![0.0], vec![0.0], eps);
    let ist0 = to_improved(sys, &state0).unwrap();
    let problem = exact_field(sys, eps);
    let event = EventSpec::new(EventDirection::Decreasing, |_t, s: &[f64]| {
        sys.omega0(s[0], &s[2..3], &s[3..4]) - 0.5
    });
    let (t_stop, _, exact) = integrate_to_event(
        &problem,
        &pack_phase(&state0),
        0.0,
        2.0 / eps,
        &event,
        &IntegratorConfig::default(),
    )
    .unwrap();
    let slow = integrate(
        &improved_field(sys, eps, ist0.j),
        &[ist0.eta[0], ist0.xi[0], 0.0],
        0.0,
        eps * t_stop,
        &IntegratorConfig::default(),
    )
    .unwrap();

    let mut j_dev: f64 = 0.0;
    let mut y_dev: f64 = 0.0;
    for (i, &t) in exact.times().iter().enumerate() {
        let s = exact.state(i);
        let j = to_improved(sys, &unpack_phase(s, 1, eps)).unwrap().j;
        j_dev = j_dev.max((j - ist0.j).abs());
        y_dev = y_dev.max((s[2] - slow.query(eps * t)[0]).abs());
    }
    (j_dev, y_dev)
}

#[test]
fn invariant_and_slow_error_shrink_quadratically() {
    let sys = benchmark_system();
    let (j_coarse, y_coarse) = scaling_probe(&sys, 2e-3);
    let (j_fine, y_fine) = scaling_probe(&sys, 1e-3);
    let j_ratio = j_coarse / j_fine;
    let y_ratio = y_coarse / y_fine;
    let pass = (3.0..=5.5).contains(&j_ratio) && (3.0..=5.5).contains(&y_ratio);
    verdict(
        7,
        "halving eps shrinks sup|J - J0| and sup|y - eta| by a factor in [3, 5.5]",
        pass,
        &format!("invariant ratio {j_ratio:.2}, slow-variable ratio {y_ratio:.2}"),
    );
}

#[test]
fn ensemble_pseudophase_is_uniform_on_the_circle() {
    let sys = benchmark_system();
    let cfg = UniformityConfig { n: 2000, seed: 8, ..UniformityConfig::default() };
    let report = run_uniformity(&sys, &cfg).unwrap();
    let dropped_ok = (report.dropped as f64) < 0.01 * report.n_requested as f64;
    verdict(
        8,
        "ensemble of 2000 at eps=1e-4: KS distance below the 5% critical value 0.0364",
        report.ks_statistic < 0.0364 && dropped_ok,
        &format!(
            "ks {:.4} over {} samples, dropped {}",
            report.ks_statistic, report.n_used, report.dropped
        ),
    );
}

#[test]
fn sweep_fraction_matches_interval_length() {
    let sys = benchmark_system();
    let cfg = UniformityConfig {
        mode: UniformityMode::EpsilonSweep,
        n: 2000,
        seed: 9,
        interval: (0.2, 0.7),
        ..UniformityConfig::default()
    };
    let report = run_uniformity(&sys, &cfg).unwrap();
    let gap = (report.fraction_in_interval - 0.5).abs();
    verdict(
        9,
        "2000 random strengths: fraction landing in (0.2, 0.7) within 0.5 +/- 0.05",
        gap <= 0.05,
        &format!(
            "fraction {:.4}, dropped {}",
            report.fraction_in_interval, report.dropped
        ),
    );
}

/// Plain interval-halving root finder, independent of the library's own.
fn bisect_oracle(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (g(lo) <= 0.0) == (g(mid) <= 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn surface_analysis_reports_conditions_and_critical_points() {
    let plain =
        resonance_analysis(&benchmark_system(), 1.0, &[0.0], &[0.0], true, 1e-3, 1.0).unwrap();
    let plain_ok = plain.portrait.critical_points.is_empty()
        && !plain.portrait.oscillatory
        && plain.min_clearance == 0.5
        && plain.alpha == 1.0
        && (plain.torque - 2.0).abs() < 1e-9
        && plain.conditions.all_ok()
        && (plain.tau_star.unwrap() - 1.0).abs() < 1e-9;

    let scaled =
        resonance_analysis(&benchmark_system_scaled(2.0), 1.0, &[0.5], &[1.0], false, 1e-3, 1.0)
            .unwrap();
    // Independent oracle: the potential slope here is 2 + 3 cos(phi).
    let saddle_ref = bisect_oracle(|p| 2.0 + 3.0 * p.cos(), PI / 2.0, PI);
    let center_ref = bisect_oracle(|p| 2.0 + 3.0 * p.cos(), PI, 1.5 * PI);
    let pts = &scaled.portrait.critical_points;
    let scaled_ok = pts.len() == 2
        && pts[0].kind == CriticalKind::Maximum
        && pts[1].kind == CriticalKind::Minimum
        && (pts[0].phase - saddle_ref).abs() < 1e-9
        && (pts[1].phase - center_ref).abs() < 1e-9;

    let detail = format!(
        "monotone case: clearance {}, alpha {}, torque {:.12}, tau* {:.9}; oscillatory case: |saddle - oracle| {:.1e}, |center - oracle| {:.1e}",
        plain.min_clearance,
        plain.alpha,
        plain.torque,
        plain.tau_star.unwrap(),
        (pts[0].phase - saddle_ref).abs(),
        (pts[1].phase - center_ref).abs(),
    );
    verdict(
        10,
        "analysis: monotone case has no critical points (clearance 1/2, alpha=1, b=2); amplitude-3 case matches the bisection oracle within 1e-9",
        plain_ok && scaled_ok,
        &detail,
    );
}

#[test]
fn pseudophase_inversion_round_trips() {
    let sys = benchmark_system();
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut clean = true;
    for _ in 0..100 {
        let phi_e = TAU * rng.gen::<f64>();
        let xi = pseudophase(&sys, phi_e, 1.0, &[0.5], &[1.0]).unwrap();
        let frac = xi - xi.floor();
        match invert_pseudophase(&sys, frac, &[0.5], &[1.0], 1.0).unwrap() {
            Inversion::Candidates(candidates) => {
                clean &= candidates.len() == 1;
                let d = (candidates[0].phase - phi_e).rem_euclid(TAU);
                worst = worst.max(d.min(TAU - d));
            }
            Inversion::Excluded { .. } => clean = false,
        }
    }
    verdict(
        11,
        "inversion undoes the pseudophase within 1e-9 on 100 random crossing phases",
        clean && worst < 1e-9,
        &format!("worst circular gap {worst:.2e}; single candidate everywhere: {clean}"),
    );
}

fn matches_fd(analytic: f64, fd: f64, worst: &mut f64) -> bool {
    let rel = (analytic - fd).abs() / analytic.abs().max(1.0);
    *worst = worst.max(rel);
    rel <= 1e-5
}

#[test]
fn analytic_partials_match_finite_differences() {
    let sys = benchmark_system_scaled(1.3);
    let mut rng = ChaCha12Rng::seed_from_u64(12);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for _ in 0..200 {
        let action = 0.6 + 1.4 * rng.gen::<f64>();
        let phi = TAU * rng.gen::<f64>();
        let y = [rng.gen::<f64>() - 0.5];
        let x = [rng.gen::<f64>() - 0.5];

        let jet = sys.transform_generator(action, phi, &y, &x).unwrap();
        let s1 = |a: f64, p: f64, yy: f64, xx: f64| {
            sys.transform_generator(a, p, &[yy], &[xx]).unwrap().value
        };
        let at = (action, phi, y[0], x[0]);
        ok &= matches_fd(
            jet.d_phase,
            (s1(at.0, at.1 + h, at.2, at.3) - s1(at.0, at.1 - h, at.2, at.3)) / (2.0 * h),
            &mut worst,
        );
        ok &= matches_fd(
            jet.d_action,
            (s1(at.0 + h, at.1, at.2, at.3) - s1(at.0 - h, at.1, at.2, at.3)) / (2.0 * h),
            &mut worst,
        );
        ok &= matches_fd(
            jet.d_y[0],
            (s1(at.0, at.1, at.2 + h, at.3) - s1(at.0, at.1, at.2 - h, at.3)) / (2.0 * h),
            &mut worst,
        );
        ok &= matches_fd(
            jet.d_x[0],
            (s1(at.0, at.1, at.2, at.3 + h) - s1(at.0, at.1, at.2, at.3 - h)) / (2.0 * h),
            &mut worst,
        );

        let a = sys.resonant_action(&y, &x).unwrap();
        let alpha = sys.h0.d2_action(a, &y, &x);
        let da_dy = -sys.h0.d2_action_y(0, a, &y, &x) / alpha;
        let da_dx = -sys.h0.d2_action_x(0, a, &y, &x) / alpha;
        ok &= matches_fd(
            da_dy,
            (sys.resonant_action(&[y[0] + h], &x).unwrap()
                - sys.resonant_action(&[y[0] - h], &x).unwrap())
                / (2.0 * h),
            &mut worst,
        );
        ok &= matches_fd(
            da_dx,
            (sys.resonant_action(&y, &[x[0] + h]).unwrap()
                - sys.resonant_action(&y, &[x[0] - h]).unwrap())
                / (2.0 * h),
            &mut worst,
        );

        let slope = sys.resonant_potential_d_phi(phi, &y, &x).unwrap();
        let f = |p: f64| sys.resonant_potential(p, &y, &x).unwrap();
        ok &= matches_fd(slope, (f(phi + h) - f(phi - h)) / (2.0 * h), &mut worst);
        let curvature = sys.resonant_potential_d2_phi(phi, &y, &x).unwrap();
        let df = |p: f64| sys.resonant_potential_d_phi(p, &y, &x).unwrap();
        ok &= matches_fd(curvature, (df(phi + h) - df(phi - h)) / (2.0 * h), &mut worst);
    }
    verdict(
        12,
        "generator jet, resonant action, and potential partials match central differences within 1e-5 relative at 200 random points",
        ok,
        &format!("worst relative deviation {worst:.2e}"),
    );
}
