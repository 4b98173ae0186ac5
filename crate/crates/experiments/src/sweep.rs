//! Crossing-run harness and the phase-ensemble accuracy table.

use crate::fit::{linear_fit, LineFit};
use crate::ExperimentError;
use serde::Serialize;
use slowfast_core::averaging::{AveragingError, TRANSFORM_MAX_ITER, TRANSFORM_TOL};
use slowfast_core::integrate::IntegratorConfig;
use slowfast_core::model::{PhaseState, SystemSpec};
use slowfast_core::resonance::{detect_crossing_monitored, pseudophase_theory};
use std::f64::consts::TAU;

/// Initial action whose improved invariant equals `j0` at the given phase and
/// slow coordinates, so every ensemble member starts on the same level set.
pub fn initial_action_for_invariant(
    sys: &SystemSpec,
    j0: f64,
    phi0: f64,
    y0: &[f64],
    x0: &[f64],
    epsilon: f64,
) -> Result<f64, ExperimentError> {
    let eps2 = epsilon * epsilon;
    let mut eta = y0.to_vec();
    let mut converged = false;
    let mut residual = f64::INFINITY;
    for _ in 0..TRANSFORM_MAX_ITER {
        let jet = sys.transform_generator(j0, phi0, &eta, x0)?;
        residual = 0.0;
        for k in 0..sys.n {
            let eta_next = y0[k] - eps2 * jet.d_x[k];
            residual = residual.max((eta_next - eta[k]).abs());
            eta[k] = eta_next;
        }
        if residual < TRANSFORM_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(AveragingError::TransformDiverged { residual }.into());
    }
    let jet = sys.transform_generator(j0, phi0, &eta, x0)?;
    Ok(j0 + epsilon * jet.d_phase)
}

/// Outcome of one crossing run: measured and predicted pseudophase plus the
/// diagnostics used to audit the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub epsilon: f64,
    pub phi0: f64,
    pub i0: f64,
    pub xi_value: f64,
    pub xi_theory: f64,
    pub signed_error: f64,
    pub tau_e: f64,
    pub nu: f64,
    /// Sup-norm drift of the full Hamiltonian along the run.
    pub h_drift: f64,
    /// Whether the crossing landed outside every saddle exclusion band.
    pub safe: bool,
}

/// Runs one trajectory to its crossing and compares the measured pseudophase
/// against the first-order prediction.
pub fn run_single(
    sys: &SystemSpec,
    state0: &PhaseState,
    horizon_tau: f64,
    config: &IntegratorConfig,
) -> Result<RunRecord, ExperimentError> {
    let n = sys.n;
    let eps = state0.epsilon;
    let h_at = |s: &[f64]| {
        sys.h0.value(s[0], &s[2..2 + n], &s[2 + n..2 + 2 * n])
            + eps * sys.h1.eval(s[0], s[1], &s[2..2 + n], &s[2 + n..2 + 2 * n], eps)
    };
    let h_ref = sys.h0.value(state0.action, &state0.y, &state0.x)
        + eps * sys.h1.eval(state0.action, state0.phase, &state0.y, &state0.x, eps);

    let mut h_drift = 0.0_f64;
    let report = detect_crossing_monitored(sys, state0, horizon_tau, config, |_, s| {
        h_drift = h_drift.max((h_at(s) - h_ref).abs());
    })?;
    let xi_theory = pseudophase_theory(sys, state0)?;
    Ok(RunRecord {
        epsilon: eps,
        phi0: state0.phase,
        i0: state0.action,
        xi_value: report.xi_value,
        xi_theory,
        signed_error: report.xi_value - xi_theory,
        tau_e: report.tau_e,
        nu: report.nu,
        h_drift,
        safe: !report.near_exclusion,
    })
}

/// Ensemble layout for the accuracy table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Improved invariant shared by every ensemble member.
    pub j0: f64,
    /// Number of equispaced initial phases per perturbation strength.
    pub phi0_count: usize,
    pub epsilon_list: Vec<f64>,
    /// Correct each initial action so the improved invariant is exactly `j0`;
    /// otherwise start every run at action `j0` literally.
    pub fix_invariant: bool,
    pub y0: Vec<f64>,
    pub x0: Vec<f64>,
    /// Slow-time budget for each crossing search.
    pub horizon_tau: f64,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> SweepConfig {
        SweepConfig {
            j0: 1.0,
            phi0_count: 250,
            epsilon_list: (1..=10).map(|k| 1e-3 * 0.5_f64.powi(k)).collect(),
            fix_invariant: true,
            y0: vec![0.0],
            x0: vec![0.0],
            horizon_tau: 10.0,
            rel_tol: None,
            abs_tol: None,
        }
    }
}

impl SweepConfig {
    /// Rejects layouts that cannot produce a meaningful table.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.phi0_count < 2 {
            return Err(ExperimentError::Config(format!(
                "phase ensemble needs at least 2 members, got {}",
                self.phi0_count
            )));
        }
        if self.epsilon_list.is_empty() {
            return Err(ExperimentError::Config("empty perturbation list".into()));
        }
        for &eps in &self.epsilon_list {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(ExperimentError::Config(format!(
                    "perturbation strengths must be finite and positive, got {eps}"
                )));
            }
        }
        if self.y0.len() != self.x0.len() {
            return Err(ExperimentError::Config("slow coordinates must pair up".into()));
        }
        if !(self.horizon_tau.is_finite() && self.horizon_tau > 0.0) {
            return Err(ExperimentError::Config(format!(
                "horizon must be finite and positive, got {}",
                self.horizon_tau
            )));
        }
        Ok(())
    }

    fn integrator(&self) -> IntegratorConfig {
        let mut config = IntegratorConfig::default();
        if let Some(r) = self.rel_tol {
            config.rel_tol = r;
        }
        if let Some(a) = self.abs_tol {
            config.abs_tol = a;
        }
        config
    }
}

/// One perturbation strength's row of the accuracy table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub epsilon: f64,
    /// Root-mean-square of the signed pseudophase errors over the ensemble.
    pub rmse: f64,
    /// Number of runs that completed.
    pub sample_count: usize,
    pub mean_signed_error: f64,
    /// Number of runs that failed and were left out of the statistics.
    pub failures: usize,
}

/// The accuracy table with an optional scaling-law fit over its clean rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentTable {
    pub rows: Vec<TableRow>,
    /// Least-squares line through `(ln eps, ln rmse)` of rows without
    /// failures; absent when fewer than two such rows exist.
    pub fit: Option<LineFit>,
}

/// Builds the accuracy table: for each perturbation strength, an equispaced
/// phase ensemble is run to its crossing and the prediction error aggregated.
pub fn run_table1(sys: &SystemSpec, cfg: &SweepConfig) -> Result<ExperimentTable, ExperimentError> {
    cfg.validate()?;
    let config = cfg.integrator();
    let mut eps_order = cfg.epsilon_list.clone();
    eps_order.sort_by(|a, b| b.partial_cmp(a).expect("validated finite"));

    let mut rows = Vec::with_capacity(eps_order.len());
    for &eps in &eps_order {
        let mut sum_sq = 0.0;
        let mut sum = 0.0;
        let mut successes = 0usize;
        let mut failures = 0usize;
        for m in 0..cfg.phi0_count {
            let phi0 = TAU * m as f64 / cfg.phi0_count as f64;
            let outcome = run_row_member(sys, cfg, phi0, eps, &config);
            match outcome {
                Ok(record) => {
                    sum_sq += record.signed_error * record.signed_error;
                    sum += record.signed_error;
                    successes += 1;
                }
                Err(_) => failures += 1,
            }
        }
        let (rmse, mean) = if successes > 0 {
            let n = successes as f64;
            ((sum_sq / n).sqrt(), sum / n)
        } else {
            (f64::NAN, f64::NAN)
        };
        rows.push(TableRow {
            epsilon: eps,
            rmse,
            sample_count: successes,
            mean_signed_error: mean,
            failures,
        });
    }

    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.failures == 0 && r.rmse.is_finite() && r.rmse > 0.0)
        .map(|r| (r.epsilon.ln(), r.rmse.ln()))
        .collect();
    let fit = if points.len() >= 2 { linear_fit(&points).ok() } else { None };
    Ok(ExperimentTable { rows, fit })
}

fn run_row_member(
    sys: &SystemSpec,
    cfg: &SweepConfig,
    phi0: f64,
    eps: f64,
    config: &IntegratorConfig,
) -> Result<RunRecord, ExperimentError> {
    let i0 = if cfg.fix_invariant {
        initial_action_for_invariant(sys, cfg.j0, phi0, &cfg.y0, &cfg.x0, eps)?
    } else {
        cfg.j0
    };
    let state0 = PhaseState::new(i0, phi0, cfg.y0.clone(), cfg.x0.clone(), eps);
    run_single(sys, &state0, cfg.horizon_tau, config)
}
