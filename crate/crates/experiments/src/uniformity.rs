//! Pseudophase distribution experiments over random ensembles.

use crate::ExperimentError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use slowfast_core::model::{PhaseState, SystemSpec};
use slowfast_core::resonance::detect_crossing;

/// Sampled strengths in sweep mode live in `[RATIO * eps0, eps0]`: runs get
/// longer like `1/eps`, so an explicit floor keeps every sample affordable.
pub const EPSILON_FLOOR_RATIO: f64 = 0.01;

/// How the sample ensemble is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UniformityMode {
    /// Random initial conditions in a phase-space ball, fixed perturbation.
    Ensemble,
    /// Fixed initial condition, random perturbation strength below a ceiling.
    EpsilonSweep,
}

/// Sampling layout for a distribution experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformityConfig {
    pub mode: UniformityMode,
    /// Number of samples to draw.
    pub n: usize,
    pub seed: u64,
    /// Ball center in ensemble mode; the fixed initial state in sweep mode
    /// (whose `epsilon` field is then ignored in favor of the sampled one).
    pub center: PhaseState,
    pub ball_radius: f64,
    /// Ceiling for sampled perturbation strengths in sweep mode.
    pub epsilon0: f64,
    /// Open interval `(alpha, beta)` whose occupancy is compared with its
    /// length.
    pub interval: (f64, f64),
    /// Slow-time budget for each crossing search.
    pub horizon_tau: f64,
}

impl Default for UniformityConfig {
    fn default() -> UniformityConfig {
        UniformityConfig {
            mode: UniformityMode::Ensemble,
            n: 2000,
            seed: 1,
            center: PhaseState::new(1.0, 0.0, vec![0.0], vec![0.0], 1e-4),
            ball_radius: 0.05,
            epsilon0: 1e-4,
            interval: (0.0, 1.0),
            horizon_tau: 10.0,
        }
    }
}

impl UniformityConfig {
    /// Rejects layouts too small or malformed to say anything about the
    /// distribution.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.n < 100 {
            return Err(ExperimentError::Config(format!(
                "distribution statistics need at least 100 samples, got {}",
                self.n
            )));
        }
        let (alpha, beta) = self.interval;
        if !(alpha.is_finite() && beta.is_finite() && 0.0 <= alpha && alpha < beta && beta <= 1.0)
        {
            return Err(ExperimentError::Config(format!(
                "interval must satisfy 0 <= alpha < beta <= 1, got ({alpha}, {beta})"
            )));
        }
        if !(self.ball_radius.is_finite() && self.ball_radius > 0.0) {
            return Err(ExperimentError::Config(format!(
                "ball radius must be finite and positive, got {}",
                self.ball_radius
            )));
        }
        if !(self.epsilon0.is_finite() && self.epsilon0 > 0.0) {
            return Err(ExperimentError::Config(format!(
                "perturbation ceiling must be finite and positive, got {}",
                self.epsilon0
            )));
        }
        if !(self.horizon_tau.is_finite() && self.horizon_tau > 0.0) {
            return Err(ExperimentError::Config(format!(
                "horizon must be finite and positive, got {}",
                self.horizon_tau
            )));
        }
        if self.mode == UniformityMode::Ensemble && self.center.epsilon <= 0.0 {
            return Err(ExperimentError::Config(
                "ensemble mode needs a positive perturbation at the center".into(),
            ));
        }
        Ok(())
    }
}

/// Distribution of crossing pseudophases over an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityReport {
    pub mode: UniformityMode,
    pub n_requested: usize,
    /// Samples whose run completed.
    pub n_used: usize,
    /// Samples whose run failed (no crossing within the horizon, etc.).
    pub dropped: usize,
    /// Kolmogorov-Smirnov distance between the samples and the uniform law.
    pub ks_statistic: f64,
    pub interval: (f64, f64),
    /// Fraction of samples strictly inside the interval.
    pub fraction_in_interval: f64,
    /// Interval length, the fraction predicted by a uniform law.
    pub expected_fraction: f64,
    /// Pseudophase fractional parts in sample order.
    pub samples: Vec<f64>,
}

/// Kolmogorov-Smirnov distance between `samples` (values in `[0, 1]`) and the
/// uniform distribution; `NaN` when empty.
pub fn ks_uniform_statistic(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("samples must not be NaN"));
    let n = sorted.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        d = d.max((i as f64 + 1.0) / n - x).max(x - i as f64 / n);
    }
    d
}

/// Runs the configured distribution experiment: draws samples, runs each to
/// its crossing, and summarizes where the pseudophase fractions landed.
pub fn run_uniformity(
    sys: &SystemSpec,
    cfg: &UniformityConfig,
) -> Result<UniformityReport, ExperimentError> {
    cfg.validate()?;
    if cfg.center.y.len() != sys.n {
        return Err(ExperimentError::Config(format!(
            "center has {} slow pairs but the system has {}",
            cfg.center.y.len(),
            sys.n
        )));
    }

    let mut samples = Vec::with_capacity(cfg.n);
    let mut dropped = 0usize;
    for i in 0..cfg.n {
        // One independent, reproducible stream per sample.
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        let state = match cfg.mode {
            UniformityMode::Ensemble => {
                perturbed_state(&cfg.center, cfg.ball_radius, &mut rng)
            }
            UniformityMode::EpsilonSweep => {
                let lo = EPSILON_FLOOR_RATIO * cfg.epsilon0;
                let eps = lo + (cfg.epsilon0 - lo) * rng.gen::<f64>();
                PhaseState::new(
                    cfg.center.action,
                    cfg.center.phase,
                    cfg.center.y.clone(),
                    cfg.center.x.clone(),
                    eps,
                )
            }
        };
        match detect_crossing(sys, &state, cfg.horizon_tau) {
            Ok(report) => samples.push(report.xi_frac),
            Err(_) => dropped += 1,
        }
    }

    let n_used = samples.len();
    let (alpha, beta) = cfg.interval;
    let fraction = if n_used == 0 {
        f64::NAN
    } else {
        samples.iter().filter(|&&s| alpha < s && s < beta).count() as f64 / n_used as f64
    };
    Ok(UniformityReport {
        mode: cfg.mode,
        n_requested: cfg.n,
        n_used,
        dropped,
        ks_statistic: ks_uniform_statistic(&samples),
        interval: cfg.interval,
        fraction_in_interval: fraction,
        expected_fraction: beta - alpha,
        samples,
    })
}

/// Uniform draw from the unit ball, by rejection from the enclosing cube.
fn unit_ball_point(rng: &mut ChaCha12Rng, dim: usize) -> Vec<f64> {
    loop {
        let u: Vec<f64> = (0..dim).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
        if u.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            return u;
        }
    }
}

fn perturbed_state(center: &PhaseState, radius: f64, rng: &mut ChaCha12Rng) -> PhaseState {
    let n = center.y.len();
    let u = unit_ball_point(rng, 2 + 2 * n);
    PhaseState::new(
        center.action + radius * u[0],
        center.phase + radius * u[1],
        (0..n).map(|k| center.y[k] + radius * u[2 + k]).collect(),
        (0..n).map(|k| center.x[k] + radius * u[2 + n + k]).collect(),
        center.epsilon,
    )
}
