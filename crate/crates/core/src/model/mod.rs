//! System description and resonant-surface quantities.
//!
//! A system is `H = H0(I, y, x) + eps * H1(I, phi, y, x, eps)` with `n` slow
//! pairs. `H0` comes with analytic partial derivatives (no symbolic or
//! automatic differentiation happens anywhere in this crate); `H1` is a finite
//! Fourier series in the phase ([`FourierSeries`]).
//!
//! On the resonant surface the fast frequency `omega0 = dH0/dI` vanishes; this
//! module resolves the surface `I = a(y, x)`, the frequency curvature
//! `alpha = d²H0/dI²`, the torque `b` with which the averaged drift pulls the
//! frozen resonant pendulum, the pendulum potential `F`, and the generating
//! function of the improved (second-order) averaging transformation.

mod example;
mod fourier;

pub use example::{benchmark_system, benchmark_system_scaled, closed_form_pseudophase, BenchmarkH0};
pub use fourier::{AffineActionCoeff, CoefficientFn, ConstCoeff, FourierSeries};

use crate::roots::{self, RootError};
use std::fmt;

/// Residual tolerance for scalar root solves (`|f| < ROOT_TOL` at acceptance).
pub const ROOT_TOL: f64 = 1e-12;
/// Derivative-magnitude floor below which a Newton solve is declared degenerate.
pub const DERIV_FLOOR: f64 = 1e-10;
/// Frequencies with `|omega0|` at or below this floor are treated as "on the
/// resonance" — the generating function blows up like `1/omega0` there.
pub const OMEGA_FLOOR: f64 = 1e-8;
/// A critical point of the pendulum potential counts as degenerate when the
/// curvature `|F''|` is at or below this tolerance.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Two critical values of the pendulum potential count as indistinct when they
/// differ by at most this tolerance.
pub const VALUE_TOL: f64 = 1e-8;
/// Grid resolution for the sign-change scan that locates critical points.
pub const SCAN_GRID: usize = 1024;

/// Errors from resonant-surface computations.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// The fast frequency does not change sign across the action bracket.
    NoResonantAction { lo: f64, hi: f64 },
    /// The frequency slope `d²H0/dI²` fell below [`DERIV_FLOOR`] while
    /// resolving or differentiating the resonant surface.
    DegenerateResonance { action: f64, derivative: f64 },
    /// A quantity with a `1/omega0` factor was requested within
    /// [`OMEGA_FLOOR`] of the resonant surface.
    TooCloseToResonance { omega: f64 },
    /// A root search ran out of iterations.
    SearchStalled { best: f64, residual: f64 },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::NoResonantAction { lo, hi } => {
                write!(f, "fast frequency has no sign change for I in [{lo}, {hi}]")
            }
            ModelError::DegenerateResonance { action, derivative } => write!(
                f,
                "frequency slope {derivative:e} at I = {action} is below the degeneracy floor"
            ),
            ModelError::TooCloseToResonance { omega } => {
                write!(f, "fast frequency {omega:e} is too close to the resonance")
            }
            ModelError::SearchStalled { best, residual } => {
                write!(f, "root search stalled at {best} with residual {residual:e}")
            }
        }
    }
}

impl std::error::Error for ModelError {}

impl ModelError {
    fn from_root(err: RootError) -> ModelError {
        match err {
            RootError::NoSignChange { lo, hi, .. } => ModelError::NoResonantAction { lo, hi },
            RootError::DerivativeUnderflow { at, derivative } => {
                ModelError::DegenerateResonance { action: at, derivative }
            }
            RootError::NoConvergence { best, residual } => {
                ModelError::SearchStalled { best, residual }
            }
        }
    }
}

/// Full state of the exact system. The phase is kept *unwrapped* (it
/// accumulates `2 pi` per fast turn); wrap explicitly where a circle value is
/// needed.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub action: f64,
    pub phase: f64,
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    /// Perturbation strength; non-negative (zero is allowed and makes the
    /// averaging transformations exact identities).
    pub epsilon: f64,
}

impl PhaseState {
    /// Panics on non-finite components, mismatched slow dimensions, or a
    /// negative `epsilon`.
    pub fn new(action: f64, phase: f64, y: Vec<f64>, x: Vec<f64>, epsilon: f64) -> PhaseState {
        assert!(action.is_finite() && phase.is_finite(), "non-finite fast pair");
        assert_eq!(y.len(), x.len(), "slow variables must pair up");
        assert!(
            y.iter().chain(x.iter()).all(|v| v.is_finite()),
            "non-finite slow variable"
        );
        assert!(epsilon.is_finite() && epsilon >= 0.0, "epsilon must be finite and >= 0");
        PhaseState { action, phase, y, x, epsilon }
    }

    /// Projection onto the slow variables.
    pub fn slow(&self) -> SlowState {
        SlowState { action: self.action, y: self.y.clone(), x: self.x.clone() }
    }
}

/// State of the averaged (phase-free) system.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowState {
    pub action: f64,
    pub y: Vec<f64>,
    pub x: Vec<f64>,
}

/// The unperturbed Hamiltonian `H0(I, y, x)` with analytic partials.
///
/// `d_action` is the fast frequency `omega0`; the second-order methods feed the
/// implicit differentiation of the resonant surface; `d3_action` is exposed for
/// completeness of the frequency jet (diagnostics near degenerate surfaces).
pub trait SlowHamiltonian: Send + Sync {
    fn value(&self, action: f64, y: &[f64], x: &[f64]) -> f64;
    /// `dH0/dI` — the fast frequency.
    fn d_action(&self, action: f64, y: &[f64], x: &[f64]) -> f64;
    fn d_y(&self, j: usize, action: f64, y: &[f64], x: &[f64]) -> f64;
    fn d_x(&self, j: usize, action: f64, y: &[f64], x: &[f64]) -> f64;
    /// `d²H0/dI²` — frequency slope across the surface.
    fn d2_action(&self, action: f64, y: &[f64], x: &[f64]) -> f64;
    /// `d omega0 / d y_j`.
    fn d2_action_y(&self, j: usize, action: f64, y: &[f64], x: &[f64]) -> f64;
    /// `d omega0 / d x_j`.
    fn d2_action_x(&self, j: usize, action: f64, y: &[f64], x: &[f64]) -> f64;
    /// `d³H0/dI³`.
    fn d3_action(&self, action: f64, y: &[f64], x: &[f64]) -> f64;
}

/// A complete slow-fast system with one fast phase.
pub struct SystemSpec {
    /// Number of slow conjugate pairs.
    pub n: usize,
    pub h0: Box<dyn SlowHamiltonian>,
    pub h1: FourierSeries,
    /// Action interval on which the resonant surface is resolved.
    pub action_bracket: (f64, f64),
}

/// Value and first partial derivatives of the generating function of the
/// improved averaging transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingJet {
    pub value: f64,
    pub d_phase: f64,
    pub d_action: f64,
    pub d_y: Vec<f64>,
    pub d_x: Vec<f64>,
}

/// Classification of a critical point of the pendulum potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalKind {
    /// Local maximum of the potential — a saddle of the pendulum.
    Maximum,
    /// Local minimum — an island center.
    Minimum,
}

/// A critical point of the pendulum potential on `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub phase: f64,
    /// Potential value `F` at the point.
    pub potential: f64,
    /// Curvature `F''` at the point.
    pub curvature: f64,
    pub kind: CriticalKind,
}

/// A failed nondegeneracy requirement, with its witness.
#[derive(Debug, Clone, PartialEq)]
pub enum ConditionViolation {
    /// Frequency curvature `alpha` vanishes at the surface point.
    VanishingCurvature { alpha: f64 },
    /// Torque `b` vanishes — the averaged drift grazes the surface.
    VanishingTorque { torque: f64 },
    /// A critical point of the potential is degenerate.
    DegenerateCriticalPoint { phase: f64, curvature: f64 },
    /// Two critical values of the potential coincide within [`VALUE_TOL`].
    CloseCriticalValues { phase_a: f64, phase_b: f64, gap: f64 },
}

impl fmt::Display for ConditionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditionViolation::VanishingCurvature { alpha } => {
                write!(f, "frequency curvature alpha = {alpha:e} vanishes")
            }
            ConditionViolation::VanishingTorque { torque } => {
                write!(f, "torque b = {torque:e} vanishes")
            }
            ConditionViolation::DegenerateCriticalPoint { phase, curvature } => write!(
                f,
                "critical point at phi = {phase} is degenerate (F'' = {curvature:e})"
            ),
            ConditionViolation::CloseCriticalValues { phase_a, phase_b, gap } => write!(
                f,
                "critical values at phi = {phase_a} and phi = {phase_b} differ by only {gap:e}"
            ),
        }
    }
}

/// Outcome of the nondegeneracy checks at one point of the resonant surface.
///
/// Three requirements are checked: the frequency curvature `alpha` is nonzero
/// (the frequency genuinely changes sign across the surface), the torque `b`
/// is nonzero (the averaged drift actually crosses), and every critical point
/// of the pendulum potential is nondegenerate with pairwise-distinct values
/// (no separatrix reconnection in the frozen pendulum).
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub alpha: f64,
    pub alpha_ok: bool,
    pub torque: f64,
    pub torque_ok: bool,
    pub portrait_ok: bool,
    /// Critical points of the potential on `[0, 2 pi)`, sorted by phase.
    pub critical_points: Vec<CriticalPoint>,
    pub violations: Vec<ConditionViolation>,
}

impl ConditionReport {
    pub fn all_ok(&self) -> bool {
        self.alpha_ok && self.torque_ok && self.portrait_ok
    }
}

impl SystemSpec {
    /// Panics on an empty or non-finite action bracket.
    pub fn new(
        n: usize,
        h0: Box<dyn SlowHamiltonian>,
        h1: FourierSeries,
        action_bracket: (f64, f64),
    ) -> SystemSpec {
        assert!(
            action_bracket.0.is_finite()
                && action_bracket.1.is_finite()
                && action_bracket.0 < action_bracket.1,
            "action bracket must be a finite nonempty interval"
        );
        SystemSpec { n, h0, h1, action_bracket }
    }

    /// Fast frequency `omega0 = dH0/dI`.
    ///
    /// This is the innermost hot call; it performs no domain checks. Non-finite
    /// inputs propagate to non-finite outputs and are caught by the
    /// integration layer.
    #[inline]
    pub fn omega0(&self, action: f64, y: &[f64], x: &[f64]) -> f64 {
        self.h0.d_action(action, y, x)
    }

    /// Full Hamiltonian `H0 + eps * H1` at an exact-system state.
    pub fn hamiltonian(&self, state: &PhaseState) -> f64 {
        self.h0.value(state.action, &state.y, &state.x)
            + state.epsilon
                * self.h1.eval(state.action, state.phase, &state.y, &state.x, state.epsilon)
    }

    /// Hamiltonian of the improved averaged system, `H0 + eps * <H1>`.
    pub fn improved_hamiltonian(&self, action: f64, eta: &[f64], xi: &[f64], epsilon: f64) -> f64 {
        self.h0.value(action, eta, xi) + epsilon * self.h1_mean(action, eta, xi)
    }

    /// Resolves the resonant surface `I = a(y, x)` inside the action bracket
    /// by safeguarded Newton (residual below [`ROOT_TOL`]).
    pub fn resonant_action(&self, y: &[f64], x: &[f64]) -> Result<f64, ModelError> {
        let (lo, hi) = self.action_bracket;
        roots::newton_bracketed(
            |i| self.omega0(i, y, x),
            |i| self.h0.d2_action(i, y, x),
            lo,
            hi,
            ROOT_TOL,
            DERIV_FLOOR,
        )
        .map_err(ModelError::from_root)
    }

    /// Frequency curvature `alpha = d²H0/dI²` on the resonant surface.
    pub fn alpha(&self, y: &[f64], x: &[f64]) -> Result<f64, ModelError> {
        let a = self.resonant_action(y, x)?;
        Ok(self.h0.d2_action(a, y, x))
    }

    /// Torque `b` of the frozen resonant pendulum:
    /// `b = sum_j [ da/dx_j * dH0/dy_j - da/dy_j * dH0/dx_j ]` on the surface,
    /// with the surface slopes obtained by implicit differentiation of
    /// `omega0(a(y, x), y, x) = 0`.
    pub fn torque(&self, y: &[f64], x: &[f64]) -> Result<f64, ModelError> {
        let a = self.resonant_action(y, x)?;
        let slope = self.h0.d2_action(a, y, x);
        if slope.abs() < DERIV_FLOOR {
            return Err(ModelError::DegenerateResonance { action: a, derivative: slope });
        }
        let mut b = 0.0;
        for j in 0..self.n {
            let da_dx = -self.h0.d2_action_x(j, a, y, x) / slope;
            let da_dy = -self.h0.d2_action_y(j, a, y, x) / slope;
            b += da_dx * self.h0.d_y(j, a, y, x) - da_dy * self.h0.d_x(j, a, y, x);
        }
        Ok(b)
    }

    /// Pendulum potential `F(phi) = b * phi + H1(a(y,x), phi, y, x, 0)`.
    pub fn resonant_potential(&self, phi: f64, y: &[f64], x: &[f64]) -> Result<f64, ModelError> {
        let a = self.resonant_action(y, x)?;
        let b = self.torque(y, x)?;
        Ok(b * phi + self.h1.eval(a, phi, y, x, 0.0))
    }

    /// Phase derivative `F'(phi) = b + dH1/dphi` on the surface.
    pub fn resonant_potential_d_phi(
        &self,
        phi: f64,
        y: &[f64],
        x: &[f64],
    ) -> Result<f64, ModelError> {
        let a = self.resonant_action(y, x)?;
        let b = self.torque(y, x)?;
        Ok(b + self.h1.d_phi(a, phi, y, x, 0.0))
    }

    /// Second phase derivative `F''(phi)`.
    pub fn resonant_potential_d2_phi(
        &self,
        phi: f64,
        y: &[f64],
        x: &[f64],
    ) -> Result<f64, ModelError> {
        let a = self.resonant_action(y, x)?;
        Ok(self.h1.d2_phi(a, phi, y, x, 0.0))
    }

    /// Phase average of the perturbation at `eps = 0`.
    pub fn h1_mean(&self, action: f64, y: &[f64], x: &[f64]) -> f64 {
        self.h1.mean(action, y, x, 0.0)
    }

    /// Oscillating part of the perturbation at `eps = 0`.
    pub fn h1_tilde(&self, action: f64, phi: f64, y: &[f64], x: &[f64]) -> f64 {
        self.h1.eval(action, phi, y, x, 0.0) - self.h1.mean(action, y, x, 0.0)
    }

    /// First-order frequency correction `omega1 = d<H1>/dI` at `eps = 0`.
    pub fn omega1(&self, action: f64, y: &[f64], x: &[f64]) -> f64 {
        self.h1.mean_d_action(action, y, x, 0.0)
    }

    /// Generating function of the improved averaging transformation, solving
    /// `omega0 * dS/dphi = <H1> - H1` with zero phase average, together with
    /// its partial derivatives.
    ///
    /// With `A` the zero-mean phase antiderivative of the oscillating part of
    /// `H1` (exact for a finite series), `S = -A / omega0`; every partial is
    /// assembled from the coefficient partials and the frequency jet of `H0`.
    pub fn transform_generator(
        &self,
        action: f64,
        phi: f64,
        y: &[f64],
        x: &[f64],
    ) -> Result<GeneratingJet, ModelError> {
        let omega = self.omega0(action, y, x);
        if omega.abs() <= OMEGA_FLOOR {
            return Err(ModelError::TooCloseToResonance { omega });
        }
        let anti = self.h1.antiderivative_zero_mean(action, phi, y, x, 0.0);
        let value = -anti / omega;
        let d_phase = -self.h1_tilde(action, phi, y, x) / omega;
        let omega_sq = omega * omega;
        let d_action = -self.h1.antiderivative_d_action(action, phi, y, x, 0.0) / omega
            + anti * self.h0.d2_action(action, y, x) / omega_sq;
        let mut d_y = Vec::with_capacity(self.n);
        let mut d_x = Vec::with_capacity(self.n);
        for j in 0..self.n {
            d_y.push(
                -self.h1.antiderivative_d_y(j, action, phi, y, x, 0.0) / omega
                    + anti * self.h0.d2_action_y(j, action, y, x) / omega_sq,
            );
            d_x.push(
                -self.h1.antiderivative_d_x(j, action, phi, y, x, 0.0) / omega
                    + anti * self.h0.d2_action_x(j, action, y, x) / omega_sq,
            );
        }
        Ok(GeneratingJet { value, d_phase, d_action, d_y, d_x })
    }

    /// Locates all critical points of the pendulum potential on `[0, 2 pi)`
    /// by a [`SCAN_GRID`]-point sign scan of `F'` refined by bisection.
    ///
    /// Degenerate points are *returned*, not rejected — callers decide.
    pub(crate) fn scan_critical_points(
        &self,
        y: &[f64],
        x: &[f64],
    ) -> Result<Vec<CriticalPoint>, ModelError> {
        let a = self.resonant_action(y, x)?;
        let b = self.torque(y, x)?;
        let deriv = |phi: f64| b + self.h1.d_phi(a, phi, y, x, 0.0);
        let tau = std::f64::consts::TAU;
        let step = tau / SCAN_GRID as f64;
        let values: Vec<f64> = (0..SCAN_GRID).map(|i| deriv(i as f64 * step)).collect();

        let mut phis = Vec::new();
        for i in 0..SCAN_GRID {
            let (lo, hi) = (i as f64 * step, (i + 1) as f64 * step);
            let g_lo = values[i];
            let g_hi = if i + 1 == SCAN_GRID { values[0] } else { values[i + 1] };
            if g_lo.abs() < ROOT_TOL {
                phis.push(lo);
            } else if g_hi.abs() >= ROOT_TOL && g_lo * g_hi < 0.0 {
                let root = roots::bisect(deriv, lo, hi, ROOT_TOL).map_err(ModelError::from_root)?;
                phis.push(root);
            }
        }

        Ok(phis
            .into_iter()
            .map(|phi| {
                let curvature = self.h1.d2_phi(a, phi, y, x, 0.0);
                CriticalPoint {
                    phase: phi,
                    potential: b * phi + self.h1.eval(a, phi, y, x, 0.0),
                    curvature,
                    kind: if curvature < 0.0 { CriticalKind::Maximum } else { CriticalKind::Minimum },
                }
            })
            .collect())
    }

    /// Runs the nondegeneracy checks at one point `(y, x)` of the slow plane.
    pub fn check_conditions(&self, y: &[f64], x: &[f64]) -> Result<ConditionReport, ModelError> {
        let alpha = self.alpha(y, x)?;
        let torque = self.torque(y, x)?;
        let critical_points = self.scan_critical_points(y, x)?;

        let mut violations = Vec::new();
        let alpha_ok = alpha.abs() > DEGENERACY_TOL;
        if !alpha_ok {
            violations.push(ConditionViolation::VanishingCurvature { alpha });
        }
        let torque_ok = torque.abs() > DEGENERACY_TOL;
        if !torque_ok {
            violations.push(ConditionViolation::VanishingTorque { torque });
        }
        let mut portrait_ok = true;
        for point in &critical_points {
            if point.curvature.abs() <= DEGENERACY_TOL {
                portrait_ok = false;
                violations.push(ConditionViolation::DegenerateCriticalPoint {
                    phase: point.phase,
                    curvature: point.curvature,
                });
            }
        }
        for (i, p) in critical_points.iter().enumerate() {
            for q in critical_points.iter().skip(i + 1) {
                let gap = (p.potential - q.potential).abs();
                if gap <= VALUE_TOL {
                    portrait_ok = false;
                    violations.push(ConditionViolation::CloseCriticalValues {
                        phase_a: p.phase,
                        phase_b: q.phase,
                        gap,
                    });
                }
            }
        }

        Ok(ConditionReport {
            alpha,
            alpha_ok,
            torque,
            torque_ok,
            portrait_ok,
            critical_points,
            violations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn sys() -> SystemSpec {
        benchmark_system()
    }

    #[test]
    fn omega0_benchmark_values() {
        let s = sys();
        assert_eq!(s.omega0(1.0, &[0.0], &[0.0]), 1.0);
        assert_eq!(s.omega0(0.25, &[0.0], &[0.5]), 0.0);
        assert_eq!(s.omega0(0.25, &[0.0], &[1.0]), -0.75);
    }

    #[test]
    fn resonant_action_on_benchmark_surface() {
        let s = sys();
        let a = s.resonant_action(&[0.0], &[0.5]).unwrap();
        assert!((a - 0.25).abs() < 1e-12);
        assert!(s.omega0(a, &[0.0], &[0.5]).abs() < ROOT_TOL);
        let a = s.resonant_action(&[0.0], &[1.0]).unwrap();
        assert!((a - 1.0).abs() < 1e-12);
    }

    #[test]
    fn resonant_action_needs_sign_change() {
        let mut s = sys();
        s.action_bracket = (2.0, 3.0);
        let err = s.resonant_action(&[0.0], &[0.5]);
        assert!(matches!(err, Err(ModelError::NoResonantAction { .. })), "{err:?}");
    }

    #[test]
    fn alpha_is_frequency_curvature() {
        assert!((sys().alpha(&[0.0], &[1.0]).unwrap() - 1.0).abs() < 1e-12);

        // Doubled quadratic term: H0 = y + (I - x^2)^2 has alpha = 2.
        struct Doubled;
        impl SlowHamiltonian for Doubled {
            fn value(&self, i: f64, y: &[f64], x: &[f64]) -> f64 {
                y[0] + (i - x[0] * x[0]).powi(2)
            }
            fn d_action(&self, i: f64, _: &[f64], x: &[f64]) -> f64 {
                2.0 * (i - x[0] * x[0])
            }
            fn d_y(&self, _: usize, _: f64, _: &[f64], _: &[f64]) -> f64 {
                1.0
            }
            fn d_x(&self, _: usize, i: f64, _: &[f64], x: &[f64]) -> f64 {
                -4.0 * x[0] * (i - x[0] * x[0])
            }
            fn d2_action(&self, _: f64, _: &[f64], _: &[f64]) -> f64 {
                2.0
            }
            fn d2_action_y(&self, _: usize, _: f64, _: &[f64], _: &[f64]) -> f64 {
                0.0
            }
            fn d2_action_x(&self, _: usize, _: f64, _: &[f64], x: &[f64]) -> f64 {
                -4.0 * x[0]
            }
            fn d3_action(&self, _: f64, _: &[f64], _: &[f64]) -> f64 {
                0.0
            }
        }
        let s = SystemSpec::new(
            1,
            Box::new(Doubled),
            FourierSeries::new(vec![Box::new(ConstCoeff(0.0))], vec![]),
            (-0.5, 6.0),
        );
        assert!((s.alpha(&[0.0], &[1.0]).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn torque_benchmark_values() {
        let s = sys();
        assert!((s.torque(&[0.0], &[1.0]).unwrap() - 2.0).abs() < 1e-12);
        assert!((s.torque(&[0.0], &[0.5]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn torque_vanishes_for_flat_surface() {
        // omega0 = I - 1: the surface a = 1 does not depend on (y, x).
        struct Flat;
        impl SlowHamiltonian for Flat {
            fn value(&self, i: f64, y: &[f64], _: &[f64]) -> f64 {
                y[0] + 0.5 * (i - 1.0).powi(2)
            }
            fn d_action(&self, i: f64, _: &[f64], _: &[f64]) -> f64 {
                i - 1.0
            }
            fn d_y(&self, _: usize, _: f64, _: &[f64], _: &[f64]) -> f64 {
                1.0
            }
            fn d_x(&self, _: usize, _: f64, _: &[f64], _: &[f64]) -> f64 {
                0.0
            }
            fn d2_action(&self, _: f64, _: &[f64], _: &[f64]) -> f64 {
                1.0
            }
            fn d2_action_y(&self, _: usize, _: f64, _: &[f64], _: &[f64]) -> f64 {
                0.0
            }
            fn d2_action_x(&self, _: usize, _: f64, _: &[f64], _: &[f64]) -> f64 {
                0.0
            }
            fn d3_action(&self, _: f64, _: &[f64], _: &[f64]) -> f64 {
                0.0
            }
        }
        let s = SystemSpec::new(
            1,
            Box::new(Flat),
            FourierSeries::new(
                vec![Box::new(ConstCoeff(0.0)), Box::new(ConstCoeff(1.0))],
                vec![Box::new(ConstCoeff(0.0))],
            ),
            (0.0, 2.0),
        );
        assert_eq!(s.torque(&[0.0], &[0.3]).unwrap(), 0.0);
        let report = s.check_conditions(&[0.0], &[0.3]).unwrap();
        assert!(!report.torque_ok);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, ConditionViolation::VanishingTorque { .. })));
    }

    #[test]
    fn potential_benchmark_values() {
        let s = sys();
        // At x = 1: F = 2 phi + 1.5 sin(phi).
        assert!(s.resonant_potential(0.0, &[0.0], &[1.0]).unwrap().abs() < 1e-12);
        let at_half_pi = s.resonant_potential(PI / 2.0, &[0.0], &[1.0]).unwrap();
        assert!((at_half_pi - (PI + 1.5)).abs() < 1e-12);
    }

    #[test]
    fn potential_reduces_to_torque_line_without_perturbation() {
        let s = benchmark_system_scaled(0.0);
        for i in 0..7 {
            let phi = 0.9 * i as f64;
            let f = s.resonant_potential(phi, &[0.0], &[1.0]).unwrap();
            assert!((f - 2.0 * phi).abs() < 1e-12);
        }
    }

    #[test]
    fn h1_mean_and_tilde_benchmark() {
        let s = sys();
        assert_eq!(s.h1_mean(1.0, &[0.0], &[0.0]), 0.0);
        assert!((s.h1_tilde(1.0, PI / 2.0, &[0.0], &[0.0]) - 1.5).abs() < 1e-14);
        assert_eq!(s.omega1(1.0, &[0.0], &[0.0]), 0.0);

        // Constant series: mean is the constant, oscillating part vanishes.
        let flat = SystemSpec::new(
            1,
            Box::new(example::BenchmarkH0),
            FourierSeries::new(
                vec![Box::new(ConstCoeff(3.0)), Box::new(ConstCoeff(1.0))],
                vec![Box::new(ConstCoeff(0.0))],
            ),
            (-0.5, 6.0),
        );
        assert_eq!(flat.h1_mean(1.0, &[0.0], &[0.0]), 3.0);
    }

    #[test]
    fn omega1_sees_action_dependent_mean() {
        // H1 = I^2 + cos(phi): omega1 = 2 I.
        struct Sq;
        impl CoefficientFn for Sq {
            fn eval(&self, i: f64, _: &[f64], _: &[f64], _: f64) -> f64 {
                i * i
            }
            fn d_action(&self, i: f64, _: &[f64], _: &[f64], _: f64) -> f64 {
                2.0 * i
            }
            fn d_y(&self, _: usize, _: f64, _: &[f64], _: &[f64], _: f64) -> f64 {
                0.0
            }
            fn d_x(&self, _: usize, _: f64, _: &[f64], _: &[f64], _: f64) -> f64 {
                0.0
            }
            fn d_epsilon(&self, _: f64, _: &[f64], _: &[f64], _: f64) -> f64 {
                0.0
            }
        }
        let s = SystemSpec::new(
            1,
            Box::new(example::BenchmarkH0),
            FourierSeries::new(vec![Box::new(Sq), Box::new(ConstCoeff(1.0))], vec![Box::new(ConstCoeff(0.0))]),
            (-0.5, 6.0),
        );
        assert!((s.omega1(0.7, &[0.0], &[0.0]) - 1.4).abs() < 1e-14);
    }

    #[test]
    fn generator_benchmark_value() {
        let s = sys();
        let jet = s.transform_generator(1.0, 0.0, &[0.0], &[0.0]).unwrap();
        assert!((jet.value - 1.5).abs() < 1e-14);
        assert!(jet.d_phase.abs() < 1e-14);
        assert!((jet.d_action - (-0.5)).abs() < 1e-14);
    }

    #[test]
    fn generator_rejects_resonant_action() {
        let s = sys();
        let err = s.transform_generator(0.25, 1.0, &[0.0], &[0.5]);
        assert!(matches!(err, Err(ModelError::TooCloseToResonance { .. })));
    }

    #[test]
    fn generator_phase_derivative_identity() {
        // d S / d phi must equal (<H1> - H1) / omega0 everywhere off-surface.
        let s = sys();
        let mut rng = 0x9e3779b97f4a7c15u64;
        let mut unit = || {
            // xorshift-style scramble; deterministic and dependency-free.
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            (rng >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let action = 0.4 + 1.2 * unit();
            let phi = TAU * unit();
            let x = 0.25 * unit();
            let omega = s.omega0(action, &[0.0], &[x]);
            if omega.abs() < 0.05 {
                continue;
            }
            let jet = s.transform_generator(action, phi, &[0.0], &[x]).unwrap();
            let want = -s.h1_tilde(action, phi, &[0.0], &[x]) / omega;
            assert!((jet.d_phase - want).abs() < 1e-12);
        }
    }

    #[test]
    fn generator_grid_mean_is_zero() {
        let s = sys();
        let m = s.h1.max_harmonic();
        let count = 4 * m + 1;
        let mut avg = 0.0;
        for i in 0..count {
            let phi = TAU * i as f64 / count as f64;
            avg += s.transform_generator(1.3, phi, &[0.0], &[0.2]).unwrap().value;
        }
        avg /= count as f64;
        assert!(avg.abs() < 1e-12);
    }

    #[test]
    fn generator_partials_match_finite_differences() {
        let s = sys();
        let h = 1e-6;
        let (action, phi, x) = (1.1, 2.3, 0.4);
        let jet = s.transform_generator(action, phi, &[0.0], &[x]).unwrap();
        let value = |i: f64, p: f64, xv: f64| {
            s.transform_generator(i, p, &[0.0], &[xv]).unwrap().value
        };
        let fd_phase = (value(action, phi + h, x) - value(action, phi - h, x)) / (2.0 * h);
        let fd_action = (value(action + h, phi, x) - value(action - h, phi, x)) / (2.0 * h);
        let fd_x = (value(action, phi, x + h) - value(action, phi, x - h)) / (2.0 * h);
        assert!((jet.d_phase - fd_phase).abs() < 1e-7);
        assert!((jet.d_action - fd_action).abs() < 1e-7);
        assert!((jet.d_x[0] - fd_x).abs() < 1e-7);
        assert!(jet.d_y[0].abs() < 1e-14);
    }

    #[test]
    fn conditions_pass_at_benchmark_crossing() {
        let report = sys().check_conditions(&[0.5], &[1.0]).unwrap();
        assert!(report.all_ok(), "{report:?}");
        assert!((report.alpha - 1.0).abs() < 1e-12);
        assert!((report.torque - 2.0).abs() < 1e-12);
        assert!(report.critical_points.is_empty());
        assert!(report.violations.is_empty());
    }

    #[test]
    fn conditions_see_critical_points_for_strong_coupling() {
        // Scale 3 makes F' = 2 + 4.5 cos(phi) at the benchmark crossing:
        // two nondegenerate roots at +-acos(-4/9).
        let report = benchmark_system_scaled(3.0).check_conditions(&[0.5], &[1.0]).unwrap();
        assert!(report.all_ok(), "{report:?}");
        assert_eq!(report.critical_points.len(), 2);
        let want = (-4.0f64 / 9.0).acos();
        assert!((report.critical_points[0].phase - want).abs() < 1e-9);
        assert!((report.critical_points[1].phase - (TAU - want)).abs() < 1e-9);
        assert_eq!(report.critical_points[0].kind, CriticalKind::Maximum);
        assert_eq!(report.critical_points[1].kind, CriticalKind::Minimum);
    }

    #[test]
    fn scan_catches_degenerate_tangency_on_grid_node() {
        // Scale 4/3 makes F' = 2 + 2 cos(phi) at the benchmark crossing: a
        // double root at phi = pi, where F' touches zero without changing
        // sign. pi is a node of the power-of-two scan grid and cos(pi) rounds
        // to -1 exactly, so the |F'| < tol branch of the scan must catch it
        // and the report must flag the vanishing curvature.
        let report = benchmark_system_scaled(4.0 / 3.0).check_conditions(&[0.5], &[1.0]).unwrap();
        assert_eq!(report.critical_points.len(), 1);
        assert!((report.critical_points[0].phase - PI).abs() < 1e-15);
        assert!(!report.portrait_ok);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, ConditionViolation::DegenerateCriticalPoint { .. })));
    }
}
