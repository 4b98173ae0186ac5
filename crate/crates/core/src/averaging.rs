//! Near-identity transformation between exact and improved variables, and
//! resonance-crossing times of the averaged and improved flows.
//!
//! The improved variables `(J, psi, eta, xi)` agree with `(I, phi, y, x)` up
//! to `O(eps)` in the fast pair and `O(eps^2)` in the slow pairs; `J` is an
//! adiabatic invariant of quality `O(eps^2)` away from the resonant surface.
//! The change of variables is generated by the function computed in
//! [`SystemSpec::transform_generator`] and is resolved here by fixed-point
//! iteration (the contraction factor is `O(eps / omega0^2)`, far below one in
//! the validity region).

use crate::integrate::{
    averaged_field, improved_field, integrate_to_event, EventDirection, EventSpec,
    IntegrateError, IntegratorConfig,
};
use crate::model::{ModelError, PhaseState, SystemSpec};
use std::fmt;

/// Successive-change tolerance of the fixed-point transform solves.
pub const TRANSFORM_TOL: f64 = 1e-14;
/// Iteration cap of the fixed-point transform solves.
pub const TRANSFORM_MAX_ITER: usize = 50;
/// Slow-time horizon for crossing searches.
pub const CROSSING_HORIZON: f64 = 10.0;
/// Event tolerance on `omega0` at a reported crossing.
pub const CROSSING_EVENT_TOL: f64 = 1e-12;

/// Errors from transformations and crossing searches.
#[derive(Debug, Clone, PartialEq)]
pub enum AveragingError {
    /// The fixed-point transform solve failed to contract.
    TransformDiverged { residual: f64 },
    /// The trajectory starts on or below the resonant surface.
    StartBelowSurface { omega: f64 },
    /// No resonance crossing within the slow-time horizon.
    NoCrossing { tau_max: f64 },
    Model(ModelError),
    Integrate(IntegrateError),
}

impl fmt::Display for AveragingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AveragingError::TransformDiverged { residual } => {
                write!(f, "variable transform failed to converge (residual {residual:e})")
            }
            AveragingError::StartBelowSurface { omega } => {
                write!(f, "start is not above the resonant surface (omega0 = {omega})")
            }
            AveragingError::NoCrossing { tau_max } => {
                write!(f, "no resonance crossing before tau = {tau_max}")
            }
            AveragingError::Model(e) => e.fmt(f),
            AveragingError::Integrate(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for AveragingError {}

impl From<ModelError> for AveragingError {
    fn from(e: ModelError) -> AveragingError {
        AveragingError::Model(e)
    }
}

impl From<IntegrateError> for AveragingError {
    fn from(e: IntegrateError) -> AveragingError {
        AveragingError::Integrate(e)
    }
}

/// State in improved variables. Valid only where `|omega0(J, eta, xi)|` stays
/// above the floor of the generating function; `psi` is unwrapped.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovedState {
    pub j: f64,
    pub psi: f64,
    pub eta: Vec<f64>,
    pub xi: Vec<f64>,
}

/// Resonance crossing of the improved trajectory run at frozen action `J0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovedCrossing {
    /// Slow time of the crossing.
    pub tau_star: f64,
    /// Fast phase accumulated by the crossing, `int (omega0 + eps*omega1) dtau`.
    pub phi_star: f64,
    pub eta_star: Vec<f64>,
    pub xi_star: Vec<f64>,
}

/// Maps an exact-variable state to improved variables by solving the implicit
/// half of the transformation.
///
/// The generating function takes mixed arguments `(J, phi, eta, x)`, so `J`
/// and `eta` are found jointly by fixed-point iteration from `(I, y)`; the
/// remaining relations for `psi` and `xi` are then explicit.
pub fn to_improved(sys: &SystemSpec, state: &PhaseState) -> Result<ImprovedState, AveragingError> {
    let eps = state.epsilon;
    let eps2 = eps * eps;
    let mut j = state.action;
    let mut eta = state.y.clone();

    let mut converged = false;
    let mut residual = f64::INFINITY;
    for _ in 0..TRANSFORM_MAX_ITER {
        let jet = sys.transform_generator(j, state.phase, &eta, &state.x)?;
        let j_next = state.action - eps * jet.d_phase;
        residual = (j_next - j).abs();
        j = j_next;
        for k in 0..sys.n {
            let eta_next = state.y[k] - eps2 * jet.d_x[k];
            residual = residual.max((eta_next - eta[k]).abs());
            eta[k] = eta_next;
        }
        if residual < TRANSFORM_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(AveragingError::TransformDiverged { residual });
    }

    let jet = sys.transform_generator(j, state.phase, &eta, &state.x)?;
    let psi = state.phase + eps * jet.d_action;
    let xi = (0..sys.n).map(|k| state.x[k] + eps2 * jet.d_y[k]).collect();
    Ok(ImprovedState { j, psi, eta, xi })
}

/// Maps an improved-variable state back to exact variables.
///
/// Here `phi` and `x` are the implicit unknowns (they appear in the arguments
/// of the generating function); `I` and `y` follow explicitly.
pub fn from_improved(
    sys: &SystemSpec,
    istate: &ImprovedState,
    epsilon: f64,
) -> Result<PhaseState, AveragingError> {
    assert!(epsilon >= 0.0 && epsilon.is_finite());
    let eps2 = epsilon * epsilon;
    let mut phi = istate.psi;
    let mut x = istate.xi.clone();

    let mut converged = false;
    let mut residual = f64::INFINITY;
    for _ in 0..TRANSFORM_MAX_ITER {
        let jet = sys.transform_generator(istate.j, phi, &istate.eta, &x)?;
        let phi_next = istate.psi - epsilon * jet.d_action;
        residual = (phi_next - phi).abs();
        phi = phi_next;
        for k in 0..sys.n {
            let x_next = istate.xi[k] - eps2 * jet.d_y[k];
            residual = residual.max((x_next - x[k]).abs());
            x[k] = x_next;
        }
        if residual < TRANSFORM_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(AveragingError::TransformDiverged { residual });
    }

    let jet = sys.transform_generator(istate.j, phi, &istate.eta, &x)?;
    let action = istate.j + epsilon * jet.d_phase;
    let y = (0..sys.n).map(|k| istate.eta[k] + eps2 * jet.d_x[k]).collect();
    Ok(PhaseState::new(action, phi, y, x, epsilon))
}

/// Runs the improved flow at frozen action `j0` from `(eta0, xi0)` until it
/// crosses the resonant surface, accumulating the fast-phase integral.
pub fn improved_crossing(
    sys: &SystemSpec,
    j0: f64,
    eta0: &[f64],
    xi0: &[f64],
    epsilon: f64,
) -> Result<ImprovedCrossing, AveragingError> {
    improved_crossing_with(sys, j0, eta0, xi0, epsilon, &IntegratorConfig::default())
}

/// [`improved_crossing`] with explicit integrator tolerances.
pub fn improved_crossing_with(
    sys: &SystemSpec,
    j0: f64,
    eta0: &[f64],
    xi0: &[f64],
    epsilon: f64,
    config: &IntegratorConfig,
) -> Result<ImprovedCrossing, AveragingError> {
    let omega = sys.omega0(j0, eta0, xi0);
    if omega <= 0.0 {
        return Err(AveragingError::StartBelowSurface { omega });
    }
    let n = sys.n;
    let problem = improved_field(sys, epsilon, j0);
    let mut state0 = Vec::with_capacity(2 * n + 1);
    state0.extend_from_slice(eta0);
    state0.extend_from_slice(xi0);
    state0.push(0.0);
    let mut event = EventSpec::new(EventDirection::Decreasing, |_tau, s: &[f64]| {
        sys.omega0(j0, &s[..n], &s[n..2 * n])
    });
    event.event_tol = CROSSING_EVENT_TOL;
    match integrate_to_event(&problem, &state0, 0.0, CROSSING_HORIZON, &event, config) {
        Ok((tau_star, s, _)) => Ok(ImprovedCrossing {
            tau_star,
            phi_star: s[2 * n],
            eta_star: s[..n].to_vec(),
            xi_star: s[n..2 * n].to_vec(),
        }),
        Err(IntegrateError::EventNotFound { t_end }) => {
            Err(AveragingError::NoCrossing { tau_max: t_end })
        }
        Err(e) => Err(e.into()),
    }
}

/// Runs the averaged flow from `(i0, y0, x0)` until the frozen action meets
/// the resonant surface; returns `(tau_star, y_star, x_star)`.
pub fn averaged_crossing(
    sys: &SystemSpec,
    i0: f64,
    y0: &[f64],
    x0: &[f64],
) -> Result<(f64, Vec<f64>, Vec<f64>), AveragingError> {
    averaged_crossing_with(sys, i0, y0, x0, &IntegratorConfig::default())
}

/// [`averaged_crossing`] with explicit integrator tolerances.
pub fn averaged_crossing_with(
    sys: &SystemSpec,
    i0: f64,
    y0: &[f64],
    x0: &[f64],
    config: &IntegratorConfig,
) -> Result<(f64, Vec<f64>, Vec<f64>), AveragingError> {
    let omega = sys.omega0(i0, y0, x0);
    if omega <= 0.0 {
        return Err(AveragingError::StartBelowSurface { omega });
    }
    let n = sys.n;
    let problem = averaged_field(sys);
    let mut state0 = Vec::with_capacity(1 + 2 * n);
    state0.push(i0);
    state0.extend_from_slice(y0);
    state0.extend_from_slice(x0);
    let mut event = EventSpec::new(EventDirection::Decreasing, |_tau, s: &[f64]| {
        sys.omega0(s[0], &s[1..1 + n], &s[1 + n..1 + 2 * n])
    });
    event.event_tol = CROSSING_EVENT_TOL;
    match integrate_to_event(&problem, &state0, 0.0, CROSSING_HORIZON, &event, config) {
        Ok((tau_star, s, _)) => {
            Ok((tau_star, s[1..1 + n].to_vec(), s[1 + n..1 + 2 * n].to_vec()))
        }
        Err(IntegrateError::EventNotFound { t_end }) => {
            Err(AveragingError::NoCrossing { tau_max: t_end })
        }
        Err(e) => Err(e.into()),
    }
}
