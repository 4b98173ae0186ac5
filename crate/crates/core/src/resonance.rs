//! Resonance-crossing detection on the exact flow, the pseudophase of a
//! crossing and its averaged prediction, inversion of the pseudophase map,
//! and the frozen-pendulum reduction near the resonant surface.
//!
//! The pseudophase compresses the fast phase at the crossing and the local
//! potential into a single circle value that the averaged data predicts up to
//! `O(sqrt(eps))`. Near phases where the potential has a local maximum the
//! frozen pendulum has saddles, prediction accuracy degrades, and a small
//! exclusion band around each saddle's circle value must be avoided.

use crate::averaging::{
    averaged_crossing, improved_crossing, to_improved, AveragingError, CROSSING_EVENT_TOL,
};
use crate::integrate::{
    exact_field, integrate_monitored, pack_phase, unpack_phase, EventDirection, EventSpec,
    IntegrateError, IntegratorConfig,
};
pub use crate::model::closed_form_pseudophase;
use crate::model::{
    CriticalKind, CriticalPoint, ModelError, PhaseState, SystemSpec, DEGENERACY_TOL, SCAN_GRID,
};
use crate::roots::{self, RootError};
use std::f64::consts::TAU;
use std::fmt;

/// Default coefficient of the `sqrt(eps)*|ln eps|` exclusion half-width.
pub const DEFAULT_EXCLUSION_COEFF: f64 = 1.0;
/// Tolerance on the pseudophase residual of inversion candidates.
pub const INVERSION_TOL: f64 = 1e-13;

/// Errors from crossing detection, pseudophase evaluation, and inversion.
#[derive(Debug, Clone, PartialEq)]
pub enum ResonanceError {
    /// A critical point of the crossing potential is degenerate.
    DegenerateCriticalPoint { phase: f64, curvature: f64 },
    /// The torque vanishes, so the pseudophase map is undefined.
    VanishingTorque { torque: f64 },
    /// The trajectory starts on or below the resonant surface.
    StartBelowSurface { omega: f64 },
    /// The exact trajectory does not reach the surface within the horizon.
    NoCrossing { t_max: f64 },
    Model(ModelError),
    Averaging(AveragingError),
    Integrate(IntegrateError),
    Root(RootError),
}

impl fmt::Display for ResonanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResonanceError::DegenerateCriticalPoint { phase, curvature } => write!(
                f,
                "degenerate critical point of the crossing potential at phi = {phase} \
                 (F'' = {curvature:e})"
            ),
            ResonanceError::VanishingTorque { torque } => {
                write!(f, "torque {torque:e} too small for a pseudophase")
            }
            ResonanceError::StartBelowSurface { omega } => {
                write!(f, "start is not above the resonant surface (omega0 = {omega})")
            }
            ResonanceError::NoCrossing { t_max } => {
                write!(f, "no resonance crossing before t = {t_max}")
            }
            ResonanceError::Model(e) => e.fmt(f),
            ResonanceError::Averaging(e) => e.fmt(f),
            ResonanceError::Integrate(e) => e.fmt(f),
            ResonanceError::Root(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for ResonanceError {}

impl From<ModelError> for ResonanceError {
    fn from(e: ModelError) -> ResonanceError {
        ResonanceError::Model(e)
    }
}

impl From<AveragingError> for ResonanceError {
    fn from(e: AveragingError) -> ResonanceError {
        ResonanceError::Averaging(e)
    }
}

impl From<IntegrateError> for ResonanceError {
    fn from(e: IntegrateError) -> ResonanceError {
        ResonanceError::Integrate(e)
    }
}

impl From<RootError> for ResonanceError {
    fn from(e: RootError) -> ResonanceError {
        ResonanceError::Root(e)
    }
}

/// Critical-point structure of the crossing potential at one surface point.
#[derive(Debug, Clone, PartialEq)]
pub struct PortraitClass {
    /// Whether the frozen pendulum has oscillatory islands.
    pub oscillatory: bool,
    pub critical_points: Vec<CriticalPoint>,
}

/// Everything measured at the exact trajectory's resonance crossing.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceReport {
    /// Fast time of the crossing.
    pub t_e: f64,
    /// Slow time of the crossing, `eps * t_e`.
    pub tau_e: f64,
    /// Exact state at the crossing.
    pub state_e: PhaseState,
    /// Unwrapped fast phase at the crossing.
    pub phi_e: f64,
    /// Pseudophase as an unreduced real.
    pub xi_value: f64,
    /// Fractional part of the pseudophase, in `[0, 1)`.
    pub xi_frac: f64,
    /// Saddle clearance `min(1/2, nu1 + eps)` of the crossing phase.
    pub nu: f64,
    /// Whether `xi_frac` falls inside a saddle exclusion band.
    pub near_exclusion: bool,
    /// Circle distance from `xi_frac` to the nearest saddle value.
    pub exclusion_margin: f64,
}

/// One solution of the pseudophase inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCandidate {
    /// Crossing phase in `[0, 2 pi)`.
    pub phase: f64,
    /// Conditioning `d xi / d phi` at the solution.
    pub derivative: f64,
}

/// Result of inverting the pseudophase map on the allowed phase set.
#[derive(Debug, Clone, PartialEq)]
pub enum Inversion {
    /// All solutions outside oscillatory bands, with conditioning estimates.
    Candidates(Vec<PhaseCandidate>),
    /// The target lies in the value shadow of an oscillatory band.
    Excluded { shadow: (f64, f64) },
}

/// Fractional part mapped to `[0, 1)`.
fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Circle distance between two fractional values, period 1.
fn circle_gap(a: f64, b: f64) -> f64 {
    let d = frac(a - b);
    d.min(1.0 - d)
}

/// Circular distance between two angles, period `2 pi`.
fn arc_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Pseudophase of a crossing at unwrapped phase `phi_e`, as an unreduced
/// real: `(phi_e + h1_tilde(i0, phi_e, y*, x*) / b(y*, x*)) / 2 pi`.
pub fn pseudophase(
    sys: &SystemSpec,
    phi_e: f64,
    i0: f64,
    y_star: &[f64],
    x_star: &[f64],
) -> Result<f64, ResonanceError> {
    let b = sys.torque(y_star, x_star)?;
    if b.abs() < DEGENERACY_TOL {
        return Err(ResonanceError::VanishingTorque { torque: b });
    }
    Ok((phi_e + sys.h1_tilde(i0, phi_e, y_star, x_star) / b) / TAU)
}

/// Averaged prediction of the pseudophase: transforms the start to improved
/// variables, accumulates the fast phase of the improved flow up to its
/// crossing, and returns `(phi_0 + Phi* / eps) / 2 pi` as an unreduced real.
pub fn pseudophase_theory(sys: &SystemSpec, state0: &PhaseState) -> Result<f64, ResonanceError> {
    assert!(state0.epsilon > 0.0, "prediction requires a positive perturbation scale");
    let ist = to_improved(sys, state0)?;
    let crossing = improved_crossing(sys, ist.j, &ist.eta, &ist.xi, state0.epsilon)?;
    Ok((state0.phase + crossing.phi_star / state0.epsilon) / TAU)
}

/// Finds and classifies all critical points of the crossing potential at one
/// surface point, rejecting degenerate ones.
pub fn potential_portrait(
    sys: &SystemSpec,
    y: &[f64],
    x: &[f64],
) -> Result<PortraitClass, ResonanceError> {
    let points = sys.scan_critical_points(y, x)?;
    for p in &points {
        if p.curvature.abs() < DEGENERACY_TOL {
            return Err(ResonanceError::DegenerateCriticalPoint {
                phase: p.phase,
                curvature: p.curvature,
            });
        }
    }
    Ok(PortraitClass { oscillatory: !points.is_empty(), critical_points: points })
}

/// Clearance `min(1/2, nu1 + eps)` where `nu1` is the smallest circular
/// distance from `phi_e` to a local maximum of the potential; `1/2` when the
/// portrait has no maxima.
pub fn saddle_clearance(phi_e: f64, portrait: &PortraitClass, epsilon: f64) -> f64 {
    let nu1 = portrait
        .critical_points
        .iter()
        .filter(|p| p.kind == CriticalKind::Maximum)
        .map(|p| arc_gap(phi_e, p.phase))
        .fold(f64::INFINITY, f64::min);
    if nu1.is_finite() {
        0.5_f64.min(nu1 + epsilon)
    } else {
        0.5
    }
}

/// Tests a pseudophase fraction against the exclusion bands of half-width
/// `c_a * sqrt(eps) * |ln eps|` around each saddle's circle value; returns
/// `(safe, margin)` where `safe` requires the margin to strictly exceed the
/// half-width. The saddle circle values subtract the phase mean
/// `h1_mean_star` from the stored potential before dividing by `2 pi b`.
pub fn exclusion_margin(
    xi_frac: f64,
    portrait: &PortraitClass,
    b_star: f64,
    h1_mean_star: f64,
    epsilon: f64,
    c_a: f64,
) -> (bool, f64) {
    let margin = portrait
        .critical_points
        .iter()
        .filter(|p| p.kind == CriticalKind::Maximum)
        .map(|p| circle_gap(xi_frac, frac((p.potential - h1_mean_star) / (TAU * b_star))))
        .fold(f64::INFINITY, f64::min);
    if !margin.is_finite() {
        return (true, f64::INFINITY);
    }
    let half_width = c_a * epsilon.sqrt() * epsilon.ln().abs();
    (margin > half_width, margin)
}

/// Energy of the frozen pendulum at the surface point `(y, x)`:
/// `alpha(y, x) * p^2 / 2 + F(phi, y, x)`.
pub fn pendulum_energy(
    sys: &SystemSpec,
    p: f64,
    phi: f64,
    y: &[f64],
    x: &[f64],
) -> Result<f64, ResonanceError> {
    Ok(0.5 * sys.alpha(y, x)? * p * p + sys.resonant_potential(phi, y, x)?)
}

/// Runs the exact flow until it crosses the resonant surface and assembles
/// the full crossing report, with default integrator tolerances.
pub fn detect_crossing(
    sys: &SystemSpec,
    state0: &PhaseState,
    horizon_tau: f64,
) -> Result<ResonanceReport, ResonanceError> {
    detect_crossing_with(sys, state0, horizon_tau, &IntegratorConfig::default())
}

/// [`detect_crossing`] with explicit integrator tolerances.
pub fn detect_crossing_with(
    sys: &SystemSpec,
    state0: &PhaseState,
    horizon_tau: f64,
    config: &IntegratorConfig,
) -> Result<ResonanceReport, ResonanceError> {
    detect_crossing_monitored(sys, state0, horizon_tau, config, |_, _| {})
}

/// [`detect_crossing`] invoking `observer` with every accepted sample of the
/// exact run (packed layout `[I, phi, y.., x..]`), e.g. to watch conserved
/// quantities along the way.
pub fn detect_crossing_monitored(
    sys: &SystemSpec,
    state0: &PhaseState,
    horizon_tau: f64,
    config: &IntegratorConfig,
    observer: impl FnMut(f64, &[f64]),
) -> Result<ResonanceReport, ResonanceError> {
    let eps = state0.epsilon;
    assert!(eps > 0.0, "crossing detection requires a positive perturbation scale");
    let omega = sys.omega0(state0.action, &state0.y, &state0.x);
    if omega <= 0.0 {
        return Err(ResonanceError::StartBelowSurface { omega });
    }

    let n = sys.n;
    let problem = exact_field(sys, eps);
    let mut event = EventSpec::new(EventDirection::Decreasing, |_t, s: &[f64]| {
        sys.omega0(s[0], &s[2..2 + n], &s[2 + n..2 + 2 * n])
    });
    event.event_tol = CROSSING_EVENT_TOL;
    // The embedded error estimate aliases once a step swallows a large
    // fraction of a fast oscillation, silently admitting bad steps, so never
    // let the controller stretch past a fifth of the starting period (the
    // approach to the surface only slows the oscillation further).
    let cap = 0.2 * TAU / omega;
    let mut config = config.clone();
    config.max_step = Some(config.max_step.map_or(cap, |m| m.min(cap)));
    let (t_e, s_e) = match integrate_monitored(
        &problem,
        &pack_phase(state0),
        0.0,
        horizon_tau / eps,
        &event,
        &config,
        observer,
    ) {
        Ok(hit) => hit,
        Err(IntegrateError::EventNotFound { t_end }) => {
            return Err(ResonanceError::NoCrossing { t_max: t_end })
        }
        Err(e) => return Err(e.into()),
    };
    let state_e = unpack_phase(&s_e, n, eps);
    let phi_e = state_e.phase;

    // The saddle structure and the potential entering the pseudophase live at
    // the averaged crossing point, which shares the start's slow data.
    let i0 = state0.action;
    let (_tau_star, y_star, x_star) = averaged_crossing(sys, i0, &state0.y, &state0.x)?;
    let portrait = potential_portrait(sys, &y_star, &x_star)?;
    let xi_value = pseudophase(sys, phi_e, i0, &y_star, &x_star)?;
    let xi_frac = frac(xi_value);
    let nu = saddle_clearance(phi_e, &portrait, eps);
    let b_star = sys.torque(&y_star, &x_star)?;
    let h1_mean_star = sys.h1_mean(i0, &y_star, &x_star);
    let (safe, margin) =
        exclusion_margin(xi_frac, &portrait, b_star, h1_mean_star, eps, DEFAULT_EXCLUSION_COEFF);

    Ok(ResonanceReport {
        t_e,
        tau_e: eps * t_e,
        state_e,
        phi_e,
        xi_value,
        xi_frac,
        nu,
        near_exclusion: !safe,
        exclusion_margin: margin,
    })
}

/// Solves `pseudophase = xi_frac (mod 1)` for the crossing phase on the
/// phase set outside oscillatory bands, where the map is strictly monotone.
///
/// Each local maximum of the potential anchors a band reaching to the first
/// phase at which the potential recovers the maximum value (rightward for
/// positive torque, leftward for negative); island interiors admit no
/// pass-through crossing. Returns every solution with its conditioning, or
/// an [`Inversion::Excluded`] marker when the target falls strictly inside
/// the value shadow of a band.
pub fn invert_pseudophase(
    sys: &SystemSpec,
    xi_frac: f64,
    y_star: &[f64],
    x_star: &[f64],
    i0: f64,
) -> Result<Inversion, ResonanceError> {
    let b = sys.torque(y_star, x_star)?;
    if b.abs() < DEGENERACY_TOL {
        return Err(ResonanceError::VanishingTorque { torque: b });
    }
    let portrait = potential_portrait(sys, y_star, x_star)?;
    let mean = sys.h1_mean(i0, y_star, x_star);
    let g = |phi: f64| (phi + (sys.h1.eval(i0, phi, y_star, x_star, 0.0) - mean) / b) / TAU;
    let dg = |phi: f64| (1.0 + sys.h1.d_phi(i0, phi, y_star, x_star, 0.0) / b) / TAU;
    let potential = |phi: f64| b * phi + sys.h1.eval(i0, phi, y_star, x_star, 0.0);

    let arcs = allowed_arcs(&portrait, b, &potential)?;

    // Lift the target into the race of values covered by one period; the map
    // gains exactly one per period, so the window is half-open of length one.
    let g_start = g(arcs[0].0);
    let mut target = frac(xi_frac) + (g_start - frac(xi_frac)).ceil();
    if target < g_start {
        target += 1.0;
    }
    if target >= g_start + 1.0 {
        target -= 1.0;
    }

    let mut candidates = Vec::new();
    for &(lo, hi) in &arcs {
        let (g_lo, g_hi) = (g(lo), g(hi));
        if target < g_lo || target > g_hi {
            continue;
        }
        let phi = if target <= g_lo {
            lo
        } else if target >= g_hi {
            hi
        } else {
            roots::bisect(|p| g(p) - target, lo, hi, INVERSION_TOL)?
        };
        candidates.push(PhaseCandidate { phase: phi.rem_euclid(TAU), derivative: dg(phi) });
    }

    if candidates.is_empty() {
        // The target fell in the gap between the value ranges of two
        // consecutive arcs: the shadow of the band separating them.
        let mut shadow = (g_start, g_start + 1.0);
        for pair in arcs.windows(2) {
            let (prev_hi, next_lo) = (g(pair[0].1), g(pair[1].0));
            if target > prev_hi && target < next_lo {
                shadow = (prev_hi, next_lo);
            }
        }
        return Ok(Inversion::Excluded { shadow });
    }
    Ok(Inversion::Candidates(candidates))
}

/// Maximal arcs of one period on which the pseudophase map is strictly
/// increasing, in lift coordinates, complementing the oscillatory bands.
///
/// The lift window is anchored at the saddle of greatest potential: no other
/// band can reach a phase where the potential exceeds its own anchor value,
/// so every band lies inside the window without wrapping.
fn allowed_arcs(
    portrait: &PortraitClass,
    b: f64,
    potential: &dyn Fn(f64) -> f64,
) -> Result<Vec<(f64, f64)>, ResonanceError> {
    let maxima: Vec<&CriticalPoint> = portrait
        .critical_points
        .iter()
        .filter(|p| p.kind == CriticalKind::Maximum)
        .collect();
    let Some(anchor) = maxima
        .iter()
        .max_by(|a, b| a.potential.partial_cmp(&b.potential).unwrap())
    else {
        return Ok(vec![(0.0, TAU)]);
    };

    // Lift the saddles into one period relative to the anchor. For positive
    // torque bands extend rightward from each saddle and the window starts at
    // the anchor; for negative torque they extend leftward and the window
    // ends at the anchor's copy one period up.
    let w0 = anchor.phase;
    let mut bands = Vec::with_capacity(maxima.len());
    for p in &maxima {
        let offset = (p.phase - w0).rem_euclid(TAU);
        if b > 0.0 {
            let s = w0 + offset;
            bands.push((s, band_recovery(potential, s, s + TAU)?));
        } else {
            let s = if offset == 0.0 { w0 + TAU } else { w0 + offset };
            bands.push((band_recovery(potential, s, s - TAU)?, s));
        }
    }
    bands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let (window_lo, window_hi) = (w0, w0 + TAU);
    let mut arcs = Vec::new();
    let mut cursor = window_lo;
    for &(lo, hi) in &bands {
        if lo > cursor {
            arcs.push((cursor, lo));
        }
        cursor = cursor.max(hi);
    }
    if cursor < window_hi {
        arcs.push((cursor, window_hi));
    }
    Ok(arcs)
}

/// First phase strictly between `from` and `to` at which the potential
/// recovers its value at `from`; `to` may lie on either side.
fn band_recovery(
    potential: &dyn Fn(f64) -> f64,
    from: f64,
    to: f64,
) -> Result<f64, ResonanceError> {
    let level = potential(from);
    let step = (to - from) / SCAN_GRID as f64;
    let mut prev = from + step;
    let mut f_prev = potential(prev) - level;
    for i in 2..=SCAN_GRID as i64 {
        let next = from + step * i as f64;
        let f_next = potential(next) - level;
        if f_prev < 0.0 && f_next >= 0.0 {
            let (lo, hi) = if step > 0.0 { (prev, next) } else { (next, prev) };
            let root = roots::bisect(|p| potential(p) - level, lo, hi, INVERSION_TOL)?;
            return Ok(root);
        }
        prev = next;
        f_prev = f_next;
    }
    // The potential gains `2 pi b` per period toward `to`, so recovery is
    // guaranteed; reaching this point means the sign scan missed a tangency.
    Err(ResonanceError::Root(RootError::NoSignChange {
        lo: from,
        hi: to,
        f_lo: 0.0,
        f_hi: potential(to) - level,
    }))
}
