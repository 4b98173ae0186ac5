//! Adaptive high-order integration with dense output and event refinement.
//!
//! The engine is an explicit embedded Runge-Kutta pair of order 8(5,3) with a
//! degree-7 interpolant on every accepted step. Three vector fields are
//! provided for a [`SystemSpec`]: the exact flow in fast time `t`, and the
//! averaged and improved flows in slow time `tau = eps * t`.

mod stepper;
mod tableau;

use crate::model::{PhaseState, SlowState, SystemSpec};
use stepper::{eval_dense, Stepper, MAX_EVENT_ITER};
use std::fmt;

/// Order of the underlying Runge-Kutta pair.
pub const METHOD_ORDER: usize = 8;

/// Errors from integration runs.
#[derive(Debug, Clone, PartialEq)]
pub enum IntegrateError {
    /// The step budget ran out before reaching the end of the span.
    BudgetExceeded { t: f64, max_steps: u64 },
    /// The field returned a non-finite derivative.
    FieldBlowup { t: f64 },
    /// Error control pushed the step below the resolution of `t`.
    StepSizeUnderflow { t: f64 },
    /// No sign change of the event function before the end of the span.
    EventNotFound { t_end: f64 },
}

impl fmt::Display for IntegrateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntegrateError::BudgetExceeded { t, max_steps } => {
                write!(f, "step budget {max_steps} exhausted at t = {t}")
            }
            IntegrateError::FieldBlowup { t } => {
                write!(f, "vector field returned a non-finite value near t = {t}")
            }
            IntegrateError::StepSizeUnderflow { t } => {
                write!(f, "step size underflowed at t = {t}")
            }
            IntegrateError::EventNotFound { t_end } => {
                write!(f, "event did not occur before t = {t_end}")
            }
        }
    }
}

impl std::error::Error for IntegrateError {}

/// A first-order ODE `dy/dt = field(t, y)` of fixed dimension.
pub struct OdeProblem<'a> {
    pub dimension: usize,
    /// Label for diagnostics.
    pub name: &'static str,
    field: Box<dyn Fn(f64, &[f64], &mut [f64]) + 'a>,
}

impl<'a> OdeProblem<'a> {
    /// The field callback must be deterministic and side-effect-free.
    pub fn new(
        dimension: usize,
        name: &'static str,
        field: impl Fn(f64, &[f64], &mut [f64]) + 'a,
    ) -> OdeProblem<'a> {
        assert!(dimension > 0, "problem dimension must be positive");
        OdeProblem { dimension, name, field: Box::new(field) }
    }

    /// Evaluates the field into `dydt`.
    pub fn eval(&self, t: f64, y: &[f64], dydt: &mut [f64]) {
        debug_assert_eq!(y.len(), self.dimension);
        debug_assert_eq!(dydt.len(), self.dimension);
        (self.field)(t, y, dydt);
    }
}

/// Tolerances and budgets for one integration run.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// First step size; `None` selects it automatically.
    pub initial_step: Option<f64>,
    /// Step-size cap; `None` caps at the span length.
    pub max_step: Option<f64>,
    /// Bound on step attempts (accepted and rejected).
    pub max_steps: u64,
}

impl Default for IntegratorConfig {
    fn default() -> IntegratorConfig {
        IntegratorConfig {
            rel_tol: 1e-12,
            abs_tol: 1e-12,
            initial_step: None,
            max_step: None,
            max_steps: 1_000_000_000,
        }
    }
}

/// Dense-output polynomial of one accepted step, valid on `[t0, t0 + h]`.
#[derive(Debug, Clone)]
pub struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    dim: usize,
    cont: Vec<f64>,
}

impl DenseSegment {
    /// Evaluates the interpolant at `t` into `out`.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        eval_dense(&self.cont, self.dim, self.t0, self.h, t, out);
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out);
        out
    }
}

/// An integrated path: accepted-step samples plus per-step interpolants.
#[derive(Debug, Clone)]
pub struct Trajectory {
    dim: usize,
    ts: Vec<f64>,
    states: Vec<Vec<f64>>,
    segments: Vec<DenseSegment>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of samples (steps + 1).
    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.ts
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i]
    }

    pub fn t_start(&self) -> f64 {
        self.ts[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().unwrap()
    }

    /// Interpolated state at `t` within the span. At a sample time the stored
    /// sample itself is returned, bit for bit.
    pub fn query(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.query_into(t, &mut out);
        out
    }

    pub fn query_into(&self, t: f64, out: &mut [f64]) {
        assert!(
            t >= self.t_start() && t <= self.t_end(),
            "query at t = {t} outside the trajectory span [{}, {}]",
            self.t_start(),
            self.t_end()
        );
        match self.ts.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
            Ok(i) => out.copy_from_slice(&self.states[i]),
            Err(i) => self.segments[i - 1].eval_into(t, out),
        }
    }
}

/// Which sign changes of the event function trigger detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventDirection {
    /// Trigger when `g` passes from positive to non-positive.
    Decreasing,
    /// Trigger when `g` passes from negative to non-negative.
    Increasing,
    Any,
}

/// A scalar event `g(t, state) = 0` sought along the flow.
pub struct EventSpec<'a> {
    g: Box<dyn Fn(f64, &[f64]) -> f64 + 'a>,
    pub direction: EventDirection,
    /// Refinement stops once `|g| < event_tol`.
    pub event_tol: f64,
    /// Time-bracket floor for refinement; `None` means `1e-13 * span`.
    pub t_tol: Option<f64>,
}

impl<'a> EventSpec<'a> {
    /// `g` must be continuous along trajectories.
    pub fn new(direction: EventDirection, g: impl Fn(f64, &[f64]) -> f64 + 'a) -> EventSpec<'a> {
        EventSpec { g: Box::new(g), direction, event_tol: 1e-11, t_tol: None }
    }

    pub fn eval(&self, t: f64, state: &[f64]) -> f64 {
        (self.g)(t, state)
    }
}

/// Integrates over `[t0, t_end]`, controlling local error to the tolerances,
/// and returns the full trajectory with dense output.
pub fn integrate(
    problem: &OdeProblem,
    state0: &[f64],
    t0: f64,
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<Trajectory, IntegrateError> {
    let mut sink = TrajectorySink::new(problem.dimension);
    run_core(problem, state0, t0, t_end, config, None, &mut sink)?;
    Ok(sink.into_trajectory())
}

/// Integrates until the first triggering sign change of `event`, refines the
/// crossing on the dense interpolant, and returns it with the trajectory up to
/// the refined time.
pub fn integrate_to_event(
    problem: &OdeProblem,
    state0: &[f64],
    t0: f64,
    t_max: f64,
    event: &EventSpec,
    config: &IntegratorConfig,
) -> Result<(f64, Vec<f64>, Trajectory), IntegrateError> {
    let mut sink = TrajectorySink::new(problem.dimension);
    match run_core(problem, state0, t0, t_max, config, Some(event), &mut sink)? {
        Some((t_event, state_event)) => Ok((t_event, state_event, sink.into_trajectory())),
        None => Err(IntegrateError::EventNotFound { t_end: t_max }),
    }
}

/// Event integration without trajectory storage: `observer` sees every
/// accepted sample (including the refined event sample last). Memory use is
/// constant in the span length, which matters at small `eps` where a crossing
/// run takes millions of steps.
pub fn integrate_monitored(
    problem: &OdeProblem,
    state0: &[f64],
    t0: f64,
    t_max: f64,
    event: &EventSpec,
    config: &IntegratorConfig,
    observer: impl FnMut(f64, &[f64]),
) -> Result<(f64, Vec<f64>), IntegrateError> {
    let mut sink = ObserverSink { observer };
    match run_core(problem, state0, t0, t_max, config, Some(event), &mut sink)? {
        Some(found) => Ok(found),
        None => Err(IntegrateError::EventNotFound { t_end: t_max }),
    }
}

/// Receives accepted steps as they happen.
trait StepSink {
    fn wants_dense(&self) -> bool;
    fn sample(&mut self, t: f64, state: &[f64]);
    fn segment(&mut self, segment: DenseSegment);
}

struct TrajectorySink {
    dim: usize,
    ts: Vec<f64>,
    states: Vec<Vec<f64>>,
    segments: Vec<DenseSegment>,
}

impl TrajectorySink {
    fn new(dim: usize) -> TrajectorySink {
        TrajectorySink { dim, ts: Vec::new(), states: Vec::new(), segments: Vec::new() }
    }

    fn into_trajectory(self) -> Trajectory {
        Trajectory { dim: self.dim, ts: self.ts, states: self.states, segments: self.segments }
    }
}

impl StepSink for TrajectorySink {
    fn wants_dense(&self) -> bool {
        true
    }

    fn sample(&mut self, t: f64, state: &[f64]) {
        self.ts.push(t);
        self.states.push(state.to_vec());
    }

    fn segment(&mut self, segment: DenseSegment) {
        self.segments.push(segment);
    }
}

struct ObserverSink<F: FnMut(f64, &[f64])> {
    observer: F,
}

impl<F: FnMut(f64, &[f64])> StepSink for ObserverSink<F> {
    fn wants_dense(&self) -> bool {
        false
    }

    fn sample(&mut self, t: f64, state: &[f64]) {
        (self.observer)(t, state);
    }

    fn segment(&mut self, _segment: DenseSegment) {}
}

fn triggered(direction: EventDirection, g_prev: f64, g_new: f64) -> bool {
    match direction {
        EventDirection::Decreasing => g_prev > 0.0 && g_new <= 0.0,
        EventDirection::Increasing => g_prev < 0.0 && g_new >= 0.0,
        EventDirection::Any => {
            (g_prev > 0.0 && g_new <= 0.0) || (g_prev < 0.0 && g_new >= 0.0)
        }
    }
}

/// Shared driver: steps from `t0` to `t_end`, feeding the sink; with an event,
/// returns the refined crossing as soon as it triggers.
fn run_core(
    problem: &OdeProblem,
    state0: &[f64],
    t0: f64,
    t_end: f64,
    config: &IntegratorConfig,
    event: Option<&EventSpec>,
    sink: &mut dyn StepSink,
) -> Result<Option<(f64, Vec<f64>)>, IntegrateError> {
    assert_eq!(state0.len(), problem.dimension, "state dimension mismatch");
    assert!(t_end > t0, "integration span must run forward");
    assert!(state0.iter().all(|v| v.is_finite()), "non-finite initial state");
    assert!(config.rel_tol > 0.0 && config.abs_tol > 0.0, "tolerances must be positive");
    assert!(config.max_steps > 0, "step budget must be positive");

    let span = t_end - t0;
    let h_max = config.max_step.unwrap_or(span).min(span);
    let mut stepper = Stepper::new(
        &*problem.field,
        t0,
        state0,
        config.rel_tol,
        config.abs_tol,
        h_max,
        config.max_steps,
    );
    match config.initial_step {
        Some(h) => {
            assert!(h > 0.0, "initial step must be positive");
            stepper.h = h.min(h_max);
        }
        None => stepper.init_step(),
    }

    sink.sample(t0, state0);
    let mut g_prev = event.map(|ev| ev.eval(t0, state0));
    let t_tol = event.map(|ev| ev.t_tol.unwrap_or(1e-13 * span));
    let mut buf = vec![0.0; problem.dimension];

    while stepper.t < t_end {
        // Stretch the step up to 1% to land exactly on t_end; the final time
        // is snapped only when the clamped step is the one that got accepted.
        let mut clamped = None;
        if stepper.t + 1.01 * stepper.h >= t_end {
            let h_final = t_end - stepper.t;
            stepper.h = h_final;
            clamped = Some(h_final);
        }
        stepper.advance()?;
        if clamped == Some(stepper.h_old) {
            stepper.t = t_end;
        }

        if sink.wants_dense() {
            stepper.prepare_dense();
            sink.segment(DenseSegment {
                t0: stepper.t_old,
                h: stepper.h_old,
                dim: problem.dimension,
                cont: stepper.dense_coefficients(),
            });
        }

        if let (Some(ev), Some(gp)) = (event, g_prev) {
            let g_new = ev.eval(stepper.t, &stepper.y);
            if triggered(ev.direction, gp, g_new) {
                stepper.prepare_dense();
                let (t_event, state_event) =
                    refine_event(&mut stepper, ev, gp, g_new, t_tol.unwrap(), &mut buf);
                sink.sample(t_event, &state_event);
                return Ok(Some((t_event, state_event)));
            }
            g_prev = Some(g_new);
        }

        sink.sample(stepper.t, &stepper.y);
    }
    Ok(None)
}

/// Bisects the dense interpolant of the triggering step down to `|g| <
/// event_tol` or a time bracket below `t_tol`, returning the crossed-side end.
fn refine_event(
    stepper: &mut Stepper,
    event: &EventSpec,
    g_start: f64,
    g_end: f64,
    t_tol: f64,
    buf: &mut [f64],
) -> (f64, Vec<f64>) {
    let crossed = |g: f64| match event.direction {
        EventDirection::Decreasing => g <= 0.0,
        EventDirection::Increasing => g >= 0.0,
        EventDirection::Any => {
            if g_start > 0.0 {
                g <= 0.0
            } else {
                g >= 0.0
            }
        }
    };
    debug_assert!(!crossed(g_start) && crossed(g_end));

    let (mut lo, mut hi) = (stepper.t_old, stepper.t);
    let mut g_hi = g_end;
    for _ in 0..MAX_EVENT_ITER {
        if g_hi.abs() < event.event_tol || hi - lo <= t_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        stepper.dense_eval(mid, buf);
        let g_mid = event.eval(mid, buf);
        if crossed(g_mid) {
            hi = mid;
            g_hi = g_mid;
        } else {
            lo = mid;
        }
    }
    stepper.dense_eval(hi, buf);
    (hi, buf.to_vec())
}

/// Exact flow of `sys` in fast time `t`; state `[I, phi, y_1..y_n, x_1..x_n]`.
///
/// `dI/dt = -eps dH1/dphi`, `dphi/dt = dH0/dI + eps dH1/dI`,
/// `dy_j/dt = -eps dH0/dx_j - eps^2 dH1/dx_j`,
/// `dx_j/dt = eps dH0/dy_j + eps^2 dH1/dy_j`.
pub fn exact_field(sys: &SystemSpec, epsilon: f64) -> OdeProblem<'_> {
    assert!(epsilon >= 0.0 && epsilon.is_finite());
    let n = sys.n;
    let eps2 = epsilon * epsilon;
    OdeProblem::new(2 + 2 * n, "exact", move |_t, s, ds| {
        let (action, phi) = (s[0], s[1]);
        let y = &s[2..2 + n];
        let x = &s[2 + n..2 + 2 * n];
        ds[0] = -epsilon * sys.h1.d_phi(action, phi, y, x, epsilon);
        ds[1] = sys.h0.d_action(action, y, x) + epsilon * sys.h1.d_action(action, phi, y, x, epsilon);
        for j in 0..n {
            ds[2 + j] = -epsilon * sys.h0.d_x(j, action, y, x)
                - eps2 * sys.h1.d_x(j, action, phi, y, x, epsilon);
            ds[2 + n + j] = epsilon * sys.h0.d_y(j, action, y, x)
                + eps2 * sys.h1.d_y(j, action, phi, y, x, epsilon);
        }
    })
}

/// Averaged flow of `sys` in slow time `tau`; state `[I, y_1..y_n, x_1..x_n]`.
///
/// The action is frozen and the slow pairs follow `H0` at that action:
/// `dy_j/dtau = -dH0/dx_j`, `dx_j/dtau = dH0/dy_j`.
pub fn averaged_field(sys: &SystemSpec) -> OdeProblem<'_> {
    let n = sys.n;
    OdeProblem::new(1 + 2 * n, "averaged", move |_t, s, ds| {
        let action = s[0];
        let y = &s[1..1 + n];
        let x = &s[1 + n..1 + 2 * n];
        ds[0] = 0.0;
        for j in 0..n {
            ds[1 + j] = -sys.h0.d_x(j, action, y, x);
            ds[1 + n + j] = sys.h0.d_y(j, action, y, x);
        }
    })
}

/// Improved averaged flow at frozen action `j0`, in slow time `tau`; state
/// `[eta_1..eta_n, xi_1..xi_n, Phi]`.
///
/// The slow pairs follow `H0 + eps * <H1>` at the frozen action, and `Phi`
/// accumulates the fast phase through the first-order frequency
/// `omega0 + eps * omega1`, all evaluated at `(j0, eta, xi)`.
pub fn improved_field(sys: &SystemSpec, epsilon: f64, j0: f64) -> OdeProblem<'_> {
    assert!(epsilon >= 0.0 && epsilon.is_finite());
    let n = sys.n;
    OdeProblem::new(2 * n + 1, "improved", move |_t, s, ds| {
        let eta = &s[..n];
        let xi = &s[n..2 * n];
        for j in 0..n {
            ds[j] = -(sys.h0.d_x(j, j0, eta, xi)
                + epsilon * sys.h1.mean_d_x(j, j0, eta, xi, 0.0));
            ds[n + j] = sys.h0.d_y(j, j0, eta, xi)
                + epsilon * sys.h1.mean_d_y(j, j0, eta, xi, 0.0);
        }
        ds[2 * n] = sys.h0.d_action(j0, eta, xi)
            + epsilon * sys.h1.mean_d_action(j0, eta, xi, 0.0);
    })
}

/// Packs a [`PhaseState`] into the exact-flow layout `[I, phi, y.., x..]`.
pub fn pack_phase(state: &PhaseState) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 + state.y.len() + state.x.len());
    v.push(state.action);
    v.push(state.phase);
    v.extend_from_slice(&state.y);
    v.extend_from_slice(&state.x);
    v
}

/// Unpacks an exact-flow state vector.
pub fn unpack_phase(v: &[f64], n: usize, epsilon: f64) -> PhaseState {
    assert_eq!(v.len(), 2 + 2 * n);
    PhaseState::new(v[0], v[1], v[2..2 + n].to_vec(), v[2 + n..].to_vec(), epsilon)
}

/// Packs a [`SlowState`] into the averaged-flow layout `[I, y.., x..]`.
pub fn pack_slow(state: &SlowState) -> Vec<f64> {
    let mut v = Vec::with_capacity(1 + state.y.len() + state.x.len());
    v.push(state.action);
    v.extend_from_slice(&state.y);
    v.extend_from_slice(&state.x);
    v
}

/// Unpacks an averaged-flow state vector.
pub fn unpack_slow(v: &[f64], n: usize) -> SlowState {
    assert_eq!(v.len(), 1 + 2 * n);
    SlowState { action: v[0], y: v[1..1 + n].to_vec(), x: v[1 + n..].to_vec() }
}
