//! Simulation and verification toolkit for slow-fast Hamiltonian systems with
//! one fast phase.
//!
//! The systems treated here have a Hamiltonian `H = H0(I, y, x) + eps * H1(I, phi, y, x, eps)`
//! with action `I`, fast phase `phi`, and `n` slow conjugate pairs `(y_j, x_j / eps)`.
//! A trajectory started above the resonant surface `dH0/dI = 0` drifts toward it on
//! the slow time scale `tau = eps * t` and crosses it once; the fractional part of
//! the fast phase at that crossing (the *pseudophase*) is what this crate computes,
//! predicts, and analyzes:
//!
//! - [`model`] — system description: `H0` with its partial derivatives, `H1` as a
//!   finite Fourier series in the phase, resonant-surface quantities, and the
//!   generating function of the improved averaging transformation.
//! - [`integrate`] — an order-8 embedded Runge-Kutta integrator with dense output
//!   and event refinement, plus the three vector fields (exact, averaged, improved).
//! - [`averaging`] — the near-identity transformation between exact and improved
//!   variables and crossing detection for the averaged/improved flows.
//! - [`resonance`] — crossing detection for the exact flow, pseudophase evaluation
//!   and prediction, the frozen-pendulum phase portrait, and exclusion diagnostics.
//! - [`roots`] — the scalar root-finding helpers shared by the modules above.

pub mod averaging;
pub mod integrate;
pub mod model;
pub mod resonance;
pub mod roots;
