//! Built-in benchmark system with a closed-form crossing.
//!
//! `H = y + (I - x^2)^2 / 2 + eps * c * (1/2 + I) * sin(phi)` with one slow
//! pair. Everything about its resonance is elementary: the surface is
//! `a = x^2`, the curvature is `alpha = 1`, the torque is `b = 2x`, the
//! averaged drift from the origin is `x(tau) = tau`, `y(tau) = y0 - tau^3/3`,
//! and a trajectory started at action `J0` crosses at `tau = sqrt(J0)` having
//! accumulated the fast phase `2 J0^{3/2} / (3 eps)`.

use super::fourier::{AffineActionCoeff, ConstCoeff, FourierSeries};
use super::{SlowHamiltonian, SystemSpec};

/// `H0 = y + (I - x^2)^2 / 2` for one slow pair.
pub struct BenchmarkH0;

impl SlowHamiltonian for BenchmarkH0 {
    fn value(&self, action: f64, y: &[f64], x: &[f64]) -> f64 {
        let r = action - x[0] * x[0];
        y[0] + 0.5 * r * r
    }

    fn d_action(&self, action: f64, _y: &[f64], x: &[f64]) -> f64 {
        action - x[0] * x[0]
    }

    fn d_y(&self, _j: usize, _action: f64, _y: &[f64], _x: &[f64]) -> f64 {
        1.0
    }

    fn d_x(&self, _j: usize, action: f64, _y: &[f64], x: &[f64]) -> f64 {
        -2.0 * x[0] * (action - x[0] * x[0])
    }

    fn d2_action(&self, _action: f64, _y: &[f64], _x: &[f64]) -> f64 {
        1.0
    }

    fn d2_action_y(&self, _j: usize, _action: f64, _y: &[f64], _x: &[f64]) -> f64 {
        0.0
    }

    fn d2_action_x(&self, _j: usize, _action: f64, _y: &[f64], x: &[f64]) -> f64 {
        -2.0 * x[0]
    }

    fn d3_action(&self, _action: f64, _y: &[f64], _x: &[f64]) -> f64 {
        0.0
    }
}

/// The benchmark system with perturbation amplitude `c`.
///
/// `H1 = c * (1/2 + I) * sin(phi)`; the action bracket `(-0.5, 6)` comfortably
/// contains the surface for `|x| <= 2.4`.
pub fn benchmark_system_scaled(c: f64) -> SystemSpec {
    let h1 = FourierSeries::new(
        vec![Box::new(ConstCoeff(0.0)), Box::new(ConstCoeff(0.0))],
        vec![Box::new(AffineActionCoeff { offset: 0.5 * c, slope: c })],
    );
    SystemSpec::new(1, Box::new(BenchmarkH0), h1, (-0.5, 6.0))
}

/// The benchmark system at unit amplitude.
pub fn benchmark_system() -> SystemSpec {
    benchmark_system_scaled(1.0)
}

/// Closed-form pseudophase of a benchmark trajectory started at the origin of
/// the slow plane with action `J0` and phase `phi0`:
/// `Xi = (phi0 + 2 J0^{3/2} / (3 eps)) / (2 pi)`.
///
/// Returned unreduced; take the fractional part where a circle value is
/// needed.
pub fn closed_form_pseudophase(j0: f64, phi0: f64, epsilon: f64) -> f64 {
    (phi0 + 2.0 * j0.powf(1.5) / (3.0 * epsilon)) / std::f64::consts::TAU
}
