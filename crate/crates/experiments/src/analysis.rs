//! Static resonance-surface analysis: conditions, portrait, exclusion bands.

use crate::ExperimentError;
use slowfast_core::averaging::averaged_crossing;
use slowfast_core::model::{ConditionReport, CriticalKind, SystemSpec};
use slowfast_core::resonance::{potential_portrait, PortraitClass};
use std::f64::consts::TAU;
use std::fmt;

/// One saddle's excluded pseudophase band on the unit circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExclusionBand {
    /// Fractional pseudophase the saddle maps to.
    pub center: f64,
    /// Half-width `c_a * sqrt(eps) * |ln eps|`.
    pub half_width: f64,
}

/// Everything the crossing theory needs to know about one surface point.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub surface_y: Vec<f64>,
    pub surface_x: Vec<f64>,
    /// Slow time of the averaged crossing, when the point came from one.
    pub tau_star: Option<f64>,
    pub resonant_action: f64,
    pub alpha: f64,
    pub torque: f64,
    pub conditions: ConditionReport,
    pub portrait: PortraitClass,
    /// Worst-case saddle clearance over all crossing phases.
    pub min_clearance: f64,
    pub exclusion_bands: Vec<ExclusionBand>,
    pub epsilon: f64,
    pub c_a: f64,
}

/// Analyzes the resonance surface at a point — either the given `(y0, x0)` or,
/// with `at_resonance`, wherever the averaged flow from `(i0, y0, x0)` crosses.
pub fn resonance_analysis(
    sys: &SystemSpec,
    i0: f64,
    y0: &[f64],
    x0: &[f64],
    at_resonance: bool,
    epsilon: f64,
    c_a: f64,
) -> Result<AnalysisReport, ExperimentError> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(ExperimentError::Config(format!(
            "perturbation strength must be finite and positive, got {epsilon}"
        )));
    }
    if !(c_a.is_finite() && c_a > 0.0) {
        return Err(ExperimentError::Config(format!(
            "band coefficient must be finite and positive, got {c_a}"
        )));
    }
    let (tau_star, y_star, x_star) = if at_resonance {
        let (tau, y, x) = averaged_crossing(sys, i0, y0, x0)?;
        (Some(tau), y, x)
    } else {
        (None, y0.to_vec(), x0.to_vec())
    };

    let resonant_action = sys.resonant_action(&y_star, &x_star)?;
    let alpha = sys.alpha(&y_star, &x_star)?;
    let torque = sys.torque(&y_star, &x_star)?;
    let conditions = sys.check_conditions(&y_star, &x_star)?;
    let portrait = potential_portrait(sys, &y_star, &x_star)?;

    // A crossing phase can land on a saddle, so with saddles present the
    // clearance can be as small as its eps floor; without them it is 1/2.
    let has_maxima =
        portrait.critical_points.iter().any(|p| p.kind == CriticalKind::Maximum);
    let min_clearance = if has_maxima { f64::min(0.5, epsilon) } else { 0.5 };

    // With a vanishing torque the pseudophase itself is undefined, so no
    // band placement is meaningful; the conditions report carries the flag.
    let h1_mean = sys.h1_mean(resonant_action, &y_star, &x_star);
    let half_width = c_a * epsilon.sqrt() * epsilon.ln().abs();
    let exclusion_bands = if conditions.torque_ok {
        portrait
            .critical_points
            .iter()
            .filter(|p| p.kind == CriticalKind::Maximum)
            .map(|p| {
                let center = (p.potential - h1_mean) / (TAU * torque);
                let center = center - center.floor();
                ExclusionBand { center: if center >= 1.0 { 0.0 } else { center }, half_width }
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(AnalysisReport {
        surface_y: y_star,
        surface_x: x_star,
        tau_star,
        resonant_action,
        alpha,
        torque,
        conditions,
        portrait,
        min_clearance,
        exclusion_bands,
        epsilon,
        c_a,
    })
}

fn fmt_slice(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|c| format!("{c:.12}")).collect();
    format!("[{}]", parts.join(", "))
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tau_star {
            Some(tau) => writeln!(
                f,
                "surface point y* = {}, x* = {} (averaged crossing at tau* = {tau:.12})",
                fmt_slice(&self.surface_y),
                fmt_slice(&self.surface_x)
            )?,
            None => writeln!(
                f,
                "surface point y* = {}, x* = {} (as given)",
                fmt_slice(&self.surface_y),
                fmt_slice(&self.surface_x)
            )?,
        }
        writeln!(f, "  resonant action a = {:.12}", self.resonant_action)?;
        writeln!(
            f,
            "  frequency curvature alpha = {:.12} ({})",
            self.alpha,
            if self.conditions.alpha_ok { "nondegenerate" } else { "DEGENERATE" }
        )?;
        writeln!(
            f,
            "  torque b = {:.12} ({})",
            self.torque,
            if self.conditions.torque_ok { "nonzero" } else { "VANISHING" }
        )?;
        if self.portrait.critical_points.is_empty() {
            writeln!(f, "  portrait: no critical points of the crossing potential;")?;
            writeln!(f, "            the phase rotates straight through the crossing")?;
        } else {
            writeln!(
                f,
                "  portrait: {} critical points; oscillatory islands present",
                self.portrait.critical_points.len()
            )?;
            for p in &self.portrait.critical_points {
                let kind = match p.kind {
                    CriticalKind::Maximum => "maximum",
                    CriticalKind::Minimum => "minimum",
                };
                writeln!(
                    f,
                    "            {kind} at phi = {:.12} (potential {:.12}, curvature {:.12})",
                    p.phase, p.potential, p.curvature
                )?;
            }
        }
        writeln!(f, "  worst-case saddle clearance nu = {}", self.min_clearance)?;
        if self.exclusion_bands.is_empty() {
            writeln!(
                f,
                "  exclusion bands (eps = {}, c_a = {}): none",
                self.epsilon, self.c_a
            )?;
        } else {
            writeln!(
                f,
                "  exclusion bands (eps = {}, c_a = {}, half-width {:.6e}):",
                self.epsilon,
                self.c_a,
                self.exclusion_bands[0].half_width
            )?;
            for band in &self.exclusion_bands {
                writeln!(f, "            centered at pseudophase fraction {:.12}", band.center)?;
            }
        }
        if self.conditions.violations.is_empty() {
            write!(f, "  nondegeneracy conditions: all satisfied")?;
        } else {
            writeln!(f, "  nondegeneracy violations:")?;
            for (i, v) in self.conditions.violations.iter().enumerate() {
                if i + 1 == self.conditions.violations.len() {
                    write!(f, "            {v}")?;
                } else {
                    writeln!(f, "            {v}")?;
                }
            }
        }
        Ok(())
    }
}
