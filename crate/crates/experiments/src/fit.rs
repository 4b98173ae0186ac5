//! Ordinary least-squares line fit for scaling-law estimation.

use crate::ExperimentError;
use serde::Serialize;

/// A fitted line `y = slope * x + intercept` with the RMS of its residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

/// Least-squares line through `points`; errors on fewer than two points or a
/// degenerate abscissa.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<LineFit, ExperimentError> {
    if points.len() < 2 {
        return Err(ExperimentError::Underdetermined(format!(
            "{} point(s), need at least 2",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(ExperimentError::Underdetermined("all abscissae coincide".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 =
        points.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    Ok(LineFit { slope, intercept, residual: (ss_res / n).sqrt() })
}
