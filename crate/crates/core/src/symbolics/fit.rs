//! Log-log fit of a power law `P ≈ C ρ^p` over the last decade of ρ.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeadingOrderFit {
    pub exponent: f64,
    pub coefficient: f64,
    /// RMS of the log residuals
    pub residual: f64,
    pub points_used: usize,
}

/// Fits `log|P| = log|C| + p log ρ` on the samples with `ρ ≤ 10 ρ_min`.
pub fn fit_leading_order(samples: &[(f64, f64)]) -> Result<LeadingOrderFit> {
    if samples.windows(2).any(|w| !(w[1].0 < w[0].0)) {
        return Err(Error::Fit("rho values must be strictly decreasing".into()));
    }
    let rho_min = samples
        .iter()
        .map(|s| s.0)
        .fold(f64::INFINITY, f64::min);
    let tail: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|s| s.0 <= 10.0 * rho_min * (1.0 + 1e-12))
        .collect();
    if tail.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 4 points in the last decade, have {}",
            tail.len()
        )));
    }
    if tail.iter().any(|s| !(s.0 > 0.0) || !s.1.is_finite() || s.1 == 0.0) {
        return Err(Error::Fit("samples must have rho > 0 and finite nonzero P".into()));
    }
    let sign = tail[0].1.signum();
    if tail.iter().any(|s| s.1.signum() != sign) {
        return Err(Error::Fit("P changes sign; rho not yet asymptotic".into()));
    }
    let n = tail.len() as f64;
    let xs: Vec<f64> = tail.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|s| s.1.abs().ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(LeadingOrderFit {
        exponent: slope,
        coefficient: sign * intercept.exp(),
        residual: (rss / n).sqrt(),
        points_used: tail.len(),
    })
}
