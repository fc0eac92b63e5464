use log::warn;

use super::{EventTimes, RateParams};
use crate::error::{param, Error, Result};

/// Number of complete disjoint windows of length `window` in `span`.
pub fn windows_in(span: f64, window: f64) -> usize {
    // tolerate representation error, e.g. 23400 / 0.1
    ((span / window) * (1.0 + 1e-12)).floor().max(0.0) as usize
}

/// Event counts in the disjoint windows `[k·w, (k+1)·w)`, `k < n_windows`.
pub fn window_counts(times: &[f64], window: f64, n_windows: usize) -> Vec<f64> {
    let mut counts = vec![0.0; n_windows];
    for &t in times {
        let k = (t / window) as usize;
        if k < n_windows {
            counts[k] += 1.0;
        }
    }
    counts
}

/// `λ̂_i = N_i(T) / T`.
pub fn estimate_lambda_bar(events: &EventTimes) -> Vec<f64> {
    events
        .iter()
        .enumerate()
        .map(|(i, d)| {
            if d.is_empty() {
                warn!("dimension {i} has no events; lambda_bar estimate is 0");
            }
            d.len() as f64 / events.horizon()
        })
        .collect()
}

/// `σ̂²_i` = sample variance of disjoint-window counts divided by the window.
pub fn estimate_sigma_sq(events: &EventTimes, window: f64) -> Result<Vec<f64>> {
    let cov = window_count_covariance(events, window)?;
    Ok((0..events.dim()).map(|i| cov[i][i]).collect())
}

/// Sample covariance of disjoint-window counts across dimensions, per
/// second of window. Only the diagonal feeds the predictors.
pub fn window_count_covariance(events: &EventTimes, window: f64) -> Result<Vec<Vec<f64>>> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(param(format!("window must be positive, got {window}")));
    }
    let m = windows_in(events.horizon(), window);
    if m < 2 {
        return Err(Error::InsufficientData(format!(
            "horizon {} holds {m} windows of {window}s; need at least 2",
            events.horizon()
        )));
    }
    if m < 30 {
        warn!("only {m} disjoint windows of {window}s; variance estimate is unreliable");
    }
    let counts: Vec<Vec<f64>> = events.iter().map(|d| window_counts(d, window, m)).collect();
    let means: Vec<f64> = counts
        .iter()
        .map(|c| c.iter().sum::<f64>() / m as f64)
        .collect();
    let d = events.dim();
    let mut cov = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i..d {
            let s: f64 = counts[i]
                .iter()
                .zip(&counts[j])
                .map(|(a, b)| (a - means[i]) * (b - means[j]))
                .sum();
            let v = s / (m as f64 - 1.0) / window;
            cov[i][j] = v;
            cov[j][i] = v;
        }
    }
    Ok(cov)
}

pub fn estimate_rate_params(events: &EventTimes, window: f64) -> Result<RateParams> {
    Ok(RateParams {
        lambda_bar: estimate_lambda_bar(events),
        sigma_sq: estimate_sigma_sq(events, window)?,
    })
}
