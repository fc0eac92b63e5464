//! Shared fixtures for the benchmarks.

use mgcpp_core::lob_ingest::{mid_price_series, SessionBounds};
use mgcpp_core::markov_price::TransitionModel;
use mgcpp_core::mgcpp::simulate_mgcpp;
use mgcpp_core::point_process::simulate_poisson;
use mgcpp_core::TickSeries;

/// A one-asset synthetic trading day of ticks driven by a Poisson process
/// and a two-state chain.
pub fn synthetic_day(lambda: f64, seed: u64) -> TickSeries {
    let session = SessionBounds::NASDAQ;
    let model = TransitionModel::two_state(0.52, 0.56, 0.005).unwrap();
    let events = simulate_poisson(&[lambda], session.length(), seed).unwrap();
    let path = simulate_mgcpp(&events, &[model], &[30.0], seed).unwrap();
    let quotes = path.assets[0].to_quotes(session.start, false).unwrap();
    mid_price_series(&quotes).unwrap().clip(session).unwrap()
}

/// An `n`-state chain with a banded, fully connected transition matrix.
pub fn banded_model(n: usize) -> TransitionModel {
    let rows = (0..n)
        .map(|i| {
            let raw: Vec<f64> = (0..n)
                .map(|j| 1.0 / (1.0 + (i as f64 - j as f64).abs()))
                .collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|x| x / s).collect()
        })
        .collect();
    let values = (0..n)
        .map(|k| 0.005 * (k as f64 - n as f64 / 2.0 + 0.5))
        .collect();
    TransitionModel::new(values, rows).unwrap()
}
