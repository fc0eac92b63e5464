//! The compound price process `S_{i,t} = S_{i,0} + Σ_{k ≤ N_{i,t}} a_i(X_{i,k})`
//! and its limit-theorem predictors.
//!
//! All predictors take the window length in physical seconds. The
//! `(n, t)` factorisation of the limit theorems only enters through the
//! product `n·t`, which is the window.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::lob_ingest::{synthesize_quotes, Quote, TickSeries};
use crate::markov_price::{ChainSampler, TransitionModel};
use crate::point_process::{windows_in, EventTimes};
use crate::rng;

/// Calibrated limit parameters of one asset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssetParams {
    /// Long-run event rate (events/s).
    pub lambda_bar: f64,
    /// Diagonal entry of Σ (events/s).
    pub sigma_sq: f64,
    /// Stationary mean mark (dollars per event).
    pub a_star: f64,
    /// Per-event volatility scale (dollars).
    pub sigma_star: f64,
    /// Mid-price granularity (dollars).
    pub delta: f64,
}

impl AssetParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_bar > 0.0 && self.lambda_bar.is_finite()) {
            return Err(param(format!(
                "lambda_bar must be positive, got {}",
                self.lambda_bar
            )));
        }
        if !(self.sigma_sq >= 0.0 && self.sigma_star >= 0.0) {
            return Err(param("sigma_sq and sigma_star must be non-negative"));
        }
        if !self.a_star.is_finite() {
            return Err(param("a_star must be finite"));
        }
        Ok(())
    }

    /// `σ*·√λ̄`, the slope of the stochastic-centralization std in √seconds.
    pub fn fclt1_coefficient(&self) -> f64 {
        self.sigma_star * self.lambda_bar.sqrt()
    }

    /// `√(σ*²λ̄ + a*²σ²)`, the slope of the deterministic-centralization std.
    pub fn fclt2_coefficient(&self) -> f64 {
        (self.sigma_star * self.sigma_star * self.lambda_bar
            + self.a_star * self.a_star * self.sigma_sq)
            .sqrt()
    }
}

/// Per-asset parameters of a d-dimensional model. Assets decouple because
/// every matrix in the limit theorems is diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedParams {
    assets: Vec<AssetParams>,
}

impl CalibratedParams {
    pub fn new(assets: Vec<AssetParams>) -> Result<Self> {
        if assets.is_empty() {
            return Err(param("at least one asset is required"));
        }
        assets.iter().try_for_each(AssetParams::validate)?;
        Ok(Self { assets })
    }

    pub fn dim(&self) -> usize {
        self.assets.len()
    }

    pub fn assets(&self) -> &[AssetParams] {
        &self.assets
    }
}

/// A right-continuous step price observed over a span.
pub trait SteppedPrice {
    /// Start and end of the observation span, on the series' own clock.
    fn span(&self) -> (f64, f64);
    /// Price in effect at `t` (last update at or before `t`).
    fn price_at(&self, t: f64) -> f64;
}

impl SteppedPrice for TickSeries {
    fn span(&self) -> (f64, f64) {
        let s = self.session();
        (s.start, s.end)
    }

    fn price_at(&self, t: f64) -> f64 {
        self.mid_at(t)
    }
}

/// Simulated price of one asset: starts at `s0`, jumps to `prices[k]` at
/// `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetPath {
    pub s0: f64,
    pub times: Vec<f64>,
    pub prices: Vec<f64>,
    pub horizon: f64,
}

impl AssetPath {
    pub fn terminal(&self) -> f64 {
        self.prices.last().copied().unwrap_or(self.s0)
    }

    /// A one-cent-tick quote stream tracing this path, times shifted by
    /// `offset` seconds. The first quote sits at `offset` with mid `s0`.
    pub fn to_quotes(&self, offset: f64, size_updates: bool) -> Result<Vec<Quote>> {
        let times: Vec<f64> = std::iter::once(0.0)
            .chain(self.times.iter().copied())
            .map(|t| t + offset)
            .collect();
        let mids: Vec<f64> = std::iter::once(self.s0)
            .chain(self.prices.iter().copied())
            .collect();
        synthesize_quotes(&times, &mids, size_updates)
    }
}

impl SteppedPrice for AssetPath {
    fn span(&self) -> (f64, f64) {
        (0.0, self.horizon)
    }

    fn price_at(&self, t: f64) -> f64 {
        match self.times.partition_point(|&x| x <= t) {
            0 => self.s0,
            k => self.prices[k - 1],
        }
    }
}

/// Simulated multi-asset price path.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePath {
    pub assets: Vec<AssetPath>,
}

impl PricePath {
    pub fn initial_prices(&self) -> Vec<f64> {
        self.assets.iter().map(|a| a.s0).collect()
    }

    /// CSV rows `asset,time,price`, including a row at time 0 for `S₀`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "asset,time,price")?;
        for (i, a) in self.assets.iter().enumerate() {
            writeln!(out, "{i},0,{}", a.s0)?;
            for (t, p) in a.times.iter().zip(&a.prices) {
                writeln!(out, "{i},{t},{p}")?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Attaches Markov marks to the events of each asset. Asset `i` uses
/// sub-stream `i` of `seed`; its chain starts from `π*`.
pub fn simulate_mgcpp(
    events: &EventTimes,
    models: &[TransitionModel],
    s0: &[f64],
    seed: u64,
) -> Result<PricePath> {
    if events.dim() != models.len() || models.len() != s0.len() {
        return Err(param(format!(
            "dimension mismatch: {} event streams, {} models, {} initial prices",
            events.dim(),
            models.len(),
            s0.len()
        )));
    }
    let assets = models
        .par_iter()
        .enumerate()
        .map(|(i, model)| {
            let times = events.times(i);
            let sampler = ChainSampler::new(model);
            let mut rng = rng::stream(seed, i as u64);
            let values = model.values();
            let mut prices = Vec::with_capacity(times.len());
            let mut price = s0[i];
            let mut state = None;
            for _ in times {
                let x = match state {
                    None => sampler.initial(&mut rng),
                    Some(prev) => sampler.step(prev, &mut rng),
                };
                state = Some(x);
                price += values[x];
                prices.push(price);
            }
            AssetPath {
                s0: s0[i],
                times: times.to_vec(),
                prices,
                horizon: events.horizon(),
            }
        })
        .collect();
    Ok(PricePath { assets })
}

/// Law-of-large-numbers approximation of `S_{nt} - S_0`: `n·t·a*·λ̄` per asset.
pub fn lln_drift(params: &CalibratedParams, t: f64, n: f64) -> Vec<f64> {
    params
        .assets
        .iter()
        .map(|a| n * t * a.a_star * a.lambda_bar)
        .collect()
}

fn boundaries(span: (f64, f64), window: f64) -> Result<Vec<f64>> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(param(format!("window must be positive, got {window}")));
    }
    let m = windows_in(span.1 - span.0, window);
    if m < 2 {
        return Err(Error::InsufficientData(format!(
            "span {} s holds {m} windows of {window} s; need at least 2",
            span.1 - span.0
        )));
    }
    Ok((0..=m).map(|k| span.0 + k as f64 * window).collect())
}

/// Raw price differences `S_{(i+1)w} - S_{iw}` over disjoint windows.
pub fn window_price_differences<S: SteppedPrice + ?Sized>(
    prices: &S,
    window: f64,
) -> Result<Vec<f64>> {
    let b = boundaries(prices.span(), window)?;
    let p: Vec<f64> = b.iter().map(|&t| prices.price_at(t)).collect();
    Ok(p.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Stochastic-centralization residuals
/// `S*_i = S_{(i+1)w} - S_{iw} - (N_{(i+1)w} - N_{iw})·a*` over disjoint
/// windows. `event_times` must be on the same clock as `prices`.
pub fn fclt1_residuals<S: SteppedPrice + ?Sized>(
    prices: &S,
    event_times: &[f64],
    a_star: f64,
    window: f64,
) -> Result<Vec<f64>> {
    let b = boundaries(prices.span(), window)?;
    let p: Vec<f64> = b.iter().map(|&t| prices.price_at(t)).collect();
    let n: Vec<usize> = b
        .iter()
        .map(|&t| event_times.partition_point(|&x| x <= t))
        .collect();
    Ok((0..b.len() - 1)
        .map(|i| p[i + 1] - p[i] - (n[i + 1] - n[i]) as f64 * a_star)
        .collect())
}

/// `σ*·√(λ̄·w)` per asset.
pub fn fclt1_std(params: &CalibratedParams, window: f64) -> Vec<f64> {
    params
        .assets
        .iter()
        .map(|a| a.fclt1_coefficient() * window.max(0.0).sqrt())
        .collect()
}

/// `√(σ*²λ̄w + a*²σ²w)` per asset.
pub fn fclt2_std(params: &CalibratedParams, window: f64) -> Vec<f64> {
    params
        .assets
        .iter()
        .map(|a| a.fclt2_coefficient() * window.max(0.0).sqrt())
        .collect()
}

const PATH_BLOCK: usize = 4096;

/// Draws of the deterministic-centralization approximation of
/// `S_{nt} - S_0`:
/// `a*λ̄·nt + √(nt)·(σ*√λ̄·Z₁ + a*σ·Z₂)` with independent standard normals.
///
/// Returns `[asset][path]`. Paths are generated in fixed blocks, block `k`
/// drawing from sub-stream `k` of `seed`, so the output does not depend on
/// the thread count.
pub fn approximate_price_fclt2(
    params: &CalibratedParams,
    t: f64,
    n: f64,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if n_paths == 0 {
        return Err(param("n_paths must be at least 1"));
    }
    let nt = n * t;
    if !(nt >= 0.0 && nt.is_finite()) {
        return Err(param(format!("n·t must be non-negative, got {nt}")));
    }
    let root = nt.sqrt();
    let d = params.dim();
    let blocks: Vec<Vec<f64>> = (0..n_paths.div_ceil(PATH_BLOCK))
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(seed, k as u64);
            let len = PATH_BLOCK.min(n_paths - k * PATH_BLOCK);
            let mut out = Vec::with_capacity(len * d);
            for _ in 0..len {
                for a in &params.assets {
                    let z1: f64 = rng.sample(StandardNormal);
                    let z2: f64 = rng.sample(StandardNormal);
                    out.push(
                        a.a_star * a.lambda_bar * nt
                            + root
                                * (a.fclt1_coefficient() * z1 + a.a_star * a.sigma_sq.sqrt() * z2),
                    );
                }
            }
            out
        })
        .collect();
    let mut per_asset = vec![Vec::with_capacity(n_paths); d];
    for block in blocks {
        for row in block.chunks(d) {
            for (i, x) in row.iter().enumerate() {
                per_asset[i].push(*x);
            }
        }
    }
    Ok(per_asset)
}

/// CSV rows `asset,window_s,std_fclt1,std_fclt2`.
pub fn write_predictor_csv<W: Write>(
    params: &CalibratedParams,
    names: &[String],
    windows: &[f64],
    mut out: W,
) -> Result<()> {
    if names.len() != params.dim() {
        return Err(param("one name per asset is required"));
    }
    writeln!(out, "asset,window_s,std_fclt1,std_fclt2")?;
    for w in windows {
        let s1 = fclt1_std(params, *w);
        let s2 = fclt2_std(params, *w);
        for (i, name) in names.iter().enumerate() {
            writeln!(out, "{name},{w},{},{}", s1[i], s2[i])?;
        }
    }
    out.flush()?;
    Ok(())
}
