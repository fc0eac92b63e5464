use rand::Rng;

use super::TransitionModel;
use crate::rng;

/// Draws states of a [`TransitionModel`] by inverse-CDF lookup.
#[derive(Debug, Clone)]
pub struct ChainSampler {
    initial: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = p
        .iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect();
    // the last reachable state absorbs rounding
    if let Some(last) = p.iter().rposition(|&x| x > 0.0) {
        for c in &mut out[last..] {
            *c = f64::INFINITY;
        }
    }
    out
}

fn pick(cum: &[f64], u: f64) -> usize {
    cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1)
}

impl ChainSampler {
    pub fn new(model: &TransitionModel) -> Self {
        Self {
            initial: cumulative(model.pi_star()),
            rows: model.transition().iter().map(|r| cumulative(r)).collect(),
        }
    }

    /// A draw from the stationary law.
    pub fn initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        pick(&self.initial, rng.random())
    }

    pub fn step<R: Rng + ?Sized>(&self, from: usize, rng: &mut R) -> usize {
        pick(&self.rows[from], rng.random())
    }
}

/// `n` consecutive states started from the stationary law, drawn from
/// sub-stream 0 of `seed`.
pub fn simulate_states(model: &TransitionModel, n: usize, seed: u64) -> Vec<usize> {
    let sampler = ChainSampler::new(model);
    let mut rng = rng::stream(seed, 0);
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    let mut x = sampler.initial(&mut rng);
    out.push(x);
    for _ in 1..n {
        x = sampler.step(x, &mut rng);
        out.push(x);
    }
    out
}
