use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::{EventTimes, HawkesSpec};
use crate::error::{param, Result};
use crate::rng;

/// Independent homogeneous Poisson streams; dimension `i` draws from
/// sub-stream `i` of `seed`.
pub fn simulate_poisson(lambda: &[f64], horizon: f64, seed: u64) -> Result<EventTimes> {
    if lambda.is_empty() {
        return Err(param("need at least one intensity"));
    }
    if let Some(l) = lambda.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
        return Err(param(format!(
            "Poisson intensity must be positive, got {l}"
        )));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(param(format!("horizon must be positive, got {horizon}")));
    }
    let dims = lambda
        .iter()
        .enumerate()
        .map(|(i, &rate)| {
            let mut rng = rng::stream(seed, i as u64);
            let gap = Exp::new(rate).expect("rate checked above");
            let mut times = Vec::with_capacity((rate * horizon * 1.05) as usize + 16);
            let mut t = 0.0;
            loop {
                t += gap.sample(&mut rng);
                if t > horizon {
                    break;
                }
                times.push(t);
            }
            times
        })
        .collect();
    EventTimes::new(dims, horizon)
}

/// Exact Ogata thinning for the exponential-kernel Hawkes process.
///
/// Between events every kernel decays, so the total intensity just after
/// the current time bounds the intensity until the next accepted event.
pub fn simulate_hawkes(spec: &HawkesSpec, horizon: f64, seed: u64) -> Result<EventTimes> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(param(format!("horizon must be positive, got {horizon}")));
    }
    let d = spec.dim();
    let base = spec.base();
    let alpha = spec.alpha();
    let beta = spec.beta();
    let mut rng = rng::stream(seed, 0);
    // excitation[i][j]: current contribution of past j-events to λ_i
    let mut excitation = vec![vec![0.0f64; d]; d];
    let mut intensity = base.to_vec();
    let mut dims: Vec<Vec<f64>> = vec![Vec::new(); d];
    let mut t = 0.0;
    loop {
        let bound: f64 = intensity.iter().sum();
        let gap = -(1.0 - rng.random::<f64>()).ln() / bound;
        t += gap;
        if t > horizon {
            break;
        }
        for i in 0..d {
            let mut lam = base[i];
            for j in 0..d {
                let e = &mut excitation[i][j];
                if *e != 0.0 {
                    *e *= (-beta[i][j] * gap).exp();
                    lam += *e;
                }
            }
            intensity[i] = lam;
        }
        let total: f64 = intensity.iter().sum();
        let u = rng.random::<f64>() * bound;
        if u >= total {
            continue;
        }
        // attribute the accepted point to a dimension
        let mut acc = 0.0;
        let mut hit = d - 1;
        for (i, lam) in intensity.iter().enumerate() {
            acc += lam;
            if u < acc {
                hit = i;
                break;
            }
        }
        dims[hit].push(t);
        for i in 0..d {
            let a = alpha[i][hit];
            if a > 0.0 {
                excitation[i][hit] += a;
                intensity[i] += a;
            }
        }
    }
    EventTimes::new(dims, horizon)
}
