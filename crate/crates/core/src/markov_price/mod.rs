//! Markov-chain marks of the price process and their limit constants.
//!
//! The price jumps by `a(X_k)` at the k-th event, where `X` is an ergodic
//! chain with transition matrix `P` and stationary law `π*`. The per-event
//! drift is `a* = Σ_k π*_k a(k)`. The per-event volatility comes from the
//! Poisson equation: with `b = a - a*` and `g = (P + Π* - I)^{-1} b`,
//!
//! ```text
//! v(k)  = b(k)² + Σ_j (g(j) - g(k))² P(k,j) - 2 b(k) Σ_j (g(j) - g(k)) P(k,j)
//! σ*²   = Σ_k π*_k v(k)
//! ```
//!
//! For the two-state chain on `(+δ, -δ)` the same quantities have the
//! closed form in [`sigma_star_two_state`].

mod chain;
mod discretize;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

pub use chain::{simulate_states, ChainSampler};
pub use discretize::{discretize_changes, estimate_transition_matrix, Discretization, Scheme};

const ROW_SUM_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;

/// An ergodic mark chain: state values, transition matrix and stationary law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelJson", into = "ModelJson")]
pub struct TransitionModel {
    values: Vec<f64>,
    transition: Vec<Vec<f64>>,
    pi_star: Vec<f64>,
}

/// On-disk layout `{n_states, values, P, pi_star}`.
#[derive(Serialize, Deserialize)]
struct ModelJson {
    n_states: usize,
    values: Vec<f64>,
    #[serde(rename = "P")]
    transition: Vec<Vec<f64>>,
    pi_star: Vec<f64>,
}

impl From<TransitionModel> for ModelJson {
    fn from(m: TransitionModel) -> Self {
        ModelJson {
            n_states: m.values.len(),
            values: m.values,
            transition: m.transition,
            pi_star: m.pi_star,
        }
    }
}

impl TryFrom<ModelJson> for TransitionModel {
    type Error = Error;

    fn try_from(raw: ModelJson) -> Result<Self> {
        if raw.n_states != raw.values.len() {
            return Err(param(format!(
                "n_states = {} but {} values given",
                raw.n_states,
                raw.values.len()
            )));
        }
        let model = TransitionModel::new(raw.values, raw.transition)?;
        let drift = model
            .pi_star
            .iter()
            .zip(&raw.pi_star)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if raw.pi_star.len() != model.n_states() || drift > 1e-9 {
            return Err(param("pi_star does not match the stationary law of P"));
        }
        Ok(model)
    }
}

impl TransitionModel {
    /// Validates `transition` (row-stochastic, single recurrent class) and
    /// solves for the stationary distribution.
    pub fn new(values: Vec<f64>, transition: Vec<Vec<f64>>) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(param("a mark chain needs at least two states"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(param("state values must be finite"));
        }
        if transition.len() != n {
            return Err(param(format!("transition matrix must be {n}x{n}")));
        }
        let pi_star = stationary_distribution(&transition)?;
        Ok(Self {
            values,
            transition,
            pi_star,
        })
    }

    /// Two-state chain on `(+δ, -δ)` with `P = [[p_uu, 1-p_uu], [1-p_dd, p_dd]]`.
    pub fn two_state(p_uu: f64, p_dd: f64, delta: f64) -> Result<Self> {
        check_open_unit(p_uu, "p_uu")?;
        check_open_unit(p_dd, "p_dd")?;
        Self::new(
            vec![delta, -delta],
            vec![vec![p_uu, 1.0 - p_uu], vec![1.0 - p_dd, p_dd]],
        )
    }

    pub fn n_states(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn pi_star(&self) -> &[f64] {
        &self.pi_star
    }

    /// Same chain with different state values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.n_states() {
            return Err(param("value count must match the state count"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(param("state values must be finite"));
        }
        Ok(Self {
            values,
            ..self.clone()
        })
    }
}

fn check_open_unit(p: f64, name: &str) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(param(format!("{name} must lie in (0, 1), got {p}")))
    }
}

fn check_stochastic(p: &[Vec<f64>]) -> Result<usize> {
    let n = p.len();
    if n == 0 {
        return Err(param("empty transition matrix"));
    }
    for (k, row) in p.iter().enumerate() {
        if row.len() != n {
            return Err(param(format!(
                "transition matrix row {k} has {} entries, expected {n}",
                row.len()
            )));
        }
        if row.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(param(format!(
                "transition matrix row {k} has entries outside [0, 1]"
            )));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return Err(param(format!("transition matrix row {k} sums to {s}")));
        }
    }
    Ok(n)
}

/// Number of closed communicating classes of the chain.
fn recurrent_classes(p: &[Vec<f64>]) -> usize {
    let n = p.len();
    let reach: Vec<Vec<bool>> = (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(i) = stack.pop() {
                for j in 0..n {
                    if p[i][j] > 0.0 && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen
        })
        .collect();
    let recurrent: Vec<usize> = (0..n)
        .filter(|&i| (0..n).all(|j| !reach[i][j] || reach[j][i]))
        .collect();
    let mut classes: Vec<&Vec<bool>> = Vec::new();
    for &i in &recurrent {
        if !classes.iter().any(|c| **c == reach[i]) {
            classes.push(&reach[i]);
        }
    }
    classes.len()
}

/// Stationary law `π* P = π*`, `Σ π* = 1`, solved as a linear system in
/// which the normalisation replaces the last balance equation.
pub fn stationary_distribution(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = check_stochastic(p)?;
    let classes = recurrent_classes(p);
    if classes != 1 {
        return Err(Error::NotErgodic(format!("{classes} closed classes")));
    }
    // rows of Pᵀ - I, last row all ones
    let a = DMatrix::from_fn(n, n, |i, j| {
        if i == n - 1 {
            1.0
        } else {
            p[j][i] - if i == j { 1.0 } else { 0.0 }
        }
    });
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NotErgodic("stationary system is singular".into()))?;
    let mut pi: Vec<f64> = pi
        .iter()
        .map(|&x| if x < 0.0 && x > -1e-12 { 0.0 } else { x })
        .collect();
    if pi.iter().any(|&x| x < 0.0) {
        return Err(Error::Consistency(format!(
            "negative stationary mass {pi:?}"
        )));
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= total);
    let residual = (0..n)
        .map(|j| ((0..n).map(|i| pi[i] * p[i][j]).sum::<f64>() - pi[j]).abs())
        .fold(0.0, f64::max);
    if residual > STATIONARY_TOL {
        return Err(Error::Consistency(format!("|π*P - π*| = {residual:e}")));
    }
    Ok(pi)
}

/// `a* = Σ_k π*_k a(k)`.
pub fn a_star(model: &TransitionModel) -> f64 {
    model
        .pi_star
        .iter()
        .zip(&model.values)
        .map(|(p, a)| p * a)
        .sum()
}

/// Drift and volatility constants of the centered mark sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitConstants {
    pub a_star: f64,
    pub sigma_star: f64,
    /// Centered values `b = a - a*`.
    pub b: Vec<f64>,
    /// Solution of `(P + Π* - I) g = b`; empty for the closed form.
    pub g: Vec<f64>,
    /// Per-state variance contributions; empty for the closed form.
    pub v: Vec<f64>,
}

impl LimitConstants {
    pub fn sigma_star_sq(&self) -> f64 {
        self.sigma_star * self.sigma_star
    }
}

/// General n-state constants via the fundamental-matrix solve.
pub fn sigma_star_general(model: &TransitionModel) -> Result<LimitConstants> {
    let n = model.n_states();
    let pi = &model.pi_star;
    let p = &model.transition;
    let a_star = a_star(model);
    let b: Vec<f64> = model.values.iter().map(|a| a - a_star).collect();
    let scale = model.values.iter().fold(1.0f64, |m, a| m.max(a.abs()));

    let centering: f64 = pi.iter().zip(&b).map(|(p, b)| p * b).sum();
    if centering.abs() > 1e-10 * scale {
        return Err(Error::Consistency(format!("π*·b = {centering:e}")));
    }

    let m = DMatrix::from_fn(n, n, |i, j| {
        p[i][j] + pi[j] - if i == j { 1.0 } else { 0.0 }
    });
    let rhs = DVector::from_column_slice(&b);
    let g = m
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NotErgodic("P + Π* - I is singular".into()))?;
    let residual = (&m * &g - &rhs).amax();
    if !(residual < 1e-10 * scale) {
        return Err(Error::NotErgodic(format!(
            "fundamental solve residual {residual:e}"
        )));
    }
    let g: Vec<f64> = g.iter().copied().collect();

    let v: Vec<f64> = (0..n)
        .map(|k| {
            let (mut sq, mut lin) = (0.0, 0.0);
            for j in 0..n {
                let dg = g[j] - g[k];
                sq += dg * dg * p[k][j];
                lin += dg * p[k][j];
            }
            b[k] * b[k] + sq - 2.0 * b[k] * lin
        })
        .collect();
    let var: f64 = pi.iter().zip(&v).map(|(p, v)| p * v).sum();
    let sigma_star = clamp_variance(var, scale)?.sqrt();
    Ok(LimitConstants {
        a_star,
        sigma_star,
        b,
        g,
        v,
    })
}

fn clamp_variance(var: f64, scale: f64) -> Result<f64> {
    if var >= 0.0 {
        Ok(var)
    } else if var >= -1e-12 * scale * scale {
        Ok(0.0)
    } else {
        Err(Error::Consistency(format!(
            "negative asymptotic variance {var:e}"
        )))
    }
}

/// Closed-form constants of the two-state `(+δ, -δ)` chain with
/// `p = p_uu`, `p' = p_dd`:
///
/// ```text
/// π*  = (1 - p') / (2 - p - p')
/// a*  = δ (2π* - 1)
/// σ*² = 4δ² ( (1 - p' + π*(p' - p)) / (p + p' - 2)² - π*(1 - π*) )
/// ```
pub fn sigma_star_two_state(p: f64, p_prime: f64, delta: f64) -> Result<LimitConstants> {
    check_open_unit(p, "p_uu")?;
    check_open_unit(p_prime, "p_dd")?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(param(format!("delta must be positive, got {delta}")));
    }
    let pi = (1.0 - p_prime) / (2.0 - p - p_prime);
    let a_star = delta * (2.0 * pi - 1.0);
    let denom = (p + p_prime - 2.0).powi(2);
    let var =
        4.0 * delta * delta * ((1.0 - p_prime + pi * (p_prime - p)) / denom - pi * (1.0 - pi));
    Ok(LimitConstants {
        a_star,
        sigma_star: clamp_variance(var, delta)?.sqrt(),
        b: vec![delta - a_star, -delta - a_star],
        g: Vec::new(),
        v: Vec::new(),
    })
}
