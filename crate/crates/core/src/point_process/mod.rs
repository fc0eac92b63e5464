//! Multivariate point processes driving the order flow: simulation of
//! Poisson and exponential-kernel Hawkes processes, and moment estimators
//! of the long-run rate λ̄ and diagonal count variance Σ.

mod estimate;
mod io;
mod simulate;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

pub use estimate::{
    estimate_lambda_bar, estimate_rate_params, estimate_sigma_sq, window_count_covariance,
    window_counts, windows_in,
};
pub use io::{read_binary, read_csv, write_binary, write_csv, BINARY_MAGIC};
pub use simulate::{simulate_hawkes, simulate_poisson};

/// Per-dimension sorted arrival times on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTimes {
    dims: Vec<Vec<f64>>,
    horizon: f64,
}

impl EventTimes {
    pub fn new(dims: Vec<Vec<f64>>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(param(format!("horizon must be positive, got {horizon}")));
        }
        for (i, d) in dims.iter().enumerate() {
            if d.windows(2).any(|w| !(w[1] >= w[0])) {
                return Err(param(format!(
                    "event times of dimension {i} are not sorted"
                )));
            }
            if d.first().is_some_and(|&t| t < 0.0) || d.last().is_some_and(|&t| t > horizon) {
                return Err(param(format!(
                    "event times of dimension {i} leave [0, {horizon}]"
                )));
            }
        }
        Ok(Self { dims, horizon })
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn times(&self, dim: usize) -> &[f64] {
        &self.dims[dim]
    }

    pub fn counts(&self) -> Vec<usize> {
        self.dims.iter().map(Vec::len).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.dims.iter().map(Vec::as_slice)
    }

    pub fn into_inner(self) -> Vec<Vec<f64>> {
        self.dims
    }

    /// Events in `[from, to]`, re-based so `from` becomes time zero.
    pub fn slice(&self, from: f64, to: f64) -> Result<Self> {
        let dims = self
            .dims
            .iter()
            .map(|d| {
                let a = d.partition_point(|&t| t < from);
                let b = d.partition_point(|&t| t <= to);
                d[a..b].iter().map(|t| t - from).collect()
            })
            .collect();
        Self::new(dims, to - from)
    }
}

/// Exponential-kernel Hawkes specification:
/// `λ_i(t) = λ_i + Σ_j ∫ α_ij e^{-β_ij (t-s)} dH_j(s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HawkesSpecRaw")]
pub struct HawkesSpec {
    base: Vec<f64>,
    alpha: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct HawkesSpecRaw {
    base: Vec<f64>,
    alpha: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
}

impl TryFrom<HawkesSpecRaw> for HawkesSpec {
    type Error = Error;

    fn try_from(raw: HawkesSpecRaw) -> Result<Self> {
        HawkesSpec::new(raw.base, raw.alpha, raw.beta)
    }
}

impl HawkesSpec {
    /// Validates shapes, signs and stability (spectral radius of the
    /// branching matrix `K_ij = α_ij / β_ij` strictly below one).
    pub fn new(base: Vec<f64>, alpha: Vec<Vec<f64>>, beta: Vec<Vec<f64>>) -> Result<Self> {
        let d = base.len();
        if d == 0 {
            return Err(param("Hawkes process needs at least one dimension"));
        }
        let square = |m: &Vec<Vec<f64>>| m.len() == d && m.iter().all(|r| r.len() == d);
        if !square(&alpha) || !square(&beta) {
            return Err(param(format!("alpha and beta must be {d}x{d}")));
        }
        if base.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(param("baseline intensities must be positive"));
        }
        if alpha
            .iter()
            .flatten()
            .any(|&a| !(a >= 0.0 && a.is_finite()))
        {
            return Err(param("alpha entries must be non-negative"));
        }
        if beta.iter().flatten().any(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(param("beta entries must be positive"));
        }
        let spec = Self { base, alpha, beta };
        let rho = spec.spectral_radius();
        if rho >= 1.0 {
            return Err(Error::Unstable(rho));
        }
        Ok(spec)
    }

    /// One-dimensional convenience constructor.
    pub fn univariate(base: f64, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(vec![base], vec![vec![alpha]], vec![vec![beta]])
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn alpha(&self) -> &[Vec<f64>] {
        &self.alpha
    }

    pub fn beta(&self) -> &[Vec<f64>] {
        &self.beta
    }

    /// `K = ∫_0^∞ μ(t) dt`, entrywise `α_ij / β_ij`.
    pub fn branching_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.alpha[i][j] / self.beta[i][j])
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.branching_matrix())
    }
}

pub(crate) fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Long-run rate λ̄ and diagonal of the count-FCLT covariance Σ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub lambda_bar: Vec<f64>,
    pub sigma_sq: Vec<f64>,
}

/// LLN and FCLT constants of a stable Hawkes process:
/// `λ̄ = (I-K)^{-1} λ` and `Σ = diag((I-K)^{-1} D (I-K)^{-T})` with `D = diag(λ̄)`.
pub fn hawkes_limit_params(spec: &HawkesSpec) -> Result<RateParams> {
    let cov = hawkes_count_covariance(spec)?;
    let d = spec.dim();
    let lambda_bar = hawkes_lambda_bar(spec)?;
    Ok(RateParams {
        lambda_bar,
        sigma_sq: (0..d).map(|i| cov[(i, i)]).collect(),
    })
}

/// Full asymptotic covariance of `H_t / √t`; off-diagonals are diagnostic only.
pub fn hawkes_count_covariance(spec: &HawkesSpec) -> Result<DMatrix<f64>> {
    let inv = resolvent(spec)?;
    let lambda_bar = hawkes_lambda_bar(spec)?;
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lambda_bar));
    Ok(&inv * d * inv.transpose())
}

fn hawkes_lambda_bar(spec: &HawkesSpec) -> Result<Vec<f64>> {
    let inv = resolvent(spec)?;
    let base = nalgebra::DVector::from_column_slice(spec.base());
    Ok((inv * base).iter().copied().collect())
}

fn resolvent(spec: &HawkesSpec) -> Result<DMatrix<f64>> {
    let d = spec.dim();
    let m = DMatrix::identity(d, d) - spec.branching_matrix();
    m.try_inverse()
        .ok_or(Error::Unstable(spec.spectral_radius()))
}
