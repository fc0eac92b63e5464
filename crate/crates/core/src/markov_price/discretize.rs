use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::lob_ingest::{delta_units, PriceChangeSeq};

/// How price changes are mapped onto chain states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// States are the signed tick multiples `+δ..+mδ, -δ..-mδ`; larger
    /// changes are clamped to the extreme states.
    #[default]
    TickBuckets,
    /// States are `m` equal-count magnitude buckets per sign; a state's
    /// value is the mean change inside it.
    Quantile,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tick-buckets" | "tick_buckets" | "ticks" => Ok(Scheme::TickBuckets),
            "quantile" => Ok(Scheme::Quantile),
            other => Err(param(format!("unknown discretization scheme {other:?}"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::TickBuckets => "tick-buckets",
            Scheme::Quantile => "quantile",
        })
    }
}

/// State sequence of a change sequence plus the value of each state.
///
/// State order is up-moves by increasing size, then down-moves by
/// increasing size; with two states that is `(+δ, -δ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub states: Vec<usize>,
    pub values: Vec<f64>,
}

pub fn discretize_changes(
    changes: &PriceChangeSeq,
    n_states: usize,
    scheme: Scheme,
    delta: f64,
) -> Result<Discretization> {
    if n_states < 2 || !n_states.is_multiple_of(2) {
        return Err(param(format!(
            "n_states must be even and at least 2, got {n_states}"
        )));
    }
    if changes.is_empty() {
        return Err(Error::InsufficientData(
            "no price changes to discretize".into(),
        ));
    }
    let unit = delta_units(delta)?;
    let m = n_states / 2;
    let raw = changes.changes_x2();
    let ups = raw.iter().filter(|&&c| c > 0).count();
    if ups == 0 || ups == raw.len() {
        warn!(
            "all {} price changes share one sign; chain is degenerate",
            raw.len()
        );
    }
    match scheme {
        Scheme::TickBuckets => {
            let states = raw
                .iter()
                .map(|&c| {
                    let ticks = ((c.abs() as f64 / unit as f64).round() as usize).clamp(1, m);
                    if c > 0 {
                        ticks - 1
                    } else {
                        m + ticks - 1
                    }
                })
                .collect();
            let values = (1..=m)
                .map(|k| k as f64 * delta)
                .chain((1..=m).map(|k| -(k as f64) * delta))
                .collect();
            Ok(Discretization { states, values })
        }
        Scheme::Quantile => {
            let up: Vec<i64> = raw.iter().filter(|&&c| c > 0).copied().collect();
            let down: Vec<i64> = raw.iter().filter(|&&c| c < 0).map(|c| -c).collect();
            let up_edges = quantile_edges(&up, m, unit);
            let down_edges = quantile_edges(&down, m, unit);
            let bucket =
                |edges: &[i64], mag: i64| edges.iter().position(|&e| mag <= e).unwrap_or(m - 1);
            let states: Vec<usize> = raw
                .iter()
                .map(|&c| {
                    if c > 0 {
                        bucket(&up_edges, c)
                    } else {
                        m + bucket(&down_edges, -c)
                    }
                })
                .collect();
            let mut sums = vec![0.0; n_states];
            let mut counts = vec![0usize; n_states];
            for (&s, &c) in states.iter().zip(raw) {
                sums[s] += c as f64;
                counts[s] += 1;
            }
            let values = (0..n_states)
                .map(|s| {
                    if counts[s] > 0 {
                        sums[s] / counts[s] as f64 / crate::lob_ingest::MID_SCALE
                    } else {
                        let e = if s < m {
                            up_edges[s]
                        } else {
                            -down_edges[s - m]
                        };
                        e as f64 / crate::lob_ingest::MID_SCALE
                    }
                })
                .collect();
            Ok(Discretization { states, values })
        }
    }
}

/// Upper magnitude edge of each of `m` equal-count buckets.
fn quantile_edges(mags: &[i64], m: usize, unit: i64) -> Vec<i64> {
    if mags.is_empty() {
        return (1..=m as i64).map(|k| k * unit).collect();
    }
    let mut sorted = mags.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    (1..=m).map(|q| sorted[(q * n).div_ceil(m) - 1]).collect()
}

/// Frequency estimate `P(k, j) = count(k→j) / count(k→·)` over consecutive
/// states. States never left get a uniform row.
pub fn estimate_transition_matrix(states: &[usize], n_states: usize) -> Result<Vec<Vec<f64>>> {
    if states.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least two states to count transitions, got {}",
            states.len()
        )));
    }
    if let Some(&s) = states.iter().find(|&&s| s >= n_states) {
        return Err(param(format!(
            "state {s} out of range for {n_states} states"
        )));
    }
    let mut counts = vec![vec![0u64; n_states]; n_states];
    for w in states.windows(2) {
        counts[w[0]][w[1]] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, row)| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                warn!("state {k} has no outgoing transitions; using a uniform row");
                vec![1.0 / n_states as f64; n_states]
            } else {
                row.iter().map(|&c| c as f64 / total as f64).collect()
            }
        })
        .collect())
}
