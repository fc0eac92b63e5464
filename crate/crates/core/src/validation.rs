//! Windowed standard-deviation curves, the `c·√w` fit, curve errors and
//! expanding-window cross-validation.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibrate::{calibrate_ticks, CalibrationConfig};
use crate::error::{param, Error, Result};
use crate::lob_ingest::{price_change_events_with, ChangeOptions, SessionBounds, TickSeries};
use crate::mgcpp::{fclt1_residuals, window_price_differences, AssetParams, SteppedPrice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Empirical,
    Fclt1,
    Fclt2,
}

/// How windowed price differences are centred before taking the std.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Centralization {
    /// Subtract `a*` times the window's event count.
    #[default]
    Stochastic,
    /// Raw differences; the sample mean is the deterministic centring.
    Deterministic,
    None,
}

impl Centralization {
    /// The model curve this centring is compared against.
    pub fn model_kind(self) -> CurveKind {
        match self {
            Centralization::Stochastic => CurveKind::Fclt1,
            Centralization::Deterministic | Centralization::None => CurveKind::Fclt2,
        }
    }
}

impl std::str::FromStr for Centralization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stochastic" => Ok(Centralization::Stochastic),
            "deterministic" => Ok(Centralization::Deterministic),
            "none" => Ok(Centralization::None),
            other => Err(param(format!("unknown centralization mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for Centralization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Centralization::Stochastic => "stochastic",
            Centralization::Deterministic => "deterministic",
            Centralization::None => "none",
        })
    }
}

/// Window sizes in seconds.
#[derive(Debug, Clone, PartialEq)]
pub enum WindowGrid {
    /// 0.1 s to 12 s in steps of 0.1 s.
    Fine,
    /// 10 s to 20 min in steps of 10 s.
    Coarse,
    List(Vec<f64>),
}

impl WindowGrid {
    pub fn windows(&self) -> Vec<f64> {
        match self {
            WindowGrid::Fine => (1..=120).map(|k| k as f64 / 10.0).collect(),
            WindowGrid::Coarse => (1..=120).map(|k| k as f64 * 10.0).collect(),
            WindowGrid::List(w) => w.clone(),
        }
    }
}

impl std::str::FromStr for WindowGrid {
    type Err = Error;

    /// `fine`, `coarse`, a comma list `1,2,5`, or a range `start:stop:step`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let windows = match s {
            "fine" => return Ok(WindowGrid::Fine),
            "coarse" => return Ok(WindowGrid::Coarse),
            _ if s.contains(':') => {
                let parts = s
                    .split(':')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| param(format!("bad window range {s:?}")))?;
                let [start, stop, step] = parts[..] else {
                    return Err(param(format!("window range {s:?} is not start:stop:step")));
                };
                if !(step > 0.0 && start > 0.0 && stop >= start) {
                    return Err(param(format!("window range {s:?} is empty")));
                }
                let n = ((stop - start) / step * (1.0 + 1e-12)).floor() as usize;
                (0..=n).map(|k| start + k as f64 * step).collect()
            }
            _ => s
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| param(format!("bad window list {s:?}")))?,
        };
        check_windows(&windows)?;
        Ok(WindowGrid::List(windows))
    }
}

fn check_windows(windows: &[f64]) -> Result<()> {
    if windows.is_empty() {
        return Err(param("window grid is empty"));
    }
    if windows.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(param("window sizes must be positive"));
    }
    if windows.windows(2).any(|w| w[1] <= w[0]) {
        return Err(param("window sizes must be strictly increasing"));
    }
    Ok(())
}

/// Standard deviation of windowed price differences against window size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StdCurve {
    pub asset: String,
    pub kind: CurveKind,
    pub windows: Vec<f64>,
    pub stds: Vec<f64>,
}

impl StdCurve {
    pub fn new(
        asset: impl Into<String>,
        kind: CurveKind,
        windows: Vec<f64>,
        stds: Vec<f64>,
    ) -> Result<Self> {
        check_windows(&windows)?;
        if windows.len() != stds.len() {
            return Err(param("windows and stds differ in length"));
        }
        if stds.iter().any(|s| !(*s >= 0.0)) {
            return Err(param("standard deviations must be non-negative"));
        }
        Ok(Self {
            asset: asset.into(),
            kind,
            windows,
            stds,
        })
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// The model curve `c·√w` on the same grid.
    pub fn model(
        asset: impl Into<String>,
        params: &AssetParams,
        kind: CurveKind,
        windows: &[f64],
    ) -> Result<Self> {
        let c = match kind {
            CurveKind::Fclt1 => params.fclt1_coefficient(),
            CurveKind::Fclt2 => params.fclt2_coefficient(),
            CurveKind::Empirical => return Err(param("an empirical curve has no model form")),
        };
        Self::new(
            asset,
            kind,
            windows.to_vec(),
            windows.iter().map(|w| c * w.sqrt()).collect(),
        )
    }
}

/// Sample standard deviation (`n - 1` denominator).
pub fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Empirical std curve of `prices` over disjoint windows of each size.
///
/// `event_times` (same clock as `prices`) and `a_star` are only used by
/// stochastic centralization. Sizes that fit fewer than two windows in the
/// span are dropped with a warning.
pub fn empirical_std_curve<S: SteppedPrice + Sync + ?Sized>(
    asset: &str,
    prices: &S,
    event_times: &[f64],
    a_star: f64,
    windows: &[f64],
    centralization: Centralization,
) -> Result<StdCurve> {
    check_windows(windows)?;
    let points: Vec<Option<(f64, f64)>> = windows
        .par_iter()
        .map(|&w| {
            let diffs = match centralization {
                Centralization::Stochastic => fclt1_residuals(prices, event_times, a_star, w),
                Centralization::Deterministic | Centralization::None => {
                    window_price_differences(prices, w)
                }
            };
            match diffs {
                Ok(d) => Ok(Some((w, sample_std(&d)))),
                Err(Error::InsufficientData(msg)) => {
                    warn!("{asset}: window {w} s omitted: {msg}");
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let (ws, stds): (Vec<f64>, Vec<f64>) = points.into_iter().flatten().unzip();
    if ws.is_empty() {
        return Err(Error::InsufficientData(format!(
            "{asset}: no window size fits twice in the observation span"
        )));
    }
    StdCurve::new(asset, CurveKind::Empirical, ws, stds)
}

/// Least-squares `c` of `std ≈ c·√w` with no intercept:
/// `c = Σ std_j √w_j / Σ w_j`.
pub fn sqrt_regression(curve: &StdCurve) -> Result<f64> {
    if curve.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "square-root fit needs at least 2 points, got {}",
            curve.len()
        )));
    }
    let sw: f64 = curve.windows.iter().sum();
    if sw == 0.0 {
        return Err(Error::Degenerate("all window sizes are zero".into()));
    }
    let num: f64 = curve
        .windows
        .iter()
        .zip(&curve.stds)
        .map(|(w, s)| s * w.sqrt())
        .sum();
    Ok(num / sw)
}

/// Mean squared pointwise difference of two curves on the same grid.
pub fn mse(a: &StdCurve, b: &StdCurve) -> Result<f64> {
    if a.windows != b.windows {
        return Err(Error::GridMismatch(format!(
            "curves have {} and {} windows on different grids",
            a.len(),
            b.len()
        )));
    }
    Ok(a.stds
        .iter()
        .zip(&b.stds)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.len() as f64)
}

/// `100·|c_model - c_reference| / |c_reference|`.
pub fn percentage_error(c_model: f64, c_reference: f64) -> Result<f64> {
    if c_reference == 0.0 || !c_reference.is_finite() {
        return Err(Error::Degenerate(format!(
            "reference coefficient {c_reference} is not usable"
        )));
    }
    Ok(100.0 * (c_model - c_reference).abs() / c_reference.abs())
}

/// Expanding-train cross-validation schedule and pipeline settings.
#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub train_minutes: f64,
    pub folds: usize,
    pub fold_minutes: f64,
    pub windows: Vec<f64>,
    pub calibration: CalibrationConfig,
    pub centralization: Centralization,
    /// Test spans with fewer price changes are flagged degenerate.
    pub min_test_changes: usize,
    /// Evaluate each fold on its own train span instead of the next block.
    pub test_on_train: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            train_minutes: 280.0,
            folds: 5,
            fold_minutes: 10.0,
            windows: WindowGrid::Fine.windows(),
            calibration: CalibrationConfig::default(),
            centralization: Centralization::Stochastic,
            min_test_changes: 20,
            test_on_train: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train: SessionBounds,
    pub test: SessionBounds,
    /// `c` fitted to the test span's empirical curve.
    pub regression_coefficient: Option<f64>,
    /// `c` implied by the train-span parameters.
    pub model_coefficient: f64,
    pub percentage_error: Option<f64>,
    pub test_changes: usize,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub folds: Vec<FoldReport>,
    /// Mean error over non-degenerate folds.
    pub mean_error: Option<f64>,
}

/// Fold `k` (0-based) trains on `[start, start + train + k·fold]` and tests
/// on the following `fold` minutes. Data after the last test span is unused.
pub fn fold_spans(
    session: SessionBounds,
    config: &CvConfig,
) -> Result<Vec<(SessionBounds, SessionBounds)>> {
    if config.folds == 0 {
        return Err(param("at least one fold is required"));
    }
    if !(config.train_minutes > 0.0 && config.fold_minutes > 0.0) {
        return Err(param("train and fold lengths must be positive"));
    }
    let train = config.train_minutes * 60.0;
    let fold = config.fold_minutes * 60.0;
    let test_blocks = if config.test_on_train {
        config.folds - 1
    } else {
        config.folds
    };
    let needed = train + test_blocks as f64 * fold;
    if needed > session.length() * (1.0 + 1e-12) {
        return Err(Error::InsufficientData(format!(
            "schedule needs {} s but the session spans {} s",
            needed,
            session.length()
        )));
    }
    Ok((0..config.folds)
        .map(|k| {
            let end = session.start + train + k as f64 * fold;
            let train_span = SessionBounds {
                start: session.start,
                end,
            };
            let test_span = if config.test_on_train {
                train_span
            } else {
                SessionBounds {
                    start: end,
                    end: end + fold,
                }
            };
            (train_span, test_span)
        })
        .collect())
}

/// Rolling cross-validation of the model coefficient on one asset.
pub fn rolling_cv(asset: &str, ticks: &TickSeries, config: &CvConfig) -> Result<CvReport> {
    let spans = fold_spans(ticks.session(), config)?;
    let opts = ChangeOptions {
        collapse_simultaneous: config.calibration.collapse_simultaneous,
    };
    let mut folds = Vec::with_capacity(spans.len());
    for (k, (train, test)) in spans.into_iter().enumerate() {
        let cal = calibrate_ticks(&ticks.clip(train)?, &config.calibration)?;
        let model_coefficient = match config.centralization.model_kind() {
            CurveKind::Fclt1 => cal.params.fclt1_coefficient(),
            _ => cal.params.fclt2_coefficient(),
        };
        let test_ticks = ticks.clip(test)?;
        let test_changes = price_change_events_with(&test_ticks, opts);
        let mut regression_coefficient = None;
        let mut error = None;
        if test_changes.len() >= config.min_test_changes {
            let fitted = empirical_std_curve(
                asset,
                &test_ticks,
                test_changes.times(),
                cal.params.a_star,
                &config.windows,
                config.centralization,
            )
            .and_then(|curve| sqrt_regression(&curve));
            match fitted {
                Ok(c) => {
                    regression_coefficient = Some(c);
                    error = percentage_error(model_coefficient, c).ok();
                }
                Err(Error::InsufficientData(_) | Error::Degenerate(_)) => {}
                Err(e) => return Err(e),
            }
        }
        let degenerate = error.is_none();
        if degenerate {
            warn!(
                "{asset}: fold {} is degenerate ({} price changes in test span); excluded",
                k + 1,
                test_changes.len()
            );
        }
        folds.push(FoldReport {
            fold: k + 1,
            train,
            test,
            regression_coefficient,
            model_coefficient,
            percentage_error: error,
            test_changes: test_changes.len(),
            degenerate,
        });
    }
    let errors: Vec<f64> = folds.iter().filter_map(|f| f.percentage_error).collect();
    let mean_error = (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64);
    Ok(CvReport { folds, mean_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mgcpp::AssetPath;
    use proptest::prelude::*;

    fn curve(windows: Vec<f64>, stds: Vec<f64>) -> StdCurve {
        StdCurve::new("X", CurveKind::Empirical, windows, stds).unwrap()
    }

    #[test]
    fn presets() {
        let fine = WindowGrid::Fine.windows();
        assert_eq!(fine.len(), 120);
        assert_eq!(fine[0], 0.1);
        assert_eq!(fine[119], 12.0);
        let coarse = WindowGrid::Coarse.windows();
        assert_eq!((coarse[0], coarse[119]), (10.0, 1200.0));
        assert_eq!("fine".parse::<WindowGrid>().unwrap(), WindowGrid::Fine);
        assert_eq!(
            "1, 2,5".parse::<WindowGrid>().unwrap().windows(),
            vec![1.0, 2.0, 5.0]
        );
        assert_eq!(
            "0.5:2:0.5".parse::<WindowGrid>().unwrap().windows(),
            vec![0.5, 1.0, 1.5, 2.0]
        );
        assert!("2,1".parse::<WindowGrid>().is_err());
        assert!("x".parse::<WindowGrid>().is_err());
        assert!("1:2".parse::<WindowGrid>().is_err());
    }

    #[test]
    fn fine_grid_window_counts() {
        use crate::point_process::windows_in;
        let counts: Vec<usize> = WindowGrid::Fine
            .windows()
            .iter()
            .map(|&w| windows_in(23_400.0, w))
            .collect();
        assert_eq!(counts[0], 234_000);
        assert_eq!(counts[119], 1950);
    }

    #[test]
    fn constant_price_has_zero_curve() {
        let path = AssetPath {
            s0: 20.0,
            times: vec![],
            prices: vec![],
            horizon: 100.0,
        };
        let c =
            empirical_std_curve("X", &path, &[], 0.01, &[1.0, 5.0], Centralization::None).unwrap();
        assert_eq!(c.stds, vec![0.0, 0.0]);
        assert_eq!(sqrt_regression(&c).unwrap(), 0.0);
    }

    #[test]
    fn omitted_sizes() {
        let path = AssetPath {
            s0: 20.0,
            times: vec![1.0],
            prices: vec![20.005],
            horizon: 10.0,
        };
        let c = empirical_std_curve(
            "X",
            &path,
            &[1.0],
            0.0,
            &[1.0, 5.0, 6.0],
            Centralization::None,
        )
        .unwrap();
        assert_eq!(c.windows, vec![1.0, 5.0]);
        assert!(
            empirical_std_curve("X", &path, &[1.0], 0.0, &[6.0], Centralization::None).is_err()
        );
    }

    #[test]
    fn zero_a_star_matches_raw() {
        let path = AssetPath {
            s0: 20.0,
            times: vec![0.5, 1.5, 2.5, 7.0],
            prices: vec![20.005, 20.0, 20.005, 20.01],
            horizon: 10.0,
        };
        let w = [1.0, 2.0];
        let a = empirical_std_curve("X", &path, &path.times, 0.0, &w, Centralization::Stochastic)
            .unwrap();
        let b =
            empirical_std_curve("X", &path, &path.times, 0.0, &w, Centralization::None).unwrap();
        assert_eq!(a.stds, b.stds);
    }

    #[test]
    fn exact_sqrt_data() {
        let w: Vec<f64> = (1..=50).map(|k| k as f64 * 0.3).collect();
        let s = w.iter().map(|x| 0.002 * x.sqrt()).collect();
        let c = sqrt_regression(&curve(w, s)).unwrap();
        assert!((c - 0.002).abs() < 1e-15);
    }

    #[test]
    fn regression_needs_two_points() {
        assert!(sqrt_regression(&curve(vec![1.0], vec![0.1])).is_err());
    }

    #[test]
    fn mse_cases() {
        let a = curve(vec![1.0, 2.0], vec![0.1, 0.2]);
        let b = curve(vec![1.0, 2.0], vec![0.1 + 1e-3, 0.2 + 1e-3]);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert!((mse(&a, &b).unwrap() - 1e-6).abs() < 1e-15);
        let c = curve(vec![1.0, 3.0], vec![0.1, 0.2]);
        assert!(matches!(mse(&a, &c), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn percentage_error_values() {
        assert_eq!(percentage_error(0.5, 0.5).unwrap(), 0.0);
        let e = percentage_error(0.002089, 0.002162).unwrap();
        assert_eq!(format!("{e:.3}"), "3.377");
        let e = percentage_error(0.002487, 0.002609).unwrap();
        assert_eq!(format!("{e:.3}"), "4.676");
        assert!(percentage_error(1.0, 0.0).is_err());
    }

    #[test]
    fn schedule_arithmetic() {
        let session = SessionBounds::new(0.0, 330.0 * 60.0).unwrap();
        let spans = fold_spans(session, &CvConfig::default()).unwrap();
        let ends: Vec<f64> = spans.iter().map(|(tr, _)| tr.end / 60.0).collect();
        assert_eq!(ends, vec![280.0, 290.0, 300.0, 310.0, 320.0]);
        for (k, (tr, te)) in spans.iter().enumerate() {
            assert_eq!(tr.start, 0.0);
            assert_eq!(te.start, tr.end);
            assert_eq!(te.end - te.start, 600.0);
            if k > 0 {
                assert_eq!(tr.end - spans[k - 1].0.end, 600.0);
            }
        }
        let short = SessionBounds::new(0.0, 329.0 * 60.0).unwrap();
        assert!(matches!(
            fold_spans(short, &CvConfig::default()),
            Err(Error::InsufficientData(_))
        ));
        let one = CvConfig {
            folds: 1,
            test_on_train: true,
            ..Default::default()
        };
        let spans = fold_spans(session, &one).unwrap();
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].0, spans[0].1);
    }

    fn sorted_windows() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..5.0, 2..30).prop_map(|mut v| {
            v.sort_by(f64::total_cmp);
            v.iter()
                .scan(0.0, |acc, x| {
                    *acc += x;
                    Some(*acc)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn regression_is_scale_equivariant(w in sorted_windows(), s in 0.01f64..100.0, seed in any::<u64>()) {
            let stds: Vec<f64> = w.iter().enumerate().map(|(i, x)| x.sqrt() * (1.0 + ((seed >> (i % 60)) & 7) as f64 / 10.0)).collect();
            let scaled: Vec<f64> = stds.iter().map(|x| x * s).collect();
            let c = sqrt_regression(&curve(w.clone(), stds)).unwrap();
            let cs = sqrt_regression(&curve(w, scaled)).unwrap();
            prop_assert!((cs - s * c).abs() <= 1e-12 * cs.abs().max(1e-300));
        }

        #[test]
        fn regression_is_linear(w in sorted_windows(), j in any::<prop::sample::Index>(), eps in 1e-6f64..1.0) {
            let stds: Vec<f64> = w.iter().map(|x| 0.3 * x.sqrt()).collect();
            let j = j.index(w.len());
            let mut bumped = stds.clone();
            bumped[j] += eps;
            let c0 = sqrt_regression(&curve(w.clone(), stds)).unwrap();
            let c1 = sqrt_regression(&curve(w.clone(), bumped)).unwrap();
            let expect = eps * w[j].sqrt() / w.iter().sum::<f64>();
            prop_assert!(((c1 - c0) - expect).abs() < 1e-12);
        }

        #[test]
        fn mse_is_symmetric(w in sorted_windows(), seed in any::<u64>()) {
            let a: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
            let b: Vec<f64> = w.iter().enumerate().map(|(i, x)| x.sqrt() + ((seed >> (i % 60)) & 3) as f64).collect();
            let ca = curve(w.clone(), a);
            let cb = curve(w, b);
            prop_assert_eq!(mse(&ca, &cb).unwrap(), mse(&cb, &ca).unwrap());
            prop_assert_eq!(mse(&ca, &ca).unwrap(), 0.0);
        }
    }
}
