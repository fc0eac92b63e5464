//! One-asset calibration: mid-price ticks to `(λ̄, σ², P, π*, a*, σ*)`.

use crate::error::{param, Result};
use crate::lob_ingest::{
    price_change_events_with, ChangeOptions, PriceChangeSeq, TickSeries, DEFAULT_DELTA,
};
use crate::markov_price::{
    discretize_changes, estimate_transition_matrix, sigma_star_general, LimitConstants, Scheme,
    TransitionModel,
};
use crate::mgcpp::AssetParams;
use crate::point_process::{estimate_lambda_bar, estimate_sigma_sq, EventTimes};

/// Knobs of the calibration pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConfig {
    pub n_states: usize,
    pub scheme: Scheme,
    /// Mid-price granularity in dollars.
    pub delta: f64,
    /// Window (seconds) of the count-variance estimator.
    pub variance_window: f64,
    pub collapse_simultaneous: bool,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            n_states: 2,
            scheme: Scheme::TickBuckets,
            delta: DEFAULT_DELTA,
            variance_window: 60.0,
            collapse_simultaneous: true,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_states < 2 || !self.n_states.is_multiple_of(2) {
            return Err(param(format!(
                "n_states must be even and at least 2, got {}",
                self.n_states
            )));
        }
        if !(self.delta > 0.0) {
            return Err(param(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.variance_window > 0.0 && self.variance_window.is_finite()) {
            return Err(param(format!(
                "variance window must be positive, got {}",
                self.variance_window
            )));
        }
        Ok(())
    }
}

/// Everything estimated from one asset's observation span.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetCalibration {
    pub params: AssetParams,
    pub model: TransitionModel,
    pub constants: LimitConstants,
    /// Price changes on the series' own clock.
    pub changes: PriceChangeSeq,
    /// Change times re-based to the span start.
    pub events: EventTimes,
}

impl AssetCalibration {
    pub fn change_count(&self) -> usize {
        self.changes.len()
    }

    pub fn horizon(&self) -> f64 {
        self.events.horizon()
    }
}

/// Calibrates over the span `ticks.session()`.
pub fn calibrate_ticks(ticks: &TickSeries, config: &CalibrationConfig) -> Result<AssetCalibration> {
    config.validate()?;
    let changes = price_change_events_with(
        ticks,
        ChangeOptions {
            collapse_simultaneous: config.collapse_simultaneous,
        },
    );
    let events = changes.event_times(ticks.session())?;
    let lambda_bar = estimate_lambda_bar(&events)[0];
    let sigma_sq = estimate_sigma_sq(&events, config.variance_window)?[0];
    let disc = discretize_changes(&changes, config.n_states, config.scheme, config.delta)?;
    let transition = estimate_transition_matrix(&disc.states, config.n_states)?;
    let model = TransitionModel::new(disc.values, transition)?;
    let constants = sigma_star_general(&model)?;
    let params = AssetParams {
        lambda_bar,
        sigma_sq,
        a_star: constants.a_star,
        sigma_star: constants.sigma_star,
        delta: config.delta,
    };
    params.validate()?;
    Ok(AssetCalibration {
        params,
        model,
        constants,
        changes,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lob_ingest::SessionBounds;

    // mids in ask+bid units, one tick = 100
    fn ticks() -> TickSeries {
        let mut times = vec![];
        let mut mids = vec![];
        let mut m = 400_000i64;
        for k in 0..2000 {
            times.push(k as f64 * 0.5);
            mids.push(m);
            // up, up, down pattern
            m += if k % 3 == 2 { -100 } else { 100 };
        }
        TickSeries::from_mids_x2(times, mids).unwrap()
    }

    #[test]
    fn deterministic_pattern() {
        let t = ticks();
        let cal = calibrate_ticks(&t, &CalibrationConfig::default()).unwrap();
        assert_eq!(cal.change_count(), 1999);
        assert!((cal.params.lambda_bar - 1999.0 / 999.5).abs() < 1e-12);
        // states cycle u,u,d: P(u→u)=1/2, P(d→d)=0, π*=(2/3,1/3)
        let p = cal.model.transition();
        assert!((p[0][0] - 0.5).abs() < 2e-3);
        assert!(p[1][1].abs() < 1e-12);
        assert!((cal.params.a_star - 0.005 / 3.0).abs() < 1e-5);
        assert_eq!(cal.horizon(), 999.5);
    }

    #[test]
    fn sub_span() {
        let t = ticks()
            .clip(SessionBounds::new(100.0, 400.0).unwrap())
            .unwrap();
        let cal = calibrate_ticks(&t, &CalibrationConfig::default()).unwrap();
        assert_eq!(cal.horizon(), 300.0);
        assert_eq!(cal.change_count(), 600);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = CalibrationConfig {
            n_states: 3,
            ..Default::default()
        };
        assert!(calibrate_ticks(&ticks(), &cfg).is_err());
    }
}
