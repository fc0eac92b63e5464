//! Mid-price modelling with compound point processes driven by Markov
//! price-change marks: LOBSTER ingestion, point-process simulation and
//! estimation, Markov mark calibration, limit-theorem predictors and
//! empirical validation.

pub mod calibrate;
pub mod error;
pub mod lob_ingest;
pub mod markov_price;
pub mod mgcpp;
pub mod point_process;
pub mod rng;
pub mod validation;

pub use calibrate::{calibrate_ticks, AssetCalibration, CalibrationConfig};
pub use error::{Error, Result};
pub use lob_ingest::{PriceChangeSeq, Quote, SessionBounds, TickSeries};
pub use markov_price::{LimitConstants, Scheme, TransitionModel};
pub use mgcpp::{AssetParams, AssetPath, CalibratedParams, PricePath, SteppedPrice};
pub use point_process::{EventTimes, HawkesSpec, RateParams};
pub use validation::{Centralization, CurveKind, StdCurve, WindowGrid};
