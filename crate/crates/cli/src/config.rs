//! Run configuration: a flat TOML file of dotted keys, then flag overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mgcpp_core::lob_ingest::{delta_units, DEFAULT_DELTA};
use mgcpp_core::validation::{CvConfig, WindowGrid};
use mgcpp_core::{CalibrationConfig, Centralization, Scheme, SessionBounds};
use serde::Serialize;
use toml::Value;

use crate::error::{CliError, Result};

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Input files of one ticker. Missing paths are looked up in the data
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssetInput {
    pub ticker: String,
    pub message: Option<PathBuf>,
    pub orderbook: Option<PathBuf>,
}

impl AssetInput {
    pub fn new(ticker: impl Into<String>) -> Self {
        Self {
            ticker: ticker.into(),
            message: None,
            orderbook: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Process {
    #[default]
    Poisson,
    Hawkes,
}

impl FromStr for Process {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poisson" => Ok(Process::Poisson),
            "hawkes" => Ok(Process::Hawkes),
            other => Err(config_err(format!(
                "unknown process {other:?}; expected poisson or hawkes"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateConfig {
    pub process: Process,
    /// Baseline (Hawkes) or constant (Poisson) rate per asset.
    pub lambda: Vec<f64>,
    /// Hawkes excitation; zero when absent.
    pub alpha: Option<Vec<Vec<f64>>>,
    /// Hawkes decay; one when absent.
    pub beta: Option<Vec<Vec<f64>>>,
    /// Seconds; defaults to the session length.
    pub horizon: Option<f64>,
    pub p_uu: Vec<f64>,
    pub p_dd: Vec<f64>,
    /// Model JSON files, one per asset, instead of `p_uu`/`p_dd`.
    pub models: Vec<PathBuf>,
    pub s0: Vec<f64>,
    /// Also write LOBSTER message/orderbook files per asset.
    pub lobster: bool,
    /// Insert size-only quotes between price changes in LOBSTER output.
    pub size_updates: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            process: Process::Poisson,
            lambda: vec![1.0],
            alpha: None,
            beta: None,
            horizon: None,
            p_uu: vec![],
            p_dd: vec![],
            models: vec![],
            s0: vec![],
            lobster: false,
            size_updates: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvSettings {
    pub train_minutes: f64,
    pub folds: usize,
    pub fold_minutes: f64,
    pub min_test_changes: usize,
}

impl Default for CvSettings {
    fn default() -> Self {
        let d = CvConfig::default();
        Self {
            train_minutes: d.train_minutes,
            folds: d.folds,
            fold_minutes: d.fold_minutes,
            min_test_changes: d.min_test_changes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub assets: Vec<AssetInput>,
    pub data_dir: Option<PathBuf>,
    pub delta: f64,
    pub n_states: usize,
    pub scheme: Scheme,
    /// `fine`, `coarse`, a comma list or `start:stop:step`.
    pub windows: String,
    /// Centralization; each command has its own default.
    pub mode: Option<Centralization>,
    pub seed: u64,
    pub out: PathBuf,
    pub session: SessionBounds,
    pub variance_window: f64,
    pub collapse_simultaneous: bool,
    pub cv: CvSettings,
    pub simulate: SimulateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let cal = CalibrationConfig::default();
        Self {
            assets: vec![],
            data_dir: None,
            delta: DEFAULT_DELTA,
            n_states: cal.n_states,
            scheme: cal.scheme,
            windows: "fine".into(),
            mode: None,
            seed: 0,
            out: PathBuf::from("mgcpp-out"),
            session: SessionBounds::NASDAQ,
            variance_window: cal.variance_window,
            collapse_simultaneous: cal.collapse_simultaneous,
            cv: CvSettings::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(config_err(format!("{key} must be a number"))),
    }
}

fn as_usize(key: &str, v: &Value) -> Result<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(config_err(format!("{key} must be a non-negative integer"))),
    }
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| config_err(format!("{key} must be a string")))
}

fn as_bool(key: &str, v: &Value) -> Result<bool> {
    v.as_bool()
        .ok_or_else(|| config_err(format!("{key} must be true or false")))
}

fn as_list(key: &str, v: &Value) -> Result<Vec<f64>> {
    match v {
        Value::Array(a) => a.iter().map(|x| as_f64(key, x)).collect(),
        other => Ok(vec![as_f64(key, other)?]),
    }
}

fn as_matrix(key: &str, v: &Value) -> Result<Vec<Vec<f64>>> {
    let Value::Array(rows) = v else {
        return Err(config_err(format!("{key} must be an array of rows")));
    };
    rows.iter().map(|r| as_list(key, r)).collect()
}

fn as_strings(key: &str, v: &Value) -> Result<Vec<String>> {
    match v {
        Value::Array(a) => a
            .iter()
            .map(|x| as_str(key, x).map(str::to_owned))
            .collect(),
        other => Ok(vec![as_str(key, other)?.to_owned()]),
    }
}

fn parse<T: FromStr>(key: &str, s: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e| config_err(format!("{key}: {e}")))
}

/// Comma-separated numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| config_err(format!("bad number {x:?} in {s:?}")))
        })
        .collect()
}

/// Rows separated by `;`, entries by `,`.
pub fn parse_matrix(s: &str) -> Result<Vec<Vec<f64>>> {
    s.split(';').map(parse_list).collect()
}

/// `START:END` in seconds after midnight.
pub fn parse_session(s: &str) -> Result<SessionBounds> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| config_err(format!("session {s:?} is not START:END")))?;
    let start = a
        .trim()
        .parse()
        .map_err(|_| config_err(format!("bad session start {a:?}")))?;
    let end = b
        .trim()
        .parse()
        .map_err(|_| config_err(format!("bad session end {b:?}")))?;
    SessionBounds::new(start, end).map_err(|e| config_err(e.to_string()))
}

impl RunConfig {
    /// Parses config text. Relative paths resolve against `base`.
    pub fn from_toml_str(text: &str, base: &Path, origin: &Path) -> Result<Self> {
        let table: toml::Table =
            text.parse()
                .map_err(|e: toml::de::Error| CliError::ConfigSyntax {
                    path: origin.to_path_buf(),
                    message: e.to_string(),
                })?;
        let mut flat = BTreeMap::new();
        flatten("", &table, &mut flat);
        let mut cfg = RunConfig::default();
        let path = |v: &Value, key: &str| -> Result<PathBuf> { Ok(base.join(as_str(key, v)?)) };
        for (key, v) in &flat {
            let k = key.as_str();
            match k {
                "assets" => {
                    for t in as_strings(k, v)? {
                        cfg.asset_mut(&t);
                    }
                }
                "data_dir" => cfg.data_dir = Some(path(v, k)?),
                "delta" => cfg.delta = as_f64(k, v)?,
                "states" | "n_states" => cfg.n_states = as_usize(k, v)?,
                "scheme" => cfg.scheme = parse(k, as_str(k, v)?)?,
                "windows" => {
                    cfg.windows = match v {
                        Value::Array(_) => as_list(k, v)?
                            .iter()
                            .map(f64::to_string)
                            .collect::<Vec<_>>()
                            .join(","),
                        _ => as_str(k, v)?.to_owned(),
                    }
                }
                "mode" => cfg.mode = Some(parse(k, as_str(k, v)?)?),
                "seed" => {
                    cfg.seed = match v {
                        Value::Integer(i) if *i >= 0 => *i as u64,
                        Value::String(s) => parse(k, s)?,
                        _ => return Err(config_err("seed must be a non-negative integer")),
                    }
                }
                "out" => cfg.out = path(v, k)?,
                "session" if v.is_str() => cfg.session = parse_session(as_str(k, v)?)?,
                "session" => {
                    let b = as_list(k, v)?;
                    let [s, e] = b[..] else {
                        return Err(config_err("session must be [start, end]"));
                    };
                    cfg.session =
                        SessionBounds::new(s, e).map_err(|e| config_err(e.to_string()))?;
                }
                "variance_window" => cfg.variance_window = as_f64(k, v)?,
                "collapse_simultaneous" => cfg.collapse_simultaneous = as_bool(k, v)?,
                "cv.train_minutes" => cfg.cv.train_minutes = as_f64(k, v)?,
                "cv.folds" => cfg.cv.folds = as_usize(k, v)?,
                "cv.fold_minutes" => cfg.cv.fold_minutes = as_f64(k, v)?,
                "cv.min_test_changes" => cfg.cv.min_test_changes = as_usize(k, v)?,
                "simulate.process" => cfg.simulate.process = as_str(k, v)?.parse()?,
                "simulate.lambda" => cfg.simulate.lambda = as_list(k, v)?,
                "simulate.alpha" => cfg.simulate.alpha = Some(as_matrix(k, v)?),
                "simulate.beta" => cfg.simulate.beta = Some(as_matrix(k, v)?),
                "simulate.horizon" => cfg.simulate.horizon = Some(as_f64(k, v)?),
                "simulate.p_uu" => cfg.simulate.p_uu = as_list(k, v)?,
                "simulate.p_dd" => cfg.simulate.p_dd = as_list(k, v)?,
                "simulate.models" | "simulate.model" => {
                    cfg.simulate.models = as_strings(k, v)?.iter().map(|p| base.join(p)).collect()
                }
                "simulate.s0" => cfg.simulate.s0 = as_list(k, v)?,
                "simulate.lobster" => cfg.simulate.lobster = as_bool(k, v)?,
                "simulate.size_updates" => cfg.simulate.size_updates = as_bool(k, v)?,
                _ => match k.strip_prefix("asset.").and_then(|r| r.rsplit_once('.')) {
                    Some((ticker, "message")) => cfg.asset_mut(ticker).message = Some(path(v, k)?),
                    Some((ticker, "orderbook")) => {
                        cfg.asset_mut(ticker).orderbook = Some(path(v, k)?)
                    }
                    _ => return Err(config_err(format!("unknown config key {key:?}"))),
                },
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_toml_str(&text, base, path)
    }

    /// The entry for `ticker`, created if absent.
    pub fn asset_mut(&mut self, ticker: &str) -> &mut AssetInput {
        let idx = match self.assets.iter().position(|a| a.ticker == ticker) {
            Some(i) => i,
            None => {
                self.assets.push(AssetInput::new(ticker));
                self.assets.len() - 1
            }
        };
        &mut self.assets[idx]
    }

    /// Keeps only `tickers`, in that order, preserving configured paths.
    pub fn select_assets(&mut self, tickers: &[String]) {
        let mut selected = Vec::with_capacity(tickers.len());
        for t in tickers {
            let existing = self.assets.iter().find(|a| &a.ticker == t).cloned();
            if !selected.iter().any(|a: &AssetInput| &a.ticker == t) {
                selected.push(existing.unwrap_or_else(|| AssetInput::new(t.clone())));
            }
        }
        self.assets = selected;
    }

    pub fn window_grid(&self) -> Result<Vec<f64>> {
        Ok(WindowGrid::from_str(&self.windows)
            .map_err(|e| config_err(format!("windows: {e}")))?
            .windows())
    }

    pub fn calibration(&self) -> CalibrationConfig {
        CalibrationConfig {
            n_states: self.n_states,
            scheme: self.scheme,
            delta: self.delta,
            variance_window: self.variance_window,
            collapse_simultaneous: self.collapse_simultaneous,
        }
    }

    pub fn cv_config(&self, default_mode: Centralization) -> Result<CvConfig> {
        Ok(CvConfig {
            train_minutes: self.cv.train_minutes,
            folds: self.cv.folds,
            fold_minutes: self.cv.fold_minutes,
            windows: self.window_grid()?,
            calibration: self.calibration(),
            centralization: self.mode.unwrap_or(default_mode),
            min_test_changes: self.cv.min_test_changes,
            test_on_train: false,
        })
    }

    /// Checks the invariants every command relies on.
    pub fn validate(&self) -> Result<()> {
        delta_units(self.delta).map_err(|e| config_err(format!("delta: {e}")))?;
        self.calibration()
            .validate()
            .map_err(|e| config_err(e.to_string()))?;
        self.window_grid()?;
        if self.cv.folds == 0 {
            return Err(config_err("cv.folds must be at least 1"));
        }
        let mut paths: Vec<&PathBuf> = self
            .assets
            .iter()
            .flat_map(|a| a.message.iter().chain(a.orderbook.iter()))
            .collect();
        paths.sort();
        if let Some(w) = paths.windows(2).find(|w| w[0] == w[1]) {
            return Err(config_err(format!(
                "input path {} is used twice",
                w[0].display()
            )));
        }
        Ok(())
    }

    /// Message and orderbook paths per asset, falling back to the data
    /// directory: the single `TICKER_*message*.csv` / `TICKER_*orderbook*.csv`.
    pub fn resolve_inputs(&self) -> Result<Vec<(String, PathBuf, PathBuf)>> {
        if self.assets.is_empty() {
            return Err(config_err(
                "no assets configured; pass --asset or set assets in the config",
            ));
        }
        let resolved = self
            .assets
            .iter()
            .map(|a| {
                let message = match &a.message {
                    Some(p) => p.clone(),
                    None => self.find_in_data_dir(&a.ticker, "message")?,
                };
                let orderbook = match &a.orderbook {
                    Some(p) => p.clone(),
                    None => self.find_in_data_dir(&a.ticker, "orderbook")?,
                };
                Ok((a.ticker.clone(), message, orderbook))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut all: Vec<&PathBuf> = resolved.iter().flat_map(|(_, m, o)| [m, o]).collect();
        all.sort();
        if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
            return Err(config_err(format!(
                "input path {} is used twice",
                w[0].display()
            )));
        }
        Ok(resolved)
    }

    fn find_in_data_dir(&self, ticker: &str, kind: &str) -> Result<PathBuf> {
        let dir = self.data_dir.as_ref().ok_or_else(|| {
            config_err(format!(
                "no {kind} file for {ticker} and no data_dir to search"
            ))
        })?;
        let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
        let prefix = format!("{ticker}_");
        let mut hits: Vec<PathBuf> = entries
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| {
                p.file_name().and_then(|n| n.to_str()).is_some_and(|n| {
                    n.starts_with(&prefix) && n.contains(kind) && n.ends_with(".csv")
                })
            })
            .collect();
        hits.sort();
        match hits.len() {
            1 => Ok(hits.pop().unwrap()),
            0 => Err(CliError::io(
                dir.join(format!("{ticker}_*{kind}*.csv")),
                std::io::Error::new(std::io::ErrorKind::NotFound, "no matching file"),
            )),
            n => Err(config_err(format!(
                "{n} {kind} files for {ticker} in {}; name them explicitly",
                dir.display()
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<RunConfig> {
        RunConfig::from_toml_str(text, Path::new("/base"), Path::new("/base/run.toml"))
    }

    #[test]
    fn dotted_and_nested_keys() {
        let a = load(
            r#"
assets = ["INTC", "MSFT"]
delta = 0.005
states = 4
scheme = "quantile"
windows = [0.5, 1, 2]
mode = "deterministic"
seed = 7
session = [34200, 57600]
asset.INTC.message = "d/intc_m.csv"
cv.folds = 3
simulate.alpha = [[0.5]]
"#,
        )
        .unwrap();
        assert_eq!(
            a.assets[0].message,
            Some(PathBuf::from("/base/d/intc_m.csv"))
        );
        assert_eq!(a.assets[1].ticker, "MSFT");
        assert_eq!(a.n_states, 4);
        assert_eq!(a.scheme, Scheme::Quantile);
        assert_eq!(a.window_grid().unwrap(), vec![0.5, 1.0, 2.0]);
        assert_eq!(a.mode, Some(Centralization::Deterministic));
        assert_eq!(a.seed, 7);
        assert_eq!(a.cv.folds, 3);
        assert_eq!(a.simulate.alpha, Some(vec![vec![0.5]]));
        let b = load("[asset.INTC]\nmessage = \"d/intc_m.csv\"\n[cv]\nfolds = 3\n").unwrap();
        assert_eq!(b.assets[0].message, a.assets[0].message);
        assert_eq!(b.cv.folds, 3);
    }

    #[test]
    fn rejects_unknown_and_mistyped_keys() {
        assert!(matches!(load("colour = 1"), Err(CliError::Config(_))));
        assert!(matches!(load("states = \"two\""), Err(CliError::Config(_))));
        assert!(matches!(
            load("states = "),
            Err(CliError::ConfigSyntax { .. })
        ));
    }

    #[test]
    fn invariants() {
        let mut c = RunConfig::default();
        c.validate().unwrap();
        c.n_states = 3;
        assert!(c.validate().is_err());
        c.n_states = 2;
        c.delta = 0.0;
        assert!(c.validate().is_err());
        c.delta = 0.005;
        c.asset_mut("A").message = Some("x.csv".into());
        c.asset_mut("B").orderbook = Some("x.csv".into());
        assert!(c.validate().is_err());
    }

    #[test]
    fn selection_keeps_paths() {
        let mut c = RunConfig::default();
        c.asset_mut("A").message = Some("a.csv".into());
        c.asset_mut("B");
        c.select_assets(&["C".into(), "A".into()]);
        let names: Vec<&str> = c.assets.iter().map(|a| a.ticker.as_str()).collect();
        assert_eq!(names, ["C", "A"]);
        assert_eq!(c.assets[1].message, Some("a.csv".into()));
    }

    #[test]
    fn flag_syntaxes() {
        assert_eq!(
            parse_matrix("0.4,0.2;0.1,0.3").unwrap(),
            vec![vec![0.4, 0.2], vec![0.1, 0.3]]
        );
        assert_eq!(parse_session("0:600").unwrap().length(), 600.0);
        assert!(parse_session("600").is_err());
        let c = load("session = \"36000:39600\"").unwrap();
        assert_eq!(c.session.length(), 3600.0);
        assert!(parse_list("1,x").is_err());
    }
}
