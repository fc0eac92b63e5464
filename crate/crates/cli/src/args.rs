use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::Command;
use crate::config::{parse_list, parse_matrix, parse_session, RunConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "mgcpp",
    version,
    about = "Compound point process mid-price models: simulate, calibrate, validate"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Subcmd,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Subcmd {
    /// Estimate rate, variance and Markov parameters per asset.
    Calibrate,
    /// Compare empirical std curves with the limit-theorem predictors.
    Validate,
    /// Expanding-window cross-validation of the predicted coefficient.
    Crossval,
    /// Simulate event and price paths (optionally as LOBSTER files).
    Simulate,
}

impl From<Subcmd> for Command {
    fn from(s: Subcmd) -> Self {
        match s {
            Subcmd::Calibrate => Command::Calibrate,
            Subcmd::Validate => Command::Validate,
            Subcmd::Crossval => Command::Crossval,
            Subcmd::Simulate => Command::Simulate,
        }
    }
}

/// Flags override config-file values.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Ticker to process (repeatable); selects and orders assets.
    #[arg(long = "asset", global = true)]
    pub assets: Vec<String>,
    /// Directory searched for TICKER_*message*.csv and TICKER_*orderbook*.csv.
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    /// Message file as TICKER=PATH (repeatable).
    #[arg(long = "message", global = true, value_name = "TICKER=PATH")]
    pub messages: Vec<String>,
    /// Orderbook file as TICKER=PATH (repeatable).
    #[arg(long = "orderbook", global = true, value_name = "TICKER=PATH")]
    pub orderbooks: Vec<String>,
    /// fine | coarse | comma list | start:stop:step (seconds).
    #[arg(long, global = true)]
    pub windows: Option<String>,
    /// Number of Markov states (even).
    #[arg(long, global = true)]
    pub states: Option<usize>,
    /// tick-buckets | quantile.
    #[arg(long, global = true)]
    pub scheme: Option<String>,
    /// Mid-price granularity in dollars.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// stochastic | deterministic | none.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Master RNG seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Session START:END in seconds after midnight.
    #[arg(long, global = true)]
    pub session: Option<String>,
    /// Window in seconds for the count-variance estimate.
    #[arg(long, global = true)]
    pub variance_window: Option<f64>,
    /// Keep simultaneous mid changes as separate events.
    #[arg(long, global = true)]
    pub no_collapse: bool,
    /// Length of the first training span in minutes
    #[arg(long, global = true)]
    pub train_minutes: Option<f64>,
    /// Number of cross-validation folds
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    /// Length of each test fold in minutes
    #[arg(long, global = true)]
    pub fold_minutes: Option<f64>,
    /// Folds with fewer test price changes are marked degenerate
    #[arg(long, global = true)]
    pub min_test_changes: Option<usize>,
    /// poisson | hawkes.
    #[arg(long, global = true)]
    pub process: Option<String>,
    /// Rates per asset, comma separated.
    #[arg(long, global = true)]
    pub lambda: Option<String>,
    /// Hawkes excitation matrix, rows split by ';'.
    #[arg(long, global = true)]
    pub alpha: Option<String>,
    /// Hawkes decay matrix, rows split by ';'.
    #[arg(long, global = true)]
    pub beta: Option<String>,
    /// Simulation horizon in seconds.
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
    /// P(up after up) per asset, comma separated
    #[arg(long, global = true)]
    pub p_uu: Option<String>,
    /// P(down after down) per asset, comma separated
    #[arg(long, global = true)]
    pub p_dd: Option<String>,
    /// Model JSON file (repeatable, one per asset).
    #[arg(long = "model", global = true)]
    pub models: Vec<PathBuf>,
    /// Initial prices, comma separated.
    #[arg(long, global = true)]
    pub s0: Option<String>,
    /// Also write LOBSTER message/orderbook files.
    #[arg(long, global = true)]
    pub lobster: bool,
    /// Omit size-only quotes from LOBSTER output.
    #[arg(long, global = true)]
    pub no_size_updates: bool,
}

fn ticker_path(s: &str) -> Result<(String, PathBuf)> {
    let (t, p) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("expected TICKER=PATH, got {s:?}")))?;
    Ok((t.to_owned(), PathBuf::from(p)))
}

impl Flags {
    /// Config file (if any) with flags applied, plus the file's path and text.
    pub fn load(&self) -> Result<(RunConfig, Option<(PathBuf, String)>)> {
        let (mut cfg, source) = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                let base = path.parent().unwrap_or(std::path::Path::new(""));
                let cfg = RunConfig::from_toml_str(&text, base, path)?;
                (cfg, Some((path.clone(), text)))
            }
            None => (RunConfig::default(), None),
        };
        self.apply(&mut cfg)?;
        Ok((cfg, source))
    }

    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        let parse_err = |e: mgcpp_core::Error| CliError::Config(e.to_string());
        for m in &self.messages {
            let (t, p) = ticker_path(m)?;
            cfg.asset_mut(&t).message = Some(p);
        }
        for o in &self.orderbooks {
            let (t, p) = ticker_path(o)?;
            cfg.asset_mut(&t).orderbook = Some(p);
        }
        if !self.assets.is_empty() {
            cfg.select_assets(&self.assets);
        }
        if let Some(d) = &self.data_dir {
            cfg.data_dir = Some(d.clone());
        }
        if let Some(w) = &self.windows {
            cfg.windows = w.clone();
        }
        if let Some(n) = self.states {
            cfg.n_states = n;
        }
        if let Some(s) = &self.scheme {
            cfg.scheme = s.parse().map_err(parse_err)?;
        }
        if let Some(d) = self.delta {
            cfg.delta = d;
        }
        if let Some(m) = &self.mode {
            cfg.mode = Some(m.parse().map_err(parse_err)?);
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(s) = &self.session {
            cfg.session = parse_session(s)?;
        }
        if let Some(w) = self.variance_window {
            cfg.variance_window = w;
        }
        if self.no_collapse {
            cfg.collapse_simultaneous = false;
        }
        if let Some(x) = self.train_minutes {
            cfg.cv.train_minutes = x;
        }
        if let Some(x) = self.folds {
            cfg.cv.folds = x;
        }
        if let Some(x) = self.fold_minutes {
            cfg.cv.fold_minutes = x;
        }
        if let Some(x) = self.min_test_changes {
            cfg.cv.min_test_changes = x;
        }
        let sim = &mut cfg.simulate;
        if let Some(p) = &self.process {
            sim.process = p.parse()?;
        }
        if let Some(l) = &self.lambda {
            sim.lambda = parse_list(l)?;
        }
        if let Some(a) = &self.alpha {
            sim.alpha = Some(parse_matrix(a)?);
        }
        if let Some(b) = &self.beta {
            sim.beta = Some(parse_matrix(b)?);
        }
        if let Some(h) = self.horizon {
            sim.horizon = Some(h);
        }
        if let Some(p) = &self.p_uu {
            sim.p_uu = parse_list(p)?;
        }
        if let Some(p) = &self.p_dd {
            sim.p_dd = parse_list(p)?;
        }
        if !self.models.is_empty() {
            sim.models = self.models.clone();
        }
        if let Some(s) = &self.s0 {
            sim.s0 = parse_list(s)?;
        }
        if self.lobster {
            sim.lobster = true;
        }
        if self.no_size_updates {
            sim.size_updates = false;
        }
        Ok(())
    }
}
