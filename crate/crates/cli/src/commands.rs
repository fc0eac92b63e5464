use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use log::{info, warn};
use mgcpp_core::lob_ingest::{mid_price_series, parse_orderbook_file, write_lobster_pair};
use mgcpp_core::markov_price::TransitionModel;
use mgcpp_core::mgcpp::simulate_mgcpp;
use mgcpp_core::point_process::{
    hawkes_limit_params, simulate_hawkes, simulate_poisson, write_binary, write_csv, HawkesSpec,
    RateParams,
};
use mgcpp_core::validation::{
    empirical_std_curve, mse, percentage_error, rolling_cv, sqrt_regression, CvReport,
};
use mgcpp_core::{
    calibrate_ticks, rng, AssetCalibration, AssetParams, Centralization, CurveKind,
    Error as CoreError, StdCurve, TickSeries,
};
use serde::Serialize;

use crate::config::{Process, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{write_manifest, OutputDir, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Calibrate,
    Validate,
    Crossval,
    Simulate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Calibrate => "calibrate",
            Command::Validate => "validate",
            Command::Crossval => "crossval",
            Command::Simulate => "simulate",
        }
    }
}

/// Validates the config, takes the output directory and runs `command`.
/// `source` is the config file path and its verbatim text, if any.
pub fn run(command: Command, config: &RunConfig, source: Option<&(PathBuf, String)>) -> Result<()> {
    config.validate()?;
    let out = OutputDir::open(&config.out)?;
    write_manifest(&out, command.name(), config, source)?;
    match command {
        Command::Calibrate => cmd_calibrate(config, &out),
        Command::Validate => cmd_validate(config, &out),
        Command::Crossval => cmd_crossval(config, &out),
        Command::Simulate => cmd_simulate(config, &out),
    }
}

/// Reads one asset's LOBSTER pair and clips it to the session.
pub fn load_ticks(
    ticker: &str,
    message: &Path,
    orderbook: &Path,
    config: &RunConfig,
) -> Result<TickSeries> {
    let open = |p: &Path| {
        File::open(p)
            .map(BufReader::new)
            .map_err(|e| CliError::io(p, e))
    };
    let label = || format!("{ticker} ({}, {})", message.display(), orderbook.display());
    let quotes = parse_orderbook_file(open(message)?, open(orderbook)?).map_err(|source| {
        CliError::Input {
            label: label(),
            source,
        }
    })?;
    let ticks = mid_price_series(&quotes)
        .and_then(|t| t.clip(config.session))
        .map_err(|source| CliError::Asset {
            asset: ticker.to_owned(),
            source,
        })?;
    if let Err(e) = ticks.check_granularity(config.delta) {
        warn!("{ticker}: {e}");
    }
    info!(
        "{ticker}: {} quotes, {} ticks in session",
        quotes.len(),
        ticks.len()
    );
    Ok(ticks)
}

pub struct Calibrated {
    pub ticker: String,
    pub ticks: TickSeries,
    pub calibration: AssetCalibration,
}

pub fn calibrate_all(config: &RunConfig) -> Result<Vec<Calibrated>> {
    let cal_cfg = config.calibration();
    config
        .resolve_inputs()?
        .into_iter()
        .map(|(ticker, message, orderbook)| {
            let ticks = load_ticks(&ticker, &message, &orderbook, config)?;
            let calibration =
                calibrate_ticks(&ticks, &cal_cfg).map_err(|source| CliError::Asset {
                    asset: ticker.clone(),
                    source,
                })?;
            Ok(Calibrated {
                ticker,
                ticks,
                calibration,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct AssetReport<'a> {
    asset: &'a str,
    #[serde(flatten)]
    params: AssetParams,
    change_count: usize,
    horizon: f64,
    values: &'a [f64],
    transition: &'a [Vec<f64>],
    pi_star: &'a [f64],
}

#[derive(Serialize)]
struct CalibrationReport<'a> {
    schema_version: u32,
    n_states: usize,
    scheme: String,
    assets: Vec<AssetReport<'a>>,
}

fn write_calibration(config: &RunConfig, out: &OutputDir, assets: &[Calibrated]) -> Result<()> {
    let mut t2 = String::from("asset,lambda_bar,sigma_sq,change_count,horizon_s\n");
    let mut t3 = String::from("asset,n_states,p_uu,p_dd,sigma_star,a_star\n");
    let mut consts = String::from("asset,state,value,pi_star,b,g,v\n");
    for a in assets {
        let c = &a.calibration;
        let p = &c.params;
        writeln!(
            t2,
            "{},{},{},{},{}",
            a.ticker,
            p.lambda_bar,
            p.sigma_sq,
            c.change_count(),
            c.horizon()
        )
        .unwrap();
        let tr = c.model.transition();
        let (uu, dd) = if c.model.n_states() == 2 {
            (tr[0][0].to_string(), tr[1][1].to_string())
        } else {
            (String::new(), String::new())
        };
        writeln!(
            t3,
            "{},{},{uu},{dd},{},{}",
            a.ticker,
            c.model.n_states(),
            p.sigma_star,
            p.a_star
        )
        .unwrap();
        for k in 0..c.model.n_states() {
            writeln!(
                consts,
                "{},{k},{},{},{},{},{}",
                a.ticker,
                c.model.values()[k],
                c.model.pi_star()[k],
                c.constants.b[k],
                c.constants.g[k],
                c.constants.v[k]
            )
            .unwrap();
        }
        out.write_json(&format!("model_{}.json", a.ticker), &c.model)?;
    }
    out.write("table2.csv", t2)?;
    out.write("table3.csv", t3)?;
    out.write("constants.csv", consts)?;
    let report = CalibrationReport {
        schema_version: SCHEMA_VERSION,
        n_states: config.n_states,
        scheme: config.scheme.to_string(),
        assets: assets
            .iter()
            .map(|a| AssetReport {
                asset: &a.ticker,
                params: a.calibration.params,
                change_count: a.calibration.change_count(),
                horizon: a.calibration.horizon(),
                values: a.calibration.model.values(),
                transition: a.calibration.model.transition(),
                pi_star: a.calibration.model.pi_star(),
            })
            .collect(),
    };
    out.write_json("calibration.json", &report)?;
    Ok(())
}

fn print_calibration(assets: &[Calibrated]) {
    println!(
        "{:<8} {:>10} {:>10} {:>13} {:>10} {:>8}",
        "asset", "lambda_bar", "sigma_sq", "a_star", "sigma_star", "changes"
    );
    for a in assets {
        let p = &a.calibration.params;
        println!(
            "{:<8} {:>10.4} {:>10.4} {:>13.4e} {:>10.6} {:>8}",
            a.ticker,
            p.lambda_bar,
            p.sigma_sq,
            p.a_star,
            p.sigma_star,
            a.calibration.change_count()
        );
    }
}

pub fn cmd_calibrate(config: &RunConfig, out: &OutputDir) -> Result<()> {
    let assets = calibrate_all(config)?;
    write_calibration(config, out, &assets)?;
    print_calibration(&assets);
    Ok(())
}

#[derive(Serialize)]
struct CurveReport {
    asset: String,
    mode: Centralization,
    regression_coefficient: f64,
    model_coefficient: f64,
    percentage_error: Option<f64>,
    mse_fclt1: f64,
    mse_fclt2: f64,
    empirical: StdCurve,
    fclt1: StdCurve,
    fclt2: StdCurve,
}

#[derive(Serialize)]
struct ValidationReport {
    schema_version: u32,
    mode: Centralization,
    assets: Vec<CurveReport>,
}

pub fn cmd_validate(config: &RunConfig, out: &OutputDir) -> Result<()> {
    let mode = config.mode.unwrap_or(Centralization::Stochastic);
    let windows = config.window_grid()?;
    let assets = calibrate_all(config)?;
    write_calibration(config, out, &assets)?;
    let mut reports = Vec::with_capacity(assets.len());
    for a in &assets {
        let cal = &a.calibration;
        let asset_err = |source: CoreError| CliError::Asset {
            asset: a.ticker.clone(),
            source,
        };
        let empirical = empirical_std_curve(
            &a.ticker,
            &a.ticks,
            cal.changes.times(),
            cal.params.a_star,
            &windows,
            mode,
        )
        .map_err(asset_err)?;
        let fclt1 = StdCurve::model(&a.ticker, &cal.params, CurveKind::Fclt1, &empirical.windows)?;
        let fclt2 = StdCurve::model(&a.ticker, &cal.params, CurveKind::Fclt2, &empirical.windows)?;
        let regression_coefficient = sqrt_regression(&empirical).map_err(asset_err)?;
        let model_coefficient = match mode.model_kind() {
            CurveKind::Fclt1 => cal.params.fclt1_coefficient(),
            _ => cal.params.fclt2_coefficient(),
        };
        let error = match percentage_error(model_coefficient, regression_coefficient) {
            Ok(e) => Some(e),
            Err(e) => {
                warn!("{}: {e}", a.ticker);
                None
            }
        };
        reports.push(CurveReport {
            asset: a.ticker.clone(),
            mode,
            regression_coefficient,
            model_coefficient,
            percentage_error: error,
            mse_fclt1: mse(&empirical, &fclt1)?,
            mse_fclt2: mse(&empirical, &fclt2)?,
            empirical,
            fclt1,
            fclt2,
        });
    }

    let mut curves = String::from("asset,window_s,empirical,fclt1,fclt2\n");
    let mut t4 = String::from("asset,mse_fclt1,mse_fclt2\n");
    let mut coef =
        String::from("asset,regression_coefficient,model_coefficient,percentage_error\n");
    for r in &reports {
        for i in 0..r.empirical.len() {
            writeln!(
                curves,
                "{},{},{},{},{}",
                r.asset,
                r.empirical.windows[i],
                r.empirical.stds[i],
                r.fclt1.stds[i],
                r.fclt2.stds[i]
            )
            .unwrap();
        }
        writeln!(t4, "{},{},{}", r.asset, r.mse_fclt1, r.mse_fclt2).unwrap();
        let e = r
            .percentage_error
            .map(|e| e.to_string())
            .unwrap_or_default();
        writeln!(
            coef,
            "{},{},{},{e}",
            r.asset, r.regression_coefficient, r.model_coefficient
        )
        .unwrap();
    }
    out.write("curves.csv", curves)?;
    out.write("table4.csv", t4)?;
    let coef_name = match mode {
        Centralization::Stochastic => "table5.csv",
        Centralization::Deterministic | Centralization::None => "table7.csv",
    };
    out.write(coef_name, coef)?;

    println!(
        "{:<8} {:>12} {:>12} {:>8} {:>12}",
        "asset", "regression", "model", "error%", "mse"
    );
    for r in &reports {
        let mse_mode = if mode == Centralization::Stochastic {
            r.mse_fclt1
        } else {
            r.mse_fclt2
        };
        println!(
            "{:<8} {:>12.6} {:>12.6} {:>8.3} {:>12.4e}",
            r.asset,
            r.regression_coefficient,
            r.model_coefficient,
            r.percentage_error.unwrap_or(f64::NAN),
            mse_mode
        );
    }
    out.write_json(
        "validation.json",
        &ValidationReport {
            schema_version: SCHEMA_VERSION,
            mode,
            assets: reports,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct AssetCv {
    asset: String,
    #[serde(flatten)]
    report: CvReport,
}

#[derive(Serialize)]
struct CvJson {
    schema_version: u32,
    mode: Centralization,
    assets: Vec<AssetCv>,
    overall_error: Option<f64>,
}

pub fn cmd_crossval(config: &RunConfig, out: &OutputDir) -> Result<()> {
    let cv = config.cv_config(Centralization::Deterministic)?;
    let inputs = config.resolve_inputs()?;
    let mut results = Vec::with_capacity(inputs.len());
    for (ticker, message, orderbook) in inputs {
        let ticks = load_ticks(&ticker, &message, &orderbook, config)?;
        let report = rolling_cv(&ticker, &ticks, &cv).map_err(|source| CliError::Asset {
            asset: ticker.clone(),
            source,
        })?;
        results.push(AssetCv {
            asset: ticker,
            report,
        });
    }
    let means: Vec<f64> = results.iter().filter_map(|r| r.report.mean_error).collect();
    let overall = (!means.is_empty()).then(|| means.iter().sum::<f64>() / means.len() as f64);

    let mut csv = String::from(
        "asset,fold,train_start,train_end,test_start,test_end,test_changes,regression_coefficient,model_coefficient,percentage_error,degenerate\n",
    );
    let mut summary = String::from("asset,mean_error,folds_used\n");
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in &results {
        for f in &r.report.folds {
            writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.asset,
                f.fold,
                f.train.start,
                f.train.end,
                f.test.start,
                f.test.end,
                f.test_changes,
                opt(f.regression_coefficient),
                f.model_coefficient,
                opt(f.percentage_error),
                f.degenerate
            )
            .unwrap();
        }
        let used = r.report.folds.iter().filter(|f| !f.degenerate).count();
        writeln!(summary, "{},{},{used}", r.asset, opt(r.report.mean_error)).unwrap();
    }
    writeln!(summary, "ALL,{},{}", opt(overall), means.len()).unwrap();
    out.write("cv.csv", csv)?;
    out.write("cv_summary.csv", summary)?;

    println!("{:<8} fold errors % (mean)", "asset");
    for r in &results {
        let folds: Vec<String> = r
            .report
            .folds
            .iter()
            .map(|f| {
                f.percentage_error
                    .map_or("degenerate".into(), |e| format!("{e:.2}"))
            })
            .collect();
        println!(
            "{:<8} {} ({})",
            r.asset,
            folds.join(" "),
            r.report
                .mean_error
                .map_or("-".into(), |m| format!("{m:.2}"))
        );
    }
    match overall {
        Some(e) => println!("overall test error: {e:.2}%"),
        None => println!("overall test error: undefined"),
    }
    out.write_json(
        "cv.json",
        &CvJson {
            schema_version: SCHEMA_VERSION,
            mode: cv.centralization,
            assets: results,
            overall_error: overall,
        },
    )?;
    if overall.is_none() {
        return Err(
            CoreError::Degenerate("every cross-validation fold is degenerate".into()).into(),
        );
    }
    Ok(())
}

fn per_asset(name: &str, values: &[f64], d: usize, default: f64) -> Result<Vec<f64>> {
    match values.len() {
        0 => Ok(vec![default; d]),
        n if n == d => Ok(values.to_vec()),
        n => Err(CliError::Config(format!(
            "simulate.{name} has {n} entries for {d} assets"
        ))),
    }
}

#[derive(Serialize)]
struct GeneratorAsset {
    asset: String,
    #[serde(flatten)]
    params: AssetParams,
}

#[derive(Serialize)]
struct GeneratorJson {
    schema_version: u32,
    process: Process,
    horizon: f64,
    seed: u64,
    assets: Vec<GeneratorAsset>,
}

pub fn cmd_simulate(config: &RunConfig, out: &OutputDir) -> Result<()> {
    let sim = &config.simulate;
    let d = sim.lambda.len();
    if d == 0 {
        return Err(CliError::Config(
            "simulate.lambda needs at least one rate".into(),
        ));
    }
    let horizon = sim.horizon.unwrap_or(config.session.length());
    let tickers: Vec<String> = if config.assets.len() == d {
        config.assets.iter().map(|a| a.ticker.clone()).collect()
    } else {
        (1..=d).map(|i| format!("ASSET{i}")).collect()
    };

    let models: Vec<TransitionModel> = if sim.models.is_empty() {
        let p_uu = per_asset("p_uu", &sim.p_uu, d, 0.5)?;
        let p_dd = per_asset("p_dd", &sim.p_dd, d, 0.5)?;
        p_uu.iter()
            .zip(&p_dd)
            .map(|(&u, &dd)| TransitionModel::two_state(u, dd, config.delta))
            .collect::<mgcpp_core::Result<_>>()?
    } else if sim.models.len() != d {
        return Err(CliError::Config(format!(
            "{} model files for {d} assets",
            sim.models.len()
        )));
    } else {
        sim.models
            .iter()
            .map(|p| {
                let f = File::open(p).map_err(|e| CliError::io(p, e))?;
                serde_json::from_reader(BufReader::new(f)).map_err(|e| CliError::Input {
                    label: p.display().to_string(),
                    source: e.into(),
                })
            })
            .collect::<Result<_>>()?
    };
    let s0 = per_asset("s0", &sim.s0, d, 100.0)?;

    let event_seed = rng::derive_seed(config.seed, 1);
    let (events, rates) = match sim.process {
        Process::Poisson => (
            simulate_poisson(&sim.lambda, horizon, event_seed)?,
            RateParams {
                lambda_bar: sim.lambda.clone(),
                sigma_sq: sim.lambda.clone(),
            },
        ),
        Process::Hawkes => {
            let alpha = sim.alpha.clone().unwrap_or_else(|| vec![vec![0.0; d]; d]);
            let beta = sim.beta.clone().unwrap_or_else(|| vec![vec![1.0; d]; d]);
            let spec = HawkesSpec::new(sim.lambda.clone(), alpha, beta)?;
            (
                simulate_hawkes(&spec, horizon, event_seed)?,
                hawkes_limit_params(&spec)?,
            )
        }
    };
    let path = simulate_mgcpp(&events, &models, &s0, rng::derive_seed(config.seed, 2))?;

    out.write_with("events.csv", |w| write_csv(&events, w))?;
    out.write_with("events.bin", |w| write_binary(&events, w))?;
    out.write_with("prices.csv", |w| path.write_csv(w))?;
    let mut generator = Vec::with_capacity(d);
    for (i, ticker) in tickers.iter().enumerate() {
        let constants = mgcpp_core::markov_price::sigma_star_general(&models[i])?;
        generator.push(GeneratorAsset {
            asset: ticker.clone(),
            params: AssetParams {
                lambda_bar: rates.lambda_bar[i],
                sigma_sq: rates.sigma_sq[i],
                a_star: constants.a_star,
                sigma_star: constants.sigma_star,
                delta: config.delta,
            },
        });
        out.write_json(&format!("model_{ticker}.json"), &models[i])?;
        if sim.lobster {
            let quotes = path.assets[i].to_quotes(config.session.start, sim.size_updates)?;
            let (mut msg, mut book) = (Vec::new(), Vec::new());
            write_lobster_pair(&quotes, &mut msg, &mut book)?;
            out.write(&format!("{ticker}_message.csv"), msg)?;
            out.write(&format!("{ticker}_orderbook.csv"), book)?;
        }
    }
    out.write_json(
        "generator.json",
        &GeneratorJson {
            schema_version: SCHEMA_VERSION,
            process: sim.process,
            horizon,
            seed: config.seed,
            assets: generator,
        },
    )?;
    for (ticker, (n, a)) in tickers.iter().zip(events.counts().iter().zip(&path.assets)) {
        println!(
            "{ticker}: {n} events, S0 {:.4} -> {:.4}",
            a.s0,
            a.terminal()
        );
    }
    Ok(())
}
