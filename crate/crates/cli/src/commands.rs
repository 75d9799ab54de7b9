//! Subcommand implementations.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chjm_core::diagnostics::martingale_suite;
use chjm_core::dynamics::DriftHook;
use chjm_core::engine::z_score;
use chjm_core::model::complete_reverse_spreads;
use chjm_core::pricers::{
    collateralized_zcb, equity_forward, fx_forward, fx_forward_claim, fx_option_black, fx_option_claim, zcb_claim,
};
use chjm_core::{simulate, Claim, Currency, CurveSet, Deflator, Model, SimulationConfig, VolatilitySpec};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::read_model_config;
use crate::error::{CliError, CliResult};
use crate::instruments::{read_instruments, Instrument, InstrumentRow};
use crate::market::{bootstrap_market, read_curve_file};

/// Environment variable overriding the simulation worker count.
pub const WORKERS_ENV: &str = "CHJM_WORKERS";

/// Martingale checks with `|z|` above this fail `diagnose`.
pub const Z_LIMIT: f64 = 4.0;

#[derive(Debug, Parser)]
#[command(name = "chjm", version, about = "Collateralized multi-currency HJM pricer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bootstrap discount and funding-spread curves from market quotes.
    Bootstrap {
        /// Market-data CSV.
        market: PathBuf,
        /// Curve file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Price instruments analytically and/or by simulation.
    Price {
        #[command(flatten)]
        model: ModelArgs,
        /// Instrument CSV.
        #[arg(long)]
        instruments: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the martingale test suite on the calibrated model.
    Diagnose {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Flip the convexity term of the collateral-rate drift.
        #[arg(long, hide = true)]
        corrupt_drift: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Black,
    Mc,
    Both,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Curve file written by `bootstrap`.
    #[arg(long)]
    pub curves: PathBuf,
    /// Volatility configuration (TOML).
    #[arg(long)]
    pub vols: PathBuf,
    /// Base currency of the simulation measure.
    #[arg(long)]
    pub base_ccy: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub substeps: usize,
    /// Use antithetic path pairs.
    #[arg(long)]
    pub antithetic: bool,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// JSON report path; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional CSV table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Bootstrap { market, out } => cmd_bootstrap(&market, &out),
        Command::Price {
            model,
            instruments,
            method,
            sim,
            output,
        } => cmd_price(&model, &instruments, method, &sim, &output),
        Command::Diagnose {
            model,
            sim,
            output,
            corrupt_drift,
        } => cmd_diagnose(&model, &sim, &output, corrupt_drift),
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::file(&display(path), e.to_string()))
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::file(&display(path), e.to_string()))
}

/// Worker count from [`WORKERS_ENV`], if set.
pub fn workers_from_env() -> CliResult<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::input(
                WORKERS_ENV,
                0,
                WORKERS_ENV,
                format!("expected a positive integer, got {v:?}"),
            )),
        },
    }
}

pub fn cmd_bootstrap(market: &Path, out: &Path) -> CliResult<()> {
    let text = read(market)?;
    let outcome = bootstrap_market(&display(market), &text)?;
    let json = serde_json::to_string_pretty(&outcome.curve_file).expect("curve file serializes");
    write(out, &(json + "\n"))?;
    let mut summary = String::new();
    writeln!(summary, "{:<28} {:>10} {:>12}", "instrument", "maturity", "residual").unwrap();
    for r in &outcome.residuals {
        writeln!(summary, "{:<28} {:>10.4} {:>12.3e}", r.instrument, r.maturity, r.relative).unwrap();
    }
    writeln!(summary, "max |residual| = {:.3e}", outcome.max_residual()).unwrap();
    print!("{summary}");
    Ok(())
}

/// Calibrated model inputs after spread completion.
pub struct LoadedModel {
    pub base: Currency,
    pub curves: CurveSet,
    pub vols: VolatilitySpec,
    digest: Sha256,
}

fn load_model(args: &ModelArgs) -> CliResult<LoadedModel> {
    let curves_name = display(&args.curves);
    let curves_text = read(&args.curves)?;
    let vols_text = read(&args.vols)?;
    let file = read_curve_file(&curves_name, &curves_text)?;
    let config = read_model_config(&display(&args.vols), &vols_text, file.curves.tenor())?;
    let base = args
        .base_ccy
        .as_deref()
        .map(|b| Currency::new(b.to_ascii_uppercase()))
        .or(config.base)
        .unwrap_or(file.base);
    let mut curves = file.curves;
    let mut vols = config.vols;
    if curves.discount_curve(&base).is_err() {
        return Err(CliError::input(&curves_name, 1, "base", format!("no discount curve for base currency {base}")));
    }
    complete_reverse_spreads(&mut curves, &mut vols, &base)
        .map_err(|e| CliError::file(&curves_name, format!("field `spreads`: {e}")))?;

    let mut digest = Sha256::new();
    for (tag, bytes) in [("curves", curves_text.as_bytes()), ("vols", vols_text.as_bytes())] {
        digest.update(tag.as_bytes());
        digest.update((bytes.len() as u64).to_le_bytes());
        digest.update(bytes);
    }
    digest.update(format!("base={base}").as_bytes());
    Ok(LoadedModel {
        base,
        curves,
        vols,
        digest,
    })
}

fn sim_config(sim: &SimArgs) -> CliResult<SimulationConfig> {
    let cfg = SimulationConfig {
        paths: sim.paths,
        substeps: sim.substeps,
        seed: sim.seed,
        antithetic: sim.antithetic,
        workers: workers_from_env()?,
    };
    cfg.validate().map_err(|e| CliError::input("command line", 0, "--paths/--substeps", e.to_string()))?;
    Ok(cfg)
}

#[derive(Debug, Serialize)]
struct SimSummary {
    paths: usize,
    seed: u64,
    substeps: usize,
    antithetic: bool,
}

impl From<&SimArgs> for SimSummary {
    fn from(s: &SimArgs) -> Self {
        Self {
            paths: s.paths,
            seed: s.seed,
            substeps: s.substeps,
            antithetic: s.antithetic,
        }
    }
}

/// Digest of all inputs plus the flags that affect results, and a job id
/// derived from it. Worker count is deliberately excluded.
fn identify(mut digest: Sha256, command: &str, flags: &str) -> (String, String) {
    digest.update(flags.as_bytes());
    let inputs = hex::encode(digest.finalize());
    let job = hex::encode(Sha256::digest(format!("{command}:{inputs}").as_bytes()));
    (job[..16].to_string(), inputs)
}

#[derive(Debug, Serialize)]
struct McValue {
    mean: f64,
    std_error: f64,
    paths: usize,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct InstrumentReport {
    id: String,
    #[serde(rename = "type")]
    kind: &'static str,
    maturity: f64,
    /// Currency of the reported values; forward rates are quoted per unit of
    /// the counter currency.
    currency: Currency,
    analytic: Option<f64>,
    mc: Option<McValue>,
    diff_in_se: Option<f64>,
}

#[derive(Debug, Serialize)]
struct PriceReport {
    job_id: String,
    inputs_digest: String,
    command: &'static str,
    base: Currency,
    method: Method,
    simulation: Option<SimSummary>,
    instruments: Vec<InstrumentReport>,
}

/// Closed-form value and the currency it is expressed in.
fn analytic_value(curves: &CurveSet, vols: &VolatilitySpec, inst: &Instrument) -> chjm_core::Result<(f64, Currency)> {
    match inst {
        Instrument::Zcb {
            currency,
            collateral,
            maturity,
        } => Ok((collateralized_zcb(curves, currency, collateral, *maturity)?, currency.clone())),
        Instrument::FxForward(spec) => Ok((fx_forward(curves, spec)?, spec.pay.clone())),
        Instrument::FxOption(spec) => Ok((fx_option_black(curves, vols, spec)?, spec.domestic.clone())),
        Instrument::EquityForward { currency, maturity } => Ok((equity_forward(curves, currency, *maturity)?, currency.clone())),
    }
}

/// Claim plus the factor turning its estimate into the reported quantity.
fn mc_claim(model: &Model, inst: &Instrument) -> chjm_core::Result<(Claim, f64)> {
    let curves = model.curves();
    match inst {
        Instrument::Zcb {
            currency,
            collateral,
            maturity,
        } => Ok((zcb_claim(model, currency, collateral, *maturity)?, 1.0)),
        Instrument::FxForward(spec) => {
            let y = collateralized_zcb(curves, &spec.pay, &spec.collateral, spec.maturity)?;
            Ok((fx_forward_claim(model, spec)?, 1.0 / y))
        }
        Instrument::FxOption(spec) => Ok((fx_option_claim(model, spec)?, 1.0)),
        Instrument::EquityForward { currency, maturity } => {
            let n = model.tenor().require_node(*maturity)?;
            let id = model.ccy(currency)?;
            let d = curves.discount_curve(currency)?.discount(model.tenor().node(n))?;
            let claim = Claim::new(n, Deflator::Collateral { currency: id, collateral: id }, move |st| {
                st.equity_forward(id, n)
            });
            Ok((claim, 1.0 / d))
        }
    }
}

fn instrument_error(file: &str, row: &InstrumentRow, e: chjm_core::Error) -> CliError {
    let field = match &row.instrument {
        Instrument::FxOption(_) | Instrument::FxForward(_) => "counter",
        _ => "currency",
    };
    CliError::from_core(file, row.line, field, e)
}

pub fn cmd_price(
    model_args: &ModelArgs,
    instruments: &Path,
    method: Method,
    sim: &SimArgs,
    output: &OutputArgs,
) -> CliResult<()> {
    let loaded = load_model(model_args)?;
    let inst_name = display(instruments);
    let inst_text = read(instruments)?;
    let rows = read_instruments(&inst_name, &inst_text)?;
    let cfg = sim_config(sim)?;

    let mut reports = Vec::with_capacity(rows.len());
    for row in &rows {
        let maturity = match &row.instrument {
            Instrument::Zcb { maturity, .. } | Instrument::EquityForward { maturity, .. } => *maturity,
            Instrument::FxForward(s) => s.maturity,
            Instrument::FxOption(s) => s.maturity,
        };
        if !matches!(loaded.curves.tenor().node_index(maturity), Some(n) if n > 0) {
            return Err(CliError::input(
                &inst_name,
                row.line,
                "maturity",
                format!("{maturity} is not a tenor node after 0 (grid {:?})", loaded.curves.tenor().nodes()),
            ));
        }
        let (value, currency) = analytic_value(&loaded.curves, &loaded.vols, &row.instrument)
            .map_err(|e| instrument_error(&inst_name, row, e))?;
        reports.push(InstrumentReport {
            id: row.id.clone(),
            kind: row.instrument.type_tag(),
            maturity,
            currency,
            analytic: (method != Method::Mc).then_some(value),
            mc: None,
            diff_in_se: None,
        });
    }

    if method != Method::Black {
        let model = Model::new(&loaded.curves, &loaded.vols, &loaded.base)
            .map_err(|e| CliError::file(&display(&model_args.curves), e.to_string()))?;
        let mut claims = Vec::with_capacity(rows.len());
        let mut scales = Vec::with_capacity(rows.len());
        for row in &rows {
            let (claim, scale) = mc_claim(&model, &row.instrument).map_err(|e| instrument_error(&inst_name, row, e))?;
            claims.push(claim);
            scales.push(scale);
        }
        let estimates =
            simulate(&model, &cfg, &claims).map_err(|e| CliError::file(&inst_name, e.to_string()))?;
        for ((report, est), scale) in reports.iter_mut().zip(estimates).zip(scales) {
            let (mean, se) = (est.mean * scale, est.std_error * scale.abs());
            if let Some(a) = report.analytic {
                report.diff_in_se = Some(z_score(mean, se, a));
            }
            report.mc = Some(McValue {
                mean,
                std_error: se,
                paths: est.paths,
                seed: cfg.seed,
            });
        }
    }

    let mut digest = loaded.digest;
    digest.update(b"instruments");
    digest.update((inst_text.len() as u64).to_le_bytes());
    digest.update(inst_text.as_bytes());
    let flags = format!(
        "method={method:?};paths={};seed={};substeps={};antithetic={}",
        sim.paths, sim.seed, sim.substeps, sim.antithetic
    );
    let (job_id, inputs_digest) = identify(digest, "price", &flags);
    let report = PriceReport {
        job_id,
        inputs_digest,
        command: "price",
        base: loaded.base,
        method,
        simulation: (method != Method::Black).then(|| sim.into()),
        instruments: reports,
    };
    emit(&report, output, || {
        let mut csv = String::from("id,type,maturity,currency,analytic,mc_mean,mc_std_error,diff_in_se\n");
        for r in &report.instruments {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            writeln!(
                csv,
                "{},{},{},{},{},{},{},{}",
                r.id,
                r.kind,
                r.maturity,
                r.currency,
                opt(r.analytic),
                opt(r.mc.as_ref().map(|m| m.mean)),
                opt(r.mc.as_ref().map(|m| m.std_error)),
                opt(r.diff_in_se)
            )
            .unwrap();
        }
        csv
    })
}

fn emit<T: Serialize>(report: &T, output: &OutputArgs, csv: impl FnOnce() -> String) -> CliResult<()> {
    let json = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
    match &output.out {
        Some(path) => write(path, &json)?,
        None => print!("{json}"),
    }
    if let Some(path) = &output.csv {
        write(path, &csv())?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct CheckRow {
    asset: String,
    horizon: f64,
    mean: f64,
    std_error: f64,
    target: f64,
    /// `null` when the estimate is exact but off target (infinite z).
    z: f64,
}

#[derive(Debug, Serialize)]
struct DiagnoseReport {
    job_id: String,
    inputs_digest: String,
    command: &'static str,
    base: Currency,
    simulation: SimSummary,
    z_limit: f64,
    max_abs_z: f64,
    passed: bool,
    checks: Vec<CheckRow>,
}

pub fn cmd_diagnose(model_args: &ModelArgs, sim: &SimArgs, output: &OutputArgs, corrupt: bool) -> CliResult<()> {
    let loaded = load_model(model_args)?;
    let cfg = sim_config(sim)?;
    let hook = if corrupt { DriftHook::FlipConvexity } else { DriftHook::None };
    let model = Model::with_drift_hook(&loaded.curves, &loaded.vols, &loaded.base, hook)
        .map_err(|e| CliError::file(&display(&model_args.curves), e.to_string()))?;
    let checks = martingale_suite(&model, &cfg).map_err(|e| CliError::file(&display(&model_args.curves), e.to_string()))?;

    let rows: Vec<CheckRow> = checks
        .into_iter()
        .map(|c| CheckRow {
            asset: c.asset,
            horizon: c.horizon,
            mean: c.estimate.mean,
            std_error: c.estimate.std_error,
            target: c.target,
            z: c.z,
        })
        .collect();
    let max_abs_z = rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max);
    let passed = max_abs_z <= Z_LIMIT;

    let mut table = String::new();
    writeln!(table, "{:<20} {:>8} {:>16} {:>16} {:>9}", "asset", "horizon", "mc mean", "target", "z").unwrap();
    for r in &rows {
        writeln!(
            table,
            "{:<20} {:>8.4} {:>16.12} {:>16.12} {:>9.3}",
            r.asset, r.horizon, r.mean, r.target, r.z
        )
        .unwrap();
    }
    writeln!(table, "max |z| = {max_abs_z:.3} ({})", if passed { "pass" } else { "FAIL" }).unwrap();

    let flags = format!(
        "paths={};seed={};substeps={};antithetic={};corrupt={corrupt}",
        sim.paths, sim.seed, sim.substeps, sim.antithetic
    );
    let (job_id, inputs_digest) = identify(loaded.digest, "diagnose", &flags);
    let report = DiagnoseReport {
        job_id,
        inputs_digest,
        command: "diagnose",
        base: loaded.base,
        simulation: sim.into(),
        z_limit: Z_LIMIT,
        max_abs_z,
        passed,
        checks: rows,
    };
    // The table goes to stdout unless the JSON report does.
    if output.out.is_some() {
        print!("{table}");
    } else {
        eprint!("{table}");
    }
    emit(&report, output, || {
        let mut csv = String::from("asset,horizon,mean,std_error,target,z\n");
        for r in &report.checks {
            writeln!(csv, "{},{},{},{},{},{}", r.asset, r.horizon, r.mean, r.std_error, r.target, r.z).unwrap();
        }
        csv
    })?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Diagnostic(format!(
            "martingale test failed: max |z| = {max_abs_z:.3} exceeds {Z_LIMIT}"
        )))
    }
}
