//! Analytic and Monte Carlo prices of collateralized bonds, FX forwards,
//! FX options and equity forwards.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::curves::{CurveSet, Currency};
use crate::engine::{simulate, Claim, Deflator, PriceEstimate, SimulationConfig};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::vols::VolatilitySpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FxForwardSpec {
    /// Currency `i` the forward rate is quoted in.
    pub pay: Currency,
    /// Currency `j` delivered.
    pub receive: Currency,
    pub collateral: Currency,
    pub maturity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

/// European option on `f_x^{(domestic, foreign)}` paying in `domestic`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FxOptionSpec {
    pub domestic: Currency,
    pub foreign: Currency,
    pub strike: f64,
    pub maturity: f64,
    pub collateral: Currency,
    pub kind: OptionKind,
}

impl FxOptionSpec {
    fn validate(&self) -> Result<()> {
        if !(self.strike.is_finite() && self.strike >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "option strike must be non-negative, got {}",
                self.strike
            )));
        }
        Ok(())
    }
}

/// `D^{(i)}(0,T) Y^{(i,j)}(0,T)`: unit of `pay` at `T`, collateralized in `collateral`.
pub fn collateralized_zcb(curves: &CurveSet, pay: &Currency, collateral: &Currency, t: f64) -> Result<f64> {
    curves.collateralized_discount(pay, collateral, t)
}

/// `f_x^{(i,j)}(0) Ỹ^{(j,k)}(0,T) / Ỹ^{(i,k)}(0,T)`.
pub fn fx_forward(curves: &CurveSet, spec: &FxForwardSpec) -> Result<f64> {
    let t = curves.tenor().node(curves.tenor().require_node(spec.maturity)?);
    let spot = curves.spot_fx(&spec.pay, &spec.receive)?;
    if spec.pay == spec.receive {
        return Ok(1.0);
    }
    let yj = curves.collateralized_discount(&spec.receive, &spec.collateral, t)?;
    let yi = curves.collateralized_discount(&spec.pay, &spec.collateral, t)?;
    Ok(spot * yj / yi)
}

/// Undiscounted Black price for forward `f`, strike `k` and total standard
/// deviation `sd` of the log forward.
pub fn black(f: f64, k: f64, sd: f64, kind: OptionKind) -> f64 {
    let intrinsic = match kind {
        OptionKind::Call => (f - k).max(0.0),
        OptionKind::Put => (k - f).max(0.0),
    };
    if sd <= 0.0 || k <= 0.0 {
        return intrinsic;
    }
    let n = Normal::standard();
    let d1 = ((f / k).ln() + 0.5 * sd * sd) / sd;
    let d2 = d1 - sd;
    match kind {
        OptionKind::Call => f * n.cdf(d1) - k * n.cdf(d2),
        OptionKind::Put => k * n.cdf(-d2) - f * n.cdf(-d1),
    }
}

/// Total variance `Sigma^2 T` of `ln f_x^{(i,j)}(T_n)`:
/// `sum_{r=1}^{n} delta_{r-1} |sigma_X + Gamma^{(i,k)}(r) - Gamma^{(j,k)}(r)|^2`
/// with `Gamma^{(m,k)}(r) = sum_{m'=r}^{n-1} delta_{m'} (sigma^{(m)}_{m'} + sigma_y^{(m,k)}_{m'})`.
pub fn fx_total_variance(
    curves: &CurveSet,
    vols: &VolatilitySpec,
    i: &Currency,
    j: &Currency,
    k: &Currency,
    n: usize,
) -> Result<f64> {
    let ts = curves.tenor();
    let d = vols.dim();
    let sx = vols.fx(i, j)?;
    let gamma_diff = |r: usize| -> Vec<f64> {
        let mut g = sx.clone();
        for m in r..n {
            let delta = ts.accruals()[m];
            let (ci, yi) = (vols.collateral(i).row(m), vols.spread(i, k).row(m));
            let (cj, yj) = (vols.collateral(j).row(m), vols.spread(j, k).row(m));
            for x in 0..d {
                g[x] += delta * (ci[x] + yi[x] - cj[x] - yj[x]);
            }
        }
        g
    };
    Ok((1..=n)
        .map(|r| {
            let g = gamma_diff(r);
            ts.accruals()[r - 1] * g.iter().map(|v| v * v).sum::<f64>()
        })
        .sum())
}

/// Black price `Ỹ^{(i,k)}(0,T) Black(F, K, Sigma)` under the Gaussian model.
pub fn fx_option_black(curves: &CurveSet, vols: &VolatilitySpec, spec: &FxOptionSpec) -> Result<f64> {
    spec.validate()?;
    let n = curves.tenor().require_node(spec.maturity)?;
    let t = curves.tenor().node(n);
    let f = fx_forward(
        curves,
        &FxForwardSpec {
            pay: spec.domestic.clone(),
            receive: spec.foreign.clone(),
            collateral: spec.collateral.clone(),
            maturity: t,
        },
    )?;
    let var = fx_total_variance(curves, vols, &spec.domestic, &spec.foreign, &spec.collateral, n)?;
    let df = curves.collateralized_discount(&spec.domestic, &spec.collateral, t)?;
    Ok(df * black(f, spec.strike, var.sqrt(), spec.kind))
}

/// Claim paying `(f_x^{(i,j)}(T) - K)^+` (or the put) in `i`, collateralized in `k`.
pub fn fx_option_claim(model: &Model, spec: &FxOptionSpec) -> Result<Claim> {
    spec.validate()?;
    let n = model.tenor().require_node(spec.maturity)?;
    let (i, j, k) = (model.ccy(&spec.domestic)?, model.ccy(&spec.foreign)?, model.ccy(&spec.collateral)?);
    let (strike, kind) = (spec.strike, spec.kind);
    Ok(Claim::new(n, Deflator::Collateral { currency: i, collateral: k }, move |st| {
        let f = st.fx_pair(i, j);
        Ok(match kind {
            OptionKind::Call => (f - strike).max(0.0),
            OptionKind::Put => (strike - f).max(0.0),
        })
    }))
}

pub fn fx_option_mc(model: &Model, cfg: &SimulationConfig, spec: &FxOptionSpec) -> Result<PriceEstimate> {
    let claim = fx_option_claim(model, spec)?;
    Ok(simulate(model, cfg, &[claim])?.remove(0))
}

/// Claim paying one unit of `pay` at `T`, collateralized in `collateral`.
pub fn zcb_claim(model: &Model, pay: &Currency, collateral: &Currency, t: f64) -> Result<Claim> {
    let n = model.tenor().require_node(t)?;
    let deflator = Deflator::Collateral {
        currency: model.ccy(pay)?,
        collateral: model.ccy(collateral)?,
    };
    Ok(Claim::new(n, deflator, |_| Ok(1.0)))
}

pub fn zcb_mc(
    model: &Model,
    cfg: &SimulationConfig,
    pay: &Currency,
    collateral: &Currency,
    t: f64,
) -> Result<PriceEstimate> {
    let claim = zcb_claim(model, pay, collateral, t)?;
    Ok(simulate(model, cfg, &[claim])?.remove(0))
}

/// Claim paying the FX forward's underlying `f_x^{(i,j)}(T)` in `i`.
/// Its value is `Ỹ^{(i,k)}(0,T)` times the forward.
pub fn fx_forward_claim(model: &Model, spec: &FxForwardSpec) -> Result<Claim> {
    let n = model.tenor().require_node(spec.maturity)?;
    let (i, j, k) = (model.ccy(&spec.pay)?, model.ccy(&spec.receive)?, model.ccy(&spec.collateral)?);
    Ok(Claim::new(n, Deflator::Collateral { currency: i, collateral: k }, move |st| {
        Ok(st.fx_pair(i, j))
    }))
}

/// Time-0 same-currency collateralized equity forward `S(0, T_n)`.
pub fn equity_forward(curves: &CurveSet, ccy: &Currency, t: f64) -> Result<f64> {
    let n = curves.tenor().require_node(t)?;
    curves
        .equity(ccy)
        .ok_or_else(|| Error::Config(format!("no equity forwards for {ccy}")))?
        .forward(n)
}

/// `E[S(T_n, T_n) / C(T_n)] / D(0, T_n)`, which reproduces `S(0, T_n)`.
pub fn equity_forward_mc(model: &Model, cfg: &SimulationConfig, ccy: &Currency, t: f64) -> Result<PriceEstimate> {
    let n = model.tenor().require_node(t)?;
    let id = model.ccy(ccy)?;
    if !model.has_equity(id) {
        return Err(Error::Config(format!("no equity forwards for {ccy}")));
    }
    let claim = Claim::new(n, Deflator::Collateral { currency: id, collateral: id }, move |st| {
        st.equity_forward(id, n)
    });
    let est = simulate(model, cfg, &[claim])?.remove(0);
    let d = model.curves().discount_curve(ccy)?.discount(model.tenor().node(n))?;
    Ok(PriceEstimate {
        mean: est.mean / d,
        std_error: est.std_error / d,
        ..est
    })
}
