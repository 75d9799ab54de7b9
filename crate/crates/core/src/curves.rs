//! Time-0 market curves: collateralized discount curves `D(0,T)`, funding
//! spread curves `Y^{(i,j)}(0,T)`, LIBOR-OIS spread fixings and equity
//! forwards, bundled per currency in a [`CurveSet`].
//!
//! Curves interpolate log-linearly in time between pillars, which makes the
//! discrete forward rates piecewise constant and keeps discount factors
//! positive.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tenor::{TenorStructure, NODE_TOLERANCE};

/// Currency tag, e.g. `USD`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Currency(String);

impl Currency {
    pub fn new(code: impl Into<String>) -> Self {
        Self(code.into())
    }

    pub fn code(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Currency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Currency {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

/// Positive pillar values with log-linear interpolation, anchored at `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
struct LogLinear {
    times: Vec<f64>,
    values: Vec<f64>,
    logs: Vec<f64>,
}

impl LogLinear {
    fn new(mut pillars: Vec<(f64, f64)>, what: &str) -> Result<Self> {
        match pillars.first() {
            Some(&(0.0, v)) => {
                if v != 1.0 {
                    return Err(Error::InvalidInput(format!(
                        "{what}: value at T=0 must be 1, got {v}"
                    )));
                }
            }
            _ => pillars.insert(0, (0.0, 1.0)),
        }
        for w in pillars.windows(2) {
            // Written to reject NaN times as well.
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidInput(format!(
                    "{what}: pillar times not strictly increasing at T={}",
                    w[1].0
                )));
            }
        }
        if let Some(&(t, v)) = pillars
            .iter()
            .find(|(t, v)| !(t.is_finite() && v.is_finite() && *v > 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "{what}: pillar value at T={t} must be positive and finite, got {v}"
            )));
        }
        let (times, values): (Vec<f64>, Vec<f64>) = pillars.into_iter().unzip();
        let logs = values.iter().map(|v| v.ln()).collect();
        Ok(Self {
            times,
            values,
            logs,
        })
    }

    fn last_time(&self) -> f64 {
        *self.times.last().expect("anchored at zero")
    }

    fn value(&self, t: f64) -> Result<f64> {
        let last = self.last_time();
        if !(t >= 0.0 && t <= last + NODE_TOLERANCE) {
            return Err(Error::Domain(format!(
                "time {t} outside curve range [0, {last}]"
            )));
        }
        let k = self.times.partition_point(|&p| p < t);
        if k == self.times.len() {
            return Ok(self.values[k - 1]);
        }
        if self.times[k] == t {
            return Ok(self.values[k]);
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        Ok(((1.0 - w) * self.logs[k - 1] + w * self.logs[k]).exp())
    }

    fn pillars(&self) -> Vec<(f64, f64)> {
        self.times.iter().copied().zip(self.values.iter().copied()).collect()
    }
}

/// Collateralized zero-coupon bond prices `D^{(i)}(0,T)` for one currency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveRecord", into = "CurveRecord")]
pub struct DiscountCurve {
    currency: Currency,
    curve: LogLinear,
}

#[derive(Serialize, Deserialize)]
struct CurveRecord {
    currency: Currency,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    collateral: Option<Currency>,
    pillars: Vec<(f64, f64)>,
}

impl DiscountCurve {
    /// Pillars as `(T, D(0,T))`; `(0, 1)` is prepended when missing.
    pub fn new(currency: Currency, pillars: Vec<(f64, f64)>) -> Result<Self> {
        let curve = LogLinear::new(pillars, &format!("discount curve {currency}"))?;
        Ok(Self { currency, curve })
    }

    /// Flat continuously-compounded collateral rate on the nodes of `ts`.
    pub fn flat(currency: Currency, rate: f64, ts: &TenorStructure) -> Result<Self> {
        Self::new(
            currency,
            ts.nodes().iter().map(|&t| (t, (-rate * t).exp())).collect(),
        )
    }

    pub fn currency(&self) -> &Currency {
        &self.currency
    }

    /// `D(0,T)`, exact at pillars and log-linear in between.
    pub fn discount(&self, t: f64) -> Result<f64> {
        self.curve.value(t)
    }

    pub fn pillars(&self) -> Vec<(f64, f64)> {
        self.curve.pillars()
    }

    pub fn last_pillar(&self) -> f64 {
        self.curve.last_time()
    }
}

impl TryFrom<CurveRecord> for DiscountCurve {
    type Error = Error;
    fn try_from(r: CurveRecord) -> Result<Self> {
        Self::new(r.currency, r.pillars)
    }
}

impl From<DiscountCurve> for CurveRecord {
    fn from(c: DiscountCurve) -> Self {
        Self {
            pillars: c.pillars(),
            currency: c.currency,
            collateral: None,
        }
    }
}

/// Funding spread curve `Y^{(i,j)}(0,T) = Ỹ^{(i,j)}(0,T) / D^{(i)}(0,T)`:
/// the ratio of the currency-`i` bond collateralized in `j` to the one
/// collateralized in `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveRecord", into = "CurveRecord")]
pub struct SpreadCurve {
    currency: Currency,
    collateral: Currency,
    curve: LogLinear,
    identity: bool,
}

impl SpreadCurve {
    pub fn new(currency: Currency, collateral: Currency, pillars: Vec<(f64, f64)>) -> Result<Self> {
        let curve = LogLinear::new(
            pillars,
            &format!("spread curve {currency}/{collateral}"),
        )?;
        if currency == collateral {
            if curve.values.iter().any(|&v| v != 1.0) {
                return Err(Error::InvalidInput(format!(
                    "spread curve {currency}/{collateral}: same-currency spread must be identically 1"
                )));
            }
            return Ok(Self::identity(currency));
        }
        Ok(Self {
            currency,
            collateral,
            curve,
            identity: false,
        })
    }

    /// `Y^{(i,i)} ≡ 1`.
    pub fn identity(currency: Currency) -> Self {
        Self {
            collateral: currency.clone(),
            currency,
            curve: LogLinear::new(vec![(0.0, 1.0)], "identity").expect("valid anchor"),
            identity: true,
        }
    }

    /// Flat continuously-compounded funding spread on the nodes of `ts`.
    pub fn flat(
        currency: Currency,
        collateral: Currency,
        spread: f64,
        ts: &TenorStructure,
    ) -> Result<Self> {
        Self::new(
            currency,
            collateral,
            ts.nodes().iter().map(|&t| (t, (-spread * t).exp())).collect(),
        )
    }

    /// The currency of the bond.
    pub fn currency(&self) -> &Currency {
        &self.currency
    }

    /// The collateral currency.
    pub fn collateral(&self) -> &Currency {
        &self.collateral
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    /// `Y^{(i,j)}(0,T)`.
    pub fn value(&self, t: f64) -> Result<f64> {
        if self.identity {
            if t < 0.0 || !t.is_finite() {
                return Err(Error::Domain(format!("negative or non-finite time {t}")));
            }
            return Ok(1.0);
        }
        self.curve.value(t)
    }

    pub fn pillars(&self) -> Vec<(f64, f64)> {
        self.curve.pillars()
    }
}

impl TryFrom<CurveRecord> for SpreadCurve {
    type Error = Error;
    fn try_from(r: CurveRecord) -> Result<Self> {
        let collateral = r
            .collateral
            .ok_or_else(|| Error::InvalidInput("spread curve without collateral".into()))?;
        Self::new(r.currency, collateral, r.pillars)
    }
}

impl From<SpreadCurve> for CurveRecord {
    fn from(c: SpreadCurve) -> Self {
        Self {
            pillars: c.pillars(),
            currency: c.currency,
            collateral: Some(c.collateral),
        }
    }
}

/// `c_m(0) = -ln(D(0,T_{m+1}) / D(0,T_m)) / delta_m`.
pub fn forward_collateral_rate(curve: &DiscountCurve, ts: &TenorStructure, m: usize) -> Result<f64> {
    let delta = ts.accrual(m)?;
    let d0 = curve.discount(ts.node(m))?;
    let d1 = curve.discount(ts.node(m + 1))?;
    Ok(-(d1 / d0).ln() / delta)
}

/// `y_m^{(i,j)}(0) = -ln(Y(0,T_{m+1}) / Y(0,T_m)) / delta_m`; zero for `i = j`.
pub fn forward_funding_spread(curve: &SpreadCurve, ts: &TenorStructure, m: usize) -> Result<f64> {
    let delta = ts.accrual(m)?;
    if curve.is_identity() {
        return Ok(0.0);
    }
    let y0 = curve.value(ts.node(m))?;
    let y1 = curve.value(ts.node(m + 1))?;
    Ok(-(y1 / y0).ln() / delta)
}

/// Forward LIBOR-OIS spreads `B(0; T_{n-1}, T_n)` for `n = 1..=N*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiborOisSpreads {
    pub currency: Currency,
    /// Entry `n - 1` holds the spread of period `[T_{n-1}, T_n]`.
    pub values: Vec<f64>,
}

impl LiborOisSpreads {
    /// Spread of the period ending at node `n` (`1 <= n <= N*`).
    pub fn period(&self, n: usize) -> Result<f64> {
        n.checked_sub(1)
            .and_then(|k| self.values.get(k))
            .copied()
            .ok_or_else(|| Error::Domain(format!("no LIBOR-OIS period ending at node {n}")))
    }
}

/// Same-currency collateralized equity forwards `S(0, T_n)` for `n = 1..=N*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquityForwards {
    pub currency: Currency,
    /// Entry `n - 1` holds the forward for maturity `T_n`.
    pub forwards: Vec<f64>,
}

impl EquityForwards {
    pub fn forward(&self, n: usize) -> Result<f64> {
        n.checked_sub(1)
            .and_then(|k| self.forwards.get(k))
            .copied()
            .ok_or_else(|| Error::Config(format!("no equity forward pillar at node {n}")))
    }
}

/// Spot FX quote: `rate` units of `domestic` buy one unit of `foreign`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpotFx {
    pub domestic: Currency,
    pub foreign: Currency,
    pub rate: f64,
}

/// All time-0 inputs of the model on one tenor grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveSetRecord", into = "CurveSetRecord")]
pub struct CurveSet {
    tenor: TenorStructure,
    discount: BTreeMap<Currency, DiscountCurve>,
    spreads: BTreeMap<(Currency, Currency), SpreadCurve>,
    libor_ois: BTreeMap<Currency, LiborOisSpreads>,
    equity: BTreeMap<Currency, EquityForwards>,
    spot_fx: Vec<SpotFx>,
}

#[derive(Serialize, Deserialize)]
struct CurveSetRecord {
    tenor: TenorStructure,
    discount: Vec<DiscountCurve>,
    #[serde(default)]
    spreads: Vec<SpreadCurve>,
    #[serde(default)]
    libor_ois: Vec<LiborOisSpreads>,
    #[serde(default)]
    equity: Vec<EquityForwards>,
    #[serde(default)]
    spot_fx: Vec<SpotFx>,
}

impl CurveSet {
    pub fn new(tenor: TenorStructure) -> Self {
        Self {
            tenor,
            discount: BTreeMap::new(),
            spreads: BTreeMap::new(),
            libor_ois: BTreeMap::new(),
            equity: BTreeMap::new(),
            spot_fx: Vec::new(),
        }
    }

    pub fn tenor(&self) -> &TenorStructure {
        &self.tenor
    }

    /// Registers a discount curve; it must cover the whole grid.
    pub fn insert_discount(&mut self, curve: DiscountCurve) -> Result<()> {
        if curve.last_pillar() + NODE_TOLERANCE < self.tenor.horizon() {
            return Err(Error::Config(format!(
                "discount curve {} ends at {} before grid horizon {}",
                curve.currency(),
                curve.last_pillar(),
                self.tenor.horizon()
            )));
        }
        self.discount.insert(curve.currency().clone(), curve);
        Ok(())
    }

    pub fn insert_spread(&mut self, curve: SpreadCurve) -> Result<()> {
        if curve.is_identity() {
            return Ok(());
        }
        if curve.curve.last_time() + NODE_TOLERANCE < self.tenor.horizon() {
            return Err(Error::Config(format!(
                "spread curve {}/{} ends before grid horizon {}",
                curve.currency(),
                curve.collateral(),
                self.tenor.horizon()
            )));
        }
        self.spreads.insert(
            (curve.currency().clone(), curve.collateral().clone()),
            curve,
        );
        Ok(())
    }

    pub fn insert_libor_ois(&mut self, spreads: LiborOisSpreads) -> Result<()> {
        if spreads.values.len() != self.tenor.n_buckets() {
            return Err(Error::Config(format!(
                "LIBOR-OIS spreads for {}: expected {} periods, got {}",
                spreads.currency,
                self.tenor.n_buckets(),
                spreads.values.len()
            )));
        }
        if let Some(v) = spreads.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "LIBOR-OIS spread for {} is not finite: {v}",
                spreads.currency
            )));
        }
        self.libor_ois.insert(spreads.currency.clone(), spreads);
        Ok(())
    }

    pub fn insert_equity(&mut self, fwd: EquityForwards) -> Result<()> {
        if fwd.forwards.len() != self.tenor.n_buckets() {
            return Err(Error::Config(format!(
                "equity forwards for {}: expected {} pillars, got {}",
                fwd.currency,
                self.tenor.n_buckets(),
                fwd.forwards.len()
            )));
        }
        if let Some(v) = fwd.forwards.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "equity forward for {} must be positive, got {v}",
                fwd.currency
            )));
        }
        self.equity.insert(fwd.currency.clone(), fwd);
        Ok(())
    }

    /// Records `f_x^{(domestic,foreign)}(0) = rate`.
    pub fn insert_spot_fx(&mut self, domestic: Currency, foreign: Currency, rate: f64) -> Result<()> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidInput(format!(
                "spot FX {domestic}/{foreign} must be positive, got {rate}"
            )));
        }
        if domestic == foreign {
            return Err(Error::InvalidInput(format!(
                "spot FX quoted against itself: {domestic}"
            )));
        }
        self.spot_fx
            .retain(|s| !(s.domestic == domestic && s.foreign == foreign)
                && !(s.domestic == foreign && s.foreign == domestic));
        self.spot_fx.push(SpotFx {
            domestic,
            foreign,
            rate,
        });
        Ok(())
    }

    /// Currencies with a discount curve, in sorted order.
    pub fn currencies(&self) -> impl Iterator<Item = &Currency> {
        self.discount.keys()
    }

    pub fn discount_curve(&self, ccy: &Currency) -> Result<&DiscountCurve> {
        self.discount
            .get(ccy)
            .ok_or_else(|| Error::Config(format!("no discount curve for {ccy}")))
    }

    /// `Y^{(currency, collateral)}`; the identity when both agree.
    pub fn spread_curve(&self, currency: &Currency, collateral: &Currency) -> Result<SpreadCurve> {
        if currency == collateral {
            self.discount_curve(currency)?;
            return Ok(SpreadCurve::identity(currency.clone()));
        }
        self.spreads
            .get(&(currency.clone(), collateral.clone()))
            .cloned()
            .ok_or_else(|| {
                Error::Config(format!("no funding spread curve for {currency}/{collateral}"))
            })
    }

    pub fn spread_curves(&self) -> impl Iterator<Item = &SpreadCurve> {
        self.spreads.values()
    }

    pub fn libor_ois(&self, ccy: &Currency) -> Option<&LiborOisSpreads> {
        self.libor_ois.get(ccy)
    }

    pub fn equity(&self, ccy: &Currency) -> Option<&EquityForwards> {
        self.equity.get(ccy)
    }

    pub fn spot_quotes(&self) -> &[SpotFx] {
        &self.spot_fx
    }

    fn direct_spot(&self, i: &Currency, j: &Currency) -> Option<f64> {
        self.spot_fx.iter().find_map(|s| {
            if &s.domestic == i && &s.foreign == j {
                Some(s.rate)
            } else if &s.domestic == j && &s.foreign == i {
                Some(1.0 / s.rate)
            } else {
                None
            }
        })
    }

    /// `f_x^{(i,j)}(0)`: units of `i` per unit of `j`. Resolved from a direct
    /// quote, its inverse, or a cross through one intermediate currency.
    pub fn spot_fx(&self, i: &Currency, j: &Currency) -> Result<f64> {
        if i == j {
            return Ok(1.0);
        }
        if let Some(s) = self.direct_spot(i, j) {
            return Ok(s);
        }
        for k in self.discount.keys() {
            if let (Some(a), Some(b)) = (self.direct_spot(i, k), self.direct_spot(k, j)) {
                return Ok(a * b);
            }
        }
        Err(Error::Config(format!("no spot FX for {i}/{j}")))
    }

    /// `Ỹ^{(m,k)}(0,T) = D^{(m)}(0,T) Y^{(m,k)}(0,T)`.
    pub fn collateralized_discount(&self, m: &Currency, k: &Currency, t: f64) -> Result<f64> {
        let d = self.discount_curve(m)?.discount(t)?;
        let y = self.spread_curve(m, k)?.value(t)?;
        Ok(d * y)
    }
}

impl TryFrom<CurveSetRecord> for CurveSet {
    type Error = Error;
    fn try_from(r: CurveSetRecord) -> Result<Self> {
        let mut set = CurveSet::new(r.tenor);
        for c in r.discount {
            set.insert_discount(c)?;
        }
        for c in r.spreads {
            set.insert_spread(c)?;
        }
        for c in r.libor_ois {
            set.insert_libor_ois(c)?;
        }
        for c in r.equity {
            set.insert_equity(c)?;
        }
        for s in r.spot_fx {
            set.insert_spot_fx(s.domestic, s.foreign, s.rate)?;
        }
        Ok(set)
    }
}

impl From<CurveSet> for CurveSetRecord {
    fn from(s: CurveSet) -> Self {
        Self {
            tenor: s.tenor,
            discount: s.discount.into_values().collect(),
            spreads: s.spreads.into_values().collect(),
            libor_ois: s.libor_ois.into_values().collect(),
            equity: s.equity.into_values().collect(),
            spot_fx: s.spot_fx,
        }
    }
}
