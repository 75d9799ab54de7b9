//! The compiled multi-currency model: per-interval drift tables under the
//! base-currency measure, the path state and its evolution across the grid.
//!
//! Currencies are addressed by [`CcyId`] (the base currency is always id 0)
//! and funding-spread pairs by [`PairId`]. Within the interval
//! `(T_{q-1}, T_q]` every drift is constant because the loadings are
//! deterministic, so the scheme below is exact in distribution at any number
//! of sub-steps.

use crate::curves::{forward_collateral_rate, forward_funding_spread, CurveSet, SpreadCurve};
use crate::curves::Currency;
use crate::dynamics::{
    collateral_drift_at, lognormal_drift_at, quanto_adjustment, spread_drift_at, DriftHook,
};
use crate::error::{Error, Result};
use crate::tenor::{TenorStructure, NODE_TOLERANCE};
use crate::vols::{dot, Loadings, VolatilitySpec};

/// Index of a modeled currency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CcyId(pub(crate) usize);

/// Index of a simulated funding-spread pair `(currency, collateral)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairId(pub(crate) usize);

impl CcyId {
    pub const BASE: CcyId = CcyId(0);

    pub fn index(self) -> usize {
        self.0
    }
}

impl PairId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
struct Pair {
    currency: CcyId,
    collateral: Currency,
}

/// One simulated scenario at time `t`.
///
/// Bucket quantities are stored `N*` per currency (or pair). Entry `n - 1`
/// of the LIBOR-OIS and equity blocks belongs to the period / maturity ending
/// at `T_n`. Accounts are kept in log form.
#[derive(Debug, Clone, PartialEq)]
pub struct PathState {
    t: f64,
    q: usize,
    n: usize,
    c: Vec<f64>,
    b: Vec<f64>,
    s: Vec<f64>,
    y: Vec<f64>,
    fx: Vec<f64>,
    log_c: Vec<f64>,
    log_cp: Vec<f64>,
    has_b: Vec<bool>,
    has_s: Vec<bool>,
}

impl PathState {
    pub fn time(&self) -> f64 {
        self.t
    }

    /// `q(t)`.
    pub fn q(&self) -> usize {
        self.q
    }

    fn check_bucket(&self, m: usize) -> Result<()> {
        if m >= self.n {
            return Err(Error::Domain(format!("bucket {m} out of range 0..{}", self.n)));
        }
        Ok(())
    }

    fn check_period(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.n {
            return Err(Error::Domain(format!("period {n} out of range 1..={}", self.n)));
        }
        Ok(())
    }

    /// `c_m^{(ccy)}(t)`; frozen once `t >= T_m`.
    pub fn collateral_rate(&self, ccy: CcyId, m: usize) -> Result<f64> {
        self.check_bucket(m)?;
        Ok(self.c[ccy.0 * self.n + m])
    }

    /// `B^{(ccy)}(t; T_{n-1}, T_n)`; frozen once `t >= T_{n-1}`.
    pub fn libor_ois(&self, ccy: CcyId, n: usize) -> Result<f64> {
        self.check_period(n)?;
        if !self.has_b[ccy.0] {
            return Err(Error::Config(format!(
                "LIBOR-OIS spreads are not simulated for currency #{}",
                ccy.0
            )));
        }
        Ok(self.b[ccy.0 * self.n + n - 1])
    }

    /// `S^{(ccy)}(t, T_n)`; constant after `T_n`.
    pub fn equity_forward(&self, ccy: CcyId, n: usize) -> Result<f64> {
        self.check_period(n)?;
        if !self.has_s[ccy.0] {
            return Err(Error::Config(format!(
                "equity forwards are not simulated for currency #{}",
                ccy.0
            )));
        }
        Ok(self.s[ccy.0 * self.n + n - 1])
    }

    /// `y_m^{(pair)}(t)`.
    pub fn funding_spread(&self, pair: PairId, m: usize) -> Result<f64> {
        self.check_bucket(m)?;
        Ok(self.y[pair.0 * self.n + m])
    }

    /// `f_x^{(base, ccy)}(t)`.
    pub fn fx(&self, ccy: CcyId) -> f64 {
        self.fx[ccy.0]
    }

    /// `f_x^{(i,j)}(t)`, units of `i` per unit of `j`.
    pub fn fx_pair(&self, i: CcyId, j: CcyId) -> f64 {
        if i == j {
            1.0
        } else {
            self.fx[j.0] / self.fx[i.0]
        }
    }

    /// `C^{(ccy)}(t)`.
    pub fn collateral_account(&self, ccy: CcyId) -> f64 {
        self.log_c[ccy.0].exp()
    }

    /// `C^{(m,k)}(t)` of a simulated pair.
    pub fn pair_account(&self, pair: PairId) -> f64 {
        self.log_cp[pair.0].exp()
    }

    pub(crate) fn log_collateral_account(&self, ccy: CcyId) -> f64 {
        self.log_c[ccy.0]
    }

    pub(crate) fn log_pair_account(&self, pair: PairId) -> f64 {
        self.log_cp[pair.0]
    }
}

/// Compiled model under `Q_B^{(base)}`.
#[derive(Debug, Clone)]
pub struct Model {
    curves: CurveSet,
    vols: VolatilitySpec,
    dim: usize,
    currencies: Vec<Currency>,
    pairs: Vec<Pair>,
    /// Pair `(base, ccy)` for every foreign currency.
    base_pairs: Vec<Option<PairId>>,
    sigma_c: Vec<Loadings>,
    sigma_b: Vec<Loadings>,
    sigma_s: Vec<Loadings>,
    sigma_y: Vec<Loadings>,
    sigma_x: Vec<Vec<f64>>,
    // Drift tables indexed [entity][(q - 1) * N + row]; lognormal entries
    // already include the -|sigma|^2/2 correction.
    mu_c: Vec<Vec<f64>>,
    mu_b: Vec<Vec<f64>>,
    mu_s: Vec<Vec<f64>>,
    mu_y: Vec<Vec<f64>>,
    fx_convexity: Vec<f64>,
    initial: PathState,
    hook: DriftHook,
}

impl Model {
    /// Compiles the model for every currency carrying a discount curve.
    ///
    /// Each foreign currency `j` needs a spot quote against `base` and the
    /// funding spread curve `Y^{(base,j)}`, which drives the spot FX drift.
    /// Every spread curve `(m,k)` with `m` modeled is simulated.
    pub fn new(curves: &CurveSet, vols: &VolatilitySpec, base: &Currency) -> Result<Self> {
        Self::with_drift_hook(curves, vols, base, DriftHook::None)
    }

    #[doc(hidden)]
    pub fn with_drift_hook(
        curves: &CurveSet,
        vols: &VolatilitySpec,
        base: &Currency,
        hook: DriftHook,
    ) -> Result<Self> {
        let ts = curves.tenor().clone();
        let n = ts.n_buckets();
        if vols.n_buckets() != n {
            return Err(Error::Config(format!(
                "volatility spec has {} buckets, grid has {n}",
                vols.n_buckets()
            )));
        }
        curves.discount_curve(base)?;
        let mut currencies = vec![base.clone()];
        currencies.extend(curves.currencies().filter(|c| *c != base).cloned());
        let dim = vols.dim();

        let mut pairs = Vec::new();
        for sc in curves.spread_curves() {
            if let Some(id) = currencies.iter().position(|c| c == sc.currency()) {
                pairs.push(Pair {
                    currency: CcyId(id),
                    collateral: sc.collateral().clone(),
                });
            }
        }
        let mut base_pairs = vec![None; currencies.len()];
        for (a, ccy) in currencies.iter().enumerate().skip(1) {
            let p = pairs
                .iter()
                .position(|p| p.currency == CcyId::BASE && &p.collateral == ccy)
                .ok_or_else(|| {
                    Error::Config(format!(
                        "no funding spread curve {base}/{ccy} to drive spot FX {base}/{ccy}"
                    ))
                })?;
            base_pairs[a] = Some(PairId(p));
        }

        let shifts: Vec<Vec<f64>> = currencies
            .iter()
            .map(|c| quanto_adjustment(vols, base, c))
            .collect::<Result<_>>()?;
        let sigma_x: Vec<Vec<f64>> = shifts.iter().map(|s| s.iter().map(|v| -v).collect()).collect();
        let sigma_c: Vec<Loadings> = currencies.iter().map(|c| vols.collateral(c).clone()).collect();
        let sigma_b: Vec<Loadings> = currencies.iter().map(|c| vols.libor_ois(c).clone()).collect();
        let sigma_s: Vec<Loadings> = currencies.iter().map(|c| vols.equity(c).clone()).collect();
        let sigma_y: Vec<Loadings> = pairs
            .iter()
            .map(|p| vols.spread(&currencies[p.currency.0], &p.collateral).clone())
            .collect();

        let sign = hook.convexity_sign();
        let mut mu_c = Vec::new();
        let mut mu_b = Vec::new();
        let mut mu_s = Vec::new();
        for a in 0..currencies.len() {
            let (sc, sb, ss, shift) = (&sigma_c[a], &sigma_b[a], &sigma_s[a], &shifts[a]);
            let mut tc = vec![0.0; n * n];
            let mut tb = vec![0.0; n * n];
            let mut ts_ = vec![0.0; n * n];
            for q in 1..=n {
                for k in q..n {
                    tc[(q - 1) * n + k] = collateral_drift_at(&ts, sc, k, q, shift, sign);
                }
                // B of period ending at T_p (row p-1) diffuses while q <= p-1.
                for p in (q + 1)..=n {
                    let row = sb.row(p - 1);
                    tb[(q - 1) * n + p - 1] =
                        lognormal_drift_at(&ts, sc, row, q, p, shift) - 0.5 * dot(row, row);
                }
                // S(., T_p) diffuses while q <= p.
                for p in q..=n {
                    let row = ss.row(p - 1);
                    ts_[(q - 1) * n + p - 1] =
                        lognormal_drift_at(&ts, sc, row, q, p, shift) - 0.5 * dot(row, row);
                }
            }
            mu_c.push(tc);
            mu_b.push(tb);
            mu_s.push(ts_);
        }
        let mut mu_y = Vec::new();
        for (p, pair) in pairs.iter().enumerate() {
            let a = pair.currency.0;
            let mut ty = vec![0.0; n * n];
            for q in 1..=n {
                for k in q..n {
                    ty[(q - 1) * n + k] = spread_drift_at(&ts, &sigma_c[a], &sigma_y[p], k, q, &shifts[a]);
                }
            }
            mu_y.push(ty);
        }
        let fx_convexity = sigma_x.iter().map(|s| -0.5 * dot(s, s)).collect();

        let mut c0 = Vec::with_capacity(currencies.len() * n);
        let mut b0 = vec![0.0; currencies.len() * n];
        let mut s0 = vec![0.0; currencies.len() * n];
        let mut has_b = vec![false; currencies.len()];
        let mut has_s = vec![false; currencies.len()];
        let mut fx0 = Vec::with_capacity(currencies.len());
        for (a, ccy) in currencies.iter().enumerate() {
            let d = curves.discount_curve(ccy)?;
            for m in 0..n {
                c0.push(forward_collateral_rate(d, &ts, m)?);
            }
            if let Some(l) = curves.libor_ois(ccy) {
                b0[a * n..(a + 1) * n].copy_from_slice(&l.values);
                has_b[a] = true;
            }
            if let Some(e) = curves.equity(ccy) {
                s0[a * n..(a + 1) * n].copy_from_slice(&e.forwards);
                has_s[a] = true;
            }
            fx0.push(curves.spot_fx(base, ccy)?);
        }
        let mut y0 = Vec::with_capacity(pairs.len() * n);
        for pair in &pairs {
            let curve = curves.spread_curve(&currencies[pair.currency.0], &pair.collateral)?;
            for m in 0..n {
                y0.push(forward_funding_spread(&curve, &ts, m)?);
            }
        }
        let initial = PathState {
            t: 0.0,
            q: 0,
            n,
            c: c0,
            b: b0,
            s: s0,
            y: y0,
            fx: fx0,
            log_c: vec![0.0; currencies.len()],
            log_cp: vec![0.0; pairs.len()],
            has_b,
            has_s,
        };

        Ok(Self {
            curves: curves.clone(),
            vols: vols.clone(),
            dim,
            currencies,
            pairs,
            base_pairs,
            sigma_c,
            sigma_b,
            sigma_s,
            sigma_y,
            sigma_x,
            mu_c,
            mu_b,
            mu_s,
            mu_y,
            fx_convexity,
            initial,
            hook,
        })
    }

    pub fn tenor(&self) -> &TenorStructure {
        self.curves.tenor()
    }

    pub fn curves(&self) -> &CurveSet {
        &self.curves
    }

    pub fn vols(&self) -> &VolatilitySpec {
        &self.vols
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hook(&self) -> DriftHook {
        self.hook
    }

    pub fn base(&self) -> &Currency {
        &self.currencies[0]
    }

    pub fn currencies(&self) -> &[Currency] {
        &self.currencies
    }

    pub fn currency(&self, id: CcyId) -> &Currency {
        &self.currencies[id.0]
    }

    pub fn ccy(&self, code: &Currency) -> Result<CcyId> {
        self.currencies
            .iter()
            .position(|c| c == code)
            .map(CcyId)
            .ok_or_else(|| Error::Config(format!("currency {code} is not modeled")))
    }

    /// Simulated pair `(currency, collateral)`.
    pub fn pair(&self, currency: &Currency, collateral: &Currency) -> Result<PairId> {
        self.pairs
            .iter()
            .position(|p| &self.currencies[p.currency.0] == currency && &p.collateral == collateral)
            .map(PairId)
            .ok_or_else(|| {
                Error::Config(format!("funding spread {currency}/{collateral} is not simulated"))
            })
    }

    pub fn pairs(&self) -> impl Iterator<Item = (PairId, &Currency, &Currency)> {
        self.pairs
            .iter()
            .enumerate()
            .map(|(k, p)| (PairId(k), &self.currencies[p.currency.0], &p.collateral))
    }

    pub fn pair_currency(&self, pair: PairId) -> CcyId {
        self.pairs[pair.0].currency
    }

    /// Pair `(base, ccy)` used for spot FX of a foreign currency.
    pub fn base_pair(&self, ccy: CcyId) -> Option<PairId> {
        self.base_pairs[ccy.0]
    }

    pub fn has_libor_ois(&self, ccy: CcyId) -> bool {
        self.initial.has_b[ccy.0]
    }

    pub fn has_equity(&self, ccy: CcyId) -> bool {
        self.initial.has_s[ccy.0]
    }

    /// The deterministic state at `t = 0`.
    pub fn initial_state(&self) -> &PathState {
        &self.initial
    }

    /// Advances `state` by `dt` with factor increment `dw ~ N(0, dt I)`.
    ///
    /// The step must stay inside one grid interval; an end point within
    /// [`NODE_TOLERANCE`] of the next node lands exactly on it, at which point
    /// the discrete accounts accrue the period just completed.
    pub fn evolve_step(&self, state: &mut PathState, dt: f64, dw: &[f64]) -> Result<()> {
        let ts = self.tenor();
        let n = ts.n_buckets();
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Schedule(format!("step size must be positive, got {dt}")));
        }
        if dw.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "factor increment has dimension {}, expected {}",
                dw.len(),
                self.dim
            )));
        }
        let q = if state.t == ts.node(state.q) { state.q + 1 } else { state.q };
        if q > n {
            return Err(Error::Schedule(format!(
                "cannot step beyond the grid horizon {}",
                ts.horizon()
            )));
        }
        let end = ts.node(q);
        let mut t_next = state.t + dt;
        if t_next > end + NODE_TOLERANCE {
            return Err(Error::Schedule(format!(
                "step from {} to {t_next} crosses node T_{q} = {end}",
                state.t
            )));
        }
        let crossing = (t_next - end).abs() <= NODE_TOLERANCE;
        if crossing {
            t_next = end;
        }
        let row = (q - 1) * n;
        let prev = q - 1;

        for a in 0..self.currencies.len() {
            let base_idx = a * n;
            let (sc, mc) = (&self.sigma_c[a], &self.mu_c[a]);
            for k in q..n {
                state.c[base_idx + k] += mc[row + k] * dt + dot(sc.row(k), dw);
            }
            if state.has_b[a] {
                let (sb, mb) = (&self.sigma_b[a], &self.mu_b[a]);
                for p in (q + 1)..=n {
                    state.b[base_idx + p - 1] *= (mb[row + p - 1] * dt + dot(sb.row(p - 1), dw)).exp();
                }
            }
            if state.has_s[a] {
                let (ss, ms) = (&self.sigma_s[a], &self.mu_s[a]);
                for p in q..=n {
                    state.s[base_idx + p - 1] *= (ms[row + p - 1] * dt + dot(ss.row(p - 1), dw)).exp();
                }
            }
            if let Some(bp) = self.base_pairs[a] {
                let carry = state.c[prev] - state.c[base_idx + prev] + state.y[bp.0 * n + prev];
                let sx = &self.sigma_x[a];
                state.fx[a] *= ((carry + self.fx_convexity[a]) * dt + dot(sx, dw)).exp();
            }
        }
        for p in 0..self.pairs.len() {
            let (sy, my) = (&self.sigma_y[p], &self.mu_y[p]);
            for k in q..n {
                state.y[p * n + k] += my[row + k] * dt + dot(sy.row(k), dw);
            }
        }

        state.t = t_next;
        state.q = q;
        if crossing {
            let delta = ts.accruals()[prev];
            for a in 0..self.currencies.len() {
                state.log_c[a] += delta * state.c[a * n + prev];
            }
            for (p, pair) in self.pairs.iter().enumerate() {
                let a = pair.currency.0;
                state.log_cp[p] += delta * (state.c[a * n + prev] + state.y[p * n + prev]);
            }
        }
        Ok(())
    }
}

/// `f_x(T_n) Ỹ^{(j,k)}(T_n,T_{n+1}) / Ỹ^{(i,k)}(T_n,T_{n+1})` with the
/// one-period bonds `Ỹ^{(m,k)} = exp(-delta_n (c_n^{(m)} + y_n^{(m,k)}))`.
pub fn rollover_forward(spot: f64, delta: f64, c_i: f64, y_ik: f64, c_j: f64, y_jk: f64) -> f64 {
    spot * (-delta * (c_j + y_jk - c_i - y_ik)).exp()
}

/// Rolling forward FX `f_x^{(i,j)}(T_n, T_{n+1}; (k))` read off a state
/// sitting exactly on the node `T_n`, `n < N*`.
pub fn rollover_fx_forward(
    model: &Model,
    state: &PathState,
    i: CcyId,
    j: CcyId,
    collateral: &Currency,
) -> Result<f64> {
    let ts = model.tenor();
    let n = state.q;
    if state.t != ts.node(n) {
        return Err(Error::Schedule(format!(
            "rollover requires a state on a grid node, t = {}",
            state.t
        )));
    }
    if n >= ts.n_buckets() {
        return Err(Error::Domain(format!("no period after the final node T_{n}")));
    }
    if i == j {
        return Ok(1.0);
    }
    let spread = |m: CcyId| -> Result<f64> {
        if model.currency(m) == collateral {
            Ok(0.0)
        } else {
            state.funding_spread(model.pair(model.currency(m), collateral)?, n)
        }
    };
    Ok(rollover_forward(
        state.fx_pair(i, j),
        ts.accruals()[n],
        state.collateral_rate(i, n)?,
        spread(i)?,
        state.collateral_rate(j, n)?,
        spread(j)?,
    ))
}

/// Time-0 curve and loadings of the reverse spread `y^{(collateral, currency)}`
/// consistent with a simulated `y^{(currency, collateral)}`.
///
/// The loadings are `-sigma_y^{(currency, collateral)}` and the initial
/// forwards are chosen so that once both are registered,
/// `y_m^{(collateral, currency)}(T_m) = -y_m^{(currency, collateral)}(T_m)` on
/// every path. The quanto terms of the two drifts combine into
/// `sigma_X^{(collateral, currency)}`, so the result does not depend on
/// `base` beyond the choice of measure it is simulated under.
pub fn consistent_reverse_spread(
    curves: &CurveSet,
    vols: &VolatilitySpec,
    base: &Currency,
    currency: &Currency,
    collateral: &Currency,
) -> Result<(SpreadCurve, Loadings)> {
    if currency == collateral {
        return Err(Error::InvalidInput(format!(
            "reverse spread needs two currencies, got {currency} twice"
        )));
    }
    let ts = curves.tenor();
    let n = ts.n_buckets();
    let known = curves.spread_curve(currency, collateral)?;
    let sy = vols.spread(currency, collateral).clone();
    let sy_rev = sy.negated();
    let sc = vols.collateral(currency);
    let sc_rev = vols.collateral(collateral);
    let shift = quanto_adjustment(vols, base, currency)?;
    let shift_rev = quanto_adjustment(vols, base, collateral)?;

    let mut pillars = vec![(0.0, 1.0)];
    let mut log_y = 0.0;
    for m in 0..n {
        let mut drift_total = 0.0;
        for q in 1..=m {
            let a = spread_drift_at(ts, sc, &sy, m, q, &shift);
            let b = spread_drift_at(ts, sc_rev, &sy_rev, m, q, &shift_rev);
            drift_total += ts.accruals()[q - 1] * (a + b);
        }
        let y_rev = -forward_funding_spread(&known, ts, m)? - drift_total;
        log_y -= ts.accruals()[m] * y_rev;
        pillars.push((ts.node(m + 1), log_y.exp()));
    }
    Ok((SpreadCurve::new(collateral.clone(), currency.clone(), pillars)?, sy_rev))
}

/// For every foreign currency `j`, fills in whichever of `Y^{(base,j)}` and
/// `Y^{(j,base)}` is missing with its consistent reverse and sets the
/// reverse loadings. Returns the pairs that were added.
///
/// Loadings already configured for the missing direction must be zero or
/// equal to the negated loadings of the known direction.
pub fn complete_reverse_spreads(
    curves: &mut CurveSet,
    vols: &mut VolatilitySpec,
    base: &Currency,
) -> Result<Vec<(Currency, Currency)>> {
    let foreign: Vec<Currency> = curves.currencies().filter(|c| *c != base).cloned().collect();
    let mut added = Vec::new();
    for j in foreign {
        let forward = curves.spread_curve(base, &j).is_ok();
        let backward = curves.spread_curve(&j, base).is_ok();
        let (known, missing) = match (forward, backward) {
            (true, false) => ((base.clone(), j.clone()), (j.clone(), base.clone())),
            (false, true) => ((j.clone(), base.clone()), (base.clone(), j.clone())),
            _ => continue,
        };
        let configured = vols.spread(&missing.0, &missing.1);
        let negated = vols.spread(&known.0, &known.1).negated();
        if !configured.is_zero() && *configured != negated {
            return Err(Error::Config(format!(
                "spread loadings {}/{} must be the negation of {}/{} when its curve is implied",
                missing.0, missing.1, known.0, known.1
            )));
        }
        let (curve, loadings) = consistent_reverse_spread(curves, vols, base, &known.0, &known.1)?;
        curves.insert_spread(curve)?;
        vols.set_spread(&missing.0, &missing.1, loadings)?;
        added.push(missing);
    }
    Ok(added)
}
