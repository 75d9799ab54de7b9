//! No-arbitrage drifts of the discretized HJM model under the discrete
//! collateral-account measure `Q_B^{(i)}` of a base currency `i`.
//!
//! Every drift depends on time only through `q(t)`: inside the interval
//! `(T_{q-1}, T_q]` the buckets `m >= q` are still diffusing and enter the
//! bracketed sums `sum_{m=q}^{n-1} delta_m sigma_m`.
//!
//! Quantities of a foreign currency `j` are expressed under the base measure by
//! adding the quanto shift `-sigma_X^{(i,j)}` to the bracketed sum multiplying
//! the quantity's own loading. Every function takes that shift explicitly; pass
//! a zero vector under the currency's own measure.

use crate::curves::Currency;
use crate::error::{Error, Result};
use crate::tenor::TenorStructure;
use crate::vols::{dot, Loadings, VolatilitySpec};

/// Test hook that perturbs the collateral-rate drift.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DriftHook {
    #[default]
    None,
    /// Flips the sign of the `delta_n |sigma_n|^2 / 2` term.
    FlipConvexity,
}

impl DriftHook {
    pub(crate) fn convexity_sign(self) -> f64 {
        match self {
            DriftHook::None => 1.0,
            DriftHook::FlipConvexity => -1.0,
        }
    }
}

/// `sum_{m=q}^{n-1} delta_m sigma_m` (empty when `n <= q`).
pub fn bucket_sum(ts: &TenorStructure, sigma: &Loadings, q: usize, n: usize) -> Vec<f64> {
    let mut acc = vec![0.0; sigma.dim()];
    for m in q..n {
        let delta = ts.accruals()[m];
        for (a, s) in acc.iter_mut().zip(sigma.row(m)) {
            *a += delta * s;
        }
    }
    acc
}

fn check_shift(shift: &[f64], dim: usize) -> Result<()> {
    if shift.len() != dim {
        return Err(Error::InvalidInput(format!(
            "quanto shift has dimension {}, expected {dim}",
            shift.len()
        )));
    }
    Ok(())
}

fn check_rate_bucket(ts: &TenorStructure, n: usize, t: f64) -> Result<usize> {
    if n >= ts.n_buckets() {
        return Err(Error::Domain(format!(
            "bucket {n} out of range 0..{}",
            ts.n_buckets()
        )));
    }
    let q = ts.q_index(t)?;
    if q > n {
        return Err(Error::Domain(format!(
            "bucket {n} is already fixed at t={t}"
        )));
    }
    Ok(q)
}

pub(crate) fn collateral_drift_at(
    ts: &TenorStructure,
    sigma: &Loadings,
    n: usize,
    q: usize,
    shift: &[f64],
    convexity_sign: f64,
) -> f64 {
    let sum = bucket_sum(ts, sigma, q, n);
    let row = sigma.row(n);
    let bracket: f64 = row.iter().zip(sum.iter().zip(shift)).map(|(s, (a, b))| s * (a + b)).sum();
    bracket + convexity_sign * 0.5 * ts.accruals()[n] * dot(row, row)
}

/// Drift of the collateral forward rate `c_n(t)`:
/// `sigma_n . (sum_{m=q(t)}^{n-1} delta_m sigma_m + shift) + delta_n |sigma_n|^2 / 2`.
pub fn drift_c(ts: &TenorStructure, sigma: &Loadings, n: usize, t: f64, shift: &[f64]) -> Result<f64> {
    check_shift(shift, sigma.dim())?;
    let q = check_rate_bucket(ts, n, t)?;
    Ok(collateral_drift_at(ts, sigma, n, q, shift, 1.0))
}

pub(crate) fn lognormal_drift_at(
    ts: &TenorStructure,
    sigma_c: &Loadings,
    own: &[f64],
    q: usize,
    n: usize,
    shift: &[f64],
) -> f64 {
    let sum = bucket_sum(ts, sigma_c, q, n);
    own.iter().zip(sum.iter().zip(shift)).map(|(s, (a, b))| s * (a + b)).sum()
}

/// Lognormal drift of the LIBOR-OIS forward spread `B(t; T_{n-1}, T_n)`:
/// `sigma_{B,n} . (sum_{m=q(t)}^{n-1} delta_m sigma_m + shift)` with the
/// collateral-rate loadings in the sum. Valid for `1 <= n <= N*`, `t <= T_{n-1}`.
pub fn drift_b(
    ts: &TenorStructure,
    sigma_c: &Loadings,
    sigma_b: &Loadings,
    n: usize,
    t: f64,
    shift: &[f64],
) -> Result<f64> {
    check_shift(shift, sigma_c.dim())?;
    if n == 0 || n > ts.n_buckets() {
        return Err(Error::Domain(format!(
            "LIBOR-OIS period {n} out of range 1..={}",
            ts.n_buckets()
        )));
    }
    let q = ts.q_index(t)?;
    if q > n - 1 {
        return Err(Error::Domain(format!(
            "LIBOR-OIS period ending at node {n} is already fixed at t={t}"
        )));
    }
    Ok(lognormal_drift_at(ts, sigma_c, sigma_b.row(n - 1), q, n, shift))
}

/// Lognormal drift of the equity forward `S(t, T_n)`; same structure as
/// [`drift_b`] with the equity loading. Valid for `1 <= n <= N*`, `t <= T_n`.
pub fn drift_s(
    ts: &TenorStructure,
    sigma_c: &Loadings,
    sigma_s: &Loadings,
    n: usize,
    t: f64,
    shift: &[f64],
) -> Result<f64> {
    check_shift(shift, sigma_c.dim())?;
    if n == 0 || n > ts.n_buckets() {
        return Err(Error::Domain(format!(
            "equity forward maturity {n} out of range 1..={}",
            ts.n_buckets()
        )));
    }
    let q = ts.q_index(t)?;
    if q > n {
        return Err(Error::Domain(format!(
            "equity forward for node {n} has expired at t={t}"
        )));
    }
    Ok(lognormal_drift_at(ts, sigma_c, sigma_s.row(n - 1), q, n, shift))
}

pub(crate) fn spread_drift_at(
    ts: &TenorStructure,
    sigma_c: &Loadings,
    sigma_y: &Loadings,
    n: usize,
    q: usize,
    shift: &[f64],
) -> f64 {
    let sum_c = bucket_sum(ts, sigma_c, q, n);
    let sum_y = bucket_sum(ts, sigma_y, q, n);
    let sy = sigma_y.row(n);
    let sc = sigma_c.row(n);
    let delta = ts.accruals()[n];
    let first: f64 = sy
        .iter()
        .enumerate()
        .map(|(k, s)| s * (sum_y[k] + sum_c[k] + shift[k]))
        .sum();
    first + dot(sc, &sum_y) + 0.5 * delta * dot(sy, sy) + delta * dot(sy, sc)
}

/// Drift of the forward funding spread `y_n^{(i,j)}(t)`:
///
/// `sigma_{y,n} . (sum delta_m [sigma_{y,m} + sigma_m] + shift)
///  + sigma_n . (sum delta_m sigma_{y,m})
///  + delta_n |sigma_{y,n}|^2 / 2 + delta_n sigma_{y,n} . sigma_n`
///
/// where `sigma` are the collateral loadings of currency `i`.
pub fn drift_y(
    ts: &TenorStructure,
    sigma_c: &Loadings,
    sigma_y: &Loadings,
    n: usize,
    t: f64,
    shift: &[f64],
) -> Result<f64> {
    check_shift(shift, sigma_c.dim())?;
    let q = check_rate_bucket(ts, n, t)?;
    Ok(spread_drift_at(ts, sigma_c, sigma_y, n, q, shift))
}

/// Shift added to the bracketed bucket sums of currency-`foreign`
/// quantities when they are simulated under the measure of `base`:
/// `-sigma_X^{(base, foreign)}`. Zero when the currencies agree.
pub fn quanto_adjustment(vols: &VolatilitySpec, base: &Currency, foreign: &Currency) -> Result<Vec<f64>> {
    Ok(vols.fx(base, foreign)?.into_iter().map(|v| -v).collect())
}
