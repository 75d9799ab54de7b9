//! Curve calibration: discount curves from par OIS quotes and funding spread
//! curves from collateralized FX forwards.

use crate::curves::{Currency, DiscountCurve, SpreadCurve};
use crate::error::{Error, Result};
use crate::tenor::TenorStructure;

/// Par OIS quote: annual fixed leg against the compounded overnight leg,
/// both collateralized in the curve currency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OisQuote {
    pub maturity: f64,
    pub rate: f64,
}

/// Upper end of the discount-factor search bracket; allows deeply negative rates.
const MAX_DISCOUNT: f64 = 10.0;

/// Fixed-leg payment times and accruals, generated backwards from maturity in
/// whole years with a short front stub.
pub fn annual_schedule(maturity: f64) -> Vec<(f64, f64)> {
    let mut times = Vec::new();
    let mut t = maturity;
    while t > 1e-9 {
        times.push(t);
        t -= 1.0;
    }
    times.reverse();
    let mut prev = 0.0;
    times
        .into_iter()
        .map(|t| {
            let accrual = t - prev;
            prev = t;
            (t, accrual)
        })
        .collect()
}

/// PV per unit notional of a receiver par OIS (`fixed - floating`); zero when
/// the curve reprices the quote.
pub fn ois_residual(curve: &DiscountCurve, quote: &OisQuote) -> Result<f64> {
    let mut annuity = 0.0;
    for (t, a) in annual_schedule(quote.maturity) {
        annuity += a * curve.discount(t)?;
    }
    Ok(quote.rate * annuity - (1.0 - curve.discount(quote.maturity)?))
}

/// Sequential bootstrap under log-linear interpolation. Quote maturities must
/// be tenor nodes and strictly increasing.
pub fn bootstrap_discount_curve(
    ts: &TenorStructure,
    currency: Currency,
    quotes: &[OisQuote],
) -> Result<DiscountCurve> {
    if quotes.is_empty() {
        return Err(Error::Ingestion(format!("no OIS quotes for {currency}")));
    }
    let mut pillars: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    for q in quotes {
        let k = ts.require_node(q.maturity)?;
        let maturity = ts.node(k);
        let (t_prev, d_prev) = *pillars.last().expect("anchored");
        if maturity <= t_prev {
            return Err(Error::Ingestion(format!(
                "OIS quotes for {currency} not strictly increasing at T={maturity}"
            )));
        }
        if !q.rate.is_finite() {
            return Err(Error::Ingestion(format!(
                "non-finite OIS rate at T={maturity}"
            )));
        }
        let known = DiscountCurve::new(currency.clone(), pillars.clone())?;

        // Payments on or before the last pillar are fixed; later ones depend
        // on the unknown x = D(0, maturity) through interpolation weights.
        let mut fixed_annuity = 0.0;
        let mut open: Vec<(f64, f64)> = Vec::new();
        for (t, a) in annual_schedule(maturity) {
            if t <= t_prev {
                fixed_annuity += a * known.discount(t)?;
            } else {
                open.push(((t - t_prev) / (maturity - t_prev), a));
            }
        }
        let residual = |x: f64| -> (f64, f64) {
            let mut annuity = fixed_annuity;
            let mut slope = 0.0;
            for &(w, a) in &open {
                let d = d_prev.powf(1.0 - w) * x.powf(w);
                annuity += a * d;
                slope += a * w * d / x;
            }
            (q.rate * annuity + x - 1.0, q.rate * slope + 1.0)
        };
        let x = solve_increasing(residual, d_prev, MAX_DISCOUNT).ok_or_else(|| {
            Error::Calibration {
                pillar: maturity,
                reason: format!(
                    "no positive discount factor reprices the {currency} OIS rate {}",
                    q.rate
                ),
            }
        })?;
        pillars.push((maturity, x));
    }
    DiscountCurve::new(currency, pillars)
}

/// Root of `f` on `(0, hi]` by safeguarded Newton; `f` returns value and derivative.
fn solve_increasing(f: impl Fn(f64) -> (f64, f64), guess: f64, hi: f64) -> Option<f64> {
    let mut lo = f64::MIN_POSITIVE;
    let mut hi = hi;
    let (f_lo, _) = f(lo);
    let (f_hi, _) = f(hi);
    if !(f_lo <= 0.0 && f_hi >= 0.0) {
        return None;
    }
    let mut x = guess.clamp(lo, hi);
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Some(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x {
            return Some(next);
        }
        x = next;
    }
    Some(x)
}

/// Funding spread curve `Y^{(j,i)}` implied by FX forwards on `f_x^{(i,j)}`
/// collateralized in `i`:
/// `Y^{(j,i)}(0,T) = [f_x(0;T,(i)) / f_x(0)] D^{(i)}(0,T) / D^{(j)}(0,T)`.
///
/// `spot` is `f_x^{(i,j)}(0)`, the price of one unit of `j` in `i`, and
/// `quotes` are `(T, forward)` pairs with `T` on the grid.
pub fn bootstrap_spread_curve(
    ts: &TenorStructure,
    spot: f64,
    quotes: &[(f64, f64)],
    d_i: &DiscountCurve,
    d_j: &DiscountCurve,
) -> Result<SpreadCurve> {
    if !(spot.is_finite() && spot > 0.0) {
        return Err(Error::Ingestion(format!("spot FX must be positive, got {spot}")));
    }
    let mut pillars = Vec::with_capacity(quotes.len());
    let mut last = 0.0;
    for &(t, fwd) in quotes {
        let k = ts.require_node(t)?;
        let t = ts.node(k);
        if t <= last {
            return Err(Error::Ingestion(format!(
                "FX forward quotes not strictly increasing at T={t}"
            )));
        }
        last = t;
        if !(fwd.is_finite() && fwd > 0.0) {
            return Err(Error::Ingestion(format!(
                "FX forward at T={t} must be positive, got {fwd}"
            )));
        }
        let y = fwd / spot * d_i.discount(t)? / d_j.discount(t)?;
        if !(y.is_finite() && y > 0.0) {
            return Err(Error::Calibration {
                pillar: t,
                reason: format!("implied funding spread factor {y} is not positive"),
            });
        }
        pillars.push((t, y));
    }
    SpreadCurve::new(d_j.currency().clone(), d_i.currency().clone(), pillars)
}
