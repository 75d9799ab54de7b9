//! Market-data ingestion and curve bootstrapping.
//!
//! The quote file is a CSV with header
//! `record,currency,counter,collateral,time,value`. Record types:
//!
//! | record           | fields used                                   |
//! |------------------|-----------------------------------------------|
//! | `base`           | `currency`                                    |
//! | `tenor`          | `time` (grid node; `0` is implied)            |
//! | `ois`            | `currency`, `time` (maturity), `value` (rate) |
//! | `discount`       | `currency`, `time`, `value`                   |
//! | `libor_ois`      | `currency`, `time` (period end), `value`      |
//! | `spot_fx`        | `currency`, `counter`, `value`                |
//! | `fx_forward`     | `currency`, `counter`, `collateral`, `time`, `value` |
//! | `equity_forward` | `currency`, `time`, `value`                   |
//!
//! FX rates are units of `currency` per unit of `counter`. Forward quotes must
//! be collateralized in one of the two currencies of the pair.

use std::collections::BTreeMap;

use chjm_core::bootstrap::{bootstrap_discount_curve, bootstrap_spread_curve, ois_residual, OisQuote};
use chjm_core::{Currency, CurveSet, DiscountCurve, EquityForwards, LiborOisSpreads, TenorStructure};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::table::{Row, Table};

const COLUMNS: [&str; 6] = ["record", "currency", "counter", "collateral", "time", "value"];

/// Curve set plus the declared base currency, as written by `bootstrap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFile {
    pub base: Currency,
    pub curves: CurveSet,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub instrument: String,
    pub maturity: f64,
    /// Repricing error per unit notional (OIS) or relative to the quote (FX).
    pub relative: f64,
}

#[derive(Debug, Clone)]
pub struct BootstrapOutcome {
    pub curve_file: CurveFile,
    pub residuals: Vec<Residual>,
}

impl BootstrapOutcome {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.relative.abs()).fold(0.0, f64::max)
    }
}

struct Quote {
    line: u64,
    time: f64,
    value: f64,
}

#[derive(Default)]
struct Quotes {
    ois: BTreeMap<Currency, Vec<Quote>>,
    discount: BTreeMap<Currency, Vec<Quote>>,
    libor_ois: BTreeMap<Currency, Vec<Quote>>,
    equity: BTreeMap<Currency, Vec<Quote>>,
    spots: Vec<(u64, Currency, Currency, f64)>,
    /// Keyed by `(currency, counter, collateral)`.
    forwards: BTreeMap<(Currency, Currency, Currency), Vec<Quote>>,
}

fn currency(table: &Table, row: &Row, col: &str) -> CliResult<Currency> {
    let code = table.text(row, col)?;
    if !code.chars().all(|c| c.is_ascii_alphanumeric()) {
        return Err(table.err(row, col, format!("invalid currency tag {code:?}")));
    }
    Ok(Currency::new(code.to_ascii_uppercase()))
}

/// Parses and bootstraps a market-data file held in `text`.
pub fn bootstrap_market(file: &str, text: &str) -> CliResult<BootstrapOutcome> {
    let table = Table::parse(file, text, &COLUMNS)?;

    let mut base: Option<(u64, Currency)> = None;
    let mut nodes = vec![0.0];
    for row in &table.rows {
        match table.text(row, "record")? {
            "base" => {
                if let Some((first, _)) = &base {
                    return Err(table.err(row, "record", format!("base currency already declared on line {first}")));
                }
                base = Some((row.line, currency(&table, row, "currency")?));
            }
            "tenor" => {
                let t = table.number(row, "time")?;
                if t != 0.0 {
                    nodes.push(t);
                }
            }
            _ => {}
        }
    }
    let (_, base) = base.ok_or_else(|| CliError::input(file, 1, "record", "no `base` record declared"))?;
    let tenor_line = table
        .rows
        .iter()
        .find(|r| table.get(r, "record") == Some("tenor"))
        .map_or(1, |r| r.line);
    if nodes.len() < 2 {
        return Err(CliError::input(file, 1, "record", "no `tenor` records declared"));
    }
    let ts = TenorStructure::new(nodes).map_err(|e| CliError::from_core(file, tenor_line, "time", e))?;

    let on_grid = |row: &Row| -> CliResult<f64> {
        let t = table.number(row, "time")?;
        let k = ts.require_node(t).map_err(|e| table.core_err(row, "time", e))?;
        Ok(ts.node(k))
    };

    let mut q = Quotes::default();
    for row in &table.rows {
        let record = table.text(row, "record")?;
        match record {
            "base" | "tenor" => {}
            "ois" | "discount" | "libor_ois" | "equity_forward" => {
                let ccy = currency(&table, row, "currency")?;
                let quote = Quote {
                    line: row.line,
                    time: on_grid(row)?,
                    value: table.number(row, "value")?,
                };
                let map = match record {
                    "ois" => &mut q.ois,
                    "discount" => &mut q.discount,
                    "libor_ois" => &mut q.libor_ois,
                    _ => &mut q.equity,
                };
                map.entry(ccy).or_default().push(quote);
            }
            "spot_fx" => {
                let i = currency(&table, row, "currency")?;
                let j = currency(&table, row, "counter")?;
                q.spots.push((row.line, i, j, table.number(row, "value")?));
            }
            "fx_forward" => {
                let i = currency(&table, row, "currency")?;
                let j = currency(&table, row, "counter")?;
                let k = currency(&table, row, "collateral")?;
                if k != i && k != j {
                    return Err(table.err(row, "collateral", format!("must be {i} or {j}, got {k}")));
                }
                let quote = Quote {
                    line: row.line,
                    time: on_grid(row)?,
                    value: table.number(row, "value")?,
                };
                q.forwards.entry((i, j, k)).or_default().push(quote);
            }
            other => return Err(table.err(row, "record", format!("unknown record type {other:?}"))),
        }
    }

    let mut curves = CurveSet::new(ts.clone());
    let mut residuals = Vec::new();
    let mut discount: BTreeMap<Currency, DiscountCurve> = BTreeMap::new();

    for (ccy, quotes) in &q.ois {
        if let Some(d) = q.discount.get(ccy) {
            return Err(CliError::input(file, d[0].line, "record", format!("{ccy} has both OIS quotes and discount pillars")));
        }
        let ois: Vec<OisQuote> = quotes.iter().map(|x| OisQuote { maturity: x.time, rate: x.value }).collect();
        let curve = bootstrap_discount_curve(&ts, ccy.clone(), &ois).map_err(|e| locate(file, quotes, e))?;
        for (quote, line) in ois.iter().zip(quotes.iter().map(|x| x.line)) {
            let r = ois_residual(&curve, quote).map_err(|e| CliError::from_core(file, line, "value", e))?;
            residuals.push(Residual {
                instrument: format!("OIS {ccy}"),
                maturity: quote.maturity,
                relative: r,
            });
        }
        discount.insert(ccy.clone(), curve);
    }
    for (ccy, quotes) in &q.discount {
        let mut pillars = vec![(0.0, 1.0)];
        pillars.extend(quotes.iter().filter(|x| x.time > 0.0).map(|x| (x.time, x.value)));
        let curve = DiscountCurve::new(ccy.clone(), pillars).map_err(|e| CliError::from_core(file, quotes[0].line, "value", e))?;
        discount.insert(ccy.clone(), curve);
    }
    if !discount.contains_key(&base) {
        return Err(CliError::input(file, 1, "currency", format!("no discount curve for base currency {base}")));
    }
    for (ccy, curve) in &discount {
        let line = q.ois.get(ccy).or(q.discount.get(ccy)).map_or(1, |v| v[0].line);
        curves.insert_discount(curve.clone()).map_err(|e| CliError::from_core(file, line, "time", e))?;
    }

    for (line, i, j, rate) in &q.spots {
        for c in [i, j] {
            if !discount.contains_key(c) {
                return Err(CliError::input(file, *line, "currency", format!("no discount curve for {c}")));
            }
        }
        curves
            .insert_spot_fx(i.clone(), j.clone(), *rate)
            .map_err(|e| CliError::from_core(file, *line, "value", e))?;
    }

    let mut seen: BTreeMap<(Currency, Currency), u64> = BTreeMap::new();
    for ((i, j, k), quotes) in &q.forwards {
        let line = quotes[0].line;
        let (d_i, d_j) = match (discount.get(i), discount.get(j)) {
            (Some(a), Some(b)) => (a, b),
            (None, _) => return Err(CliError::input(file, line, "currency", format!("no discount curve for {i}"))),
            (_, None) => return Err(CliError::input(file, line, "counter", format!("no discount curve for {j}"))),
        };
        let spot = curves.spot_fx(i, j).map_err(|e| CliError::from_core(file, line, "counter", e))?;
        let pts: Vec<(f64, f64)> = quotes.iter().map(|x| (x.time, x.value)).collect();
        // Quotes collateralized in the counter currency are inverted so the
        // collateral is always the quoting side.
        let curve = if k == i {
            bootstrap_spread_curve(&ts, spot, &pts, d_i, d_j)
        } else {
            let inv: Vec<(f64, f64)> = pts.iter().map(|&(t, f)| (t, 1.0 / f)).collect();
            bootstrap_spread_curve(&ts, 1.0 / spot, &inv, d_j, d_i)
        }
        .map_err(|e| locate(file, quotes, e))?;
        let key = (curve.currency().clone(), curve.collateral().clone());
        if let Some(first) = seen.insert(key.clone(), line) {
            return Err(CliError::input(
                file,
                line,
                "collateral",
                format!("funding spread {}/{} already implied by quotes on line {first}", key.0, key.1),
            ));
        }
        for x in quotes {
            let y = curve.value(x.time).map_err(|e| CliError::from_core(file, x.line, "time", e))?;
            let (di, dj) = (discount_at(file, d_i, x)?, discount_at(file, d_j, x)?);
            let fwd = if k == i { spot * y * dj / di } else { spot * dj / (y * di) };
            residuals.push(Residual {
                instrument: format!("FX {i}/{j} coll {k}"),
                maturity: x.time,
                relative: (fwd - x.value) / x.value,
            });
        }
        curves.insert_spread(curve).map_err(|e| CliError::from_core(file, line, "time", e))?;
    }

    for (ccy, quotes) in &q.libor_ois {
        let values = per_node(file, &ts, ccy, quotes)?;
        curves
            .insert_libor_ois(LiborOisSpreads { currency: ccy.clone(), values })
            .map_err(|e| CliError::from_core(file, quotes[0].line, "value", e))?;
    }
    for (ccy, quotes) in &q.equity {
        let forwards = per_node(file, &ts, ccy, quotes)?;
        curves
            .insert_equity(EquityForwards { currency: ccy.clone(), forwards })
            .map_err(|e| CliError::from_core(file, quotes[0].line, "value", e))?;
    }

    Ok(BootstrapOutcome {
        curve_file: CurveFile { base, curves },
        residuals,
    })
}

fn discount_at(file: &str, d: &DiscountCurve, x: &Quote) -> CliResult<f64> {
    d.discount(x.time).map_err(|e| CliError::from_core(file, x.line, "time", e))
}

/// Points a bootstrap error at the quote whose maturity it names.
fn locate(file: &str, quotes: &[Quote], e: chjm_core::Error) -> CliError {
    let line = match &e {
        chjm_core::Error::Calibration { pillar, .. } => quotes
            .iter()
            .find(|x| (x.time - pillar).abs() < 1e-9)
            .map_or(quotes[0].line, |x| x.line),
        _ => quotes[0].line,
    };
    CliError::from_core(file, line, "value", e)
}

/// One value per grid node `T_1..T_N`, in node order.
fn per_node(file: &str, ts: &TenorStructure, ccy: &Currency, quotes: &[Quote]) -> CliResult<Vec<f64>> {
    let mut values: Vec<Option<f64>> = vec![None; ts.n_buckets()];
    for x in quotes {
        let n = ts.node_index(x.time).unwrap_or(0);
        if n == 0 {
            return Err(CliError::input(file, x.line, "time", "must be a grid node after 0"));
        }
        if values[n - 1].replace(x.value).is_some() {
            return Err(CliError::input(file, x.line, "time", format!("duplicate {ccy} pillar at T={}", x.time)));
        }
    }
    values
        .into_iter()
        .enumerate()
        .map(|(k, v)| {
            v.ok_or_else(|| {
                CliError::input(file, quotes[0].line, "time", format!("{ccy}: missing pillar at T={}", ts.node(k + 1)))
            })
        })
        .collect()
}

/// Reads a curve file written by `bootstrap`.
pub fn read_curve_file(file: &str, text: &str) -> CliResult<CurveFile> {
    serde_json::from_str(text).map_err(|e| CliError::input(file, e.line() as u64, "curves", e.to_string()))
}
