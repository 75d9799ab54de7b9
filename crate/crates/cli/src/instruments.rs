//! Instrument files: CSV with header
//! `id,type,currency,counter,collateral,maturity,strike,kind`.
//!
//! - `zcb`: unit of `currency` at `maturity`, collateralized in `collateral`.
//! - `fx_forward`: forward rate in `currency` per unit of `counter`.
//! - `fx_option`: `kind` = `call` | `put` on the same rate, paid in `currency`.
//! - `equity_forward`: forward of the `currency` equity index.

use chjm_core::pricers::{FxForwardSpec, FxOptionSpec, OptionKind};
use chjm_core::Currency;

use crate::error::CliResult;
use crate::table::{Row, Table};

const COLUMNS: [&str; 3] = ["id", "type", "maturity"];

#[derive(Debug, Clone, PartialEq)]
pub enum Instrument {
    Zcb {
        currency: Currency,
        collateral: Currency,
        maturity: f64,
    },
    FxForward(FxForwardSpec),
    FxOption(FxOptionSpec),
    EquityForward {
        currency: Currency,
        maturity: f64,
    },
}

impl Instrument {
    pub fn type_tag(&self) -> &'static str {
        match self {
            Instrument::Zcb { .. } => "zcb",
            Instrument::FxForward(_) => "fx_forward",
            Instrument::FxOption(_) => "fx_option",
            Instrument::EquityForward { .. } => "equity_forward",
        }
    }
}

#[derive(Debug, Clone)]
pub struct InstrumentRow {
    pub id: String,
    pub line: u64,
    pub instrument: Instrument,
}

fn currency(table: &Table, row: &Row, col: &str) -> CliResult<Currency> {
    Ok(Currency::new(table.text(row, col)?.to_ascii_uppercase()))
}

pub fn read_instruments(file: &str, text: &str) -> CliResult<Vec<InstrumentRow>> {
    let table = Table::parse(file, text, &COLUMNS)?;
    let mut out: Vec<InstrumentRow> = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let id = table.text(row, "id")?.to_string();
        if let Some(prev) = out.iter().find(|r| r.id == id) {
            return Err(table.err(row, "id", format!("duplicate id {id:?} (first on line {})", prev.line)));
        }
        let maturity = table.number(row, "maturity")?;
        let instrument = match table.text(row, "type")? {
            "zcb" => Instrument::Zcb {
                currency: currency(&table, row, "currency")?,
                collateral: currency(&table, row, "collateral")?,
                maturity,
            },
            "fx_forward" => Instrument::FxForward(FxForwardSpec {
                pay: currency(&table, row, "currency")?,
                receive: currency(&table, row, "counter")?,
                collateral: currency(&table, row, "collateral")?,
                maturity,
            }),
            "fx_option" => {
                let kind = match table.text(row, "kind")?.to_ascii_lowercase().as_str() {
                    "call" => OptionKind::Call,
                    "put" => OptionKind::Put,
                    other => return Err(table.err(row, "kind", format!("expected call or put, got {other:?}"))),
                };
                let strike = table.number(row, "strike")?;
                if strike <= 0.0 {
                    return Err(table.err(row, "strike", format!("must be positive, got {strike}")));
                }
                Instrument::FxOption(FxOptionSpec {
                    domestic: currency(&table, row, "currency")?,
                    foreign: currency(&table, row, "counter")?,
                    strike,
                    maturity,
                    collateral: currency(&table, row, "collateral")?,
                    kind,
                })
            }
            "equity_forward" => Instrument::EquityForward {
                currency: currency(&table, row, "currency")?,
                maturity,
            },
            other => return Err(table.err(row, "type", format!("unknown instrument type {other:?}"))),
        };
        out.push(InstrumentRow {
            id,
            line: row.line,
            instrument,
        });
    }
    Ok(out)
}
