//! Model configuration: factor dimension and volatility loadings.
//!
//! ```toml
//! factors = 2
//! base = "USD"                # optional, overrides the curve file
//! tenor = [0.0, 0.5, 1.0]     # optional, must match the curve file
//!
//! [currency.USD]
//! collateral = [0.01, 0.0]    # one vector for every bucket ...
//! libor_ois = [[0.2, 0.0], [0.2, 0.0]]   # ... or one row per bucket
//! equity = [0.0, 0.2]
//!
//! [pair."USD/JPY"]
//! spread = [0.0, 0.003]       # Y^(USD,JPY): USD funding collateralized in JPY
//! fx = [0.1, 0.0]             # f_x^(USD,JPY)
//! ```
//!
//! Loadings that are not listed are zero.

use std::collections::BTreeMap;

use chjm_core::{Currency, Loadings, TenorStructure, VolatilitySpec};
use serde::Deserialize;
use toml::Spanned;

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VolFile {
    factors: Spanned<usize>,
    #[serde(default)]
    base: Option<Spanned<String>>,
    #[serde(default)]
    tenor: Option<Spanned<Vec<f64>>>,
    #[serde(default)]
    currency: BTreeMap<String, CurrencyVols>,
    #[serde(default)]
    pair: BTreeMap<Spanned<String>, PairVols>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurrencyVols {
    collateral: Option<Spanned<LoadingInput>>,
    libor_ois: Option<Spanned<LoadingInput>>,
    equity: Option<Spanned<LoadingInput>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairVols {
    spread: Option<Spanned<LoadingInput>>,
    fx: Option<Spanned<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum LoadingInput {
    Flat(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

/// Parsed configuration, checked against the curve grid.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub vols: VolatilitySpec,
    pub base: Option<Currency>,
}

fn line_of(text: &str, offset: usize) -> u64 {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() as u64 + 1
}

pub fn read_model_config(file: &str, text: &str, ts: &TenorStructure) -> CliResult<ModelConfig> {
    let raw: VolFile = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(1, |s| line_of(text, s.start));
        CliError::input(file, line, "config", e.message().to_string())
    })?;
    let at = |span: std::ops::Range<usize>, field: &str, e: chjm_core::Error| {
        CliError::from_core(file, line_of(text, span.start), field, e)
    };
    let n = ts.n_buckets();
    let dim = *raw.factors.get_ref();
    let mut vols = VolatilitySpec::new(dim, n).map_err(|e| at(raw.factors.span(), "factors", e))?;

    if let Some(nodes) = &raw.tenor {
        let same = nodes.get_ref().len() == ts.nodes().len()
            && nodes.get_ref().iter().zip(ts.nodes()).all(|(a, b)| (a - b).abs() < 1e-9);
        if !same {
            return Err(CliError::input(
                file,
                line_of(text, nodes.span().start),
                "tenor",
                format!("does not match the curve grid {:?}", ts.nodes()),
            ));
        }
    }

    let loadings = |input: &Spanned<LoadingInput>, field: &str| -> CliResult<Loadings> {
        match input.get_ref() {
            LoadingInput::Flat(v) => Loadings::flat(n, v),
            LoadingInput::Rows(rows) => Loadings::from_rows(dim, rows),
        }
        .and_then(|l| {
            if l.dim() != dim {
                Err(chjm_core::Error::Config(format!("expected {dim} factors, got {}", l.dim())))
            } else if l.rows() != n {
                Err(chjm_core::Error::Config(format!("expected {n} bucket rows, got {}", l.rows())))
            } else {
                Ok(l)
            }
        })
        .map_err(|e| at(input.span(), field, e))
    };

    for (code, cv) in &raw.currency {
        let ccy = Currency::new(code.to_ascii_uppercase());
        if let Some(x) = &cv.collateral {
            let l = loadings(x, "collateral")?;
            vols.set_collateral(&ccy, l).map_err(|e| at(x.span(), "collateral", e))?;
        }
        if let Some(x) = &cv.libor_ois {
            let l = loadings(x, "libor_ois")?;
            vols.set_libor_ois(&ccy, l).map_err(|e| at(x.span(), "libor_ois", e))?;
        }
        if let Some(x) = &cv.equity {
            let l = loadings(x, "equity")?;
            vols.set_equity(&ccy, l).map_err(|e| at(x.span(), "equity", e))?;
        }
    }
    for (key, pv) in &raw.pair {
        let (a, b) = key
            .get_ref()
            .split_once('/')
            .map(|(a, b)| (Currency::new(a.trim().to_ascii_uppercase()), Currency::new(b.trim().to_ascii_uppercase())))
            .ok_or_else(|| {
                CliError::input(file, line_of(text, key.span().start), "pair", format!("expected \"CCY/CCY\", got {:?}", key.get_ref()))
            })?;
        if let Some(x) = &pv.spread {
            let l = loadings(x, "spread")?;
            vols.set_spread(&a, &b, l).map_err(|e| at(x.span(), "spread", e))?;
        }
        if let Some(x) = &pv.fx {
            vols.set_fx(&a, &b, x.get_ref().clone()).map_err(|e| at(x.span(), "fx", e))?;
        }
    }
    Ok(ModelConfig {
        vols,
        base: raw.base.map(|b| Currency::new(b.into_inner().to_ascii_uppercase())),
    })
}
