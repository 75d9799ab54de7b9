//! Deterministic factor loadings of the model, piecewise constant per tenor bucket.

use std::collections::BTreeMap;

use crate::curves::Currency;
use crate::error::{Error, Result};

/// One loading vector in `R^d` per bucket, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Loadings {
    dim: usize,
    data: Vec<f64>,
}

impl Loadings {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    /// Explicit per-bucket rows; every row must have length `dim`.
    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (k, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "loading row {k} has length {}, expected {dim}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("loading row {k} is not finite")));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    /// The same vector in every one of `rows` buckets.
    pub fn flat(rows: usize, vector: &[f64]) -> Result<Self> {
        Self::from_rows(vector.len(), &vec![vector.to_vec(); rows])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn negated(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| -v).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct CurrencyLoadings {
    collateral: Loadings,
    libor_ois: Loadings,
    equity: Loadings,
}

/// Factor loadings for every modeled quantity.
///
/// Per currency `i` and bucket `n`: the collateral forward rate `sigma_n^{(i)}`,
/// the LIBOR-OIS spread `sigma_{B,n}^{(i)}` (row `n-1` for the period ending at
/// `T_n`) and the equity forward `sigma_{S,n}^{(i)}` (row `n-1` for maturity
/// `T_n`). Per ordered pair `(i,j)`: the funding spread `sigma_{y,n}^{(i,j)}`
/// and the spot FX loading `sigma_X^{(i,j)}`. Anything not set is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct VolatilitySpec {
    dim: usize,
    n_buckets: usize,
    zero: Loadings,
    currencies: BTreeMap<Currency, CurrencyLoadings>,
    spreads: BTreeMap<(Currency, Currency), Loadings>,
    fx: BTreeMap<(Currency, Currency), Vec<f64>>,
}

impl VolatilitySpec {
    pub fn new(dim: usize, n_buckets: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("factor dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            n_buckets,
            zero: Loadings::zeros(n_buckets, dim),
            currencies: BTreeMap::new(),
            spreads: BTreeMap::new(),
            fx: BTreeMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_buckets(&self) -> usize {
        self.n_buckets
    }

    fn check(&self, l: &Loadings, what: &str) -> Result<()> {
        if l.dim() != self.dim || l.rows() != self.n_buckets {
            return Err(Error::InvalidInput(format!(
                "{what}: expected {} rows of dimension {}, got {} rows of dimension {}",
                self.n_buckets,
                self.dim,
                l.rows(),
                l.dim()
            )));
        }
        Ok(())
    }

    fn entry(&mut self, ccy: &Currency) -> &mut CurrencyLoadings {
        let zero = self.zero.clone();
        self.currencies
            .entry(ccy.clone())
            .or_insert_with(|| CurrencyLoadings {
                collateral: zero.clone(),
                libor_ois: zero.clone(),
                equity: zero,
            })
    }

    pub fn set_collateral(&mut self, ccy: &Currency, l: Loadings) -> Result<()> {
        self.check(&l, &format!("collateral loadings of {ccy}"))?;
        self.entry(ccy).collateral = l;
        Ok(())
    }

    pub fn set_libor_ois(&mut self, ccy: &Currency, l: Loadings) -> Result<()> {
        self.check(&l, &format!("LIBOR-OIS loadings of {ccy}"))?;
        self.entry(ccy).libor_ois = l;
        Ok(())
    }

    pub fn set_equity(&mut self, ccy: &Currency, l: Loadings) -> Result<()> {
        self.check(&l, &format!("equity loadings of {ccy}"))?;
        self.entry(ccy).equity = l;
        Ok(())
    }

    /// Funding spread loadings of `y^{(ccy, collateral)}`; must vanish when the two agree.
    pub fn set_spread(&mut self, ccy: &Currency, collateral: &Currency, l: Loadings) -> Result<()> {
        self.check(&l, &format!("spread loadings of {ccy}/{collateral}"))?;
        if ccy == collateral {
            if !l.is_zero() {
                return Err(Error::InvalidInput(format!(
                    "same-currency spread loadings for {ccy} must be zero"
                )));
            }
            return Ok(());
        }
        self.spreads.insert((ccy.clone(), collateral.clone()), l);
        Ok(())
    }

    /// Spot FX loading of `f_x^{(domestic, foreign)}`.
    pub fn set_fx(&mut self, domestic: &Currency, foreign: &Currency, v: Vec<f64>) -> Result<()> {
        if v.len() != self.dim || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "FX loading {domestic}/{foreign} must be {} finite numbers",
                self.dim
            )));
        }
        if domestic == foreign {
            if v.iter().any(|&x| x != 0.0) {
                return Err(Error::InvalidInput(format!(
                    "same-currency FX loading for {domestic} must be zero"
                )));
            }
            return Ok(());
        }
        self.fx.remove(&(foreign.clone(), domestic.clone()));
        self.fx.insert((domestic.clone(), foreign.clone()), v);
        Ok(())
    }

    pub fn collateral(&self, ccy: &Currency) -> &Loadings {
        self.currencies.get(ccy).map_or(&self.zero, |c| &c.collateral)
    }

    pub fn libor_ois(&self, ccy: &Currency) -> &Loadings {
        self.currencies.get(ccy).map_or(&self.zero, |c| &c.libor_ois)
    }

    pub fn equity(&self, ccy: &Currency) -> &Loadings {
        self.currencies.get(ccy).map_or(&self.zero, |c| &c.equity)
    }

    pub fn spread(&self, ccy: &Currency, collateral: &Currency) -> &Loadings {
        self.spreads
            .get(&(ccy.clone(), collateral.clone()))
            .unwrap_or(&self.zero)
    }

    fn fx_direct(&self, i: &Currency, j: &Currency) -> Option<Vec<f64>> {
        if let Some(v) = self.fx.get(&(i.clone(), j.clone())) {
            return Some(v.clone());
        }
        self.fx
            .get(&(j.clone(), i.clone()))
            .map(|v| v.iter().map(|x| -x).collect())
    }

    fn mentions(&self, c: &Currency) -> bool {
        self.fx.keys().any(|(a, b)| a == c || b == c)
    }

    /// `sigma_X^{(i,j)}`, resolved directly, by inversion, or through one
    /// intermediate currency (`sigma^{(i,j)} = sigma^{(k,j)} - sigma^{(k,i)}`).
    /// Zero when neither currency carries any FX loading; an error when only
    /// one of them does.
    pub fn fx(&self, i: &Currency, j: &Currency) -> Result<Vec<f64>> {
        if i == j {
            return Ok(vec![0.0; self.dim]);
        }
        if let Some(v) = self.fx_direct(i, j) {
            return Ok(v);
        }
        let hubs: Vec<&Currency> = self
            .fx
            .keys()
            .flat_map(|(a, b)| [a, b])
            .collect();
        for k in hubs {
            if let (Some(kj), Some(ki)) = (self.fx_direct(k, j), self.fx_direct(k, i)) {
                return Ok(kj.iter().zip(&ki).map(|(a, b)| a - b).collect());
            }
        }
        if self.mentions(i) || self.mentions(j) {
            return Err(Error::Config(format!(
                "FX loading for {i}/{j} cannot be resolved from the configured pairs"
            )));
        }
        Ok(vec![0.0; self.dim])
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
