//! Martingale checks: every deflated traded asset must reproduce its
//! time-0 curve value.

use serde::{Deserialize, Serialize};

use crate::engine::{simulate, Claim, Deflator, PriceEstimate, SimulationConfig};
use crate::error::Result;
use crate::model::{CcyId, Model};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleCheck {
    /// `D/C[USD]`, `DB/C[USD]`, `S/C[USD]`, `Y/C[USD/JPY]` or `FX/C[USD/JPY]`.
    pub asset: String,
    pub horizon: f64,
    pub estimate: PriceEstimate,
    pub target: f64,
    pub z: f64,
}

/// Checks at every node `T_1..T_N*`:
/// - `1 / C^{(m)}` against `D^{(m)}(0,T)` for every currency,
/// - `B^{(m)}(T_{n-1}; T_{n-1}, T_n) / C^{(m)}` against `D B(0)`,
/// - `S^{(m)}(T_n, T_n) / C^{(m)}` against `D S(0, T_n)`,
/// - `1 / C^{(m,k)}` against `D^{(m)} Y^{(m,k)}` for every simulated pair,
/// - `f_x^{(b,m)}(T) / C^{(b,m)}` against `f_x(0) D^{(m)}` (measure change).
///
/// Foreign quantities are valued under their own measure through the
/// density against the base measure.
pub fn martingale_suite(model: &Model, cfg: &SimulationConfig) -> Result<Vec<MartingaleCheck>> {
    let ts = model.tenor();
    let curves = model.curves();
    let mut claims = Vec::new();
    let mut meta: Vec<(String, usize, f64)> = Vec::new();
    for n in 1..=ts.n_buckets() {
        let t = ts.node(n);
        for (a, code) in model.currencies().iter().enumerate() {
            let id = CcyId(a);
            let d = curves.discount_curve(code)?.discount(t)?;
            claims.push(Claim::new(n, Deflator::OwnCollateral(id), |_| Ok(1.0)));
            meta.push((format!("D/C[{code}]"), n, d));
            if model.has_libor_ois(id) {
                let b0 = curves.libor_ois(code).expect("simulated").period(n)?;
                claims.push(Claim::new(n, Deflator::OwnCollateral(id), move |st| st.libor_ois(id, n)));
                meta.push((format!("DB/C[{code}]"), n, d * b0));
            }
            if model.has_equity(id) {
                let s0 = curves.equity(code).expect("simulated").forward(n)?;
                claims.push(Claim::new(n, Deflator::OwnCollateral(id), move |st| st.equity_forward(id, n)));
                meta.push((format!("S/C[{code}]"), n, d * s0));
            }
            if a != 0 {
                claims.push(Claim::new(
                    n,
                    Deflator::Collateral {
                        currency: id,
                        collateral: id,
                    },
                    |_| Ok(1.0),
                ));
                meta.push((format!("FX/C[{}/{code}]", model.base()), n, d));
            }
        }
        for (pair, m, k) in model.pairs() {
            claims.push(Claim::new(n, Deflator::OwnPair(pair), |_| Ok(1.0)));
            meta.push((format!("Y/C[{m}/{k}]"), n, curves.collateralized_discount(m, k, t)?));
        }
    }
    let estimates = simulate(model, cfg, &claims)?;
    Ok(estimates
        .into_iter()
        .zip(meta)
        .map(|(estimate, (asset, n, target))| MartingaleCheck {
            asset,
            horizon: ts.node(n),
            z: estimate.z_score(target),
            target,
            estimate,
        })
        .collect())
}
