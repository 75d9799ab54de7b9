//! Multi-currency market model with full collateralization, discretized on a
//! fixed tenor grid.
//!
//! Collateral forward rates, LIBOR-OIS spreads, funding spreads, spot FX and
//! equity forwards are simulated jointly under the collateral-account measure
//! of a base currency. Analytic pricers for collateralized bonds, FX forwards
//! and FX options share their curves with the simulation and serve as oracles
//! for it.

pub mod bootstrap;
pub mod curves;
pub mod diagnostics;
pub mod dynamics;
pub mod engine;
mod error;
pub mod model;
pub mod pricers;
pub mod tenor;
pub mod vols;

pub use curves::{Currency, CurveSet, DiscountCurve, EquityForwards, LiborOisSpreads, SpreadCurve};
pub use engine::{simulate, Claim, Deflator, PriceEstimate, SimulationConfig};
pub use error::{Error, Result};
pub use model::{CcyId, Model, PairId, PathState};
pub use tenor::TenorStructure;
pub use vols::{Loadings, VolatilitySpec};
