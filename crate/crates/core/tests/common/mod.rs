#![allow(dead_code)]

use chjm_core::{Currency, CurveSet, DiscountCurve, LiborOisSpreads, Loadings, SpreadCurve, TenorStructure, VolatilitySpec};

pub fn ccy(s: &str) -> Currency {
    Currency::new(s)
}

pub struct Market {
    pub curves: CurveSet,
    pub vols: VolatilitySpec,
}

/// USD base, JPY foreign, semiannual grid of `n` buckets.
pub fn two_currency(n: usize, sigma_c: f64, sigma_y: f64, sigma_x: f64) -> Market {
    let ts = TenorStructure::uniform(n, 0.5).unwrap();
    let mut curves = CurveSet::new(ts.clone());
    curves.insert_discount(DiscountCurve::flat(ccy("USD"), 0.02, &ts).unwrap()).unwrap();
    curves.insert_discount(DiscountCurve::flat(ccy("JPY"), 0.005, &ts).unwrap()).unwrap();
    curves.insert_spread(SpreadCurve::flat(ccy("USD"), ccy("JPY"), 0.003, &ts).unwrap()).unwrap();
    curves.insert_libor_ois(LiborOisSpreads { currency: ccy("USD"), values: vec![0.002; n] }).unwrap();
    curves.insert_libor_ois(LiborOisSpreads { currency: ccy("JPY"), values: vec![0.001; n] }).unwrap();
    curves.insert_spot_fx(ccy("USD"), ccy("JPY"), 0.0095).unwrap();
    let mut vols = VolatilitySpec::new(2, n).unwrap();
    vols.set_collateral(&ccy("USD"), Loadings::flat(n, &[sigma_c, 0.0]).unwrap()).unwrap();
    vols.set_collateral(&ccy("JPY"), Loadings::flat(n, &[0.6 * sigma_c, 0.8 * sigma_c]).unwrap()).unwrap();
    vols.set_libor_ois(&ccy("USD"), Loadings::flat(n, &[0.0, 0.2]).unwrap()).unwrap();
    vols.set_libor_ois(&ccy("JPY"), Loadings::flat(n, &[0.15, 0.1]).unwrap()).unwrap();
    vols.set_spread(&ccy("USD"), &ccy("JPY"), Loadings::flat(n, &[0.0, sigma_y]).unwrap()).unwrap();
    vols.set_fx(&ccy("USD"), &ccy("JPY"), vec![0.5 * sigma_x, -0.866 * sigma_x]).unwrap();
    Market { curves, vols }
}
