mod common;

use chjm_core::engine::{gaussian_increments, simulate_path};
use chjm_core::model::{consistent_reverse_spread, rollover_fx_forward};
use chjm_core::{simulate, CcyId, Claim, Deflator, Model, SimulationConfig};
use common::{ccy, two_currency};

fn cfg(paths: usize) -> SimulationConfig {
    SimulationConfig {
        paths,
        ..SimulationConfig::default()
    }
}

#[test]
fn unit_payoffs_reproduce_curves() {
    let m = two_currency(6, 0.01, 0.005, 0.1);
    let model = Model::new(&m.curves, &m.vols, &ccy("USD")).unwrap();
    let (usd, jpy) = (CcyId::BASE, model.ccy(&ccy("JPY")).unwrap());
    let mut claims = Vec::new();
    let mut targets = Vec::new();
    for n in [1, 3, 6] {
        let t = model.tenor().node(n);
        claims.push(Claim::new(n, Deflator::Collateral { currency: usd, collateral: usd }, |_| Ok(1.0)));
        targets.push(m.curves.collateralized_discount(&ccy("USD"), &ccy("USD"), t).unwrap());
        claims.push(Claim::new(n, Deflator::Collateral { currency: usd, collateral: jpy }, |_| Ok(1.0)));
        targets.push(m.curves.collateralized_discount(&ccy("USD"), &ccy("JPY"), t).unwrap());
        claims.push(Claim::new(n, Deflator::Collateral { currency: jpy, collateral: jpy }, |_| Ok(1.0)));
        targets.push(m.curves.collateralized_discount(&ccy("JPY"), &ccy("JPY"), t).unwrap());
    }
    let est = simulate(&model, &cfg(20_000), &claims).unwrap();
    for (k, (e, target)) in est.iter().zip(&targets).enumerate() {
        // USD accounts at T_1 only depend on fixings at T_0.
        assert_eq!(e.std_error > 0.0, k >= 2, "{e:?}");
        assert!(e.z_score(*target).abs() < 3.0, "{e:?} vs {target}");
    }
    assert_eq!(est[2].currency, ccy("JPY"));
}

#[test]
fn zero_vols_are_exact() {
    let m = two_currency(4, 0.0, 0.0, 0.0);
    let mut vols = m.vols.clone();
    vols.set_libor_ois(&ccy("USD"), chjm_core::Loadings::zeros(4, 2)).unwrap();
    vols.set_libor_ois(&ccy("JPY"), chjm_core::Loadings::zeros(4, 2)).unwrap();
    let model = Model::new(&m.curves, &vols, &ccy("USD")).unwrap();
    let c1 = model.initial_state().collateral_rate(CcyId::BASE, 1).unwrap();
    let claims = vec![
        Claim::new(1, Deflator::None, |st| st.collateral_rate(CcyId::BASE, 1)),
        Claim::new(4, Deflator::Collateral { currency: CcyId::BASE, collateral: CcyId::BASE }, |_| Ok(1.0)),
    ];
    let est = simulate(&model, &cfg(1000), &claims).unwrap();
    assert_eq!(est[0].mean, c1);
    assert_eq!(est[0].std_error, 0.0);
    assert_eq!(est[1].std_error, 0.0);
    let d = m.curves.discount_curve(&ccy("USD")).unwrap().discount(2.0).unwrap();
    assert!((est[1].mean - d).abs() < 1e-15);
}

#[test]
fn unsimulated_quantity_is_config_error() {
    let m = two_currency(2, 0.01, 0.0, 0.1);
    let model = Model::new(&m.curves, &m.vols, &ccy("USD")).unwrap();
    let claims = vec![Claim::new(1, Deflator::None, |st| st.equity_forward(CcyId::BASE, 1))];
    assert!(matches!(
        simulate(&model, &cfg(10), &claims),
        Err(chjm_core::Error::Config(_))
    ));
    let late = vec![Claim::new(3, Deflator::None, |_| Ok(1.0))];
    assert!(simulate(&model, &cfg(10), &late).is_err());
}

#[test]
fn increments_statistics() {
    let n = 1_000_000usize;
    let mut sum = 0.0;
    for k in 0..n / 2 {
        let z = gaussian_increments(42, k as u64, 0, 2);
        sum += z[0] + z[1];
    }
    let mean = sum / n as f64;
    assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");

    let m = 100_000usize;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for k in 0..m {
        let a = gaussian_increments(7, 2 * k as u64, 3, 1)[0];
        let b = gaussian_increments(7, 2 * k as u64 + 1, 3, 1)[0];
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    let rho = sxy / (sxx * syy).sqrt();
    assert!(rho.abs() < 4.0 / (m as f64).sqrt(), "rho {rho}");
    assert!((sxx / m as f64 - 1.0).abs() < 0.02);
}

#[test]
fn antithetic_linear_payoff_has_no_variance() {
    let m = two_currency(4, 0.01, 0.005, 0.1);
    let model = Model::new(&m.curves, &m.vols, &ccy("USD")).unwrap();
    let claims = vec![Claim::new(2, Deflator::None, |st| st.collateral_rate(CcyId::BASE, 3))];
    let anti = SimulationConfig {
        paths: 2000,
        antithetic: true,
        ..SimulationConfig::default()
    };
    let est = simulate(&model, &anti, &claims).unwrap();
    assert!(est[0].std_error < 1e-15, "{:?}", est[0]);
    let plain = simulate(&model, &cfg(2000), &claims).unwrap();
    assert!(plain[0].std_error > 1e-5);
}

#[test]
fn standard_error_scales_with_root_paths() {
    let m = two_currency(4, 0.01, 0.005, 0.1);
    let model = Model::new(&m.curves, &m.vols, &ccy("USD")).unwrap();
    let jpy = model.ccy(&ccy("JPY")).unwrap();
    let claim = || vec![Claim::new(4, Deflator::Collateral { currency: jpy, collateral: jpy }, |_| Ok(1.0))];
    let small = simulate(&model, &cfg(10_000), &claim()).unwrap();
    let large = simulate(&model, &cfg(40_000), &claim()).unwrap();
    let ratio = small[0].std_error / large[0].std_error;
    assert!((1.6..=2.4).contains(&ratio), "ratio {ratio}");
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let m = two_currency(4, 0.01, 0.005, 0.1);
    let model = Model::new(&m.curves, &m.vols, &ccy("USD")).unwrap();
    let jpy = model.ccy(&ccy("JPY")).unwrap();
    let run = |workers| {
        let c = SimulationConfig {
            paths: 5000,
            workers: Some(workers),
            ..SimulationConfig::default()
        };
        let claims = vec![Claim::new(3, Deflator::Collateral { currency: CcyId::BASE, collateral: jpy }, move |st| {
            Ok(st.fx(jpy))
        })];
        simulate(&model, &c, &claims).unwrap()
    };
    let (a, b, c) = (run(1), run(3), run(8));
    assert_eq!(a[0].mean.to_bits(), b[0].mean.to_bits());
    assert_eq!(a[0].std_error.to_bits(), c[0].std_error.to_bits());
}

#[test]
fn substeps_do_not_bias() {
    let m = two_currency(4, 0.01, 0.005, 0.1);
    let model = Model::new(&m.curves, &m.vols, &ccy("USD")).unwrap();
    let jpy = model.ccy(&ccy("JPY")).unwrap();
    let c = SimulationConfig {
        paths: 20_000,
        substeps: 4,
        ..SimulationConfig::default()
    };
    let claims = vec![Claim::new(4, Deflator::Collateral { currency: jpy, collateral: jpy }, |_| Ok(1.0))];
    let est = simulate(&model, &c, &claims).unwrap();
    let target = m.curves.discount_curve(&ccy("JPY")).unwrap().discount(2.0).unwrap();
    assert!(est[0].z_score(target).abs() < 3.0);
}

#[test]
fn paths_freeze_and_stay_positive() {
    let m = two_currency(5, 0.02, 0.01, 0.2);
    let model = Model::new(&m.curves, &m.vols, &ccy("USD")).unwrap();
    let jpy = model.ccy(&ccy("JPY")).unwrap();
    let pair = model.base_pair(jpy).unwrap();
    for path in 0..50 {
        let mut fixed: Vec<(usize, f64, f64)> = Vec::new();
        simulate_path(&model, 9, path, 1.0, 3, |node, st| {
            for &(m_, c, y) in &fixed {
                assert_eq!(st.collateral_rate(CcyId::BASE, m_).unwrap(), c);
                assert_eq!(st.funding_spread(pair, m_).unwrap(), y);
            }
            if node < 5 {
                fixed.push((node, st.collateral_rate(CcyId::BASE, node)?, st.funding_spread(pair, node)?));
            }
            assert!(st.fx(jpy) > 0.0);
            assert!(st.libor_ois(jpy, 5)? > 0.0);
            Ok(())
        })
        .unwrap();
    }
}

#[test]
fn measure_change_prices_foreign_bond() {
    let m = two_currency(8, 0.01, 0.005, 0.1);
    let model = Model::new(&m.curves, &m.vols, &ccy("USD")).unwrap();
    let jpy = model.ccy(&ccy("JPY")).unwrap();
    let claims = vec![Claim::new(8, Deflator::Collateral { currency: CcyId::BASE, collateral: jpy }, move |st| {
        Ok(st.fx(jpy))
    })];
    let est = simulate(&model, &cfg(20_000), &claims).unwrap();
    let target = 0.0095 * m.curves.discount_curve(&ccy("JPY")).unwrap().discount(4.0).unwrap();
    assert!(est[0].z_score(target).abs() < 3.0, "{:?} vs {target}", est[0]);
}

#[test]
fn rollover_forward_is_consistent() {
    let m = two_currency(4, 0.01, 0.005, 0.1);
    let model = Model::new(&m.curves, &m.vols, &ccy("USD")).unwrap();
    let jpy = model.ccy(&ccy("JPY")).unwrap();
    let jpy_code = ccy("JPY");
    // Value at T_2 of receiving f_x(T_3) collateralized in JPY is the rolled
    // forward times the one-period USD bond collateralized in JPY.
    let pair = model.base_pair(jpy).unwrap();
    let delta = model.tenor().accruals()[2];
    let inner = model.clone();
    let claims = vec![Claim::new(2, Deflator::Collateral { currency: CcyId::BASE, collateral: jpy }, move |st| {
        let f = rollover_fx_forward(&inner, st, CcyId::BASE, jpy, &jpy_code)?;
        let bond = (-delta * (st.collateral_rate(CcyId::BASE, 2)? + st.funding_spread(pair, 2)?)).exp();
        Ok(f * bond)
    })];
    let est = simulate(&model, &cfg(20_000), &claims).unwrap();
    let target = 0.0095 * m.curves.discount_curve(&ccy("JPY")).unwrap().discount(1.5).unwrap();
    assert!(est[0].z_score(target).abs() < 3.0, "{:?} vs {target}", est[0]);
}

#[test]
fn reverse_spread_is_consistent() {
    let mut m = two_currency(6, 0.01, 0.005, 0.1);
    let (rev, loadings) = consistent_reverse_spread(&m.curves, &m.vols, &ccy("USD"), &ccy("USD"), &ccy("JPY")).unwrap();
    m.curves.insert_spread(rev).unwrap();
    m.vols.set_spread(&ccy("JPY"), &ccy("USD"), loadings).unwrap();
    let model = Model::new(&m.curves, &m.vols, &ccy("USD")).unwrap();
    let jpy = model.ccy(&ccy("JPY")).unwrap();
    let fwd = model.base_pair(jpy).unwrap();
    let back = model.pair(&ccy("JPY"), &ccy("USD")).unwrap();
    for path in 0..20 {
        simulate_path(&model, 1, path, 1.0, 1, |node, st| {
            if node > 0 {
                let m_ = node - 1;
                let a = st.funding_spread(fwd, m_)?;
                let b = st.funding_spread(back, m_)?;
                assert!((a + b).abs() < 1e-14, "{a} {b}");
            }
            Ok(())
        })
        .unwrap();
    }
    // JPY bond collateralized in USD, priced through the USD account.
    let claims = vec![
        Claim::new(6, Deflator::Collateral { currency: jpy, collateral: CcyId::BASE }, |_| Ok(1.0)),
        Claim::new(6, Deflator::OwnPair(back), |_| Ok(1.0)),
    ];
    let est = simulate(&model, &cfg(20_000), &claims).unwrap();
    let target = m.curves.collateralized_discount(&ccy("JPY"), &ccy("USD"), 3.0).unwrap();
    for e in &est {
        assert!(e.z_score(target).abs() < 3.0, "{e:?} vs {target}");
    }
}
