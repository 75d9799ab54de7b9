//! Acceptance suite. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use chjm_cli::market::bootstrap_market;
use chjm_core::diagnostics::martingale_suite;
use chjm_core::dynamics::{bucket_sum, drift_c, DriftHook};
use chjm_core::model::complete_reverse_spreads;
use chjm_core::pricers::{fx_forward, fx_option_black, fx_option_claim, zcb_mc, FxForwardSpec, FxOptionSpec, OptionKind};
use chjm_core::{
    simulate, Currency, CurveSet, DiscountCurve, LiborOisSpreads, Loadings, Model, SimulationConfig, SpreadCurve,
    TenorStructure, VolatilitySpec,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::Value;

const PATHS: usize = 100_000;
const SEED: u64 = 42;

fn ccy(s: &str) -> Currency {
    Currency::new(s)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let took = start.elapsed();
    (took < limit, format!("{:.2}s of {}s", took.as_secs_f64(), limit.as_secs()))
}

// 1. Drift telescoping over random loadings.
fn telescoping() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for spec in 0..100 {
        let dim = 1 + spec % 3;
        let mut nodes = vec![0.0];
        for _ in 0..8 {
            nodes.push(nodes.last().unwrap() + rng.random_range(0.1..1.0));
        }
        let ts = TenorStructure::new(nodes).unwrap();
        let rows: Vec<Vec<f64>> = (0..8).map(|_| (0..dim).map(|_| rng.random_range(-0.03..0.03)).collect()).collect();
        let sigma = Loadings::from_rows(dim, &rows).unwrap();
        let zero = vec![0.0; dim];
        for q in 0..8 {
            let t = ts.node(q);
            for n in q..=8 {
                let lhs: f64 = (q..n).map(|m| ts.accruals()[m] * drift_c(&ts, &sigma, m, t, &zero).unwrap()).sum();
                let s = bucket_sum(&ts, &sigma, q, n);
                let rhs = 0.5 * s.iter().map(|v| v * v).sum::<f64>();
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    let (fast, time) = within(Duration::from_secs(1), start);
    outcome(worst < 1e-12 && fast, format!("max residual {worst:.2e} (< 1e-12), {time}"))
}

/// USD at 2% flat with `|sigma_c| = 1%` and `sigma_B = 20%`, JPY as the
/// counter currency with `sigma_y = 0.5%`; 8 semiannual buckets.
fn martingale_market() -> (CurveSet, VolatilitySpec) {
    let n = 8;
    let ts = TenorStructure::uniform(n, 0.5).unwrap();
    let mut curves = CurveSet::new(ts.clone());
    curves.insert_discount(DiscountCurve::flat(ccy("USD"), 0.02, &ts).unwrap()).unwrap();
    curves.insert_discount(DiscountCurve::flat(ccy("JPY"), 0.005, &ts).unwrap()).unwrap();
    curves.insert_spread(SpreadCurve::flat(ccy("USD"), ccy("JPY"), 0.003, &ts).unwrap()).unwrap();
    curves.insert_libor_ois(LiborOisSpreads { currency: ccy("USD"), values: vec![0.002; n] }).unwrap();
    curves.insert_spot_fx(ccy("USD"), ccy("JPY"), 0.0095).unwrap();
    let mut vols = VolatilitySpec::new(3, n).unwrap();
    vols.set_collateral(&ccy("USD"), Loadings::flat(n, &[0.01, 0.0, 0.0]).unwrap()).unwrap();
    vols.set_collateral(&ccy("JPY"), Loadings::flat(n, &[0.006, 0.008, 0.0]).unwrap()).unwrap();
    vols.set_libor_ois(&ccy("USD"), Loadings::flat(n, &[0.12, 0.0, 0.16]).unwrap()).unwrap();
    vols.set_spread(&ccy("USD"), &ccy("JPY"), Loadings::flat(n, &[0.0, 0.003, 0.004]).unwrap()).unwrap();
    vols.set_fx(&ccy("USD"), &ccy("JPY"), vec![0.06, -0.08, 0.0]).unwrap();
    complete_reverse_spreads(&mut curves, &mut vols, &ccy("USD")).unwrap();
    (curves, vols)
}

fn antithetic_cfg() -> SimulationConfig {
    SimulationConfig {
        paths: PATHS,
        seed: SEED,
        antithetic: true,
        ..SimulationConfig::default()
    }
}

// 2. Martingale suite.
fn martingale() -> Outcome {
    let start = Instant::now();
    let (curves, vols) = martingale_market();
    let model = Model::new(&curves, &vols, &ccy("USD")).unwrap();
    let checks = martingale_suite(&model, &antithetic_cfg()).unwrap();
    let worst = checks.iter().max_by(|a, b| a.z.abs().total_cmp(&b.z.abs())).unwrap();
    let covers = ["D/C[USD]", "DB/C[USD]", "Y/C[USD/JPY]"]
        .iter()
        .all(|a| checks.iter().filter(|c| c.asset == *a).count() == 8);
    let (fast, time) = within(Duration::from_secs(30), start);
    outcome(
        worst.z.abs() < 4.0 && covers && fast,
        format!(
            "{} checks, worst |z| = {:.2} ({} at T={}), {time}",
            checks.len(),
            worst.z.abs(),
            worst.asset,
            worst.horizon
        ),
    )
}

// 3. Black against simulation for FX options.
fn black_vs_mc() -> Outcome {
    let start = Instant::now();
    let n = 4;
    let ts = TenorStructure::uniform(n, 0.5).unwrap();
    let (usd, eur) = (ccy("USD"), ccy("EUR"));
    let mut curves = CurveSet::new(ts.clone());
    curves.insert_discount(DiscountCurve::flat(usd.clone(), 0.02, &ts).unwrap()).unwrap();
    curves.insert_discount(DiscountCurve::flat(eur.clone(), 0.01, &ts).unwrap()).unwrap();
    curves.insert_spread(SpreadCurve::flat(usd.clone(), eur.clone(), 0.002, &ts).unwrap()).unwrap();
    curves.insert_spot_fx(usd.clone(), eur.clone(), 100.0).unwrap();
    let mut vols = VolatilitySpec::new(3, n).unwrap();
    vols.set_collateral(&usd, Loadings::flat(n, &[0.01, 0.0, 0.0]).unwrap()).unwrap();
    vols.set_collateral(&eur, Loadings::flat(n, &[0.0, 0.01, 0.0]).unwrap()).unwrap();
    vols.set_spread(&usd, &eur, Loadings::flat(n, &[0.0, 0.0, 0.003]).unwrap()).unwrap();
    vols.set_fx(&usd, &eur, vec![0.06, -0.08, 0.0]).unwrap();
    complete_reverse_spreads(&mut curves, &mut vols, &usd).unwrap();
    let model = Model::new(&curves, &vols, &usd).unwrap();

    let mut specs = Vec::new();
    for coll in [&usd, &eur] {
        let f = fx_forward(
            &curves,
            &FxForwardSpec {
                pay: usd.clone(),
                receive: eur.clone(),
                collateral: coll.clone(),
                maturity: 2.0,
            },
        )
        .unwrap();
        for m in [0.8, 1.0, 1.2] {
            specs.push(FxOptionSpec {
                domestic: usd.clone(),
                foreign: eur.clone(),
                strike: m * f,
                maturity: 2.0,
                collateral: coll.clone(),
                kind: OptionKind::Call,
            });
        }
    }
    let claims: Vec<_> = specs.iter().map(|s| fx_option_claim(&model, s).unwrap()).collect();
    let cfg = SimulationConfig {
        paths: PATHS,
        seed: SEED,
        ..SimulationConfig::default()
    };
    let est = simulate(&model, &cfg, &claims).unwrap();
    let mut worst_z: f64 = 0.0;
    let mut worst_se: f64 = 0.0;
    for (s, e) in specs.iter().zip(&est) {
        let black = fx_option_black(&curves, &vols, s).unwrap();
        worst_z = worst_z.max(((e.mean - black) / e.std_error).abs());
        worst_se = worst_se.max(e.std_error);
    }
    let (fast, time) = within(Duration::from_secs(60), start);
    outcome(
        worst_z < 3.0 && worst_se < 0.15 && fast,
        format!("6 options, worst |diff|/SE = {worst_z:.2} (< 3), max SE = {worst_se:.4} (< 0.15), {time}"),
    )
}

// 4. Triangle identity with a common collateral currency.
fn triangle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    let ts = TenorStructure::uniform(8, 0.5).unwrap();
    let names = ["USD", "EUR", "JPY"];
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let mut curves = CurveSet::new(ts.clone());
        let random_pillars = |rng: &mut StdRng, lo: f64, hi: f64| -> Vec<(f64, f64)> {
            let mut acc = 0.0;
            let mut out = vec![(0.0, 1.0)];
            for m in 0..8 {
                acc += rng.random_range(lo..hi) * ts.accruals()[m];
                out.push((ts.node(m + 1), (-acc).exp()));
            }
            out
        };
        for name in names {
            let p = random_pillars(&mut rng, -0.01, 0.05);
            curves.insert_discount(DiscountCurve::new(ccy(name), p).unwrap()).unwrap();
        }
        for name in &names[..2] {
            let p = random_pillars(&mut rng, -0.01, 0.01);
            curves.insert_spread(SpreadCurve::new(ccy(name), ccy("JPY"), p).unwrap()).unwrap();
        }
        curves.insert_spot_fx(ccy("USD"), ccy("EUR"), rng.random_range(0.5..2.0)).unwrap();
        curves.insert_spot_fx(ccy("EUR"), ccy("JPY"), rng.random_range(0.001..0.02)).unwrap();
        let fwd = |i: &str, j: &str, t: f64| {
            fx_forward(
                &curves,
                &FxForwardSpec {
                    pay: ccy(i),
                    receive: ccy(j),
                    collateral: ccy("JPY"),
                    maturity: t,
                },
            )
            .unwrap()
        };
        for &t in ts.nodes() {
            let ratio = fwd("USD", "EUR", t) * fwd("EUR", "JPY", t) / fwd("USD", "JPY", t);
            worst = worst.max((ratio - 1.0).abs());
        }
    }
    outcome(worst < 1e-14, format!("50 random markets x 9 nodes, max |ratio - 1| = {worst:.2e} (< 1e-14)"))
}

/// Two currencies on an annual grid: 8 OIS quotes each and 8 FX forwards
/// on JPY per USD collateralized in USD.
fn market_csv() -> String {
    let mut lines = vec!["record,currency,counter,collateral,time,value".to_string(), "base,USD,,,,".into()];
    for t in 1..=8 {
        lines.push(format!("tenor,,,,{t},"));
    }
    let usd = [0.0150, 0.0165, 0.0178, 0.0190, 0.0200, 0.0208, 0.0215, 0.0220];
    let jpy = [0.0010, 0.0012, 0.0015, 0.0019, 0.0024, 0.0029, 0.0034, 0.0038];
    for (t, r) in usd.iter().enumerate() {
        lines.push(format!("ois,USD,,,{},{r}", t + 1));
    }
    for (t, r) in jpy.iter().enumerate() {
        lines.push(format!("ois,JPY,,,{},{r}", t + 1));
    }
    for t in 1..=8 {
        lines.push(format!("libor_ois,USD,,,{t},{}", 0.002 + 0.0001 * t as f64));
        lines.push(format!("equity_forward,USD,,,{t},{}", 4500.0 * (0.012 * t as f64).exp()));
    }
    lines.push("spot_fx,JPY,USD,,,105.0".into());
    let fwd = [103.2, 101.5, 99.6, 97.5, 95.1, 92.8, 90.3, 87.6];
    for (t, f) in fwd.iter().enumerate() {
        lines.push(format!("fx_forward,JPY,USD,USD,{},{f}", t + 1));
    }
    lines.join("\n") + "\n"
}

// 5. Bootstrap round trip.
fn bootstrap_round_trip() -> Outcome {
    let outcome_ = bootstrap_market("market.csv", &market_csv()).unwrap();
    let curves = &outcome_.curve_file.curves;
    let n_ois = outcome_.residuals.iter().filter(|r| r.instrument.starts_with("OIS")).count();
    let n_fx = outcome_.residuals.iter().filter(|r| r.instrument.starts_with("FX")).count();
    let max_res = outcome_.max_residual();
    // Y^(JPY,USD)(T) = (spot / F) D^(USD)(T) / D^(JPY)(T) for quotes in JPY per USD.
    let y = curves.spread_curve(&ccy("JPY"), &ccy("USD")).unwrap();
    let (d_usd, d_jpy) = (curves.discount_curve(&ccy("USD")).unwrap(), curves.discount_curve(&ccy("JPY")).unwrap());
    let fwd = [103.2, 101.5, 99.6, 97.5, 95.1, 92.8, 90.3, 87.6];
    let mut worst_inv: f64 = 0.0;
    for (k, f) in fwd.iter().enumerate() {
        let t = (k + 1) as f64;
        let expect = (1.0 / f) / (1.0 / 105.0) * d_usd.discount(t).unwrap() / d_jpy.discount(t).unwrap();
        worst_inv = worst_inv.max((y.value(t).unwrap() / expect - 1.0).abs());
    }
    outcome(
        n_ois == 16 && n_fx == 8 && max_res < 1e-12 && worst_inv < 1e-15,
        format!("{n_ois} OIS + {n_fx} FX quotes, max residual {max_res:.2e} (< 1e-12), pillar inversion error {worst_inv:.1e}"),
    )
}

// 6. Foreign bond through the base measure and spot conversion.
fn measure_change() -> Outcome {
    let (curves, vols) = martingale_market();
    let model = Model::new(&curves, &vols, &ccy("USD")).unwrap();
    let cfg = SimulationConfig {
        paths: PATHS,
        seed: SEED,
        ..SimulationConfig::default()
    };
    let spot = curves.spot_fx(&ccy("USD"), &ccy("JPY")).unwrap();
    let t = curves.tenor().horizon();
    let est = zcb_mc(&model, &cfg, &ccy("JPY"), &ccy("JPY"), t).unwrap();
    let target = spot * curves.discount_curve(&ccy("JPY")).unwrap().discount(t).unwrap();
    let (mean, se) = (spot * est.mean, spot * est.std_error);
    let z = (mean - target) / se;
    outcome(
        z.abs() < 3.0,
        format!("f_x(0) D(0,{t}) = {target:.10}, MC = {mean:.10} +/- {se:.2e}, |z| = {:.2} (< 3)", z.abs()),
    )
}

fn chjm(dir: &Path, args: &[&str], workers: Option<&str>) -> std::process::Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_chjm"));
    cmd.current_dir(dir).args(args).env_remove("CHJM_WORKERS");
    if let Some(w) = workers {
        cmd.env("CHJM_WORKERS", w);
    }
    cmd.output().expect("binary runs")
}

const INSTRUMENTS: &str = "\
id,type,currency,counter,collateral,maturity,strike,kind
zcb-usd,zcb,USD,,USD,5,,
zcb-jpy-usd,zcb,JPY,,USD,3,,
zcb-usd-jpy,zcb,USD,,JPY,8,,
fwd-usd,fx_forward,JPY,USD,USD,4,,
fwd-jpy,fx_forward,JPY,USD,JPY,4,,
call,fx_option,JPY,USD,USD,2,100,call
put,fx_option,JPY,USD,JPY,6,95,put
equity,equity_forward,USD,,,3,,
";

const VOLS: &str = r#"
factors = 3

[currency.USD]
collateral = [0.008, 0.003, 0.0]
libor_ois = [0.2, 0.0, 0.0]
equity = [0.05, 0.0, 0.15]

[currency.JPY]
collateral = [0.002, 0.004, 0.0]

[pair."JPY/USD"]
spread = [0.0, 0.002, 0.001]

[pair."USD/JPY"]
fx = [0.03, -0.02, 0.08]
"#;

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("market.csv"), market_csv()).unwrap();
    std::fs::write(dir.path().join("instruments.csv"), INSTRUMENTS).unwrap();
    std::fs::write(dir.path().join("vols.toml"), VOLS).unwrap();
    std::fs::write(dir.path().join("zero.toml"), "factors = 2\n").unwrap();
    let out = chjm(dir.path(), &["bootstrap", "market.csv", "--out", "curves.json"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir
}

// 7. Zero volatilities reproduce the curves exactly.
fn deterministic_limit() -> Outcome {
    let dir = workspace();
    let base = ["--curves", "curves.json", "--vols", "zero.toml", "--paths", "2000"];
    let price = chjm(dir.path(), &[&["price"][..], &base, &["--instruments", "instruments.csv", "--out", "p.json"]].concat(), None);
    let diag = chjm(dir.path(), &[&["diagnose"][..], &base, &["--out", "d.json"]].concat(), None);
    if !price.status.success() || !diag.status.success() {
        return outcome(
            false,
            format!(
                "price exit {:?}, diagnose exit {:?}: {}{}",
                price.status.code(),
                diag.status.code(),
                String::from_utf8_lossy(&price.stderr),
                String::from_utf8_lossy(&diag.stderr)
            ),
        );
    }
    let p: Value = serde_json::from_slice(&std::fs::read(dir.path().join("p.json")).unwrap()).unwrap();
    let d: Value = serde_json::from_slice(&std::fs::read(dir.path().join("d.json")).unwrap()).unwrap();
    let inst = p["instruments"].as_array().unwrap();
    let exact_prices = inst.iter().all(|r| r["mc"]["std_error"] == 0.0 && r["diff_in_se"] == 0.0);
    let checks = d["checks"].as_array().unwrap();
    let zero_z = checks.iter().all(|c| c["z"] == 0.0 && c["std_error"] == 0.0);
    outcome(
        exact_prices && zero_z,
        format!(
            "{} prices with SE = 0 matching closed form: {exact_prices}; {} diagnose rows with z = 0: {zero_z}",
            inst.len(),
            checks.len()
        ),
    )
}

// 8. Reports do not depend on the worker count.
fn reproducibility() -> Outcome {
    let dir = workspace();
    let run = |workers: &str, out: &str| {
        let args = [
            "price", "--curves", "curves.json", "--vols", "vols.toml", "--instruments", "instruments.csv", "--paths",
            "20000", "--method", "both", "--out", out,
        ];
        let o = chjm(dir.path(), &args, Some(workers));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(dir.path().join(out)).unwrap()
    };
    let one = run("1", "w1.json");
    let three = run("3", "w3.json");
    let seven = run("7", "w7.json");
    outcome(
        one == three && one == seven,
        format!("reports with 1, 3 and 7 workers byte-identical: {} ({} bytes)", one == three && one == seven, one.len()),
    )
}

// 9. Flipping the convexity term is detected.
fn negative_control() -> Outcome {
    let (curves, vols) = martingale_market();
    let model = Model::with_drift_hook(&curves, &vols, &ccy("USD"), DriftHook::FlipConvexity).unwrap();
    let checks = martingale_suite(&model, &antithetic_cfg()).unwrap();
    let d8 = checks.iter().find(|c| c.asset == "D/C[USD]" && c.horizon == 4.0).unwrap();
    outcome(d8.z.abs() > 4.0, format!("D/C[USD] at T_8: |z| = {:.1} (> 4)", d8.z.abs()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("drift telescoping", telescoping),
        ("martingale suite", martingale),
        ("Black vs MC FX options", black_vs_mc),
        ("triangle identity", triangle),
        ("bootstrap round trip", bootstrap_round_trip),
        ("measure change", measure_change),
        ("deterministic limit", deterministic_limit),
        ("reproducibility", reproducibility),
        ("negative control", negative_control),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !o.pass {
            failed += 1;
        }
        println!("criterion {}: {} {name}: {}", k + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
