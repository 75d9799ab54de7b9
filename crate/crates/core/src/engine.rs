//! Reproducible Monte Carlo driver.
//!
//! Increments come from a counter-based generator keyed by
//! `(seed, path, step)`, paths are evaluated in fixed-size chunks and the
//! per-chunk moments are merged in chunk order, so results are bit-identical
//! for any number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::Currency;
use crate::error::{Error, Result};
use crate::model::{CcyId, Model, PairId, PathState};

/// Paths (or antithetic pairs) per reduction chunk. Part of the
/// reproducibility contract: changing it changes the low bits of results.
pub const CHUNK: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub paths: usize,
    /// Euler sub-steps per grid interval.
    pub substeps: usize,
    pub seed: u64,
    pub antithetic: bool,
    /// Thread count; `None` uses the ambient rayon pool.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            paths: 100_000,
            substeps: 1,
            seed: 42,
            antithetic: false,
            workers: None,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths < 2 {
            return Err(Error::Config(format!("path count must be at least 2, got {}", self.paths)));
        }
        if self.antithetic && !self.paths.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "antithetic sampling needs an even path count, got {}",
                self.paths
            )));
        }
        if self.substeps == 0 {
            return Err(Error::Config("sub-steps per interval must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("worker count must be positive".into()));
        }
        Ok(())
    }

    fn units(&self) -> usize {
        if self.antithetic {
            self.paths / 2
        } else {
            self.paths
        }
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub paths: usize,
    /// Currency the value is expressed in.
    pub currency: Currency,
}

impl PriceEstimate {
    /// `(mean - target) / SE`, taken as zero when the standard error vanishes
    /// and the mean agrees with the target up to rounding.
    pub fn z_score(&self, target: f64) -> f64 {
        z_score(self.mean, self.std_error, target)
    }

    fn scaled(mut self, k: f64) -> Self {
        self.mean *= k;
        self.std_error *= k.abs();
        self
    }
}

/// Relative tolerance under which a zero-variance estimate counts as exact.
pub const EXACT_TOLERANCE: f64 = 1e-12;

pub fn z_score(mean: f64, std_error: f64, target: f64) -> f64 {
    let diff = mean - target;
    if std_error > 0.0 {
        diff / std_error
    } else if diff.abs() <= EXACT_TOLERANCE * target.abs().max(f64::MIN_POSITIVE) {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// How a payoff observed at its maturity is turned into a time-0 value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Deflator {
    /// Payoff in `currency`, collateralized in `collateral`: converted to the
    /// base currency at spot, divided by `C^{(base, collateral)}` and
    /// converted back at the time-0 spot rate.
    Collateral { currency: CcyId, collateral: CcyId },
    /// Payoff divided by the account `C^{(currency)}` of its own currency,
    /// weighted by the density of that currency's measure.
    OwnCollateral(CcyId),
    /// Payoff divided by the pair account `C^{(m,k)}` of currency `m`,
    /// weighted by the density of the measure of `m`.
    OwnPair(PairId),
    /// The payoff is already a time-0 quantity.
    None,
}

type Payoff = Box<dyn Fn(&PathState) -> Result<f64> + Send + Sync>;

/// A payoff observed at grid node `maturity`.
pub struct Claim {
    pub maturity: usize,
    pub deflator: Deflator,
    payoff: Payoff,
}

impl std::fmt::Debug for Claim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Claim")
            .field("maturity", &self.maturity)
            .field("deflator", &self.deflator)
            .finish_non_exhaustive()
    }
}

impl Claim {
    pub fn new(
        maturity: usize,
        deflator: Deflator,
        payoff: impl Fn(&PathState) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            maturity,
            deflator,
            payoff: Box::new(payoff),
        }
    }
}

/// Resolved deflator: everything needed per path, in log space.
#[derive(Clone, Copy)]
enum Plan {
    None,
    Collateral { currency: CcyId, account: Account },
    Own { currency: CcyId, account: Account },
}

#[derive(Clone, Copy)]
enum Account {
    Base,
    Pair(PairId),
    Currency(CcyId),
}

fn log_account(state: &PathState, a: Account) -> f64 {
    match a {
        Account::Base => state.log_collateral_account(CcyId::BASE),
        Account::Currency(c) => state.log_collateral_account(c),
        Account::Pair(p) => state.log_pair_account(p),
    }
}

fn plan(model: &Model, claim: &Claim) -> Result<(Plan, f64, Currency)> {
    let n = model.tenor().n_buckets();
    if claim.maturity > n {
        return Err(Error::Config(format!(
            "claim maturity node {} beyond the grid horizon node {n}",
            claim.maturity
        )));
    }
    let check = |c: CcyId| -> Result<()> {
        if c.index() >= model.currencies().len() {
            return Err(Error::Config(format!("unknown currency id {}", c.index())));
        }
        Ok(())
    };
    let spot = |c: CcyId| model.initial_state().fx(c);
    Ok(match claim.deflator {
        Deflator::None => (Plan::None, 1.0, model.base().clone()),
        Deflator::Collateral { currency, collateral } => {
            check(currency)?;
            check(collateral)?;
            let account = if collateral == CcyId::BASE {
                Account::Base
            } else {
                Account::Pair(model.base_pair(collateral).expect("foreign currencies have a base pair"))
            };
            (
                Plan::Collateral { currency, account },
                1.0 / spot(currency),
                model.currency(currency).clone(),
            )
        }
        Deflator::OwnCollateral(currency) => {
            check(currency)?;
            (
                Plan::Own {
                    currency,
                    account: Account::Currency(currency),
                },
                1.0 / spot(currency),
                model.currency(currency).clone(),
            )
        }
        Deflator::OwnPair(pair) => {
            if pair.index() >= model.pairs().count() {
                return Err(Error::Config(format!("unknown pair id {}", pair.index())));
            }
            let currency = model.pair_currency(pair);
            (
                Plan::Own {
                    currency,
                    account: Account::Pair(pair),
                },
                1.0 / spot(currency),
                model.currency(currency).clone(),
            )
        }
    })
}

/// Deflated value of a payoff, before the final division by the time-0 spot.
fn deflate(model: &Model, state: &PathState, plan: Plan, payoff: f64) -> f64 {
    match plan {
        Plan::None => payoff,
        Plan::Collateral { currency, account } => {
            payoff * state.fx(currency) * (-log_account(state, account)).exp()
        }
        Plan::Own { currency, account } => {
            // f_x^{(b,m)}(T) C^{(m)}(T) / C^{(b,m)}(T) is the measure density.
            let log_density = match model.base_pair(currency) {
                None => 0.0,
                Some(bp) => {
                    state.log_collateral_account(currency) - state.log_pair_account(bp)
                }
            };
            payoff * state.fx(currency) * (log_density - log_account(state, account)).exp()
        }
    }
}

/// `d` independent standard normals for `(seed, path, step)`.
pub fn gaussian_increments(seed: u64, path: u64, step: u64, d: usize) -> Vec<f64> {
    let mut rng = path_rng(seed, path);
    let mut out = vec![0.0; d];
    fill_normals(&mut rng, step, &mut out);
    out
}

fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

fn fill_normals(rng: &mut ChaCha8Rng, step: u64, out: &mut [f64]) {
    rng.set_word_pos(u128::from(step) << 32);
    for z in out.iter_mut() {
        *z = StandardNormal.sample(rng);
    }
}

/// Runs one path, calling `visit` at `t = 0` and on every grid node.
///
/// `unit` selects the random stream; `sign = -1` gives the antithetic
/// partner of the same stream.
pub fn simulate_path(
    model: &Model,
    seed: u64,
    unit: u64,
    sign: f64,
    substeps: usize,
    mut visit: impl FnMut(usize, &PathState) -> Result<()>,
) -> Result<()> {
    let mut state = model.initial_state().clone();
    let mut rng = path_rng(seed, unit);
    run_path(model, &mut state, &mut rng, sign, substeps, &mut visit)
}

fn run_path(
    model: &Model,
    state: &mut PathState,
    rng: &mut ChaCha8Rng,
    sign: f64,
    substeps: usize,
    visit: &mut impl FnMut(usize, &PathState) -> Result<()>,
) -> Result<()> {
    let ts = model.tenor();
    let d = model.dim();
    let mut z = vec![0.0; d];
    let mut dw = vec![0.0; d];
    visit(0, state)?;
    let mut step = 0u64;
    for q in 1..=ts.n_buckets() {
        let (t0, t1) = (ts.node(q - 1), ts.node(q));
        for sub in 0..substeps {
            let target = if sub + 1 == substeps {
                t1
            } else {
                t0 + (t1 - t0) * (sub + 1) as f64 / substeps as f64
            };
            let dt = target - state.time();
            fill_normals(rng, step, &mut z);
            let scale = sign * dt.sqrt();
            for (w, x) in dw.iter_mut().zip(&z) {
                *w = scale * x;
            }
            model.evolve_step(state, dt, &dw)?;
            step += 1;
        }
        visit(q, state)?;
    }
    Ok(())
}

/// Running count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.count as f64, other.count as f64);
        self.mean += delta * nb / n as f64;
        self.m2 += other.m2 + delta * delta * na * nb / n as f64;
        self.count = n;
    }

    fn std_error(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let var = (self.m2 / (self.count - 1) as f64).max(0.0);
        (var / self.count as f64).sqrt()
    }
}

/// Prices every claim on one shared set of paths.
pub fn simulate(model: &Model, cfg: &SimulationConfig, claims: &[Claim]) -> Result<Vec<PriceEstimate>> {
    cfg.validate()?;
    let plans: Vec<(Plan, f64, Currency)> = claims.iter().map(|c| plan(model, c)).collect::<Result<_>>()?;
    let units = cfg.units();
    let chunks = units.div_ceil(CHUNK);

    let run_chunk = |chunk: usize| -> Result<Vec<Moments>> {
        let mut moments = vec![Moments::default(); claims.len()];
        let mut values = vec![0.0; claims.len()];
        let mut state = model.initial_state().clone();
        let signs: &[f64] = if cfg.antithetic { &[1.0, -1.0] } else { &[1.0] };
        let weight = 1.0 / signs.len() as f64;
        for unit in chunk * CHUNK..((chunk + 1) * CHUNK).min(units) {
            values.iter_mut().for_each(|v| *v = 0.0);
            for &sign in signs {
                let mut rng = path_rng(cfg.seed, unit as u64);
                state.clone_from(model.initial_state());
                let mut visit = |node: usize, st: &PathState| -> Result<()> {
                    for (k, claim) in claims.iter().enumerate() {
                        if claim.maturity == node {
                            let x = (claim.payoff)(st)?;
                            values[k] += weight * deflate(model, st, plans[k].0, x);
                        }
                    }
                    Ok(())
                };
                run_path(model, &mut state, &mut rng, sign, cfg.substeps, &mut visit)?;
            }
            for (m, v) in moments.iter_mut().zip(&values) {
                m.push(*v);
            }
        }
        Ok(moments)
    };

    let collect = || -> Result<Vec<Vec<Moments>>> { (0..chunks).into_par_iter().map(run_chunk).collect() };
    let per_chunk = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {w} worker threads: {e}")))?
            .install(collect)?,
        None => collect()?,
    };

    let mut total = vec![Moments::default(); claims.len()];
    for chunk in &per_chunk {
        for (t, m) in total.iter_mut().zip(chunk) {
            t.merge(m);
        }
    }
    Ok(total
        .iter()
        .zip(plans)
        .map(|(m, (_, scale, currency))| {
            PriceEstimate {
                mean: m.mean,
                std_error: m.std_error(),
                paths: cfg.paths,
                currency,
            }
            .scaled(scale)
        })
        .collect())
}
