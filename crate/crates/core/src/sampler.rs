//! Seeded Monte-Carlo execution, used as a statistical cross-check of the
//! exact explorer.
//!
//! Random source: ChaCha8 (`rand_chacha::ChaCha8Rng`). The key comes from
//! `SeedableRng::seed_from_u64(seed)` and run `n` uses stream `n`, so every
//! run has its own deterministic substream regardless of how runs are
//! scheduled. Each probabilistic choice consumes one `u64` draw `k` and goes
//! left iff `k / 2^64 < p`, compared exactly.

use num_bigint::BigInt;
use num_traits::One;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::rational::{to_f64, Rational};
use crate::semantics::{advance, Control, Dir, Valuation};
use crate::syntax::{Program, Var};

/// Identifier of the random-number algorithm, part of the output contract.
pub const RNG_ALGORITHM: &str = "chacha8-stream-per-run/seed_from_u64";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleConfig {
    pub n: u64,
    pub seed: u64,
    /// Maximum number of steps per run.
    pub fuel: u64,
    pub workers: usize,
}

impl SampleConfig {
    /// Panics unless `n ≥ 1` and `fuel ≥ 1`.
    pub fn new(n: u64, seed: u64, fuel: u64) -> Self {
        assert!(n >= 1 && fuel >= 1, "n and fuel must be positive");
        SampleConfig { n, seed, fuel, workers: 1 }
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// 95% normal-approximation half-width.
    pub ci_halfwidth: f64,
    /// Fraction of runs that exhausted their fuel.
    pub timeout_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRun {
    pub terminated: bool,
    pub env: Valuation,
    pub steps: u64,
}

/// Random stream for run `index` under `seed`.
pub fn run_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `draw / 2^64 < p`, exactly.
fn draw_goes_left(draw: u64, p: &Rational) -> bool {
    BigInt::from(draw) * p.denom() < p.numer() * (BigInt::one() << 64u32)
}

/// Executes `p` from the zero valuation, resolving choices with `rng`, for at
/// most `fuel` steps.
pub fn sample_run(p: &Program, rng: &mut impl RngCore, fuel: u64) -> SampleRun {
    let mut control = Control::from(p.clone());
    let mut env = Valuation::zero();
    let mut steps = 0;
    while steps < fuel {
        if control.is_done() {
            break;
        }
        let dir =
            chosen_probability(&control).map(|prob| if draw_goes_left(rng.next_u64(), prob) { Dir::L } else { Dir::R });
        let adv = advance(&control, &env, dir).expect("direction matches head statement");
        if let Some((v, value)) = adv.update {
            env.set(v, value);
        }
        control = adv.control;
        steps += 1;
    }
    SampleRun { terminated: control.is_done(), env, steps }
}

fn chosen_probability(control: &Control) -> Option<&Rational> {
    match control {
        Control::Done => None,
        Control::Stmt(p) => match p.as_ref() {
            Program::Choice(_, prob, _) => Some(prob),
            _ => None,
        },
        Control::Seq(first, _) => chosen_probability(first),
    }
}

fn runs(p: &Program, cfg: &SampleConfig) -> Vec<SampleRun> {
    let one = |i: u64| sample_run(p, &mut run_stream(cfg.seed, i), cfg.fuel);
    if cfg.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().expect("thread pool");
        pool.install(|| (0..cfg.n).into_par_iter().map(one).collect())
    } else {
        (0..cfg.n).map(one).collect()
    }
}

/// Mean and confidence half-width, summed in run order.
fn summarize(values: &[f64], timeouts: u64) -> Estimate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var =
        if values.len() > 1 { values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Estimate { mean, ci_halfwidth: 1.96 * (var / n).sqrt(), timeout_fraction: timeouts as f64 / n }
}

/// Runs that time out contribute 0, matching the exact analyzer's
/// lower-bound convention.
pub fn estimate_expectation(p: &Program, v: &Var, cfg: &SampleConfig) -> Estimate {
    let runs = runs(p, cfg);
    let timeouts = runs.iter().filter(|r| !r.terminated).count() as u64;
    let values: Vec<f64> = runs.iter().map(|r| if r.terminated { to_f64(&r.env.get(v)) } else { 0.0 }).collect();
    summarize(&values, timeouts)
}

/// Fraction of runs that terminate within the fuel.
pub fn estimate_termination(p: &Program, cfg: &SampleConfig) -> Estimate {
    let runs = runs(p, cfg);
    let timeouts = runs.iter().filter(|r| !r.terminated).count() as u64;
    let values: Vec<f64> = runs.iter().map(|r| if r.terminated { 1.0 } else { 0.0 }).collect();
    summarize(&values, timeouts)
}
