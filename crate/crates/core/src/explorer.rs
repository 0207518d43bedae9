//! Exact anytime analysis of expected outcomes and termination probability.
//!
//! Two routes compute the same quantities:
//!
//! * the truncated double sums [`expected_partial`] / [`termination_partial`],
//!   which add up the terminal contributions of every `(i, j)` with
//!   `i ≤ y1` (choice-string index under [`h`](crate::semantics::h)) and
//!   `j ≤ y2` (step count), and
//! * the frontier exploration [`explore`], which unfolds the execution tree
//!   breadth-first and reports terminated, live, and certified-divergent mass.
//!
//! All sums are exact rationals, so every reported value is a true lower bound.

use std::collections::HashMap;

use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::rational::Rational;
use crate::semantics::{h, h_inv_checked, run, step, step_prob, weight, Control, Dir, State, StepOutcome, Valuation};
use crate::syntax::{Program, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ExplorerError {
    #[error("delta must be strictly positive")]
    DeltaNonPositive,
    #[error("node budget must be at least 1")]
    EmptyBudget,
}

/// Bounds for the truncated double sum: `y1` caps the choice-string index,
/// `y2` caps the number of steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Coverage {
    pub y1: u64,
    pub y2: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Sums {
        y1: u64,
        y2: u64,
    },
    /// Number of states the frontier exploration may expand.
    Nodes(u64),
}

#[derive(Debug, Clone)]
pub struct ExploreOptions {
    pub node_budget: u64,
    /// States at this depth are left on the frontier unexpanded.
    pub max_depth: Option<u64>,
    pub certify_divergence: bool,
    /// Step limit for each divergence certificate attempt.
    pub certify_limit: u64,
    pub workers: usize,
}

impl ExploreOptions {
    pub fn with_nodes(node_budget: u64) -> Self {
        ExploreOptions { node_budget, max_depth: None, certify_divergence: false, certify_limit: 10_000, workers: 1 }
    }

    pub fn max_depth(mut self, depth: u64) -> Self {
        self.max_depth = Some(depth);
        self
    }

    pub fn certify(mut self, on: bool) -> Self {
        self.certify_divergence = on;
        self
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetUsed {
    pub expanded: u64,
    /// Every reachable state with at most this many steps has been generated.
    pub depth_completed: u64,
    /// True when exploration stopped in the middle of a layer.
    pub partial_layer: bool,
    /// True when no live state remains.
    pub exhausted: bool,
    /// Largest choice-string index over generated states of depth at most
    /// `depth_completed`; `None` if it does not fit in `u64`.
    pub max_trace_index: Option<u64>,
    /// Largest (index, depth) over all terminal states found.
    pub terminal_cover: Option<Coverage>,
}

impl BudgetUsed {
    /// Double-sum bounds whose value equals this report's terminated and
    /// expectation masses. Only available when exploration ended on a layer
    /// boundary.
    pub fn coverage(&self) -> Option<Coverage> {
        if self.partial_layer {
            return None;
        }
        Some(Coverage { y1: self.max_trace_index?, y2: self.depth_completed })
    }
}

/// Result of an anytime analysis run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundReport {
    pub terminated_mass: Rational,
    pub live_mass: Rational,
    pub divergent_mass: Rational,
    /// Lower bound on the expected outcome of each queried variable.
    pub expectation_mass: Vec<(Var, Rational)>,
    pub budget_used: BudgetUsed,
}

impl BoundReport {
    pub fn expectation(&self, v: &Var) -> Option<&Rational> {
        self.expectation_mass.iter().find(|(w, _)| w == v).map(|(_, m)| m)
    }

    /// Upper bound on the termination probability.
    pub fn termination_upper(&self) -> Rational {
        &self.terminated_mass + &self.live_mass
    }

    pub fn mass_is_conserved(&self) -> bool {
        &self.terminated_mass + &self.live_mass + &self.divergent_mass == Rational::one()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LexpVerdict {
    Witness { y1: u64, y2: u64, partial_sum: Rational },
    Unknown { budget_exhausted: Budget, best_sum: Rational },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UexpVerdict {
    /// Some truncation reached `q - delta`.
    Refuted {
        y1: u64,
        y2: u64,
        partial_sum: Rational,
    },
    NotRefuted {
        best_sum: Rational,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DivergenceVerdict {
    /// The deterministic continuation revisits a (control, valuation) pair:
    /// first seen `entry` steps after the queried state, again `period`
    /// steps later.
    Certified {
        entry: u64,
        period: u64,
    },
    Unknown,
}

/// Successors of a non-terminal state, in `L`, `R` order for choices.
fn successors(s: &State) -> Vec<State> {
    if s.control.is_choice_headed() {
        vec![step_prob(s, Dir::L).expect("choice-headed"), step_prob(s, Dir::R).expect("choice-headed")]
    } else {
        match step(s).expect("not choice-headed") {
            StepOutcome::Next(next) => vec![next],
            StepOutcome::Top => Vec::new(),
        }
    }
}

fn trace_index_within(s: &State, y1: u64) -> bool {
    h_inv_checked(&s.trace).is_some_and(|i| i <= y1)
}

/// Terminal mass and per-variable expectation mass of the double sum
/// truncated at `i ≤ y1`, `j ≤ y2`.
///
/// Walks the execution tree depth-first; a branch is cut once its trace index
/// exceeds `y1`, which is sound because the index is monotone in length.
pub fn truncated_sums(p: &Program, vars: &[Var], y1: u64, y2: u64) -> (Rational, Vec<Rational>) {
    let mut terminated = Rational::zero();
    let mut expectation = vec![Rational::zero(); vars.len()];
    let mut stack = vec![(State::initial(p), 0u64)];
    while let Some((s, depth)) = stack.pop() {
        if s.is_terminal() {
            for (acc, v) in expectation.iter_mut().zip(vars) {
                *acc += s.env.get(v) * &s.prob;
            }
            terminated += &s.prob;
            continue;
        }
        if depth == y2 {
            continue;
        }
        for next in successors(&s).into_iter().rev() {
            if !next.is_zero_mass() && trace_index_within(&next, y1) {
                stack.push((next, depth + 1));
            }
        }
    }
    (terminated, expectation)
}

/// `Σ_{i ≤ y1} Σ_{j ≤ y2} ℘(run(⟨P, η₀, 1, ε⟩, j, h(i)), v)`.
pub fn expected_partial(p: &Program, v: &Var, y1: u64, y2: u64) -> Rational {
    let (_, mut exp) = truncated_sums(p, std::slice::from_ref(v), y1, y2);
    exp.pop().unwrap()
}

/// `Σ_{i ≤ y1} Σ_{j ≤ y2} α(run(⟨P, η₀, 1, ε⟩, j, h(i)))`.
pub fn termination_partial(p: &Program, y1: u64, y2: u64) -> Rational {
    truncated_sums(p, &[], y1, y2).0
}

/// Literal evaluation of the double sums through [`run`], one call per
/// `(i, j)` pair. Exponentially slower than [`truncated_sums`]; kept as the
/// reference the fast paths are checked against.
pub mod reference {
    use super::*;
    use crate::semantics::alpha;

    pub fn expected_double_sum(p: &Program, v: &Var, y1: u64, y2: u64) -> Rational {
        let start = State::initial(p);
        let mut total = Rational::zero();
        for i in 0..=y1 {
            let w = h(i);
            for j in 0..=y2 {
                total += weight(&run(&start, j, &w), v);
            }
        }
        total
    }

    pub fn termination_double_sum(p: &Program, y1: u64, y2: u64) -> Rational {
        let start = State::initial(p);
        let mut total = Rational::zero();
        for i in 0..=y1 {
            let w = h(i);
            for j in 0..=y2 {
                total += alpha(&run(&start, j, &w));
            }
        }
        total
    }
}

/// Breadth-first unfolding of the execution tree from `⟨P, η₀, 1, ε⟩`.
///
/// Layers are expanded in order; within a layer states keep the order in
/// which they were generated, so the result does not depend on `workers`.
pub fn explore(p: &Program, opts: &ExploreOptions, vars: &[Var]) -> Result<BoundReport, ExplorerError> {
    if opts.node_budget == 0 {
        return Err(ExplorerError::EmptyBudget);
    }
    let pool = (opts.workers > 1)
        .then(|| rayon::ThreadPoolBuilder::new().num_threads(opts.workers).build().expect("thread pool"));

    let mut terminated = Rational::zero();
    let mut expectation = vec![Rational::zero(); vars.len()];
    let mut terminal_cover: Option<Coverage> = None;
    let root = State::initial(p);
    let mut max_index = h_inv_checked(&root.trace);
    let mut layer = vec![root];
    let mut frontier: Vec<State> = Vec::new();
    let mut depth = 0u64;
    let mut expanded = 0u64;
    let mut partial_layer = false;

    loop {
        if layer.is_empty() || opts.max_depth.is_some_and(|d| depth >= d) || expanded >= opts.node_budget {
            frontier.append(&mut layer);
            break;
        }
        let take = (opts.node_budget - expanded).min(layer.len() as u64) as usize;
        let rest = layer.split_off(take);
        let children: Vec<Vec<State>> = match &pool {
            Some(pool) => pool.install(|| layer.par_iter().map(successors).collect()),
            None => layer.iter().map(successors).collect(),
        };
        expanded += take as u64;

        let mut next_layer = Vec::new();
        let mut layer_max = max_index;
        for child in children.into_iter().flatten() {
            if child.is_zero_mass() {
                continue;
            }
            let index = h_inv_checked(&child.trace);
            layer_max = layer_max.zip(index).map(|(a, b)| a.max(b));
            if child.is_terminal() {
                for (acc, v) in expectation.iter_mut().zip(vars) {
                    *acc += child.env.get(v) * &child.prob;
                }
                terminated += &child.prob;
                terminal_cover = match (terminal_cover, index) {
                    (None, Some(i)) => Some(Coverage { y1: i, y2: depth + 1 }),
                    (Some(c), Some(i)) => Some(Coverage { y1: c.y1.max(i), y2: depth + 1 }),
                    _ => None,
                };
            } else {
                next_layer.push(child);
            }
        }

        if !rest.is_empty() {
            partial_layer = true;
            frontier = rest;
            frontier.append(&mut next_layer);
            break;
        }
        max_index = layer_max;
        layer = next_layer;
        depth += 1;
    }

    let mut live = Rational::zero();
    let mut divergent = Rational::zero();
    if opts.certify_divergence {
        let verdicts: Vec<bool> = match &pool {
            Some(pool) => pool.install(|| {
                frontier
                    .par_iter()
                    .map(|s| certify_divergence_within(s, opts.certify_limit) != DivergenceVerdict::Unknown)
                    .collect()
            }),
            None => frontier
                .iter()
                .map(|s| certify_divergence_within(s, opts.certify_limit) != DivergenceVerdict::Unknown)
                .collect(),
        };
        for (s, certified) in frontier.iter().zip(verdicts) {
            if certified {
                divergent += &s.prob;
            } else {
                live += &s.prob;
            }
        }
    } else {
        for s in &frontier {
            live += &s.prob;
        }
    }

    let report = BoundReport {
        terminated_mass: terminated,
        live_mass: live,
        divergent_mass: divergent,
        expectation_mass: vars.iter().cloned().zip(expectation).collect(),
        budget_used: BudgetUsed {
            expanded,
            depth_completed: depth,
            partial_layer,
            exhausted: frontier.is_empty(),
            max_trace_index: max_index,
            terminal_cover,
        },
    };
    debug_assert!(report.mass_is_conserved());
    Ok(report)
}

/// Smallest `y` in `0..=hi` with `pred(y)`, given `pred` is monotone and
/// `pred(hi)` holds.
fn least_satisfying(hi: u64, pred: impl Fn(u64) -> bool) -> u64 {
    let (mut lo, mut hi) = (0u64, hi);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Smallest truncation point (minimising `y2` first, then `y1`) whose
/// expected partial sum satisfies `pred`, assuming it holds at `(y1, y2)`.
fn least_witness(p: &Program, v: &Var, y1: u64, y2: u64, pred: impl Fn(&Rational) -> bool) -> (u64, u64, Rational) {
    let y2 = least_satisfying(y2, |j| pred(&expected_partial(p, v, y1, j)));
    let y1 = least_satisfying(y1, |i| pred(&expected_partial(p, v, i, y2)));
    (y1, y2, expected_partial(p, v, y1, y2))
}

fn search_sums(
    p: &Program,
    v: &Var,
    budget: Budget,
    pred: impl Fn(&Rational) -> bool,
) -> Result<Result<(u64, u64, Rational), Rational>, ExplorerError> {
    match budget {
        Budget::Sums { y1, y2 } => {
            let total = expected_partial(p, v, y1, y2);
            if pred(&total) {
                Ok(Ok(least_witness(p, v, y1, y2, pred)))
            } else {
                Ok(Err(total))
            }
        }
        Budget::Nodes(n) => {
            let report = explore(p, &ExploreOptions::with_nodes(n), std::slice::from_ref(v))?;
            let mass = report.expectation(v).cloned().unwrap_or_else(Rational::zero);
            match report.budget_used.terminal_cover {
                Some(c) if pred(&mass) => {
                    // The double sum at the terminal cover includes every
                    // terminal state the exploration found.
                    Ok(Ok((c.y1, c.y2, expected_partial(p, v, c.y1, c.y2))))
                }
                _ => Ok(Err(mass)),
            }
        }
    }
}

/// Searches for a truncation of the expected-outcome sum strictly above `q`.
///
/// A witness proves `q < E_P(v)`. `Unknown` says nothing beyond the budget.
pub fn lexp_semidecide(p: &Program, v: &Var, q: &Rational, budget: Budget) -> Result<LexpVerdict, ExplorerError> {
    Ok(match search_sums(p, v, budget, |sum| sum > q)? {
        Ok((y1, y2, partial_sum)) => LexpVerdict::Witness { y1, y2, partial_sum },
        Err(best_sum) => LexpVerdict::Unknown { budget_exhausted: budget, best_sum },
    })
}

/// Tests the candidate `(delta, ∀y1 ∀y2: q - delta > partial sum)` for
/// `q > E_P(v)` against every truncation within the budget.
pub fn uexp_refute(
    p: &Program,
    v: &Var,
    q: &Rational,
    delta: &Rational,
    budget: Budget,
) -> Result<UexpVerdict, ExplorerError> {
    if *delta <= Rational::zero() {
        return Err(ExplorerError::DeltaNonPositive);
    }
    let threshold = q - delta;
    Ok(match search_sums(p, v, budget, |sum| *sum >= threshold)? {
        Ok((y1, y2, partial_sum)) => UexpVerdict::Refuted { y1, y2, partial_sum },
        Err(best_sum) => UexpVerdict::NotRefuted { best_sum },
    })
}

pub const DEFAULT_CERTIFY_LIMIT: u64 = 10_000;

/// Sound but incomplete nontermination check: follows the choice-free
/// continuation of `s` and reports a cycle in (control, valuation).
pub fn certify_divergence(s: &State) -> DivergenceVerdict {
    certify_divergence_within(s, DEFAULT_CERTIFY_LIMIT)
}

pub fn certify_divergence_within(s: &State, limit: u64) -> DivergenceVerdict {
    let mut seen: HashMap<(Control, Valuation), u64> = HashMap::new();
    let mut cur = s.clone();
    for n in 0..=limit {
        if cur.is_terminal() || cur.control.is_choice_headed() {
            return DivergenceVerdict::Unknown;
        }
        if let Some(first) = seen.insert((cur.control.clone(), cur.env.clone()), n) {
            return DivergenceVerdict::Certified { entry: first, period: n - first };
        }
        cur = match step(&cur).expect("not choice-headed") {
            StepOutcome::Next(next) => next,
            StepOutcome::Top => return DivergenceVerdict::Unknown,
        };
    }
    DivergenceVerdict::Unknown
}
