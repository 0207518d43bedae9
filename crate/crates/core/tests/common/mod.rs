#![allow(dead_code)]

use num_traits::{One, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use pgcl::rational::Rational;
use pgcl::semantics::{eval_arith, eval_bool, step, State, StepOutcome, Valuation};
use pgcl::syntax::{parse, ArithExpr, BoolExpr, Program, Var};

pub const FAIR: &str = "{x := 1} [1/2] {x := 0}";
pub const GEO: &str = "i := 0; {c := 0} [1/2] {c := 1}; while (c != 0) { i := i + 1; {c := 0} [1/2] {c := 1} }";
pub const DIVERGE: &str = "while (x = 0) { x := x }";

pub fn r(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

pub fn var(name: &str) -> Var {
    Var::new(name)
}

pub fn prog(src: &str) -> Program {
    parse(src).unwrap_or_else(|e| panic!("{src}: {e}"))
}

/// `2^-k`, computed by repeated halving.
pub fn half_pow(k: u32) -> Rational {
    (0..k).fold(Rational::one(), |acc, _| acc / int(2))
}

/// Hand-written programs exercising every construct.
pub const CORPUS: &[&str] = &[
    FAIR,
    GEO,
    DIVERGE,
    "x := 5 - 6; y := x + 2",
    "x := 1; {y := x + 1} [1/3] {y := 2 * x; {x := 0} [1/4] {x := 5}}",
    "while (x < 3) { {x := x + 1} [2/3] {x := x + 2} }",
    "{x := 1} [1] {x := 7}; {y := 1} [0] {y := 2}",
    "while (x < 4) { {x := x + 1} [1/3] {x := x + 2}; {y := y + x} [1/2] {y := y} }",
    "x := 7/2; while (0 < x) { x := x - 1; y := y + 1 }",
    "{while (x = 0) { x := x }} [1/2] {x := 3}",
    "c := 1; while (c = 1) { {c := 0} [3/4] {y := y + 1} }",
    "if (x = 0) { y := 10 div 3 } else { y := 10 mod 3 }; { z := y / 4 } [1/5] { skip }",
];

/// Seeded generator of small random programs over `x`, `y`, `z`.
pub struct ProgramGen {
    rng: StdRng,
}

const VARS: [&str; 3] = ["x", "y", "z"];
const PROBS: [(i64, i64); 6] = [(1, 2), (1, 3), (2, 3), (1, 4), (0, 1), (1, 1)];

impl ProgramGen {
    pub fn new(seed: u64) -> Self {
        ProgramGen { rng: StdRng::seed_from_u64(seed) }
    }

    pub fn rng(&mut self) -> &mut StdRng {
        &mut self.rng
    }

    fn var(&mut self) -> Var {
        var(VARS[self.rng.random_range(0..VARS.len())])
    }

    fn small(&mut self) -> ArithExpr {
        match self.rng.random_range(0..4) {
            0 => ArithExpr::lit(r(1, 2)),
            _ => ArithExpr::int(self.rng.random_range(0..4)),
        }
    }

    pub fn arith(&mut self, depth: u32) -> ArithExpr {
        if depth == 0 || self.rng.random_bool(0.5) {
            return if self.rng.random_bool(0.5) { ArithExpr::var(self.var()) } else { self.small() };
        }
        let (a, b) = (self.arith(depth - 1), self.arith(depth - 1));
        match self.rng.random_range(0..6) {
            0 => a.add(b),
            1 => a.sub(b),
            2 => a.mul(b),
            3 => a.div(b),
            4 => a.int_div(b),
            _ => a.modulo(b),
        }
    }

    pub fn guard(&mut self) -> BoolExpr {
        let lhs = ArithExpr::var(self.var());
        let rhs = ArithExpr::int(self.rng.random_range(0..4));
        let base = match self.rng.random_range(0..4) {
            0 => BoolExpr::lt(lhs, rhs),
            1 => BoolExpr::le(lhs, rhs),
            2 => BoolExpr::eq(lhs, rhs),
            _ => BoolExpr::ne(lhs, rhs),
        };
        match self.rng.random_range(0..5) {
            0 => base.not(),
            1 => base.and(BoolExpr::lt(ArithExpr::var(self.var()), ArithExpr::int(3))),
            2 => base.or(BoolExpr::eq(ArithExpr::var(self.var()), ArithExpr::int(2))),
            _ => base,
        }
    }

    pub fn program(&mut self, depth: u32) -> Program {
        if depth == 0 {
            return Program::assign(self.var(), self.arith(1));
        }
        match self.rng.random_range(0..8) {
            0 | 1 => Program::assign(self.var(), self.arith(2)),
            2 | 3 => Program::seq(self.program(depth - 1), self.program(depth - 1)),
            4 | 5 => {
                let (n, d) = PROBS[self.rng.random_range(0..PROBS.len())];
                Program::choice(self.program(depth - 1), r(n, d), self.program(depth - 1)).unwrap()
            }
            _ => {
                // bodies usually make progress on the guarded variable
                let v = self.var();
                let body = self.program(depth - 1);
                let bump = Program::assign(v.clone(), ArithExpr::var(v.clone()).add(ArithExpr::int(1)));
                let body = if self.rng.random_bool(0.8) { Program::seq(body, bump) } else { body };
                Program::while_loop(BoolExpr::lt(ArithExpr::var(v), ArithExpr::int(self.rng.random_range(1..4))), body)
            }
        }
    }

    pub fn ordinary(&mut self, depth: u32) -> Program {
        loop {
            let p = self.program(depth);
            if p.is_ordinary() {
                return p;
            }
        }
    }

    /// A rational in `[lo, hi)` with denominator at most `max_den`.
    pub fn rational_in(&mut self, lo: &Rational, hi: &Rational, max_den: i64) -> Rational {
        loop {
            let d = self.rng.random_range(1..=max_den);
            let n = self.rng.random_range(0..=d * 2);
            let q = r(n, d);
            if &q >= lo && &q < hi {
                return q;
            }
        }
    }
}

/// Runs a deterministic program from `env` to completion.
pub fn run_deterministic(p: &Program, env: Valuation, limit: u64) -> Option<Valuation> {
    let mut s = State::with_env(p, env);
    for _ in 0..limit {
        if s.is_terminal() {
            return Some(s.env);
        }
        s = match step(&s).expect("deterministic program") {
            StepOutcome::Next(next) => next,
            StepOutcome::Top => unreachable!("non-terminal state has a successor"),
        };
    }
    None
}

/// Big-step interpreter charging one unit per assignment and one per
/// iteration of a loop whose body does not begin with an assignment.
/// Returns the cost if `p` halts within `fuel` units.
pub fn halting_cost(p: &Program, env: &mut Valuation, fuel: u64) -> Option<u64> {
    fn go(p: &Program, env: &mut Valuation, used: &mut u64, fuel: u64) -> bool {
        match p {
            Program::Assign(v, e) => {
                *used += 1;
                let value = eval_arith(e, env);
                env.set(v.clone(), if value < Rational::zero() { Rational::zero() } else { value });
                *used <= fuel
            }
            Program::Seq(a, b) => go(a, env, used, fuel) && go(b, env, used, fuel),
            Program::While(guard, body) => {
                while eval_bool(guard, env) {
                    if !leads_with_assign(body) {
                        *used += 1;
                        if *used > fuel {
                            return false;
                        }
                    }
                    if !go(body, env, used, fuel) {
                        return false;
                    }
                }
                true
            }
            Program::Choice(..) => panic!("ordinary programs only"),
        }
    }
    fn leads_with_assign(p: &Program) -> bool {
        match p {
            Program::Assign(..) => true,
            Program::Seq(a, _) => leads_with_assign(a),
            _ => false,
        }
    }
    let mut used = 0;
    go(p, env, &mut used, fuel).then_some(used)
}
