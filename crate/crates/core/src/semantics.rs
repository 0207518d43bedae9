//! Execution states and the small-step relation.
//!
//! A [`State`] is `⟨control, valuation, probability, trace⟩`. Deterministic
//! steps go through [`step`], probabilistic choices through [`step_prob`], and
//! [`run`] composes them `k` times following a choice string.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::{floor_div, floor_mod, Rational};
use crate::syntax::{pretty_print, ArithExpr, ArithOp, BoolExpr, CmpOp, Program, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("the next statement is a probabilistic choice; resolve it with step_prob")]
    ChoiceHeaded,
    #[error("the next statement is not a probabilistic choice")]
    NotChoiceHeaded,
    #[error("terminal states have no successor")]
    Terminal,
}

/// Finite map from variables to nonnegative rationals. Absent variables read
/// as zero and zero values are never stored, so structural equality is
/// equality of the underlying total functions.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Valuation(Arc<BTreeMap<Var, Rational>>);

impl Valuation {
    /// The all-zero valuation η₀.
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn get(&self, v: &Var) -> Rational {
        self.0.get(v).cloned().unwrap_or_else(Rational::zero)
    }

    /// Panics if `value` is negative.
    pub fn set(&mut self, v: Var, value: Rational) {
        assert!(!value.is_negative(), "valuations are nonnegative");
        let map = Arc::make_mut(&mut self.0);
        if value.is_zero() {
            map.remove(&v);
        } else {
            map.insert(v, value);
        }
    }

    pub fn with(mut self, v: impl Into<Var>, value: Rational) -> Self {
        self.set(v.into(), value);
        self
    }

    /// Nonzero entries in variable order.
    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Rational)> {
        self.0.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Variables with a nonzero value.
    pub fn support(&self) -> impl Iterator<Item = &Var> {
        self.0.keys()
    }
}

impl fmt::Debug for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (n, (v, value)) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}↦{value}")?;
        }
        f.write_str("}")
    }
}

impl<V: Into<Var>> FromIterator<(V, Rational)> for Valuation {
    fn from_iter<T: IntoIterator<Item = (V, Rational)>>(iter: T) -> Self {
        let mut env = Valuation::zero();
        for (v, value) in iter {
            env.set(v.into(), value);
        }
        env
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    L,
    R,
}

impl Dir {
    pub fn as_char(self) -> char {
        match self {
            Dir::L => 'L',
            Dir::R => 'R',
        }
    }
}

/// A word over `{L, R}` recording how probabilistic choices were resolved.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChoiceString(Vec<Dir>);

impl ChoiceString {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<Dir> {
        self.0.get(i).copied()
    }

    pub fn push(&mut self, d: Dir) {
        self.0.push(d);
    }

    pub fn dirs(&self) -> &[Dir] {
        &self.0
    }

    pub fn starts_with(&self, prefix: &ChoiceString) -> bool {
        self.0.starts_with(&prefix.0)
    }
}

impl From<Vec<Dir>> for ChoiceString {
    fn from(dirs: Vec<Dir>) -> Self {
        ChoiceString(dirs)
    }
}

impl fmt::Display for ChoiceString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|d| write!(f, "{}", d.as_char()))
    }
}

impl fmt::Debug for ChoiceString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("ε")
        } else {
            write!(f, "{self}")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("choice strings contain only `L` and `R`, found `{0}`")]
pub struct ChoiceStringParseError(pub char);

impl FromStr for ChoiceString {
    type Err = ChoiceStringParseError;

    /// Accepts `""` or `"ε"` for the empty word.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "ε" {
            return Ok(ChoiceString::empty());
        }
        s.chars()
            .map(|c| match c {
                'L' | 'l' => Ok(Dir::L),
                'R' | 'r' => Ok(Dir::R),
                other => Err(ChoiceStringParseError(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(ChoiceString)
    }
}

/// The program part of a state: either `↓` or a program term in which the
/// left operand of a sequence may already have run to `↓`.
///
/// Sequences are kept in a canonical form: `Stmt` never holds a `Seq`, the
/// left side of `Seq` is itself a control term, and the right side is the
/// untouched remainder. Every term reachable by the rules has exactly one
/// representation, so structural equality is state equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Control {
    Done,
    Stmt(Arc<Program>),
    Seq(Arc<Control>, Arc<Program>),
}

impl Control {
    pub fn from_program(p: &Arc<Program>) -> Control {
        match p.as_ref() {
            Program::Seq(first, rest) => Control::Seq(Arc::new(Control::from_program(first)), rest.clone()),
            _ => Control::Stmt(p.clone()),
        }
    }

    pub fn is_done(&self) -> bool {
        matches!(self, Control::Done)
    }

    /// True iff the next rule to fire is a probabilistic-choice rule.
    pub fn is_choice_headed(&self) -> bool {
        match self {
            Control::Done => false,
            Control::Stmt(p) => matches!(p.as_ref(), Program::Choice(..)),
            Control::Seq(first, _) => first.is_choice_headed(),
        }
    }

    /// Concrete text, with `↓` for finished sub-terms.
    pub fn to_text(&self) -> String {
        match self {
            Control::Done => "↓".to_string(),
            Control::Stmt(p) => pretty_print(p),
            Control::Seq(first, rest) => {
                let first = match first.as_ref() {
                    Control::Seq(..) => format!("{{{}}}", first.to_text()),
                    other => other.to_text(),
                };
                format!("{first}; {}", pretty_print(rest))
            }
        }
    }
}

impl fmt::Debug for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl From<Program> for Control {
    fn from(p: Program) -> Self {
        Control::from_program(&Arc::new(p))
    }
}

/// An execution state `⟨control, valuation, probability, trace⟩`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct State {
    pub control: Control,
    pub env: Valuation,
    pub prob: Rational,
    pub trace: ChoiceString,
}

impl State {
    /// `⟨P, η₀, 1, ε⟩`.
    pub fn initial(p: &Program) -> State {
        State::with_env(p, Valuation::zero())
    }

    pub fn with_env(p: &Program, env: Valuation) -> State {
        State { control: Control::from(p.clone()), env, prob: Rational::one(), trace: ChoiceString::empty() }
    }

    pub fn is_terminal(&self) -> bool {
        self.control.is_done()
    }

    /// States reached through a branch of probability zero.
    pub fn is_zero_mass(&self) -> bool {
        self.prob.is_zero()
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨{:?}, {:?}, {}, {:?}⟩", self.control, self.env, self.prob, self.trace)
    }
}

/// Result of a successor computation: a state, or `⊤`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Next(State),
    Top,
}

impl StepOutcome {
    pub fn state(&self) -> Option<&State> {
        match self {
            StepOutcome::Next(s) => Some(s),
            StepOutcome::Top => None,
        }
    }

    pub fn is_top(&self) -> bool {
        matches!(self, StepOutcome::Top)
    }
}

pub fn eval_arith(e: &ArithExpr, env: &Valuation) -> Rational {
    match e {
        ArithExpr::Lit(value) => value.clone(),
        ArithExpr::Var(v) => env.get(v),
        ArithExpr::Bin(op, l, r) => {
            let (a, b) = (eval_arith(l, env), eval_arith(r, env));
            match op {
                ArithOp::Add => a + b,
                ArithOp::Sub => a - b,
                ArithOp::Mul => a * b,
                ArithOp::Div if b.is_zero() => Rational::zero(),
                ArithOp::Div => a / b,
                ArithOp::IntDiv => floor_div(&a, &b),
                ArithOp::Mod => floor_mod(&a, &b),
            }
        }
    }
}

pub fn eval_bool(b: &BoolExpr, env: &Valuation) -> bool {
    match b {
        BoolExpr::Cmp(op, l, r) => {
            let (a, b) = (eval_arith(l, env), eval_arith(r, env));
            match op {
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Eq => a == b,
                CmpOp::Ne => a != b,
            }
        }
        BoolExpr::And(l, r) => eval_bool(l, env) && eval_bool(r, env),
        BoolExpr::Or(l, r) => eval_bool(l, env) || eval_bool(r, env),
        BoolExpr::Not(inner) => !eval_bool(inner, env),
    }
}

/// One rule application on the control/valuation pair, without probability
/// bookkeeping.
pub(crate) struct Advance {
    pub control: Control,
    pub update: Option<(Var, Rational)>,
    /// Direction taken and the probability of the chosen branch.
    pub branch: Option<(Dir, Rational)>,
}

pub(crate) fn advance(control: &Control, env: &Valuation, dir: Option<Dir>) -> Result<Advance, SemanticsError> {
    let det = |control| Advance { control, update: None, branch: None };
    match control {
        Control::Done => Err(SemanticsError::Terminal),
        Control::Stmt(p) => match (p.as_ref(), dir) {
            // (prob1) / (prob2)
            (Program::Choice(left, prob, right), Some(d)) => {
                let (next, factor) = match d {
                    Dir::L => (left, prob.clone()),
                    Dir::R => (right, Rational::one() - prob),
                };
                Ok(Advance { control: Control::from_program(next), update: None, branch: Some((d, factor)) })
            }
            (Program::Choice(..), None) => Err(SemanticsError::ChoiceHeaded),
            (_, Some(_)) => Err(SemanticsError::NotChoiceHeaded),
            // (assign)
            (Program::Assign(v, e), None) => {
                let value = eval_arith(e, env).max(Rational::zero());
                Ok(Advance { control: Control::Done, update: Some((v.clone(), value)), branch: None })
            }
            // (while1) / (while2)
            (Program::While(guard, body), None) => {
                if eval_bool(guard, env) {
                    Ok(det(Control::Seq(Arc::new(Control::from_program(body)), p.clone())))
                } else {
                    Ok(det(Control::Done))
                }
            }
            (Program::Seq(..), None) => advance(&Control::from_program(p), env, None),
        },
        Control::Seq(first, rest) => match first.as_ref() {
            // (concat2)
            Control::Done if dir.is_some() => Err(SemanticsError::NotChoiceHeaded),
            Control::Done => Ok(det(Control::from_program(rest))),
            // (concat1)
            _ => {
                let inner = advance(first, env, dir)?;
                Ok(Advance { control: Control::Seq(Arc::new(inner.control), rest.clone()), ..inner })
            }
        },
    }
}

/// Successor of a state whose next rule is not a probabilistic choice;
/// `Top` for terminal states.
pub fn step(s: &State) -> Result<StepOutcome, SemanticsError> {
    if s.is_terminal() {
        return Ok(StepOutcome::Top);
    }
    let adv = advance(&s.control, &s.env, None)?;
    let mut env = s.env.clone();
    if let Some((v, value)) = adv.update {
        env.set(v, value);
    }
    Ok(StepOutcome::Next(State { control: adv.control, env, prob: s.prob.clone(), trace: s.trace.clone() }))
}

/// Successor of a choice-headed state when the choice is resolved by `d`.
///
/// Choosing a branch of probability zero yields a zero-mass state.
pub fn step_prob(s: &State, d: Dir) -> Result<State, SemanticsError> {
    if s.is_terminal() {
        return Err(SemanticsError::NotChoiceHeaded);
    }
    let adv = advance(&s.control, &s.env, Some(d))?;
    let (d, factor) = adv.branch.expect("probabilistic rule records its branch");
    let mut trace = s.trace.clone();
    trace.push(d);
    Ok(State { control: adv.control, env: s.env.clone(), prob: &s.prob * factor, trace })
}

/// The state reached after exactly `k` steps of which exactly `|w|` are
/// probabilistic and resolved by `w` in order; `Top` otherwise, including
/// when a terminal state is reached in fewer than `k` steps.
pub fn run(s: &State, k: u64, w: &ChoiceString) -> StepOutcome {
    let mut cur = s.clone();
    let mut used = 0;
    for _ in 0..k {
        if cur.is_terminal() {
            return StepOutcome::Top;
        }
        cur = if cur.control.is_choice_headed() {
            let Some(d) = w.get(used) else {
                return StepOutcome::Top;
            };
            used += 1;
            step_prob(&cur, d).expect("choice-headed state")
        } else {
            match step(&cur).expect("not choice-headed") {
                StepOutcome::Next(next) => next,
                StepOutcome::Top => return StepOutcome::Top,
            }
        };
    }
    if used == w.len() {
        StepOutcome::Next(cur)
    } else {
        StepOutcome::Top
    }
}

/// Probability of a terminal state; zero for everything else.
pub fn alpha(o: &StepOutcome) -> Rational {
    match o {
        StepOutcome::Next(s) if s.is_terminal() => s.prob.clone(),
        _ => Rational::zero(),
    }
}

/// `η(v) · a` for a terminal state; zero for everything else.
pub fn weight(o: &StepOutcome, v: &Var) -> Rational {
    match o {
        StepOutcome::Next(s) if s.is_terminal() => s.env.get(v) * &s.prob,
        _ => Rational::zero(),
    }
}

/// Length-then-lexicographic enumeration of `{L, R}*` with `L < R`:
/// `ε, L, R, LL, LR, RL, RR, LLL, …`.
pub fn h(n: u64) -> ChoiceString {
    let m = n as u128 + 1;
    let len = 127 - m.leading_zeros();
    let offset = m - (1u128 << len);
    (0..len).rev().map(|bit| if offset >> bit & 1 == 0 { Dir::L } else { Dir::R }).collect::<Vec<_>>().into()
}

/// Inverse of [`h`]. Panics if the index does not fit in `u64`; see
/// [`h_inv_checked`].
pub fn h_inv(w: &ChoiceString) -> u64 {
    h_inv_checked(w).expect("choice string index overflows u64")
}

pub fn h_inv_checked(w: &ChoiceString) -> Option<u64> {
    if w.len() >= 64 {
        return None;
    }
    let offset = w.dirs().iter().fold(0u64, |acc, d| acc << 1 | (*d == Dir::R) as u64);
    ((1u64 << w.len()) - 1).checked_add(offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn cs(s: &str) -> ChoiceString {
        s.parse().unwrap()
    }

    fn next(o: Result<StepOutcome, SemanticsError>) -> State {
        match o.unwrap() {
            StepOutcome::Next(s) => s,
            StepOutcome::Top => panic!("unexpected ⊤"),
        }
    }

    fn terminal(env: Valuation, prob: Rational, trace: &str) -> State {
        State { control: Control::Done, env, prob, trace: cs(trace) }
    }

    #[test]
    fn eval_examples() {
        let x = Var::new("x");
        let env = |v: Rational| Valuation::zero().with(x.clone(), v);
        assert_eq!(eval_arith(&crate::syntax::parse_arith("x + 1").unwrap(), &Valuation::zero()), r(1, 1));
        assert_eq!(eval_arith(&crate::syntax::parse_arith("x - 1").unwrap(), &env(r(1, 2))), r(-1, 2));
        assert_eq!(eval_arith(&crate::syntax::parse_arith("5 div 2").unwrap(), &Valuation::zero()), r(2, 1));
        assert_eq!(eval_arith(&crate::syntax::parse_arith("7 mod 0").unwrap(), &Valuation::zero()), r(0, 1));
        assert_eq!(eval_arith(&crate::syntax::parse_arith("7 / (x - x)").unwrap(), &env(r(3, 1))), r(0, 1));
        let b = |s: &str, e: &Valuation| eval_bool(&crate::syntax::parse_bool(s).unwrap(), e);
        assert!(b("x = 0", &Valuation::zero()));
        assert!(b("x != 0", &env(r(1, 1))));
        assert!(!b("1 < 1/2", &Valuation::zero()));
    }

    #[test]
    fn assign_clamps_at_zero() {
        let s = State::initial(&parse("x := 5 - 6").unwrap());
        assert_eq!(next(step(&s)), terminal(Valuation::zero(), r(1, 1), ""));
        let s = State::initial(&parse("x := 5 - 3").unwrap());
        assert_eq!(next(step(&s)), terminal(Valuation::zero().with("x", r(2, 1)), r(1, 1), ""));
    }

    #[test]
    fn terminal_steps_to_top() {
        let s = terminal(Valuation::zero().with("x", r(1, 1)), r(1, 2), "L");
        assert_eq!(step(&s).unwrap(), StepOutcome::Top);
    }

    #[test]
    fn while1_unrolls_once() {
        let p = parse("while (x = 0) {x := x}").unwrap();
        let s = State::initial(&p);
        let expected = State::initial(&parse("x := x; while (x = 0) {x := x}").unwrap());
        assert_eq!(next(step(&s)), expected);
    }

    #[test]
    fn choice_headed_states_are_routed() {
        let fair = State::initial(&parse("{x := 1} [1/2] {x := 0}").unwrap());
        assert_eq!(step(&fair), Err(SemanticsError::ChoiceHeaded));
        let plain = State::initial(&parse("x := 1").unwrap());
        assert_eq!(step_prob(&plain, Dir::L), Err(SemanticsError::NotChoiceHeaded));
    }

    #[test]
    fn prob_rules() {
        let fair = State::initial(&parse("{x := 1} [1/2] {x := 0}").unwrap());
        let left = step_prob(&fair, Dir::L).unwrap();
        assert_eq!(left, State { prob: r(1, 2), trace: cs("L"), ..State::initial(&parse("x := 1").unwrap()) });
        let right = step_prob(&fair, Dir::R).unwrap();
        assert_eq!(right, State { prob: r(1, 2), trace: cs("R"), ..State::initial(&parse("x := 0").unwrap()) });

        let certain = State::initial(&parse("{x := 1} [1] {x := 0}").unwrap());
        let zero = step_prob(&certain, Dir::R).unwrap();
        assert!(zero.is_zero_mass());
        assert_eq!(zero.trace, cs("R"));
    }

    #[test]
    fn concat_rules_count_as_steps() {
        let s = State::initial(&parse("x := 1; y := 2").unwrap());
        let s1 = next(step(&s));
        assert_eq!(s1.control.to_text(), "↓; y := 2");
        let s2 = next(step(&s1));
        assert_eq!(s2.control.to_text(), "y := 2");
        let s3 = next(step(&s2));
        assert!(s3.is_terminal());
        assert_eq!(s3.env, Valuation::zero().with("x", r(1, 1)).with("y", r(2, 1)));
    }

    #[test]
    fn run_examples() {
        let fair = State::initial(&parse("{x := 1} [1/2] {x := 0}").unwrap());
        assert_eq!(
            run(&fair, 2, &cs("L")),
            StepOutcome::Next(terminal(Valuation::zero().with("x", r(1, 1)), r(1, 2), "L"))
        );
        assert_eq!(run(&State::initial(&parse("x := 1").unwrap()), 5, &cs("")), StepOutcome::Top);
        assert_eq!(run(&fair, 2, &cs("")), StepOutcome::Top);
        // unused choices also yield ⊤
        assert_eq!(run(&State::initial(&parse("x := 1").unwrap()), 1, &cs("L")), StepOutcome::Top);
        assert_eq!(run(&fair, 0, &cs("")), StepOutcome::Next(fair.clone()));
    }

    #[test]
    fn alpha_and_weight() {
        let t = StepOutcome::Next(terminal(Valuation::zero().with("x", r(1, 1)), r(1, 2), "L"));
        assert_eq!(alpha(&t), r(1, 2));
        assert_eq!(weight(&t, &Var::new("x")), r(1, 2));
        let live = StepOutcome::Next(State::initial(&parse("x := 1").unwrap()));
        assert_eq!(alpha(&live), r(0, 1));
        assert_eq!(alpha(&StepOutcome::Top), r(0, 1));
        let t = StepOutcome::Next(terminal(Valuation::zero().with("x", r(3, 1)), r(1, 4), "LR"));
        assert_eq!(weight(&t, &Var::new("y")), r(0, 1));
        assert_eq!(weight(&StepOutcome::Top, &Var::new("x")), r(0, 1));
    }

    /// Independent enumeration: all words of length 0, 1, 2, … with L < R.
    fn length_lex(count: usize) -> Vec<String> {
        let mut out = Vec::new();
        let mut len = 0;
        while out.len() < count {
            for bits in 0..(1u32 << len) {
                let word: String = (0..len).rev().map(|b| if bits >> b & 1 == 0 { 'L' } else { 'R' }).collect();
                out.push(word);
            }
            len += 1;
        }
        out.truncate(count);
        out
    }

    #[test]
    fn h_matches_enumeration() {
        let words = length_lex(600);
        for (n, word) in words.iter().enumerate() {
            assert_eq!(h(n as u64).to_string(), *word);
        }
        assert_eq!(h(0), ChoiceString::empty());
        assert_eq!(h(3), cs("LL"));
        assert_eq!(h_inv(&cs("LR")), 4);
    }

    #[test]
    fn h_round_trips() {
        for n in 0..(1u64 << 16) {
            assert_eq!(h_inv(&h(n)), n);
        }
        assert_eq!(h_inv(&h(u64::MAX - 1)), u64::MAX - 1);
        assert_eq!(h_inv_checked(&vec![Dir::L; 64].into()), None);
    }

    #[test]
    fn valuation_normalises_zeros() {
        let env = Valuation::zero().with("x", r(0, 1));
        assert_eq!(env, Valuation::zero());
        assert!(env.is_zero());
    }
}
