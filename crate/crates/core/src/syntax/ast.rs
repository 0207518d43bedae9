use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::rational::Rational;

/// A program variable.
///
/// Names are an ASCII letter or underscore followed by letters, digits, or
/// underscores. Names starting with `__` are reserved for generated code.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: &str) -> Var {
        debug_assert!(Var::is_valid_name(name), "invalid variable name `{name}`");
        Var(Arc::from(name))
    }

    pub fn is_valid_name(name: &str) -> bool {
        let mut chars = name.chars();
        match chars.next() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return false,
        }
        chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub fn is_reserved(&self) -> bool {
        self.0.starts_with("__")
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(name: &str) -> Self {
        Var::new(name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    /// Floor of the quotient.
    IntDiv,
    /// `a - b * floor(a / b)`.
    Mod,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
            ArithOp::IntDiv => "div",
            ArithOp::Mod => "mod",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            ArithOp::Add | ArithOp::Sub => 1,
            _ => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ArithExpr {
    /// Nonnegative literal.
    Lit(Rational),
    Var(Var),
    Bin(ArithOp, Box<ArithExpr>, Box<ArithExpr>),
}

#[allow(clippy::should_implement_trait)]
impl ArithExpr {
    pub fn lit(value: Rational) -> Self {
        debug_assert!(value >= Rational::zero());
        ArithExpr::Lit(value)
    }

    pub fn int(n: u64) -> Self {
        ArithExpr::Lit(Rational::from_integer(n.into()))
    }

    pub fn var(v: impl Into<Var>) -> Self {
        ArithExpr::Var(v.into())
    }

    pub fn bin(op: ArithOp, lhs: ArithExpr, rhs: ArithExpr) -> Self {
        ArithExpr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn add(self, rhs: ArithExpr) -> Self {
        Self::bin(ArithOp::Add, self, rhs)
    }

    pub fn sub(self, rhs: ArithExpr) -> Self {
        Self::bin(ArithOp::Sub, self, rhs)
    }

    pub fn mul(self, rhs: ArithExpr) -> Self {
        Self::bin(ArithOp::Mul, self, rhs)
    }

    pub fn div(self, rhs: ArithExpr) -> Self {
        Self::bin(ArithOp::Div, self, rhs)
    }

    pub fn int_div(self, rhs: ArithExpr) -> Self {
        Self::bin(ArithOp::IntDiv, self, rhs)
    }

    pub fn modulo(self, rhs: ArithExpr) -> Self {
        Self::bin(ArithOp::Mod, self, rhs)
    }

    fn collect_vars(&self, out: &mut VarCollector) {
        match self {
            ArithExpr::Lit(_) => {}
            ArithExpr::Var(v) => out.push(v),
            ArithExpr::Bin(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BoolExpr {
    Cmp(CmpOp, ArithExpr, ArithExpr),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    Not(Box<BoolExpr>),
}

impl BoolExpr {
    pub fn cmp(op: CmpOp, lhs: ArithExpr, rhs: ArithExpr) -> Self {
        BoolExpr::Cmp(op, lhs, rhs)
    }

    pub fn eq(lhs: ArithExpr, rhs: ArithExpr) -> Self {
        BoolExpr::Cmp(CmpOp::Eq, lhs, rhs)
    }

    pub fn ne(lhs: ArithExpr, rhs: ArithExpr) -> Self {
        BoolExpr::Cmp(CmpOp::Ne, lhs, rhs)
    }

    pub fn lt(lhs: ArithExpr, rhs: ArithExpr) -> Self {
        BoolExpr::Cmp(CmpOp::Lt, lhs, rhs)
    }

    pub fn le(lhs: ArithExpr, rhs: ArithExpr) -> Self {
        BoolExpr::Cmp(CmpOp::Le, lhs, rhs)
    }

    pub fn and(self, rhs: BoolExpr) -> Self {
        BoolExpr::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: BoolExpr) -> Self {
        BoolExpr::Or(Box::new(self), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        BoolExpr::Not(Box::new(self))
    }

    fn collect_vars(&self, out: &mut VarCollector) {
        match self {
            BoolExpr::Cmp(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            BoolExpr::And(l, r) | BoolExpr::Or(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            BoolExpr::Not(b) => b.collect_vars(out),
        }
    }
}

/// Abstract syntax of probabilistic programs.
///
/// Children are reference counted so execution states can share program
/// fragments without copying them.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Program {
    Assign(Var, ArithExpr),
    Seq(Arc<Program>, Arc<Program>),
    /// `{left} [p] {right}`: left with probability `p`, right with `1 - p`.
    Choice(Arc<Program>, Rational, Arc<Program>),
    While(BoolExpr, Arc<Program>),
}

impl Program {
    pub fn assign(v: impl Into<Var>, e: ArithExpr) -> Self {
        Program::Assign(v.into(), e)
    }

    pub fn seq(first: Program, second: Program) -> Self {
        Program::Seq(Arc::new(first), Arc::new(second))
    }

    /// Right-nested sequence of the given statements.
    ///
    /// Panics on an empty list.
    pub fn seq_all(stmts: impl IntoIterator<Item = Program>) -> Self {
        let mut stmts: Vec<Program> = stmts.into_iter().collect();
        let mut acc = stmts.pop().expect("seq_all needs at least one statement");
        while let Some(prev) = stmts.pop() {
            acc = Program::seq(prev, acc);
        }
        acc
    }

    /// Returns `None` when `p` lies outside `[0, 1]`.
    pub fn choice(left: Program, p: Rational, right: Program) -> Option<Self> {
        if p < Rational::zero() || p > Rational::one() {
            return None;
        }
        Some(Program::Choice(Arc::new(left), p, Arc::new(right)))
    }

    pub fn while_loop(guard: BoolExpr, body: Program) -> Self {
        Program::While(guard, Arc::new(body))
    }

    /// True iff no probabilistic choice occurs anywhere in the program.
    pub fn is_ordinary(&self) -> bool {
        match self {
            Program::Assign(..) => true,
            Program::Seq(a, b) => a.is_ordinary() && b.is_ordinary(),
            Program::Choice(..) => false,
            Program::While(_, body) => body.is_ordinary(),
        }
    }

    pub fn choice_count(&self) -> usize {
        match self {
            Program::Assign(..) => 0,
            Program::Seq(a, b) => a.choice_count() + b.choice_count(),
            Program::Choice(a, _, b) => 1 + a.choice_count() + b.choice_count(),
            Program::While(_, body) => body.choice_count(),
        }
    }

    /// Variables in order of first occurrence, left to right.
    pub fn vars(&self) -> Vec<Var> {
        let mut out = VarCollector::default();
        self.collect_vars(&mut out);
        out.order
    }

    fn collect_vars(&self, out: &mut VarCollector) {
        match self {
            Program::Assign(v, e) => {
                out.push(v);
                e.collect_vars(out);
            }
            Program::Seq(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Program::Choice(a, _, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Program::While(guard, body) => {
                guard.collect_vars(out);
                body.collect_vars(out);
            }
        }
    }

    /// Number of AST nodes, counting statements only.
    pub fn size(&self) -> usize {
        match self {
            Program::Assign(..) => 1,
            Program::Seq(a, b) | Program::Choice(a, _, b) => 1 + a.size() + b.size(),
            Program::While(_, body) => 1 + body.size(),
        }
    }
}

pub fn is_ordinary(p: &Program) -> bool {
    p.is_ordinary()
}

pub fn vars_of(p: &Program) -> Vec<Var> {
    p.vars()
}

#[derive(Default)]
struct VarCollector {
    seen: HashSet<Var>,
    order: Vec<Var>,
}

impl VarCollector {
    fn push(&mut self, v: &Var) {
        if self.seen.insert(v.clone()) {
            self.order.push(v.clone());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x_assign(n: u64) -> Program {
        Program::assign("x", ArithExpr::int(n))
    }

    #[test]
    fn var_names() {
        assert!(Var::is_valid_name("x"));
        assert!(Var::is_valid_name("continue_1"));
        assert!(Var::is_valid_name("__t0"));
        assert!(!Var::is_valid_name("1x"));
        assert!(!Var::is_valid_name(""));
        assert!(!Var::is_valid_name("a-b"));
        assert!(Var::new("__cnt").is_reserved());
        assert!(!Var::new("_x").is_reserved());
    }

    #[test]
    fn ordinary_detection() {
        assert!(x_assign(1).is_ordinary());
        let fair = Program::choice(x_assign(1), Rational::new(1.into(), 2.into()), x_assign(0)).unwrap();
        assert!(!fair.is_ordinary());
        let nested = Program::while_loop(
            BoolExpr::ne(ArithExpr::var("x"), ArithExpr::int(0)),
            Program::seq(Program::assign("x", ArithExpr::var("x").sub(ArithExpr::int(1))), fair),
        );
        assert!(!nested.is_ordinary());
        assert_eq!(nested.choice_count(), 1);
    }

    #[test]
    fn choice_rejects_out_of_range() {
        assert!(Program::choice(x_assign(1), Rational::new(3.into(), 2.into()), x_assign(0)).is_none());
        assert!(Program::choice(x_assign(1), Rational::new((-1).into(), 2.into()), x_assign(0)).is_none());
        assert!(Program::choice(x_assign(1), Rational::one(), x_assign(0)).is_some());
        assert!(Program::choice(x_assign(1), Rational::zero(), x_assign(0)).is_some());
    }

    #[test]
    fn vars_first_occurrence() {
        let p = Program::assign("x", ArithExpr::var("y").add(ArithExpr::int(1)));
        assert_eq!(p.vars(), vec![Var::new("x"), Var::new("y")]);
        let p = Program::assign("x", ArithExpr::var("x"));
        assert_eq!(p.vars(), vec![Var::new("x")]);
    }

    #[test]
    fn seq_all_is_right_nested() {
        let p = Program::seq_all([x_assign(1), x_assign(2), x_assign(3)]);
        assert_eq!(p, Program::seq(x_assign(1), Program::seq(x_assign(2), x_assign(3))));
    }
}
