//! Program generators for the three hardness constructions, plus the input
//! codec and step-count instrumentation they are built from.
//!
//! Every generated variable is `__` followed by a base name and, when a base
//! is used more than once, a counter (`__f`, `__f1`, `__f2`, …). A clash with a
//! variable of the input program is an error, never a silent rename. The one
//! user-facing variable, the target `v` of the expectation reductions, is
//! instead renamed to `v1`, `v2`, … when the input already uses `v`.

pub mod codec;
pub mod instrument;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_traits::One;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::rational::Rational;
use crate::syntax::{parse, pretty_print, ArithExpr, Program, Var};

pub use codec::{
    cantor_pair, cantor_unpair, g_decode, g_encode, gen_decoder_program, nat_to_rat, rat_to_nat, InputCodec,
};
pub use instrument::{instrument_exact_steps, ABORT_VAR, COUNT_VAR, FLAG_VAR};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReductionError {
    #[error("input program contains a probabilistic choice")]
    NotOrdinary,
    #[error("input program uses reserved variable `{0}`")]
    ReservedVarClash(Var),
    #[error("decoder input `{0}` is one of the codec variables")]
    DecoderInputClash(Var),
    #[error("valuation assigns `{0}`, which the codec does not cover")]
    OutsideCodec(Var),
    #[error("negative rational {0} has no code")]
    NegativeRational(Rational),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionKind {
    UhToUexp,
    AstToExp,
    UhToAst,
}

impl ReductionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReductionKind::UhToUexp => "uh_to_uexp",
            ReductionKind::AstToExp => "ast_to_exp",
            ReductionKind::UhToAst => "uh_to_ast",
        }
    }

    /// Short command-line name.
    pub fn flag_name(self) -> &'static str {
        match self {
            ReductionKind::UhToUexp => "uh2uexp",
            ReductionKind::AstToExp => "ast2exp",
            ReductionKind::UhToAst => "uh2ast",
        }
    }
}

impl fmt::Display for ReductionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReductionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [ReductionKind::UhToUexp, ReductionKind::AstToExp, ReductionKind::UhToAst]
            .into_iter()
            .find(|k| k.as_str() == s || k.flag_name() == s)
            .ok_or_else(|| format!("unknown reduction kind `{s}` (expected uh2uexp, ast2exp or uh2ast)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionOutput {
    pub program: Program,
    pub target_var: Option<Var>,
    pub target_value: Option<Rational>,
    pub kind: ReductionKind,
    /// SHA-256 of the input program's printed form, hex encoded.
    pub source_hash: String,
}

/// Supply of reserved `__` names that must not occur in `avoid`.
#[derive(Debug, Clone)]
pub(crate) struct Fresh {
    avoid: BTreeSet<Var>,
    used: HashMap<&'static str, u32>,
}

impl Fresh {
    pub(crate) fn avoiding<'a>(vars: impl IntoIterator<Item = &'a Var>) -> Self {
        Fresh { avoid: vars.into_iter().cloned().collect(), used: HashMap::new() }
    }

    pub(crate) fn var(&mut self, base: &'static str) -> Result<Var, ReductionError> {
        let count = self.used.entry(base).or_insert(0);
        let name = if *count == 0 { format!("__{base}") } else { format!("__{base}{count}") };
        *count += 1;
        let v = Var::new(&name);
        if self.avoid.contains(&v) {
            return Err(ReductionError::ReservedVarClash(v));
        }
        Ok(v)
    }
}

pub fn source_hash(q: &Program) -> String {
    hex::encode(Sha256::digest(pretty_print(q).as_bytes()))
}

/// `v`, or `v1`, `v2`, … if `q` already uses `v`.
fn target_var(q: &Program) -> Var {
    let used = q.vars();
    (0..)
        .map(|k| if k == 0 { Var::new("v") } else { Var::new(&format!("v{k}")) })
        .find(|v| !used.contains(v))
        .expect("some candidate is unused")
}

/// `i := 0; {c := 0} [1/2] {c := 1}; while (c != 0) { i := i + 1; {c := 0} [1/2] {c := 1} }`,
/// leaving `i = k` with probability `2^-(k+1)`.
pub fn geometric_generator(i: &Var, c: &Var) -> Program {
    parse(&format!(
        "{i} := 0; {{{c} := 0}} [1/2] {{{c} := 1}}; while ({c} != 0) {{ {i} := {i} + 1; {{{c} := 0}} [1/2] {{{c} := 1}} }}"
    ))
    .expect("generator template parses")
}

/// `v := 0; Q; v := 1`: the expected value of `v` is the termination
/// probability of `Q`.
pub fn reduce_ast_to_exp(q: &Program) -> ReductionOutput {
    let v = target_var(q);
    let program = Program::seq_all([
        Program::assign(v.clone(), ArithExpr::int(0)),
        q.clone(),
        Program::assign(v.clone(), ArithExpr::int(1)),
    ]);
    ReductionOutput {
        program,
        target_var: Some(v),
        target_value: Some(Rational::one()),
        kind: ReductionKind::AstToExp,
        source_hash: source_hash(q),
    }
}

/// Geometric choice of an input index, decoding, then `Q`: terminates almost
/// surely iff the deterministic `Q` halts on every input.
pub fn reduce_uh_to_ast(q: &Program) -> Result<ReductionOutput, ReductionError> {
    if !q.is_ordinary() {
        return Err(ReductionError::NotOrdinary);
    }
    let codec = InputCodec::for_program(q);
    let mut fresh = Fresh::avoiding(&codec.vars);
    let (i, c) = (fresh.var("i")?, fresh.var("c")?);
    let decoder = codec::gen_decoder_with(&codec, &i, &mut fresh)?;
    let program = Program::seq_all([geometric_generator(&i, &c), decoder, q.clone()]);
    Ok(ReductionOutput {
        program,
        target_var: None,
        target_value: None,
        kind: ReductionKind::UhToAst,
        source_hash: source_hash(q),
    })
}

/// Independent geometric choices of an input index `i` and a step count `s`;
/// `v` becomes `2^(s+1)` exactly when `Q` halts on input `i` after `s` cost
/// units, so `E(v) = Σ_i 2^-(i+1) [Q halts on input i]`, which is 1 iff `Q`
/// halts on every input.
pub fn reduce_uh_to_uexp(q: &Program) -> Result<ReductionOutput, ReductionError> {
    if !q.is_ordinary() {
        return Err(ReductionError::NotOrdinary);
    }
    let codec = InputCodec::for_program(q);
    let v = target_var(q);
    let mut fresh = Fresh::avoiding(codec.vars.iter().chain([&v]));
    let (i, c) = (fresh.var("i")?, fresh.var("c")?);
    let (s, c_s) = (fresh.var("s")?, fresh.var("c")?);
    let (pow, k) = (fresh.var("pow")?, fresh.var("k")?);
    let decoder = codec::gen_decoder_with(&codec, &i, &mut fresh)?;
    let instrumented = instrument_exact_steps(q, &s)?;
    let power = parse(&format!(
        "{pow} := 1; {k} := 0; while ({k} < {s} + 1) {{ {pow} := {pow} * 2; {k} := {k} + 1 }}; \
         {v} := {FLAG_VAR} * {pow}"
    ))
    .expect("power template parses");
    let program = Program::seq_all([
        geometric_generator(&i, &c),
        geometric_generator(&s, &c_s),
        Program::assign(v.clone(), ArithExpr::int(0)),
        decoder,
        instrumented,
        power,
    ]);
    Ok(ReductionOutput {
        program,
        target_var: Some(v),
        target_value: Some(Rational::one()),
        kind: ReductionKind::UhToUexp,
        source_hash: source_hash(q),
    })
}
