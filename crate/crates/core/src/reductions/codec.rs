//! Bijection between naturals and input valuations of a program.
//!
//! A natural `i` is split into one natural per variable by iterated Cantor
//! unpairing; each component `n` then maps to a nonnegative rational: `0`
//! for `n = 0`, otherwise node `n` of the Calkin–Wilf tree (node 1 is `1/1`,
//! node `2m` is `a/(a+b)` and node `2m+1` is `(a+b)/b` for node `m = a/b`).

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Fresh, ReductionError};
use crate::rational::Rational;
use crate::semantics::Valuation;
use crate::syntax::{parse, Program, Var};

pub const SCHEME: &str = "cantor-pairing/calkin-wilf";

/// `(a + b)(a + b + 1)/2 + b`.
pub fn cantor_pair(a: &BigUint, b: &BigUint) -> BigUint {
    let s = a + b;
    (&s * (&s + 1u32)) / 2u32 + b
}

pub fn cantor_unpair(n: &BigUint) -> (BigUint, BigUint) {
    let w = ((n * 8u32 + 1u32).sqrt() - 1u32) / 2u32;
    let t = (&w * (&w + 1u32)) / 2u32;
    let b = n - t;
    let a = w - &b;
    (a, b)
}

/// `0 ↦ 0`, `n ↦ ` Calkin–Wilf node `n`.
pub fn nat_to_rat(n: &BigUint) -> Rational {
    if n.is_zero() {
        return Rational::zero();
    }
    let (mut a, mut b) = (BigUint::one(), BigUint::one());
    for bit in (0..n.bits() - 1).rev() {
        if n.bit(bit) {
            a += &b;
        } else {
            b += &a;
        }
    }
    Rational::new(BigInt::from(a), BigInt::from(b))
}

/// Inverse of [`nat_to_rat`].
pub fn rat_to_nat(q: &Rational) -> Result<BigUint, ReductionError> {
    if q.is_negative() {
        return Err(ReductionError::NegativeRational(q.clone()));
    }
    if q.is_zero() {
        return Ok(BigUint::zero());
    }
    let mut a = q.numer().magnitude().clone();
    let mut b = q.denom().magnitude().clone();
    // Walk up to the root, collecting path bits from the least significant end.
    let mut n = BigUint::zero();
    let mut pos = 0u64;
    while !(a.is_one() && b.is_one()) {
        if a < b {
            // left children: a/(a+b) came from a/b
            let runs = (&b - 1u32) / &a;
            b -= &a * &runs;
            pos += runs.to_u64().expect("path length fits in u64");
        } else {
            let runs = (&a - 1u32) / &b;
            a -= &b * &runs;
            let len = runs.to_u64().expect("path length fits in u64");
            n += ((BigUint::one() << len) - 1u32) << pos;
            pos += len;
        }
    }
    Ok(n + (BigUint::one() << pos))
}

/// Encoding of inputs for a fixed variable order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputCodec {
    pub vars: Vec<Var>,
    pub scheme: &'static str,
}

impl InputCodec {
    pub fn new(vars: Vec<Var>) -> Self {
        InputCodec { vars, scheme: SCHEME }
    }

    /// Codec over the variables of `q` in first-occurrence order.
    pub fn for_program(q: &Program) -> Self {
        InputCodec::new(q.vars())
    }
}

fn split(i: &BigUint, parts: usize) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(parts);
    let mut rest = i.clone();
    for _ in 1..parts {
        let (a, b) = cantor_unpair(&rest);
        out.push(a);
        rest = b;
    }
    if parts > 0 {
        out.push(rest);
    }
    out
}

pub fn g_decode(codec: &InputCodec, i: &BigUint) -> Valuation {
    codec.vars.iter().cloned().zip(split(i, codec.vars.len()).iter().map(nat_to_rat)).collect()
}

pub fn g_encode(codec: &InputCodec, env: &Valuation) -> Result<BigUint, ReductionError> {
    if let Some(v) = env.support().find(|v| !codec.vars.contains(v)) {
        return Err(ReductionError::OutsideCodec(v.clone()));
    }
    let parts = codec.vars.iter().map(|v| rat_to_nat(&env.get(v))).collect::<Result<Vec<_>, _>>()?;
    let Some((last, init)) = parts.split_last() else {
        return Ok(BigUint::zero());
    };
    Ok(init.iter().rev().fold(last.clone(), |rest, a| cantor_pair(a, &rest)))
}

/// Object-language decoder: started with `i_var` holding a natural and the
/// codec variables at zero, it terminates with the codec variables holding
/// `g_decode(codec, i)`. Only temporaries drawn from `fresh` are written
/// besides the codec variables.
pub fn gen_decoder_program(codec: &InputCodec, i_var: &Var) -> Result<Program, ReductionError> {
    let mut fresh = Fresh::avoiding(codec.vars.iter().chain([i_var]));
    gen_decoder_with(codec, i_var, &mut fresh)
}

pub(crate) fn gen_decoder_with(codec: &InputCodec, i_var: &Var, fresh: &mut Fresh) -> Result<Program, ReductionError> {
    if codec.vars.contains(i_var) {
        return Err(ReductionError::DecoderInputClash(i_var.clone()));
    }
    let rest = fresh.var("r")?;
    let (w, tri, a, b) = (fresh.var("w")?, fresh.var("tri")?, fresh.var("a")?, fresh.var("b")?);
    let (n, p, num, den) = (fresh.var("n")?, fresh.var("p")?, fresh.var("num")?, fresh.var("den")?);

    let mut stmts = vec![format!("{rest} := {i_var}")];
    for (j, x) in codec.vars.iter().enumerate() {
        if j + 1 < codec.vars.len() {
            // Cantor unpairing: largest w with w(w+1)/2 ≤ rest.
            stmts.push(format!(
                "{w} := 0; {tri} := 0; \
                 while ({tri} + {w} + 1 <= {rest}) {{ {w} := {w} + 1; {tri} := {tri} + {w} }}; \
                 {b} := {rest} - {tri}; {a} := {w} - {b}; {n} := {a}; {rest} := {b}"
            ));
        } else {
            stmts.push(format!("{n} := {rest}"));
        }
        // Calkin–Wilf node n, read from the bit below the leading one down.
        let flag = fresh.var("f")?;
        stmts.push(format!(
            "{p} := 1; while (2 * {p} <= {n}) {{ {p} := 2 * {p} }}; \
             {num} := 1; {den} := 1; {p} := {p} div 2; \
             while (0 < {p}) {{ \
                 {flag} := 0; \
                 while (({n} div {p}) mod 2 = 0 && {flag} = 0) {{ {den} := {num} + {den}; {flag} := 1 }}; \
                 while ({flag} = 0) {{ {num} := {num} + {den}; {flag} := 1 }}; \
                 {p} := {p} div 2 \
             }}; \
             {flag} := 0; \
             while (0 < {n} && {flag} = 0) {{ {x} := {num} / {den}; {flag} := 1 }}"
        ));
    }
    Ok(parse(&stmts.join("; ")).expect("decoder template parses"))
}
