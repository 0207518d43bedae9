//! Exact step-count instrumentation.
//!
//! Cost model: one unit per executed assignment of the original program, plus
//! one unit per iteration of a loop whose body does not begin with an
//! assignment. The extra unit makes every loop iteration cost something, so
//! the instrumented program always terminates once the budget is spent.

use crate::syntax::{parse, parse_bool, BoolExpr, Program, Var};

use super::ReductionError;

pub const COUNT_VAR: &str = "__cnt";
pub const ABORT_VAR: &str = "__abort";
pub const FLAG_VAR: &str = "__flag";

/// Returns `Q'`, which always terminates and, started with `s_var = s`, ends
/// with `__flag = 1` iff `Q` halts after exactly `s` cost units.
pub fn instrument_exact_steps(q: &Program, s_var: &Var) -> Result<Program, ReductionError> {
    if !q.is_ordinary() {
        return Err(ReductionError::NotOrdinary);
    }
    let used = q.vars();
    for name in [s_var.clone(), Var::new(COUNT_VAR), Var::new(ABORT_VAR), Var::new(FLAG_VAR)] {
        if used.contains(&name) {
            return Err(ReductionError::ReservedVarClash(name));
        }
    }
    let cx = Ctx {
        tick: parse(&format!(
            "{COUNT_VAR} := {COUNT_VAR} + 1; while ({s_var} < {COUNT_VAR} && {ABORT_VAR} = 0) {{ {ABORT_VAR} := 1 }}"
        ))
        .expect("tick template parses"),
        live: parse_bool(&format!("{ABORT_VAR} = 0")).expect("guard template parses"),
    };
    let prologue = parse(&format!("{COUNT_VAR} := 0; {ABORT_VAR} := 0")).expect("prologue parses");
    let epilogue = parse(&format!(
        "{FLAG_VAR} := 0; while ({ABORT_VAR} = 0 && {COUNT_VAR} = {s_var} && {FLAG_VAR} = 0) {{ {FLAG_VAR} := 1 }}"
    ))
    .expect("epilogue parses");
    Ok(Program::seq_all([prologue, cx.rewrite(q), epilogue]))
}

struct Ctx {
    tick: Program,
    /// `__abort = 0`
    live: BoolExpr,
}

impl Ctx {
    fn rewrite(&self, p: &Program) -> Program {
        match p {
            Program::Assign(..) => Program::seq(self.tick.clone(), p.clone()),
            Program::Seq(a, b) => Program::seq(self.rewrite(a), self.rewrite(b)),
            Program::While(guard, body) => {
                let mut new_body = self.rewrite(body);
                if !starts_with_assign(body) {
                    new_body = Program::seq(self.tick.clone(), new_body);
                }
                Program::while_loop(guard.clone().and(self.live.clone()), new_body)
            }
            Program::Choice(..) => unreachable!("checked ordinary"),
        }
    }
}

fn starts_with_assign(p: &Program) -> bool {
    match p {
        Program::Assign(..) => true,
        Program::Seq(a, _) => starts_with_assign(a),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explorer::{explore, ExploreOptions};
    use crate::rational::Rational;

    /// Runs the instrumented `q` after `setup` and `__s := s`; returns `__flag`.
    fn flag_after(q: &Program, s: u64, setup: &str) -> Rational {
        let s_var = Var::new("__s");
        let p = Program::seq_all([
            parse(&format!("{setup}__s := {s}")).unwrap(),
            instrument_exact_steps(q, &s_var).unwrap(),
        ]);
        let report = explore(&p, &ExploreOptions::with_nodes(100_000), &[Var::new(FLAG_VAR)]).unwrap();
        assert_eq!(report.terminated_mass, Rational::from_integer(1.into()), "instrumented program terminates");
        report.expectation(&Var::new(FLAG_VAR)).unwrap().clone()
    }

    #[test]
    fn single_assignment() {
        let q = parse("x := 1").unwrap();
        for s in 0..5 {
            let expected = if s == 1 { 1 } else { 0 };
            assert_eq!(flag_after(&q, s, ""), Rational::from_integer(expected.into()), "s = {s}");
        }
    }

    #[test]
    fn countdown_from_three() {
        let q = parse("while (x != 0) {x := x - 1}").unwrap();
        for s in 0..8 {
            let expected = if s == 3 { 1 } else { 0 };
            assert_eq!(flag_after(&q, s, "x := 3; "), Rational::from_integer(expected.into()), "s = {s}");
        }
    }

    #[test]
    fn divergent_input_never_flags() {
        let q = parse("while (x = 0) {y := y + 1}").unwrap();
        for s in 0..10 {
            assert_eq!(flag_after(&q, s, ""), Rational::from_integer(0.into()));
        }
        let empty_body = parse("while (x = 0) { while (y = 1) {y := 0} }").unwrap();
        for s in 0..10 {
            assert_eq!(flag_after(&empty_body, s, ""), Rational::from_integer(0.into()));
        }
    }

    #[test]
    fn preconditions() {
        let s = Var::new("__s");
        let fair = parse("{x := 1} [1/2] {x := 0}").unwrap();
        assert_eq!(instrument_exact_steps(&fair, &s), Err(ReductionError::NotOrdinary));
        let clash = parse("__cnt := 1").unwrap();
        assert_eq!(instrument_exact_steps(&clash, &s), Err(ReductionError::ReservedVarClash(Var::new(COUNT_VAR))));
        let clash = parse("__s := 1").unwrap();
        assert_eq!(instrument_exact_steps(&clash, &s), Err(ReductionError::ReservedVarClash(s)));
    }
}
