use std::fmt::Write;

use super::ast::{ArithExpr, BoolExpr, Program};
use crate::rational::to_literal_string;

/// Line width above which [`pretty_print_wrapped`] breaks a construct over
/// several lines.
pub const DEFAULT_WIDTH: usize = 80;

/// Single-line concrete syntax. `parse(&pretty_print(p)) == p` for every `p`.
pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    seq_compact(p, &mut out);
    out
}

/// Multi-line layout: any construct whose single-line form does not fit in
/// `width` columns is broken up and its children indented.
pub fn pretty_print_wrapped(p: &Program, width: usize) -> String {
    let mut out = String::new();
    seq_wrapped(p, 0, width, &mut out);
    out
}

pub fn print_arith(e: &ArithExpr) -> String {
    let mut out = String::new();
    arith(e, 0, &mut out);
    out
}

pub fn print_bool(b: &BoolExpr) -> String {
    let mut out = String::new();
    boolean(b, 0, &mut out);
    out
}

fn seq_items(p: &Program) -> Vec<&Program> {
    let mut items = Vec::new();
    let mut cur = p;
    while let Program::Seq(first, rest) = cur {
        items.push(first.as_ref());
        cur = rest;
    }
    items.push(cur);
    items
}

fn seq_compact(p: &Program, out: &mut String) {
    for (n, item) in seq_items(p).into_iter().enumerate() {
        if n > 0 {
            out.push_str("; ");
        }
        stmt_compact(item, out);
    }
}

fn stmt_compact(p: &Program, out: &mut String) {
    match p {
        Program::Assign(v, e) => {
            let _ = write!(out, "{v} := ");
            arith(e, 0, out);
        }
        Program::Seq(..) => {
            // A left-nested sequence needs grouping to survive re-parsing.
            out.push('{');
            seq_compact(p, out);
            out.push('}');
        }
        Program::Choice(l, prob, r) => {
            out.push('{');
            seq_compact(l, out);
            let _ = write!(out, "}} [{}] {{", to_literal_string(prob));
            seq_compact(r, out);
            out.push('}');
        }
        Program::While(guard, body) => {
            out.push_str("while (");
            boolean(guard, 0, out);
            out.push_str(") { ");
            seq_compact(body, out);
            out.push_str(" }");
        }
    }
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn fits(p: &Program, level: usize, width: usize) -> Option<String> {
    let mut line = String::new();
    stmt_compact(p, &mut line);
    (level * 4 + line.len() <= width).then_some(line)
}

fn seq_wrapped(p: &Program, level: usize, width: usize, out: &mut String) {
    let items = seq_items(p);
    let mut compact = String::new();
    seq_compact(p, &mut compact);
    if level * 4 + compact.len() <= width {
        indent(level, out);
        out.push_str(&compact);
        return;
    }
    for (n, item) in items.into_iter().enumerate() {
        if n > 0 {
            out.push_str(";\n");
        }
        stmt_wrapped(item, level, width, out);
    }
}

fn stmt_wrapped(p: &Program, level: usize, width: usize, out: &mut String) {
    if let Some(line) = fits(p, level, width) {
        indent(level, out);
        out.push_str(&line);
        return;
    }
    match p {
        Program::Assign(..) => {
            indent(level, out);
            stmt_compact(p, out);
        }
        Program::Seq(..) => {
            indent(level, out);
            out.push_str("{\n");
            seq_wrapped(p, level + 1, width, out);
            out.push('\n');
            indent(level, out);
            out.push('}');
        }
        Program::Choice(l, prob, r) => {
            indent(level, out);
            out.push_str("{\n");
            seq_wrapped(l, level + 1, width, out);
            out.push('\n');
            indent(level, out);
            let _ = writeln!(out, "}} [{}] {{", to_literal_string(prob));
            seq_wrapped(r, level + 1, width, out);
            out.push('\n');
            indent(level, out);
            out.push('}');
        }
        Program::While(guard, body) => {
            indent(level, out);
            out.push_str("while (");
            boolean(guard, 0, out);
            out.push_str(") {\n");
            seq_wrapped(body, level + 1, width, out);
            out.push('\n');
            indent(level, out);
            out.push('}');
        }
    }
}

/// `ctx` is the binding strength required by the surrounding operator.
fn arith(e: &ArithExpr, ctx: u8, out: &mut String) {
    match e {
        ArithExpr::Lit(value) => out.push_str(&to_literal_string(value)),
        ArithExpr::Var(v) => out.push_str(v.name()),
        ArithExpr::Bin(op, l, r) => {
            let prec = op.precedence();
            let paren = prec < ctx;
            if paren {
                out.push('(');
            }
            arith(l, prec, out);
            let _ = write!(out, " {} ", op.symbol());
            // Operators are left-associative: a right operand of equal
            // precedence needs parentheses.
            arith(r, prec + 1, out);
            if paren {
                out.push(')');
            }
        }
    }
}

const OR: u8 = 1;
const AND: u8 = 2;

fn boolean(b: &BoolExpr, ctx: u8, out: &mut String) {
    match b {
        BoolExpr::Cmp(op, l, r) => {
            arith(l, 0, out);
            let _ = write!(out, " {} ", op.symbol());
            arith(r, 0, out);
        }
        BoolExpr::Or(l, r) => binary_bool(l, "||", r, OR, ctx, out),
        BoolExpr::And(l, r) => binary_bool(l, "&&", r, AND, ctx, out),
        BoolExpr::Not(inner) => {
            out.push_str("!(");
            boolean(inner, 0, out);
            out.push(')');
        }
    }
}

fn binary_bool(l: &BoolExpr, sym: &str, r: &BoolExpr, prec: u8, ctx: u8, out: &mut String) {
    let paren = prec < ctx;
    if paren {
        out.push('(');
    }
    boolean(l, prec, out);
    let _ = write!(out, " {sym} ");
    boolean(r, prec + 1, out);
    if paren {
        out.push(')');
    }
}
