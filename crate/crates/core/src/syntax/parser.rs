use std::collections::HashSet;

use super::ast::{ArithExpr, ArithOp, BoolExpr, CmpOp, Program, Var};
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

/// Name shared by every desugared `skip`.
pub const SKIP_VAR: &str = "__unit";

/// Parses program text into its core AST.
///
/// `skip` and `if`/`else` are desugared while parsing, so the result only
/// contains the four core statement forms.
pub fn parse(text: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(text)?;
    let taken = tokens
        .iter()
        .filter_map(|t| match &t.tok {
            Tok::Ident(name) => Some(name.clone()),
            _ => None,
        })
        .collect();
    let mut parser = Parser { tokens, pos: 0, taken, next_fresh: 0 };
    let program = parser.stmt_seq()?;
    parser.expect(Tok::Eof)?;
    Ok(program)
}

pub fn parse_arith(text: &str) -> Result<ArithExpr, ParseError> {
    let mut parser = Parser { tokens: tokenize(text)?, pos: 0, taken: HashSet::new(), next_fresh: 0 };
    let e = parser.arith()?;
    parser.expect(Tok::Eof)?;
    Ok(e)
}

pub fn parse_bool(text: &str) -> Result<BoolExpr, ParseError> {
    let mut parser = Parser { tokens: tokenize(text)?, pos: 0, taken: HashSet::new(), next_fresh: 0 };
    let b = parser.bool_or()?;
    parser.expect(Tok::Eof)?;
    Ok(b)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    /// Identifiers present in the source; fresh names avoid them.
    taken: HashSet<String>,
    next_fresh: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn check(&self, tok: &Tok) -> bool {
        self.peek() == tok
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.check(tok) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error_here(&self, message: String) -> ParseError {
        let t = &self.tokens[self.pos];
        ParseError::Syntax { line: t.line, column: t.column, message }
    }

    fn expect(&mut self, tok: Tok) -> Result<Token, ParseError> {
        if self.check(&tok) {
            Ok(self.advance())
        } else {
            let expected = match &tok {
                Tok::Eof => "end of input".to_string(),
                other => other.describe(),
            };
            Err(self.error_here(format!("expected {expected}, found {}", self.peek().describe())))
        }
    }

    fn fresh_flag(&mut self) -> Var {
        loop {
            let name = format!("__t{}", self.next_fresh);
            self.next_fresh += 1;
            if self.taken.insert(name.clone()) {
                return Var::new(&name);
            }
        }
    }

    fn stmt_seq(&mut self) -> Result<Program, ParseError> {
        let mut stmts = vec![self.stmt()?];
        while self.eat(&Tok::Semi) {
            if matches!(self.peek(), Tok::RBrace | Tok::Eof) {
                break;
            }
            stmts.push(self.stmt()?);
        }
        Ok(Program::seq_all(stmts))
    }

    fn block(&mut self) -> Result<Program, ParseError> {
        self.expect(Tok::LBrace)?;
        let body = self.stmt_seq()?;
        self.expect(Tok::RBrace)?;
        Ok(body)
    }

    fn stmt(&mut self) -> Result<Program, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                self.expect(Tok::Assign)?;
                let e = self.arith()?;
                Ok(Program::Assign(Var::new(&name), e))
            }
            Tok::Skip => {
                self.advance();
                Ok(skip())
            }
            Tok::While => {
                self.advance();
                let guard = self.paren_guard()?;
                let body = self.block()?;
                Ok(Program::while_loop(guard, body))
            }
            Tok::If => self.if_stmt(),
            Tok::LBrace => {
                let left = self.block()?;
                if !self.check(&Tok::LBracket) {
                    return Ok(left);
                }
                self.advance();
                let at = self.tokens[self.pos].clone();
                let p = match self.advance().tok {
                    Tok::Number(p) => p,
                    other => {
                        return Err(ParseError::Syntax {
                            line: at.line,
                            column: at.column,
                            message: format!("expected probability literal, found {}", other.describe()),
                        })
                    }
                };
                self.expect(Tok::RBracket)?;
                let right = self.block()?;
                Program::choice(left, p.clone(), right).ok_or(ParseError::ProbabilityRange {
                    line: at.line,
                    column: at.column,
                    value: p,
                })
            }
            other => Err(self.error_here(format!("expected a statement, found {}", other.describe()))),
        }
    }

    fn paren_guard(&mut self) -> Result<BoolExpr, ParseError> {
        self.expect(Tok::LParen)?;
        let guard = self.bool_or()?;
        self.expect(Tok::RParen)?;
        Ok(guard)
    }

    fn if_stmt(&mut self) -> Result<Program, ParseError> {
        self.expect(Tok::If)?;
        let guard = self.paren_guard()?;
        let then_branch = self.block()?;
        let else_branch = if self.eat(&Tok::Else) {
            if self.check(&Tok::If) {
                self.if_stmt()?
            } else {
                self.block()?
            }
        } else {
            skip()
        };
        let flag = self.fresh_flag();
        Ok(desugar_if(&flag, guard, then_branch, else_branch))
    }

    fn bool_or(&mut self) -> Result<BoolExpr, ParseError> {
        let mut lhs = self.bool_and()?;
        while self.eat(&Tok::OrOr) {
            lhs = lhs.or(self.bool_and()?);
        }
        Ok(lhs)
    }

    fn bool_and(&mut self) -> Result<BoolExpr, ParseError> {
        let mut lhs = self.bool_unary()?;
        while self.eat(&Tok::AndAnd) {
            lhs = lhs.and(self.bool_unary()?);
        }
        Ok(lhs)
    }

    fn bool_unary(&mut self) -> Result<BoolExpr, ParseError> {
        if self.eat(&Tok::Bang) {
            return Ok(self.bool_unary()?.not());
        }
        self.bool_atom()
    }

    fn bool_atom(&mut self) -> Result<BoolExpr, ParseError> {
        let start = self.pos;
        let mut paren_err = None;
        if self.eat(&Tok::LParen) {
            // A parenthesised boolean never parses as an arithmetic operand, so
            // success here is unambiguous.
            match self.bool_or().and_then(|b| self.expect(Tok::RParen).map(|_| b)) {
                Ok(b) => return Ok(b),
                Err(e) => paren_err = Some(e),
            }
            self.pos = start;
        }
        match (self.comparison(), paren_err) {
            (Ok(b), _) => Ok(b),
            (Err(cmp_err), Some(paren_err)) if paren_err.position() > cmp_err.position() => Err(paren_err),
            (Err(cmp_err), _) => Err(cmp_err),
        }
    }

    fn comparison(&mut self) -> Result<BoolExpr, ParseError> {
        let lhs = self.arith()?;
        let op = self.advance();
        let (op, swap) = match op.tok {
            Tok::Lt => (CmpOp::Lt, false),
            Tok::Le => (CmpOp::Le, false),
            Tok::Eq => (CmpOp::Eq, false),
            Tok::Ne => (CmpOp::Ne, false),
            Tok::Gt => (CmpOp::Lt, true),
            Tok::Ge => (CmpOp::Le, true),
            other => {
                return Err(ParseError::Syntax {
                    line: op.line,
                    column: op.column,
                    message: format!("expected a comparison operator, found {}", other.describe()),
                })
            }
        };
        let rhs = self.arith()?;
        Ok(if swap { BoolExpr::cmp(op, rhs, lhs) } else { BoolExpr::cmp(op, lhs, rhs) })
    }

    fn arith(&mut self) -> Result<ArithExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            lhs = ArithExpr::bin(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> Result<ArithExpr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => ArithOp::Mul,
                Tok::Slash => ArithOp::Div,
                Tok::Div => ArithOp::IntDiv,
                Tok::Mod => ArithOp::Mod,
                _ => return Ok(lhs),
            };
            self.advance();
            lhs = ArithExpr::bin(op, lhs, self.factor()?);
        }
    }

    fn factor(&mut self) -> Result<ArithExpr, ParseError> {
        match self.peek().clone() {
            Tok::Number(n) => {
                self.advance();
                Ok(ArithExpr::Lit(n))
            }
            Tok::Ident(name) => {
                self.advance();
                Ok(ArithExpr::Var(Var::new(&name)))
            }
            Tok::LParen => {
                self.advance();
                let e = self.arith()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            other => Err(self.error_here(format!("expected an expression, found {}", other.describe()))),
        }
    }
}

fn skip() -> Program {
    Program::assign(SKIP_VAR, ArithExpr::int(0))
}

/// `flag := 0; while (b && flag = 0) { P; flag := 1 }; while (!(b) && flag = 0) { Q; flag := 1 }`
pub fn desugar_if(flag: &Var, guard: BoolExpr, then_branch: Program, else_branch: Program) -> Program {
    let flag_is_zero = || BoolExpr::eq(ArithExpr::Var(flag.clone()), ArithExpr::int(0));
    let set = |n| Program::Assign(flag.clone(), ArithExpr::int(n));
    Program::seq_all([
        set(0),
        Program::while_loop(guard.clone().and(flag_is_zero()), Program::seq(then_branch, set(1))),
        Program::while_loop(guard.not().and(flag_is_zero()), Program::seq(else_branch, set(1))),
    ])
}
