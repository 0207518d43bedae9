use num_bigint::BigInt;
use num_traits::Zero;

use super::ParseError;
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(Rational),
    While,
    If,
    Else,
    Skip,
    Div,
    Mod,
    Assign,
    Semi,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("identifier `{name}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::While => "while",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::Skip => "skip",
            Tok::Div => "div",
            Tok::Mod => "mod",
            Tok::Assign => ":=",
            Tok::Semi => ";",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            Tok::Ident(_) | Tok::Number(_) | Tok::Eof => "",
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn eat(&mut self, expected: char) -> bool {
        if self.peek() == Some(expected) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn digits(&mut self) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            out.push(c);
            self.bump();
        }
        out
    }
}

/// Splits source text into tokens.
///
/// A rational literal `n/m` must be written without whitespace around the
/// slash; `n / m` is a division.
pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor { chars: src.chars().peekable(), line: 1, column: 1 };
    let mut out = Vec::new();
    loop {
        while let Some(c) = cur.peek() {
            if c.is_whitespace() {
                cur.bump();
            } else if c == '#' {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            } else {
                break;
            }
        }
        let (line, column) = (cur.line, cur.column);
        let err = |message: String| ParseError::Syntax { line, column, message };
        let Some(c) = cur.peek() else {
            out.push(Token { tok: Tok::Eof, line, column });
            return Ok(out);
        };
        let tok = if c.is_ascii_digit() || c == '.' {
            let int = cur.digits();
            if cur.peek() == Some('.') {
                cur.bump();
                let frac = cur.digits();
                if frac.is_empty() {
                    return Err(err("expected digits after decimal point".into()));
                }
                let int: BigInt = if int.is_empty() { BigInt::zero() } else { int.parse().unwrap() };
                let scale = BigInt::from(10u32).pow(frac.len() as u32);
                let frac: BigInt = frac.parse().unwrap();
                Tok::Number(Rational::new(int * &scale + frac, scale))
            } else if cur.peek() == Some('/') && next_is_digit(&cur) {
                cur.bump();
                let den: BigInt = cur.digits().parse().unwrap();
                if den.is_zero() {
                    return Err(err("rational literal with zero denominator".into()));
                }
                Tok::Number(Rational::new(int.parse().unwrap(), den))
            } else {
                Tok::Number(Rational::from_integer(int.parse().unwrap()))
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut ident = String::new();
            while let Some(c) = cur.peek().filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
                ident.push(c);
                cur.bump();
            }
            match ident.as_str() {
                "while" => Tok::While,
                "if" => Tok::If,
                "else" => Tok::Else,
                "skip" => Tok::Skip,
                "div" => Tok::Div,
                "mod" => Tok::Mod,
                _ => Tok::Ident(ident),
            }
        } else {
            cur.bump();
            match c {
                ':' if cur.eat('=') => Tok::Assign,
                ';' => Tok::Semi,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '+' => Tok::Plus,
                '-' | '−' => Tok::Minus,
                '*' | '·' => Tok::Star,
                '/' => Tok::Slash,
                '<' if cur.eat('=') => Tok::Le,
                '<' => Tok::Lt,
                '>' if cur.eat('=') => Tok::Ge,
                '>' => Tok::Gt,
                '≤' => Tok::Le,
                '≥' => Tok::Ge,
                '≠' => Tok::Ne,
                '=' => {
                    cur.eat('=');
                    Tok::Eq
                }
                '!' if cur.eat('=') => Tok::Ne,
                '!' => Tok::Bang,
                '&' if cur.eat('&') => Tok::AndAnd,
                '|' if cur.eat('|') => Tok::OrOr,
                other => return Err(err(format!("unexpected character `{other}`"))),
            }
        };
        out.push(Token { tok, line, column });
    }
}

fn next_is_digit(cur: &Cursor<'_>) -> bool {
    let mut ahead = cur.chars.clone();
    ahead.next();
    ahead.next().is_some_and(|c| c.is_ascii_digit())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    fn num(n: i64, d: i64) -> Tok {
        Tok::Number(Rational::new(n.into(), d.into()))
    }

    #[test]
    fn tight_slash_is_a_literal() {
        assert_eq!(toks("1/2"), vec![num(1, 2), Tok::Eof]);
        assert_eq!(toks("1 / 2"), vec![num(1, 1), Tok::Slash, num(2, 1), Tok::Eof]);
        assert_eq!(toks("x/2"), vec![Tok::Ident("x".into()), Tok::Slash, num(2, 1), Tok::Eof]);
        assert_eq!(toks("0.5"), vec![num(1, 2), Tok::Eof]);
    }

    #[test]
    fn comments_and_positions() {
        let t = tokenize("# header\n  x := 1 # trailing\n").unwrap();
        assert_eq!(t[0].tok, Tok::Ident("x".into()));
        assert_eq!((t[0].line, t[0].column), (2, 3));
        assert_eq!(t.len(), 4);
    }

    #[test]
    fn unicode_operators() {
        assert_eq!(toks("≠ ≤ ≥ −"), vec![Tok::Ne, Tok::Le, Tok::Ge, Tok::Minus, Tok::Eof]);
    }

    #[test]
    fn errors_carry_position() {
        match tokenize("x := 1/0") {
            Err(ParseError::Syntax { line: 1, column: 6, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(tokenize("x := @").is_err());
    }
}
