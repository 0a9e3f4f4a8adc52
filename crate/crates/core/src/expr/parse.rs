use num::BigInt;

use super::{free_indices, Expr, Index, IndexError, IndexValue, Variance};
use crate::canon::Context;
use crate::scalar::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}{}", expected_suffix(.expected))]
    Syntax {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
        expected: Vec<String>,
    },
    #[error("undeclared {what} `{name}` at line {line}, column {column}")]
    Undeclared {
        what: &'static str,
        name: String,
        offset: usize,
        line: usize,
        column: usize,
    },
    #[error(transparent)]
    Index(#[from] IndexError),
}

fn expected_suffix(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(" (expected {})", expected.join(" or "))
    }
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::Undeclared { offset, .. } => Some(*offset),
            ParseError::Index(_) => None,
        }
    }
}

/// Non-fatal findings, such as tensor heads with no declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(String),
    Name(String),
    Cmd(String),
    Sym(char),
    Arrow,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(s) | Tok::Name(s) | Tok::Cmd(s) => format!("`{s}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::Arrow => "`->`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
    space_before: bool,
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.chars().count(), |p| before[p + 1..].chars().count()) + 1;
    (line, column)
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut space = false;
    let word_end = |mut j: usize| {
        while j < bytes.len() && bytes[j].is_ascii_alphanumeric() {
            j += 1;
        }
        j
    };
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            space = true;
            i += 1;
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            Tok::Int(src[start..i].to_string())
        } else if c.is_ascii_alphabetic() {
            i = word_end(i + 1);
            // FORM built-ins such as `e_(...)`, `d_(...)`.
            if bytes.get(i) == Some(&b'_') && bytes.get(i + 1) == Some(&b'(') {
                i += 1;
            }
            if bytes.get(i) == Some(&b'?') {
                i += 1;
            }
            Tok::Name(src[start..i].to_string())
        } else if c == b'\\' {
            if !bytes.get(i + 1).is_some_and(u8::is_ascii_alphabetic) {
                let (line, column) = line_col(src, i);
                return Err(ParseError::Syntax {
                    offset: i,
                    line,
                    column,
                    message: "expected a command name after `\\`".into(),
                    expected: Vec::new(),
                });
            }
            i = word_end(i + 1);
            if bytes.get(i) == Some(&b'?') {
                i += 1;
            }
            Tok::Cmd(src[start..i].to_string())
        } else if c == b'-' && bytes.get(i + 1) == Some(&b'>') {
            i += 2;
            Tok::Arrow
        } else if b"+-*/^_(){},=".contains(&c) {
            i += 1;
            Tok::Sym(c as char)
        } else {
            let (line, column) = line_col(src, i);
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(ParseError::Syntax {
                offset: i,
                line,
                column,
                message: format!("unexpected character `{ch}`"),
                expected: Vec::new(),
            });
        };
        out.push(Token {
            tok,
            offset: start,
            space_before: space,
        });
        space = false;
    }
    out.push(Token {
        tok: Tok::Eof,
        offset: src.len(),
        space_before: space,
    });
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
    ctx: &'a Context,
    diagnostics: Vec<Diagnostic>,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn new(src: &'a str, ctx: &'a Context) -> PResult<Self> {
        Ok(Parser {
            src,
            toks: lex(src)?,
            pos: 0,
            ctx,
            diagnostics: Vec::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].offset
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, c: char) -> bool {
        *self.peek() == Tok::Sym(c)
    }

    fn error(&self, message: impl Into<String>, expected: &[&str]) -> ParseError {
        let offset = self.offset();
        let (line, column) = line_col(self.src, offset);
        ParseError::Syntax {
            offset,
            line,
            column,
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        self.error(format!("unexpected {}", self.peek().describe()), expected)
    }

    fn expect_sym(&mut self, c: char) -> PResult<()> {
        if self.is_sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("`{c}`")]))
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected(&["end of input"]))
        }
    }

    fn equation(&mut self) -> PResult<Expr> {
        let lhs = self.sum()?;
        if self.is_sym('=') {
            self.bump();
            let rhs = self.sum()?;
            return Ok(Expr::equation(lhs, rhs));
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> PResult<Expr> {
        let mut terms = Vec::new();
        let mut negative = false;
        if self.is_sym('+') || self.is_sym('-') {
            negative = self.bump() == Tok::Sym('-');
        }
        loop {
            let t = self.product()?;
            terms.push(if negative { t.neg() } else { t });
            if self.is_sym('+') || self.is_sym('-') {
                negative = self.bump() == Tok::Sym('-');
            } else {
                break;
            }
        }
        Ok(Expr::sum(terms))
    }

    fn starts_factor(&self) -> bool {
        matches!(self.peek(), Tok::Int(_) | Tok::Name(_) | Tok::Cmd(_) | Tok::Sym('(') | Tok::Sym('{'))
    }

    fn product(&mut self) -> PResult<Expr> {
        if !self.starts_factor() {
            return Err(self.unexpected(&["a term"]));
        }
        let mut factors = vec![self.power()?];
        loop {
            if self.is_sym('*') {
                self.bump();
                factors.push(self.power()?);
            } else if self.is_sym('/') {
                self.bump();
                let d = self.power()?;
                if d.is_zero() {
                    return Err(self.error("division by zero", &[]));
                }
                factors.push(Expr::power(d, -1));
            } else if self.starts_factor() {
                factors.push(self.power()?);
            } else {
                break;
            }
        }
        Ok(Expr::product(factors))
    }

    /// Integer exponent after `^`, if the upcoming tokens form one.
    fn exponent_ahead(&self) -> Option<(usize, i64)> {
        let int = |t: &Tok| match t {
            Tok::Int(s) => s.parse::<i64>().ok(),
            _ => None,
        };
        match (self.peek_at(1), self.peek_at(2), self.peek_at(3), self.peek_at(4)) {
            (Tok::Int(_), ..) => Some((2, int(self.peek_at(1))?)),
            (Tok::Sym('-'), Tok::Int(_), ..) => Some((3, -int(self.peek_at(2))?)),
            (Tok::Sym('{'), Tok::Int(_), Tok::Sym('}'), _) => Some((4, int(self.peek_at(2))?)),
            (Tok::Sym('{'), Tok::Sym('-'), Tok::Int(_), Tok::Sym('}')) => Some((5, -int(self.peek_at(3))?)),
            _ => None,
        }
    }

    fn power(&mut self) -> PResult<Expr> {
        let mut base = self.primary()?;
        while self.is_sym('^') {
            match self.exponent_ahead() {
                Some((n, e)) => {
                    for _ in 0..n {
                        self.bump();
                    }
                    if base.is_zero() && e < 0 {
                        return Err(self.error("division by zero", &[]));
                    }
                    base = Expr::power(base, e);
                }
                None => return Err(self.unexpected(&["an integer exponent"])),
            }
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let offset = self.offset();
        match self.bump() {
            Tok::Int(s) => {
                let n: BigInt = s.parse().map_err(|_| self.error("bad integer", &[]))?;
                Ok(Expr::Number(Rational::from_integer(n)))
            }
            Tok::Sym('(') => {
                let e = self.sum()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Sym('{') => {
                let e = self.sum()?;
                self.expect_sym('}')?;
                Ok(e)
            }
            Tok::Cmd(c) if c == "\\sqrt" => self.sqrt_neg_det(),
            Tok::Cmd(c) if c == "\\frac" => {
                self.expect_sym('{')?;
                let n = self.sum()?;
                self.expect_sym('}')?;
                self.expect_sym('{')?;
                let d = self.sum()?;
                self.expect_sym('}')?;
                if d.is_zero() {
                    return Err(self.error("division by zero", &[]));
                }
                Ok(Expr::product(vec![n, Expr::power(d, -1)]))
            }
            Tok::Cmd(c) if self.ctx.derivative_kind(&c).is_some() => self.derivative(c),
            Tok::Cmd(c) if (c == "\\partial" || c == "\\nabla") && self.is_sym('_') => {
                Err(self.undeclared("derivative operator", &c, offset))
            }
            Tok::Cmd(c) | Tok::Name(c) => self.named(c, offset),
            _ => {
                self.pos -= 1;
                Err(self.unexpected(&["a term"]))
            }
        }
    }

    fn undeclared(&self, what: &'static str, name: &str, offset: usize) -> ParseError {
        let (line, column) = line_col(self.src, offset);
        ParseError::Undeclared {
            what,
            name: name.to_string(),
            offset,
            line,
            column,
        }
    }

    fn sqrt_neg_det(&mut self) -> PResult<Expr> {
        self.expect_sym('{')?;
        self.expect_sym('-')?;
        let name = match self.bump() {
            Tok::Name(n) | Tok::Cmd(n) => n,
            _ => {
                self.pos -= 1;
                return Err(self.unexpected(&["a metric name"]));
            }
        };
        self.expect_sym('}')?;
        Ok(Expr::sqrt_neg_det(&name))
    }

    fn derivative(&mut self, op: String) -> PResult<Expr> {
        self.expect_sym('_')?;
        let index = if self.is_sym('{') {
            self.bump();
            let i = self.index(Variance::Lower)?;
            self.expect_sym('}')?;
            i
        } else {
            self.index(Variance::Lower)?
        };
        if !self.starts_factor() {
            return Err(self.unexpected(&["a derivative argument"]));
        }
        let arg = self.power()?;
        Ok(Expr::derivative(&op, index, arg))
    }

    fn index(&mut self, variance: Variance) -> PResult<Index> {
        let offset = self.offset();
        match self.bump() {
            Tok::Int(s) => {
                let v = s.parse::<u32>().map_err(|_| self.error("index value out of range", &[]))?;
                Ok(Index::concrete(v, variance))
            }
            Tok::Name(n) | Tok::Cmd(n) => {
                if !self.ctx.is_index(&n) {
                    return Err(self.undeclared("index", &n, offset));
                }
                Ok(Index {
                    value: IndexValue::Symbol(n),
                    variance,
                })
            }
            _ => {
                self.pos -= 1;
                Err(self.unexpected(&["an index"]))
            }
        }
    }

    /// True when `^` starts an integer exponent rather than an index group.
    fn caret_is_power(&self, head: &str) -> bool {
        if self.ctx.is_tensor(head) {
            return false;
        }
        self.exponent_ahead().is_some()
    }

    fn named(&mut self, head: String, offset: usize) -> PResult<Expr> {
        if self.is_sym('(') && !self.toks[self.pos].space_before {
            return self.call(head, offset);
        }
        let mut indices = Vec::new();
        loop {
            let variance = if self.is_sym('_') {
                Variance::Lower
            } else if self.is_sym('^') && !self.caret_is_power(&head) {
                Variance::Upper
            } else {
                break;
            };
            self.bump();
            if self.is_sym('{') {
                self.bump();
                while !self.is_sym('}') {
                    if *self.peek() == Tok::Eof {
                        return Err(self.unexpected(&["`}`"]));
                    }
                    indices.push(self.index(variance)?);
                    if self.is_sym(',') {
                        self.bump();
                    }
                }
                self.bump();
            } else {
                indices.push(self.index(variance)?);
            }
        }
        if indices.is_empty() {
            return Ok(Expr::Atom(head));
        }
        self.note_head(&head, offset);
        Ok(Expr::Tensor { head, indices })
    }

    fn call(&mut self, head: String, offset: usize) -> PResult<Expr> {
        self.expect_sym('(')?;
        let mut indices = Vec::new();
        while !self.is_sym(')') {
            indices.push(self.index(Variance::Lower)?);
            if self.is_sym(',') {
                self.bump();
            } else if !self.is_sym(')') {
                return Err(self.unexpected(&["`,`", "`)`"]));
            }
        }
        self.bump();
        self.note_head(&head, offset);
        Ok(Expr::Tensor { head, indices })
    }

    fn note_head(&mut self, head: &str, offset: usize) {
        if !head.ends_with('?') && !self.ctx.is_tensor(head) {
            self.diagnostics.push(Diagnostic {
                offset,
                message: format!("tensor `{head}` has no declaration"),
            });
        }
    }
}

/// Parses one expression (optionally an equation `lhs = rhs`) and checks
/// index balance.
pub fn parse(src: &str, ctx: &Context) -> Result<Expr, ParseError> {
    parse_with_diagnostics(src, ctx).map(|(e, _)| e)
}

pub fn parse_with_diagnostics(src: &str, ctx: &Context) -> Result<(Expr, Vec<Diagnostic>), ParseError> {
    let mut p = Parser::new(src, ctx)?;
    let e = p.equation()?;
    p.expect_eof()?;
    free_indices(&e)?;
    Ok((e, p.diagnostics))
}

/// Separator for [`parse_sides`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Separator {
    Arrow,
    Equals,
}

/// Parses `lhs -> rhs` or `lhs = rhs`. Each side must be balanced on its
/// own; the two sides are not compared.
pub fn parse_sides(src: &str, ctx: &Context, sep: Separator) -> Result<(Expr, Expr), ParseError> {
    let mut p = Parser::new(src, ctx)?;
    let lhs = p.sum()?;
    match (sep, p.peek()) {
        (Separator::Arrow, Tok::Arrow) | (Separator::Equals, Tok::Sym('=')) => {
            p.bump();
        }
        _ => {
            return Err(p.unexpected(&[match sep {
                Separator::Arrow => "`->`",
                Separator::Equals => "`=`",
            }]))
        }
    }
    let rhs = p.sum()?;
    p.expect_eof()?;
    free_indices(&lhs)?;
    free_indices(&rhs)?;
    Ok((lhs, rhs))
}
