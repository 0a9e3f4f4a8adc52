use num::{One, Signed};

use super::{Expr, Index, IndexValue, Variance};
use crate::scalar::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RenderFormat {
    /// The input language; output parses back to the same tree.
    #[default]
    Plain,
    Latex,
    /// FORM-style listing: `*` products, `g(0,1)` call syntax.
    Form,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RenderOptions {
    pub format: RenderFormat,
    /// Maximum line width; values below 20 are raised to 20.
    pub width: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            format: RenderFormat::Plain,
            width: 80,
        }
    }
}

impl RenderOptions {
    pub fn new(format: RenderFormat, width: usize) -> Self {
        RenderOptions { format, width }
    }
}

pub fn render(expr: &Expr, opts: &RenderOptions) -> String {
    let width = opts.width.max(20);
    match opts.format {
        RenderFormat::Form => {
            wrap_form(&form(expr), width).join("\n")
        }
        RenderFormat::Plain => wrap_terms(expr, width, plain, plain_term),
        RenderFormat::Latex => wrap_terms(expr, width, latex, latex_term),
    }
}

/// `name =` followed by the wrapped, indented, `;`-terminated body.
pub fn render_form_block(name: &str, expr: &Expr, width: usize) -> String {
    let body = format!("{};", form(expr));
    let mut out = format!("{name} =");
    for line in wrap_form(&body, width.max(20)) {
        out.push('\n');
        out.push_str(&line);
    }
    out
}

fn wrap_terms(
    expr: &Expr,
    width: usize,
    whole: fn(&Expr) -> String,
    term: fn(&Expr) -> (bool, String),
) -> String {
    let Expr::Sum(terms) = expr else {
        return whole(expr);
    };
    let full = whole(expr);
    if full.chars().count() <= width {
        return full;
    }
    let mut lines: Vec<String> = Vec::new();
    let mut cur = String::new();
    for (k, t) in terms.iter().enumerate() {
        let (neg, body) = term(t);
        let chunk = match (k, neg) {
            (0, true) => format!("-{body}"),
            (0, false) => body,
            (_, true) => format!(" - {body}"),
            (_, false) => format!(" + {body}"),
        };
        if !cur.is_empty() && cur.chars().count() + chunk.chars().count() > width {
            lines.push(std::mem::take(&mut cur));
            cur.push_str(chunk.trim_start());
        } else {
            cur.push_str(&chunk);
        }
    }
    lines.push(cur);
    lines.join("\n")
}

// ---------------------------------------------------------------- plain

pub(crate) fn plain(e: &Expr) -> String {
    match e {
        Expr::Sum(terms) => join_terms(terms, plain_term),
        Expr::Equation(l, r) => format!("{} = {}", plain(l), plain(r)),
        other => {
            let (neg, body) = plain_term(other);
            if neg {
                format!("-{body}")
            } else {
                body
            }
        }
    }
}

fn join_terms(terms: &[Expr], term: fn(&Expr) -> (bool, String)) -> String {
    let mut out = String::new();
    for (k, t) in terms.iter().enumerate() {
        let (neg, body) = term(t);
        match (k, neg) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        out.push_str(&body);
    }
    out
}

/// Split into numerator factors and (base, positive exponent) denominators.
fn split_factors(factors: &[Expr]) -> (Vec<&Expr>, Vec<(&Expr, i64)>) {
    let mut num = Vec::new();
    let mut den = Vec::new();
    for f in factors {
        match f {
            Expr::Power { base, exponent } if *exponent < 0 => den.push((&**base, -exponent)),
            other => num.push(other),
        }
    }
    (num, den)
}

fn plain_term(t: &Expr) -> (bool, String) {
    let (coef, factors) = t.as_term();
    let neg = coef.is_negative();
    let coef = coef.abs();
    let (num, den) = split_factors(&factors);
    let mut parts: Vec<String> = Vec::new();
    if !coef.is_one() || num.is_empty() {
        parts.push(coef.to_string());
    }
    parts.extend(num.iter().map(|f| plain_factor(f)));
    let mut s = parts.join(" ");
    for (b, e) in den {
        s.push_str(" / ");
        s.push_str(&plain_factor(&Expr::power(b.clone(), e)));
    }
    (neg, s)
}

fn plain_factor(f: &Expr) -> String {
    match f {
        Expr::Sum(_) | Expr::Equation(..) => format!("({})", plain(f)),
        Expr::Number(q) if q.is_negative() || !q.is_integer() => format!("({q})"),
        Expr::Number(q) => q.to_string(),
        Expr::Atom(n) => n.clone(),
        Expr::SqrtNegDet(g) => format!("\\sqrt{{-{g}}}"),
        Expr::Tensor { head, indices } => format!("{head}{}", tex_indices(indices)),
        Expr::Derivative { op, index, arg } => {
            format!("{op}_{{{}}}{{{}}}", index_label(index), plain(arg))
        }
        Expr::Power { base, exponent } => {
            let b = match **base {
                Expr::Atom(_) | Expr::SqrtNegDet(_) => plain_factor(base),
                Expr::Number(ref q) if !q.is_negative() && q.is_integer() => plain_factor(base),
                _ => format!("({})", plain(base)),
            };
            if *exponent < 0 || *exponent > 9 {
                format!("{b}^{{{exponent}}}")
            } else {
                format!("{b}^{exponent}")
            }
        }
        Expr::Product(_) => format!("({})", plain(f)),
    }
}

fn index_label(i: &Index) -> String {
    match &i.value {
        IndexValue::Symbol(s) => s.clone(),
        IndexValue::Value(v) => v.to_string(),
    }
}

/// `_{a b}^{c}` grouping consecutive indices of equal variance.
fn tex_indices(indices: &[Index]) -> String {
    let mut out = String::new();
    let mut k = 0;
    while k < indices.len() {
        let v = indices[k].variance;
        let mut group = Vec::new();
        while k < indices.len() && indices[k].variance == v {
            group.push(index_label(&indices[k]));
            k += 1;
        }
        out.push(if v == Variance::Lower { '_' } else { '^' });
        out.push('{');
        out.push_str(&group.join(" "));
        out.push('}');
    }
    out
}

// ---------------------------------------------------------------- latex

fn latex(e: &Expr) -> String {
    match e {
        Expr::Sum(terms) => join_terms(terms, latex_term),
        Expr::Equation(l, r) => format!("{} = {}", latex(l), latex(r)),
        other => {
            let (neg, body) = latex_term(other);
            if neg {
                format!("-{body}")
            } else {
                body
            }
        }
    }
}

fn latex_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.to_string()
    } else {
        format!("\\frac{{{}}}{{{}}}", q.numer(), q.denom())
    }
}

fn latex_term(t: &Expr) -> (bool, String) {
    let (coef, factors) = t.as_term();
    let neg = coef.is_negative();
    let coef = coef.abs();
    let (num, den) = split_factors(&factors);
    let mut parts: Vec<String> = Vec::new();
    if den.is_empty() {
        if !coef.is_one() || num.is_empty() {
            parts.push(latex_rational(&coef));
        }
    } else {
        let mut d: Vec<String> = Vec::new();
        if !coef.denom().is_one() {
            d.push(coef.denom().to_string());
        }
        d.extend(den.iter().map(|(b, e)| latex_factor(&Expr::power((*b).clone(), *e))));
        parts.push(format!("\\frac{{{}}}{{{}}}", coef.numer(), d.join(" ")));
    }
    parts.extend(num.iter().map(|f| latex_factor(f)));
    (neg, parts.join(" "))
}

fn latex_factor(f: &Expr) -> String {
    match f {
        Expr::Sum(_) | Expr::Equation(..) | Expr::Product(_) => format!("({})", latex(f)),
        Expr::Number(q) if q.is_negative() => format!("({})", latex_rational(q)),
        Expr::Number(q) => latex_rational(q),
        Expr::Atom(n) => n.clone(),
        Expr::SqrtNegDet(g) => format!("\\sqrt{{-{g}}}"),
        Expr::Tensor { head, indices } => format!("{{{head}}}{}", tex_indices(indices)),
        Expr::Derivative { op, index, arg } => {
            let inner = match **arg {
                Expr::Sum(_) | Expr::Product(_) => format!("({})", latex(arg)),
                _ => latex(arg),
            };
            format!("{{{op}}}_{{{}}}{{{inner}}}", index_label(index))
        }
        Expr::Power { base, exponent } => {
            let b = match **base {
                Expr::Atom(_) | Expr::SqrtNegDet(_) => format!("{{{}}}", latex_factor(base)),
                _ => format!("({})", latex(base)),
            };
            format!("{b}^{{{exponent}}}")
        }
    }
}

// ---------------------------------------------------------------- form

fn form(e: &Expr) -> String {
    match e {
        Expr::Sum(terms) => {
            let mut out = String::new();
            for (k, t) in terms.iter().enumerate() {
                let (neg, body) = form_term(t);
                match (k, neg) {
                    (_, true) => out.push_str(" - "),
                    (0, false) => {}
                    (_, false) => out.push_str(" + "),
                }
                out.push_str(&body);
            }
            out
        }
        Expr::Equation(l, r) => format!("{} = {}", form(l), form(r)),
        other => {
            let (neg, body) = form_term(other);
            if neg {
                format!(" - {body}")
            } else {
                body
            }
        }
    }
}

fn form_term(t: &Expr) -> (bool, String) {
    let (coef, factors) = t.as_term();
    let neg = coef.is_negative();
    let coef = coef.abs();
    let (num, den) = split_factors(&factors);
    let mut s = String::new();
    if !coef.is_one() || num.is_empty() || !den.is_empty() {
        s.push_str(&coef.to_string());
    }
    for (b, e) in den {
        s.push('/');
        s.push_str(&form_factor(&Expr::power(b.clone(), e)));
    }
    for f in num {
        if !s.is_empty() {
            s.push('*');
        }
        s.push_str(&form_factor(f));
    }
    (neg, s)
}

fn form_factor(f: &Expr) -> String {
    match f {
        Expr::Sum(_) | Expr::Product(_) | Expr::Equation(..) => {
            format!("({})", form(f).trim_start_matches(' '))
        }
        Expr::Number(q) if q.is_negative() => format!("({q})"),
        Expr::Number(q) => q.to_string(),
        Expr::Atom(n) => n.clone(),
        Expr::SqrtNegDet(g) => format!("sqrt_(-{g})"),
        Expr::Tensor { head, indices } => {
            let idx: Vec<String> = indices.iter().map(index_label).collect();
            format!("{head}({})", idx.join(","))
        }
        Expr::Derivative { op, index, arg } => {
            format!("{}({},{})", op.trim_start_matches('\\'), index_label(index), form(arg))
        }
        Expr::Power { base, exponent } => {
            let b = match **base {
                Expr::Sum(_) | Expr::Product(_) | Expr::Power { .. } => format!("({})", form(base).trim_start()),
                _ => form_factor(base),
            };
            if *exponent < 0 {
                format!("{b}^({exponent})")
            } else {
                format!("{b}^{exponent}")
            }
        }
    }
}

fn form_tokens(s: &str) -> Vec<&str> {
    let b = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let start = i;
        if (s[i..].starts_with(" + ") || s[i..].starts_with(" - ")) && i + 3 <= b.len() {
            i += 3;
        } else if b[i].is_ascii_alphabetic() || b[i] == b'_' {
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            if b.get(i) == Some(&b'(') {
                i += 1;
            }
        } else if b[i].is_ascii_digit() {
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
        } else {
            i += s[i..].chars().next().map_or(1, char::len_utf8);
        }
        out.push(&s[start..i]);
    }
    out
}

/// Greedy token packing with a three-space indent; continuation lines never
/// exceed `width - 4` columns.
fn wrap_form(body: &str, width: usize) -> Vec<String> {
    const INDENT: &str = "   ";
    let limit = width - 4 - INDENT.len();
    let mut lines = Vec::new();
    let mut cur = String::new();
    for tok in form_tokens(body) {
        if !cur.is_empty() && cur.chars().count() + tok.chars().count() > limit {
            lines.push(format!("{INDENT}{cur}"));
            cur.clear();
        }
        cur.push_str(tok);
    }
    if !cur.is_empty() {
        lines.push(format!("{INDENT}{cur}"));
    }
    lines
}
