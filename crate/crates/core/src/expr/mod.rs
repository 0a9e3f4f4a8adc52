//! Expression trees for tensor algebra, the TeX-flavoured input parser and
//! the renderers.
//!
//! Expressions are immutable values. All composite nodes are built through
//! the smart constructors ([`Expr::product`], [`Expr::sum`], [`Expr::power`])
//! which keep trees flat: a `Sum` never has a `Sum` child and a `Product`
//! never has a `Product` child, numeric factors are folded into one leading
//! coefficient and zero terms are dropped.

mod convert;
mod parse;
mod render;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{One, Zero};

use crate::scalar::Rational;

pub use parse::{parse, parse_sides, parse_with_diagnostics, Diagnostic, ParseError, Separator};
pub use render::{render, render_form_block, RenderFormat, RenderOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variance {
    Lower,
    Upper,
}

/// Either an abstract index label or a concrete component value.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IndexValue {
    Symbol(String),
    Value(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Index {
    pub value: IndexValue,
    pub variance: Variance,
}

impl Index {
    pub fn lower(name: &str) -> Self {
        Index {
            value: IndexValue::Symbol(name.to_string()),
            variance: Variance::Lower,
        }
    }

    pub fn upper(name: &str) -> Self {
        Index {
            value: IndexValue::Symbol(name.to_string()),
            variance: Variance::Upper,
        }
    }

    pub fn concrete(v: u32, variance: Variance) -> Self {
        Index {
            value: IndexValue::Value(v),
            variance,
        }
    }

    pub fn name(&self) -> Option<&str> {
        match &self.value {
            IndexValue::Symbol(s) => Some(s),
            IndexValue::Value(_) => None,
        }
    }

    pub fn concrete_value(&self) -> Option<u32> {
        match self.value {
            IndexValue::Value(v) => Some(v),
            IndexValue::Symbol(_) => None,
        }
    }

    pub fn with_value(&self, value: IndexValue) -> Self {
        Index {
            value,
            variance: self.variance,
        }
    }

    pub fn is_wildcard(&self) -> bool {
        self.name().is_some_and(|n| n.ends_with('?'))
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = match self.variance {
            Variance::Lower => '_',
            Variance::Upper => '^',
        };
        match &self.value {
            IndexValue::Symbol(s) => write!(f, "{mark}{s}"),
            IndexValue::Value(v) => write!(f, "{mark}{v}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Number(Rational),
    /// Opaque scalar symbol (`a`, `b`, `r`, `\pi`, ...).
    Atom(String),
    Tensor {
        head: String,
        indices: Vec<Index>,
    },
    Derivative {
        op: String,
        index: Index,
        arg: Box<Expr>,
    },
    Power {
        base: Box<Expr>,
        exponent: i64,
    },
    Product(Vec<Expr>),
    Sum(Vec<Expr>),
    /// `\sqrt{-g}` for the metric named by the payload.
    SqrtNegDet(String),
    /// `lhs = rhs`; only ever appears at the top of a statement.
    Equation(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IndexError {
    #[error("index balance violation in term `{term}`: free indices {found} differ from {expected}")]
    Unbalanced {
        term: String,
        found: String,
        expected: String,
    },
    #[error("index `{index}` appears {count} times in term `{term}`")]
    Repeated {
        index: String,
        count: usize,
        term: String,
    },
}

impl Expr {
    pub fn number(q: Rational) -> Expr {
        Expr::Number(q)
    }

    pub fn int(n: i64) -> Expr {
        Expr::Number(Rational::from_integer(n.into()))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn atom(name: &str) -> Expr {
        Expr::Atom(name.to_string())
    }

    pub fn tensor(head: &str, indices: Vec<Index>) -> Expr {
        Expr::Tensor {
            head: head.to_string(),
            indices,
        }
    }

    pub fn derivative(op: &str, index: Index, arg: Expr) -> Expr {
        Expr::Derivative {
            op: op.to_string(),
            index,
            arg: Box::new(arg),
        }
    }

    pub fn sqrt_neg_det(metric: &str) -> Expr {
        Expr::SqrtNegDet(metric.to_string())
    }

    pub fn equation(lhs: Expr, rhs: Expr) -> Expr {
        Expr::Equation(Box::new(lhs), Box::new(rhs))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Number(q) if q.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Number(q) if q.is_one())
    }

    pub fn power(base: Expr, exponent: i64) -> Expr {
        match (base, exponent) {
            (_, 0) => Expr::one(),
            (b, 1) => b,
            (Expr::Number(q), e) => {
                if q.is_zero() && e < 0 {
                    Expr::Power {
                        base: Box::new(Expr::Number(q)),
                        exponent: e,
                    }
                } else {
                    Expr::Number(num::pow::Pow::pow(&q, e as i32))
                }
            }
            (Expr::Power { base, exponent: e0 }, e) => Expr::power(*base, e0 * e),
            (b, e) => Expr::Power {
                base: Box::new(b),
                exponent: e,
            },
        }
    }

    /// Flattening product constructor. Numbers are folded into a single
    /// leading coefficient and repeated scalar bases have their exponents
    /// merged; tensors are never merged.
    pub fn product(factors: Vec<Expr>) -> Expr {
        let mut coef = Rational::one();
        let mut out: Vec<Expr> = Vec::new();
        let mut stack: Vec<Expr> = factors.into_iter().rev().collect();
        while let Some(f) = stack.pop() {
            match f {
                Expr::Product(inner) => stack.extend(inner.into_iter().rev()),
                Expr::Number(q) => coef *= q,
                other => out.push(other),
            }
        }
        if coef.is_zero() {
            return Expr::zero();
        }
        let out = merge_scalar_powers(out);
        let mut factors = Vec::with_capacity(out.len() + 1);
        let mut numeric = coef;
        for f in out {
            match f {
                Expr::Number(q) => numeric *= q,
                other => factors.push(other),
            }
        }
        if numeric.is_zero() {
            return Expr::zero();
        }
        if !numeric.is_one() {
            factors.insert(0, Expr::Number(numeric));
        }
        match factors.len() {
            0 => Expr::one(),
            1 => factors.pop().expect("one factor"),
            _ => Expr::Product(factors),
        }
    }

    /// Flattening sum constructor; zero terms vanish and numeric terms are
    /// folded into the position of the first one.
    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut out: Vec<Expr> = Vec::new();
        let mut numeric: Option<(usize, Rational)> = None;
        let mut stack: Vec<Expr> = terms.into_iter().rev().collect();
        while let Some(t) = stack.pop() {
            match t {
                Expr::Sum(inner) => stack.extend(inner.into_iter().rev()),
                Expr::Number(q) => match &mut numeric {
                    Some((_, acc)) => *acc += q,
                    None => {
                        numeric = Some((out.len(), q));
                        out.push(Expr::zero());
                    }
                },
                other => out.push(other),
            }
        }
        if let Some((pos, q)) = numeric {
            out[pos] = Expr::Number(q);
        }
        out.retain(|t| !t.is_zero());
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().expect("one term"),
            _ => Expr::Sum(out),
        }
    }

    pub fn neg(&self) -> Expr {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, q: &Rational) -> Expr {
        match self {
            Expr::Sum(terms) => Expr::sum(terms.iter().map(|t| t.scale(q)).collect()),
            Expr::Equation(l, r) => Expr::equation(l.scale(q), r.scale(q)),
            other => Expr::product(vec![Expr::Number(q.clone()), other.clone()]),
        }
    }

    /// Terms of a sum, or the expression itself as a one-term list.
    pub fn terms(&self) -> Vec<Expr> {
        match self {
            Expr::Sum(t) => t.clone(),
            e if e.is_zero() => Vec::new(),
            e => vec![e.clone()],
        }
    }

    /// Splits a term into its numeric coefficient and remaining factors.
    pub fn as_term(&self) -> (Rational, Vec<Expr>) {
        match self {
            Expr::Number(q) => (q.clone(), Vec::new()),
            Expr::Product(fs) => {
                let mut coef = Rational::one();
                let mut rest = Vec::with_capacity(fs.len());
                for f in fs {
                    match f {
                        Expr::Number(q) => coef *= q,
                        other => rest.push(other.clone()),
                    }
                }
                (coef, rest)
            }
            other => (Rational::one(), vec![other.clone()]),
        }
    }

    pub fn from_term(coef: Rational, factors: Vec<Expr>) -> Expr {
        let mut all = Vec::with_capacity(factors.len() + 1);
        all.push(Expr::Number(coef));
        all.extend(factors);
        Expr::product(all)
    }

    /// Applies `f` to every index occurrence, however deeply nested.
    pub fn map_indices(&self, f: &mut dyn FnMut(&Index) -> Index) -> Expr {
        match self {
            Expr::Tensor { head, indices } => Expr::Tensor {
                head: head.clone(),
                indices: indices.iter().map(|i| f(i)).collect(),
            },
            Expr::Derivative { op, index, arg } => Expr::Derivative {
                op: op.clone(),
                index: f(index),
                arg: Box::new(arg.map_indices(f)),
            },
            Expr::Power { base, exponent } => Expr::Power {
                base: Box::new(base.map_indices(f)),
                exponent: *exponent,
            },
            Expr::Product(fs) => Expr::Product(fs.iter().map(|x| x.map_indices(f)).collect()),
            Expr::Sum(ts) => Expr::Sum(ts.iter().map(|x| x.map_indices(f)).collect()),
            Expr::Equation(l, r) => Expr::Equation(Box::new(l.map_indices(f)), Box::new(r.map_indices(f))),
            other => other.clone(),
        }
    }

    /// Renames symbolic indices according to `map`, keeping variance.
    pub fn rename_indices(&self, map: &BTreeMap<String, String>) -> Expr {
        self.map_indices(&mut |i| match &i.value {
            IndexValue::Symbol(s) => match map.get(s) {
                Some(t) => i.with_value(IndexValue::Symbol(t.clone())),
                None => i.clone(),
            },
            IndexValue::Value(_) => i.clone(),
        })
    }

    /// Every symbolic index name occurring anywhere in the tree.
    pub fn index_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.map_indices(&mut |i| {
            if let Some(n) = i.name() {
                out.insert(n.to_string());
            }
            i.clone()
        });
        out
    }

    /// Does the subtree carry any index at all?
    pub fn has_indices(&self) -> bool {
        let mut found = false;
        self.map_indices(&mut |i| {
            found = true;
            i.clone()
        });
        found
    }

    /// Index occurrences that are visible at the level of the enclosing
    /// term: nested sums contribute only their free indices.
    pub fn term_occurrences(&self) -> Result<Vec<Index>, IndexError> {
        Ok(match self {
            Expr::Number(_) | Expr::Atom(_) | Expr::SqrtNegDet(_) => Vec::new(),
            Expr::Tensor { indices, .. } => indices.iter().filter(|i| i.name().is_some()).cloned().collect(),
            Expr::Derivative { index, arg, .. } => {
                let mut v = Vec::new();
                if index.name().is_some() {
                    v.push(index.clone());
                }
                v.extend(arg.term_occurrences()?);
                v
            }
            Expr::Power { base, exponent } => {
                let inner = base.term_occurrences()?;
                let mut v = Vec::new();
                for _ in 0..exponent.unsigned_abs() {
                    v.extend(inner.iter().cloned());
                }
                v
            }
            Expr::Product(fs) => {
                let mut v = Vec::new();
                for f in fs {
                    v.extend(f.term_occurrences()?);
                }
                v
            }
            Expr::Sum(_) | Expr::Equation(..) => free_indices(self)?,
        })
    }

    /// Names that occur exactly twice in this term (summed over).
    pub fn dummy_names(&self) -> Result<Vec<String>, IndexError> {
        let occ = self.term_occurrences()?;
        let counts = count_names(&occ);
        let mut seen = BTreeSet::new();
        Ok(occ
            .iter()
            .filter_map(|i| i.name())
            .filter(|n| counts[*n] == 2 && seen.insert(n.to_string()))
            .map(str::to_string)
            .collect())
    }
}

fn count_names(occ: &[Index]) -> BTreeMap<&str, usize> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for i in occ {
        if let Some(n) = i.name() {
            *counts.entry(n).or_insert(0) += 1;
        }
    }
    counts
}

fn scalar_base(e: &Expr) -> Option<(&Expr, i64)> {
    match e {
        Expr::Atom(_) | Expr::SqrtNegDet(_) => Some((e, 1)),
        Expr::Power { base, exponent } if matches!(**base, Expr::Atom(_) | Expr::SqrtNegDet(_)) => {
            Some((base, *exponent))
        }
        _ => None,
    }
}

fn merge_scalar_powers(factors: Vec<Expr>) -> Vec<Expr> {
    let mut slots: Vec<(Expr, i64)> = Vec::new();
    let mut out: Vec<Option<Expr>> = Vec::new();
    let mut pos: Vec<usize> = Vec::new();
    for f in factors {
        if let Some((b, e)) = scalar_base(&f) {
            if let Some(k) = slots.iter().position(|(x, _)| x == b) {
                slots[k].1 += e;
                continue;
            }
            slots.push((b.clone(), e));
            pos.push(out.len());
            out.push(None);
        } else {
            out.push(Some(f));
        }
    }
    for ((b, e), p) in slots.into_iter().zip(pos) {
        out[p] = Some(Expr::power(b, e));
    }
    out.into_iter().flatten().collect()
}

/// Free indices of an expression as a sorted multiset. Every term of a sum
/// must carry the same free indices; an index may occur at most twice in a
/// term.
pub fn free_indices(expr: &Expr) -> Result<Vec<Index>, IndexError> {
    match expr {
        Expr::Sum(terms) => {
            let mut expected: Option<(Vec<Index>, &Expr)> = None;
            for t in terms {
                let f = free_indices(t)?;
                match &expected {
                    None => expected = Some((f, t)),
                    Some((e, _)) if *e == f => {}
                    Some((e, _)) => {
                        return Err(IndexError::Unbalanced {
                            term: render::plain(t),
                            found: show_indices(&f),
                            expected: show_indices(e),
                        })
                    }
                }
            }
            Ok(expected.map(|(e, _)| e).unwrap_or_default())
        }
        Expr::Equation(l, r) => {
            let fl = free_indices(l)?;
            let fr = free_indices(r)?;
            if fl != fr {
                return Err(IndexError::Unbalanced {
                    term: render::plain(r),
                    found: show_indices(&fr),
                    expected: show_indices(&fl),
                });
            }
            Ok(fl)
        }
        term => {
            let occ = term.term_occurrences()?;
            let counts = count_names(&occ);
            if let Some((n, c)) = counts.iter().find(|(_, c)| **c > 2) {
                return Err(IndexError::Repeated {
                    index: n.to_string(),
                    count: *c,
                    term: render::plain(term),
                });
            }
            let mut free: Vec<Index> = occ
                .iter()
                .filter(|i| i.name().is_some_and(|n| counts[n] == 1))
                .cloned()
                .collect();
            free.sort();
            Ok(free)
        }
    }
}

fn show_indices(v: &[Index]) -> String {
    let parts: Vec<String> = v.iter().map(|i| i.to_string()).collect();
    format!("{{{}}}", parts.join(" "))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", render::plain(self))
    }
}
