//! Component engine: explicit summation over index ranges, Levi-Civita
//! contraction, ordered `id` rules and exact scalar normalization.
//!
//! `e_` is the Levi-Civita symbol with `e_(0,1,...,n-1) = 1` and `d_` the
//! Kronecker delta, as in FORM.

use std::collections::BTreeMap;

use itertools::Itertools;

use crate::canon::{cmp_factors, collect_terms, sort_terms, Context, DELTA, EPSILON};
use crate::expr::{parse_sides, Expr, Index, IndexValue, ParseError, Separator, Variance};
use crate::rewrite::distribute;
use crate::scalar::{RationalFunction, ScalarError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompError {
    #[error("index `{0}` has no declared component range")]
    NoRange(String),
    #[error("no component value for `{0}`")]
    Unvalued(String),
    #[error("cannot evaluate `{0}` component-wise")]
    NotComponent(String),
    #[error("invalid id rule: {0}")]
    InvalidRule(String),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// `id lhs = rhs`: a tensor pattern whose `name?` indices match any
/// concrete value (equal names must match equal values).
#[derive(Clone, Debug, PartialEq)]
pub struct IdRule {
    pub lhs: Expr,
    pub rhs: Expr,
}

impl IdRule {
    pub fn new(lhs: Expr, rhs: Expr) -> Result<IdRule, CompError> {
        let Expr::Tensor { indices, .. } = &lhs else {
            return Err(CompError::InvalidRule(format!("`{lhs}` is not a tensor pattern")));
        };
        let names: Vec<&str> = indices.iter().filter_map(|i| i.name()).collect();
        for n in rhs.index_names() {
            if !names.contains(&n.as_str()) && !names.contains(&format!("{n}?").as_str()) {
                return Err(CompError::InvalidRule(format!("`{n}` does not occur in `{lhs}`")));
            }
        }
        Ok(IdRule { lhs, rhs })
    }

    /// Parses `lhs = rhs`.
    pub fn parse(text: &str, ctx: &Context) -> Result<IdRule, CompError> {
        let (lhs, rhs) = parse_sides(text, ctx, Separator::Equals)?;
        IdRule::new(lhs, rhs)
    }

    fn matches(&self, target: &Expr) -> Option<BTreeMap<String, u32>> {
        let (Expr::Tensor { head: ph, indices: pi }, Expr::Tensor { head: th, indices: ti }) = (&self.lhs, target)
        else {
            return None;
        };
        if ph != th || pi.len() != ti.len() {
            return None;
        }
        let mut b = BTreeMap::new();
        for (p, t) in pi.iter().zip(ti) {
            match (&p.value, &t.value) {
                (IndexValue::Value(x), IndexValue::Value(y)) if x == y => {}
                (IndexValue::Symbol(n), IndexValue::Value(y)) if n.ends_with('?') => {
                    if *b.entry(n.trim_end_matches('?').to_string()).or_insert(*y) != *y {
                        return None;
                    }
                }
                (IndexValue::Symbol(x), IndexValue::Symbol(y)) if x == y => {}
                _ => return None,
            }
        }
        Some(b)
    }

    fn instantiate(&self, b: &BTreeMap<String, u32>) -> Expr {
        self.rhs.map_indices(&mut |i| match i.name().map(|n| n.trim_end_matches('?')) {
            Some(n) => match b.get(n) {
                Some(v) => i.with_value(IndexValue::Value(*v)),
                None => i.clone(),
            },
            None => i.clone(),
        })
    }
}

/// Sign of the permutation `vals` of `0..n`, or zero when `vals` is not a
/// permutation.
pub fn levi_civita(vals: &[u32]) -> i64 {
    let n = vals.len();
    let mut seen = vec![false; n];
    for v in vals {
        let v = *v as usize;
        if v >= n || seen[v] {
            return 0;
        }
        seen[v] = true;
    }
    let mut inversions = 0;
    for i in 0..n {
        for j in i + 1..n {
            if vals[i] > vals[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

fn concrete_values(indices: &[Index]) -> Option<Vec<u32>> {
    indices.iter().map(Index::concrete_value).collect()
}

/// Evaluates fully concrete `e_` and `d_` factors of a term.
fn eval_symbols(term: &Expr) -> Expr {
    let (coef, factors) = term.as_term();
    let mut c = coef;
    let mut rest = Vec::with_capacity(factors.len());
    for f in factors {
        match &f {
            Expr::Tensor { head, indices } if head == EPSILON => match concrete_values(indices) {
                Some(v) => c *= crate::scalar::rat(levi_civita(&v)),
                None => rest.push(f),
            },
            Expr::Tensor { head, indices } if head == DELTA && indices.len() == 2 => match concrete_values(indices) {
                Some(v) if v[0] == v[1] => {}
                Some(_) => return Expr::zero(),
                None => rest.push(f),
            },
            _ => rest.push(f),
        }
    }
    Expr::from_term(c, rest)
}

fn sort_factors(term: &Expr, ctx: &Context) -> Expr {
    let (c, mut fs) = term.as_term();
    fs.sort_by(|a, b| cmp_factors(a, b, ctx));
    Expr::from_term(c, fs)
}

fn finish(terms: Vec<Expr>, ctx: &Context) -> Expr {
    let terms: Vec<Expr> = terms.iter().map(|t| sort_factors(t, ctx)).collect();
    sort_terms(&collect_terms(&Expr::sum(terms)), ctx)
}

/// Replaces every dummy pair by an explicit sum over its range. Concrete
/// `e_`/`d_` factors are evaluated on the way.
pub fn expand_dummies(expr: &Expr, ctx: &Context) -> Result<Expr, CompError> {
    if let Expr::Equation(l, r) = expr {
        return Ok(Expr::equation(expand_dummies(l, ctx)?, expand_dummies(r, ctx)?));
    }
    let mut out = Vec::new();
    for term in distribute(expr, ctx).terms() {
        let dummies = term.dummy_names().map_err(|_| CompError::NotComponent(term.to_string()))?;
        let mut ranges = Vec::with_capacity(dummies.len());
        for d in &dummies {
            let r = ctx.index_range(d).ok_or_else(|| CompError::NoRange(d.clone()))?;
            ranges.push(r.collect::<Vec<u32>>());
        }
        if dummies.is_empty() {
            out.push(eval_symbols(&term));
            continue;
        }
        for values in ranges.iter().multi_cartesian_product() {
            let map: BTreeMap<&str, u32> = dummies.iter().map(String::as_str).zip(values.into_iter().copied()).collect();
            let t = term.map_indices(&mut |i| match i.name().and_then(|n| map.get(n)) {
                Some(v) => i.with_value(IndexValue::Value(*v)),
                None => i.clone(),
            });
            let t = eval_symbols(&t);
            if !t.is_zero() {
                out.push(t);
            }
        }
    }
    Ok(finish(out, ctx))
}

/// Replaces products of two `e_` symbols by the determinant of Kronecker
/// deltas, evaluates concrete `e_`, and eliminates deltas against dummies.
pub fn contract_epsilon(expr: &Expr, ctx: &Context) -> Expr {
    if let Expr::Equation(l, r) = expr {
        return Expr::equation(contract_epsilon(l, ctx), contract_epsilon(r, ctx));
    }
    let mut out = Vec::new();
    for term in distribute(expr, ctx).terms() {
        for t in contract_term(&term) {
            let t = eliminate_deltas(&eval_symbols(&t), ctx);
            if !t.is_zero() {
                out.push(t);
            }
        }
    }
    finish(out, ctx)
}

fn contract_term(term: &Expr) -> Vec<Expr> {
    let (coef, factors) = term.as_term();
    let eps: Vec<usize> = factors
        .iter()
        .enumerate()
        .filter(|(_, f)| matches!(f, Expr::Tensor { head, .. } if head == EPSILON))
        .map(|(k, _)| k)
        .collect();
    if eps.len() < 2 {
        return vec![term.clone()];
    }
    let (Expr::Tensor { indices: a, .. }, Expr::Tensor { indices: b, .. }) = (&factors[eps[0]], &factors[eps[1]]) else {
        unreachable!()
    };
    if a.len() != b.len() {
        return vec![term.clone()];
    }
    let rest: Vec<Expr> = factors
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != eps[0] && *k != eps[1])
        .map(|(_, f)| f.clone())
        .collect();
    let n = a.len();
    let mut out = Vec::new();
    for perm in (0..n).permutations(n) {
        let vals: Vec<u32> = perm.iter().map(|p| *p as u32).collect();
        let sign = levi_civita(&vals);
        let mut fs = rest.clone();
        for (k, p) in perm.iter().enumerate() {
            fs.push(Expr::tensor(DELTA, vec![a[k].clone(), b[*p].clone()]));
        }
        let t = Expr::from_term(coef.clone() * crate::scalar::rat(sign), fs);
        out.extend(contract_term(&t));
    }
    out
}

fn eliminate_deltas(term: &Expr, ctx: &Context) -> Expr {
    let mut t = term.clone();
    loop {
        let (coef, factors) = t.as_term();
        let Some(k) = factors.iter().position(|f| {
            matches!(f, Expr::Tensor { head, indices } if head == DELTA && indices.len() == 2 && removable(indices, &factors))
        }) else {
            return t;
        };
        let Expr::Tensor { indices, .. } = &factors[k] else { unreachable!() };
        let (x, y) = (indices[0].clone(), indices[1].clone());
        let mut rest: Vec<Expr> = factors.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, f)| f.clone()).collect();
        let mut c = coef;
        match (&x.value, &y.value) {
            (IndexValue::Value(p), IndexValue::Value(q)) => {
                if p != q {
                    return Expr::zero();
                }
            }
            (IndexValue::Symbol(p), IndexValue::Symbol(q)) if p == q => {
                let size = ctx.index_range(p).map_or(ctx.dimension() as i64, |r| r.count() as i64);
                c *= crate::scalar::rat(size);
            }
            _ => {
                let (from, to) = if x.name().is_some_and(|n| occurs(n, &rest)) { (x, y) } else { (y, x) };
                let from = from.name().expect("symbolic").to_string();
                rest = rest
                    .iter()
                    .map(|f| {
                        f.map_indices(&mut |i| {
                            if i.name() == Some(from.as_str()) {
                                i.with_value(to.value.clone())
                            } else {
                                i.clone()
                            }
                        })
                    })
                    .collect();
            }
        }
        t = eval_symbols(&Expr::from_term(c, rest));
        if t.is_zero() {
            return t;
        }
    }
}

fn occurs(name: &str, factors: &[Expr]) -> bool {
    factors.iter().any(|f| f.index_names().contains(name))
}

fn removable(indices: &[Index], factors: &[Expr]) -> bool {
    match (&indices[0].value, &indices[1].value) {
        (IndexValue::Value(_), IndexValue::Value(_)) => true,
        (IndexValue::Symbol(p), IndexValue::Symbol(q)) if p == q => true,
        _ => {
            let count = |n: &str| {
                factors
                    .iter()
                    .map(|f| f.term_occurrences().unwrap_or_default().iter().filter(|i| i.name() == Some(n)).count())
                    .sum::<usize>()
            };
            indices.iter().any(|i| i.name().is_some_and(|n| count(n) >= 2))
        }
    }
}

/// Applies, to every tensor occurrence, the first rule that matches it,
/// then normalizes.
pub fn apply_id_rules(expr: &Expr, rules: &[IdRule], ctx: &Context) -> Expr {
    fn go(e: &Expr, rules: &[IdRule]) -> Expr {
        match e {
            Expr::Tensor { .. } => rules
                .iter()
                .find_map(|r| r.matches(e).map(|b| r.instantiate(&b)))
                .unwrap_or_else(|| e.clone()),
            Expr::Power { base, exponent } => Expr::power(go(base, rules), *exponent),
            Expr::Product(fs) => Expr::product(fs.iter().map(|f| go(f, rules)).collect()),
            Expr::Sum(ts) => Expr::sum(ts.iter().map(|t| go(t, rules)).collect()),
            Expr::Derivative { op, index, arg } => Expr::derivative(op, index.clone(), go(arg, rules)),
            Expr::Equation(l, r) => Expr::equation(go(l, rules), go(r, rules)),
            other => other.clone(),
        }
    }
    normalize(&go(expr, rules), ctx)
}

fn is_scalar(e: &Expr) -> bool {
    !e.has_indices() && !matches!(e, Expr::Derivative { .. } | Expr::Equation(..))
}

/// Collects terms with exact rational-function coefficients. Scalar
/// factors of each term are multiplied into one coefficient; terms with the
/// same tensor part are merged. Output terms follow FORM's shape: one term
/// per numerator monomial over the common denominator.
pub fn normalize(expr: &Expr, ctx: &Context) -> Expr {
    if let Expr::Equation(l, r) = expr {
        return Expr::equation(normalize(l, ctx), normalize(r, ctx));
    }
    let mut order: Vec<Vec<Expr>> = Vec::new();
    let mut coefs: BTreeMap<Vec<Expr>, RationalFunction> = BTreeMap::new();
    for term in distribute(expr, ctx).terms() {
        let (c, fs) = term.as_term();
        let mut rf = RationalFunction::constant(c);
        let mut tensor = Vec::new();
        for f in fs {
            match is_scalar(&f).then(|| f.to_rational_function()).flatten() {
                Some(v) => rf = &rf * &v,
                None => tensor.push(f),
            }
        }
        tensor.sort_by(|a, b| cmp_factors(a, b, ctx));
        match coefs.get_mut(&tensor) {
            Some(acc) => *acc = &*acc + &rf,
            None => {
                order.push(tensor.clone());
                coefs.insert(tensor, rf);
            }
        }
    }
    let mut terms = Vec::new();
    for tensor in order {
        let rf = coefs.remove(&tensor).expect("recorded");
        if rf.is_zero() {
            continue;
        }
        for t in Expr::expanded_from_rational_function(&rf).terms() {
            let mut fs = vec![t];
            fs.extend(tensor.iter().cloned());
            terms.push(Expr::product(fs));
        }
    }
    sort_terms(&Expr::sum(terms), ctx)
}

/// Component valuation: tensor head and concrete indices to a value.
pub type Valuation<'a> = dyn Fn(&str, &[u32]) -> Option<RationalFunction> + 'a;

/// Exact value of a fully concrete expression.
pub fn evaluate(expr: &Expr, values: &Valuation<'_>) -> Result<RationalFunction, CompError> {
    Ok(match expr {
        Expr::Number(q) => RationalFunction::constant(q.clone()),
        Expr::Atom(n) => RationalFunction::symbol(n),
        Expr::SqrtNegDet(g) => values(&format!("\\sqrt{{-{g}}}"), &[])
            .ok_or_else(|| CompError::Unvalued(expr.to_string()))?,
        Expr::Tensor { head, indices } => {
            let v = concrete_values(indices).ok_or_else(|| CompError::NotComponent(expr.to_string()))?;
            if head == EPSILON {
                RationalFunction::int(levi_civita(&v))
            } else if head == DELTA && v.len() == 2 {
                RationalFunction::int(i64::from(v[0] == v[1]))
            } else {
                values(head, &v).ok_or_else(|| CompError::Unvalued(expr.to_string()))?
            }
        }
        Expr::Power { base, exponent } => {
            let b = evaluate(base, values)?;
            if b.is_zero() && *exponent < 0 {
                return Err(ScalarError::ZeroDenominator.into());
            }
            b.powi(*exponent)?
        }
        Expr::Product(fs) => {
            let mut acc = RationalFunction::one();
            for f in fs {
                acc = &acc * &evaluate(f, values)?;
                if acc.is_zero() {
                    break;
                }
            }
            acc
        }
        Expr::Sum(ts) => {
            let mut acc = RationalFunction::zero();
            for t in ts {
                acc = &acc + &evaluate(t, values)?;
            }
            acc
        }
        Expr::Derivative { .. } | Expr::Equation(..) => return Err(CompError::NotComponent(expr.to_string())),
    })
}

/// Determinant through `e_(0..n) e_(i..) g(0,i) g(1,j) ...`: expand the
/// dummies, then substitute the entries and normalize.
pub fn determinant(m: &[Vec<RationalFunction>]) -> Result<RationalFunction, CompError> {
    let n = m.len();
    if n == 0 || m.iter().any(|row| row.len() != n) {
        return Err(CompError::InvalidRule("determinant needs a non-empty square matrix".into()));
    }
    let (expr, ctx) = determinant_expression(n);
    let expanded = expand_dummies(&expr, &ctx)?;
    let value = |head: &str, v: &[u32]| (head == "g").then(|| m[v[0] as usize][v[1] as usize].clone());
    evaluate(&expanded, &value)
}

/// The Levi-Civita determinant formula for an `n`-dimensional tensor `g`,
/// with the context it is expanded in.
pub fn determinant_expression(n: usize) -> (Expr, Context) {
    let names: Vec<String> = (0..n).map(|k| format!("i{k}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let ctx = Context::new()
        .with_dimension(n as u32)
        .and_then(|c| c.add_family("det", &refs, None))
        .expect("fresh context");
    let lower = |v: u32| Index::concrete(v, Variance::Lower);
    let mut fs = vec![
        Expr::tensor(EPSILON, (0..n as u32).map(lower).collect()),
        Expr::tensor(EPSILON, names.iter().map(|s| Index::lower(s)).collect()),
    ];
    for (k, s) in names.iter().enumerate() {
        fs.push(Expr::tensor("g", vec![lower(k as u32), Index::lower(s)]));
    }
    (Expr::product(fs), ctx)
}
