//! Pattern rules `lhs -> rhs` with wildcard heads (`A?`), matching modulo
//! index renaming, substitution with fresh dummies, and distribution.

use std::collections::{BTreeMap, BTreeSet};

use crate::canon::Context;
use crate::expr::{free_indices, parse_sides, Expr, Index, IndexError, IndexValue, ParseError, Separator};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RewriteError {
    #[error("no unused index left in family `{0}` for a fresh dummy")]
    FreshExhausted(String),
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Index(#[from] IndexError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub label: Option<String>,
    pub lhs: Expr,
    pub rhs: Expr,
}

impl Rule {
    pub fn new(lhs: Expr, rhs: Expr) -> Result<Rule, RewriteError> {
        if matches!(lhs, Expr::Sum(_) | Expr::Number(_) | Expr::Equation(..)) {
            return Err(RewriteError::InvalidRule(format!(
                "left-hand side `{lhs}` must be a single term"
            )));
        }
        let lhs_heads = wildcard_heads(&lhs);
        if let Some(h) = wildcard_heads(&rhs).difference(&lhs_heads).next() {
            return Err(RewriteError::InvalidRule(format!("wildcard `{h}` does not occur on the left")));
        }
        let lhs_names = lhs.index_names();
        for i in free_indices(&rhs)? {
            if let Some(n) = i.name() {
                if !lhs_names.contains(n) {
                    return Err(RewriteError::InvalidRule(format!(
                        "free index `{n}` of the right-hand side does not occur on the left"
                    )));
                }
            }
        }
        Ok(Rule { label: None, lhs, rhs })
    }

    /// Parses `lhs -> rhs`.
    pub fn parse(text: &str, ctx: &Context) -> Result<Rule, RewriteError> {
        let (lhs, rhs) = parse_sides(text, ctx, Separator::Arrow)?;
        Rule::new(lhs, rhs)
    }

    pub fn with_label(mut self, label: &str) -> Rule {
        self.label = Some(label.to_string());
        self
    }
}

fn wildcard_heads(e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    visit(e, &mut |x| {
        if let Expr::Tensor { head, .. } = x {
            if head.ends_with('?') {
                out.insert(head.clone());
            }
        }
    });
    out
}

fn visit(e: &Expr, f: &mut dyn FnMut(&Expr)) {
    f(e);
    match e {
        Expr::Derivative { arg, .. } => visit(arg, f),
        Expr::Power { base, .. } => visit(base, f),
        Expr::Product(xs) | Expr::Sum(xs) => xs.iter().for_each(|x| visit(x, f)),
        Expr::Equation(l, r) => {
            visit(l, f);
            visit(r, f);
        }
        _ => {}
    }
}

/// What a successful match assigned: wildcard heads to tensor heads and
/// pattern index names to target indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bindings {
    pub heads: BTreeMap<String, String>,
    pub indices: BTreeMap<String, Index>,
}

/// Structural match of a single-term pattern against `target`. Index names
/// in the pattern are variables; variance must agree and distinct pattern
/// names bind distinct target indices.
pub fn match_pattern(pattern: &Expr, target: &Expr, ctx: &Context) -> Option<Bindings> {
    let mut b = Bindings::default();
    matches(pattern, target, ctx, &mut b).then_some(b)
}

fn bind_index(p: &Index, t: &Index, ctx: &Context, b: &mut Bindings) -> bool {
    if p.variance != t.variance {
        return false;
    }
    match &p.value {
        IndexValue::Value(v) => t.value == IndexValue::Value(*v),
        IndexValue::Symbol(n) => {
            if let (Some(tn), Some((pf, _))) = (t.name(), ctx.family_of(n)) {
                if ctx.family_of(tn).is_some_and(|(tf, _)| tf != pf) {
                    return false;
                }
            }
            match b.indices.get(n) {
                Some(prev) => prev.value == t.value,
                None => {
                    if b.indices.values().any(|x| x.value == t.value) {
                        return false;
                    }
                    b.indices.insert(n.clone(), t.clone());
                    true
                }
            }
        }
    }
}

fn matches(p: &Expr, t: &Expr, ctx: &Context, b: &mut Bindings) -> bool {
    match (p, t) {
        (Expr::Tensor { head: ph, indices: pi }, Expr::Tensor { head: th, indices: ti }) => {
            if pi.len() != ti.len() {
                return false;
            }
            if ph.ends_with('?') {
                match b.heads.get(ph) {
                    Some(h) if h != th => return false,
                    Some(_) => {}
                    None => {
                        b.heads.insert(ph.clone(), th.clone());
                    }
                }
            } else if ph != th {
                return false;
            }
            pi.iter().zip(ti).all(|(x, y)| bind_index(x, y, ctx, b))
        }
        (
            Expr::Derivative { op: po, index: pi, arg: pa },
            Expr::Derivative { op: to, index: ti, arg: ta },
        ) => po == to && bind_index(pi, ti, ctx, b) && matches(pa, ta, ctx, b),
        (Expr::Power { base: pb, exponent: pe }, Expr::Power { base: tb, exponent: te }) => {
            pe == te && matches(pb, tb, ctx, b)
        }
        (Expr::Product(ps), Expr::Product(ts)) | (Expr::Sum(ps), Expr::Sum(ts)) => {
            ps.len() == ts.len() && ps.iter().zip(ts).all(|(x, y)| matches(x, y, ctx, b))
        }
        (Expr::Number(x), Expr::Number(y)) => x == y,
        (Expr::Atom(x), Expr::Atom(y)) | (Expr::SqrtNegDet(x), Expr::SqrtNegDet(y)) => x == y,
        _ => false,
    }
}

/// Replaces every maximal subterm matching `rule.lhs` in one pass. Dummy
/// indices of the right-hand side are renamed to names unused in the term.
pub fn substitute(expr: &Expr, rule: &Rule, ctx: &Context) -> Result<Expr, RewriteError> {
    match expr {
        Expr::Equation(l, r) => Ok(Expr::equation(substitute(l, rule, ctx)?, substitute(r, rule, ctx)?)),
        e => {
            let mut terms = Vec::new();
            for t in e.terms() {
                let mut used = t.index_names();
                let mut changed = false;
                let s = subst(&t, rule, ctx, &mut used, &mut changed)?;
                terms.push(if changed { distribute(&s, ctx) } else { s });
            }
            Ok(Expr::sum(terms))
        }
    }
}

fn subst(
    e: &Expr,
    rule: &Rule,
    ctx: &Context,
    used: &mut BTreeSet<String>,
    changed: &mut bool,
) -> Result<Expr, RewriteError> {
    if let Some(b) = match_pattern(&rule.lhs, e, ctx) {
        *changed = true;
        return instantiate(&rule.rhs, &b, ctx, used);
    }
    Ok(match e {
        Expr::Derivative { op, index, arg } => Expr::derivative(op, index.clone(), subst(arg, rule, ctx, used, changed)?),
        Expr::Power { base, exponent } => Expr::power(subst(base, rule, ctx, used, changed)?, *exponent),
        Expr::Product(fs) => Expr::product(
            fs.iter()
                .map(|f| subst(f, rule, ctx, used, changed))
                .collect::<Result<_, _>>()?,
        ),
        Expr::Sum(ts) => Expr::sum(
            ts.iter()
                .map(|f| subst(f, rule, ctx, used, changed))
                .collect::<Result<_, _>>()?,
        ),
        other => other.clone(),
    })
}

fn fresh_name(name: &str, ctx: &Context, used: &BTreeSet<String>) -> Result<Option<String>, RewriteError> {
    let Some((f, _)) = ctx.family_of(name) else {
        return Ok(None);
    };
    let fam = &ctx.families()[f];
    fam.names
        .iter()
        .find(|n| !used.contains(*n))
        .cloned()
        .map(Some)
        .ok_or_else(|| RewriteError::FreshExhausted(fam.name.clone()))
}

fn instantiate(rhs: &Expr, b: &Bindings, ctx: &Context, used: &mut BTreeSet<String>) -> Result<Expr, RewriteError> {
    let mut fresh: BTreeMap<String, String> = BTreeMap::new();
    let mut order = Vec::new();
    rhs.map_indices(&mut |i| {
        if let Some(n) = i.name() {
            if !b.indices.contains_key(n) && !order.iter().any(|x: &String| x == n) {
                order.push(n.to_string());
            }
        }
        i.clone()
    });
    for n in order {
        let new = fresh_name(&n, ctx, used)?.unwrap_or_else(|| n.clone());
        used.insert(new.clone());
        fresh.insert(n, new);
    }
    let renamed = rhs.map_indices(&mut |i| match &i.value {
        IndexValue::Symbol(n) => match b.indices.get(n) {
            Some(t) => i.with_value(t.value.clone()),
            None => i.with_value(IndexValue::Symbol(fresh[n].clone())),
        },
        IndexValue::Value(_) => i.clone(),
    });
    Ok(rebuild(&renamed, &|head| b.heads.get(head).cloned()))
}

/// Rebuilds through the smart constructors, renaming heads on the way.
fn rebuild(e: &Expr, heads: &dyn Fn(&str) -> Option<String>) -> Expr {
    match e {
        Expr::Tensor { head, indices } => {
            Expr::tensor(&heads(head).unwrap_or_else(|| head.clone()), indices.clone())
        }
        Expr::Derivative { op, index, arg } => Expr::derivative(op, index.clone(), rebuild(arg, heads)),
        Expr::Power { base, exponent } => Expr::power(rebuild(base, heads), *exponent),
        Expr::Product(fs) => Expr::product(fs.iter().map(|f| rebuild(f, heads)).collect()),
        Expr::Sum(ts) => Expr::sum(ts.iter().map(|t| rebuild(t, heads)).collect()),
        Expr::Equation(l, r) => Expr::equation(rebuild(l, heads), rebuild(r, heads)),
        other => other.clone(),
    }
}

/// Multiplies out products of sums (and positive powers of sums) into a
/// flat sum of products. Derivative arguments are expanded in place; the
/// derivative itself is left alone. Dummies of a multiplied-out sum that
/// would clash with the other factors are renamed.
pub fn distribute(expr: &Expr, ctx: &Context) -> Expr {
    match expr {
        Expr::Sum(ts) => Expr::sum(ts.iter().map(|t| distribute(t, ctx)).collect()),
        Expr::Equation(l, r) => Expr::equation(distribute(l, ctx), distribute(r, ctx)),
        Expr::Derivative { op, index, arg } => Expr::derivative(op, index.clone(), distribute(arg, ctx)),
        Expr::Power { base, exponent } if *exponent > 1 && matches!(**base, Expr::Sum(_)) => {
            let copies = vec![(**base).clone(); *exponent as usize];
            distribute(&Expr::Product(copies), ctx)
        }
        Expr::Product(fs) => {
            let fs: Vec<Expr> = fs.iter().map(|f| distribute(f, ctx)).collect();
            let mut acc: Vec<Vec<Expr>> = vec![Vec::new()];
            for (k, f) in fs.iter().enumerate() {
                let Expr::Sum(ts) = f else {
                    acc.iter_mut().for_each(|a| a.push(f.clone()));
                    continue;
                };
                let mut outside: BTreeSet<String> = BTreeSet::new();
                for (j, g) in fs.iter().enumerate() {
                    if j != k {
                        outside.extend(g.index_names());
                    }
                }
                let mut next = Vec::with_capacity(acc.len() * ts.len());
                for a in &acc {
                    let mut taken = outside.clone();
                    for x in a {
                        taken.extend(x.index_names());
                    }
                    for t in ts {
                        let mut f2 = a.clone();
                        f2.push(avoid_clashes(t, &taken, ctx));
                        next.push(f2);
                    }
                }
                acc = next;
            }
            Expr::sum(acc.into_iter().map(Expr::product).collect())
        }
        other => other.clone(),
    }
}

fn avoid_clashes(term: &Expr, taken: &BTreeSet<String>, ctx: &Context) -> Expr {
    let Ok(dummies) = term.dummy_names() else {
        return term.clone();
    };
    let mut used: BTreeSet<String> = taken.union(&term.index_names()).cloned().collect();
    let mut map = BTreeMap::new();
    for d in dummies.into_iter().filter(|d| taken.contains(d)) {
        if let Ok(Some(n)) = fresh_name(&d, ctx, &used) {
            used.insert(n.clone());
            map.insert(d, n);
        }
    }
    if map.is_empty() {
        term.clone()
    } else {
        term.rename_indices(&map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::canonicalize;
    use crate::expr::parse;

    fn ctx() -> Context {
        Context::new()
            .declare(r"{\alpha,\beta,\gamma,\delta}::Indices(vector)")
            .unwrap()
            .declare(r"\partial_{#}::PartialDerivative")
            .unwrap()
            .declare(r"\nabla_{#}::Derivative")
            .unwrap()
            .declare(r"\Gamma^{\alpha}_{\beta \gamma}::TableauSymmetry(shape={2}, indices={1,2})")
            .unwrap()
            .declare(r"F_{\alpha \beta}::AntiSymmetric")
            .unwrap()
    }

    fn nabla() -> Rule {
        Rule::parse(
            r"\nabla_{\gamma}{A?_{\alpha \beta}} -> \partial_{\gamma}{A?_{\alpha \beta}} - A?_{\alpha \delta} \Gamma^{\delta}_{\beta \gamma} - A?_{\delta \beta} \Gamma^{\delta}_{\alpha \gamma}",
            &ctx(),
        )
        .unwrap()
    }

    #[test]
    fn match_binds_heads_and_indices() {
        let c = ctx();
        let b = match_pattern(&nabla().lhs, &parse(r"\nabla_{\alpha}{F_{\beta \gamma}}", &c).unwrap(), &c).unwrap();
        assert_eq!(b.heads["A?"], "F");
        assert_eq!(b.indices[r"\gamma"], Index::lower(r"\alpha"));
        assert_eq!(b.indices[r"\alpha"], Index::lower(r"\beta"));
        assert_eq!(b.indices[r"\beta"], Index::lower(r"\gamma"));
        let miss = parse(r"\partial_{\alpha}{F_{\beta \gamma}}", &c).unwrap();
        assert!(match_pattern(&nabla().lhs, &miss, &c).is_none());
    }

    #[test]
    fn nabla_expands_to_nine_terms_and_reduces() {
        let c = ctx();
        let m = parse(
            r"\nabla_{\alpha}{F_{\beta \gamma}} + \nabla_{\beta}{F_{\gamma \alpha}} + \nabla_{\gamma}{F_{\alpha \beta}}",
            &c,
        )
        .unwrap();
        let s = substitute(&m, &nabla(), &c).unwrap();
        assert_eq!(s.terms().len(), 9);
        assert_eq!(free_indices(&s).unwrap(), free_indices(&m).unwrap());
        let r = canonicalize(&s, &c);
        assert_eq!(
            r.to_string(),
            r"\partial_{\alpha}{F_{\beta \gamma}} - \partial_{\beta}{F_{\alpha \gamma}} + \partial_{\gamma}{F_{\alpha \beta}}"
        );
    }

    #[test]
    fn fresh_dummies_avoid_term_indices() {
        let c = ctx();
        let t = parse(r"\nabla_{\delta}{F_{\alpha \beta}}", &c).unwrap();
        let s = substitute(&t, &nabla(), &c).unwrap();
        for term in s.terms().iter().skip(1) {
            let names = term.index_names();
            assert!(names.contains(r"\gamma"), "{term}");
        }
    }

    #[test]
    fn exhausted_family_is_reported() {
        let c = Context::new()
            .declare(r"{\alpha,\beta,\gamma}::Indices(small)")
            .unwrap()
            .declare(r"\nabla_{#}::Derivative")
            .unwrap();
        let rule = Rule::parse(r"\nabla_{\gamma}{A?_{\alpha \beta}} -> A?_{\alpha \delta}", &c);
        assert!(rule.is_err());
        let rule = Rule::parse(r"\nabla_{\gamma}{A?_{\alpha}} -> A?_{\beta} G^{\beta}_{\alpha \gamma}", &c).unwrap();
        let t = parse(r"\nabla_{\beta}{F_{\alpha}} X^{\gamma}", &c).unwrap();
        assert_eq!(
            substitute(&t, &rule, &c),
            Err(RewriteError::FreshExhausted("small".into()))
        );
    }

    #[test]
    fn no_match_leaves_expression() {
        let c = ctx();
        let e = parse(r"\partial_{\alpha}{F_{\beta \gamma}}", &c).unwrap();
        assert_eq!(substitute(&e, &nabla(), &c).unwrap(), e);
    }

    #[test]
    fn distribute_products_of_sums() {
        let c = ctx();
        let e = parse("a (x + y)", &c).unwrap();
        assert_eq!(distribute(&e, &c), parse("a x + a y", &c).unwrap());
        let e = parse(r"(A_{\alpha} + B_{\alpha}) C^{\alpha}", &c).unwrap();
        assert_eq!(distribute(&e, &c).terms().len(), 2);
        let e = parse(r"(A_{\alpha} B^{\alpha} + x) (C_{\alpha} D^{\alpha} + y)", &c).unwrap();
        let d = distribute(&e, &c);
        assert_eq!(d.terms().len(), 4);
        assert!(free_indices(&d).is_ok());
    }
}
