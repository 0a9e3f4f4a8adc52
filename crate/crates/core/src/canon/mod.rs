//! Declarations and symmetry-aware canonical forms.
//!
//! A term is canonicalized in four passes: slot groups of declared tensors
//! are sorted (tracking the sign of antisymmetric swaps), nested sums are
//! canonicalized on their own, dummy pairs are relabeled to the first unused
//! names of their family, and factors are sorted by [`cmp_factors`]. Every
//! relabeling of the dummies is tried and the smallest result wins, so a
//! term whose dummies can be swapped into its own negative is zero.

mod context;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use num::{One, Zero};

pub use context::{
    Context, DeclareError, DerivativeKind, IndexFamily, SymmetryDecl, SymmetryGroup, SymmetryKind, DELTA,
    EPSILON,
};

use crate::expr::{Expr, Index, IndexValue};
use crate::scalar::Rational;

/// Above this many candidate relabelings only the first-occurrence
/// assignment is used.
const MAX_ASSIGNMENTS: usize = 5040;

/// Canonical form of an expression: every term canonicalized, like terms
/// collected, terms in the frozen order.
pub fn canonicalize(expr: &Expr, ctx: &Context) -> Expr {
    canonicalize_reserving(expr, ctx, &BTreeSet::new())
}

fn canonicalize_reserving(expr: &Expr, ctx: &Context, reserved: &BTreeSet<String>) -> Expr {
    match expr {
        Expr::Equation(l, r) => Expr::equation(
            canonicalize_reserving(l, ctx, reserved),
            canonicalize_reserving(r, ctx, reserved),
        ),
        e => {
            let terms: Vec<Expr> = e.terms().iter().map(|t| canonical_term(t, ctx, reserved)).collect();
            sort_terms(&collect_terms(&Expr::sum(terms)), ctx)
        }
    }
}

/// Merges syntactically identical terms (up to coefficient), keeping the
/// position of each term's first occurrence.
pub fn collect_terms(expr: &Expr) -> Expr {
    match expr {
        Expr::Equation(l, r) => Expr::equation(collect_terms(l), collect_terms(r)),
        e => {
            let mut order: Vec<Vec<Expr>> = Vec::new();
            let mut coefs: BTreeMap<Vec<Expr>, Rational> = BTreeMap::new();
            for t in e.terms() {
                let (c, fs) = t.as_term();
                match coefs.get_mut(&fs) {
                    Some(acc) => *acc += c,
                    None => {
                        order.push(fs.clone());
                        coefs.insert(fs, c);
                    }
                }
            }
            Expr::sum(
                order
                    .into_iter()
                    .filter_map(|fs| {
                        let c = coefs.remove(&fs).expect("recorded");
                        (!c.is_zero()).then(|| Expr::from_term(c, fs))
                    })
                    .collect(),
            )
        }
    }
}

/// Sorts the terms of a sum by [`cmp_terms`].
pub fn sort_terms(expr: &Expr, ctx: &Context) -> Expr {
    match expr {
        Expr::Sum(ts) => {
            let mut ts = ts.clone();
            ts.sort_by(|a, b| cmp_terms(a, b, ctx));
            Expr::Sum(ts)
        }
        Expr::Equation(l, r) => Expr::equation(sort_terms(l, ctx), sort_terms(r, ctx)),
        e => e.clone(),
    }
}

/// Graded order on terms: number of factors first, then factor by factor.
/// Coefficients do not take part.
pub fn cmp_terms(a: &Expr, b: &Expr, ctx: &Context) -> Ordering {
    let (_, fa) = a.as_term();
    let (_, fb) = b.as_term();
    cmp_factor_lists(&fa, &fb, ctx)
}

fn cmp_factor_lists(fa: &[Expr], fb: &[Expr], ctx: &Context) -> Ordering {
    fa.len().cmp(&fb.len()).then_with(|| {
        fa.iter()
            .zip(fb)
            .map(|(x, y)| cmp_factors(x, y, ctx))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

fn rank(e: &Expr) -> u8 {
    match e {
        Expr::Number(_) => 0,
        Expr::Atom(_) => 1,
        Expr::SqrtNegDet(_) => 2,
        Expr::Power { .. } => 3,
        Expr::Sum(_) => 4,
        Expr::Tensor { .. } => 5,
        Expr::Derivative { .. } => 6,
        Expr::Product(_) => 7,
        Expr::Equation(..) => 8,
    }
}

fn head_name(e: &Expr) -> &str {
    let raw = match e {
        Expr::Atom(n) => n.as_str(),
        Expr::SqrtNegDet(g) => g.as_str(),
        Expr::Tensor { head, .. } => head.as_str(),
        Expr::Derivative { op, .. } => op.as_str(),
        Expr::Power { base, .. } => return head_name(base),
        _ => "",
    };
    raw.trim_start_matches('\\')
}

fn index_list(e: &Expr) -> Vec<Index> {
    let mut out = Vec::new();
    e.map_indices(&mut |i| {
        out.push(i.clone());
        i.clone()
    });
    out
}

/// Concrete indices first (by value), then symbols by family order.
pub fn cmp_indices(a: &Index, b: &Index, ctx: &Context) -> Ordering {
    let key = |i: &Index| match &i.value {
        IndexValue::Value(v) => (0u8, *v as usize, 0usize, String::new()),
        IndexValue::Symbol(s) => match ctx.family_of(s) {
            Some((f, p)) => (1, f, p, s.clone()),
            None => (2, 0, 0, s.clone()),
        },
    };
    key(a).cmp(&key(b)).then(a.variance.cmp(&b.variance))
}

/// The frozen factor order: kind, head name, number of indices, the
/// indices themselves, and finally the plain rendering.
pub fn cmp_factors(a: &Expr, b: &Expr, ctx: &Context) -> Ordering {
    rank(a)
        .cmp(&rank(b))
        .then_with(|| head_name(a).cmp(head_name(b)))
        .then_with(|| {
            let (ia, ib) = (index_list(a), index_list(b));
            ia.len().cmp(&ib.len()).then_with(|| {
                ia.iter()
                    .zip(&ib)
                    .map(|(x, y)| cmp_indices(x, y, ctx))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
        })
        .then_with(|| a.to_string().cmp(&b.to_string()))
}

/// Sorts slot groups and products throughout a factor. `None` means the
/// factor vanishes identically; otherwise the sign picked up is returned.
fn normalize_factor(e: &Expr, ctx: &Context) -> Option<(bool, Expr)> {
    match e {
        Expr::Tensor { head, indices } => {
            let Some(decl) = ctx.symmetry(head) else {
                return Some((false, e.clone()));
            };
            let mut idx = indices.clone();
            let mut neg = false;
            for g in &decl.groups {
                if g.slots.iter().any(|s| *s >= idx.len()) {
                    continue;
                }
                let mut vals: Vec<Index> = g.slots.iter().map(|s| idx[*s].clone()).collect();
                let swaps = sort_counting_swaps(&mut vals, ctx);
                if g.kind == SymmetryKind::Antisymmetric {
                    if vals.windows(2).any(|w| w[0].value == w[1].value) {
                        return None;
                    }
                    neg ^= swaps % 2 == 1;
                }
                for (s, v) in g.slots.iter().zip(vals) {
                    idx[*s] = v;
                }
            }
            Some((neg, Expr::tensor(head, idx)))
        }
        Expr::Derivative { op, index, arg } => {
            let (neg, a) = normalize_factor(arg, ctx)?;
            Some((neg, Expr::derivative(op, index.clone(), a)))
        }
        Expr::Power { base, exponent } => {
            let (neg, b) = normalize_factor(base, ctx)?;
            Some((neg && exponent % 2 != 0, Expr::power(b, *exponent)))
        }
        Expr::Product(fs) => {
            let mut neg = false;
            let mut coef = Rational::one();
            let mut out = Vec::new();
            for f in fs {
                match f {
                    Expr::Number(q) => coef *= q,
                    f => {
                        let (n, g) = normalize_factor(f, ctx)?;
                        neg ^= n;
                        out.push(g);
                    }
                }
            }
            out.sort_by(|a, b| cmp_factors(a, b, ctx));
            Some((neg, Expr::from_term(coef, out)))
        }
        other => Some((false, other.clone())),
    }
}

fn sort_counting_swaps(v: &mut [Index], ctx: &Context) -> usize {
    let mut swaps = 0;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && cmp_indices(&v[j - 1], &v[j], ctx) == Ordering::Greater {
            v.swap(j - 1, j);
            swaps += 1;
            j -= 1;
        }
    }
    swaps
}

/// Dummy candidates per family: the first names not taken by free indices
/// or by the enclosing context.
fn candidate_names(
    dummies: &[String],
    taken: &BTreeSet<String>,
    ctx: &Context,
) -> Option<BTreeMap<usize, (Vec<String>, Vec<String>)>> {
    let mut by_family: BTreeMap<usize, (Vec<String>, Vec<String>)> = BTreeMap::new();
    for d in dummies {
        let (f, _) = ctx.family_of(d)?;
        by_family.entry(f).or_default().0.push(d.clone());
    }
    for (f, (ds, names)) in by_family.iter_mut() {
        *names = ctx.families()[*f]
            .names
            .iter()
            .filter(|n| !taken.contains(*n))
            .take(ds.len())
            .cloned()
            .collect();
        if names.len() < ds.len() {
            return None;
        }
    }
    Some(by_family)
}

fn canonical_term(term: &Expr, ctx: &Context, reserved: &BTreeSet<String>) -> Expr {
    let (coef, factors) = term.as_term();
    if coef.is_zero() {
        return Expr::zero();
    }
    let body = Expr::product(factors.clone());
    let Ok(occ) = body.term_occurrences() else {
        return term.clone();
    };
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for i in &occ {
        if let Some(n) = i.name() {
            *counts.entry(n.to_string()).or_default() += 1;
        }
    }
    let free: BTreeSet<String> = counts.iter().filter(|(_, c)| **c == 1).map(|(n, _)| n.clone()).collect();
    let dummies: Vec<String> = occ
        .iter()
        .filter_map(|i| i.name())
        .filter(|n| counts[*n] == 2 && !n.ends_with('?') && ctx.is_index(n))
        .unique()
        .map(str::to_string)
        .collect();
    let taken: BTreeSet<String> = free.union(reserved).cloned().collect();

    // Move outer dummies out of the way, then canonicalize nested sums so
    // that their own dummies avoid every name the outer term may use.
    let families = candidate_names(&dummies, &taken, ctx);
    let temp: BTreeMap<String, String> = dummies
        .iter()
        .enumerate()
        .map(|(k, d)| (d.clone(), format!("\u{1}{k}")))
        .collect();
    let mut inner_reserved = taken.clone();
    if let Some(fam) = &families {
        for (_, names) in fam.values() {
            inner_reserved.extend(names.iter().cloned());
        }
    } else {
        inner_reserved.extend(dummies.iter().cloned());
    }
    let factors: Vec<Expr> = factors
        .iter()
        .map(|f| canonicalize_nested(&f.rename_indices(&temp), ctx, &inner_reserved))
        .collect();

    let assignments: Vec<BTreeMap<String, String>> = match &families {
        None => vec![dummies.iter().map(|d| (temp[d].clone(), d.clone())).collect()],
        Some(fam) => relabelings(fam, &temp),
    };

    let mut seen: BTreeMap<Vec<Expr>, bool> = BTreeMap::new();
    let mut best: Option<(Vec<Expr>, bool, Rational)> = None;
    for map in &assignments {
        let renamed: Vec<Expr> = factors.iter().map(|f| f.rename_indices(map)).collect();
        let Some((neg, normalized)) = normalize_factor(&Expr::Product(renamed), ctx) else {
            return Expr::zero();
        };
        let (c, fs) = normalized.as_term();
        if c.is_zero() {
            return Expr::zero();
        }
        match seen.get(&fs) {
            Some(n) if *n != neg => return Expr::zero(),
            Some(_) => continue,
            None => {
                seen.insert(fs.clone(), neg);
            }
        }
        let better = match &best {
            None => true,
            Some((b, _, _)) => cmp_factor_lists(&fs, b, ctx).then_with(|| fs.cmp(b)) == Ordering::Less,
        };
        if better {
            best = Some((fs, neg, c));
        }
    }
    let (fs, neg, c) = best.expect("at least one assignment");
    let c = coef * c;
    Expr::from_term(if neg { -c } else { c }, fs)
}

fn canonicalize_nested(e: &Expr, ctx: &Context, reserved: &BTreeSet<String>) -> Expr {
    match e {
        Expr::Sum(_) => canonicalize_reserving(e, ctx, reserved),
        Expr::Derivative { op, index, arg } => {
            Expr::derivative(op, index.clone(), canonicalize_nested(arg, ctx, reserved))
        }
        Expr::Power { base, exponent } => Expr::power(canonicalize_nested(base, ctx, reserved), *exponent),
        Expr::Product(fs) => Expr::product(fs.iter().map(|f| canonicalize_nested(f, ctx, reserved)).collect()),
        other => other.clone(),
    }
}

/// All bijections from each family's dummies onto its candidate names,
/// capped at [`MAX_ASSIGNMENTS`].
fn relabelings(
    families: &BTreeMap<usize, (Vec<String>, Vec<String>)>,
    temp: &BTreeMap<String, String>,
) -> Vec<BTreeMap<String, String>> {
    let total: usize = families
        .values()
        .map(|(ds, _)| (1..=ds.len()).product::<usize>())
        .try_fold(1usize, |acc, n| acc.checked_mul(n))
        .unwrap_or(usize::MAX);
    let first: BTreeMap<String, String> = families
        .values()
        .flat_map(|(ds, names)| ds.iter().zip(names).map(|(d, n)| (temp[d].clone(), n.clone())))
        .collect();
    if total > MAX_ASSIGNMENTS {
        return vec![first];
    }
    let mut out = vec![BTreeMap::new()];
    for (ds, names) in families.values() {
        let mut next = Vec::new();
        for perm in names.iter().permutations(names.len()) {
            for base in &out {
                let mut m: BTreeMap<String, String> = base.clone();
                for (d, n) in ds.iter().zip(&perm) {
                    m.insert(temp[d].clone(), (*n).clone());
                }
                next.push(m);
            }
        }
        out = next;
    }
    out
}
