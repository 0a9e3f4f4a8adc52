//! Property checks driven by a seed. Each returns a description of the
//! first violation.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tcas::canon::{canonicalize, Context};
use tcas::comp::{contract_epsilon, evaluate, expand_dummies};
use tcas::expr::{free_indices, parse, render, Expr, Index, RenderOptions};
use tcas::geom::{plebanski_epsilon, plebanski_mu, Metric4};
use tcas::rewrite::{substitute, Rule};
use tcas::scalar::{Bindings, Monomial, Polynomial, RationalFunction};

use super::gen::{self, Components, NAMES};
use super::{random_metric, rf4, small_rational, Q};

pub type Check = Result<(), String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn render_round_trip(seed: u64) -> Check {
    let mut r = rng(seed);
    let ctx = gen::context(4);
    let e = gen::parsed(&mut r, true, &ctx);
    let width = r.gen_range(20..120);
    let text = render(&e, &RenderOptions { width, ..Default::default() });
    let back = parse(&text, &ctx).map_err(|err| format!("`{text}` fails to parse: {err}"))?;
    ensure(back == e, || format!("`{text}` parses to a different tree"))
}

fn flat(e: &Expr) -> bool {
    match e {
        Expr::Sum(ts) => ts.iter().all(|t| !matches!(t, Expr::Sum(_)) && flat(t)),
        Expr::Product(fs) => fs.iter().all(|f| !matches!(f, Expr::Product(_)) && flat(f)),
        Expr::Power { base, .. } => flat(base),
        Expr::Derivative { arg, .. } => flat(arg),
        Expr::Equation(l, r) => flat(l) && flat(r),
        _ => true,
    }
}

pub fn flattening(seed: u64) -> Check {
    let mut r = rng(seed);
    let ctx = gen::context(4);
    let a = gen::parsed(&mut r, true, &ctx);
    let b = gen::parsed(&mut r, true, &ctx);
    for e in [
        Expr::sum(vec![a.clone(), b.clone()]),
        Expr::product(vec![a.clone(), b.clone()]),
        Expr::product(vec![Expr::product(vec![a.clone(), Expr::atom("x")]), Expr::int(2)]),
        canonicalize(&a, &ctx),
    ] {
        ensure(flat(&e), || format!("nested node in {e}"))?;
    }
    Ok(())
}

fn reversed(e: &Expr) -> Expr {
    match e {
        Expr::Sum(ts) => Expr::Sum(ts.iter().rev().map(reversed).collect()),
        Expr::Product(fs) => Expr::Product(fs.iter().rev().map(reversed).collect()),
        other => other.clone(),
    }
}

pub fn free_indices_reorder(seed: u64) -> Check {
    let mut r = rng(seed);
    let ctx = gen::context(4);
    let e = gen::parsed(&mut r, false, &ctx);
    let free = parse("V_{p} W^{q}", &ctx).unwrap();
    let e = Expr::product(vec![e, free]);
    let key = |x: &Expr| -> Result<BTreeSet<String>, String> {
        Ok(free_indices(x).map_err(|e| e.to_string())?.iter().map(|i| i.to_string()).collect())
    };
    let (a, b) = (key(&e)?, key(&reversed(&e))?);
    ensure(a == b && a.len() == 2, || format!("{a:?} vs {b:?}"))
}

pub fn canon_idempotent(seed: u64) -> Check {
    let mut r = rng(seed);
    let ctx = gen::context(4);
    let e = gen::parsed(&mut r, true, &ctx);
    let once = canonicalize(&e, &ctx);
    let twice = canonicalize(&once, &ctx);
    ensure(once == twice, || format!("{e}: {once} then {twice}"))
}

pub fn canon_rename_invariant(seed: u64) -> Check {
    let mut r = rng(seed);
    let ctx = gen::context(4);
    let e = gen::parsed(&mut r, true, &ctx);
    let mut image = NAMES.to_vec();
    image.shuffle(&mut r);
    let map: BTreeMap<String, String> = NAMES.iter().zip(image).map(|(a, b)| (a.to_string(), b.to_string())).collect();
    let renamed = e.rename_indices(&map);
    let (x, y) = (canonicalize(&e, &ctx), canonicalize(&renamed, &ctx));
    ensure(x == y, || format!("{e} gives {x}, renamed {renamed} gives {y}"))
}

pub fn canon_sound_on_components(seed: u64) -> Check {
    let mut r = rng(seed);
    let dim = r.gen_range(2..=3);
    let ctx = gen::context(dim);
    let e = gen::parsed(&mut r, false, &ctx);
    let c = canonicalize(&e, &ctx);
    let comps = Components::random(&mut r, dim);
    let (x, y) = (comps.value(&e, &ctx), comps.value(&c, &ctx));
    ensure(x == y, || format!("dim {dim}: {e} = {x} but {c} = {y}"))
}

/// `S^{ab} F_{ab}` in random slot orders and variances vanishes, both
/// after canonicalization and component by component.
pub fn structural_zero(seed: u64) -> Check {
    let mut r = rng(seed);
    let dim = r.gen_range(2..=3);
    let ctx = gen::context(dim);
    let mut names = NAMES.to_vec();
    names.shuffle(&mut r);
    let (x, y) = (names[0], names[1]);
    let (s1, s2) = if r.gen_bool(0.5) { (x, y) } else { (y, x) };
    let (f1, f2) = if r.gen_bool(0.5) { (x, y) } else { (y, x) };
    let extra = if r.gen_bool(0.5) { format!(" V^{{{0}}} W_{{{0}}}", names[2]) } else { String::new() };
    let src = if r.gen_bool(0.5) {
        format!("3 x S^{{{s1} {s2}}} F_{{{f1} {f2}}}{extra}")
    } else {
        format!("F^{{{f1} {f2}}} S_{{{s1} {s2}}}{extra}")
    };
    let e = parse(&src, &ctx).map_err(|e| e.to_string())?;
    let c = canonicalize(&e, &ctx);
    ensure(c.is_zero(), || format!("{src} canonicalizes to {c}"))?;
    let comps = Components::random(&mut r, dim);
    let v = comps.value(&e, &ctx);
    ensure(v.is_zero(), || format!("{src} evaluates to {v}"))
}

fn random_poly<R: Rng>(r: &mut R) -> Polynomial {
    let vars = ["x", "y", "z"];
    let n = r.gen_range(1..=4);
    Polynomial::from_terms((0..n).map(|_| {
        let mut pairs = Vec::new();
        let mut budget = 3;
        for v in vars {
            let e = r.gen_range(0..=budget);
            budget -= e;
            if e > 0 {
                pairs.push((v.to_string(), e));
            }
        }
        (Monomial::from_pairs(pairs), small_rational(r, 6))
    }))
}

fn nonzero_poly<R: Rng>(r: &mut R) -> Polynomial {
    loop {
        let p = random_poly(r);
        if !p.is_zero() {
            return p;
        }
    }
}

/// `p q / q` normalizes to `p / 1`; the GCD of `p r` and `q r` is a
/// multiple of `r`.
pub fn scalar_gcd_round_trip(seed: u64) -> Check {
    let mut r = rng(seed);
    let p = random_poly(&mut r);
    let q = nonzero_poly(&mut r);
    let f = RationalFunction::new(p.mul(&q), q.clone()).map_err(|e| e.to_string())?;
    ensure(f == RationalFunction::from_polynomial(p.clone()), || format!("({p})({q})/({q}) = {f}"))?;
    ensure(f.denominator().is_one(), || format!("denominator of {f}"))?;
    let s = nonzero_poly(&mut r);
    let g = p.mul(&s).gcd(&q.mul(&s));
    ensure(g.div_exact(&s).is_some(), || format!("gcd({p}*{s}, {q}*{s}) = {g} misses {s}"))?;
    let back = Expr::from_rational_function(&f).to_rational_function();
    ensure(back.as_ref() == Some(&f), || format!("{f} does not survive the Expr round trip"))
}

/// `equal` is reflexive, symmetric and transitive on triples built to
/// coincide, and rejects a perturbed member.
pub fn scalar_equal_equivalence(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = random_poly(&mut r);
    let d = nonzero_poly(&mut r);
    let h = nonzero_poly(&mut r);
    let k = nonzero_poly(&mut r);
    let a = RationalFunction::new(n.clone(), d.clone()).unwrap();
    let b = RationalFunction::new(n.mul(&h), d.mul(&h)).unwrap();
    let c = RationalFunction::new(n.mul(&k), d.mul(&k)).unwrap();
    ensure(a.equal(&a) && a.equal(&b) && b.equal(&a) && b.equal(&c) && a.equal(&c), || {
        format!("{a}, {b}, {c} should coincide")
    })?;
    let other = &a + &RationalFunction::one();
    ensure(!a.equal(&other), || format!("{a} equals {other}"))
}

/// Evaluating the normal form agrees with evaluating numerator and
/// denominator separately.
pub fn scalar_eval_consistent(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = random_poly(&mut r);
    let d = nonzero_poly(&mut r);
    let f = RationalFunction::new(n.clone(), d.clone()).unwrap();
    for _ in 0..5 {
        let point: Bindings = ["x", "y", "z"].iter().map(|v| (v.to_string(), small_rational(&mut r, 7))).collect();
        let dv = d.eval(&point).unwrap();
        if dv == Q::from_integer(0.into()) {
            continue;
        }
        let direct = n.eval(&point).unwrap() / dv;
        let via = f.eval(&point).map_err(|e| e.to_string())?;
        ensure(direct == via, || format!("{f} at {point:?}: {via} vs {direct}"))?;
    }
    Ok(())
}

/// `contract_epsilon` followed by full expansion equals full expansion.
pub fn epsilon_contraction_sound(seed: u64) -> Check {
    let mut r = rng(seed);
    let dim = r.gen_range(2..=4u32);
    let xs: Vec<String> = (0..dim).map(|k| format!("x{k}")).collect();
    let ys: Vec<String> = (0..dim).map(|k| format!("y{k}")).collect();
    let all: Vec<&str> = xs.iter().chain(&ys).map(String::as_str).collect();
    let ctx = Context::new()
        .with_dimension(dim)
        .and_then(|c| c.add_family("i", &all, None))
        .and_then(|c| c.add_tensor("A", Default::default()))
        .map_err(|e| e.to_string())?;
    let mut perm: Vec<usize> = (0..dim as usize).collect();
    perm.shuffle(&mut r);
    let mut src = format!("e_({})*e_({})", xs.join(","), ys.join(","));
    for (k, p) in perm.iter().enumerate() {
        src.push_str(&format!("*A({},{})", xs[k], ys[*p]));
    }
    let e = parse(&src, &ctx).map_err(|e| e.to_string())?;
    let values: Vec<Vec<Q>> = (0..dim).map(|_| (0..dim).map(|_| small_rational(&mut r, 5)).collect()).collect();
    let val = |h: &str, i: &[u32]| (h == "A").then(|| RationalFunction::constant(values[i[0] as usize][i[1] as usize].clone()));
    let direct = evaluate(&expand_dummies(&e, &ctx).map_err(|e| e.to_string())?, &val).map_err(|e| e.to_string())?;
    let contracted = contract_epsilon(&e, &ctx);
    let via = evaluate(&expand_dummies(&contracted, &ctx).map_err(|e| e.to_string())?, &val).map_err(|e| e.to_string())?;
    ensure(direct == via, || format!("{src}: {direct} vs {via} after contraction to {contracted}"))
}

pub fn epsilon_equals_mu(seed: u64) -> Check {
    let mut r = rng(seed);
    let g = Metric4::new(rf4(&random_metric(&mut r)), ["t", "x", "y", "z"]).map_err(|e| e.to_string())?;
    let eps = plebanski_epsilon(&g).map_err(|e| e.to_string())?;
    let mu = plebanski_mu(&g).map_err(|e| e.to_string())?;
    ensure(eps == mu, || "epsilon and mu differ".into())
}

/// Bianchi demo context.
pub fn bianchi_context(dim: u32) -> Context {
    Context::new()
        .with_dimension(dim)
        .unwrap()
        .declare(r"{\alpha,\beta,\gamma,\delta}::Indices(vector).")
        .unwrap()
        .declare(r"\partial_{#}::PartialDerivative.")
        .unwrap()
        .declare(r"\nabla_{#}::Derivative.")
        .unwrap()
        .declare(r"\Gamma^{\alpha}_{\beta \gamma}::TableauSymmetry(shape={2}, indices={1,2}).")
        .unwrap()
        .declare(r"F_{\alpha \beta}::AntiSymmetric.")
        .unwrap()
}

pub const NABLA: &str = r"\nabla_{\gamma} A?_{\alpha \beta} -> \partial_{\gamma}{A?_{\alpha \beta}} - A?_{\alpha \delta} \Gamma^{\delta}_{\beta \gamma} - A?_{\delta \beta} \Gamma^{\delta}_{\alpha \gamma}";
pub const MAXWELL1: &str = r"\nabla_{\alpha}F_{\beta \gamma} + \nabla_{\beta} F_{\gamma \alpha} + \nabla_{\gamma} F_{\alpha \beta}";

/// Replaces `\partial_{c}{F_{ab}}` by a tensor `dF_{cab}` so that the
/// component engine can evaluate it.
fn derivatives_as_tensors(e: &Expr) -> Expr {
    match e {
        Expr::Derivative { op, index, arg } => match arg.as_ref() {
            Expr::Tensor { head, indices } => {
                let mut idx: Vec<Index> = vec![index.clone()];
                idx.extend(indices.iter().cloned());
                Expr::tensor(&format!("d{head}{}", op.trim_start_matches('\\')), idx)
            }
            other => panic!("unexpected derivative argument {other}"),
        },
        Expr::Sum(ts) => Expr::sum(ts.iter().map(derivatives_as_tensors).collect()),
        Expr::Product(fs) => Expr::product(fs.iter().map(derivatives_as_tensors).collect()),
        other => other.clone(),
    }
}

/// Each free-index component of the substituted and of the canonical
/// Bianchi sum agree for random `F`, `dF` and symmetric `Gamma`.
pub fn bianchi_sound_on_components(seed: u64) -> Check {
    let mut r = rng(seed);
    let dim = r.gen_range(2..=3u32);
    let ctx = bianchi_context(dim);
    let rule = Rule::parse(NABLA, &ctx).map_err(|e| e.to_string())?;
    let e = parse(MAXWELL1, &ctx).map_err(|e| e.to_string())?;
    let sub = substitute(&e, &rule, &ctx).map_err(|e| e.to_string())?;
    let can = canonicalize(&sub, &ctx);
    let comps = Components::random(&mut r, dim);
    // dF: antisymmetric in its last two slots
    let mut df = BTreeMap::new();
    for c in 0..dim {
        for a in 0..dim {
            for b in a + 1..dim {
                let v = small_rational(&mut r, 5);
                df.insert(vec![c, a, b], v.clone());
                df.insert(vec![c, b, a], -v);
            }
            df.insert(vec![c, a, a], Q::from_integer(0.into()));
        }
    }
    let gamma_name = r"\Gamma";
    let val = |h: &str, i: &[u32]| -> Option<RationalFunction> {
        match h {
            "dFpartial" => df.get(i).map(|q| RationalFunction::constant(q.clone())),
            h if h == gamma_name || h == "F" => comps.get(h, i),
            _ => None,
        }
    };
    let names = [r"\alpha", r"\beta", r"\gamma"];
    let (s, c) = (derivatives_as_tensors(&sub), derivatives_as_tensors(&can));
    for a in 0..dim {
        for b in 0..dim {
            for g in 0..dim {
                let fix = |x: &Expr| {
                    x.map_indices(&mut |i| match i.name() {
                        Some(n) if n == names[0] => i.with_value(tcas::expr::IndexValue::Value(a)),
                        Some(n) if n == names[1] => i.with_value(tcas::expr::IndexValue::Value(b)),
                        Some(n) if n == names[2] => i.with_value(tcas::expr::IndexValue::Value(g)),
                        _ => i.clone(),
                    })
                };
                let x = evaluate(&expand_dummies(&fix(&s), &ctx).map_err(|e| e.to_string())?, &val).map_err(|e| e.to_string())?;
                let y = evaluate(&expand_dummies(&fix(&c), &ctx).map_err(|e| e.to_string())?, &val).map_err(|e| e.to_string())?;
                ensure(x == y, || format!("component ({a},{b},{g}): {x} vs {y}"))?;
            }
        }
    }
    Ok(())
}

/// Substituting term by term in a random order gives the same normal
/// form as substituting all at once.
pub fn bianchi_confluent(seed: u64) -> Check {
    let mut r = rng(seed);
    let ctx = bianchi_context(4);
    let rule = Rule::parse(NABLA, &ctx).map_err(|e| e.to_string())?;
    let e = parse(MAXWELL1, &ctx).map_err(|e| e.to_string())?;
    let whole = canonicalize(&substitute(&e, &rule, &ctx).map_err(|e| e.to_string())?, &ctx);
    let mut terms = e.terms();
    terms.shuffle(&mut r);
    let mut acc = Vec::new();
    for t in terms {
        acc.push(substitute(&t, &rule, &ctx).map_err(|e| e.to_string())?);
    }
    let pieces = canonicalize(&Expr::sum(acc), &ctx);
    ensure(pieces == whole, || format!("{pieces} vs {whole}"))
}

/// `\nabla_{i} T_{j k}` keeps its free indices through substitution.
pub fn substitute_preserves_free(seed: u64) -> Check {
    let mut r = rng(seed);
    let ctx = bianchi_context(4);
    let rule = Rule::parse(NABLA, &ctx).map_err(|e| e.to_string())?;
    let mut names = vec![r"\alpha", r"\beta", r"\gamma", r"\delta"];
    names.shuffle(&mut r);
    let head = ["F", "T", "M"].choose(&mut r).unwrap();
    let src = format!(r"\nabla_{{{}}}{{{head}_{{{} {}}}}}", names[0], names[1], names[2]);
    let e = parse(&src, &ctx).map_err(|e| e.to_string())?;
    let out = substitute(&e, &rule, &ctx).map_err(|e| e.to_string())?;
    let key = |x: &Expr| -> Result<BTreeSet<String>, String> {
        Ok(free_indices(x).map_err(|e| e.to_string())?.iter().map(|i| i.to_string()).collect())
    };
    let (a, b) = (key(&e)?, key(&out)?);
    ensure(a == b, || format!("{src}: {a:?} became {b:?} in {out}"))
}
