mod common;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tcas::canon::Context;
use tcas::comp::{apply_id_rules, determinant, determinant_expression, expand_dummies, IdRule};
use tcas::expr::{parse, Expr};
use tcas::scalar::RationalFunction;
use tcas::session::{run_script, Session};

fn rf(x: &Q) -> RationalFunction {
    RationalFunction::constant(x.clone())
}

fn det_q(m: &[Vec<Q>]) -> Q {
    let rows: Vec<Vec<RationalFunction>> = m.iter().map(|r| r.iter().map(rf).collect()).collect();
    determinant(&rows).unwrap().as_constant().unwrap()
}

#[test]
fn determinant_is_multiplicative() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let a: Vec<Vec<Q>> = (0..4).map(|_| (0..4).map(|_| small_rational(&mut rng, 6)).collect()).collect();
        let b: Vec<Vec<Q>> = (0..4).map(|_| (0..4).map(|_| small_rational(&mut rng, 6)).collect()).collect();
        let ab: Vec<Vec<Q>> = (0..4)
            .map(|i| (0..4).map(|j| (0..4).map(|k| &a[i][k] * &b[k][j]).sum()).collect())
            .collect();
        assert_eq!(det_q(&a) * det_q(&b), det_q(&ab));
    }
}

#[test]
fn detg_expansion_has_balanced_signs() {
    let (e, ctx) = determinant_expression(4);
    let terms = expand_dummies(&e, &ctx).unwrap().terms();
    assert_eq!(terms.len(), 24);
    let negative = terms.iter().filter(|t| t.as_term().0 < Q::from_integer(0.into())).count();
    assert_eq!(negative, 12);
}

fn form_context() -> Context {
    Context::new()
        .add_family("indices", &["i", "j", "k", "l"], None)
        .and_then(|c| c.add_tensor("g", Default::default()))
        .and_then(|c| c.add_symbols(&["a", "b"]))
        .unwrap()
}

#[test]
fn detg_id_rules_are_a_function() {
    let ctx = form_context();
    let text = ["g(0,0) = 1", "g(1,1) = - b^2/(b-a)^2", "g(i?,i?) = - 1", "g(i?,j?) = 0"];
    let rules: Vec<IdRule> = text.iter().map(|t| IdRule::parse(t, &ctx).unwrap()).collect();
    let mut swapped = rules.clone();
    swapped.swap(2, 3);
    for mu in 0..4 {
        for nu in 0..4 {
            let g = parse(&format!("g({mu},{nu})"), &ctx).unwrap();
            let v = apply_id_rules(&g, &rules, &ctx);
            assert!(v.to_rational_function().is_some(), "g({mu},{nu}) -> {v}");
            let expected = match (mu, nu) {
                (0, 0) => "1",
                (1, 1) => "- b^2/(b-a)^2",
                (m, n) if m == n => "-1",
                _ => "0",
            };
            let want = parse(expected, &ctx).unwrap().to_rational_function().unwrap();
            assert_eq!(v.to_rational_function().unwrap(), want);
            if (mu, nu) != (1, 1) && (mu, nu) != (0, 0) && mu != nu {
                let w = apply_id_rules(&g, &swapped, &ctx);
                assert_eq!(w, v);
            }
        }
    }
}

#[test]
fn scripts_are_deterministic() {
    for name in ["detg.frm", "bianchi.cdb", "riemann.cdb"] {
        let src = fixture(name);
        let a = run_script(&src, &mut Session::default());
        let b = run_script(&src, &mut Session::default());
        assert_eq!(a, b);
        assert_eq!(a.to_string(), b.to_string());
    }
}

#[test]
fn detg_value_is_minus_c_squared() {
    let t = run_script(&fixture("detg.frm"), &mut Session::default());
    assert_eq!(t.status(), 0);
    let mut s = Session::default();
    run_script(&fixture("detg.frm"), &mut s);
    let v = s.ctx.expression("detG").unwrap().to_rational_function().unwrap();
    let (a, b) = (RationalFunction::symbol("a"), RationalFunction::symbol("b"));
    let c = &b / &(&b - &a);
    assert!(v.equal(&-(&c * &c)));
    assert!(matches!(s.ctx.expression("detG").unwrap(), Expr::Product(_)));
}
