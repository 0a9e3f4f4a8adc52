//! Independent oracles shared by the integration tests and the acceptance
//! harness. Nothing here calls into the library's algebra except where a
//! test explicitly compares against it.

#![allow(dead_code)]

use itertools::Itertools;
use num::{BigInt, BigRational, One, Signed, Zero};
use rand::Rng;
use tcas::canon::Context;
use tcas::comp::{evaluate, expand_dummies};
use tcas::expr::{Expr, Index, Variance};
use tcas::scalar::RationalFunction;

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

/// Sign of a permutation by counting inversions.
pub fn perm_sign(p: &[usize]) -> i64 {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Leibniz expansion over all permutations.
pub fn leibniz_det(m: &[Vec<Q>]) -> Q {
    let n = m.len();
    let mut acc = Q::zero();
    for p in (0..n).permutations(n) {
        let mut t = Q::from_integer(perm_sign(&p).into());
        for (i, &j) in p.iter().enumerate() {
            t *= &m[i][j];
        }
        acc += t;
    }
    acc
}

/// Inverse through the adjugate.
pub fn adjugate_inverse(m: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let n = m.len();
    let det = leibniz_det(m);
    let minor = |r: usize, c: usize| -> Vec<Vec<Q>> {
        (0..n)
            .filter(|i| *i != r)
            .map(|i| (0..n).filter(|j| *j != c).map(|j| m[i][j].clone()).collect())
            .collect()
    };
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let s = if (i + j) % 2 == 0 { Q::one() } else { -Q::one() };
                    s * leibniz_det(&minor(j, i)) / &det
                })
                .collect()
        })
        .collect()
}

pub fn small_rational<R: Rng>(rng: &mut R, span: i64) -> Q {
    q(rng.gen_range(-span..=span), rng.gen_range(1..=span))
}

pub fn nonzero_rational<R: Rng>(rng: &mut R, span: i64) -> Q {
    loop {
        let x = small_rational(rng, span);
        if !x.is_zero() {
            return x;
        }
    }
}

/// A (+,-,-,-) metric with one time-space entry `g01 = s` and
/// `-det = q^2`:
/// `g11 = (s^2 - q^2/(g22 g33))/g00`.
pub fn random_metric<R: Rng>(rng: &mut R) -> [[Q; 4]; 4] {
    let g00 = nonzero_rational(rng, 5).abs();
    let g22 = -nonzero_rational(rng, 5).abs();
    let g33 = -nonzero_rational(rng, 5).abs();
    let s = nonzero_rational(rng, 5);
    let qq = nonzero_rational(rng, 5);
    let g11 = (&s * &s - &qq * &qq / (&g22 * &g33)) / &g00;
    let z = Q::zero;
    [
        [g00, s.clone(), z(), z()],
        [s, g11, z(), z()],
        [z(), z(), g22, z()],
        [z(), z(), z(), g33],
    ]
}

/// Exact square root of a non-negative rational, when it exists.
pub fn exact_sqrt(x: &Q) -> Option<Q> {
    if x.is_negative() {
        return None;
    }
    let (n, d) = (x.numer().sqrt(), x.denom().sqrt());
    let r = BigRational::new(n, d);
    (&r * &r == *x).then_some(r)
}

/// Sample `k` distinct rationals strictly between `lo` and `hi`.
pub fn interior_points(lo: i64, hi: i64, k: i64) -> Vec<Q> {
    (1..=k).map(|i| q(lo, 1) + q((hi - lo) * i, k + 1)).collect()
}

/// Antisymmetric `F_ab` from `E_i` and `B^i`.
pub fn f_lower(e: &[Q; 3], b: &[Q; 3]) -> [[Q; 4]; 4] {
    let mut f: [[Q; 4]; 4] = Default::default();
    let mut put = |i: usize, j: usize, v: Q| {
        f[j][i] = -v.clone();
        f[i][j] = v;
    };
    put(0, 1, e[0].clone());
    put(0, 2, e[1].clone());
    put(0, 3, e[2].clone());
    put(1, 2, -b[2].clone());
    put(1, 3, b[1].clone());
    put(2, 3, -b[0].clone());
    f
}

/// Expands `H^ab = sqrt(-g) g^ac g^bd F_cd` component by component with
/// the component engine and reads `(D^i, H_i)` off the matrix layout.
pub fn field_oracle(g: &[[Q; 4]; 4], e: &[Q; 3], b: &[Q; 3]) -> ([Q; 3], [Q; 3]) {
    let rows: Vec<Vec<Q>> = g.iter().map(|r| r.to_vec()).collect();
    let inv = adjugate_inverse(&rows);
    let root = exact_sqrt(&-leibniz_det(&rows)).expect("-det g is a square");
    let f = f_lower(e, b);
    let ctx = Context::new().add_family("spacetime", &["c", "d"], None).unwrap();
    let value = |head: &str, v: &[u32]| -> Option<RationalFunction> {
        let x = match head {
            "\\sqrt{-g}" => root.clone(),
            "G" => inv[v[0] as usize][v[1] as usize].clone(),
            "F" => f[v[0] as usize][v[1] as usize].clone(),
            _ => return None,
        };
        Some(RationalFunction::constant(x))
    };
    let h = |a: u32, bb: u32| -> Q {
        let up = |x: u32| Index::concrete(x, Variance::Upper);
        let expr = Expr::product(vec![
            Expr::sqrt_neg_det("g"),
            Expr::tensor("G", vec![up(a), Index::upper("c")]),
            Expr::tensor("G", vec![up(bb), Index::upper("d")]),
            Expr::tensor("F", vec![Index::lower("c"), Index::lower("d")]),
        ]);
        let expanded = expand_dummies(&expr, &ctx).unwrap();
        evaluate(&expanded, &value).unwrap().as_constant().unwrap()
    };
    let d = [-h(0, 1), -h(0, 2), -h(0, 3)];
    let hh = [-h(2, 3), h(1, 3), -h(1, 2)];
    (d, hh)
}

pub fn rf3(v: &[Q; 3]) -> [RationalFunction; 3] {
    std::array::from_fn(|i| RationalFunction::constant(v[i].clone()))
}

pub fn rf4(m: &[[Q; 4]; 4]) -> [[RationalFunction; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| RationalFunction::constant(m[i][j].clone())))
}

pub mod gen;
pub mod props;
