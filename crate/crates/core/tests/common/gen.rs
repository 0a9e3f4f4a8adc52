//! Random fully contracted tensor expressions, produced as source text.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use tcas::canon::Context;
use tcas::comp::{evaluate, expand_dummies};
use tcas::expr::{parse, Expr};
use tcas::scalar::RationalFunction;

use super::{small_rational, Q};

pub const NAMES: [&str; 6] = ["a", "b", "c", "d", "m", "n"];

pub fn context(dim: u32) -> Context {
    Context::new()
        .with_dimension(dim)
        .unwrap()
        .declare("{a,b,c,d,m,n,p,q}::Indices(vector).")
        .unwrap()
        .declare(r"\partial_{#}::PartialDerivative.")
        .unwrap()
        .declare("F_{a b}::AntiSymmetric.")
        .unwrap()
        .declare("S_{a b}::Symmetric.")
        .unwrap()
        .declare("R_{a b c}::AntiSymmetric.")
        .unwrap()
        .declare(r"\Gamma^{a}_{b c}::TableauSymmetry(shape={2}, indices={1,2}).")
        .unwrap()
}

#[derive(Clone, Copy)]
enum Kind {
    F,
    S,
    A,
    R,
    Gamma,
    V,
    W,
    DerivF,
}

impl Kind {
    fn slots(self) -> usize {
        match self {
            Kind::V | Kind::W => 1,
            Kind::F | Kind::S | Kind::A => 2,
            Kind::R | Kind::Gamma | Kind::DerivF => 3,
        }
    }
}

struct Slot {
    name: &'static str,
    upper: bool,
}

fn tensor_text(head: &str, slots: &[Slot]) -> String {
    let mut s = head.to_string();
    let mut k = 0;
    while k < slots.len() {
        let up = slots[k].upper;
        let mut group = Vec::new();
        while k < slots.len() && slots[k].upper == up {
            group.push(slots[k].name);
            k += 1;
        }
        s.push_str(&format!("{}{{{}}}", if up { '^' } else { '_' }, group.join(" ")));
    }
    s
}

/// One fully contracted term: a coefficient, an optional scalar factor and
/// one to three tensors whose slots are paired into dummies.
pub fn term<R: Rng>(rng: &mut R, derivatives: bool) -> String {
    let mut kinds: Vec<Kind> = Vec::new();
    let pool: &[Kind] = if derivatives {
        &[Kind::F, Kind::S, Kind::A, Kind::R, Kind::Gamma, Kind::V, Kind::W, Kind::DerivF]
    } else {
        &[Kind::F, Kind::S, Kind::A, Kind::R, Kind::Gamma, Kind::V, Kind::W]
    };
    let want = rng.gen_range(1..=3);
    while kinds.len() < want {
        let k = *pool.choose(rng).unwrap();
        if kinds.iter().map(|k| k.slots()).sum::<usize>() + k.slots() <= 7 {
            kinds.push(k);
        } else {
            break;
        }
    }
    if kinds.iter().map(|k| k.slots()).sum::<usize>() % 2 == 1 {
        kinds.push(Kind::V);
    }
    let total: usize = kinds.iter().map(|k| k.slots()).sum();
    // the first slot of a derivative is the operator index, always lower
    let mut forced_lower = Vec::new();
    let mut pos = 0;
    for k in &kinds {
        if matches!(k, Kind::DerivF) {
            forced_lower.push(pos);
        }
        pos += k.slots();
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(rng);
    let mut names = NAMES.to_vec();
    names.shuffle(rng);
    let mut slots: Vec<Option<Slot>> = (0..total).map(|_| None).collect();
    for (p, pair) in order.chunks(2).enumerate() {
        let (mut x, mut y) = (pair[0], pair[1]);
        if rng.gen_bool(0.5) {
            std::mem::swap(&mut x, &mut y);
        }
        if forced_lower.contains(&x) {
            std::mem::swap(&mut x, &mut y);
        }
        slots[x] = Some(Slot { name: names[p], upper: true });
        slots[y] = Some(Slot { name: names[p], upper: false });
    }
    let mut slots = slots.into_iter().map(Option::unwrap);
    let mut factors = Vec::new();
    let c = small_rational(rng, 4);
    let c = if c == Q::from_integer(0.into()) { Q::from_integer(1.into()) } else { c };
    factors.push(if c.is_integer() { c.to_string() } else { format!("{}/{}", c.numer(), c.denom()) });
    if rng.gen_bool(0.3) {
        factors.push(format!("{}^{}", ["x", "y"].choose(rng).unwrap(), rng.gen_range(1..=3)));
    }
    for k in kinds {
        let mut take = |n: usize| (0..n).map(|_| slots.next().unwrap()).collect::<Vec<_>>();
        let text = match k {
            Kind::F => tensor_text("F", &take(2)),
            Kind::S => tensor_text("S", &take(2)),
            Kind::A => tensor_text("A", &take(2)),
            Kind::R => tensor_text("R", &take(3)),
            Kind::Gamma => tensor_text(r"\Gamma", &take(3)),
            Kind::V => tensor_text("V", &take(1)),
            Kind::W => tensor_text("W", &take(1)),
            Kind::DerivF => {
                let s = take(3);
                format!(r"\partial_{{{}}}{{{}}}", s[0].name, tensor_text("F", &s[1..]))
            }
        };
        factors.push(text);
    }
    factors.join(" ")
}

/// A sum of one to four contracted terms.
pub fn expression<R: Rng>(rng: &mut R, derivatives: bool) -> String {
    let n = rng.gen_range(1..=4);
    let mut out = String::new();
    for k in 0..n {
        let t = term(rng, derivatives);
        match (k, t.strip_prefix('-')) {
            (0, _) => out.push_str(&t),
            (_, Some(rest)) => out.push_str(&format!(" - {rest}")),
            (_, None) => out.push_str(&format!(" + {t}")),
        }
    }
    out
}

pub fn parsed<R: Rng>(rng: &mut R, derivatives: bool, ctx: &Context) -> Expr {
    let src = expression(rng, derivatives);
    parse(&src, ctx).unwrap_or_else(|e| panic!("generated `{src}` does not parse: {e}"))
}

/// Random component values consistent with the declared symmetries.
pub struct Components {
    values: HashMap<(String, Vec<u32>), Q>,
}

impl Components {
    pub fn random<R: Rng>(rng: &mut R, dim: u32) -> Components {
        let mut values = HashMap::new();
        let d = dim;
        let mut set = |head: &str, idx: Vec<u32>, v: Q| {
            values.insert((head.to_string(), idx), v);
        };
        for i in 0..d {
            set("V", vec![i], small_rational(rng, 5));
            set("W", vec![i], small_rational(rng, 5));
            for j in 0..d {
                set("A", vec![i, j], small_rational(rng, 5));
                if i <= j {
                    let s = small_rational(rng, 5);
                    set("S", vec![i, j], s.clone());
                    set("S", vec![j, i], s);
                }
                if i < j {
                    let f = small_rational(rng, 5);
                    set("F", vec![i, j], f.clone());
                    set("F", vec![j, i], -f);
                } else if i == j {
                    set("F", vec![i, i], Q::from_integer(0.into()));
                }
                for k in 0..d {
                    if j <= k {
                        let g = small_rational(rng, 5);
                        set(r"\Gamma", vec![i, j, k], g.clone());
                        set(r"\Gamma", vec![i, k, j], g);
                    }
                }
            }
        }
        // totally antisymmetric R from independent values on i<j<k
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    values.insert(("R".into(), vec![i, j, k]), Q::from_integer(0.into()));
                }
            }
        }
        for i in 0..d {
            for j in i + 1..d {
                for k in j + 1..d {
                    let v = small_rational(rng, 5);
                    for (p, s) in [([i, j, k], 1), ([j, k, i], 1), ([k, i, j], 1), ([j, i, k], -1), ([i, k, j], -1), ([k, j, i], -1)] {
                        values.insert(("R".into(), p.to_vec()), &v * Q::from_integer(s.into()));
                    }
                }
            }
        }
        Components { values }
    }

    pub fn get(&self, head: &str, idx: &[u32]) -> Option<RationalFunction> {
        self.values
            .get(&(head.to_string(), idx.to_vec()))
            .map(|q| RationalFunction::constant(q.clone()))
    }

    /// Expands every dummy sum and evaluates.
    pub fn value(&self, e: &Expr, ctx: &Context) -> RationalFunction {
        let expanded = expand_dummies(e, ctx).unwrap();
        evaluate(&expanded, &|h: &str, i: &[u32]| self.get(h, i)).unwrap()
    }
}
