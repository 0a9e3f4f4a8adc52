//! Sparse multivariate polynomials with rational coefficients.

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{BigInt, One, Signed, Zero};

use super::{Bindings, Rational, ScalarError};

/// A power product of named symbols. Entries are sorted by symbol name and
/// never carry a zero exponent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(String, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(name: &str) -> Self {
        Monomial(vec![(name.to_string(), 1)])
    }

    pub fn from_pairs<I: IntoIterator<Item = (String, u32)>>(pairs: I) -> Self {
        let mut map: BTreeMap<String, u32> = BTreeMap::new();
        for (name, e) in pairs {
            *map.entry(name).or_insert(0) += e;
        }
        Monomial(map.into_iter().filter(|(_, e)| *e > 0).collect())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn exponent(&self, var: &str) -> u32 {
        self.0
            .iter()
            .find(|(n, _)| n == var)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn factors(&self) -> &[(String, u32)] {
        &self.0
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial::from_pairs(self.0.iter().cloned().chain(other.0.iter().cloned()))
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        for (name, e) in &self.0 {
            let d = other.exponent(name);
            if d > *e {
                return None;
            }
            if e - d > 0 {
                out.push((name.clone(), e - d));
            }
        }
        if other.0.iter().any(|(n, _)| self.exponent(n) == 0) {
            return None;
        }
        Some(Monomial(out))
    }

    fn without(&self, var: &str) -> Monomial {
        Monomial(self.0.iter().filter(|(n, _)| n != var).cloned().collect())
    }

    fn sqrt(&self) -> Option<Monomial> {
        if self.0.iter().any(|(_, e)| e % 2 != 0) {
            return None;
        }
        Some(Monomial(self.0.iter().map(|(n, e)| (n.clone(), e / 2)).collect()))
    }

    /// Lexicographic comparison of exponent vectors over the sorted symbol
    /// names: a larger exponent on an earlier symbol wins.
    pub fn cmp_lex(&self, other: &Monomial) -> Ordering {
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((na, ea)), Some((nb, eb))) => match na.cmp(nb) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        if ea != eb {
                            return ea.cmp(eb);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }
}

/// Graded lexicographic order.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.cmp_lex(other))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (k, (name, e)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            if *e == 1 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{name}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Polynomial over the rationals. Terms are kept in a map ordered by
/// graded-lex monomial order; zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, Rational>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial::default()
    }

    pub fn one() -> Self {
        Polynomial::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Polynomial::term(Monomial::one(), c)
    }

    pub fn var(name: &str) -> Self {
        Polynomial::term(Monomial::var(name), Rational::one())
    }

    pub fn term(m: Monomial, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Polynomial { terms }
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Rational)>>(it: I) -> Self {
        let mut p = Polynomial::zero();
        for (m, c) in it {
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    pub fn as_constant(&self) -> Option<Rational> {
        if self.is_zero() {
            return Some(Rational::zero());
        }
        if self.is_constant() {
            return self.terms.values().next().cloned();
        }
        None
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Leading term under graded-lex order.
    pub fn leading(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().next_back()
    }

    pub fn leading_coefficient(&self) -> Rational {
        self.leading().map(|(_, c)| c.clone()).unwrap_or_else(Rational::zero)
    }

    pub fn variables(&self) -> BTreeSet<String> {
        self.terms
            .keys()
            .flat_map(|m| m.0.iter().map(|(n, _)| n.clone()))
            .collect()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: &str) -> u32 {
        self.terms.keys().map(|m| m.exponent(var)).max().unwrap_or(0)
    }

    /// Coefficients of `self` viewed as a univariate polynomial in `var`.
    pub fn coefficients_in(&self, var: &str) -> BTreeMap<u32, Polynomial> {
        let mut out: BTreeMap<u32, Polynomial> = BTreeMap::new();
        for (m, c) in &self.terms {
            out.entry(m.exponent(var))
                .or_default()
                .add_term(m.without(var), c.clone());
        }
        out
    }

    fn leading_coefficient_in(&self, var: &str) -> Polynomial {
        let d = self.degree_in(var);
        self.coefficients_in(var).remove(&d).unwrap_or_default()
    }

    pub fn scale(&self, c: &Rational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (m.clone(), v * c))
                .collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &Rational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (k.mul(m), v * c))
                .collect(),
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Polynomial {
        self.scale(&-Rational::one())
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut acc: BTreeMap<Monomial, Rational> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                *acc.entry(ma.mul(mb)).or_insert_with(Rational::zero) += ca * cb;
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Polynomial { terms: acc }
    }

    pub fn pow(&self, n: u32) -> Polynomial {
        let mut result = Polynomial::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Exact division; `None` when `divisor` does not divide `self`.
    pub fn div_exact(&self, divisor: &Polynomial) -> Option<Polynomial> {
        let (lm, lc) = divisor.leading()?;
        let (lm, lc) = (lm.clone(), lc.clone());
        let mut quotient = Polynomial::zero();
        let mut rem = self.clone();
        while let Some((rm, rc)) = rem.leading() {
            let m = rm.div(&lm)?;
            let c = rc / &lc;
            rem = rem.sub(&divisor.mul_monomial(&m, &c));
            quotient.add_term(m, c);
        }
        Some(quotient)
    }

    /// Rational factor `u` such that `u * self` has coprime integer
    /// coefficients and a positive leading coefficient.
    pub fn unit_normalizer(&self) -> Rational {
        if self.is_zero() {
            return Rational::one();
        }
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for c in self.terms.values() {
            num_gcd = num::integer::gcd(num_gcd, c.numer().clone());
            den_lcm = num::integer::lcm(den_lcm, c.denom().clone());
        }
        let mut u = Rational::new(den_lcm, num_gcd);
        if self.leading_coefficient().is_negative() {
            u = -u;
        }
        u
    }

    /// Integer-primitive associate with positive leading coefficient.
    pub fn unit_normal(&self) -> Polynomial {
        self.scale(&self.unit_normalizer())
    }

    /// Greatest common divisor, returned in unit-normal form. `gcd(0, 0) = 0`.
    pub fn gcd(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() {
            return other.unit_normal();
        }
        if other.is_zero() {
            return self.unit_normal();
        }
        if self.is_constant() || other.is_constant() {
            return Polynomial::one();
        }
        let va = self.variables();
        let vb = other.variables();
        // A variable present on one side only: the gcd lives in its content.
        if let Some(x) = va.iter().find(|v| !vb.contains(*v)) {
            return self.content_in(x).gcd(other);
        }
        if let Some(x) = vb.iter().find(|v| !va.contains(*v)) {
            return other.content_in(x).gcd(self);
        }
        let x = va.iter().next().expect("non-constant").clone();
        let ca = self.content_in(&x);
        let cb = other.content_in(&x);
        let content = ca.gcd(&cb);
        let pa = self.div_exact(&ca).expect("content divides");
        let pb = other.div_exact(&cb).expect("content divides");
        let prim = primitive_prs_gcd(pa, pb, &x);
        content.mul(&prim).unit_normal()
    }

    /// Gcd of the coefficients of `self` as a polynomial in `var`.
    pub fn content_in(&self, var: &str) -> Polynomial {
        self.coefficients_in(var)
            .values()
            .fold(Polynomial::zero(), |acc, c| acc.gcd(c))
    }

    fn primitive_part_in(&self, var: &str) -> Polynomial {
        if self.is_zero() {
            return Polynomial::zero();
        }
        let c = self.content_in(var);
        self.div_exact(&c).expect("content divides").unit_normal()
    }

    /// Sparse pseudo-remainder of `self` by `divisor` in `var`.
    fn pseudo_remainder(&self, divisor: &Polynomial, var: &str) -> Polynomial {
        let db = divisor.degree_in(var);
        let lb = divisor.leading_coefficient_in(var);
        let mut r = self.clone();
        while !r.is_zero() && r.degree_in(var) >= db {
            let dr = r.degree_in(var);
            let lr = r.leading_coefficient_in(var);
            let shift = Polynomial::term(
                Monomial::from_pairs([(var.to_string(), dr - db)]),
                Rational::one(),
            );
            r = lb.mul(&r).sub(&lr.mul(&shift).mul(divisor));
        }
        r
    }

    pub fn eval(&self, bindings: &Bindings) -> Result<Rational, ScalarError> {
        let mut total = Rational::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (name, e) in &m.0 {
                let x = bindings
                    .get(name)
                    .ok_or_else(|| ScalarError::UnboundSymbol(name.clone()))?;
                v *= num::pow(x.clone(), *e as usize);
            }
            total += v;
        }
        Ok(total)
    }

    /// Replaces symbols by polynomials.
    pub fn substitute(&self, var: &str, value: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(var);
            let rest = Polynomial::term(m.without(var), c.clone());
            out = out.add(&rest.mul(&value.pow(e)));
        }
        out
    }

    /// Exact square root, if `self` is the square of a polynomial. The root
    /// returned has a positive leading coefficient.
    pub fn sqrt(&self) -> Option<Polynomial> {
        if self.is_zero() {
            return Some(Polynomial::zero());
        }
        let (lm, lc) = self.leading()?;
        let root_m = lm.sqrt()?;
        let root_c = rational_sqrt(lc)?;
        let lead = Polynomial::term(root_m.clone(), root_c.clone());
        let two_lead_c = &root_c * Rational::from_integer(2.into());
        let mut root = lead;
        let mut rem = self.sub(&root.mul(&root));
        // Each step adds a strictly smaller monomial, so the loop is finite.
        while let Some((rm, rc)) = rem.leading() {
            let m = rm.div(&root_m)?;
            if m.cmp(&root_m) != Ordering::Less {
                return None;
            }
            let c = rc / &two_lead_c;
            root = root.add(&Polynomial::term(m, c));
            rem = self.sub(&root.mul(&root));
        }
        Some(root)
    }

    /// Terms in printing order: ascending lexicographic exponent vectors
    /// over sorted symbol names (so `b^2 - 2*a*b + a^2`).
    pub fn print_order(&self) -> Vec<(&Monomial, &Rational)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|x, y| x.0.cmp_lex(y.0));
        v
    }
}

fn primitive_prs_gcd(a: Polynomial, b: Polynomial, var: &str) -> Polynomial {
    let (mut a, mut b) = if a.degree_in(var) >= b.degree_in(var) {
        (a, b)
    } else {
        (b, a)
    };
    loop {
        if b.is_zero() {
            return a.primitive_part_in(var);
        }
        if b.degree_in(var) == 0 {
            return Polynomial::one();
        }
        let r = a.pseudo_remainder(&b, var);
        a = b;
        b = r.primitive_part_in(var);
    }
}

pub(crate) fn rational_sqrt(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    if &(&n * &n) == q.numer() && &(&d * &d) == q.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.print_order().into_iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if m.is_one() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{a}*{m}")?;
            }
        }
        Ok(())
    }
}
