use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::{One, Signed, Zero};

use super::{Bindings, Polynomial, Rational, ScalarError};

/// Quotient of two polynomials, kept in a unique normal form: numerator and
/// denominator are coprime, and the denominator has coprime integer
/// coefficients with a positive graded-lex leading coefficient.
///
/// Because the normal form is unique, derived equality coincides with
/// mathematical equality for values built through the public API.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self, ScalarError> {
        if den.is_zero() {
            return Err(ScalarError::ZeroDenominator);
        }
        Ok(RationalFunction { num, den }.normalize())
    }

    pub fn from_polynomial(p: Polynomial) -> Self {
        RationalFunction {
            num: p,
            den: Polynomial::one(),
        }
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_polynomial(Polynomial::constant(c))
    }

    pub fn int(n: i64) -> Self {
        Self::constant(super::rat(n))
    }

    pub fn symbol(name: &str) -> Self {
        Self::from_polynomial(Polynomial::var(name))
    }

    pub fn zero() -> Self {
        Self::from_polynomial(Polynomial::zero())
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.num
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        Some(self.num.as_constant()? / self.den.as_constant()?)
    }

    /// Cancels the polynomial gcd and fixes the denominator's unit.
    pub fn normalize(&self) -> RationalFunction {
        if self.num.is_zero() {
            return RationalFunction::zero();
        }
        let g = self.num.gcd(&self.den);
        let (num, den) = if g.is_one() {
            (self.num.clone(), self.den.clone())
        } else {
            (
                self.num.div_exact(&g).expect("gcd divides numerator"),
                self.den.div_exact(&g).expect("gcd divides denominator"),
            )
        };
        let u = den.unit_normalizer();
        RationalFunction {
            num: num.scale(&u),
            den: den.scale(&u),
        }
    }

    /// Cross-multiplication equality test.
    pub fn equal(&self, other: &RationalFunction) -> bool {
        self.num
            .mul(&other.den)
            .sub(&other.num.mul(&self.den))
            .is_zero()
    }

    pub fn eval(&self, bindings: &Bindings) -> Result<Rational, ScalarError> {
        let d = self.den.eval(bindings)?;
        let n = self.num.eval(bindings)?;
        if d.is_zero() {
            return Err(ScalarError::Pole);
        }
        Ok(n / d)
    }

    pub fn recip(&self) -> Result<RationalFunction, ScalarError> {
        RationalFunction::new(self.den.clone(), self.num.clone())
    }

    pub fn checked_div(&self, other: &RationalFunction) -> Result<RationalFunction, ScalarError> {
        if other.is_zero() {
            return Err(ScalarError::ZeroDenominator);
        }
        Ok(self * &other.recip()?)
    }

    pub fn powi(&self, n: i64) -> Result<RationalFunction, ScalarError> {
        let e = n.unsigned_abs() as u32;
        let p = RationalFunction {
            num: self.num.pow(e),
            den: self.den.pow(e),
        };
        if n < 0 {
            p.recip()
        } else {
            Ok(p.normalize())
        }
    }

    /// Square root, when both numerator and denominator are perfect squares.
    /// The returned root has a positive numerator leading coefficient; the
    /// caller picks the branch.
    pub fn sqrt(&self) -> Option<RationalFunction> {
        let n = self.num.sqrt()?;
        let d = self.den.sqrt()?;
        Some(RationalFunction { num: n, den: d }.normalize())
    }

    pub fn substitute(&self, var: &str, value: &RationalFunction) -> Result<Self, ScalarError> {
        let top = self.num.degree_in(var).max(self.den.degree_in(var));
        // Multiply through by den(value)^top so both sides stay polynomial.
        let lift = |p: &Polynomial| {
            let mut acc = Polynomial::zero();
            for (e, c) in p.coefficients_in(var) {
                let term = c
                    .mul(&value.num.pow(e))
                    .mul(&value.den.pow(top - e));
                acc = acc.add(&term);
            }
            acc
        };
        RationalFunction::new(lift(&self.num), lift(&self.den))
    }

    /// Numerator and denominator with signs flipped, if needed, so that
    /// the first printed term of highest degree in the denominator is
    /// positive.
    pub fn print_parts(&self) -> (Polynomial, Polynomial) {
        let order = self.den.print_order();
        let top = order.iter().map(|(m, _)| m.degree()).max().unwrap_or(0);
        match order.iter().find(|(m, _)| m.degree() == top) {
            Some((_, c)) if c.is_negative() => (self.num.neg(), self.den.neg()),
            _ => (self.num.clone(), self.den.clone()),
        }
    }

    pub fn is_negative_constant(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_negative())
    }
}

impl Default for RationalFunction {
    fn default() -> Self {
        RationalFunction::zero()
    }
}

impl From<Rational> for RationalFunction {
    fn from(c: Rational) -> Self {
        RationalFunction::constant(c)
    }
}

impl From<Polynomial> for RationalFunction {
    fn from(p: Polynomial) -> Self {
        RationalFunction::from_polynomial(p)
    }
}

impl Add for &RationalFunction {
    type Output = RationalFunction;
    fn add(self, rhs: &RationalFunction) -> RationalFunction {
        if self.den == rhs.den {
            return RationalFunction {
                num: self.num.add(&rhs.num),
                den: self.den.clone(),
            }
            .normalize();
        }
        RationalFunction {
            num: self.num.mul(&rhs.den).add(&rhs.num.mul(&self.den)),
            den: self.den.mul(&rhs.den),
        }
        .normalize()
    }
}

impl Sub for &RationalFunction {
    type Output = RationalFunction;
    fn sub(self, rhs: &RationalFunction) -> RationalFunction {
        self + &(-rhs)
    }
}

impl Mul for &RationalFunction {
    type Output = RationalFunction;
    fn mul(self, rhs: &RationalFunction) -> RationalFunction {
        if self.is_zero() || rhs.is_zero() {
            return RationalFunction::zero();
        }
        RationalFunction {
            num: self.num.mul(&rhs.num),
            den: self.den.mul(&rhs.den),
        }
        .normalize()
    }
}

/// Panics on division by zero; use [`RationalFunction::checked_div`] when
/// the divisor may vanish.
impl Div for &RationalFunction {
    type Output = RationalFunction;
    fn div(self, rhs: &RationalFunction) -> RationalFunction {
        self.checked_div(rhs).expect("division by zero rational function")
    }
}

impl Neg for &RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        RationalFunction {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for RationalFunction {
            type Output = RationalFunction;
            fn $m(self, rhs: RationalFunction) -> RationalFunction {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        -&self
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            return write!(f, "{}", self.num);
        }
        let (num, den) = self.print_parts();
        let wrap = |p: &Polynomial| p.num_terms() > 1 || p.leading_coefficient() != Rational::one();
        if wrap(&num) {
            write!(f, "({num})")?;
        } else {
            write!(f, "{num}")?;
        }
        if wrap(&den) {
            write!(f, "/({den})")
        } else {
            write!(f, "/{den}")
        }
    }
}
