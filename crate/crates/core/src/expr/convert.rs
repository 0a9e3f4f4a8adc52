use super::Expr;
use crate::scalar::{Monomial, Polynomial, RationalFunction};

impl Expr {
    /// The scalar value of an index-free expression. `\sqrt{-g}` becomes an
    /// opaque symbol. Returns `None` for tensors, derivatives, equations and
    /// division by zero.
    pub fn to_rational_function(&self) -> Option<RationalFunction> {
        Some(match self {
            Expr::Number(q) => RationalFunction::constant(q.clone()),
            Expr::Atom(n) => RationalFunction::symbol(n),
            Expr::SqrtNegDet(g) => RationalFunction::symbol(&format!("\\sqrt{{-{g}}}")),
            Expr::Power { base, exponent } => {
                let b = base.to_rational_function()?;
                if b.is_zero() && *exponent < 0 {
                    return None;
                }
                b.powi(*exponent).ok()?
            }
            Expr::Product(fs) => {
                let mut acc = RationalFunction::one();
                for f in fs {
                    acc = &acc * &f.to_rational_function()?;
                }
                acc
            }
            Expr::Sum(ts) => {
                let mut acc = RationalFunction::zero();
                for t in ts {
                    acc = &acc + &t.to_rational_function()?;
                }
                acc
            }
            Expr::Tensor { .. } | Expr::Derivative { .. } | Expr::Equation(..) => return None,
        })
    }

    /// Compact form `num / den`, e.g. `(r - a) / r`.
    pub fn from_rational_function(rf: &RationalFunction) -> Expr {
        if rf.denominator().is_one() {
            return polynomial_expr(rf.numerator());
        }
        let (num, den) = rf.print_parts();
        Expr::product(vec![polynomial_expr(&num), Expr::power(polynomial_expr(&den), -1)])
    }

    /// One term per numerator monomial, each over the whole denominator;
    /// this is the shape FORM prints.
    pub fn expanded_from_rational_function(rf: &RationalFunction) -> Expr {
        let den = (!rf.denominator().is_one()).then(|| Expr::power(polynomial_expr(rf.denominator()), -1));
        Expr::sum(
            rf.numerator()
                .print_order()
                .into_iter()
                .map(|(m, c)| {
                    let mut fs = vec![Expr::Number(c.clone())];
                    fs.extend(monomial_factors(m));
                    fs.extend(den.clone());
                    Expr::product(fs)
                })
                .collect(),
        )
    }
}

fn symbol_expr(name: &str) -> Expr {
    match name.strip_prefix("\\sqrt{-").and_then(|r| r.strip_suffix('}')) {
        Some(g) => Expr::sqrt_neg_det(g),
        None => Expr::atom(name),
    }
}

fn monomial_factors(m: &Monomial) -> Vec<Expr> {
    m.factors()
        .iter()
        .map(|(v, e)| Expr::power(symbol_expr(v), *e as i64))
        .collect()
}

fn polynomial_expr(p: &Polynomial) -> Expr {
    Expr::sum(
        p.print_order()
            .into_iter()
            .map(|(m, c)| {
                let mut fs = vec![Expr::Number(c.clone())];
                fs.extend(monomial_factors(m));
                Expr::product(fs)
            })
            .collect(),
    )
}
