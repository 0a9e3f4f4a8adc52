//! Maxwell geometrization: the Plebanski map from an effective 4-metric to
//! the permittivity and permeability of a medium, the field-tensor
//! layouts, and the cylindrical and spherical cloak metrics.
//!
//! Signature is (+,-,-,-). With `G = -sqrt(-g)/g00`,
//!
//! ```text
//! eps^ij = mu^ij = G g^ij
//! D^i = eps^ij E_j + (1/g00) e^ijk g_j0 H_k
//! B^i = mu^ij H_j - (1/g00) e^ijk g_j0 E_k
//! ```

mod emit;

use std::fmt;

use num::Signed;

pub use emit::{emit_medium, Emit};

use crate::comp::{determinant, levi_civita};
use crate::scalar::{ratio, rat, Bindings, Rational, RationalFunction, ScalarError};

pub type Matrix4 = [[RationalFunction; 4]; 4];
pub type Matrix3 = [[RationalFunction; 3]; 3];
pub type Vector3 = [RationalFunction; 3];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error("metric is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("metric is degenerate")]
    Singular,
    #[error("g00 vanishes")]
    ZeroG00,
    #[error("sqrt(-g) is not a rational function: -g = {0}")]
    NoSqrt(String),
    #[error("expected a diagonal matrix")]
    NotDiagonal,
    #[error("cloak shell needs a < b, got a = {a}, b = {b}")]
    InvalidShell { a: String, b: String },
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

fn zero4() -> Matrix4 {
    std::array::from_fn(|_| std::array::from_fn(|_| RationalFunction::zero()))
}

/// Symmetric 4x4 metric with rational-function entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Metric4 {
    entries: Matrix4,
    coordinates: [String; 4],
    sample: Bindings,
}

impl Metric4 {
    pub fn new(entries: Matrix4, coordinates: [&str; 4]) -> Result<Metric4, GeomError> {
        for i in 0..4 {
            for j in i + 1..4 {
                if entries[i][j] != entries[j][i] {
                    return Err(GeomError::NotSymmetric(i, j));
                }
            }
        }
        if entries[0][0].is_zero() {
            return Err(GeomError::ZeroG00);
        }
        let rows: Vec<Vec<RationalFunction>> = entries.iter().map(|r| r.to_vec()).collect();
        if determinant(&rows).map_err(|_| GeomError::Singular)?.is_zero() {
            return Err(GeomError::Singular);
        }
        Ok(Metric4 {
            entries,
            coordinates: coordinates.map(str::to_string),
            sample: Bindings::new(),
        })
    }

    pub fn diagonal(d: [RationalFunction; 4], coordinates: [&str; 4]) -> Result<Metric4, GeomError> {
        let mut m = zero4();
        for (k, v) in d.into_iter().enumerate() {
            m[k][k] = v;
        }
        Metric4::new(m, coordinates)
    }

    /// `diag(1, -1, -1, -1)` in Cartesian coordinates.
    pub fn minkowski() -> Metric4 {
        let one = RationalFunction::one();
        let m = -&one;
        Metric4::diagonal([one, m.clone(), m.clone(), m], ["t", "x", "y", "z"]).expect("flat metric")
    }

    /// Point used to pick the positive branch of `sqrt(-g)`.
    pub fn with_sample(mut self, sample: Bindings) -> Metric4 {
        self.sample = sample;
        self
    }

    pub fn sample(&self) -> &Bindings {
        &self.sample
    }

    pub fn entries(&self) -> &Matrix4 {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> &RationalFunction {
        &self.entries[i][j]
    }

    pub fn coordinates(&self) -> &[String; 4] {
        &self.coordinates
    }

    /// Determinant through the Levi-Civita formula.
    pub fn determinant(&self) -> RationalFunction {
        let rows: Vec<Vec<RationalFunction>> = self.entries.iter().map(|r| r.to_vec()).collect();
        determinant(&rows).expect("square matrix")
    }

    /// Inverse by Gauss-Jordan elimination.
    pub fn inverse(&self) -> Result<Matrix4, GeomError> {
        let mut a = self.entries.clone();
        let mut inv = zero4();
        for (k, row) in inv.iter_mut().enumerate() {
            row[k] = RationalFunction::one();
        }
        for col in 0..4 {
            let p = (col..4).find(|r| !a[*r][col].is_zero()).ok_or(GeomError::Singular)?;
            a.swap(col, p);
            inv.swap(col, p);
            let pivot = a[col][col].recip()?;
            for j in 0..4 {
                a[col][j] = &a[col][j] * &pivot;
                inv[col][j] = &inv[col][j] * &pivot;
            }
            for r in 0..4 {
                if r == col || a[r][col].is_zero() {
                    continue;
                }
                let f = a[r][col].clone();
                for j in 0..4 {
                    a[r][j] = &a[r][j] - &(&f * &a[col][j]);
                    inv[r][j] = &inv[r][j] - &(&f * &inv[col][j]);
                }
            }
        }
        Ok(inv)
    }

    /// `sqrt(-det g)`, positive at the sample point.
    pub fn sqrt_neg_det(&self) -> Result<RationalFunction, GeomError> {
        let neg = -&self.determinant();
        let root = neg.sqrt().ok_or_else(|| GeomError::NoSqrt(neg.to_string()))?;
        Ok(positive_branch(root, &self.sample))
    }
}

/// Chooses the sign of a square root: positive at `sample` when it can be
/// evaluated there, otherwise the root as returned (positive leading
/// numerator coefficient).
fn positive_branch(root: RationalFunction, sample: &Bindings) -> RationalFunction {
    match root.eval(sample) {
        Ok(v) if v.is_negative() => -root,
        _ => root,
    }
}

fn spatial(m: &Matrix4) -> Matrix3 {
    std::array::from_fn(|i| std::array::from_fn(|j| m[i + 1][j + 1].clone()))
}

/// `eps^ij = -(sqrt(-g)/g00) g^ij` on the spatial block of the inverse.
pub fn plebanski_epsilon(g: &Metric4) -> Result<Matrix3, GeomError> {
    let inv = g.inverse()?;
    let factor = -&(&g.sqrt_neg_det()? / g.entry(0, 0));
    let s = spatial(&inv);
    Ok(s.map(|row| row.map(|x| &factor * &x)))
}

/// `mu^ij`; the same expression as the permittivity.
pub fn plebanski_mu(g: &Metric4) -> Result<Matrix3, GeomError> {
    plebanski_epsilon(g)
}

/// Everything the constitutive relations need.
#[derive(Clone, Debug, PartialEq)]
pub struct MediumParameters {
    pub epsilon: Matrix3,
    pub mu: Matrix3,
    /// `g_j0 / g00`, the coefficient of the magnetoelectric coupling.
    pub magnetoelectric: Vector3,
}

pub fn medium_parameters(g: &Metric4) -> Result<MediumParameters, GeomError> {
    let epsilon = plebanski_epsilon(g)?;
    let g00 = g.entry(0, 0);
    Ok(MediumParameters {
        mu: epsilon.clone(),
        epsilon,
        magnetoelectric: std::array::from_fn(|j| g.entry(j + 1, 0) / g00),
    })
}

fn coupling(m: &MediumParameters, v: &Vector3) -> Vector3 {
    std::array::from_fn(|i| {
        let mut acc = RationalFunction::zero();
        for j in 0..3 {
            for k in 0..3 {
                let s = levi_civita(&[i as u32, j as u32, k as u32]);
                if s != 0 && !m.magnetoelectric[j].is_zero() && !v[k].is_zero() {
                    acc = &acc + &(&RationalFunction::int(s) * &(&m.magnetoelectric[j] * &v[k]));
                }
            }
        }
        acc
    })
}

fn apply(m: &Matrix3, v: &Vector3) -> Vector3 {
    std::array::from_fn(|i| {
        let mut acc = RationalFunction::zero();
        for j in 0..3 {
            acc = &acc + &(&m[i][j] * &v[j]);
        }
        acc
    })
}

/// `D^i = eps^ij E_j + (1/g00) e^ijk g_j0 H_k`.
pub fn displacement_field(g: &Metric4, e: &Vector3, h: &Vector3) -> Result<Vector3, GeomError> {
    let m = medium_parameters(g)?;
    let d = apply(&m.epsilon, e);
    let c = coupling(&m, h);
    Ok(std::array::from_fn(|i| &d[i] + &c[i]))
}

/// `B^i = mu^ij H_j - (1/g00) e^ijk g_j0 E_k`.
pub fn magnetic_field(g: &Metric4, e: &Vector3, h: &Vector3) -> Result<Vector3, GeomError> {
    let m = medium_parameters(g)?;
    let b = apply(&m.mu, h);
    let c = coupling(&m, e);
    Ok(std::array::from_fn(|i| &b[i] - &c[i]))
}

/// Field tensors in matrix form: `F_ab` carries `E_i` and `B^i`, `H^ab`
/// carries `D^i` and `H_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldTensors {
    pub f_lower: Matrix4,
    pub h_upper: Matrix4,
}

fn antisymmetric(upper: [(usize, usize, RationalFunction); 6]) -> Matrix4 {
    let mut m = zero4();
    for (i, j, v) in upper {
        m[j][i] = -&v;
        m[i][j] = v;
    }
    m
}

impl FieldTensors {
    pub fn from_fields(e: &Vector3, b: &Vector3, d: &Vector3, h: &Vector3) -> FieldTensors {
        let f_lower = antisymmetric([
            (0, 1, e[0].clone()),
            (0, 2, e[1].clone()),
            (0, 3, e[2].clone()),
            (1, 2, -&b[2]),
            (1, 3, b[1].clone()),
            (2, 3, -&b[0]),
        ]);
        let h_upper = antisymmetric([
            (0, 1, -&d[0]),
            (0, 2, -&d[1]),
            (0, 3, -&d[2]),
            (1, 2, -&h[2]),
            (1, 3, h[1].clone()),
            (2, 3, -&h[0]),
        ]);
        FieldTensors { f_lower, h_upper }
    }

    pub fn e(&self) -> Vector3 {
        std::array::from_fn(|i| self.f_lower[0][i + 1].clone())
    }

    pub fn b(&self) -> Vector3 {
        let f = &self.f_lower;
        [-&f[2][3], f[1][3].clone(), -&f[1][2]]
    }

    pub fn d(&self) -> Vector3 {
        std::array::from_fn(|i| -&self.h_upper[0][i + 1])
    }

    pub fn h(&self) -> Vector3 {
        let h = &self.h_upper;
        [-&h[2][3], h[1][3].clone(), -&h[1][2]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Geometry {
    Cylindrical,
    Spherical,
}

impl Geometry {
    pub fn coordinates(self) -> [&'static str; 4] {
        match self {
            Geometry::Cylindrical => ["t", "r", "phi", "z"],
            Geometry::Spherical => ["t", "r", "theta", "phi"],
        }
    }

    /// Diagonal of the flat spatial metric; `s` stands for `sin(theta)`.
    pub fn background(self) -> Vector3 {
        let r = RationalFunction::symbol("r");
        let r2 = &r * &r;
        match self {
            Geometry::Cylindrical => [RationalFunction::one(), r2, RationalFunction::one()],
            Geometry::Spherical => {
                let s = RationalFunction::symbol("s");
                [RationalFunction::one(), r2.clone(), &r2 * &(&s * &s)]
            }
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Geometry::Cylindrical => "cylindrical",
            Geometry::Spherical => "spherical",
        })
    }
}

/// Sample point for branch choices: `a = 1`, `b = 3` unless numeric values
/// are given, `r` halfway through the shell, `s = 1/2`.
pub fn default_sample(a: &RationalFunction, b: &RationalFunction) -> Bindings {
    let av = a.as_constant().unwrap_or_else(|| rat(1));
    let bv = b.as_constant().unwrap_or_else(|| rat(3));
    let mut s = Bindings::new();
    s.insert("a".into(), av.clone());
    s.insert("b".into(), bv.clone());
    s.insert("r".into(), (av + bv) / rat(2));
    s.insert("s".into(), ratio(1, 2));
    s
}

fn check_shell(a: &RationalFunction, b: &RationalFunction) -> Result<(), GeomError> {
    if let (Some(x), Some(y)) = (a.as_constant(), b.as_constant()) {
        if x >= y || x < Rational::from_integer(0.into()) {
            return Err(GeomError::InvalidShell {
                a: x.to_string(),
                b: y.to_string(),
            });
        }
    }
    Ok(())
}

/// Radial map `r' = c (r - a)` with `c = b/(b - a)`; returns `(c, r')`.
fn radial_map(a: &RationalFunction, b: &RationalFunction) -> Result<(RationalFunction, RationalFunction), GeomError> {
    check_shell(a, b)?;
    let c = b.checked_div(&(b - a))?;
    let rp = &c * &(&RationalFunction::symbol("r") - a);
    Ok((c, rp))
}

/// Pull-back of the flat cylindrical metric through the radial map.
pub fn cylindrical_cloak_metric(a: &RationalFunction, b: &RationalFunction) -> Result<Metric4, GeomError> {
    let (c, rp) = radial_map(a, b)?;
    let one = RationalFunction::one();
    let d = [one.clone(), -&(&c * &c), -&(&rp * &rp), -&one];
    Ok(Metric4::diagonal(d, Geometry::Cylindrical.coordinates())?.with_sample(default_sample(a, b)))
}

/// Pull-back of the flat spherical metric through the radial map.
pub fn spherical_cloak_metric(a: &RationalFunction, b: &RationalFunction) -> Result<Metric4, GeomError> {
    let (c, rp) = radial_map(a, b)?;
    let s = RationalFunction::symbol("s");
    let rp2 = &rp * &rp;
    let d = [RationalFunction::one(), -&(&c * &c), -&rp2, -&(&rp2 * &(&s * &s))];
    Ok(Metric4::diagonal(d, Geometry::Spherical.coordinates())?.with_sample(default_sample(a, b)))
}

pub fn cloak_metric(geometry: Geometry, a: &RationalFunction, b: &RationalFunction) -> Result<Metric4, GeomError> {
    match geometry {
        Geometry::Cylindrical => cylindrical_cloak_metric(a, b),
        Geometry::Spherical => spherical_cloak_metric(a, b),
    }
}

/// Orthonormal-frame components of a diagonal geometrized tensor:
/// `eps^ii gamma_ii / sqrt(det gamma)`.
pub fn physical_parameters(eps: &Matrix3, background: &Vector3) -> Result<Vector3, GeomError> {
    for i in 0..3 {
        for j in 0..3 {
            if i != j && !eps[i][j].is_zero() {
                return Err(GeomError::NotDiagonal);
            }
        }
    }
    let det = &(&background[0] * &background[1]) * &background[2];
    let root = det.sqrt().ok_or_else(|| GeomError::NoSqrt(det.to_string()))?;
    Ok(std::array::from_fn(|i| &(&eps[i][i] * &background[i]) / &root))
}

/// Physical medium of a cloak: permittivity and permeability per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalMedium {
    pub geometry: Geometry,
    pub eps: Vector3,
    pub mu: Vector3,
}

impl DiagonalMedium {
    pub fn axis_names(&self) -> [&'static str; 3] {
        match self.geometry {
            Geometry::Cylindrical => ["r", "phi", "z"],
            Geometry::Spherical => ["r", "theta", "phi"],
        }
    }
}

/// Metric, Plebanski map and frame conversion in one go.
pub fn cloak_medium(geometry: Geometry, a: &RationalFunction, b: &RationalFunction) -> Result<DiagonalMedium, GeomError> {
    let g = cloak_metric(geometry, a, b)?;
    let bg = geometry.background();
    let eps = physical_parameters(&plebanski_epsilon(&g)?, &bg)?;
    let mu = physical_parameters(&plebanski_mu(&g)?, &bg)?;
    Ok(DiagonalMedium { geometry, eps, mu })
}
