use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;

use crate::expr::{parse, Expr, ParseError};
use crate::rewrite::Rule;

/// Heads with built-in meaning in the component engine.
pub const EPSILON: &str = "e_";
pub const DELTA: &str = "d_";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexFamily {
    pub name: String,
    pub names: Vec<String>,
    /// Inclusive component range; `None` means `0..=dimension-1`.
    pub range: Option<(u32, u32)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetryKind {
    Symmetric,
    Antisymmetric,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetryGroup {
    /// Zero-based slot positions.
    pub slots: Vec<usize>,
    pub kind: SymmetryKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymmetryDecl {
    pub groups: Vec<SymmetryGroup>,
}

impl SymmetryDecl {
    pub fn none() -> Self {
        SymmetryDecl::default()
    }

    pub fn single(slots: Vec<usize>, kind: SymmetryKind) -> Self {
        SymmetryDecl {
            groups: vec![SymmetryGroup { slots, kind }],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeKind {
    Partial,
    Covariant,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DeclareError {
    #[error("unknown declaration keyword `{0}`")]
    UnknownKeyword(String),
    #[error("conflicting redeclaration: {0}")]
    Conflict(String),
    #[error("malformed declaration: {0}")]
    Malformed(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Declarations in force: index families, tensor symmetries, derivative
/// operators, scalar symbols, and the labelled expressions and rules of a
/// session. Every mutator returns a new value.
#[derive(Clone, Debug, PartialEq)]
pub struct Context {
    dimension: u32,
    families: Vec<IndexFamily>,
    tensors: BTreeMap<String, SymmetryDecl>,
    derivatives: BTreeMap<String, DerivativeKind>,
    symbols: BTreeSet<String>,
    named: BTreeMap<String, Expr>,
    rules: BTreeMap<String, Rule>,
}

impl Default for Context {
    fn default() -> Self {
        Context::new()
    }
}

impl Context {
    pub fn new() -> Self {
        Context {
            dimension: 4,
            families: Vec::new(),
            tensors: BTreeMap::new(),
            derivatives: BTreeMap::new(),
            symbols: BTreeSet::new(),
            named: BTreeMap::new(),
            rules: BTreeMap::new(),
        }
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn with_dimension(&self, dimension: u32) -> Result<Context, DeclareError> {
        if dimension == 0 {
            return Err(DeclareError::Malformed("dimension must be positive".into()));
        }
        let mut c = self.clone();
        c.dimension = dimension;
        Ok(c)
    }

    pub fn families(&self) -> &[IndexFamily] {
        &self.families
    }

    pub fn tensors(&self) -> &BTreeMap<String, SymmetryDecl> {
        &self.tensors
    }

    pub fn derivatives(&self) -> &BTreeMap<String, DerivativeKind> {
        &self.derivatives
    }

    pub fn symbols(&self) -> &BTreeSet<String> {
        &self.symbols
    }

    pub fn named(&self) -> &BTreeMap<String, Expr> {
        &self.named
    }

    pub fn rules(&self) -> &BTreeMap<String, Rule> {
        &self.rules
    }

    pub fn expression(&self, label: &str) -> Option<&Expr> {
        self.named.get(label)
    }

    pub fn rule(&self, label: &str) -> Option<&Rule> {
        self.rules.get(label)
    }

    /// Family number and position of an index name (`?` suffix ignored).
    pub fn family_of(&self, name: &str) -> Option<(usize, usize)> {
        let name = name.strip_suffix('?').unwrap_or(name);
        self.families.iter().enumerate().find_map(|(f, fam)| {
            fam.names.iter().position(|n| n == name).map(|p| (f, p))
        })
    }

    pub fn is_index(&self, name: &str) -> bool {
        self.family_of(name).is_some()
    }

    pub fn index_range(&self, name: &str) -> Option<RangeInclusive<u32>> {
        let (f, _) = self.family_of(name)?;
        Some(match self.families[f].range {
            Some((lo, hi)) => lo..=hi,
            None => 0..=self.dimension - 1,
        })
    }

    pub fn symmetry(&self, head: &str) -> Option<&SymmetryDecl> {
        self.tensors.get(head)
    }

    pub fn is_tensor(&self, head: &str) -> bool {
        self.tensors.contains_key(head) || head == EPSILON || head == DELTA
    }

    pub fn derivative_kind(&self, op: &str) -> Option<DerivativeKind> {
        self.derivatives.get(op).copied()
    }

    pub fn is_symbol(&self, name: &str) -> bool {
        self.symbols.contains(name)
    }

    pub fn add_family(
        &self,
        family: &str,
        names: &[&str],
        range: Option<(u32, u32)>,
    ) -> Result<Context, DeclareError> {
        let mut c = self.clone();
        let existing = c.families.iter().position(|f| f.name == family);
        for n in names {
            if let Some((f, _)) = c.family_of(n) {
                if Some(f) != existing {
                    return Err(DeclareError::Conflict(format!(
                        "index `{n}` already belongs to family `{}`",
                        c.families[f].name
                    )));
                }
            }
        }
        match existing {
            Some(f) => {
                let fam = &mut c.families[f];
                if range.is_some() && fam.range.is_some() && fam.range != range {
                    return Err(DeclareError::Conflict(format!(
                        "family `{family}` redeclared with a different range"
                    )));
                }
                fam.range = fam.range.or(range);
                for n in names {
                    if !fam.names.iter().any(|x| x == n) {
                        fam.names.push(n.to_string());
                    }
                }
            }
            None => c.families.push(IndexFamily {
                name: family.to_string(),
                names: names.iter().map(|s| s.to_string()).collect(),
                range,
            }),
        }
        Ok(c)
    }

    pub fn add_tensor(&self, head: &str, decl: SymmetryDecl) -> Result<Context, DeclareError> {
        let mut c = self.clone();
        match c.tensors.get(head) {
            Some(old) if *old != decl && !old.groups.is_empty() && !decl.groups.is_empty() => {
                return Err(DeclareError::Conflict(format!(
                    "tensor `{head}` already has a different symmetry"
                )))
            }
            Some(old) if decl.groups.is_empty() && !old.groups.is_empty() => {}
            _ => {
                c.tensors.insert(head.to_string(), decl);
            }
        }
        Ok(c)
    }

    pub fn add_derivative(&self, op: &str, kind: DerivativeKind) -> Result<Context, DeclareError> {
        let mut c = self.clone();
        if let Some(k) = c.derivatives.get(op) {
            if *k != kind {
                return Err(DeclareError::Conflict(format!(
                    "operator `{op}` already declared as {k:?}"
                )));
            }
        }
        c.derivatives.insert(op.to_string(), kind);
        Ok(c)
    }

    pub fn add_symbols(&self, names: &[&str]) -> Result<Context, DeclareError> {
        let mut c = self.clone();
        for n in names {
            if c.is_index(n) {
                return Err(DeclareError::Conflict(format!("`{n}` is already an index")));
            }
            c.symbols.insert(n.to_string());
        }
        Ok(c)
    }

    pub fn with_expression(&self, label: &str, expr: Expr) -> Context {
        let mut c = self.clone();
        c.named.insert(label.to_string(), expr);
        c
    }

    pub fn with_rule(&self, label: &str, rule: Rule) -> Context {
        let mut c = self.clone();
        c.rules.insert(label.to_string(), rule);
        c
    }

    /// Applies one `target::Property(args)` declaration statement.
    pub fn declare(&self, decl: &str) -> Result<Context, DeclareError> {
        let decl = decl.trim().trim_end_matches(['.', ';']).trim();
        let (target, prop) = decl
            .split_once("::")
            .ok_or_else(|| DeclareError::Malformed(format!("missing `::` in `{decl}`")))?;
        let target = target.trim();
        let prop = prop.trim();
        let (keyword, args) = match prop.find('(') {
            Some(p) => {
                let inner = prop[p + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| DeclareError::Malformed(format!("unbalanced parentheses in `{prop}`")))?;
                (prop[..p].trim(), Some(inner))
            }
            None => (prop, None),
        };
        match keyword {
            "Indices" => self.declare_indices(target, args.unwrap_or("")),
            "PartialDerivative" => self.add_derivative(operator_name(target)?, DerivativeKind::Partial),
            "Derivative" => self.add_derivative(operator_name(target)?, DerivativeKind::Covariant),
            "Symmetric" | "AntiSymmetric" => {
                let (head, arity) = self.tensor_pattern(target)?;
                let kind = if keyword == "Symmetric" {
                    SymmetryKind::Symmetric
                } else {
                    SymmetryKind::Antisymmetric
                };
                self.add_tensor(&head, SymmetryDecl::single((0..arity).collect(), kind))
            }
            "TableauSymmetry" => {
                let (head, arity) = self.tensor_pattern(target)?;
                let args = args.ok_or_else(|| DeclareError::Malformed("TableauSymmetry needs arguments".into()))?;
                let shape = brace_list(args, "shape")?;
                let slots = brace_list(args, "indices")?;
                if slots.iter().any(|s| *s as usize >= arity) {
                    return Err(DeclareError::Malformed(format!(
                        "slot out of range for `{head}` with {arity} indices"
                    )));
                }
                let slots: Vec<usize> = slots.into_iter().map(|s| s as usize).collect();
                let kind = match shape.as_slice() {
                    [n] if *n as usize == slots.len() => SymmetryKind::Symmetric,
                    col if col.iter().all(|x| *x == 1) && col.len() == slots.len() => {
                        SymmetryKind::Antisymmetric
                    }
                    _ => {
                        return Err(DeclareError::Malformed(
                            "only single-row or single-column tableaux are supported".into(),
                        ))
                    }
                };
                self.add_tensor(&head, SymmetryDecl::single(slots, kind))
            }
            other => Err(DeclareError::UnknownKeyword(other.to_string())),
        }
    }

    fn declare_indices(&self, target: &str, args: &str) -> Result<Context, DeclareError> {
        let inner = target
            .strip_prefix('{')
            .and_then(|t| t.strip_suffix('}'))
            .ok_or_else(|| DeclareError::Malformed(format!("expected `{{...}}` index list, got `{target}`")))?;
        let names: Vec<&str> = inner.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if names.is_empty() {
            return Err(DeclareError::Malformed("empty index list".into()));
        }
        let family = args.split(',').next().map(str::trim).filter(|s| !s.is_empty()).unwrap_or("default");
        let range = if args.contains("values") {
            let vals = brace_list(args, "values")?;
            let lo = *vals.iter().min().expect("non-empty");
            let hi = *vals.iter().max().expect("non-empty");
            if (hi - lo + 1) as usize != vals.len() {
                return Err(DeclareError::Malformed("index values must be a contiguous range".into()));
            }
            Some((lo, hi))
        } else {
            None
        };
        self.add_family(family, &names, range)
    }

    fn tensor_pattern(&self, target: &str) -> Result<(String, usize), DeclareError> {
        match parse(target, self)? {
            Expr::Tensor { head, indices } => Ok((head, indices.len())),
            other => Err(DeclareError::Malformed(format!("`{other}` is not a tensor"))),
        }
    }
}

fn operator_name(target: &str) -> Result<&str, DeclareError> {
    let t = target.trim();
    let name = t.split('_').next().unwrap_or("").trim();
    if name.is_empty() || !t[name.len()..].trim_start().starts_with('_') {
        return Err(DeclareError::Malformed(format!("expected `\\op_{{#}}`, got `{t}`")));
    }
    Ok(name)
}

/// Extracts `key={1,2,3}` from an argument list.
fn brace_list(args: &str, key: &str) -> Result<Vec<u32>, DeclareError> {
    let start = args
        .find(key)
        .ok_or_else(|| DeclareError::Malformed(format!("missing `{key}=`")))?;
    let rest = args[start + key.len()..].trim_start();
    let rest = rest
        .strip_prefix('=')
        .map(str::trim_start)
        .and_then(|r| r.strip_prefix('{'))
        .ok_or_else(|| DeclareError::Malformed(format!("expected `{key}={{...}}`")))?;
    let end = rest
        .find('}')
        .ok_or_else(|| DeclareError::Malformed(format!("unterminated `{key}` list")))?;
    rest[..end]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<u32>()
                .map_err(|_| DeclareError::Malformed(format!("`{s}` is not a non-negative integer")))
        })
        .collect()
}
