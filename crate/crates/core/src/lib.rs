//! A small two-mode tensor computer algebra system: abstract-index rewriting
//! with symmetry-aware canonical forms, a component engine with exact
//! rational arithmetic, and a Maxwell geometrization layer.

pub mod canon;
pub mod comp;
pub mod expr;
pub mod geom;
pub mod rewrite;
pub mod scalar;
pub mod session;
