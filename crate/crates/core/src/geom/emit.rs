use super::DiagonalMedium;
use crate::expr::{render, Expr, RenderFormat, RenderOptions};
use crate::scalar::{Bindings, RationalFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Emit {
    #[default]
    Table,
    Csv,
    Latex,
}

fn value(rf: &RationalFunction, sample: &Bindings) -> String {
    rf.eval(sample).map(|v| v.to_string()).unwrap_or_else(|_| "undefined".into())
}

fn rows(m: &DiagonalMedium) -> Vec<(String, &RationalFunction)> {
    let axes = m.axis_names();
    let mut out = Vec::with_capacity(6);
    for (name, v) in [("eps", &m.eps), ("mu", &m.mu)] {
        for (axis, rf) in axes.iter().zip(v.iter()) {
            out.push((format!("{name}_{axis}"), rf));
        }
    }
    out
}

/// Renders the medium; `sample` supplies the values column.
pub fn emit_medium(m: &DiagonalMedium, emit: Emit, sample: &Bindings) -> String {
    let rows = rows(m);
    let mut out = String::new();
    match emit {
        Emit::Table => {
            let exprs: Vec<String> = rows.iter().map(|(_, rf)| rf.to_string()).collect();
            let w0 = rows.iter().map(|(c, _)| c.len()).max().unwrap_or(0).max(9);
            let w1 = exprs.iter().map(String::len).max().unwrap_or(0).max(10);
            out.push_str(&format!("# {} cloak\n", m.geometry));
            out.push_str(&format!("{:<w0$}  {:<w1$}  value\n", "component", "expression"));
            for ((c, rf), e) in rows.iter().zip(&exprs) {
                out.push_str(&format!("{c:<w0$}  {e:<w1$}  {}\n", value(rf, sample)));
            }
        }
        Emit::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["geometry", "component", "expression", "value"]).expect("in-memory write");
            for (c, rf) in &rows {
                w.write_record([m.geometry.to_string(), c.clone(), rf.to_string(), value(rf, sample)])
                    .expect("in-memory write");
            }
            out = String::from_utf8(w.into_inner().expect("flush")).expect("utf8");
        }
        Emit::Latex => {
            let opts = RenderOptions::new(RenderFormat::Latex, usize::MAX);
            out.push_str("\\begin{align}\n");
            let n = rows.len();
            for (k, (c, rf)) in rows.iter().enumerate() {
                let (name, axis) = c.split_once('_').expect("component name");
                let sym = if name == "eps" { "\\varepsilon" } else { "\\mu" };
                let axis = match axis {
                    "r" | "z" => axis.to_string(),
                    greek => format!("\\{greek}"),
                };
                let body = latex_fraction(rf, &opts);
                let end = if k + 1 < n { " \\\\" } else { "" };
                out.push_str(&format!("{sym}_{{{axis}}} &= {body}{end}\n"));
            }
            out.push_str("\\end{align}\n");
        }
    }
    out
}

fn latex_fraction(rf: &RationalFunction, opts: &RenderOptions) -> String {
    let poly = |p| render(&Expr::from_rational_function(&RationalFunction::from_polynomial(p)), opts);
    let (num, den) = rf.print_parts();
    if den.is_one() {
        poly(num)
    } else {
        format!("\\frac{{{}}}{{{}}}", poly(num), poly(den))
    }
}
