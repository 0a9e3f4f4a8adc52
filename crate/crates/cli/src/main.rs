use std::io::{self, BufRead, IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use tcas::canon::Context;
use tcas::expr::{RenderFormat, RenderOptions};
use tcas::geom::{cloak_medium, default_sample, emit_medium, Emit, Geometry};
use tcas::scalar::{Rational, RationalFunction};
use tcas::session::{repl_step, run_script, Session};

#[derive(Parser)]
#[command(name = "tcas", version, about = "Tensor algebra scripts, REPL and cloak media")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a script file.
    Run {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long, default_value_t = 80)]
        width: usize,
        #[arg(long)]
        dim: Option<u32>,
    },
    /// Interactive session.
    Repl {
        #[arg(long, default_value_t = 80)]
        width: usize,
    },
    /// Medium parameters of an invisibility cloak.
    Cloak {
        #[arg(long, value_enum)]
        geometry: GeometryArg,
        /// Inner radius; symbolic `a` when omitted.
        #[arg(long, value_parser = parse_rational)]
        a: Option<Rational>,
        /// Outer radius; symbolic `b` when omitted.
        #[arg(long, value_parser = parse_rational)]
        b: Option<Rational>,
        /// Sample point for the value column, e.g. `r=3/2`.
        #[arg(long, value_parser = parse_binding)]
        sample: Vec<(String, Rational)>,
        #[arg(long, value_enum, default_value_t = EmitArg::Table)]
        emit: EmitArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Latex,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeometryArg {
    Cylindrical,
    Spherical,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmitArg {
    Table,
    Csv,
    Latex,
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    Rational::from_str(s.trim()).map_err(|_| format!("`{s}` is not a rational number"))
}

fn parse_binding(s: &str) -> Result<(String, Rational), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    Ok((k.trim().to_string(), parse_rational(v)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { file, format, width, dim } => run(&file, format, width, dim),
        Command::Repl { width } => repl(width),
        Command::Cloak { geometry, a, b, sample, emit } => cloak(geometry, a, b, sample, emit),
    }
}

fn run(file: &PathBuf, format: Format, width: usize, dim: Option<u32>) -> ExitCode {
    let source = match std::fs::read_to_string(file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("tcas: cannot read {}: {e}", file.display());
            return ExitCode::from(2);
        }
    };
    let mut ctx = Context::new();
    if let Some(d) = dim {
        match ctx.with_dimension(d) {
            Ok(c) => ctx = c,
            Err(e) => {
                eprintln!("tcas: {e}");
                return ExitCode::from(2);
            }
        }
    }
    let format = match format {
        Format::Text => RenderFormat::Plain,
        Format::Latex => RenderFormat::Latex,
    };
    let mut session = Session::new(ctx, RenderOptions::new(format, width));
    let t = run_script(&source, &mut session);
    print!("{}", t.output());
    if let Some(e) = &t.error {
        eprintln!("{}: {e}", file.display());
    }
    ExitCode::from(t.status() as u8)
}

fn repl(width: usize) -> ExitCode {
    let mut session = Session::new(Context::new(), RenderOptions::new(RenderFormat::Plain, width));
    let interactive = io::stdin().is_terminal();
    let mut stdout = io::stdout();
    let prompt = |s: &Session, out: &mut io::Stdout| {
        if interactive {
            let p = if s.pending().trim().is_empty() { "> " } else { ". " };
            let _ = write!(out, "{p}");
            let _ = out.flush();
        }
    };
    prompt(&session, &mut stdout);
    for line in io::stdin().lock().lines() {
        let Ok(line) = line else { break };
        let (next, out) = repl_step(session, &line);
        session = next;
        if !out.is_empty() {
            let _ = writeln!(stdout, "{out}");
        }
        if session.finished() {
            break;
        }
        prompt(&session, &mut stdout);
    }
    ExitCode::SUCCESS
}

fn cloak(
    geometry: GeometryArg,
    a: Option<Rational>,
    b: Option<Rational>,
    sample: Vec<(String, Rational)>,
    emit: EmitArg,
) -> ExitCode {
    let geometry = match geometry {
        GeometryArg::Cylindrical => Geometry::Cylindrical,
        GeometryArg::Spherical => Geometry::Spherical,
    };
    let a = a.map_or_else(|| RationalFunction::symbol("a"), RationalFunction::constant);
    let b = b.map_or_else(|| RationalFunction::symbol("b"), RationalFunction::constant);
    let medium = match cloak_medium(geometry, &a, &b) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("tcas: {e}");
            return ExitCode::from(2);
        }
    };
    let mut point = default_sample(&a, &b);
    point.extend(sample);
    let emit = match emit {
        EmitArg::Table => Emit::Table,
        EmitArg::Csv => Emit::Csv,
        EmitArg::Latex => Emit::Latex,
    };
    print!("{}", emit_medium(&medium, emit, &point));
    ExitCode::SUCCESS
}
