//! Script and REPL driver. One statement grammar covers both styles:
//! Cadabra-like (`::` declarations, `label := ...`, `@command!(label)`) and
//! FORM-like (`Local`, `id`, `contract`, `Print`, `.sort`, `.end`). The head
//! of each statement decides which.

mod split;

use std::fmt::{self, Write as _};

pub use split::{line_column, split, Statement, Terminator};

use crate::canon::{canonicalize, collect_terms, Context, DeclareError, SymmetryDecl, SymmetryKind};
use crate::comp::{apply_id_rules, contract_epsilon, expand_dummies, normalize, CompError, IdRule};
use crate::expr::{parse, render, render_form_block, Expr, ParseError, RenderOptions};
use crate::rewrite::{distribute, substitute, RewriteError, Rule};

/// A failed statement.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SessionError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("statement {statement}: {message}")]
    Eval { statement: usize, message: String },
}

impl SessionError {
    /// Process exit status: 1 for parse errors, 2 for evaluation errors.
    pub fn status(&self) -> i32 {
        match self {
            SessionError::Parse { .. } => 1,
            SessionError::Eval { .. } => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub statement: String,
    pub output: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub entries: Vec<Entry>,
    pub error: Option<SessionError>,
}

impl Transcript {
    pub fn status(&self) -> i32 {
        self.error.as_ref().map_or(0, SessionError::status)
    }

    /// Printed output, one block per producing statement.
    pub fn output(&self) -> String {
        let mut s = String::new();
        for e in self.entries.iter().filter(|e| !e.output.is_empty()) {
            s.push_str(&e.output);
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Batch,
    Repl,
}

#[derive(Clone, Debug, PartialEq)]
enum FormOp {
    Contract,
    Sum,
    Ids(Vec<IdRule>),
}

/// Statement-level failure before it is placed in the source.
enum Failure {
    /// Offset relative to the statement text.
    Parse(Option<usize>, String),
    Eval(String),
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        let message = match &e {
            ParseError::Syntax { message, expected, .. } if !expected.is_empty() => {
                format!("{message} (expected {})", expected.join(" or "))
            }
            ParseError::Syntax { message, .. } => message.clone(),
            ParseError::Undeclared { what, name, .. } => format!("undeclared {what} `{name}`"),
            ParseError::Index(i) => i.to_string(),
        };
        Failure::Parse(e.offset(), message)
    }
}

impl From<DeclareError> for Failure {
    fn from(e: DeclareError) -> Self {
        match e {
            DeclareError::Parse(p) => Failure::Parse(None, p.to_string()),
            other => Failure::Eval(other.to_string()),
        }
    }
}

impl From<RewriteError> for Failure {
    fn from(e: RewriteError) -> Self {
        match e {
            RewriteError::Parse(p) => p.into(),
            other => Failure::Eval(other.to_string()),
        }
    }
}

impl From<CompError> for Failure {
    fn from(e: CompError) -> Self {
        match e {
            CompError::Parse(p) => p.into(),
            other => Failure::Eval(other.to_string()),
        }
    }
}

type Step = Result<String, Failure>;

#[derive(Clone, Debug, PartialEq)]
pub struct Session {
    pub ctx: Context,
    pub mode: Mode,
    pub render: RenderOptions,
    pub transcript: Vec<Entry>,
    locals: Vec<String>,
    ops: Vec<FormOp>,
    print: Option<Vec<String>>,
    ended: bool,
    quit: bool,
    pending: String,
    statements: usize,
}

impl Default for Session {
    fn default() -> Self {
        Session::new(Context::new(), RenderOptions::default())
    }
}

impl Session {
    pub fn new(ctx: Context, render: RenderOptions) -> Session {
        Session {
            ctx,
            mode: Mode::Batch,
            render,
            transcript: Vec::new(),
            locals: Vec::new(),
            ops: Vec::new(),
            print: None,
            ended: false,
            quit: false,
            pending: String::new(),
            statements: 0,
        }
    }

    /// True after `.end` or `:quit`.
    pub fn finished(&self) -> bool {
        self.ended || self.quit
    }

    /// Text of an unterminated statement waiting for more input.
    pub fn pending(&self) -> &str {
        &self.pending
    }

    /// Runs one statement. On error the session is left as it was.
    pub fn execute(&mut self, st: &Statement) -> Result<String, SessionError> {
        self.execute_in(st, &st.text, 0)
    }

    fn execute_in(&mut self, st: &Statement, src: &str, base: usize) -> Result<String, SessionError> {
        self.statements += 1;
        let index = self.statements;
        let mut next = self.clone();
        match next.dispatch(st) {
            Ok(out) => {
                next.transcript.push(Entry {
                    statement: st.text.clone(),
                    output: out.clone(),
                });
                *self = next;
                Ok(out)
            }
            Err(Failure::Parse(off, message)) => {
                let (line, column) = line_column(src, base + st.offset + off.unwrap_or(0));
                Err(SessionError::Parse { line, column, message })
            }
            Err(Failure::Eval(message)) => Err(SessionError::Eval {
                statement: index,
                message,
            }),
        }
    }

    fn dispatch(&mut self, st: &Statement) -> Step {
        let text = st.text.trim();
        let show = st.terminator == Terminator::Semicolon;
        if st.terminator == Terminator::Command {
            return self.dot_command(text);
        }
        let head = if text.contains(":=") {
            ""
        } else {
            text.split(|c: char| !c.is_ascii_alphanumeric()).next().unwrap_or("")
        };
        let rest = text[head.len()..].trim();
        match head {
            "Off" | "On" => Ok(String::new()),
            "Format" => {
                let w = rest.parse::<usize>().map_err(|_| bad("Format", rest))?;
                self.render.width = w;
                Ok(String::new())
            }
            "Dimension" => {
                let d = rest.parse::<u32>().map_err(|_| bad("Dimension", rest))?;
                self.ctx = self.ctx.with_dimension(d)?;
                Ok(String::new())
            }
            "Indices" | "Index" if !text.contains("::") => {
                let names = name_list(rest);
                self.ctx = self.ctx.add_family("indices", &names, None)?;
                Ok(String::new())
            }
            "Tensors" | "Tensor" | "CTensors" | "CTensor" => {
                for n in name_list(rest) {
                    self.ctx = self.ctx.add_tensor(n, SymmetryDecl::none())?;
                }
                Ok(String::new())
            }
            "Symbols" | "Symbol" => {
                self.ctx = self.ctx.add_symbols(&name_list(rest))?;
                Ok(String::new())
            }
            "Local" => {
                let (name, body) = rest.split_once('=').ok_or_else(|| bad("Local", rest))?;
                let name = name.trim();
                let off = text.len() - body.len();
                let e = parse(body, &self.ctx).map_err(|e| shift(e.into(), off))?;
                self.ctx = self.ctx.with_expression(name, e);
                if !self.locals.iter().any(|l| l == name) {
                    self.locals.push(name.to_string());
                }
                Ok(String::new())
            }
            "contract" => {
                self.ops.push(FormOp::Contract);
                Ok(String::new())
            }
            "sum" => {
                self.ops.push(FormOp::Sum);
                Ok(String::new())
            }
            "id" => {
                let off = text.len() - rest.len();
                let rule = IdRule::parse(rest, &self.ctx).map_err(|e| shift(e.into(), off))?;
                match self.ops.last_mut() {
                    Some(FormOp::Ids(rs)) => rs.push(rule),
                    _ => self.ops.push(FormOp::Ids(vec![rule])),
                }
                Ok(String::new())
            }
            "Print" => {
                let names: Vec<String> = name_list(rest).into_iter().map(String::from).collect();
                self.print = Some(names);
                Ok(String::new())
            }
            _ if text.starts_with('@') => self.command(text, show),
            _ if text.contains("::") => {
                self.ctx = self.ctx.declare(text)?;
                Ok(String::new())
            }
            _ if text.starts_with(':') => self.meta(text),
            _ => match text.split_once(":=") {
                Some((label, body)) => self.assign(label.trim(), body, text.len() - body.len(), show),
                None => {
                    let e = parse(text, &self.ctx)?;
                    Ok(if show { self.show_expr(&e) } else { String::new() })
                }
            },
        }
    }

    fn assign(&mut self, label: &str, body: &str, off: usize, show: bool) -> Step {
        if label.is_empty() || label.contains(char::is_whitespace) {
            return Err(Failure::Parse(Some(0), format!("invalid label `{label}`")));
        }
        if has_arrow(body) {
            let rule = Rule::parse(body, &self.ctx)
                .map_err(|e| shift(e.into(), off))?
                .with_label(label);
            let out = if show {
                format!("{label}:= {} -> {};", self.show_expr(&rule.lhs), self.show_expr(&rule.rhs))
            } else {
                String::new()
            };
            self.ctx = self.ctx.with_rule(label, rule);
            return Ok(out);
        }
        let e = parse(body, &self.ctx).map_err(|e| shift(e.into(), off))?;
        self.ctx = self.ctx.with_expression(label, e);
        Ok(self.echo(label, show))
    }

    fn echo(&self, label: &str, show: bool) -> String {
        match (show, self.ctx.expression(label)) {
            (true, Some(e)) => format!("{label}:= {};", self.show_expr(e)),
            _ => String::new(),
        }
    }

    fn show_expr(&self, e: &Expr) -> String {
        render(e, &self.render)
    }

    /// `@name!(label)` and `@substitute!(label)(@(rule))`.
    fn command(&mut self, text: &str, show: bool) -> Step {
        let body = text[1..].trim();
        let open = body.find('(').ok_or_else(|| bad("command", text))?;
        let name = body[..open].trim().trim_end_matches('!');
        let (label, rest) = paren_arg(&body[open..]).ok_or_else(|| bad("command", text))?;
        let expr = self
            .ctx
            .expression(label)
            .cloned()
            .ok_or_else(|| Failure::Eval(format!("no expression labelled `{label}`")))?;
        let result = match name {
            "substitute" => {
                let (arg, _) = paren_arg(rest.trim()).ok_or_else(|| bad("@substitute", text))?;
                let rule_label = arg
                    .trim()
                    .strip_prefix('@')
                    .and_then(|r| paren_arg(r.trim()))
                    .map(|(l, _)| l)
                    .unwrap_or(arg.trim());
                let rule = self
                    .ctx
                    .rule(rule_label)
                    .cloned()
                    .ok_or_else(|| Failure::Eval(format!("no rule labelled `{rule_label}`")))?;
                substitute(&expr, &rule, &self.ctx)?
            }
            "canonicalise" | "canonicalize" => canonicalize(&expr, &self.ctx),
            "collect_terms" => collect_terms(&expr),
            "distribute" => distribute(&expr, &self.ctx),
            other => return Err(Failure::Eval(format!("unknown command `@{other}`"))),
        };
        self.ctx = self.ctx.with_expression(label, result);
        Ok(self.echo(label, show))
    }

    fn dot_command(&mut self, text: &str) -> Step {
        match text {
            ".sort" | ".end" | ".store" => {
                let out = self.run_module()?;
                if text == ".end" {
                    self.ended = true;
                }
                Ok(out)
            }
            other => Err(Failure::Eval(format!("unknown module command `{other}`"))),
        }
    }

    /// Applies the buffered module statements to every local, then prints.
    fn run_module(&mut self) -> Step {
        let ops = std::mem::take(&mut self.ops);
        for name in &self.locals {
            let mut e = self.ctx.expression(name).cloned().expect("local is stored");
            for op in &ops {
                e = match op {
                    FormOp::Contract => contract_epsilon(&e, &self.ctx),
                    FormOp::Sum => expand_dummies(&e, &self.ctx)?,
                    FormOp::Ids(rules) => apply_id_rules(&e, rules, &self.ctx),
                };
            }
            let e = normalize(&e, &self.ctx);
            self.ctx = self.ctx.with_expression(name, e);
        }
        let Some(which) = self.print.take() else {
            return Ok(String::new());
        };
        let names: Vec<&String> = if which.is_empty() {
            self.locals.iter().collect()
        } else {
            which.iter().collect()
        };
        let mut out = Vec::new();
        for n in names {
            let e = self
                .ctx
                .expression(n)
                .ok_or_else(|| Failure::Eval(format!("no local expression `{n}`")))?;
            out.push(render_form_block(n, e, self.render.width));
        }
        Ok(out.join("\n"))
    }

    fn meta(&mut self, text: &str) -> Step {
        let (cmd, arg) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
        match cmd {
            ":quit" | ":q" => {
                self.quit = true;
                Ok(String::new())
            }
            ":ctx" => Ok(describe(&self.ctx)),
            ":show" => {
                let label = arg.trim();
                if let Some(e) = self.ctx.expression(label) {
                    Ok(format!("{label}:= {};", self.show_expr(e)))
                } else if let Some(r) = self.ctx.rule(label) {
                    Ok(format!("{label}:= {} -> {};", self.show_expr(&r.lhs), self.show_expr(&r.rhs)))
                } else {
                    Err(Failure::Eval(format!("nothing labelled `{label}`")))
                }
            }
            other => Err(Failure::Eval(format!("unknown meta-command `{other}`"))),
        }
    }
}

fn bad(what: &str, text: &str) -> Failure {
    Failure::Parse(None, format!("malformed {what} statement `{text}`"))
}

fn shift(f: Failure, by: usize) -> Failure {
    match f {
        Failure::Parse(Some(o), m) => Failure::Parse(Some(o + by), m),
        other => other,
    }
}

fn name_list(s: &str) -> Vec<&str> {
    s.split(|c: char| c == ',' || c.is_whitespace()).filter(|n| !n.is_empty()).collect()
}

/// `->` outside brackets.
fn has_arrow(s: &str) -> bool {
    let mut depth = 0i32;
    let b = s.as_bytes();
    for (i, c) in b.iter().enumerate() {
        match c {
            b'(' | b'[' | b'{' => depth += 1,
            b')' | b']' | b'}' => depth -= 1,
            b'-' if depth == 0 && b.get(i + 1) == Some(&b'>') => return true,
            _ => {}
        }
    }
    false
}

/// Splits `(inner)rest` at the matching parenthesis.
fn paren_arg(s: &str) -> Option<(&str, &str)> {
    let s = s.strip_prefix('(')?;
    let mut depth = 1;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some((s[..i].trim(), &s[i + 1..]));
                }
            }
            _ => {}
        }
    }
    None
}

fn describe(ctx: &Context) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "dimension {}", ctx.dimension());
    for f in ctx.families() {
        let range = ctx
            .index_range(&f.names[0])
            .map(|r| format!(" values {}..{}", r.start(), r.end()))
            .unwrap_or_default();
        let _ = writeln!(s, "indices {}: {}{range}", f.name, f.names.join(", "));
    }
    for (head, decl) in ctx.tensors() {
        let sym: Vec<String> = decl
            .groups
            .iter()
            .map(|g| {
                let k = match g.kind {
                    SymmetryKind::Symmetric => "symmetric",
                    SymmetryKind::Antisymmetric => "antisymmetric",
                };
                format!("{k} in slots {:?}", g.slots)
            })
            .collect();
        let _ = writeln!(s, "tensor {head}{}", if sym.is_empty() { String::new() } else { format!(": {}", sym.join("; ")) });
    }
    for (op, kind) in ctx.derivatives() {
        let _ = writeln!(s, "derivative {op}: {kind:?}");
    }
    if !ctx.symbols().is_empty() {
        let syms: Vec<&str> = ctx.symbols().iter().map(String::as_str).collect();
        let _ = writeln!(s, "symbols {}", syms.join(", "));
    }
    for label in ctx.rules().keys() {
        let _ = writeln!(s, "rule {label}");
    }
    for label in ctx.named().keys() {
        let _ = writeln!(s, "expression {label}");
    }
    s.trim_end().to_string()
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.output())?;
        if let Some(e) = &self.error {
            write!(f, "error: {e}")?;
        }
        Ok(())
    }
}

/// Runs a whole script. Execution stops at `.end` or at the first error.
pub fn run_script(source: &str, session: &mut Session) -> Transcript {
    let src = format!("{source}\n");
    let (statements, rest) = split(&src);
    let start = session.transcript.len();
    let mut error = None;
    for st in &statements {
        if session.finished() {
            break;
        }
        if let Err(e) = session.execute_in(st, &src, 0) {
            error = Some(e);
            break;
        }
    }
    if error.is_none() && !session.finished() && !src[rest..].trim().is_empty() {
        let (line, column) = line_column(&src, rest + (src[rest..].len() - src[rest..].trim_start().len()));
        error = Some(SessionError::Parse {
            line,
            column,
            message: "unterminated statement (missing `;` or `.`)".into(),
        });
    }
    Transcript {
        entries: session.transcript[start..].to_vec(),
        error,
    }
}

/// Feeds one line of interactive input. Statements are buffered until
/// terminated. Errors are reported in the output and leave the session's
/// context unchanged.
pub fn repl_step(mut session: Session, line: &str) -> (Session, String) {
    session.mode = Mode::Repl;
    if session.pending.trim().is_empty() && line.trim_start().starts_with(':') {
        let st = Statement {
            text: line.trim().to_string(),
            offset: 0,
            terminator: Terminator::Semicolon,
        };
        let out = match session.execute(&st) {
            Ok(o) => o,
            Err(e) => format!("error: {e}"),
        };
        return (session, out);
    }
    session.pending.push_str(line);
    session.pending.push('\n');
    let buf = std::mem::take(&mut session.pending);
    let (statements, rest) = split(&buf);
    let mut outputs = Vec::new();
    for st in &statements {
        if session.finished() {
            break;
        }
        match session.execute_in(st, &buf, 0) {
            Ok(o) if !o.is_empty() => outputs.push(o),
            Ok(_) => {}
            Err(e) => outputs.push(format!("error: {e}")),
        }
    }
    if !session.finished() {
        session.pending = buf[rest..].to_string();
    }
    (session, outputs.join("\n"))
}
