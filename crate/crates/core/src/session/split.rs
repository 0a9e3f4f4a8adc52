//! Splits script text into statements.
//!
//! A statement ends at a top-level `;` (print) or at a top-level `.`
//! followed by whitespace or end of input (silent). A line whose first
//! non-blank character is `#` is a comment. FORM module commands such as
//! `.sort` and `.end` are statements of their own.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Terminator {
    /// `;`: print the result.
    Semicolon,
    /// `.`: suppress output.
    Dot,
    /// A dot command such as `.sort`; the text holds the command.
    Command,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Statement {
    pub text: String,
    /// Byte offset of `text` in the source.
    pub offset: usize,
    pub terminator: Terminator,
}

/// Complete statements and the byte offset where the unfinished rest
/// begins.
pub fn split(src: &str) -> (Vec<Statement>, usize) {
    let clean = blank_comments(src);
    let src = clean.as_str();
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start: Option<usize> = None;
    let mut consumed = 0;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if start.is_none() {
            if c.is_ascii_whitespace() {
                i += 1;
                continue;
            }
            if c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_alphabetic) {
                let mut j = i + 1;
                while j < bytes.len() && bytes[j].is_ascii_alphanumeric() {
                    j += 1;
                }
                if j == bytes.len() {
                    // may still grow in an interactive buffer
                    break;
                }
                out.push(Statement {
                    text: src[i..j].to_string(),
                    offset: i,
                    terminator: Terminator::Command,
                });
                if bytes[j] == b';' {
                    j += 1;
                }
                i = j;
                consumed = i;
                continue;
            }
            start = Some(i);
            depth = 0;
        }
        let s = start.expect("statement started");
        match c {
            b'(' | b'[' | b'{' => depth += 1,
            b')' | b']' | b'}' => depth = depth.saturating_sub(1),
            b';' if depth == 0 => {
                out.push(statement(src, s, i, Terminator::Semicolon));
                start = None;
                consumed = i + 1;
            }
            b'.' if depth == 0 => match bytes.get(i + 1) {
                None => break,
                Some(n) if n.is_ascii_whitespace() => {
                    out.push(statement(src, s, i, Terminator::Dot));
                    start = None;
                    consumed = i + 1;
                }
                _ => {}
            },
            _ => {}
        }
        i += 1;
    }
    if start.is_none() && src[consumed..].trim().is_empty() {
        consumed = src.len();
    }
    (out, consumed)
}

/// Replaces comment lines by spaces so offsets stay valid.
fn blank_comments(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    for line in src.split_inclusive('\n') {
        if line.trim_start().starts_with('#') {
            let body = line.trim_end_matches('\n');
            out.extend(std::iter::repeat(' ').take(body.len()));
            out.push_str(&line[body.len()..]);
        } else {
            out.push_str(line);
        }
    }
    out
}

fn statement(src: &str, start: usize, end: usize, terminator: Terminator) -> Statement {
    let raw = &src[start..end];
    Statement {
        text: raw.trim_end().to_string(),
        offset: start,
        terminator,
    }
}

/// One-based line and column of a byte offset.
pub fn line_column(src: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(src.len());
    let before = &src[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}
