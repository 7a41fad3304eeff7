//! Line-oriented block syntax of problem files.
//!
//! ```text
//! bundle { base = [x1, x2]; fiber = [y1, y2] }
//! multivector {
//!   Y1 = d/dx1 + (y1 - x1 - x2) * d/dy1
//! }
//! ```

use std::fmt;

use thiserror::Error;

pub const BLOCKS: [&str; 7] = [
    "bundle",
    "multivector",
    "connection",
    "lagrangian",
    "symmetry",
    "section",
    "numeric",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct DslError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, DslError> {
    Err(DslError {
        line,
        message: message.into(),
    })
}

/// `key = value` or `key[i, j] = value`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub key: String,
    pub index: Vec<String>,
    pub value: String,
    pub line: usize,
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.index.is_empty() {
            write!(f, "{} = {}", self.key, self.value)
        } else {
            write!(f, "{}[{}] = {}", self.key, self.index.join(", "), self.value)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub name: String,
    pub line: usize,
    pub stmts: Vec<Stmt>,
}

impl Block {
    pub fn get(&self, key: &str) -> Option<&Stmt> {
        self.stmts.iter().find(|s| s.key == key && s.index.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemFile {
    pub blocks: Vec<Block>,
}

impl ProblemFile {
    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_stmt(text: &str, line: usize) -> Result<Stmt, DslError> {
    let Some(eq) = text.find('=') else {
        return err(line, format!("expected `key = value`, found `{text}`"));
    };
    let (lhs, value) = (text[..eq].trim(), text[eq + 1..].trim());
    if value.is_empty() {
        return err(line, format!("missing value for `{lhs}`"));
    }
    let (key, index) = match lhs.find('[') {
        Some(open) => {
            if !lhs.ends_with(']') {
                return err(line, format!("unterminated index in `{lhs}`"));
            }
            let inner = &lhs[open + 1..lhs.len() - 1];
            let index: Vec<String> = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner.split(',').map(|s| s.trim().to_string()).collect()
            };
            if let Some(bad) = index.iter().find(|s| !is_ident(s)) {
                return err(line, format!("index `{bad}` is not a coordinate name"));
            }
            (lhs[..open].trim(), index)
        }
        None => (lhs, Vec::new()),
    };
    if !is_ident(key) {
        return err(line, format!("`{key}` is not a valid name"));
    }
    Ok(Stmt {
        key: key.to_string(),
        index,
        value: value.split_whitespace().collect::<Vec<_>>().join(" "),
        line,
    })
}

/// Splits a problem file into blocks and statements. Statements end at `;`
/// or at a newline outside brackets; `#` starts a comment.
pub fn parse_problem(text: &str) -> Result<ProblemFile, DslError> {
    let mut blocks: Vec<Block> = Vec::new();
    let mut line = 1;
    let mut chars = text.chars().peekable();
    let mut current: Option<Block> = None;
    let mut buf = String::new();
    let mut buf_line = 1;
    let mut depth: Vec<(char, usize)> = Vec::new();

    let flush = |buf: &mut String, buf_line: usize, current: &mut Option<Block>| -> Result<(), DslError> {
        let t = buf.trim();
        if !t.is_empty() {
            let block = current.as_mut().expect("statements are only collected inside blocks");
            block.stmts.push(parse_stmt(t, buf_line)?);
        }
        buf.clear();
        Ok(())
    };

    while let Some(c) = chars.next() {
        if !c.is_whitespace() && c != '#' && buf.trim().is_empty() {
            buf_line = line;
        }
        match c {
            '#' => {
                while chars.peek().is_some_and(|&c| c != '\n') {
                    chars.next();
                }
            }
            '\n' => {
                if current.is_some() && depth.is_empty() {
                    flush(&mut buf, buf_line, &mut current)?;
                } else if current.is_some() {
                    buf.push(' ');
                } else {
                    buf.push('\n');
                }
                line += 1;
            }
            '{' if depth.is_empty() => {
                if current.is_some() {
                    return err(line, "nested blocks are not allowed");
                }
                let name = buf.trim().to_string();
                if name.is_empty() {
                    return err(line, "block without a name");
                }
                if !BLOCKS.contains(&name.as_str()) {
                    return err(
                        line,
                        format!("unknown block `{name}` (expected one of {})", BLOCKS.join(", ")),
                    );
                }
                if blocks.iter().any(|b| b.name == name) {
                    return err(line, format!("duplicate `{name}` block"));
                }
                current = Some(Block {
                    name,
                    line,
                    stmts: Vec::new(),
                });
                buf.clear();
            }
            '}' if depth.is_empty() => {
                if current.is_none() {
                    return err(line, "`}` without an open block");
                }
                flush(&mut buf, buf_line, &mut current)?;
                blocks.push(current.take().expect("checked above"));
            }
            ';' if depth.is_empty() && current.is_some() => flush(&mut buf, buf_line, &mut current)?,
            '(' | '[' => {
                depth.push((c, line));
                buf.push(c);
            }
            ')' | ']' => {
                let want = if c == ')' { '(' } else { '[' };
                match depth.pop() {
                    Some((open, _)) if open == want => buf.push(c),
                    _ => return err(line, format!("unbalanced `{c}`")),
                }
            }
            _ => {
                if current.is_none() && !c.is_whitespace() && !(c.is_ascii_alphanumeric() || c == '_') {
                    return err(line, format!("unexpected `{c}` outside a block"));
                }
                buf.push(c);
            }
        }
    }
    if let Some((open, l)) = depth.pop() {
        return err(l, format!("unclosed `{open}`"));
    }
    if let Some(b) = current {
        return err(b.line, format!("block `{}` is not closed", b.name));
    }
    if !buf.trim().is_empty() {
        return err(line, format!("trailing text `{}` outside a block", buf.trim()));
    }
    match blocks.iter().filter(|b| b.name == "bundle").count() {
        1 => Ok(ProblemFile { blocks }),
        _ => err(1, "exactly one `bundle` block is required"),
    }
}
