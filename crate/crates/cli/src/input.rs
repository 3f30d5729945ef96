//! The system description format:
//!
//! ```text
//! # comment
//! n = 3
//! a1 = 0
//! a2 = -sin(x1)^2
//! b1 = -cos(x1)
//! ```
//!
//! Components that are not given are zero.

use std::collections::BTreeMap;

use homapprox_core::series::{ControlSystem, SystemError};
use homapprox_core::symexpr::{parse_expr, Expr, ParseError};
use thiserror::Error;

/// Largest accepted state dimension.
pub const MAX_DIMENSION: usize = 10;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: expected `name = expression`")]
    MissingEquals { line: usize },
    #[error("line {line}: unknown name `{key}` (expected n, a1..an or b1..bn)")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` is given more than once")]
    Duplicate { line: usize, key: String },
    #[error("the dimension line `n = ...` is missing")]
    MissingDimension,
    #[error("line {line}: n must be an integer from 1 to {MAX_DIMENSION}, got `{value}`")]
    BadDimension { line: usize, value: String },
    #[error("line {line}: `{key}` is beyond the dimension n = {n}")]
    ComponentOutOfRange { line: usize, key: String, n: usize },
    #[error("line {line}, column {column} (in {key}): {source}")]
    Expression { line: usize, column: usize, key: String, source: ParseError },
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Field {
    A,
    B,
}

struct Entry<'a> {
    line: usize,
    // byte offset of `text` within its line
    offset: usize,
    key: &'a str,
    text: &'a str,
}

fn split_key(key: &str) -> Option<(Field, usize)> {
    let field = match key.chars().next()? {
        'a' => Field::A,
        'b' => Field::B,
        _ => return None,
    };
    let index: usize = key[1..].parse().ok()?;
    (index >= 1 && key[1..].chars().all(|c| c.is_ascii_digit())).then_some((field, index))
}

pub fn parse_system(source: &str) -> Result<ControlSystem, InputError> {
    let mut dimension = None;
    let mut entries: BTreeMap<(Field, usize), Entry> = BTreeMap::new();
    for (number, raw) in source.lines().enumerate() {
        let line = number + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let eq = content.find('=').ok_or(InputError::MissingEquals { line })?;
        let key = content[..eq].trim();
        let text = &content[eq + 1..];
        if key == "n" {
            if dimension.is_some() {
                return Err(InputError::Duplicate { line, key: key.into() });
            }
            let value = text.trim();
            match value.parse::<usize>() {
                Ok(n) if (1..=MAX_DIMENSION).contains(&n) => dimension = Some(n),
                _ => return Err(InputError::BadDimension { line, value: value.into() }),
            }
            continue;
        }
        let slot = split_key(key).ok_or_else(|| InputError::UnknownKey { line, key: key.into() })?;
        let entry = Entry { line, offset: eq + 1, key, text };
        if entries.insert(slot, entry).is_some() {
            return Err(InputError::Duplicate { line, key: key.into() });
        }
    }
    let n = dimension.ok_or(InputError::MissingDimension)?;
    let mut a = vec![Expr::zero(); n];
    let mut b = vec![Expr::zero(); n];
    for ((field, index), entry) in entries {
        if index > n {
            return Err(InputError::ComponentOutOfRange { line: entry.line, key: entry.key.into(), n });
        }
        let expr = parse_expr(entry.text, n).map_err(|source| InputError::Expression {
            line: entry.line,
            column: entry.offset + source.position() + 1,
            key: entry.key.into(),
            source,
        })?;
        match field {
            Field::A => a[index - 1] = expr,
            Field::B => b[index - 1] = expr,
        }
    }
    Ok(ControlSystem::new(a, b)?)
}

pub fn read_system(path: &std::path::Path) -> Result<ControlSystem, InputError> {
    let text = std::fs::read_to_string(path).map_err(|source| InputError::Io { path: path.display().to_string(), source })?;
    parse_system(&text)
}
