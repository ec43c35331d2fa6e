//! Reader for the subset of GML used by common network collections:
//! a `graph [ ... ]` block with `directed`, `node [ id N ]` and
//! `edge [ source A target B value W ]` entries. Unknown keys are skipped.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::Graph;
use crate::error::{invalid, Error, Result};

pub fn load_gml(path: impl AsRef<Path>, weighted: bool) -> Result<Graph> {
    let text = fs::read_to_string(path)?;
    parse_gml(&text, weighted)
}

/// Parses GML text. Edge `value` entries become weights only when `weighted`.
pub fn parse_gml(text: &str, weighted: bool) -> Result<Graph> {
    let tokens = tokenize(text)?;
    let mut pos = 0;
    let root = parse_list(&tokens, &mut pos, None)?;

    let graph = root
        .iter()
        .find(|e| e.key == "graph")
        .ok_or_else(|| gml_err(0, "no `graph` block"))?;
    let entries = match &graph.value {
        Value::List(entries) => entries,
        _ => return Err(gml_err(graph.offset, "`graph` must be a bracketed list")),
    };

    let mut directed = false;
    let mut ids: HashMap<i64, usize> = HashMap::new();
    let mut names: Vec<String> = Vec::new();
    let mut edges = Vec::new();

    for entry in entries {
        match (entry.key.as_str(), &entry.value) {
            ("directed", Value::Number(x, _)) => directed = *x != 0.0,
            ("node", Value::List(fields)) => {
                let (id, offset) = integer_field(fields, "id", entry.offset)?;
                if ids.insert(id, names.len()).is_some() {
                    return Err(gml_err(offset, format!("duplicate node id {id}")));
                }
                names.push(id.to_string());
            }
            ("edge", Value::List(_)) => edges.push(entry),
            _ => {}
        }
    }

    let mut triples = Vec::with_capacity(edges.len());
    for entry in edges {
        let Value::List(fields) = &entry.value else {
            unreachable!()
        };
        let endpoint = |key: &str| -> Result<usize> {
            let (id, offset) = integer_field(fields, key, entry.offset)?;
            ids.get(&id)
                .copied()
                .ok_or_else(|| gml_err(offset, format!("edge {key} {id} is not a declared node")))
        };
        let source = endpoint("source")?;
        let target = endpoint("target")?;
        let mut weight = 1.0;
        if weighted {
            if let Some(field) = fields.iter().find(|f| f.key == "value") {
                match field.value {
                    Value::Number(w, _) => weight = w,
                    _ => return Err(gml_err(field.offset, "edge value must be numeric")),
                }
            }
        }
        if source == target {
            return Err(Error::Validation(format!(
                "self-loop on node {} at byte offset {}",
                names[source], entry.offset
            )));
        }
        triples.push((source, target, weight));
    }

    if triples.is_empty() {
        return invalid("GML graph contains no edges");
    }
    Ok(Graph::from_edges(names.len(), directed, triples)?
        .with_tokens(names)?
        .with_weighted(weighted))
}

fn gml_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Gml {
        offset,
        message: message.into(),
    }
}

#[derive(Debug)]
enum Token<'a> {
    Key(&'a str),
    Number(f64, &'a str),
    Str,
    Open,
    Close,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token<'_>)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
        } else if c == b'[' {
            out.push((i, Token::Open));
            i += 1;
        } else if c == b']' {
            out.push((i, Token::Close));
            i += 1;
        } else if c == b'"' {
            let start = i;
            i += 1;
            while i < bytes.len() && bytes[i] != b'"' {
                i += 1;
            }
            if i == bytes.len() {
                return Err(gml_err(start, "unterminated string"));
            }
            i += 1;
            out.push((start, Token::Str));
        } else {
            let start = i;
            while i < bytes.len() && !bytes[i].is_ascii_whitespace() && !b"[]\"".contains(&bytes[i]) {
                i += 1;
            }
            let word = &text[start..i];
            let first = word.as_bytes()[0];
            if first.is_ascii_alphabetic() || first == b'_' {
                out.push((start, Token::Key(word)));
            } else {
                let x = word
                    .parse::<f64>()
                    .map_err(|_| gml_err(start, format!("unexpected token `{word}`")))?;
                out.push((start, Token::Number(x, word)));
            }
        }
    }
    Ok(out)
}

#[derive(Debug)]
enum Value {
    Number(f64, String),
    Str,
    List(Vec<Entry>),
}

#[derive(Debug)]
struct Entry {
    key: String,
    offset: usize,
    value: Value,
}

/// Parses `key value` pairs until the matching `]` (or end of input at the top level).
fn parse_list(tokens: &[(usize, Token<'_>)], pos: &mut usize, open: Option<usize>) -> Result<Vec<Entry>> {
    let mut entries = Vec::new();
    loop {
        let Some((offset, token)) = tokens.get(*pos) else {
            return match open {
                Some(at) => Err(gml_err(at, "`[` is never closed")),
                None => Ok(entries),
            };
        };
        *pos += 1;
        let key = match token {
            Token::Key(k) => *k,
            Token::Close => {
                return match open {
                    Some(_) => Ok(entries),
                    None => Err(gml_err(*offset, "unmatched `]`")),
                }
            }
            _ => return Err(gml_err(*offset, "expected a key")),
        };
        let Some((value_offset, value)) = tokens.get(*pos) else {
            return Err(gml_err(*offset, format!("key `{key}` has no value")));
        };
        *pos += 1;
        let value = match value {
            Token::Number(x, raw) => Value::Number(*x, raw.to_string()),
            Token::Str => Value::Str,
            Token::Open => Value::List(parse_list(tokens, pos, Some(*value_offset))?),
            Token::Close => return Err(gml_err(*value_offset, format!("key `{key}` has no value"))),
            Token::Key(_) => return Err(gml_err(*value_offset, format!("key `{key}` is followed by another key"))),
        };
        entries.push(Entry {
            key: key.to_owned(),
            offset: *value_offset,
            value,
        });
    }
}

fn integer_field(fields: &[Entry], key: &str, block_offset: usize) -> Result<(i64, usize)> {
    let field = fields
        .iter()
        .find(|f| f.key == key)
        .ok_or_else(|| gml_err(block_offset, format!("missing `{key}`")))?;
    match &field.value {
        Value::Number(x, _) if x.fract() == 0.0 => Ok((*x as i64, field.offset)),
        Value::Number(_, raw) => Err(gml_err(field.offset, format!("`{key}` {raw} is not an integer"))),
        Value::Str | Value::List(_) => Err(gml_err(field.offset, format!("`{key}` must be a number"))),
    }
}
