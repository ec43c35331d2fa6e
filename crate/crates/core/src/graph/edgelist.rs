use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::Graph;
use crate::error::{invalid, Error, Result};

/// Reads a `src dst [weight]` edge list. See [`parse_edge_list`].
pub fn load_edge_list(path: impl AsRef<Path>, directed: bool, weighted: bool) -> Result<Graph> {
    let file = File::open(path)?;
    parse_edge_list(BufReader::new(file), directed, weighted)
}

/// Parses an edge list: one `src dst [weight]` per line, whitespace separated.
///
/// Lines starting with `#` or `%` are comments. Vertex tokens are arbitrary
/// strings, numbered densely in order of first appearance. A weight column
/// is validated whenever present but only used when `weighted` is set.
pub fn parse_edge_list<R: BufRead>(reader: R, directed: bool, weighted: bool) -> Result<Graph> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut edges = Vec::new();

    let mut intern = |token: &str| -> usize {
        if let Some(&i) = index.get(token) {
            return i;
        }
        let i = tokens.len();
        tokens.push(token.to_owned());
        index.insert(token.to_owned(), i);
        i
    };

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected `src dst [weight]`, found {} fields", fields.len()),
            });
        }
        let weight = match fields.get(2) {
            Some(raw) => raw.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("weight `{raw}` is not a number"),
            })?,
            None => 1.0,
        };
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::Validation(format!(
                "line {line_no}: edge weight {weight} must be finite and non-negative"
            )));
        }
        if fields[0] == fields[1] {
            return Err(Error::Validation(format!(
                "line {line_no}: self-loop on vertex `{}`",
                fields[0]
            )));
        }
        let u = intern(fields[0]);
        let v = intern(fields[1]);
        edges.push((u, v, if weighted { weight } else { 1.0 }));
    }

    if edges.is_empty() {
        return invalid("edge list contains no edges");
    }
    Ok(Graph::from_edges(tokens.len(), directed, edges)?
        .with_tokens(tokens)?
        .with_weighted(weighted))
}
