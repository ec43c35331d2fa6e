//! `token community` label files.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use modsplit::{Graph, Partition};

use crate::CliError;

/// Entries in file order. Community ids are arbitrary tokens.
pub struct LabelFile {
    pub entries: Vec<(String, String)>,
}

impl LabelFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut entries = Vec::new();
        let mut seen = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(CliError::invalid(format!(
                    "{}:{}: expected `token community`, found {} fields",
                    path.display(),
                    n + 1,
                    fields.len()
                )));
            }
            if seen.insert(fields[0].to_string(), n + 1).is_some() {
                return Err(CliError::invalid(format!(
                    "{}:{}: vertex {} listed twice",
                    path.display(),
                    n + 1,
                    fields[0]
                )));
            }
            entries.push((fields[0].to_string(), fields[1].to_string()));
        }
        Ok(LabelFile { entries })
    }

    /// Community index per vertex, in the order given by `tokens`. Every
    /// token must appear exactly once and nothing else may.
    pub fn labels_for<'a>(&self, tokens: impl ExactSizeIterator<Item = &'a str>, what: &str) -> Result<Vec<usize>, CliError> {
        let by_token: HashMap<&str, &str> = self.entries.iter().map(|(t, c)| (t.as_str(), c.as_str())).collect();
        let mut ids: HashMap<&str, usize> = HashMap::new();
        let expected = tokens.len();
        let mut labels = Vec::with_capacity(expected);
        for token in tokens {
            let Some(&community) = by_token.get(token) else {
                return Err(CliError::invalid(format!("vertex {token} of the {what} has no label")));
            };
            let next = ids.len();
            labels.push(*ids.entry(community).or_insert(next));
        }
        if self.entries.len() != expected {
            return Err(CliError::invalid(format!(
                "label file has {} vertices, the {what} has {expected}",
                self.entries.len()
            )));
        }
        Ok(labels)
    }

    pub fn partition(&self) -> Partition {
        let mut ids: HashMap<&str, usize> = HashMap::new();
        let labels: Vec<usize> = self
            .entries
            .iter()
            .map(|(_, c)| {
                let next = ids.len();
                *ids.entry(c.as_str()).or_insert(next)
            })
            .collect();
        Partition::from_labels(&labels)
    }
}

pub fn write(graph: &Graph, labels: &[usize], mut out: impl Write) -> io::Result<()> {
    for (i, &c) in labels.iter().enumerate() {
        writeln!(out, "{} {}", graph.token(i), c)?;
    }
    out.flush()
}
