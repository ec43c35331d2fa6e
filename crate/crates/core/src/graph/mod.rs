//! Compressed sparse graph storage, degree bookkeeping and file loaders.
//!
//! Rows are stored with sorted, unique column indices. Undirected graphs keep
//! every edge in both endpoint rows. Directed graphs keep the out-rows
//! (`i -> j` stored in row `i`) plus a transposed copy so in-neighbours can
//! be scanned without a search.

mod edgelist;
mod gml;

use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::error::{invalid, Result};

pub use edgelist::{load_edge_list, parse_edge_list};
pub use gml::{load_gml, parse_gml};

/// Compressed rows: `offsets[i]..offsets[i + 1]` indexes `targets`/`weights`.
#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct Rows {
    pub(crate) offsets: Vec<usize>,
    pub(crate) targets: Vec<usize>,
    pub(crate) weights: Vec<f64>,
}

impl Rows {
    fn from_sorted_map(n: usize, map: &BTreeMap<(usize, usize), f64>) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(i, _) in map.keys() {
            offsets[i + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut targets = Vec::with_capacity(map.len());
        let mut weights = Vec::with_capacity(map.len());
        for (&(_, j), &w) in map {
            targets.push(j);
            weights.push(w);
        }
        Rows {
            offsets,
            targets,
            weights,
        }
    }

    #[inline]
    pub(crate) fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.offsets[i]..self.offsets[i + 1];
        (&self.targets[range.clone()], &self.weights[range])
    }

    fn row_sums(&self) -> Vec<f64> {
        (0..self.offsets.len() - 1)
            .map(|i| self.row(i).1.iter().sum())
            .collect()
    }

    pub(crate) fn nnz(&self) -> usize {
        self.targets.len()
    }
}

/// An immutable, possibly directed and weighted, simple graph.
#[derive(Clone, Debug)]
pub struct Graph {
    directed: bool,
    weighted: bool,
    out_rows: Rows,
    /// Transposed rows; empty for undirected graphs.
    in_rows: Rows,
    out_degree: Vec<f64>,
    in_degree: Vec<f64>,
    total_weight: f64,
    tokens: Vec<String>,
}

impl Graph {
    /// Builds a graph over vertices `0..n` from `(source, target, weight)` triples.
    ///
    /// Self-loops, negative or non-finite weights and out-of-range endpoints
    /// are rejected. Repeated edges are merged by summing their weights; for
    /// undirected graphs `(i, j)` and `(j, i)` are the same edge.
    pub fn from_edges<I>(n: usize, directed: bool, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return invalid(format!("edge ({u}, {v}) references a vertex outside 0..{n}"));
            }
            if u == v {
                return invalid(format!("self-loop on vertex {u}"));
            }
            if !w.is_finite() || w < 0.0 {
                return invalid(format!("edge ({u}, {v}) has invalid weight {w}"));
            }
            let key = if directed || u < v { (u, v) } else { (v, u) };
            *merged.entry(key).or_insert(0.0) += w;
        }

        let (out_rows, in_rows) = if directed {
            let transposed: BTreeMap<(usize, usize), f64> =
                merged.iter().map(|(&(u, v), &w)| ((v, u), w)).collect();
            (
                Rows::from_sorted_map(n, &merged),
                Rows::from_sorted_map(n, &transposed),
            )
        } else {
            let mut both = merged.clone();
            for (&(u, v), &w) in &merged {
                both.insert((v, u), w);
            }
            (Rows::from_sorted_map(n, &both), Rows::default())
        };

        let out_degree = out_rows.row_sums();
        let (in_degree, total_weight) = if directed {
            let total = merged.values().sum();
            (in_rows.row_sums(), total)
        } else {
            let total = out_degree.iter().sum::<f64>() / 2.0;
            (out_degree.clone(), total)
        };

        Ok(Graph {
            directed,
            weighted: false,
            out_rows,
            in_rows,
            out_degree,
            in_degree,
            total_weight,
            tokens: (0..n).map(|i| i.to_string()).collect(),
        })
    }

    /// Replaces the default vertex names (`"0"`, `"1"`, ...) used in output files.
    pub fn with_tokens(mut self, tokens: Vec<String>) -> Result<Self> {
        if tokens.len() != self.n() {
            return invalid(format!(
                "{} vertex tokens supplied for {} vertices",
                tokens.len(),
                self.n()
            ));
        }
        self.tokens = tokens;
        Ok(self)
    }

    /// Marks whether edge weights came from input data; used when writing files.
    pub fn with_weighted(mut self, weighted: bool) -> Self {
        self.weighted = weighted;
        self
    }

    pub fn n(&self) -> usize {
        self.out_degree.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    /// Number of distinct edges (each undirected edge counted once).
    pub fn edge_count(&self) -> usize {
        if self.directed {
            self.out_rows.nnz()
        } else {
            self.out_rows.nnz() / 2
        }
    }

    /// `m`: half the weighted degree sum when undirected, the edge weight sum when directed.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn out_degree(&self) -> &[f64] {
        &self.out_degree
    }

    pub fn in_degree(&self) -> &[f64] {
        &self.in_degree
    }

    /// Out-neighbours of `i` with edge weights, sorted by neighbour index.
    pub fn neighbors(&self, i: usize) -> (&[usize], &[f64]) {
        self.out_rows.row(i)
    }

    /// In-neighbours of `i`. Same as [`Graph::neighbors`] for undirected graphs.
    pub fn in_neighbors(&self, i: usize) -> (&[usize], &[f64]) {
        if self.directed {
            self.in_rows.row(i)
        } else {
            self.out_rows.row(i)
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
    }

    /// Stored adjacency entries (twice the edge count when undirected).
    pub fn nnz(&self) -> usize {
        self.out_rows.nnz()
    }

    /// Iterates edges once each: `i < j` for undirected graphs, every arc for directed ones.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n()).flat_map(move |i| {
            let (targets, weights) = self.out_rows.row(i);
            targets
                .iter()
                .zip(weights)
                .filter(move |(&j, _)| self.directed || i < j)
                .map(move |(&j, &w)| (i, j, w))
        })
    }

    /// Writes the graph in the whitespace-separated edge-list format.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (i, j, w) in self.edges() {
            if self.weighted {
                writeln!(out, "{} {} {}", self.tokens[i], self.tokens[j], w)?;
            } else {
                writeln!(out, "{} {}", self.tokens[i], self.tokens[j])?;
            }
        }
        Ok(())
    }

    /// The subgraph on `subset`, keeping only edges with both endpoints inside.
    ///
    /// Local vertex `k` is `subset.ids()[k]`; degrees of the result are the
    /// internal ones.
    pub fn induced_subgraph(&self, subset: &VertexSubset) -> Result<Graph> {
        if subset.universe() != self.n() {
            return invalid(format!(
                "subset was built for {} vertices, graph has {}",
                subset.universe(),
                self.n()
            ));
        }
        let ids = subset.ids();
        let mut edges = Vec::new();
        for (local, &global) in ids.iter().enumerate() {
            let (targets, weights) = self.out_rows.row(global);
            for (&t, &w) in targets.iter().zip(weights) {
                if !self.directed && t < global {
                    continue;
                }
                if let Some(other) = subset.local_index(t) {
                    edges.push((local, other, w));
                }
            }
        }
        let tokens = ids.iter().map(|&g| self.tokens[g].clone()).collect();
        Ok(Graph::from_edges(ids.len(), self.directed, edges)?
            .with_tokens(tokens)?
            .with_weighted(self.weighted))
    }
}

/// A sorted set of vertices of some graph, used as the scope of a recursive split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexSubset {
    ids: Vec<usize>,
    universe: usize,
}

impl VertexSubset {
    /// Sorts `ids`; errors on duplicates or indices `>= n`.
    pub fn new(mut ids: Vec<usize>, n: usize) -> Result<Self> {
        ids.sort_unstable();
        if let Some(&last) = ids.last() {
            if last >= n {
                return invalid(format!("vertex {last} out of range for {n} vertices"));
            }
        }
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return invalid(format!("vertex {} listed twice", w[0]));
        }
        Ok(VertexSubset { ids, universe: n })
    }

    pub fn all(n: usize) -> Self {
        VertexSubset {
            ids: (0..n).collect(),
            universe: n,
        }
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Vertex count of the graph the subset refers to.
    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn is_whole(&self) -> bool {
        self.ids.len() == self.universe
    }

    pub fn local_index(&self, global: usize) -> Option<usize> {
        self.ids.binary_search(&global).ok()
    }
}
