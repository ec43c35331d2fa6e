//! Implicit modularity matrices and modularity scoring.
//!
//! The modularity matrix `B = A - d dᵀ / 2m` is dense, so it is never built.
//! [`ModularityOperator`] applies it as a sparse product plus a rank-one
//! (rank-two for directed graphs) correction, optionally restricted to a
//! vertex group with the generalized diagonal term used for recursive splits.

use std::borrow::Cow;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::graph::{Graph, VertexSubset};
use crate::par::{self, CHUNK};

/// A symmetric linear map on `R^dim`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = Op · x`. Both slices have length `dim()`.
    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    /// True when the all-ones vector is known to be an eigenvector.
    fn ones_is_eigenvector(&self) -> bool {
        false
    }
}

/// `inner + shift · I`.
pub struct Shifted<'a, O: ?Sized> {
    inner: &'a O,
    shift: f64,
}

impl<'a, O: LinearOperator + ?Sized> Shifted<'a, O> {
    pub fn new(inner: &'a O, shift: f64) -> Self {
        Shifted { inner, shift }
    }
}

impl<O: LinearOperator + ?Sized> LinearOperator for Shifted<'_, O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.inner.apply_into(x, y);
        let s = self.shift;
        if y.len() <= CHUNK {
            y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += s * xi);
        } else {
            y.par_chunks_mut(CHUNK)
                .zip(x.par_chunks(CHUNK))
                .for_each(|(yc, xc)| yc.iter_mut().zip(xc).for_each(|(yi, xi)| *yi += s * xi));
        }
    }

    fn ones_is_eigenvector(&self) -> bool {
        self.inner.ones_is_eigenvector()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Undirected,
    /// `(B + Bᵀ) / 2` of the directed modularity matrix.
    DirectedSymmetrized,
}

/// Counts operator applications; shared by every operator of one run.
#[derive(Debug, Default)]
pub struct WorkCounter {
    matvecs: AtomicU64,
    entries: AtomicU64,
}

impl WorkCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn matvecs(&self) -> u64 {
        self.matvecs.load(Ordering::Relaxed)
    }

    /// Rows plus stored adjacency entries touched, summed over all applications.
    pub fn entries(&self) -> u64 {
        self.entries.load(Ordering::Relaxed)
    }

    fn record(&self, entries: usize) {
        self.matvecs.fetch_add(1, Ordering::Relaxed);
        self.entries.fetch_add(entries as u64, Ordering::Relaxed);
    }
}

/// The modularity matrix of a graph, or of one vertex group of it.
///
/// For a group `g` the operator realizes the generalized matrix
/// `B⁽ᵍ⁾ᵢⱼ = Bᵢⱼ - δᵢⱼ Σ_{k∈g} Bᵢₖ`, with `B` built from the degrees and
/// total weight of the *whole* graph, so that `sᵀB⁽ᵍ⁾s` prices the split
/// of `g` exactly.
#[derive(Clone)]
pub struct ModularityOperator<'g> {
    mode: Mode,
    adjacency: Cow<'g, Graph>,
    out_degree: Cow<'g, [f64]>,
    in_degree: Cow<'g, [f64]>,
    /// Twice the total weight `m` of the whole graph.
    two_m: f64,
    /// Generalized-modularity diagonal; `None` for the whole graph.
    diagonal: Option<Vec<f64>>,
    shift: f64,
    whole: bool,
    counter: Option<&'g WorkCounter>,
}

impl<'g> ModularityOperator<'g> {
    /// Operator over every vertex of `graph`.
    pub fn new(graph: &'g Graph) -> Result<Self> {
        let m = graph.total_weight();
        if !(m > 0.0) {
            return invalid("modularity is undefined for a graph without edge weight");
        }
        Ok(ModularityOperator {
            mode: mode_of(graph),
            adjacency: Cow::Borrowed(graph),
            out_degree: Cow::Borrowed(graph.out_degree()),
            in_degree: Cow::Borrowed(graph.in_degree()),
            two_m: 2.0 * m,
            diagonal: None,
            shift: 0.0,
            whole: true,
            counter: None,
        })
    }

    /// Generalized operator of the group `subset`, priced against the whole graph.
    pub fn for_subset(graph: &'g Graph, subset: &VertexSubset) -> Result<Self> {
        if subset.is_whole() && subset.universe() == graph.n() {
            return Self::new(graph);
        }
        let m = graph.total_weight();
        if !(m > 0.0) {
            return invalid("modularity is undefined for a graph without edge weight");
        }
        let local = graph.induced_subgraph(subset)?;
        let ids = subset.ids();
        let out_degree: Vec<f64> = ids.iter().map(|&i| graph.out_degree()[i]).collect();
        let in_degree: Vec<f64> = ids.iter().map(|&i| graph.in_degree()[i]).collect();
        let two_m = 2.0 * m;

        let group_out: f64 = out_degree.iter().sum();
        let group_in: f64 = in_degree.iter().sum();
        let mode = mode_of(graph);
        let diagonal = (0..ids.len())
            .map(|i| {
                let row_sum = match mode {
                    Mode::Undirected => local.out_degree()[i] - out_degree[i] * group_out / two_m,
                    Mode::DirectedSymmetrized => {
                        0.5 * (local.out_degree()[i] + local.in_degree()[i])
                            - (in_degree[i] * group_out + out_degree[i] * group_in) / two_m
                    }
                };
                -row_sum
            })
            .collect();

        Ok(ModularityOperator {
            mode,
            adjacency: Cow::Owned(local),
            out_degree: Cow::Owned(out_degree),
            in_degree: Cow::Owned(in_degree),
            two_m,
            diagonal: Some(diagonal),
            shift: 0.0,
            whole: false,
            counter: None,
        })
    }

    /// Principal submatrix on the scope-local indices `locals` (sorted, distinct).
    ///
    /// The result keeps this operator's diagonal terms and shift; it is no
    /// longer a modularity matrix of its own scope, only a block of this one.
    pub fn restrict(&self, locals: &[usize]) -> Result<ModularityOperator<'g>> {
        let subset = VertexSubset::new(locals.to_vec(), self.dim())?;
        let local = self.adjacency.induced_subgraph(&subset)?;
        let pick = |v: &[f64]| -> Vec<f64> { subset.ids().iter().map(|&i| v[i]).collect() };
        let diagonal = Some(match &self.diagonal {
            Some(d) => pick(d),
            None => vec![0.0; subset.len()],
        });
        Ok(ModularityOperator {
            mode: self.mode,
            adjacency: Cow::Owned(local),
            out_degree: Cow::Owned(pick(&self.out_degree)),
            in_degree: Cow::Owned(pick(&self.in_degree)),
            two_m: self.two_m,
            diagonal,
            shift: self.shift,
            whole: false,
            counter: self.counter,
        })
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    pub fn with_counter(mut self, counter: &'g WorkCounter) -> Self {
        self.counter = Some(counter);
        self
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn is_whole_graph(&self) -> bool {
        self.whole
    }

    /// True when the operator is identically zero (a scope of isolated vertices).
    pub fn is_null(&self) -> bool {
        self.shift == 0.0
            && self.out_degree.iter().all(|&d| d == 0.0)
            && self.in_degree.iter().all(|&d| d == 0.0)
            && self.diagonal.as_ref().map_or(true, |d| d.iter().all(|&x| x == 0.0))
    }

    /// Factor turning `sᵀ Op s` into a modularity change: `1/4m`, or `1/2m` when directed.
    pub fn quality_scale(&self) -> f64 {
        match self.mode {
            Mode::Undirected => 1.0 / (2.0 * self.two_m),
            Mode::DirectedSymmetrized => 1.0 / self.two_m,
        }
    }

    /// Checked form of [`LinearOperator::apply_into`].
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return invalid(format!(
                "vector of length {} applied to operator of dimension {}",
                x.len(),
                self.dim()
            ));
        }
        let mut y = vec![0.0; x.len()];
        self.apply_into(x, &mut y);
        Ok(y)
    }

    /// `out += Σ coef · Op[:, col]` over `(col, coef)` pairs, without a full product.
    pub fn add_columns(&self, columns: &[(usize, f64)], out: &mut [f64]) {
        let graph = self.adjacency.as_ref();
        let mut out_sum = 0.0;
        let mut in_sum = 0.0;
        for &(j, c) in columns {
            match self.mode {
                Mode::Undirected => {
                    let (targets, weights) = graph.neighbors(j);
                    for (&i, &w) in targets.iter().zip(weights) {
                        out[i] += c * w;
                    }
                }
                Mode::DirectedSymmetrized => {
                    for (targets, weights) in [graph.neighbors(j), graph.in_neighbors(j)] {
                        for (&i, &w) in targets.iter().zip(weights) {
                            out[i] += 0.5 * c * w;
                        }
                    }
                }
            }
            out[j] += c * (self.diagonal_at(j) + self.shift);
            out_sum += c * self.out_degree[j];
            in_sum += c * self.in_degree[j];
        }
        match self.mode {
            Mode::Undirected => {
                let coef = out_sum / self.two_m;
                for (o, d) in out.iter_mut().zip(self.out_degree.iter()) {
                    *o -= d * coef;
                }
            }
            Mode::DirectedSymmetrized => {
                for i in 0..out.len() {
                    out[i] -= (self.in_degree[i] * out_sum + self.out_degree[i] * in_sum) / self.two_m;
                }
            }
        }
    }

    /// Modularity change from splitting the scope along the signs of `s`.
    ///
    /// Uses `sᵀ B s` without the diagonal shift.
    pub fn bisection_delta_q(&self, s: &[i8]) -> Result<f64> {
        if s.len() != self.dim() {
            return invalid(format!("sign vector of length {} for scope of {}", s.len(), self.dim()));
        }
        if let Some(bad) = s.iter().find(|&&x| x != 1 && x != -1) {
            return invalid(format!("sign vector entry {bad} is not ±1"));
        }
        let x: Vec<f64> = s.iter().map(|&v| f64::from(v)).collect();
        let y = self.apply(&x)?;
        let quad = par::dot(&x, &y) - self.shift * x.len() as f64;
        Ok(quad * self.quality_scale())
    }

    #[inline]
    fn diagonal_at(&self, i: usize) -> f64 {
        self.diagonal.as_ref().map_or(0.0, |d| d[i])
    }

    fn row_value(&self, i: usize, x: &[f64], out_dot: f64, in_dot: f64) -> f64 {
        let graph = self.adjacency.as_ref();
        let mut acc = match self.mode {
            Mode::Undirected => {
                let (targets, weights) = graph.neighbors(i);
                let sparse: f64 = targets.iter().zip(weights).map(|(&j, &w)| w * x[j]).sum();
                sparse - self.out_degree[i] * out_dot / self.two_m
            }
            Mode::DirectedSymmetrized => {
                let (ot, ow) = graph.neighbors(i);
                let (it, iw) = graph.in_neighbors(i);
                let row: f64 = ot.iter().zip(ow).map(|(&j, &w)| w * x[j]).sum();
                let col: f64 = it.iter().zip(iw).map(|(&j, &w)| w * x[j]).sum();
                0.5 * (row + col)
                    - (self.in_degree[i] * out_dot + self.out_degree[i] * in_dot) / self.two_m
            }
        };
        acc += (self.diagonal_at(i) + self.shift) * x[i];
        acc
    }
}

impl LinearOperator for ModularityOperator<'_> {
    fn dim(&self) -> usize {
        self.out_degree.len()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        let out_dot = par::dot(&self.out_degree, x);
        let in_dot = match self.mode {
            Mode::Undirected => out_dot,
            Mode::DirectedSymmetrized => par::dot(&self.in_degree, x),
        };
        if y.len() <= CHUNK {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.row_value(i, x, out_dot, in_dot);
            }
        } else {
            y.par_chunks_mut(CHUNK).enumerate().for_each(|(c, ys)| {
                let base = c * CHUNK;
                for (k, yi) in ys.iter_mut().enumerate() {
                    *yi = self.row_value(base + k, x, out_dot, in_dot);
                }
            });
        }
        if let Some(counter) = self.counter {
            let stored = match self.mode {
                Mode::Undirected => self.adjacency.nnz(),
                Mode::DirectedSymmetrized => 2 * self.adjacency.nnz(),
            };
            counter.record(self.dim() + stored);
        }
    }

    fn ones_is_eigenvector(&self) -> bool {
        self.whole
    }
}

fn mode_of(graph: &Graph) -> Mode {
    if graph.is_directed() {
        Mode::DirectedSymmetrized
    } else {
        Mode::Undirected
    }
}

/// Modularity of a labelled partition together with each community's share.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionScore {
    pub q: f64,
    /// In order of each community's first vertex.
    pub per_community_contribution: Vec<f64>,
}

/// Exact modularity of `labels` (one arbitrary community id per vertex) in `O(n + m)`.
pub fn modularity(graph: &Graph, labels: &[usize]) -> Result<PartitionScore> {
    if labels.len() != graph.n() {
        return invalid(format!("{} labels for {} vertices", labels.len(), graph.n()));
    }
    let m = graph.total_weight();
    if !(m > 0.0) {
        return invalid("modularity is undefined for a graph without edge weight");
    }
    let mut dense: HashMap<usize, usize> = HashMap::new();
    let community: Vec<usize> = labels
        .iter()
        .map(|&l| {
            let next = dense.len();
            *dense.entry(l).or_insert(next)
        })
        .collect();
    let k = dense.len();

    let mut internal = vec![0.0; k];
    let mut out_sum = vec![0.0; k];
    let mut in_sum = vec![0.0; k];
    for i in 0..graph.n() {
        let c = community[i];
        let (targets, weights) = graph.neighbors(i);
        for (&j, &w) in targets.iter().zip(weights) {
            if community[j] == c {
                internal[c] += w;
            }
        }
        out_sum[c] += graph.out_degree()[i];
        in_sum[c] += graph.in_degree()[i];
    }

    let contributions: Vec<f64> = (0..k)
        .map(|c| {
            if graph.is_directed() {
                internal[c] / m - in_sum[c] * out_sum[c] / (m * m)
            } else {
                let two_m = 2.0 * m;
                internal[c] / two_m - (out_sum[c] / two_m).powi(2)
            }
        })
        .collect();
    let q = contributions.iter().sum();
    Ok(PartitionScore {
        q,
        per_community_contribution: contributions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        Graph::from_edges(3, false, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap()
    }

    fn bridged_triangles() -> Graph {
        Graph::from_edges(
            6,
            false,
            [
                (0, 1, 1.0),
                (1, 2, 1.0),
                (2, 0, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (5, 3, 1.0),
                (2, 3, 1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn ones_map_to_zero() {
        let g = bridged_triangles();
        let op = ModularityOperator::new(&g).unwrap();
        let y = op.apply(&[1.0; 6]).unwrap();
        assert!(y.iter().all(|v| v.abs() <= 1e-10));
        assert!(op.ones_is_eigenvector());
    }

    #[test]
    fn triangle_matches_entries() {
        // b_ij = a_ij - 4/6 for the triangle.
        let g = triangle();
        let op = ModularityOperator::new(&g).unwrap();
        let y = op.apply(&[1.0, -1.0, 0.0]).unwrap();
        let b = |i: usize, j: usize| f64::from(u8::from(i != j)) - 4.0 / 6.0;
        for (i, &yi) in y.iter().enumerate() {
            let expect = b(i, 0) - b(i, 1);
            assert!((yi - expect).abs() < 1e-12, "{i}: {yi} vs {expect}");
        }
    }

    #[test]
    fn shift_is_linear() {
        let g = bridged_triangles();
        let x = [0.3, -1.2, 0.5, 2.0, -0.1, 0.7];
        let base = ModularityOperator::new(&g).unwrap().apply(&x).unwrap();
        let shifted = ModularityOperator::new(&g).unwrap().with_shift(2.5).apply(&x).unwrap();
        for i in 0..6 {
            assert!((shifted[i] - (base[i] + 2.5 * x[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let g = triangle();
        let op = ModularityOperator::new(&g).unwrap();
        assert!(op.apply(&[1.0, 2.0]).is_err());
        assert!(op.bisection_delta_q(&[1, 1]).is_err());
        assert!(op.bisection_delta_q(&[1, 0, -1]).is_err());
    }

    #[test]
    fn no_split_has_no_gain() {
        let g = bridged_triangles();
        let op = ModularityOperator::new(&g).unwrap();
        assert!(op.bisection_delta_q(&[1; 6]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn split_gain_equals_modularity() {
        let g = bridged_triangles();
        let op = ModularityOperator::new(&g).unwrap();
        let dq = op.bisection_delta_q(&[1, 1, 1, -1, -1, -1]).unwrap();
        let q = modularity(&g, &[0, 0, 0, 1, 1, 1]).unwrap().q;
        assert!((dq - q).abs() < 1e-12);
        // 2 * (6/14 - (7/14)^2)
        assert!((q - 5.0 / 14.0).abs() < 1e-12);
    }

    #[test]
    fn group_gain_prices_the_split_exactly() {
        let g = bridged_triangles();
        let group = VertexSubset::new(vec![0, 1, 2, 3], 6).unwrap();
        let op = ModularityOperator::for_subset(&g, &group).unwrap();
        assert!(!op.ones_is_eigenvector());
        let before = modularity(&g, &[0, 0, 0, 0, 1, 1]).unwrap().q;
        let after = modularity(&g, &[0, 0, 2, 2, 1, 1]).unwrap().q;
        let dq = op.bisection_delta_q(&[1, 1, -1, -1]).unwrap();
        assert!((dq - (after - before)).abs() < 1e-12);
        // The generalized matrix still has zero row sums.
        let y = op.apply(&[1.0; 4]).unwrap();
        assert!(y.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn directed_gain_matches_directed_modularity() {
        let g = Graph::from_edges(
            5,
            true,
            [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0), (3, 4, 1.0), (4, 3, 1.0), (2, 3, 1.0)],
        )
        .unwrap();
        let op = ModularityOperator::new(&g).unwrap();
        let dq = op.bisection_delta_q(&[1, 1, 1, -1, -1]).unwrap();
        let q = modularity(&g, &[0, 0, 0, 1, 1]).unwrap().q;
        assert!((dq - q).abs() < 1e-12);
    }

    #[test]
    fn restriction_is_a_principal_block() {
        let g = bridged_triangles();
        let op = ModularityOperator::new(&g).unwrap().with_shift(0.25);
        let block = op.restrict(&[1, 2, 4]).unwrap();
        let x = [0.2, -0.7, 1.3];
        let y = block.apply(&x).unwrap();
        let mut full = [0.0; 6];
        full[1] = x[0];
        full[2] = x[1];
        full[4] = x[2];
        let yf = op.apply(&full).unwrap();
        for (k, &i) in [1, 2, 4].iter().enumerate() {
            assert!((y[k] - yf[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn add_columns_matches_product() {
        let g = Graph::from_edges(4, true, [(0, 1, 1.0), (1, 2, 2.0), (3, 0, 1.0), (2, 3, 0.5)]).unwrap();
        let group = VertexSubset::new(vec![0, 1, 3], 4).unwrap();
        let op = ModularityOperator::for_subset(&g, &group).unwrap();
        let mut acc = vec![0.0; 3];
        op.add_columns(&[(0, 1.0), (2, -1.0)], &mut acc);
        let direct = op.apply(&[1.0, 0.0, -1.0]).unwrap();
        for i in 0..3 {
            assert!((acc[i] - direct[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn single_community_scores_zero() {
        let g = bridged_triangles();
        let s = modularity(&g, &[4; 6]).unwrap();
        assert!(s.q.abs() < 1e-15);
        assert_eq!(s.per_community_contribution.len(), 1);
    }

    #[test]
    fn label_length_checked() {
        assert!(modularity(&triangle(), &[0, 1]).is_err());
    }

    #[test]
    fn counter_tracks_work() {
        let g = triangle();
        let counter = WorkCounter::new();
        let op = ModularityOperator::new(&g).unwrap().with_counter(&counter);
        op.apply(&[1.0, 0.0, 0.0]).unwrap();
        op.apply(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(counter.matvecs(), 2);
        assert_eq!(counter.entries(), 2 * (3 + 6));
    }
}
