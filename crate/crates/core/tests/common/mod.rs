#![allow(dead_code)]

use std::path::PathBuf;

use modsplit::{Graph, LinearOperator};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn karate() -> Graph {
    modsplit::load_gml(data("karate.gml"), false).unwrap()
}

/// Dense weights `w[i][j]` of arc `i → j` (both directions when undirected),
/// rebuilt from the edge iterator rather than the adjacency rows.
pub fn dense_adjacency(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut a = DMatrix::zeros(n, n);
    for (i, j, w) in g.edges() {
        a[(i, j)] += w;
        if !g.is_directed() {
            a[(j, i)] += w;
        }
    }
    a
}

/// Symmetric modularity matrix, entry by entry from its definition.
pub fn dense_b(g: &Graph) -> DMatrix<f64> {
    let a = dense_adjacency(g);
    let n = g.n();
    let out: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    let inn: Vec<f64> = (0..n).map(|j| a.column(j).sum()).collect();
    if g.is_directed() {
        let m: f64 = out.iter().sum();
        DMatrix::from_fn(n, n, |i, j| {
            let bij = a[(j, i)] - inn[i] * out[j] / m;
            let bji = a[(i, j)] - inn[j] * out[i] / m;
            (bij + bji) / 2.0
        })
    } else {
        let two_m: f64 = out.iter().sum();
        DMatrix::from_fn(n, n, |i, j| a[(i, j)] - out[i] * out[j] / two_m)
    }
}

/// Generalized matrix of a group: `B_ij - δ_ij Σ_{k∈g} B_ik`, restricted to `group`.
pub fn dense_group_b(g: &Graph, group: &[usize]) -> DMatrix<f64> {
    let b = dense_b(g);
    let k = group.len();
    DMatrix::from_fn(k, k, |x, y| {
        let (i, j) = (group[x], group[y]);
        let mut v = b[(i, j)];
        if x == y {
            v -= group.iter().map(|&l| b[(i, l)]).sum::<f64>();
        }
        v
    })
}

/// `Q` as the plain double sum over all vertex pairs.
pub fn double_sum_q(g: &Graph, labels: &[usize]) -> f64 {
    let a = dense_adjacency(g);
    let n = g.n();
    let out: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    let inn: Vec<f64> = (0..n).map(|j| a.column(j).sum()).collect();
    let mut q = 0.0;
    if g.is_directed() {
        let m: f64 = out.iter().sum();
        for i in 0..n {
            for j in 0..n {
                if labels[i] == labels[j] {
                    q += a[(j, i)] - inn[i] * out[j] / m;
                }
            }
        }
        q / m
    } else {
        let two_m: f64 = out.iter().sum();
        for i in 0..n {
            for j in 0..n {
                if labels[i] == labels[j] {
                    q += a[(i, j)] - out[i] * out[j] / two_m;
                }
            }
        }
        q / two_m
    }
}

pub fn two_m(g: &Graph) -> f64 {
    dense_adjacency(g).sum() * if g.is_directed() { 2.0 } else { 1.0 }
}

pub fn largest_eigenvalue(b: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(b.clone()).eigenvalues.max()
}

pub fn leading_pair(b: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let eig = SymmetricEigen::new(b.clone());
    let idx = eig.eigenvalues.imax();
    (eig.eigenvalues[idx], eig.eigenvectors.column(idx).into_owned())
}

pub fn apply_dense(b: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (b * DVector::from_column_slice(x)).as_slice().to_vec()
}

/// Best `sᵀBs` scaled to a modularity gain over every ±1 vector.
pub fn best_bipartition(b: &DMatrix<f64>, scale: f64) -> (f64, Vec<i8>) {
    let n = b.nrows();
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for mask in 0u64..(1 << (n - 1)) {
        let s: Vec<f64> = (0..n).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
        let v = DVector::from_vec(s.clone());
        let q = (v.transpose() * b * &v)[(0, 0)] * scale;
        if q > best.0 {
            best = (q, s.iter().map(|&x| x as i8).collect());
        }
    }
    best
}

/// Best modularity over every partition of the vertex set (restricted growth strings).
pub fn best_partition_q(g: &Graph) -> f64 {
    let n = g.n();
    let b = dense_b(g);
    let norm = if g.is_directed() { two_m(g) / 2.0 } else { two_m(g) };
    let mut labels = vec![0usize; n];
    let mut best = f64::NEG_INFINITY;
    fn rec(i: usize, max: usize, labels: &mut Vec<usize>, b: &DMatrix<f64>, norm: f64, best: &mut f64) {
        let n = labels.len();
        if i == n {
            let mut q = 0.0;
            for x in 0..n {
                for y in 0..n {
                    if labels[x] == labels[y] {
                        q += b[(x, y)];
                    }
                }
            }
            *best = best.max(q / norm);
            return;
        }
        for c in 0..=max + 1 {
            labels[i] = c;
            rec(i + 1, max.max(c), labels, b, norm, best);
        }
    }
    if n == 1 {
        return 0.0;
    }
    labels[0] = 0;
    rec(1, 0, &mut labels, &b, norm, &mut best);
    best
}

pub fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j, 1.0));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1, 1.0));
    }
    Graph::from_edges(n, false, edges).unwrap()
}

pub fn random_weighted_graph(n: usize, p: f64, directed: bool, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && (directed || i < j) && rng.gen::<f64>() < p {
                edges.push((i, j, rng.gen_range(0.5..3.0)));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1, 1.0));
    }
    Graph::from_edges(n, directed, edges).unwrap().with_weighted(true)
}

pub fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// One projected power method step on `max vᵀAv, ‖v‖ = r, Gv = c`, with
/// `A = [[F, b], [bᵀ, z]]`, `G = e_{k+1}ᵀ`, `c = 1`, `r = √(k+1)` and `v = [s; 1]`.
pub fn ppm_step(f: &DMatrix<f64>, b: &[f64], z: f64, s: &[f64]) -> Vec<f64> {
    let k = s.len();
    let mut a = DMatrix::zeros(k + 1, k + 1);
    a.view_mut((0, 0), (k, k)).copy_from(f);
    for i in 0..k {
        a[(i, k)] = b[i];
        a[(k, i)] = b[i];
    }
    a[(k, k)] = z;
    let mut g = DMatrix::zeros(1, k + 1);
    g[(0, k)] = 1.0;
    let ggt_inv = (&g * g.transpose()).try_inverse().unwrap();
    let p = DMatrix::identity(k + 1, k + 1) - g.transpose() * ggt_inv * &g;
    let mut w = DVector::zeros(k + 1);
    w[k] = 1.0;
    let r2 = (k + 1) as f64;

    let mut v = DVector::zeros(k + 1);
    v.rows_mut(0, k).copy_from_slice(s);
    v[k] = 1.0;
    let pav = &p * (&a * &v);
    let next = &pav / pav.norm() * (r2 - w.dot(&w)).sqrt() + &w;
    next.rows(0, k).iter().copied().collect()
}

/// A dense symmetric matrix as an operator.
pub struct DenseOp(pub DMatrix<f64>);

impl LinearOperator for DenseOp {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let r = &self.0 * DVector::from_column_slice(x);
        y.copy_from_slice(r.as_slice());
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
