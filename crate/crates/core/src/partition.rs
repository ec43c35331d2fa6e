//! Recursive bisection into communities.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{Graph, VertexSubset};
use crate::operator::{modularity, LinearOperator, ModularityOperator, WorkCounter};
use crate::spectral::{derive_seed, leading_eigenvector, sign_round};
use crate::ssr::{ssr_bipartition, SsrConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Successive spectral relaxation.
    Ssr,
    /// Sign rounding of the leading eigenvector.
    Spectral,
}

/// Community labels, dense from 0 in order of each community's first vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    labels: Vec<usize>,
    communities: Vec<Vec<usize>>,
    q: Option<f64>,
}

impl Partition {
    /// Canonicalizes arbitrary labels. No modularity is attached.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut dense: HashMap<usize, usize> = HashMap::new();
        let mut communities: Vec<Vec<usize>> = Vec::new();
        let labels = labels
            .iter()
            .enumerate()
            .map(|(v, &l)| {
                let c = *dense.entry(l).or_insert_with(|| {
                    communities.push(Vec::new());
                    communities.len() - 1
                });
                communities[c].push(v);
                c
            })
            .collect();
        Partition {
            labels,
            communities,
            q: None,
        }
    }

    /// Canonicalizes `labels` and scores them on `graph`.
    pub fn scored(graph: &Graph, labels: &[usize]) -> Result<Self> {
        let q = modularity(graph, labels)?.q;
        let mut p = Self::from_labels(labels);
        p.q = Some(q);
        Ok(p)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn communities(&self) -> &[Vec<usize>] {
        &self.communities
    }

    pub fn community_count(&self) -> usize {
        self.communities.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Modularity, when the partition was scored against a graph.
    pub fn q(&self) -> Option<f64> {
        self.q
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AcceptedSplit {
    /// Recursion depth of the group that was split (0 for the whole graph).
    pub depth: usize,
    pub group_size: usize,
    pub delta_q: f64,
}

#[derive(Clone, Debug)]
pub struct DetectReport {
    pub partition: Partition,
    /// Bisections attempted, accepted or not.
    pub bisection_count: usize,
    /// In acceptance order; their gains sum to the final modularity.
    pub splits: Vec<AcceptedSplit>,
    pub wall_time: Duration,
    pub matvecs: u64,
    /// Rows plus stored entries touched by all operator applications.
    pub work: u64,
}

impl DetectReport {
    pub fn q(&self) -> f64 {
        self.partition.q.unwrap_or(0.0)
    }
}

/// Divides `graph` by repeated bisection until no split raises modularity.
///
/// Runs on a pool of `cfg.threads` workers (0 for all cores). Sibling groups
/// are bisected concurrently; the result does not depend on the pool size.
pub fn detect(graph: &Graph, cfg: &SsrConfig, method: Method) -> Result<DetectReport> {
    cfg.validate()?;
    if graph.n() == 0 {
        return invalid("cannot detect communities in an empty graph");
    }
    if !(graph.total_weight() > 0.0) {
        return invalid("cannot detect communities in a graph without edge weight");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
    pool.install(|| detect_in_pool(graph, cfg, method))
}

struct Group {
    ids: Vec<usize>,
    depth: usize,
}

enum Outcome {
    Final,
    Split { a: Vec<usize>, b: Vec<usize>, delta_q: f64 },
}

fn detect_in_pool(graph: &Graph, cfg: &SsrConfig, method: Method) -> Result<DetectReport> {
    let started = Instant::now();
    let counter = WorkCounter::new();
    let mut queue = vec![Group {
        ids: (0..graph.n()).collect(),
        depth: 0,
    }];
    let mut finished: Vec<Vec<usize>> = Vec::new();
    let mut splits = Vec::new();
    let mut bisection_count = 0;

    while !queue.is_empty() {
        queue.sort_by(|a, b| b.ids.len().cmp(&a.ids.len()).then(a.ids[0].cmp(&b.ids[0])));
        let wave = std::mem::take(&mut queue);
        let outcomes: Vec<Result<Outcome>> = wave
            .par_iter()
            .map(|group| bisect_group(graph, &group.ids, cfg, method, &counter))
            .collect();
        for (group, outcome) in wave.into_iter().zip(outcomes) {
            if group.ids.len() >= 2 {
                bisection_count += 1;
            }
            match outcome? {
                Outcome::Final => finished.push(group.ids),
                Outcome::Split { a, b, delta_q } => {
                    splits.push(AcceptedSplit {
                        depth: group.depth,
                        group_size: group.ids.len(),
                        delta_q,
                    });
                    queue.push(Group { ids: a, depth: group.depth + 1 });
                    queue.push(Group { ids: b, depth: group.depth + 1 });
                }
            }
        }
    }

    let mut labels = vec![0; graph.n()];
    for (c, ids) in finished.iter().enumerate() {
        for &v in ids {
            labels[v] = c;
        }
    }
    let partition = Partition::scored(graph, &labels)?;
    Ok(DetectReport {
        partition,
        bisection_count,
        splits,
        wall_time: started.elapsed(),
        matvecs: counter.matvecs(),
        work: counter.entries(),
    })
}

fn bisect_group(
    graph: &Graph,
    ids: &[usize],
    cfg: &SsrConfig,
    method: Method,
    counter: &WorkCounter,
) -> Result<Outcome> {
    if ids.len() < 2 {
        return Ok(Outcome::Final);
    }
    let subset = VertexSubset::new(ids.to_vec(), graph.n())?;
    let op = ModularityOperator::for_subset(graph, &subset)?.with_counter(counter);
    let group_cfg = SsrConfig {
        seed: derive_seed(cfg.seed, ids[0] as u64, ids.len() as u64),
        ..*cfg
    };
    let signs = match method {
        Method::Ssr => ssr_bipartition(&op, &group_cfg)?.signs,
        Method::Spectral => method_conventional_bisect(&op, &group_cfg)?,
    };
    if signs.iter().all(|&s| s == signs[0]) {
        return Ok(Outcome::Final);
    }
    let delta_q = op.bisection_delta_q(&signs)?;
    if !(delta_q > cfg.gain_tol) {
        return Ok(Outcome::Final);
    }
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (&v, &s) in ids.iter().zip(&signs) {
        if s > 0 { a.push(v) } else { b.push(v) }
    }
    if b[0] < a[0] {
        std::mem::swap(&mut a, &mut b);
    }
    Ok(Outcome::Split { a, b, delta_q })
}

/// One bisection by the signs of the leading eigenvector.
pub fn method_conventional_bisect(op: &ModularityOperator<'_>, cfg: &SsrConfig) -> Result<Vec<i8>> {
    cfg.validate()?;
    if op.dim() < 2 {
        return invalid(format!("cannot bisect a scope of {} vertex", op.dim()));
    }
    if op.is_null() {
        return Ok(vec![1; op.dim()]);
    }
    Ok(sign_round(&leading_eigenvector(op, &cfg.power())?.vector))
}
