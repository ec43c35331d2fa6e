//! Planted-partition graphs with a prescribed mixing parameter.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::partition::Partition;

const MAX_CONSECUTIVE_REJECTIONS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub n: usize,
    /// Number of communities; sizes differ by at most one.
    pub k: usize,
    pub avg_degree: f64,
    pub max_degree: usize,
    /// Expected fraction of edges joining different communities.
    pub mixing: f64,
    pub seed: u64,
}

impl PlantedConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Generation(msg));
        if self.k == 0 || self.n < self.k {
            return fail(format!("need n >= k >= 1, got n={} k={}", self.n, self.k));
        }
        if !(0.0..=1.0).contains(&self.mixing) {
            return fail(format!("mixing {} outside [0, 1]", self.mixing));
        }
        if !(self.avg_degree > 0.0) || !self.avg_degree.is_finite() {
            return fail(format!("average degree {} must be positive", self.avg_degree));
        }
        if (self.max_degree as f64) < self.avg_degree {
            return fail(format!(
                "max degree {} below average degree {}",
                self.max_degree, self.avg_degree
            ));
        }
        let smallest = self.n / self.k;
        if (1.0 - self.mixing) * self.avg_degree > (smallest - 1) as f64 {
            return fail(format!(
                "intra-community degree {} does not fit in communities of {smallest}",
                (1.0 - self.mixing) * self.avg_degree
            ));
        }
        if self.k == 1 && self.mixing > 0.0 {
            return fail("a single community cannot have inter-community edges".into());
        }
        let largest = smallest + usize::from(self.n % self.k != 0);
        if self.mixing > 0.0 && self.mixing * self.avg_degree > (self.n - largest) as f64 {
            return fail("inter-community degree exceeds the vertices outside a community".into());
        }
        Ok(())
    }

    pub fn edge_count(&self) -> usize {
        (self.n as f64 * self.avg_degree / 2.0).ceil() as usize
    }
}

#[derive(Clone, Debug)]
pub struct PlantedGraph {
    pub graph: Graph,
    pub truth: Partition,
    /// Fraction of generated edges that join different communities.
    pub realized_mixing: f64,
}

pub fn generate(cfg: &PlantedConfig) -> Result<PlantedGraph> {
    cfg.validate()?;
    let (n, k) = (cfg.n, cfg.k);
    let mut starts = Vec::with_capacity(k + 1);
    let mut at = 0;
    for c in 0..k {
        starts.push(at);
        at += n / k + usize::from(c < n % k);
    }
    starts.push(n);
    let labels: Vec<usize> = (0..k).flat_map(|c| std::iter::repeat(c).take(starts[c + 1] - starts[c])).collect();

    let target = cfg.edge_count();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut degree = vec![0usize; n];
    let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(target);
    let mut edges = Vec::with_capacity(target);
    let mut crossing = 0;
    let mut rejections = 0;

    while edges.len() < target {
        let inter = rng.gen::<f64>() < cfg.mixing;
        let (u, v) = if inter {
            let u = rng.gen_range(0..n);
            let c = labels[u];
            let size = starts[c + 1] - starts[c];
            let mut v = rng.gen_range(0..n - size);
            if v >= starts[c] {
                v += size;
            }
            (u, v)
        } else {
            let c = rng.gen_range(0..k);
            let (lo, hi) = (starts[c], starts[c + 1]);
            (rng.gen_range(lo..hi), rng.gen_range(lo..hi))
        };
        let key = (u.min(v), u.max(v));
        if u == v || degree[u] >= cfg.max_degree || degree[v] >= cfg.max_degree || seen.contains(&key) {
            rejections += 1;
            if rejections > MAX_CONSECUTIVE_REJECTIONS {
                return Err(Error::Generation(format!(
                    "stalled after {} of {target} edges",
                    edges.len()
                )));
            }
            continue;
        }
        rejections = 0;
        seen.insert(key);
        degree[u] += 1;
        degree[v] += 1;
        crossing += usize::from(inter);
        edges.push((key.0, key.1, 1.0));
    }

    let graph = Graph::from_edges(n, false, edges)?;
    Ok(PlantedGraph {
        graph,
        truth: Partition::from_labels(&labels),
        realized_mixing: crossing as f64 / target as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, k: usize, mixing: f64) -> PlantedConfig {
        PlantedConfig {
            n,
            k,
            avg_degree: 4.0,
            max_degree: 10,
            mixing,
            seed: 3,
        }
    }

    #[test]
    fn zero_mixing_has_no_crossing_edges() {
        let p = generate(&cfg(20, 2, 0.0)).unwrap();
        assert_eq!(p.realized_mixing, 0.0);
        for (u, v, _) in p.graph.edges() {
            assert_eq!(p.truth.labels()[u], p.truth.labels()[v]);
        }
        assert_eq!(p.graph.edge_count(), 40);
    }

    #[test]
    fn balanced_sizes_with_remainder_first() {
        let p = generate(&cfg(23, 4, 0.2)).unwrap();
        let sizes: Vec<usize> = p.truth.communities().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![6, 6, 6, 5]);
    }

    #[test]
    fn degree_bound_respected() {
        let p = generate(&cfg(200, 5, 0.3)).unwrap();
        assert!(p.graph.out_degree().iter().all(|&d| d <= 10.0));
    }

    #[test]
    fn infeasible_configs() {
        assert!(generate(&cfg(20, 10, 0.0)).is_err());
        assert!(generate(&cfg(20, 1, 0.5)).is_err());
        assert!(generate(&cfg(5, 6, 0.1)).is_err());
        assert!(generate(&PlantedConfig { max_degree: 3, ..cfg(20, 2, 0.1) }).is_err());
        assert!(generate(&cfg(20, 2, 1.5)).is_err());
    }

    #[test]
    fn deterministic() {
        let a = generate(&cfg(100, 4, 0.3)).unwrap();
        let b = generate(&cfg(100, 4, 0.3)).unwrap();
        assert_eq!(a.graph.edges().collect::<Vec<_>>(), b.graph.edges().collect::<Vec<_>>());
    }
}
