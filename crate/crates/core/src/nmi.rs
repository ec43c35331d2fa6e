//! Normalized mutual information between two partitions.

use std::collections::HashMap;

use crate::error::{invalid, Result};
use crate::partition::Partition;

/// Joint community counts of two partitions of the same vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct ContingencyTable {
    /// Non-zero cells `((k, k'), n_kk')`, sorted by `(k, k')`.
    pub counts: Vec<((usize, usize), usize)>,
    pub row_sums: Vec<usize>,
    pub col_sums: Vec<usize>,
    pub n: usize,
}

impl ContingencyTable {
    pub fn rows(&self) -> usize {
        self.row_sums.len()
    }

    pub fn cols(&self) -> usize {
        self.col_sums.len()
    }
}

pub fn contingency(a: &Partition, b: &Partition) -> Result<ContingencyTable> {
    if a.len() != b.len() {
        return invalid(format!("partitions cover {} and {} vertices", a.len(), b.len()));
    }
    let mut cells: HashMap<(usize, usize), usize> = HashMap::new();
    let mut row_sums = vec![0; a.community_count()];
    let mut col_sums = vec![0; b.community_count()];
    for (&x, &y) in a.labels().iter().zip(b.labels()) {
        *cells.entry((x, y)).or_default() += 1;
        row_sums[x] += 1;
        col_sums[y] += 1;
    }
    let mut counts: Vec<_> = cells.into_iter().collect();
    counts.sort_unstable();
    Ok(ContingencyTable {
        counts,
        row_sums,
        col_sums,
        n: a.len(),
    })
}

/// NMI with natural logarithms. Two single-community partitions score 1.
pub fn nmi(a: &Partition, b: &Partition) -> Result<f64> {
    let table = contingency(a, b)?;
    if table.n == 0 {
        return invalid("partitions are empty");
    }
    if table.counts.len() == table.rows() && table.rows() == table.cols() {
        // One-to-one correspondence between communities.
        return Ok(1.0);
    }
    let n = table.n as f64;
    // Cell terms are sorted so both argument orders sum identically.
    let mut cell_terms: Vec<f64> = table
        .counts
        .iter()
        .map(|&((k, l), c)| {
            let c = c as f64;
            c * (c * n / (table.row_sums[k] as f64 * table.col_sums[l] as f64)).ln()
        })
        .collect();
    cell_terms.sort_by(f64::total_cmp);
    let numerator = -2.0 * cell_terms.iter().sum::<f64>();

    let entropy = |sums: &[usize]| -> f64 {
        let mut terms: Vec<f64> = sums.iter().map(|&s| s as f64 * (s as f64 / n).ln()).collect();
        terms.sort_by(f64::total_cmp);
        terms.iter().sum()
    };
    let denominator = entropy(&table.row_sums) + entropy(&table.col_sums);
    Ok((numerator / denominator).clamp(0.0, 1.0))
}
