//! Power iteration, eigenvalue shifting and sign rounding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::operator::{LinearOperator, Shifted};
use crate::par;

const SHIFT_MARGIN: f64 = 1e-3;
const MAX_RESTARTS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    /// Stop once the unit iterate moves less than this (up to sign).
    pub tol: f64,
    /// `None` means `10·n + 1000`.
    pub max_iter: Option<usize>,
    pub seed: u64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            tol: 1e-7,
            max_iter: None,
            seed: 42,
        }
    }
}

impl PowerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return invalid(format!("power tolerance must be positive, got {}", self.tol));
        }
        if self.max_iter == Some(0) {
            return invalid("power iteration cap must be at least 1");
        }
        Ok(())
    }

    pub fn iteration_cap(&self, n: usize) -> usize {
        self.max_iter.unwrap_or(10 * n + 1000)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenEstimate {
    /// Unit norm.
    pub vector: Vec<f64>,
    /// `vᵀ Op v`.
    pub rayleigh: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Dominant-magnitude eigenpair of `op` by power iteration from a seeded random start.
pub fn power_iterate<O: LinearOperator + ?Sized>(op: &O, cfg: &PowerConfig) -> Result<EigenEstimate> {
    power_iterate_with(op, cfg, None, None)
}

/// [`power_iterate`] with an optional start vector and a per-iteration trace
/// of the Rayleigh quotient of each iterate.
pub fn power_iterate_with<O: LinearOperator + ?Sized>(
    op: &O,
    cfg: &PowerConfig,
    start: Option<&[f64]>,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<EigenEstimate> {
    cfg.validate()?;
    let n = op.dim();
    if n == 0 {
        return invalid("power iteration on an empty operator");
    }
    if let Some(s) = start {
        if s.len() != n {
            return invalid(format!("start vector of length {} for dimension {n}", s.len()));
        }
    }
    let cap = cfg.iteration_cap(n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut v = match start {
        Some(s) if par::norm(s) > 0.0 => s.to_vec(),
        _ => random_start(op, &mut rng),
    };
    normalize(&mut v);

    let mut y = vec![0.0; n];
    let mut restarts = 0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cap {
        op.apply_into(&v, &mut y);
        let norm = par::norm(&y);
        if !(norm > 0.0) || !norm.is_finite() {
            if restarts == MAX_RESTARTS {
                return Err(Error::Numerical(format!(
                    "operator maps {} start vectors to zero",
                    MAX_RESTARTS + 1
                )));
            }
            restarts += 1;
            v = random_start(op, &mut rng);
            normalize(&mut v);
            continue;
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(par::dot(&v, &y));
        }
        par::scale(&mut y, 1.0 / norm);
        let (minus, plus) = par::distance_pair(&y, &v);
        std::mem::swap(&mut v, &mut y);
        iterations += 1;
        if minus.min(plus) < cfg.tol {
            converged = true;
            break;
        }
    }

    op.apply_into(&v, &mut y);
    let rayleigh = par::dot(&v, &y);
    Ok(EigenEstimate {
        vector: v,
        rayleigh,
        iterations,
        converged,
    })
}

/// Eigenpair of the most positive eigenvalue.
///
/// When plain power iteration lands on a negative eigenvalue, the operator is
/// shifted by slightly more than its magnitude and iterated again; the
/// reported Rayleigh quotient is for the unshifted operator.
pub fn leading_eigenvector<O: LinearOperator + ?Sized>(op: &O, cfg: &PowerConfig) -> Result<EigenEstimate> {
    let first = power_iterate(op, cfg)?;
    if first.rayleigh >= 0.0 {
        return Ok(first);
    }
    let shift = first.rayleigh.abs() * (1.0 + SHIFT_MARGIN);
    let shifted = Shifted::new(op, shift);
    let reseeded = PowerConfig {
        seed: derive_seed(cfg.seed, 0x5348_4946_54, 0),
        ..*cfg
    };
    let mut est = power_iterate(&shifted, &reseeded)?;
    est.rayleigh -= shift;
    est.iterations += first.iterations;

    if op.ones_is_eigenvector() {
        // The start was kept orthogonal to 1, so its own eigenvalue was never seen.
        let n = op.dim();
        let ones = vec![1.0 / (n as f64).sqrt(); n];
        let mut y = vec![0.0; n];
        op.apply_into(&ones, &mut y);
        let on_ones = par::dot(&ones, &y);
        if on_ones > est.rayleigh {
            est.vector = ones;
            est.rayleigh = on_ones;
        }
    }
    Ok(est)
}

/// `+1` for non-negative entries, `-1` for negative ones.
pub fn sign_round(v: &[f64]) -> Vec<i8> {
    v.iter().map(|&x| if x < 0.0 { -1 } else { 1 }).collect()
}

fn random_start<O: LinearOperator + ?Sized>(op: &O, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = op.dim();
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    if op.ones_is_eigenvector() && n > 1 {
        let mean = v.iter().sum::<f64>() / n as f64;
        v.iter_mut().for_each(|x| *x -= mean);
    }
    v
}

fn normalize(v: &mut [f64]) {
    let norm = par::norm(v);
    if norm > 0.0 {
        par::scale(v, 1.0 / norm);
    }
}

/// SplitMix64 finalizer over a seed and two salts.
pub(crate) fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Dense(Vec<Vec<f64>>);

    impl LinearOperator for Dense {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply_into(&self, x: &[f64], y: &mut [f64]) {
            for (row, yi) in self.0.iter().zip(y.iter_mut()) {
                *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
            }
        }
    }

    #[test]
    fn diagonal_matrix() {
        let op = Dense(vec![vec![2.0, 0.0], vec![0.0, 1.0]]);
        let est = power_iterate(&op, &PowerConfig::default()).unwrap();
        assert!(est.converged);
        assert!((est.rayleigh - 2.0).abs() < 1e-10);
        assert!((est.vector[0].abs() - 1.0).abs() < 1e-7);
        assert!(est.vector[1].abs() < 1e-6);
    }

    #[test]
    fn eigenvector_start_is_a_fixed_point() {
        let op = Dense(vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        let start = [1.0, 1.0];
        let est = power_iterate_with(&op, &PowerConfig::default(), Some(&start), None).unwrap();
        assert!(est.converged);
        assert!(est.iterations <= 2);
        assert!((est.rayleigh - 3.0).abs() < 1e-12);
    }

    #[test]
    fn negative_dominant_eigenvalue_is_shifted_away() {
        // Eigenvalues -5 (along (1,1)) and 1 (along (1,-1)).
        let op = Dense(vec![vec![-2.0, -3.0], vec![-3.0, -2.0]]);
        let cfg = PowerConfig::default();
        let plain = power_iterate(&op, &cfg).unwrap();
        assert!((plain.rayleigh + 5.0).abs() < 1e-9);
        let lead = leading_eigenvector(&op, &cfg).unwrap();
        assert!((lead.rayleigh - 1.0).abs() < 1e-9);
        assert!((lead.vector[0] + lead.vector[1]).abs() < 1e-6);
    }

    #[test]
    fn positive_dominant_is_untouched() {
        let op = Dense(vec![vec![3.0, 0.0], vec![0.0, -1.0]]);
        let cfg = PowerConfig::default();
        assert_eq!(power_iterate(&op, &cfg).unwrap(), leading_eigenvector(&op, &cfg).unwrap());
    }

    #[test]
    fn zero_operator_fails_after_restarts() {
        let op = Dense(vec![vec![0.0; 3]; 3]);
        assert!(matches!(
            power_iterate(&op, &PowerConfig::default()),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn config_validation() {
        let op = Dense(vec![vec![1.0]]);
        let bad = PowerConfig {
            tol: 0.0,
            ..PowerConfig::default()
        };
        assert!(power_iterate(&op, &bad).is_err());
        let bad = PowerConfig {
            max_iter: Some(0),
            ..PowerConfig::default()
        };
        assert!(power_iterate(&op, &bad).is_err());
    }

    #[test]
    fn sign_rounding() {
        assert_eq!(sign_round(&[0.3, -0.2, 0.0]), vec![1, -1, 1]);
        let v = [0.5, -1.0, 2.0, -0.1];
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let flipped: Vec<i8> = sign_round(&neg).iter().map(|s| -s).collect();
        assert_eq!(sign_round(&v), flipped);
    }
}
