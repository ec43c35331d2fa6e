//! Successive spectral relaxation of one bisection.
//!
//! The relaxed membership vector is rounded a little at a time: entries that
//! are already large are fixed to their sign, and the rest are re-optimized
//! on the sphere of radius `√k` by the constrained power method
//!
//! ```text
//! s₋ ← √k · (B₋₋ s₋ + B₋₊ s₊) / ‖B₋₋ s₋ + B₋₊ s₊‖
//! ```
//!
//! which maximizes the residual objective `L = s₋ᵀB₋₋s₋ + 2 s₋ᵀB₋₊s₊`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::operator::{LinearOperator, ModularityOperator, Shifted};
use crate::par;
use crate::spectral::{derive_seed, leading_eigenvector, power_iterate, PowerConfig};

const SHIFT_MARGIN: f64 = 1e-3;
const SHIFT_PROBE: PowerConfig = PowerConfig {
    tol: 1e-5,
    max_iter: Some(300),
    seed: 0,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsrConfig {
    /// Rounding threshold on entries of the `√k`-scaled relaxed vector.
    pub sigma: f64,
    /// Minimum fraction of free vertices fixed per round.
    pub epsilon_min: f64,
    /// Tolerance of the leading-eigenvector power iteration.
    pub tol: f64,
    pub max_iter: Option<usize>,
    /// Tolerance on the RMS entry change of constrained power method iterates.
    pub inner_tol: f64,
    /// `None` means `10·k + 1000`.
    pub inner_max_iter: Option<usize>,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    /// A split is kept only if it raises modularity by more than this.
    pub gain_tol: f64,
}

impl Default for SsrConfig {
    fn default() -> Self {
        SsrConfig {
            sigma: 1.0,
            epsilon_min: 0.25,
            tol: 1e-7,
            max_iter: None,
            inner_tol: 1e-7,
            inner_max_iter: None,
            seed: 42,
            threads: 0,
            gain_tol: 1e-10,
        }
    }
}

impl SsrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return invalid(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.epsilon_min > 0.0 && self.epsilon_min < 1.0) {
            return invalid(format!("epsilon must lie in (0, 1), got {}", self.epsilon_min));
        }
        if !(self.inner_tol > 0.0) {
            return invalid(format!("inner tolerance must be positive, got {}", self.inner_tol));
        }
        if self.inner_max_iter == Some(0) {
            return invalid("inner iteration cap must be at least 1");
        }
        if !(self.gain_tol >= 0.0) {
            return invalid(format!("gain tolerance must be non-negative, got {}", self.gain_tol));
        }
        self.power().validate()
    }

    pub fn power(&self) -> PowerConfig {
        PowerConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
        }
    }
}

/// A bisection in progress.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundingState {
    /// `0` for free vertices, otherwise the fixed sign.
    assignment: Vec<i8>,
    /// Free vertices in increasing order.
    free: Vec<usize>,
    /// Relaxed values of the free vertices, norm `√k`.
    relaxed: Vec<f64>,
}

impl RoundingState {
    /// All vertices free, starting from `values` rescaled to norm `√n`.
    pub fn new(values: Vec<f64>) -> Self {
        let n = values.len();
        let mut state = RoundingState {
            assignment: vec![0; n],
            free: (0..n).collect(),
            relaxed: values,
        };
        state.rescale();
        state
    }

    /// A state with some vertices already fixed; `relaxed` covers the rest in order.
    pub fn with_fixed(n: usize, fixed: &[(usize, i8)], relaxed: Vec<f64>) -> Result<Self> {
        let mut assignment = vec![0i8; n];
        for &(i, s) in fixed {
            if i >= n || assignment[i] != 0 {
                return invalid(format!("fixed vertex {i} out of range or repeated"));
            }
            if s != 1 && s != -1 {
                return invalid(format!("fixed sign {s} is not ±1"));
            }
            assignment[i] = s;
        }
        let free: Vec<usize> = (0..n).filter(|&i| assignment[i] == 0).collect();
        if relaxed.len() != free.len() {
            return invalid(format!("{} relaxed values for {} free vertices", relaxed.len(), free.len()));
        }
        let mut state = RoundingState {
            assignment,
            free,
            relaxed,
        };
        state.rescale();
        Ok(state)
    }

    pub fn scope_len(&self) -> usize {
        self.assignment.len()
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn relaxed(&self) -> &[f64] {
        &self.relaxed
    }

    /// Fixed sign of scope vertex `i`, if any.
    pub fn fixed_sign(&self, i: usize) -> Option<i8> {
        match self.assignment[i] {
            0 => None,
            s => Some(s),
        }
    }

    pub fn fixed(&self) -> impl Iterator<Item = (usize, i8)> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &s)| s != 0)
            .map(|(i, &s)| (i, s))
    }

    pub fn set_relaxed(&mut self, values: Vec<f64>) -> Result<()> {
        if values.len() != self.free.len() {
            return invalid(format!("{} relaxed values for {} free vertices", values.len(), self.free.len()));
        }
        self.relaxed = values;
        self.rescale();
        Ok(())
    }

    /// Complete assignment, or `None` while vertices remain free.
    pub fn signs(&self) -> Option<Vec<i8>> {
        self.free.is_empty().then(|| self.assignment.clone())
    }

    fn rescale(&mut self) {
        let k = self.relaxed.len();
        if k == 0 {
            return;
        }
        let norm = par::norm(&self.relaxed);
        if norm > 0.0 && norm.is_finite() {
            par::scale(&mut self.relaxed, (k as f64).sqrt() / norm);
        } else {
            self.relaxed = vec![1.0; k];
        }
    }
}

/// `B₋₊ s₊`, kept for the whole scope so that fixing more vertices only
/// scatters their columns.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingVector {
    full: Vec<f64>,
}

impl CouplingVector {
    pub fn new(scope_len: usize) -> Self {
        CouplingVector {
            full: vec![0.0; scope_len],
        }
    }

    /// Recomputes `B₋₊ s₊` from scratch with one operator application.
    pub fn recompute(op: &ModularityOperator<'_>, state: &RoundingState) -> Result<Self> {
        let mut x = vec![0.0; state.scope_len()];
        for (i, s) in state.fixed() {
            x[i] = f64::from(s);
        }
        Ok(CouplingVector { full: op.apply(&x)? })
    }

    /// Adds the columns of newly fixed vertices.
    pub fn absorb(&mut self, op: &ModularityOperator<'_>, newly_fixed: &[(usize, i8)]) {
        let columns: Vec<(usize, f64)> = newly_fixed.iter().map(|&(i, s)| (i, f64::from(s))).collect();
        op.add_columns(&columns, &mut self.full);
    }

    /// Entries on the free vertices of `state`.
    pub fn on_free(&self, state: &RoundingState) -> Vec<f64> {
        state.free().iter().map(|&i| self.full[i]).collect()
    }
}

/// Fixes free vertices per the threshold rule with the ε-fraction floor.
/// Returns the newly fixed `(vertex, sign)` pairs in vertex order.
pub fn partial_round(state: &mut RoundingState, cfg: &SsrConfig) -> Vec<(usize, i8)> {
    let k = state.free.len();
    if k == 0 {
        return Vec::new();
    }
    let floor = ((cfg.epsilon_min * k as f64).ceil() as usize).clamp(1, k);
    let mut chosen: Vec<usize> = (0..k).filter(|&p| state.relaxed[p].abs() >= cfg.sigma).collect();
    if chosen.len() < floor {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            state.relaxed[b]
                .abs()
                .total_cmp(&state.relaxed[a].abs())
                .then(a.cmp(&b))
        });
        order.truncate(floor);
        order.sort_unstable();
        chosen = order;
    }

    let mut newly = Vec::with_capacity(chosen.len());
    let mut keep = vec![true; k];
    for &p in &chosen {
        let sign = if state.relaxed[p] < 0.0 { -1 } else { 1 };
        let v = state.free[p];
        state.assignment[v] = sign;
        keep[p] = false;
        newly.push((v, sign));
    }
    let mut p = 0;
    state.free.retain(|_| {
        p += 1;
        keep[p - 1]
    });
    let mut p = 0;
    state.relaxed.retain(|_| {
        p += 1;
        keep[p - 1]
    });
    state.rescale();
    newly
}

/// `L = sᵀ F s + 2 sᵀ b`.
pub fn residual_objective<O: LinearOperator + ?Sized>(op: &O, s: &[f64], b: &[f64]) -> f64 {
    let mut y = vec![0.0; s.len()];
    op.apply_into(s, &mut y);
    par::dot(s, &y) + 2.0 * par::dot(s, b)
}

/// One constrained power method update `√k (F s + b) / ‖F s + b‖`.
///
/// A zero numerator is retried once from a slightly perturbed `s`.
pub fn cpm_step<O: LinearOperator + ?Sized>(op: &O, s: &[f64], b: &[f64], seed: u64) -> Result<Vec<f64>> {
    let mut y = vec![0.0; s.len()];
    cpm_numerator(op, s, b, &mut y);
    let k = s.len() as f64;
    let mut norm = par::norm(&y);
    if !(norm > 0.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nudged: Vec<f64> = s
            .iter()
            .map(|x| x + 1e-8 * k.sqrt() * rng.gen_range(-1.0..=1.0))
            .collect();
        cpm_numerator(op, &nudged, b, &mut y);
        norm = par::norm(&y);
        if !(norm > 0.0) {
            return Err(Error::Numerical("constrained power step has a zero numerator".into()));
        }
    }
    par::scale(&mut y, k.sqrt() / norm);
    Ok(y)
}

fn cpm_numerator<O: LinearOperator + ?Sized>(op: &O, s: &[f64], b: &[f64], y: &mut [f64]) {
    op.apply_into(s, y);
    for (yi, bi) in y.iter_mut().zip(b) {
        *yi += bi;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CpmOutcome {
    pub relaxed: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates [`cpm_step`] until the RMS change drops below `cfg.inner_tol`.
///
/// `op` must already be positive definite on the free block. When `trace` is
/// given, the objective of every iterate (start included) is appended.
pub fn cpm_solve<O: LinearOperator + ?Sized>(
    op: &O,
    start: &[f64],
    b: &[f64],
    cfg: &SsrConfig,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<CpmOutcome> {
    let k = start.len();
    if b.len() != k || op.dim() != k {
        return invalid("constrained power method dimensions disagree");
    }
    let cap = cfg.inner_max_iter.unwrap_or(10 * k + 1000);
    let mut s = start.to_vec();
    let radius = (k as f64).sqrt();
    let norm = par::norm(&s);
    if norm > 0.0 {
        par::scale(&mut s, radius / norm);
    }
    if let Some(t) = trace.as_deref_mut() {
        t.push(residual_objective(op, &s, b));
    }
    for it in 0..cap {
        let next = cpm_step(op, &s, b, derive_seed(cfg.seed, k as u64, it as u64))?;
        let (change, _) = par::distance_pair(&next, &s);
        s = next;
        if let Some(t) = trace.as_deref_mut() {
            t.push(residual_objective(op, &s, b));
        }
        if change / radius < cfg.inner_tol {
            return Ok(CpmOutcome {
                relaxed: s,
                iterations: it + 1,
                converged: true,
            });
        }
    }
    Ok(CpmOutcome {
        relaxed: s,
        iterations: cap,
        converged: false,
    })
}

/// Diagonal shift that makes `op` positive definite, from two short power runs.
pub fn pd_shift<O: LinearOperator + ?Sized>(op: &O, seed: u64) -> Result<f64> {
    let probe = PowerConfig { seed, ..SHIFT_PROBE };
    let dominant = power_iterate(op, &probe)?.rayleigh;
    let lowest = if dominant <= 0.0 {
        dominant
    } else {
        let down = Shifted::new(op, -dominant);
        let probe = PowerConfig {
            seed: derive_seed(seed, 1, 0),
            ..SHIFT_PROBE
        };
        power_iterate(&down, &probe)?.rayleigh + dominant
    };
    Ok(if lowest < 0.0 {
        lowest.abs() * (1.0 + SHIFT_MARGIN)
    } else {
        0.0
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SsrOutcome {
    pub signs: Vec<i8>,
    /// Outer rounding iterations.
    pub rounds: usize,
    /// Free-set size at the start of each round.
    pub free_sizes: Vec<usize>,
    pub cpm_iterations: usize,
    /// Constrained power solves that hit their iteration cap.
    pub cpm_unconverged: usize,
}

/// Bisects the scope of `op` by successive spectral relaxation.
pub fn ssr_bipartition(op: &ModularityOperator<'_>, cfg: &SsrConfig) -> Result<SsrOutcome> {
    cfg.validate()?;
    let n = op.dim();
    if n < 2 {
        return invalid(format!("cannot bisect a scope of {n} vertex"));
    }
    if op.is_null() {
        return Ok(SsrOutcome {
            signs: vec![1; n],
            rounds: 0,
            free_sizes: Vec::new(),
            cpm_iterations: 0,
            cpm_unconverged: 0,
        });
    }

    let lead = leading_eigenvector(op, &cfg.power())?;
    let mut state = RoundingState::new(lead.vector);
    let mut coupling = CouplingVector::new(n);
    let bound = ((n as f64).ln() / -(1.0 - cfg.epsilon_min).ln()).ceil() as usize + n;

    let mut rounds = 0;
    let mut free_sizes = Vec::new();
    let mut cpm_iterations = 0;
    let mut cpm_unconverged = 0;
    while !state.free().is_empty() {
        if rounds == bound {
            return Err(Error::Numerical(format!("rounding did not finish in {bound} rounds")));
        }
        free_sizes.push(state.free().len());
        let newly = partial_round(&mut state, cfg);
        coupling.absorb(op, &newly);
        rounds += 1;

        let k = state.free().len();
        if k == 0 {
            break;
        }
        let b = coupling.on_free(&state);
        if k == 1 {
            state.set_relaxed(vec![if b[0] < 0.0 { -1.0 } else { 1.0 }])?;
            continue;
        }
        let block = op.restrict(state.free())?;
        if block.is_null() {
            // Only the linear term remains, so follow the coupling.
            state.set_relaxed(b.iter().map(|&x| if x < 0.0 { -1.0 } else { 1.0 }).collect())?;
            continue;
        }
        let round_seed = derive_seed(cfg.seed, n as u64, rounds as u64);
        let shift = pd_shift(&block, round_seed)?;
        let shifted = Shifted::new(&block, shift);
        let inner = SsrConfig {
            seed: round_seed,
            ..*cfg
        };
        let solved = cpm_solve(&shifted, state.relaxed(), &b, &inner, None)?;
        cpm_iterations += solved.iterations;
        cpm_unconverged += usize::from(!solved.converged);
        state.set_relaxed(solved.relaxed)?;
    }

    Ok(SsrOutcome {
        signs: state.signs().expect("all vertices fixed"),
        rounds,
        free_sizes,
        cpm_iterations,
        cpm_unconverged,
    })
}
