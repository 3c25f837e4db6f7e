use std::time::Instant;

use rand::Rng;

use super::{LPInstance, LpIterationRecord, LpSolveOutput};
use crate::error::{invalid, Result};
use crate::mechanism::{compose_budget_lp, em_exact_slice, lazy_em, EmConfig, SelectionMode};
use crate::mips::{build_index, IndexConfig, MipsIndex, VectorSet};
use crate::sampling::default_k;

/// Settings of the scalar-private solver.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarLpParams {
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub iterations: usize,
    pub eta: f64,
    pub epsilon0: f64,
    /// Top-k size for lazy selection.
    pub k: usize,
}

impl ScalarLpParams {
    /// `T = ⌈9ρ² ln d / α²⌉`, `η = √(ln d / T)`, `ε0 = ε / √(8T ln(1/δ))`,
    /// `k = ⌈√m⌉`.
    pub fn new(lp: &LPInstance, alpha: f64, epsilon: f64, delta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return invalid(format!("alpha must be positive, got {alpha}"));
        }
        let d = lp.d() as f64;
        let iterations = ((9.0 * lp.rho * lp.rho * d.ln() / (alpha * alpha)).ceil() as usize).max(1);
        let mut p = Self { alpha, epsilon, delta, iterations, eta: 0.0, epsilon0: 0.0, k: default_k(lp.m()) };
        p.set_iterations(iterations, lp.d())?;
        Ok(p)
    }

    /// Overrides `T`, recomputing `η` and `ε0`.
    pub fn with_iterations(mut self, iterations: usize, d: usize) -> Result<Self> {
        self.set_iterations(iterations, d)?;
        Ok(self)
    }

    pub fn with_epsilon0(mut self, epsilon0: f64) -> Self {
        self.epsilon0 = epsilon0;
        self
    }

    fn set_iterations(&mut self, iterations: usize, d: usize) -> Result<()> {
        self.epsilon0 = compose_budget_lp(self.epsilon, self.delta, iterations, 0.0)?.epsilon0;
        self.eta = ((d as f64).ln() / iterations as f64).sqrt();
        self.iterations = iterations;
        Ok(())
    }
}

/// How the most violated constraint is selected.
#[derive(Debug, Clone, Copy)]
pub enum ConstraintOracle<'a> {
    /// Exponential mechanism over all `m` scores.
    Exhaustive,
    /// LazyEM over an index from [`constraint_index`].
    Lazy { index: &'a MipsIndex, mode: SelectionMode },
}

/// Index over the rows `A_i ∘ b_i`, whose inner product with `x ∘ (−1)` is
/// the violation `A_i x − b_i`.
pub fn constraint_index(lp: &LPInstance, config: &IndexConfig) -> Result<MipsIndex> {
    let d = lp.d();
    let mut data = Vec::with_capacity(lp.m() * (d + 1));
    for i in 0..lp.m() {
        data.extend_from_slice(lp.row(i));
        data.push(lp.b()[i]);
    }
    build_index(VectorSet::new(data, d + 1)?, config)
}

/// Multiplicative weights over the simplex, privately picking the most
/// violated constraint each round and shifting weight away from the
/// variables it loads. Returns the average of the iterates.
pub fn scalar_private_solve<R: Rng + ?Sized>(
    lp: &LPInstance,
    params: &ScalarLpParams,
    oracle: ConstraintOracle<'_>,
    rng: &mut R,
) -> Result<LpSolveOutput> {
    let (m, d) = (lp.m(), lp.d());
    if lp.max_abs_entry() > lp.rho {
        return invalid(format!("width bound rho = {} is below max |A_ij| = {}", lp.rho, lp.max_abs_entry()));
    }
    if lp.delta_inf <= 0.0 {
        return invalid("delta_inf must be positive for the scalar-private solver");
    }
    if let ConstraintOracle::Lazy { index, .. } = oracle {
        if index.len() != m || index.dim() != d + 1 {
            return invalid("index was not built over this instance's constraints");
        }
        if params.k == 0 || params.k > m {
            return invalid(format!("k = {} must lie in 1..={m}", params.k));
        }
    }
    let cfg = EmConfig::new(params.epsilon0, lp.delta_inf)?;
    let mut log_w = vec![0.0f64; d];
    let mut x = vec![1.0 / d as f64; d];
    let mut sum = vec![0.0f64; d];
    let mut query = vec![-1.0; d + 1];
    let mut scores = vec![0.0; m];
    let mut records = Vec::with_capacity(params.iterations);

    for _ in 0..params.iterations {
        sum.iter_mut().zip(&x).for_each(|(s, xi)| *s += xi);
        let start = Instant::now();
        let (selected, samples_drawn) = match oracle {
            ConstraintOracle::Exhaustive => {
                for (i, s) in scores.iter_mut().enumerate() {
                    *s = crate::dot(lp.row(i), &x) - lp.b()[i];
                }
                (em_exact_slice(&scores, &cfg, rng).winner, m)
            }
            ConstraintOracle::Lazy { index, mode } => {
                query[..d].copy_from_slice(&x);
                let r = lazy_em(index, &query, params.k, &cfg, mode, rng)?;
                (r.candidate, params.k + r.selection.extra_samples)
            }
        };
        let selection_nanos = start.elapsed().as_nanos() as u64;

        for (w, a) in log_w.iter_mut().zip(lp.row(selected)) {
            *w -= params.eta * a / lp.rho;
        }
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (xi, w) in x.iter_mut().zip(&log_w) {
            *xi = (w - max).exp();
            total += *xi;
        }
        x.iter_mut().for_each(|xi| *xi /= total);
        records.push(LpIterationRecord {
            selected,
            samples_drawn,
            selection_nanos,
            wall_nanos: start.elapsed().as_nanos() as u64,
        });
    }
    let x_bar = sum.iter().map(|s| s / params.iterations as f64).collect();
    Ok(LpSolveOutput { report: lp.report(x_bar)?, iterations: records, epsilon0: params.epsilon0 })
}
