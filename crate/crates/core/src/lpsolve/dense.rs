use std::time::Instant;

use rand::Rng;

use super::bregman::{bregman_project, DenseDistribution};
use super::{LPInstance, LpIterationRecord, LpSolveOutput};
use crate::error::{invalid, Error, Result};
use crate::mechanism::{em_exact_slice, lazy_em, EmConfig, SelectionMode};
use crate::mips::{build_index, IndexConfig, MipsIndex, VectorSet};
use crate::sampling::default_k;

/// Settings of the dense multiplicative-weights solver.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMwuParams {
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Density: every dual distribution has entries at most `1/s`.
    pub s: f64,
    pub iterations: usize,
    pub eta: f64,
    /// Per-round privacy of the vertex oracle.
    pub epsilon_prime: f64,
    /// Top-k size for lazy selection.
    pub k: usize,
}

impl DenseMwuParams {
    /// `T = ⌈16ρ² ln m / α²⌉`, `η = min(1/2, √(ln m / T))`,
    /// `ε′ = ε / √(2T ln(1/δ))`, `k = ⌈√d⌉`.
    pub fn new(lp: &LPInstance, alpha: f64, epsilon: f64, delta: f64, s: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return invalid(format!("alpha must be positive, got {alpha}"));
        }
        if !(epsilon.is_finite() && epsilon > 0.0 && delta > 0.0 && delta < 1.0) {
            return invalid("need epsilon > 0 and delta in (0, 1)");
        }
        if !(s >= 1.0 && s <= lp.m() as f64) {
            return invalid(format!("density s = {s} must lie in [1, m]"));
        }
        let m = lp.m() as f64;
        let iterations = ((16.0 * lp.rho * lp.rho * m.ln() / (alpha * alpha)).ceil() as usize).max(1);
        let mut p = Self { alpha, epsilon, delta, s, iterations, eta: 0.0, epsilon_prime: 0.0, k: default_k(lp.d()) };
        p.set_iterations(iterations, lp.m());
        Ok(p)
    }

    /// Overrides `T`, recomputing `η` and `ε′`.
    pub fn with_iterations(mut self, iterations: usize, m: usize) -> Result<Self> {
        if iterations == 0 {
            return invalid("iteration count must be at least 1");
        }
        self.set_iterations(iterations, m);
        Ok(self)
    }

    pub fn with_epsilon_prime(mut self, epsilon_prime: f64) -> Self {
        self.epsilon_prime = epsilon_prime;
        self
    }

    fn set_iterations(&mut self, iterations: usize, m: usize) {
        self.iterations = iterations;
        self.eta = ((m as f64).ln() / iterations as f64).sqrt().min(0.5);
        self.epsilon_prime = self.epsilon / (2.0 * iterations as f64 * (1.0 / self.delta).ln()).sqrt();
    }
}

/// How the vertex oracle selects.
#[derive(Debug, Clone, Copy)]
pub enum DualOracle<'a> {
    /// Exponential mechanism over all `d` vertex scores.
    Exhaustive,
    /// LazyEM over an index from [`dual_vertex_index`].
    Lazy { index: &'a MipsIndex, k: usize, mode: SelectionMode },
}

fn check_packing(lp: &LPInstance) -> Result<()> {
    if !lp.is_packing() {
        return invalid("the dense solver needs A ≥ 0 and c > 0");
    }
    if lp.opt.is_nan() || lp.opt <= 0.0 {
        return invalid("OPT must be positive");
    }
    Ok(())
}

/// Index over `N_j = −(OPT/c_j) · A_{:,j}`, so that `⟨y, N_j⟩` is the
/// negated expected load of vertex `j` under `y`.
pub fn dual_vertex_index(lp: &LPInstance, config: &IndexConfig) -> Result<MipsIndex> {
    check_packing(lp)?;
    let (m, d) = (lp.m(), lp.d());
    let mut data = vec![0.0; d * m];
    for i in 0..m {
        for (j, a) in lp.row(i).iter().enumerate() {
            data[j * m + i] = -(lp.opt / lp.c()[j]) * a;
        }
    }
    build_index(VectorSet::new(data, m)?, config)
}

/// Vertex choice and the Gumbel samples it took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DualSelection {
    pub vertex: usize,
    pub samples_drawn: usize,
}

/// Privately picks the vertex `(OPT/c_j)·e_j` minimizing `yᵀA x` with scores
/// `−(OPT/c_j) yᵀA_{:,j}` and sensitivity `3·OPT/(c_min·s)`.
pub fn dual_oracle_em<R: Rng + ?Sized>(
    y: &DenseDistribution,
    lp: &LPInstance,
    epsilon_prime: f64,
    oracle: DualOracle<'_>,
    rng: &mut R,
) -> Result<DualSelection> {
    check_packing(lp)?;
    let m = lp.m();
    if y.mass().len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: y.mass().len() });
    }
    let c_min = lp.c().iter().copied().fold(f64::INFINITY, f64::min);
    let cfg = EmConfig::new(epsilon_prime, 3.0 * lp.opt / (c_min * y.s()))?;
    match oracle {
        DualOracle::Exhaustive => {
            let mut load = vec![0.0; lp.d()];
            for (i, yi) in y.mass().iter().enumerate() {
                if *yi != 0.0 {
                    load.iter_mut().zip(lp.row(i)).for_each(|(l, a)| *l += yi * a);
                }
            }
            let scores: Vec<f64> = load.iter().zip(lp.c()).map(|(l, c)| -(lp.opt / c) * l).collect();
            Ok(DualSelection { vertex: em_exact_slice(&scores, &cfg, rng).winner, samples_drawn: lp.d() })
        }
        DualOracle::Lazy { index, k, mode } => {
            if index.len() != lp.d() || index.dim() != m {
                return invalid("index was not built over this instance's vertices");
            }
            let r = lazy_em(index, y.mass(), k, &cfg, mode, rng)?;
            Ok(DualSelection { vertex: r.candidate, samples_drawn: k + r.selection.extra_samples })
        }
    }
}

/// `max_{i,j} |(OPT/c_j) A_ij − b_i|`, the largest violation any vertex can
/// produce.
fn vertex_width(lp: &LPInstance) -> f64 {
    let mut w = 0.0f64;
    for i in 0..lp.m() {
        for (j, a) in lp.row(i).iter().enumerate() {
            w = w.max(((lp.opt / lp.c()[j]) * a - lp.b()[i]).abs());
        }
    }
    w
}

/// Dense multiplicative weights over constraints: each round projects the
/// weights onto `1/s`-dense distributions, asks the private oracle for a
/// vertex, and raises the weight of the constraints it violates. Returns the
/// average vertex.
pub fn dense_mwu_solve<R: Rng + ?Sized>(
    lp: &LPInstance,
    params: &DenseMwuParams,
    oracle: DualOracle<'_>,
    rng: &mut R,
) -> Result<LpSolveOutput> {
    check_packing(lp)?;
    let width = vertex_width(lp);
    if width > lp.rho * (1.0 + 1e-12) {
        return invalid(format!("vertex width {width} exceeds the declared rho {}", lp.rho));
    }
    let (m, d) = (lp.m(), lp.d());
    let mut weights = vec![1.0; m];
    let mut counts = vec![0usize; d];
    let mut records = Vec::with_capacity(params.iterations);
    for _ in 0..params.iterations {
        let start = Instant::now();
        let y = bregman_project(&weights, params.s)?;
        let sel = dual_oracle_em(&y, lp, params.epsilon_prime, oracle, rng)?;
        let selection_nanos = start.elapsed().as_nanos() as u64;

        let j = sel.vertex;
        counts[j] += 1;
        let scale = lp.opt / lp.c()[j];
        for (i, (w, yi)) in weights.iter_mut().zip(y.mass()).enumerate() {
            let loss = (scale * lp.row(i)[j] - lp.b()[i] + lp.rho) / (2.0 * lp.rho);
            debug_assert!((-1e-9..=1.0 + 1e-9).contains(&loss));
            *w = yi * (params.eta * loss).exp();
        }
        records.push(LpIterationRecord {
            selected: j,
            samples_drawn: sel.samples_drawn,
            selection_nanos,
            wall_nanos: start.elapsed().as_nanos() as u64,
        });
    }
    let t = params.iterations as f64;
    let x_bar = counts.iter().zip(lp.c()).map(|(&n, c)| n as f64 / t * lp.opt / c).collect();
    Ok(LpSolveOutput { report: lp.report(x_bar)?, iterations: records, epsilon0: params.epsilon_prime })
}
