//! Private linear query release with multiplicative weights.
//!
//! Both variants select, each round, a query from the complement-augmented
//! set with the exponential mechanism over `⟨q′, h − p̂⟩` and then raise the
//! synthetic distribution's weight on that query's support. The classic
//! variant scores all `2m` augmented queries; the fast variant asks a k-MIPS
//! index for the top `⌈√(2m)⌉` and samples the rest lazily.

use std::time::Instant;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::mechanism::{
    augment_complements, back_map, compose_budget, em_exact_slice, lazy_em, EmConfig, PrivacyBudget, SelectionMode,
    Sign,
};
use crate::mips::{build_index, IndexConfig, MipsIndex, VectorSet};

/// Empirical distribution of records over a finite domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    mass: Vec<f64>,
    n_source: usize,
}

impl Histogram {
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Number of records the histogram was built from.
    pub fn n_source(&self) -> usize {
        self.n_source
    }

    pub fn domain_size(&self) -> usize {
        self.mass.len()
    }
}

/// Frequencies of `records` over `0..domain_size`.
pub fn build_histogram(records: &[usize], domain_size: usize) -> Result<Histogram> {
    if records.is_empty() {
        return invalid("cannot build a histogram from zero records");
    }
    let mut counts = vec![0usize; domain_size];
    for &r in records {
        if r >= domain_size {
            return invalid(format!("record {r} outside the domain of size {domain_size}"));
        }
        counts[r] += 1;
    }
    let n = records.len() as f64;
    Ok(Histogram { mass: counts.into_iter().map(|c| c as f64 / n).collect(), n_source: records.len() })
}

/// `max_i |⟨q_i, p̂ − h⟩|`.
pub fn max_error(queries: &VectorSet, p_hat: &[f64], h: &[f64]) -> Result<f64> {
    let d = queries.dim();
    for len in [p_hat.len(), h.len()] {
        if len != d {
            return Err(Error::DimensionMismatch { expected: d, got: len });
        }
    }
    let diff: Vec<f64> = p_hat.iter().zip(h).map(|(p, q)| p - q).collect();
    Ok(queries.rows().map(|q| crate::dot(q, &diff).abs()).fold(0.0, f64::max))
}

/// Iteration count, step size and per-round privacy of an MWEM run.
#[derive(Debug, Clone, PartialEq)]
pub struct MwemParams {
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub iterations: usize,
    pub eta: f64,
    pub epsilon0: f64,
    /// Score sensitivity, `1/n`.
    pub sensitivity: f64,
    /// Top-k size for the lazy selection.
    pub k: usize,
    /// Use the weight update `exp(−η q′)` instead of `exp(+η q′)`.
    pub literal_sign: bool,
    /// Measure the running-average error every this many rounds (0: never).
    pub error_every: usize,
}

impl MwemParams {
    /// Derived settings for `m` queries over a domain of `domain_size` with
    /// `n` records: `T = ⌈4 ln m / α²⌉`, `η = √(ln|𝒳| / T)`,
    /// `ε0 = ε / √(T ln(1/δ))` and `k = ⌈√(2m)⌉`.
    pub fn new(alpha: f64, epsilon: f64, delta: f64, m: usize, domain_size: usize, n: usize) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return invalid(format!("alpha must be positive, got {alpha}"));
        }
        if m == 0 || n == 0 {
            return invalid("need at least one query and one record");
        }
        if domain_size < 2 {
            return invalid("domain must have at least two elements");
        }
        let iterations = ((4.0 * (m as f64).ln() / (alpha * alpha)).ceil() as usize).max(1);
        let budget = compose_budget(epsilon, delta, iterations, 0.0)?;
        Ok(Self {
            alpha,
            epsilon,
            delta,
            iterations,
            eta: ((domain_size as f64).ln() / iterations as f64).sqrt(),
            epsilon0: budget.epsilon0,
            sensitivity: 1.0 / n as f64,
            k: ((2.0 * m as f64).sqrt().ceil() as usize).min(2 * m),
            literal_sign: false,
            error_every: 1,
        })
    }

    /// Overrides `T`, recomputing `η` and `ε0` from it.
    pub fn with_iterations(mut self, iterations: usize, domain_size: usize) -> Result<Self> {
        if iterations == 0 {
            return invalid("iteration count must be at least 1");
        }
        self.epsilon0 = compose_budget(self.epsilon, self.delta, iterations, 0.0)?.epsilon0;
        self.eta = ((domain_size as f64).ln() / iterations as f64).sqrt();
        self.iterations = iterations;
        Ok(self)
    }

    /// Overrides the per-round privacy parameter.
    pub fn with_epsilon0(mut self, epsilon0: f64) -> Self {
        self.epsilon0 = epsilon0;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_literal_sign(mut self, literal: bool) -> Self {
        self.literal_sign = literal;
        self
    }

    pub fn with_error_every(mut self, every: usize) -> Self {
        self.error_every = every;
        self
    }

    fn em_config(&self) -> Result<EmConfig> {
        EmConfig::new(self.epsilon0, self.sensitivity)
    }

    fn budget(&self, extra_delta: f64) -> Result<PrivacyBudget> {
        let mut b = compose_budget(self.epsilon, self.delta, self.iterations, extra_delta)?;
        b.epsilon0 = self.epsilon0;
        Ok(b)
    }
}

/// Measurements of one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// Error of the running average of the iterates so far, when measured.
    pub error: Option<f64>,
    /// Original query id of the selection.
    pub selected: usize,
    pub sign: Sign,
    /// Gumbel samples drawn by the selection.
    pub samples_drawn: usize,
    /// Candidate scores computed by the selection.
    pub score_evaluations: usize,
    pub selection_nanos: u64,
    /// Selection plus weight update.
    pub wall_nanos: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTrace {
    /// Error of the uniform starting distribution.
    pub initial_error: f64,
    /// Error of the returned average.
    pub final_error: f64,
    pub iterations: Vec<IterationRecord>,
}

#[derive(Debug, Clone)]
pub struct MwemOutput {
    /// Average of the iterates used for selection.
    pub synthetic: Vec<f64>,
    pub trace: ErrorTrace,
    pub budget: PrivacyBudget,
    /// Advanced-composition guarantee charged for a runtime-mode slack.
    pub slack_adjusted: Option<(f64, f64)>,
}

/// A k-MIPS index over the complement-augmented query set, built once.
#[derive(Debug, Clone)]
pub struct AugmentedIndex {
    index: MipsIndex,
    m: usize,
    build_nanos: u64,
}

impl AugmentedIndex {
    pub fn build(queries: &VectorSet, config: &IndexConfig) -> Result<Self> {
        let start = Instant::now();
        let augmented = augment_complements(queries)?.into_augmented();
        let index = build_index(augmented, config)?;
        Ok(Self { index, m: queries.len(), build_nanos: start.elapsed().as_nanos() as u64 })
    }

    pub fn index(&self) -> &MipsIndex {
        &self.index
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn build_nanos(&self) -> u64 {
        self.build_nanos
    }
}

struct Selection {
    id: usize,
    sign: Sign,
    samples_drawn: usize,
    score_evaluations: usize,
}

/// MWEM selecting with the exhaustive exponential mechanism over all `2m`
/// augmented queries.
pub fn mwem_classic<R: Rng + ?Sized>(
    queries: &VectorSet,
    h: &Histogram,
    params: &MwemParams,
    rng: &mut R,
) -> Result<MwemOutput> {
    check_inputs(queries, h)?;
    let cfg = params.em_config()?;
    let m = queries.len();
    let mut scores = vec![0.0; 2 * m];
    run(queries, h, params, 0.0, |diff, rng| {
        for (i, q) in queries.rows().enumerate() {
            let s = crate::dot(q, diff);
            scores[i] = s;
            scores[m + i] = -s;
        }
        let r = em_exact_slice(&scores, &cfg, rng);
        let (id, sign) = back_map(m, r.winner);
        Ok(Selection { id, sign, samples_drawn: 2 * m, score_evaluations: 2 * m })
    }, rng)
}

/// Fast-MWEM: builds the augmented index and runs [`fast_mwem_with_index`].
pub fn fast_mwem<R: Rng + ?Sized>(
    queries: &VectorSet,
    h: &Histogram,
    params: &MwemParams,
    config: &IndexConfig,
    mode: SelectionMode,
    rng: &mut R,
) -> Result<MwemOutput> {
    let index = AugmentedIndex::build(queries, config)?;
    fast_mwem_with_index(queries, &index, h, params, mode, rng)
}

/// Fast-MWEM over a prebuilt augmented index of `queries`.
pub fn fast_mwem_with_index<R: Rng + ?Sized>(
    queries: &VectorSet,
    index: &AugmentedIndex,
    h: &Histogram,
    params: &MwemParams,
    mode: SelectionMode,
    rng: &mut R,
) -> Result<MwemOutput> {
    check_inputs(queries, h)?;
    if index.m() != queries.len() || index.index().dim() != queries.dim() {
        return invalid("index was not built over this query set");
    }
    let cfg = params.em_config()?;
    let m = queries.len();
    let mut out = run(queries, h, params, 1.0 / m as f64, |diff, rng| {
        let r = lazy_em(index.index(), diff, params.k, &cfg, mode, rng)?;
        let (id, sign) = back_map(m, r.candidate);
        Ok(Selection {
            id,
            sign,
            samples_drawn: params.k + r.selection.extra_samples,
            score_evaluations: r.score_evaluations,
        })
    }, rng)?;
    if let SelectionMode::Runtime { slack } = mode {
        // Each call is (ε0 + 2c′)-DP for the scaled slack c′.
        let per_call = params.epsilon0 + 2.0 * slack * cfg.scale();
        out.slack_adjusted = Some(out.budget.composed(per_call));
    }
    Ok(out)
}

fn check_inputs(queries: &VectorSet, h: &Histogram) -> Result<()> {
    if queries.dim() != h.domain_size() {
        return Err(Error::DimensionMismatch { expected: h.domain_size(), got: queries.dim() });
    }
    if queries.is_empty() {
        return invalid("query set must be nonempty");
    }
    if queries.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
        return invalid("query entries must lie in [0, 1]");
    }
    Ok(())
}

fn run<R, F>(
    queries: &VectorSet,
    h: &Histogram,
    params: &MwemParams,
    extra_delta: f64,
    mut select: F,
    rng: &mut R,
) -> Result<MwemOutput>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64], &mut R) -> Result<Selection>,
{
    let u = h.domain_size();
    let t_total = params.iterations;
    let step = if params.literal_sign { -params.eta } else { params.eta };
    let mut log_w = vec![0.0f64; u];
    let mut p = vec![1.0 / u as f64; u];
    let mut sum = vec![0.0f64; u];
    let mut diff = vec![0.0f64; u];
    let initial_error = max_error(queries, &p, h.mass())?;
    let mut records = Vec::with_capacity(t_total);

    for t in 1..=t_total {
        for ((s, d), (pi, hi)) in sum.iter_mut().zip(diff.iter_mut()).zip(p.iter().zip(h.mass())) {
            *s += pi;
            *d = hi - pi;
        }
        let start = Instant::now();
        let sel = select(&diff, rng)?;
        let selection_nanos = start.elapsed().as_nanos() as u64;

        let q = queries.row(sel.id);
        match sel.sign {
            Sign::Plus => log_w.iter_mut().zip(q).for_each(|(w, x)| *w += step * x),
            Sign::Minus => log_w.iter_mut().zip(q).for_each(|(w, x)| *w += step * (1.0 - x)),
        }
        normalize_into(&log_w, &mut p);
        let wall_nanos = start.elapsed().as_nanos() as u64;

        let error = if params.error_every > 0 && (t % params.error_every == 0 || t == t_total) {
            let avg: Vec<f64> = sum.iter().map(|s| s / t as f64).collect();
            Some(max_error(queries, &avg, h.mass())?)
        } else {
            None
        };
        records.push(IterationRecord {
            error,
            selected: sel.id,
            sign: sel.sign,
            samples_drawn: sel.samples_drawn,
            score_evaluations: sel.score_evaluations,
            selection_nanos,
            wall_nanos,
        });
    }

    let synthetic: Vec<f64> = sum.iter().map(|s| s / t_total as f64).collect();
    let final_error = max_error(queries, &synthetic, h.mass())?;
    Ok(MwemOutput {
        synthetic,
        trace: ErrorTrace { initial_error, final_error, iterations: records },
        budget: params.budget(extra_delta)?,
        slack_adjusted: None,
    })
}

/// `p = exp(log_w) / Σ exp(log_w)`, shifted by the maximum for stability.
fn normalize_into(log_w: &[f64], p: &mut [f64]) {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (pi, w) in p.iter_mut().zip(log_w) {
        *pi = (w - max).exp();
        total += *pi;
    }
    p.iter_mut().for_each(|pi| *pi /= total);
}
