//! The exponential mechanism, its index-accelerated lazy form, complement
//! augmentation of query sets and privacy accounting.

mod budget;

pub use budget::{advanced_composition, compose_budget, compose_budget_lp, CompositionRule, PrivacyBudget};

use std::cell::Cell;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::mips::{query_topk, MipsIndex, VectorSet};
use crate::sampling::{
    gumbel_max_exact, lazy_gumbel, lazy_gumbel_private, lazy_gumbel_runtime, ScoreList, ScoreSource,
    SelectionResult, TopKSet,
};

/// Per-call parameters of the exponential mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub epsilon0: f64,
    pub sensitivity: f64,
}

impl EmConfig {
    pub fn new(epsilon0: f64, sensitivity: f64) -> Result<Self> {
        if !(epsilon0.is_finite() && epsilon0 > 0.0) {
            return invalid(format!("epsilon0 must be positive, got {epsilon0}"));
        }
        if !(sensitivity.is_finite() && sensitivity > 0.0) {
            return invalid(format!("sensitivity must be positive, got {sensitivity}"));
        }
        Ok(Self { epsilon0, sensitivity })
    }

    /// Multiplier `ε0 / (2Δ)` turning raw scores into log-weights.
    pub fn scale(&self) -> f64 {
        self.epsilon0 / (2.0 * self.sensitivity)
    }
}

/// Samples `i` with probability `∝ exp(ε0 · x_i / (2Δ))` by perturbing
/// every scaled score.
pub fn em_exact<R: Rng + ?Sized>(scores: &ScoreList, cfg: &EmConfig, rng: &mut R) -> SelectionResult {
    em_exact_slice(scores.values(), cfg, rng)
}

pub(crate) fn em_exact_slice<R: Rng + ?Sized>(scores: &[f64], cfg: &EmConfig, rng: &mut R) -> SelectionResult {
    let scale = cfg.scale();
    let scaled = ScoreList::new(scores.iter().map(|x| x * scale).collect()).expect("finite scaled scores");
    gumbel_max_exact(&scaled, rng)
}

/// How LazyEM treats the index's top-k answer. Slacks are in raw score
/// units (inner products before scaling).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionMode {
    /// Trust the answer as the exact top-k.
    ExactSet,
    /// Keep the exact-set margin; each probability stays within `e^{±c'}` of
    /// the exponential mechanism, `c'` being the scaled slack.
    Runtime { slack: f64 },
    /// Lower the margin by the scaled slack; the law is exact whenever the
    /// answer really is `slack`-approximate.
    Private { slack: f64 },
}

impl SelectionMode {
    pub fn slack(&self) -> f64 {
        match *self {
            SelectionMode::ExactSet => 0.0,
            SelectionMode::Runtime { slack } | SelectionMode::Private { slack } => slack,
        }
    }
}

/// Scores `scale · ⟨v_i, query⟩`, computed on demand and counted.
pub struct InnerProductSource<'a> {
    vectors: &'a VectorSet,
    query: &'a [f64],
    scale: f64,
    evaluations: Cell<usize>,
}

impl<'a> InnerProductSource<'a> {
    pub fn new(vectors: &'a VectorSet, query: &'a [f64], scale: f64) -> Result<Self> {
        if query.len() != vectors.dim() {
            return Err(Error::DimensionMismatch { expected: vectors.dim(), got: query.len() });
        }
        Ok(Self { vectors, query, scale, evaluations: Cell::new(0) })
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations.get()
    }
}

impl ScoreSource for InnerProductSource<'_> {
    fn len(&self) -> usize {
        self.vectors.len()
    }

    fn score(&self, index: usize) -> f64 {
        self.evaluations.set(self.evaluations.get() + 1);
        self.scale * crate::dot(self.vectors.row(index), self.query)
    }
}

/// Result of one LazyEM call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LazyEmOutcome {
    /// Winning candidate id in the index's numbering.
    pub candidate: usize,
    pub selection: SelectionResult,
    /// Candidate scores materialized by the sampler (`k + C`).
    pub score_evaluations: usize,
    /// Vector comparisons spent inside the index query.
    pub index_evaluations: usize,
}

/// Exponential mechanism over the inner-product scores `⟨N_i, query⟩` of the
/// indexed candidates, touching only the index's top-`k` answer and the
/// lazily sampled off-set candidates.
pub fn lazy_em<R: Rng + ?Sized>(
    index: &MipsIndex,
    query: &[f64],
    k: usize,
    cfg: &EmConfig,
    mode: SelectionMode,
    rng: &mut R,
) -> Result<LazyEmOutcome> {
    let n = index.len();
    if k == 0 || k > n {
        return invalid(format!("k = {k} must lie in 1..={n}"));
    }
    let slack = mode.slack();
    if !(slack.is_finite() && slack >= 0.0) {
        return invalid(format!("slack must be finite and nonnegative, got {slack}"));
    }
    let answer = query_topk(index, query, k)?;
    let scale = cfg.scale();
    let source = InnerProductSource::new(index.vectors(), query, scale)?;
    let top = TopKSet::from_indices(answer.indices, n)?;
    let selection = match mode {
        SelectionMode::ExactSet => lazy_gumbel(&source, &top, rng)?,
        SelectionMode::Runtime { .. } => lazy_gumbel_runtime(&source, &top.with_slack(scale * slack)?, rng)?,
        SelectionMode::Private { .. } => lazy_gumbel_private(&source, &top.with_slack(scale * slack)?, rng)?,
    };
    Ok(LazyEmOutcome {
        candidate: selection.winner,
        selection,
        score_evaluations: source.evaluations(),
        index_evaluations: answer.evaluations,
    })
}

/// Direction of a complement-augmented query relative to its original.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Queries `q_1..q_m` followed by their complements `1 − q_i`.
///
/// For distributions `p, h`, `⟨1 − q_i, h − p⟩ = −⟨q_i, h − p⟩`, so the
/// augmented set turns an absolute-error search into a plain maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedQuerySet {
    base: VectorSet,
    augmented: VectorSet,
}

/// Appends the complement of every query; entries must lie in `[0, 1]`.
pub fn augment_complements(queries: &VectorSet) -> Result<AugmentedQuerySet> {
    if queries.is_empty() {
        return invalid("query set must be nonempty");
    }
    if let Some(pos) = queries.as_slice().iter().position(|v| !(0.0..=1.0).contains(v)) {
        return invalid(format!("query entry {pos} lies outside [0, 1]"));
    }
    let mut data = Vec::with_capacity(2 * queries.as_slice().len());
    data.extend_from_slice(queries.as_slice());
    data.extend(queries.as_slice().iter().map(|v| 1.0 - v));
    let augmented = VectorSet::new(data, queries.dim())?;
    Ok(AugmentedQuerySet { base: queries.clone(), augmented })
}

impl AugmentedQuerySet {
    pub fn base(&self) -> &VectorSet {
        &self.base
    }

    pub fn augmented(&self) -> &VectorSet {
        &self.augmented
    }

    pub fn into_augmented(self) -> VectorSet {
        self.augmented
    }

    /// Number of original queries `m`.
    pub fn m(&self) -> usize {
        self.base.len()
    }

    /// Maps augmented id `j` to `(original id, sign)`.
    pub fn back_map(&self, j: usize) -> (usize, Sign) {
        back_map(self.m(), j)
    }
}

pub(crate) fn back_map(m: usize, j: usize) -> (usize, Sign) {
    if j < m {
        (j, Sign::Plus)
    } else {
        (j - m, Sign::Minus)
    }
}
