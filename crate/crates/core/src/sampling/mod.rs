//! Gumbel-noise primitives and lazy Gumbel-max selection.
//!
//! Every selector here samples index `i` with probability proportional to
//! `exp(x_i)`, where the scores `x_i` are supplied through [`ScoreSource`].
//! The lazy selectors only ever read the scores of the top-k set and of the
//! off-set candidates they decide to examine, so a source may compute scores
//! on demand.

mod binomial;
mod gumbel;

pub(crate) use gumbel::open_unit;
mod lazy;
mod subset;

pub use binomial::sample_binomial;
pub use gumbel::{gumbel_from_uniform, sample_gumbel, sample_truncated_gumbel, truncated_tail_mass};
pub use lazy::{gumbel_max_exact, lazy_gumbel, lazy_gumbel_private, lazy_gumbel_runtime};
pub use subset::sample_distinct_complement;

use std::cmp::Ordering;
use std::collections::HashSet;

use crate::error::{invalid, Error, Result};

/// Read access to candidate scores by index.
pub trait ScoreSource {
    fn len(&self) -> usize;

    fn score(&self, index: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl ScoreSource for [f64] {
    fn len(&self) -> usize {
        <[f64]>::len(self)
    }

    fn score(&self, index: usize) -> f64 {
        self[index]
    }
}

/// A materialized, validated list of finite scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreList(Vec<f64>);

impl ScoreList {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return invalid("score list must be nonempty");
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Softmax probabilities `exp(x_i) / Σ exp(x_j)`, computed stably.
    pub fn softmax(&self) -> Vec<f64> {
        softmax(&self.0)
    }
}

impl ScoreSource for ScoreList {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn score(&self, index: usize) -> f64 {
        self.0[index]
    }
}

pub(crate) fn softmax(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// A set of `k` distinct candidate indices, optionally tagged with the slack
/// `c` of an approximate top-k: `max_{i∉S} x_i − min_{i∈S} x_i ≤ c`.
#[derive(Debug, Clone, PartialEq)]
pub struct TopKSet {
    indices: Vec<usize>,
    slack: Option<f64>,
}

impl TopKSet {
    /// Validates that `indices` is a nonempty set of distinct ids below `n`.
    pub fn from_indices(indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.is_empty() {
            return invalid("top-k set must be nonempty");
        }
        if indices.len() > n {
            return invalid(format!("k = {} exceeds candidate count {n}", indices.len()));
        }
        let mut seen = HashSet::with_capacity(indices.len());
        for &i in &indices {
            if i >= n {
                return invalid(format!("index {i} out of range for {n} candidates"));
            }
            if !seen.insert(i) {
                return invalid(format!("duplicate index {i} in top-k set"));
            }
        }
        Ok(Self { indices, slack: None })
    }

    /// The exact top-k of `scores`, ties broken towards the lower index.
    pub fn exact<S: ScoreSource + ?Sized>(scores: &S, k: usize) -> Result<Self> {
        let n = scores.len();
        if k == 0 || k > n {
            return invalid(format!("k = {k} must lie in 1..={n}"));
        }
        let mut order: Vec<usize> = (0..n).collect();
        let cmp = |a: &usize, b: &usize| descending(scores.score(*a), *a, scores.score(*b), *b);
        if k < n {
            order.select_nth_unstable_by(k - 1, cmp);
            order.truncate(k);
        }
        order.sort_by(cmp);
        Ok(Self { indices: order, slack: None })
    }

    /// Tags the set with an approximation slack `c ≥ 0`. The property is not
    /// checked; see [`TopKSet::approximate`] for the verified constructor.
    pub fn with_slack(mut self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return invalid(format!("slack must be finite and nonnegative, got {c}"));
        }
        self.slack = Some(c);
        Ok(self)
    }

    /// Builds a `c`-approximate top-k set, verifying the slack property
    /// against the full score list.
    pub fn approximate<S: ScoreSource + ?Sized>(scores: &S, indices: Vec<usize>, c: f64) -> Result<Self> {
        let set = Self::from_indices(indices, scores.len())?.with_slack(c)?;
        let observed = set.observed_slack(scores);
        if observed > c + 1e-12 {
            return invalid(format!("set has slack {observed}, above the declared {c}"));
        }
        Ok(set)
    }

    /// `(max_{i∉S} x_i − min_{i∈S} x_i)⁺` over the full score list.
    pub fn observed_slack<S: ScoreSource + ?Sized>(&self, scores: &S) -> f64 {
        let n = scores.len();
        let member: HashSet<usize> = self.indices.iter().copied().collect();
        let min_in = self.indices.iter().map(|&i| scores.score(i)).fold(f64::INFINITY, f64::min);
        let max_out = (0..n)
            .filter(|i| !member.contains(i))
            .map(|i| scores.score(i))
            .fold(f64::NEG_INFINITY, f64::max);
        (max_out - min_in).max(0.0)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn slack(&self) -> Option<f64> {
        self.slack
    }
}

/// Outcome of one Gumbel-max selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionResult {
    pub winner: usize,
    /// Winning score plus its Gumbel noise.
    pub noisy_score: f64,
    /// Off-set candidates examined (`n` for the exhaustive sampler).
    pub extra_samples: usize,
    /// Truncation margin `B` used for off-set noise.
    pub margin: f64,
}

/// Orders `(score, index)` pairs by descending score, then ascending index.
pub(crate) fn descending(sa: f64, ia: usize, sb: f64, ib: usize) -> Ordering {
    sb.total_cmp(&sa).then(ia.cmp(&ib))
}

/// Default top-k size `⌈√n⌉`.
pub fn default_k(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).clamp(1, n.max(1))
}
