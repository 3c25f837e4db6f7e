use rand::Rng;

use super::gumbel::{sample_gumbel, truncated_tail_mass, truncated_unchecked};
use super::{sample_binomial, sample_distinct_complement, ScoreList, ScoreSource, SelectionResult, TopKSet};
use crate::error::{invalid, Result};

/// Running argmax with lowest-index tie-breaking.
struct Best {
    index: usize,
    value: f64,
}

impl Best {
    fn empty() -> Self {
        Self { index: usize::MAX, value: f64::NEG_INFINITY }
    }

    fn offer(&mut self, index: usize, value: f64) {
        if value > self.value || (value == self.value && index < self.index) {
            self.index = index;
            self.value = value;
        }
    }
}

/// Exhaustive Gumbel-max: perturbs every score and returns the argmax.
/// `Pr[winner = i] = e^{x_i} / Σ_j e^{x_j}`.
pub fn gumbel_max_exact<R: Rng + ?Sized>(scores: &ScoreList, rng: &mut R) -> SelectionResult {
    gumbel_max_over(scores.values(), rng)
}

pub(crate) fn gumbel_max_over<R: Rng + ?Sized>(scores: &[f64], rng: &mut R) -> SelectionResult {
    let mut best = Best::empty();
    let mut min_score = f64::INFINITY;
    for (i, &x) in scores.iter().enumerate() {
        best.offer(i, x + sample_gumbel(rng));
        min_score = min_score.min(x);
    }
    SelectionResult {
        winner: best.index,
        noisy_score: best.value,
        extra_samples: scores.len(),
        margin: best.value - min_score,
    }
}

/// Lazy Gumbel-max over an exact top-k set.
///
/// Only the `k` members of `top` and `C ~ Bin(n − k, Pr[G > B])` uniformly
/// chosen outsiders are perturbed, with the outsiders' noise conditioned on
/// exceeding the margin `B = M − min_{j∈S} x_j`. The winner has exactly the
/// softmax law of [`gumbel_max_exact`].
pub fn lazy_gumbel<S, R>(scores: &S, top: &TopKSet, rng: &mut R) -> Result<SelectionResult>
where
    S: ScoreSource + ?Sized,
    R: Rng + ?Sized,
{
    if top.slack().is_some_and(|c| c > 0.0) {
        return invalid("lazy_gumbel requires an exact top-k set; use the approximate variants");
    }
    lazy_select(scores, top, 0.0, rng)
}

/// Lazy Gumbel-max over a `c`-approximate top-k set, keeping the exact-set
/// margin. Runtime is unchanged; each selection probability stays within
/// `e^{±c}` of the softmax probability.
pub fn lazy_gumbel_runtime<S, R>(scores: &S, top: &TopKSet, rng: &mut R) -> Result<SelectionResult>
where
    S: ScoreSource + ?Sized,
    R: Rng + ?Sized,
{
    lazy_select(scores, top, 0.0, rng)
}

/// Lazy Gumbel-max over a `c`-approximate top-k set with the margin lowered
/// by `c`. The winner follows the exact softmax law; the expected number of
/// outsiders examined grows to at most `e^c · n / k`.
pub fn lazy_gumbel_private<S, R>(scores: &S, top: &TopKSet, rng: &mut R) -> Result<SelectionResult>
where
    S: ScoreSource + ?Sized,
    R: Rng + ?Sized,
{
    lazy_select(scores, top, top.slack().unwrap_or(0.0), rng)
}

fn lazy_select<S, R>(scores: &S, top: &TopKSet, margin_shift: f64, rng: &mut R) -> Result<SelectionResult>
where
    S: ScoreSource + ?Sized,
    R: Rng + ?Sized,
{
    let n = scores.len();
    let k = top.k();
    if k == 0 || k > n {
        return invalid(format!("k = {k} must lie in 1..={n}"));
    }

    let mut best = Best::empty();
    let mut min_in_set = f64::INFINITY;
    for &j in top.indices() {
        let x = scores.score(j);
        min_in_set = min_in_set.min(x);
        best.offer(j, x + sample_gumbel(rng));
    }
    let margin = best.value - min_in_set - margin_shift;

    let tail = truncated_tail_mass(margin);
    let extra = sample_binomial(n - k, tail, rng)?;
    let outsiders = sample_distinct_complement(n, top, extra, rng)?;
    for t in outsiders {
        best.offer(t, scores.score(t) + truncated_unchecked(margin, tail, rng));
    }

    Ok(SelectionResult {
        winner: best.index,
        noisy_score: best.value,
        extra_samples: extra,
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    fn tv(a: &[f64], b: &[f64]) -> f64 {
        0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
    }

    fn empirical<F: FnMut() -> usize>(n: usize, draws: usize, mut f: F) -> Vec<f64> {
        let mut counts = vec![0usize; n];
        for _ in 0..draws {
            counts[f()] += 1;
        }
        counts.into_iter().map(|c| c as f64 / draws as f64).collect()
    }

    #[test]
    fn single_candidate_always_wins() {
        let scores = ScoreList::new(vec![5.0]).unwrap();
        let mut rng = seeded_rng(0);
        for _ in 0..100 {
            assert_eq!(gumbel_max_exact(&scores, &mut rng).winner, 0);
        }
        let top = TopKSet::exact(&scores, 1).unwrap();
        assert_eq!(lazy_gumbel(&scores, &top, &mut rng).unwrap().winner, 0);
    }

    #[test]
    fn two_point_softmax() {
        let scores = ScoreList::new(vec![2f64.ln(), 0.0]).unwrap();
        let mut rng = seeded_rng(1);
        let p = empirical(2, 200_000, || gumbel_max_exact(&scores, &mut rng).winner);
        assert!((p[0] - 2.0 / 3.0).abs() < 0.005, "{p:?}");
    }

    #[test]
    fn equal_scores_select_uniformly() {
        let scores = ScoreList::new(vec![0.3; 4]).unwrap();
        let mut rng = seeded_rng(2);
        let draws = 100_000;
        let p = empirical(4, draws, || gumbel_max_exact(&scores, &mut rng).winner);
        let chi2: f64 = p.iter().map(|f| draws as f64 * (f - 0.25).powi(2) / 0.25).sum();
        // 3 degrees of freedom, 0.999 quantile 16.27.
        assert!(chi2 < 16.27, "chi2 {chi2}");
    }

    #[test]
    fn full_set_degenerates_to_exhaustive() {
        let scores = ScoreList::new(vec![0.1, 1.2, -0.4, 0.8]).unwrap();
        let top = TopKSet::exact(&scores, 4).unwrap();
        let mut rng = seeded_rng(3);
        for _ in 0..1000 {
            let r = lazy_gumbel(&scores, &top, &mut rng).unwrap();
            assert_eq!(r.extra_samples, 0);
        }
        let p = empirical(4, 100_000, || lazy_gumbel(&scores, &top, &mut rng).unwrap().winner);
        assert!(tv(&p, &scores.softmax()) < 0.01);
    }

    #[test]
    fn lazy_matches_softmax_on_spaced_scores() {
        let n = 64;
        let values: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
        let scores = ScoreList::new(values).unwrap();
        let top = TopKSet::exact(&scores, 8).unwrap();
        let mut rng = seeded_rng(4);
        let p = empirical(n, 200_000, || lazy_gumbel(&scores, &top, &mut rng).unwrap().winner);
        let d = tv(&p, &scores.softmax());
        assert!(d < 0.01, "tv {d}");
    }

    #[test]
    fn private_variant_is_exact_under_slack() {
        let n = 64;
        let values: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() * 2.0).collect();
        let scores = ScoreList::new(values).unwrap();
        let exact = TopKSet::exact(&scores, 9).unwrap();
        // Swap the weakest true member for the best outsider.
        let mut idx = exact.indices()[..8].to_vec();
        let outsider = TopKSet::exact(&scores, 10).unwrap().indices()[9];
        idx.push(outsider);
        let c = TopKSet::from_indices(idx.clone(), n).unwrap().observed_slack(&scores);
        assert!(c > 0.0);
        let top = TopKSet::approximate(&scores, idx, c).unwrap();
        let mut rng = seeded_rng(5);
        let p = empirical(n, 200_000, || lazy_gumbel_private(&scores, &top, &mut rng).unwrap().winner);
        assert!(tv(&p, &scores.softmax()) < 0.01);
    }

    #[test]
    fn lazy_rejects_sets_with_slack() {
        let scores = ScoreList::new(vec![1.0, 0.0, 0.5]).unwrap();
        let top = TopKSet::from_indices(vec![0], 3).unwrap().with_slack(0.5).unwrap();
        let mut rng = seeded_rng(0);
        assert!(lazy_gumbel(&scores, &top, &mut rng).is_err());
        assert!(lazy_gumbel_runtime(&scores, &top, &mut rng).is_ok());
    }

    #[test]
    fn zero_slack_variants_coincide_with_exact_set() {
        let scores = ScoreList::new((0..40).map(|i| (i % 7) as f64 * 0.4).collect()).unwrap();
        let top = TopKSet::exact(&scores, 7).unwrap().with_slack(0.0).unwrap();
        // Same seed: identical draws since the margins coincide.
        let a = lazy_gumbel(&scores, &top, &mut seeded_rng(77)).unwrap();
        let b = lazy_gumbel_runtime(&scores, &top, &mut seeded_rng(77)).unwrap();
        let c = lazy_gumbel_private(&scores, &top, &mut seeded_rng(77)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn same_seed_same_result() {
        let scores = ScoreList::new((0..500).map(|i| ((i * 31) % 17) as f64 / 5.0).collect()).unwrap();
        let top = TopKSet::exact(&scores, 23).unwrap();
        for seed in 0..20 {
            let a = lazy_gumbel(&scores, &top, &mut seeded_rng(seed)).unwrap();
            let b = lazy_gumbel(&scores, &top, &mut seeded_rng(seed)).unwrap();
            assert_eq!(a.winner, b.winner);
            assert_eq!(a.noisy_score.to_bits(), b.noisy_score.to_bits());
            assert_eq!(a.margin.to_bits(), b.margin.to_bits());
            assert_eq!(a.extra_samples, b.extra_samples);
        }
    }

    #[test]
    fn extra_samples_bounded_by_n_over_k() {
        use rand::Rng;
        let mut gen = seeded_rng(10);
        let n = 10_000;
        let k = 100;
        let trials = 100;
        let mut total = 0usize;
        let mut rng = seeded_rng(11);
        let mut sq = 0.0;
        for _ in 0..trials {
            let scores = ScoreList::new((0..n).map(|_| gen.random::<f64>()).collect()).unwrap();
            let top = TopKSet::exact(&scores, k).unwrap();
            let c = lazy_gumbel(&scores, &top, &mut rng).unwrap().extra_samples;
            total += c;
            sq += (c * c) as f64;
        }
        let mean = total as f64 / trials as f64;
        let sd = (sq / trials as f64 - mean * mean).max(0.0).sqrt();
        assert!(mean <= 100.0 + 3.0 * sd / (trials as f64).sqrt(), "mean {mean}");
    }
}
