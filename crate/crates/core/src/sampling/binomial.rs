use rand::Rng;

use super::gumbel::open_unit;
use crate::error::{invalid, Result};

/// Exact Binomial(trials, p) sampler.
///
/// Uses geometric skipping: the gap to the next success is
/// `⌊ln U / ln(1 − p)⌋`, so the expected work is `O(trials · min(p, 1 − p) + 1)`.
pub fn sample_binomial<R: Rng + ?Sized>(trials: usize, p: f64, rng: &mut R) -> Result<usize> {
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("probability must lie in [0, 1], got {p}"));
    }
    if trials == 0 || p == 0.0 {
        return Ok(0);
    }
    if p == 1.0 {
        return Ok(trials);
    }
    if p > 0.5 {
        return Ok(trials - geometric_skip(trials, 1.0 - p, rng));
    }
    Ok(geometric_skip(trials, p, rng))
}

fn geometric_skip<R: Rng + ?Sized>(trials: usize, p: f64, rng: &mut R) -> usize {
    let log_fail = (-p).ln_1p();
    let limit = trials as f64;
    let mut consumed = 0.0f64;
    let mut successes = 0usize;
    loop {
        let gap = (open_unit(rng).ln() / log_fail).floor();
        consumed += gap + 1.0;
        if consumed > limit {
            return successes;
        }
        successes += 1;
    }
}
