use std::collections::HashSet;

use rand::Rng;

use super::TopKSet;
use crate::error::{invalid, Result};

/// Uniformly random `count`-subset of `[n] \ excluded`, in sampling order.
///
/// Sparse requests are served by rejection against a hash set, costing
/// `O(count + k)` expected work; dense requests fall back to a partial
/// Fisher–Yates shuffle of the explicit complement.
pub fn sample_distinct_complement<R: Rng + ?Sized>(
    n: usize,
    excluded: &TopKSet,
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let k = excluded.k();
    if k > n {
        return invalid(format!("excluded set of size {k} exceeds n = {n}"));
    }
    let available = n - k;
    if count > available {
        return invalid(format!("cannot draw {count} distinct indices from {available} candidates"));
    }
    if count == 0 {
        return Ok(Vec::new());
    }

    if 2 * count <= available && 2 * available >= n {
        let mut taken: HashSet<usize> = excluded.indices().iter().copied().collect();
        taken.reserve(count);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let i = rng.random_range(0..n);
            if taken.insert(i) {
                out.push(i);
            }
        }
        return Ok(out);
    }

    let mut is_excluded = vec![false; n];
    for &i in excluded.indices() {
        is_excluded[i] = true;
    }
    let mut pool: Vec<usize> = (0..n).filter(|&i| !is_excluded[i]).collect();
    for j in 0..count {
        let pick = rng.random_range(j..pool.len());
        pool.swap(j, pick);
    }
    pool.truncate(count);
    Ok(pool)
}
