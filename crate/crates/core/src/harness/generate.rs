use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal, StandardNormal};

use super::stream_rng;
use crate::error::{invalid, Result};
use crate::lpsolve::LPInstance;
use crate::mips::VectorSet;
use crate::mwem::{build_histogram, Histogram};

fn discretize(x: f64, u: usize) -> usize {
    x.round_ties_even().clamp(0.0, (u - 1) as f64) as usize
}

/// Synthetic query-release instance over the domain `0..U`.
///
/// Records are `N(U/3, U/15)` draws; each query marks `⌊U/4⌋` positions drawn
/// from `N(U/2, U/5)`, so repeated positions leave a smaller support. Draws
/// are rounded half-to-even and clamped to the domain.
pub fn gen_query_instance(u: usize, n: usize, m: usize, seed: u64) -> Result<(Histogram, VectorSet)> {
    if u < 2 || n == 0 || m == 0 {
        return invalid("need U ≥ 2 and positive n, m");
    }
    let uf = u as f64;
    let mut rng = stream_rng(seed, 0);
    let data = Normal::new(uf / 3.0, uf / 15.0).expect("valid normal");
    let records: Vec<usize> = (0..n).map(|_| discretize(data.sample(&mut rng), u)).collect();
    let h = build_histogram(&records, u)?;

    let positions = Normal::new(uf / 2.0, uf / 5.0).expect("valid normal");
    let mut q = vec![0.0; m * u];
    for row in q.chunks_exact_mut(u) {
        for _ in 0..u / 4 {
            row[discretize(positions.sample(&mut rng), u)] = 1.0;
        }
    }
    Ok((h, VectorSet::new(q, u)?))
}

/// Random feasibility LP with a planted solution: `A` is standard normal,
/// `x*` is uniform on the simplex and `b = A x* + |N(0, 0.1²)|`, so `x*` is
/// feasible. `Δ∞ = 0.1`, `ρ = max |A_ij|`, `c = 1` and `OPT = 1`.
pub fn gen_lp_instance(m: usize, d: usize, seed: u64) -> Result<LPInstance> {
    if m == 0 || d == 0 {
        return invalid("need positive m and d");
    }
    let mut rng = stream_rng(seed, 0);
    let a: Vec<f64> = (0..m * d).map(|_| rng.sample(StandardNormal)).collect();
    let e: Vec<f64> = (0..d).map(|_| rng.sample(Exp1)).collect();
    let total: f64 = e.iter().sum();
    let x_star: Vec<f64> = e.iter().map(|v| v / total).collect();
    let noise = Normal::new(0.0, 0.1).expect("valid normal");
    let b: Vec<f64> = a
        .chunks_exact(d)
        .map(|row| crate::dot(row, &x_star) + f64::abs(noise.sample(&mut rng)))
        .collect();
    let rho = a.iter().fold(0.0f64, |r, v| r.max(v.abs()));
    LPInstance::new(m, d, a, b, vec![1.0; d], 0.1, rho, 1.0)
}

/// Planted solution of [`gen_lp_instance`], regenerated from the seed.
pub fn planted_solution(m: usize, d: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0);
    for _ in 0..m * d {
        let _: f64 = rng.sample(StandardNormal);
    }
    let e: Vec<f64> = (0..d).map(|_| rng.sample(Exp1)).collect();
    let total: f64 = e.iter().sum();
    e.iter().map(|v| v / total).collect()
}
