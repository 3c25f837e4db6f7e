//! Differentially private multiplicative-weights algorithms with an
//! index-accelerated exponential mechanism.
//!
//! The exponential mechanism is realized through the Gumbel-max trick. The
//! lazy variant only perturbs the top-k candidates returned by a k-maximum
//! inner product index plus a binomially sized sample of the remaining
//! candidates, which brings the expected per-call work down to O(√m) score
//! evaluations while sampling from exactly the same distribution.
//!
//! Modules, bottom-up:
//!
//! * [`sampling`]: Gumbel primitives and the lazy Gumbel samplers.
//! * [`mips`]: flat, IVF and HNSW top-k inner product indices.
//! * [`mechanism`]: exponential mechanism, LazyEM, complement augmentation
//!   and privacy accounting.
//! * [`mwem`]: classic MWEM and Fast-MWEM for linear query release.
//! * [`lpsolve`]: scalar-private and constraint-private LP feasibility solvers.
//! * [`harness`]: instance generators, experiment runners and CSV output.

pub mod error;
pub mod harness;
pub mod lpsolve;
pub mod mechanism;
pub mod mips;
pub mod mwem;
pub mod sampling;

pub use error::{Error, Result};

/// Seeded random stream used throughout the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Builds the crate's deterministic random stream from a seed.
pub fn seeded_rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}

/// Inner product with a fixed four-lane accumulation order, so results are
/// bit-identical across calls regardless of how the caller slices data.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let (rem_a, rem_b) = (chunks_a.remainder(), chunks_b.remainder());
    for (x, y) in chunks_a.zip(chunks_b) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in rem_a.iter().zip(rem_b) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let (rem_a, rem_b) = (chunks_a.remainder(), chunks_b.remainder());
    for (x, y) in chunks_a.zip(chunks_b) {
        let d0 = x[0] - y[0];
        let d1 = x[1] - y[1];
        let d2 = x[2] - y[2];
        let d3 = x[3] - y[3];
        acc[0] += d0 * d0;
        acc[1] += d1 * d1;
        acc[2] += d2 * d2;
        acc[3] += d3 * d3;
    }
    let mut tail = 0.0;
    for (x, y) in rem_a.iter().zip(rem_b) {
        tail += (x - y) * (x - y);
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
