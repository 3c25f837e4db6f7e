use rand::Rng;

use super::VectorSet;
use crate::squared_distance;

/// Lloyd iterations run during IVF training; there is no convergence test.
pub(crate) const LLOYD_ITERATIONS: usize = 20;

/// Training points kept per centroid.
const POINTS_PER_CENTROID: usize = 64;

/// k-means over the rows of `data` with k-means++ seeding.
/// Returns row-major centroids (`k × dim`).
pub(crate) fn train<R: Rng + ?Sized>(data: &VectorSet, k: usize, rng: &mut R) -> Vec<f64> {
    let n = data.len();
    let dim = data.dim();
    let sample: Vec<usize> = if n > POINTS_PER_CENTROID * k {
        rand::seq::index::sample(rng, n, POINTS_PER_CENTROID * k).into_vec()
    } else {
        (0..n).collect()
    };

    let mut centroids = seed_plus_plus(data, &sample, k, rng);
    let mut assign = vec![0usize; sample.len()];
    for _ in 0..LLOYD_ITERATIONS {
        for (slot, &i) in assign.iter_mut().zip(&sample) {
            *slot = nearest(&centroids, dim, data.row(i)).0;
        }
        repair_empty(data, &sample, &mut assign, &centroids, k);
        centroids = means(data, &sample, &assign, k);
    }
    centroids
}

/// Index of and squared distance to the nearest centroid, ties to the lower id.
pub(crate) fn nearest(centroids: &[f64], dim: usize, x: &[f64]) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (c, centroid) in centroids.chunks_exact(dim).enumerate() {
        let d = squared_distance(centroid, x);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn seed_plus_plus<R: Rng + ?Sized>(data: &VectorSet, sample: &[usize], k: usize, rng: &mut R) -> Vec<f64> {
    let dim = data.dim();
    let mut centroids = Vec::with_capacity(k * dim);
    let first = sample[rng.random_range(0..sample.len())];
    centroids.extend_from_slice(data.row(first));
    let mut d2: Vec<f64> = sample.iter().map(|&i| squared_distance(data.row(i), data.row(first))).collect();

    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = d2.len() - 1;
            for (j, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = j;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..sample.len())
        };
        let row = data.row(sample[pick]);
        centroids.extend_from_slice(row);
        for (d, &i) in d2.iter_mut().zip(sample) {
            *d = d.min(squared_distance(data.row(i), row));
        }
    }
    centroids
}

/// Moves the farthest member of the largest cluster into each empty cluster.
fn repair_empty(data: &VectorSet, sample: &[usize], assign: &mut [usize], centroids: &[f64], k: usize) {
    let dim = data.dim();
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assign.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let largest = (0..k).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).unwrap_or(0);
        if sizes[largest] < 2 {
            return;
        }
        let centroid = &centroids[largest * dim..(largest + 1) * dim];
        let mut far = (usize::MAX, f64::NEG_INFINITY);
        for (j, &i) in sample.iter().enumerate() {
            if assign[j] == largest {
                let d = squared_distance(data.row(i), centroid);
                if d > far.1 {
                    far = (j, d);
                }
            }
        }
        assign[far.0] = empty;
    }
}

fn means(data: &VectorSet, sample: &[usize], assign: &[usize], k: usize) -> Vec<f64> {
    let dim = data.dim();
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (&i, &a) in sample.iter().zip(assign) {
        counts[a] += 1;
        for (s, x) in sums[a * dim..(a + 1) * dim].iter_mut().zip(data.row(i)) {
            *s += x;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 {
            for s in &mut sums[c * dim..(c + 1) * dim] {
                *s /= count as f64;
            }
        }
    }
    sums
}
