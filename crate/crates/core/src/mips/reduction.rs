use super::VectorSet;
use crate::error::{invalid, Result};

/// Lifts queries into the padded space: `q ↦ [q, 0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryTransform {
    dim: usize,
}

impl QueryTransform {
    pub fn input_dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, q: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(q.len() + 1);
        out.extend_from_slice(q);
        out.push(0.0);
        out
    }
}

/// Norm-padding reduction from maximum inner product search to Euclidean
/// nearest neighbour search.
///
/// With `M = max_i ‖k_i‖²`, each row becomes `[k_i, √(M − ‖k_i‖²)]`, so all
/// rows share squared norm `M` and `‖q' − k_i'‖² = ‖q‖² + M − 2⟨q, k_i⟩`.
/// Returns the padded rows, the query transform and `M`; fails if a squared
/// norm overflows.
pub fn mips_to_knn(vectors: &VectorSet) -> Result<(VectorSet, QueryTransform, f64)> {
    let dim = vectors.dim();
    let norms: Vec<f64> = vectors.rows().map(|r| crate::dot(r, r)).collect();
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    if !max_norm.is_finite() {
        return invalid("squared vector norms overflow");
    }
    let mut data = Vec::with_capacity(vectors.len() * (dim + 1));
    for (row, norm) in vectors.rows().zip(&norms) {
        data.extend_from_slice(row);
        data.push((max_norm - norm).max(0.0).sqrt());
    }
    let padded = VectorSet::new(data, dim + 1)?;
    Ok((padded, QueryTransform { dim }, max_norm))
}
