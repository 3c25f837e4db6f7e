use super::{top_k_of, TopKResult, VectorSet};

/// Exhaustive scan; always exact.
#[derive(Debug, Clone)]
pub struct FlatIndex {
    vectors: VectorSet,
}

impl FlatIndex {
    pub fn new(vectors: VectorSet) -> Self {
        Self { vectors }
    }

    pub fn vectors(&self) -> &VectorSet {
        &self.vectors
    }

    pub(crate) fn query(&self, q: &[f64], k: usize) -> TopKResult {
        let scored: Vec<(usize, f64)> = self.vectors.inner_products(q).into_iter().enumerate().collect();
        let (indices, scores) = top_k_of(scored, k);
        TopKResult { indices, scores, exact: true, evaluations: self.vectors.len() }
    }
}
