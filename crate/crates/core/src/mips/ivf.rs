use super::kmeans::{nearest, train};
use super::{top_k_of, IndexConfig, TopKResult, VectorSet};
use crate::seeded_rng;

/// Inverted-file index: vectors are bucketed by nearest k-means centroid and
/// a query scans only the `nprobe` cells whose centroids have the largest
/// inner product with it.
#[derive(Debug, Clone)]
pub struct IvfIndex {
    vectors: VectorSet,
    centroids: Vec<f64>,
    /// CSR layout: cell `c` holds `ids[offsets[c]..offsets[c + 1]]`.
    offsets: Vec<usize>,
    ids: Vec<usize>,
    nprobe: usize,
}

impl IvfIndex {
    pub(crate) fn build(vectors: VectorSet, config: &IndexConfig) -> Self {
        let (nlist, nprobe) = config.ivf_sizes(vectors.len());
        let mut rng = seeded_rng(config.seed);
        let centroids = train(&vectors, nlist, &mut rng);
        let dim = vectors.dim();
        let cells: Vec<usize> = vectors.rows().map(|r| nearest(&centroids, dim, r).0).collect();
        let (offsets, ids) = csr(&cells, nlist);
        Self { vectors, centroids, offsets, ids, nprobe }
    }

    pub(crate) fn from_parts(
        vectors: VectorSet,
        centroids: Vec<f64>,
        offsets: Vec<usize>,
        ids: Vec<usize>,
        nprobe: usize,
    ) -> Self {
        Self { vectors, centroids, offsets, ids, nprobe }
    }

    pub fn vectors(&self) -> &VectorSet {
        &self.vectors
    }

    pub fn nlist(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn nprobe(&self) -> usize {
        self.nprobe
    }

    pub(crate) fn centroids(&self) -> &[f64] {
        &self.centroids
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub(crate) fn ids(&self) -> &[usize] {
        &self.ids
    }

    /// Members of cell `c`.
    pub fn cell(&self, c: usize) -> &[usize] {
        &self.ids[self.offsets[c]..self.offsets[c + 1]]
    }

    pub(crate) fn query(&self, q: &[f64], k: usize) -> TopKResult {
        let dim = self.vectors.dim();
        let nlist = self.nlist();
        let cell_scores: Vec<(usize, f64)> = self
            .centroids
            .chunks_exact(dim)
            .map(|c| crate::dot(c, q))
            .enumerate()
            .collect();
        let (order, _) = top_k_of(cell_scores, nlist);

        let mut candidates = Vec::new();
        let mut probed = 0;
        for &c in &order {
            if probed >= self.nprobe && candidates.len() >= k {
                break;
            }
            candidates.extend(self.cell(c).iter().map(|&i| (i, crate::dot(self.vectors.row(i), q))));
            probed += 1;
        }
        let evaluations = nlist + candidates.len();
        let (indices, scores) = top_k_of(candidates, k);
        TopKResult { indices, scores, exact: probed == nlist, evaluations }
    }
}

fn csr(cells: &[usize], nlist: usize) -> (Vec<usize>, Vec<usize>) {
    let mut offsets = vec![0usize; nlist + 1];
    for &c in cells {
        offsets[c + 1] += 1;
    }
    for c in 0..nlist {
        offsets[c + 1] += offsets[c];
    }
    let mut cursor = offsets.clone();
    let mut ids = vec![0usize; cells.len()];
    for (i, &c) in cells.iter().enumerate() {
        ids[cursor[c]] = i;
        cursor[c] += 1;
    }
    (offsets, ids)
}
