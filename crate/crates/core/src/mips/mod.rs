//! Top-k maximum inner product search.
//!
//! Three index flavors share one interface: an exhaustive [`FlatIndex`], an
//! inverted-file [`IvfIndex`] over k-means cells, and an [`HnswIndex`]
//! proximity graph built on the norm-padded kNN transform of the vectors.
//! Indices are immutable once built and may be queried concurrently.

mod flat;
mod hnsw;
mod ivf;
mod kmeans;
mod persist;
mod reduction;

pub use flat::FlatIndex;
pub use hnsw::HnswIndex;
pub use ivf::IvfIndex;
pub use persist::{FORMAT_VERSION, MAGIC};
pub use reduction::{mips_to_knn, QueryTransform};

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// `n` row vectors of dimension `d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSet {
    data: Vec<f64>,
    dim: usize,
}

impl VectorSet {
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("vector dimension must be at least 1");
        }
        if !data.len().is_multiple_of(dim) {
            return invalid(format!("{} values do not split into rows of {dim}", data.len()));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { data, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        Self::new(rows.concat(), dim)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Inner products of `q` against every row.
    pub fn inner_products(&self, q: &[f64]) -> Vec<f64> {
        self.rows().map(|r| crate::dot(r, q)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexFlavor {
    Flat,
    Ivf,
    Hnsw,
}

impl IndexFlavor {
    pub fn as_str(self) -> &'static str {
        match self {
            IndexFlavor::Flat => "flat",
            IndexFlavor::Ivf => "ivf",
            IndexFlavor::Hnsw => "hnsw",
        }
    }
}

impl fmt::Display for IndexFlavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Build and search parameters. Unset IVF sizes resolve at build time to
/// `nlist = max(2⌈√n⌉, 20)` (clamped to `n`) and `nprobe = min(⌊nlist/4⌋, 10)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndexConfig {
    pub flavor: IndexFlavor,
    pub nlist: Option<usize>,
    pub nprobe: Option<usize>,
    pub m_neighbors: usize,
    pub ef_construction: usize,
    pub ef_search: usize,
    pub seed: u64,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            flavor: IndexFlavor::Flat,
            nlist: None,
            nprobe: None,
            m_neighbors: 32,
            ef_construction: 100,
            ef_search: 64,
            seed: 0,
        }
    }
}

impl IndexConfig {
    pub fn flat() -> Self {
        Self::default()
    }

    pub fn ivf() -> Self {
        Self { flavor: IndexFlavor::Ivf, ..Self::default() }
    }

    pub fn hnsw() -> Self {
        Self { flavor: IndexFlavor::Hnsw, ..Self::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_neighbors < 2 {
            return invalid("m_neighbors must be at least 2");
        }
        if self.ef_construction == 0 || self.ef_search == 0 {
            return invalid("ef parameters must be positive");
        }
        if self.nlist == Some(0) || self.nprobe == Some(0) {
            return invalid("nlist and nprobe must be positive");
        }
        if let (Some(nlist), Some(nprobe)) = (self.nlist, self.nprobe) {
            if nprobe > nlist {
                return invalid(format!("nprobe {nprobe} exceeds nlist {nlist}"));
            }
        }
        Ok(())
    }

    /// Resolved `(nlist, nprobe)` for `n` vectors.
    pub fn ivf_sizes(&self, n: usize) -> (usize, usize) {
        let default_nlist = (2 * (n as f64).sqrt().ceil() as usize).max(20);
        let nlist = self.nlist.unwrap_or(default_nlist).clamp(1, n.max(1));
        let default_nprobe = (nlist / 4).min(10);
        let nprobe = self.nprobe.unwrap_or(default_nprobe).clamp(1, nlist);
        (nlist, nprobe)
    }
}

/// Answer to a top-k query, sorted by descending inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct TopKResult {
    pub indices: Vec<usize>,
    pub scores: Vec<f64>,
    /// Whether the answer is guaranteed to be the exact top-k.
    pub exact: bool,
    /// Vector comparisons performed (inner products or distances).
    pub evaluations: usize,
}

/// A built k-MIPS index of any flavor.
#[derive(Debug, Clone)]
pub enum MipsIndex {
    Flat(FlatIndex),
    Ivf(IvfIndex),
    Hnsw(HnswIndex),
}

impl MipsIndex {
    pub fn vectors(&self) -> &VectorSet {
        match self {
            MipsIndex::Flat(ix) => ix.vectors(),
            MipsIndex::Ivf(ix) => ix.vectors(),
            MipsIndex::Hnsw(ix) => ix.vectors(),
        }
    }

    pub fn len(&self) -> usize {
        self.vectors().len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors().is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors().dim()
    }

    pub fn flavor(&self) -> IndexFlavor {
        match self {
            MipsIndex::Flat(_) => IndexFlavor::Flat,
            MipsIndex::Ivf(_) => IndexFlavor::Ivf,
            MipsIndex::Hnsw(_) => IndexFlavor::Hnsw,
        }
    }

    /// Flavor plus resolved parameters, e.g. `ivf(nlist=20,nprobe=5)`.
    pub fn label(&self) -> String {
        match self {
            MipsIndex::Flat(_) => "flat".to_string(),
            MipsIndex::Ivf(ix) => format!("ivf(nlist={},nprobe={})", ix.nlist(), ix.nprobe()),
            MipsIndex::Hnsw(ix) => format!(
                "hnsw(M={},efc={},efs={})",
                ix.m_neighbors(),
                ix.ef_construction(),
                ix.ef_search()
            ),
        }
    }

    /// Exact answers are guaranteed for every query.
    pub fn is_exact(&self) -> bool {
        match self {
            MipsIndex::Flat(_) => true,
            MipsIndex::Ivf(ix) => ix.nprobe() == ix.nlist(),
            MipsIndex::Hnsw(_) => false,
        }
    }

    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        persist::save(self, w)
    }

    pub fn load<R: Read>(r: R) -> Result<Self> {
        persist::load(r)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        persist::decode(bytes)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        persist::encode(self)
    }
}

/// Builds an index over `vectors`. Deterministic given `config.seed`.
pub fn build_index(vectors: VectorSet, config: &IndexConfig) -> Result<MipsIndex> {
    config.validate()?;
    if vectors.is_empty() {
        return invalid("cannot index an empty vector set");
    }
    Ok(match config.flavor {
        IndexFlavor::Flat => MipsIndex::Flat(FlatIndex::new(vectors)),
        IndexFlavor::Ivf => MipsIndex::Ivf(IvfIndex::build(vectors, config)),
        IndexFlavor::Hnsw => MipsIndex::Hnsw(HnswIndex::build(vectors, config)?),
    })
}

/// Top-`k` rows of the index by inner product with `q`.
pub fn query_topk(index: &MipsIndex, q: &[f64], k: usize) -> Result<TopKResult> {
    let n = index.len();
    if q.len() != index.dim() {
        return Err(Error::DimensionMismatch { expected: index.dim(), got: q.len() });
    }
    if k == 0 || k > n {
        return invalid(format!("k = {k} must lie in 1..={n}"));
    }
    if let Some(pos) = q.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(pos));
    }
    Ok(match index {
        MipsIndex::Flat(ix) => ix.query(q, k),
        MipsIndex::Ivf(ix) => ix.query(q, k),
        MipsIndex::Hnsw(ix) => ix.query(q, k),
    })
}

/// Largest observed approximate-top-k slack over `queries`:
/// `max_q (max_{i∉S} ⟨q, v_i⟩ − min_{i∈S} ⟨q, v_i⟩)⁺`, with `S` the index's
/// answer and the scores from an exhaustive scan.
pub fn measure_slack(index: &MipsIndex, queries: &VectorSet, k: usize) -> Result<f64> {
    if queries.is_empty() {
        return invalid("slack measurement needs at least one query");
    }
    let mut worst = 0.0f64;
    for q in queries.rows() {
        let answer = query_topk(index, q, k)?;
        let scores = index.vectors().inner_products(q);
        let mut inside = vec![false; scores.len()];
        for &i in &answer.indices {
            inside[i] = true;
        }
        let min_in = answer.indices.iter().map(|&i| scores[i]).fold(f64::INFINITY, f64::min);
        let max_out = scores
            .iter()
            .zip(&inside)
            .filter(|(_, &member)| !member)
            .map(|(s, _)| *s)
            .fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(max_out - min_in);
    }
    Ok(worst.max(0.0))
}

/// Sorts `(index, score)` candidates by descending score (ties to lower
/// index) and keeps the first `k`.
pub(crate) fn top_k_of(mut candidates: Vec<(usize, f64)>, k: usize) -> (Vec<usize>, Vec<f64>) {
    let cmp = |a: &(usize, f64), b: &(usize, f64)| crate::sampling::descending(a.1, a.0, b.1, b.0);
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k - 1, cmp);
        candidates.truncate(k);
    }
    candidates.sort_by(cmp);
    candidates.into_iter().unzip()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_set_validation() {
        assert!(VectorSet::new(vec![1.0, 2.0, 3.0], 2).is_err());
        assert!(VectorSet::new(vec![1.0], 0).is_err());
        assert!(VectorSet::new(vec![1.0, f64::NAN], 2).is_err());
        assert!(VectorSet::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        let v = VectorSet::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.row(1), &[0.0, 1.0]);
    }

    #[test]
    fn ivf_defaults_follow_the_sizing_rule() {
        let cfg = IndexConfig::ivf();
        assert_eq!(cfg.ivf_sizes(10_000), (200, 10));
        assert_eq!(cfg.ivf_sizes(50), (20, 5));
        // Clamped to n.
        assert_eq!(cfg.ivf_sizes(7), (7, 1));
        let explicit = IndexConfig { nlist: Some(8), nprobe: Some(8), ..IndexConfig::ivf() };
        assert_eq!(explicit.ivf_sizes(100), (8, 8));
    }

    #[test]
    fn config_validation() {
        assert!(IndexConfig { nlist: Some(4), nprobe: Some(5), ..IndexConfig::ivf() }.validate().is_err());
        assert!(IndexConfig { m_neighbors: 1, ..IndexConfig::hnsw() }.validate().is_err());
        assert!(IndexConfig::hnsw().validate().is_ok());
    }

    #[test]
    fn empty_set_is_rejected() {
        let v = VectorSet::new(vec![], 3).unwrap();
        assert!(build_index(v, &IndexConfig::flat()).is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg: IndexConfig = serde_json::from_str(r#"{"flavor":"hnsw","ef_search":80}"#).unwrap();
        assert_eq!(cfg.flavor, IndexFlavor::Hnsw);
        assert_eq!(cfg.ef_search, 80);
        assert_eq!(cfg.m_neighbors, 32);
        assert!(serde_json::from_str::<IndexConfig>(r#"{"flavour":"flat"}"#).is_err());
    }
}
