use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use super::reduction::{mips_to_knn, QueryTransform};
use super::{top_k_of, IndexConfig, TopKResult, VectorSet};
use crate::sampling::open_unit;
use crate::error::Result;
use crate::{seeded_rng, squared_distance};

const MAX_LEVEL: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist: f64,
    id: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist.total_cmp(&other.dist).then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

trait Visited {
    /// Marks `id`; returns true if it was not yet marked.
    fn insert(&mut self, id: u32) -> bool;
}

/// Generation-stamped visited marks, reused across insertions.
struct StampSet {
    stamps: Vec<u32>,
    current: u32,
}

impl StampSet {
    fn new(n: usize) -> Self {
        Self { stamps: vec![0; n], current: 0 }
    }

    fn reset(&mut self) {
        self.current = self.current.wrapping_add(1);
        if self.current == 0 {
            self.stamps.fill(0);
            self.current = 1;
        }
    }
}

impl Visited for StampSet {
    fn insert(&mut self, id: u32) -> bool {
        let slot = &mut self.stamps[id as usize];
        if *slot == self.current {
            false
        } else {
            *slot = self.current;
            true
        }
    }
}

struct BitSet(Vec<u64>);

impl BitSet {
    fn new(n: usize) -> Self {
        Self(vec![0; n.div_ceil(64)])
    }
}

impl Visited for BitSet {
    fn insert(&mut self, id: u32) -> bool {
        let (word, bit) = (id as usize / 64, id % 64);
        let fresh = self.0[word] & (1 << bit) == 0;
        self.0[word] |= 1 << bit;
        fresh
    }
}

/// Hierarchical navigable small-world graph over the norm-padded vectors,
/// searched with Euclidean distance.
#[derive(Debug, Clone)]
pub struct HnswIndex {
    vectors: VectorSet,
    padded: VectorSet,
    transform: QueryTransform,
    /// `links[node][layer]`, one list per layer the node lives on.
    links: Vec<Vec<Vec<u32>>>,
    entry: u32,
    max_level: usize,
    m_neighbors: usize,
    ef_construction: usize,
    ef_search: usize,
}

impl HnswIndex {
    pub(crate) fn build(vectors: VectorSet, config: &IndexConfig) -> Result<Self> {
        let (padded, transform, _) = mips_to_knn(&vectors)?;
        let n = vectors.len();
        let mut rng = seeded_rng(config.seed);
        let level_mult = 1.0 / (config.m_neighbors as f64).ln();
        let mut index = Self {
            vectors,
            padded,
            transform,
            links: Vec::with_capacity(n),
            entry: 0,
            max_level: 0,
            m_neighbors: config.m_neighbors,
            ef_construction: config.ef_construction,
            ef_search: config.ef_search,
        };
        let mut visited = StampSet::new(n);
        for id in 0..n {
            let level = ((-open_unit(&mut rng).ln() * level_mult).floor() as usize).min(MAX_LEVEL);
            index.insert(id as u32, level, &mut visited);
        }
        index.repair_reachability(&mut visited);
        Ok(index)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        vectors: VectorSet,
        links: Vec<Vec<Vec<u32>>>,
        entry: u32,
        max_level: usize,
        m_neighbors: usize,
        ef_construction: usize,
        ef_search: usize,
    ) -> Result<Self> {
        let (padded, transform, _) = mips_to_knn(&vectors)?;
        Ok(Self { vectors, padded, transform, links, entry, max_level, m_neighbors, ef_construction, ef_search })
    }

    pub fn vectors(&self) -> &VectorSet {
        &self.vectors
    }

    pub fn m_neighbors(&self) -> usize {
        self.m_neighbors
    }

    pub fn ef_construction(&self) -> usize {
        self.ef_construction
    }

    pub fn ef_search(&self) -> usize {
        self.ef_search
    }

    pub(crate) fn links(&self) -> &[Vec<Vec<u32>>] {
        &self.links
    }

    pub(crate) fn entry(&self) -> u32 {
        self.entry
    }

    pub(crate) fn max_level(&self) -> usize {
        self.max_level
    }

    fn max_links(&self, layer: usize) -> usize {
        if layer == 0 {
            2 * self.m_neighbors
        } else {
            self.m_neighbors
        }
    }

    fn dist_to(&self, q: &[f64], id: u32) -> f64 {
        squared_distance(q, self.padded.row(id as usize))
    }

    fn dist_between(&self, a: u32, b: u32) -> f64 {
        squared_distance(self.padded.row(a as usize), self.padded.row(b as usize))
    }

    fn insert(&mut self, id: u32, level: usize, visited: &mut StampSet) {
        self.links.push(vec![Vec::new(); level + 1]);
        if id == 0 {
            self.entry = 0;
            self.max_level = level;
            return;
        }
        let q = self.padded.row(id as usize).to_vec();
        let mut evals = 0;
        let mut ep = Candidate { dist: self.dist_to(&q, self.entry), id: self.entry };
        for layer in (level + 1..=self.max_level).rev() {
            ep = self.greedy(&q, ep, layer, &mut evals);
        }
        let mut entries = vec![ep];
        for layer in (0..=level.min(self.max_level)).rev() {
            visited.reset();
            let found = self.search_layer(&q, &entries, self.ef_construction, layer, visited, &mut evals);
            let chosen = self.select_neighbors(&found, self.m_neighbors);
            self.links[id as usize][layer] = chosen.clone();
            let cap = self.max_links(layer);
            for nb in chosen {
                let list = &mut self.links[nb as usize][layer];
                list.push(id);
                if list.len() > cap {
                    self.shrink(nb, layer, cap);
                }
            }
            entries = found;
        }
        if level > self.max_level {
            self.max_level = level;
            self.entry = id;
        }
    }

    /// Keeps the `cap` closest links of `node` on `layer`.
    fn shrink(&mut self, node: u32, layer: usize, cap: usize) {
        let mut scored: Vec<Candidate> = self.links[node as usize][layer]
            .iter()
            .map(|&nb| Candidate { dist: self.dist_between(node, nb), id: nb })
            .collect();
        scored.sort_unstable();
        scored.truncate(cap);
        self.links[node as usize][layer] = scored.into_iter().map(|c| c.id).collect();
    }

    /// Diversity heuristic: keep a candidate only if it is closer to the
    /// query than to every neighbour kept so far, then top up with the
    /// pruned candidates in distance order.
    fn select_neighbors(&self, sorted: &[Candidate], m: usize) -> Vec<u32> {
        let mut kept: Vec<u32> = Vec::with_capacity(m);
        let mut pruned = Vec::new();
        for c in sorted {
            if kept.len() >= m {
                break;
            }
            if kept.iter().all(|&s| self.dist_between(c.id, s) > c.dist) {
                kept.push(c.id);
            } else {
                pruned.push(c.id);
            }
        }
        for id in pruned {
            if kept.len() >= m {
                break;
            }
            kept.push(id);
        }
        kept
    }

    fn greedy(&self, q: &[f64], mut best: Candidate, layer: usize, evals: &mut usize) -> Candidate {
        loop {
            let mut improved = false;
            for &nb in &self.links[best.id as usize][layer] {
                *evals += 1;
                let d = self.dist_to(q, nb);
                let cand = Candidate { dist: d, id: nb };
                if cand < best {
                    best = cand;
                    improved = true;
                }
            }
            if !improved {
                return best;
            }
        }
    }

    /// Best-first beam search on one layer; returns up to `ef` nodes sorted by
    /// ascending distance.
    fn search_layer<V: Visited>(
        &self,
        q: &[f64],
        entries: &[Candidate],
        ef: usize,
        layer: usize,
        visited: &mut V,
        evals: &mut usize,
    ) -> Vec<Candidate> {
        let mut frontier: BinaryHeap<Reverse<Candidate>> = BinaryHeap::with_capacity(ef * 2);
        let mut best: BinaryHeap<Candidate> = BinaryHeap::with_capacity(ef + 1);
        for &e in entries {
            if visited.insert(e.id) {
                frontier.push(Reverse(e));
                best.push(e);
                if best.len() > ef {
                    best.pop();
                }
            }
        }
        while let Some(Reverse(current)) = frontier.pop() {
            if best.len() >= ef && best.peek().is_some_and(|w| current.dist > w.dist) {
                break;
            }
            for &nb in &self.links[current.id as usize][layer] {
                if !visited.insert(nb) {
                    continue;
                }
                *evals += 1;
                let cand = Candidate { dist: self.dist_to(q, nb), id: nb };
                if best.len() < ef || best.peek().is_some_and(|w| cand < *w) {
                    frontier.push(Reverse(cand));
                    best.push(cand);
                    if best.len() > ef {
                        best.pop();
                    }
                }
            }
        }
        best.into_sorted_vec()
    }

    fn reachable_from_entry(&self) -> Vec<bool> {
        let n = self.links.len();
        let mut seen = vec![false; n];
        self.mark_reachable(self.entry, &mut seen);
        seen
    }

    fn mark_reachable(&self, start: u32, seen: &mut [bool]) {
        if seen[start as usize] {
            return;
        }
        seen[start as usize] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.links[u as usize][0] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    queue.push_back(v);
                }
            }
        }
    }

    /// Links every base-layer node the entry point cannot reach to its
    /// nearest reachable node, in both directions.
    fn repair_reachability(&mut self, visited: &mut StampSet) {
        let n = self.links.len();
        let mut seen = self.reachable_from_entry();
        for u in 0..n as u32 {
            if seen[u as usize] {
                continue;
            }
            let q = self.padded.row(u as usize).to_vec();
            let mut evals = 0;
            let mut ep = Candidate { dist: self.dist_to(&q, self.entry), id: self.entry };
            for layer in (1..=self.max_level).rev() {
                ep = self.greedy(&q, ep, layer, &mut evals);
            }
            visited.reset();
            let found = self.search_layer(&q, &[ep], self.ef_construction, 0, visited, &mut evals);
            let anchor = found.iter().find(|c| seen[c.id as usize] && c.id != u).map_or(self.entry, |c| c.id);
            self.links[anchor as usize][0].push(u);
            self.links[u as usize][0].push(anchor);
            self.mark_reachable(u, &mut seen);
        }
    }

    /// Base-layer nodes not reachable from the entry point.
    pub fn unreachable_count(&self) -> usize {
        self.reachable_from_entry().iter().filter(|r| !**r).count()
    }

    pub(crate) fn query(&self, q: &[f64], k: usize) -> TopKResult {
        let lifted = self.transform.apply(q);
        let mut evals = 1;
        let mut ep = Candidate { dist: self.dist_to(&lifted, self.entry), id: self.entry };
        for layer in (1..=self.max_level).rev() {
            ep = self.greedy(&lifted, ep, layer, &mut evals);
        }
        let ef = self.ef_search.max(k);
        let mut visited = BitSet::new(self.links.len());
        let found = self.search_layer(&lifted, &[ep], ef, 0, &mut visited, &mut evals);

        let mut scored: Vec<(usize, f64)> = found
            .iter()
            .take(k)
            .map(|c| (c.id as usize, crate::dot(self.vectors.row(c.id as usize), q)))
            .collect();
        if scored.len() < k {
            // Only reachable when the graph is smaller than k; scan instead.
            scored = self.vectors.inner_products(q).into_iter().enumerate().collect();
            evals += self.vectors.len();
        } else {
            evals += k;
        }
        let (indices, scores) = top_k_of(scored, k);
        TopKResult { indices, scores, exact: false, evaluations: evals }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mips::{build_index, query_topk, IndexConfig, MipsIndex};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, d: usize, seed: u64) -> VectorSet {
        let mut rng = seeded_rng(seed);
        VectorSet::new((0..n * d).map(|_| rng.sample(StandardNormal)).collect(), d).unwrap()
    }

    #[test]
    fn base_layer_is_fully_reachable() {
        let v = gaussian(2000, 16, 1);
        let ix = build_index(v, &IndexConfig { m_neighbors: 4, ..IndexConfig::hnsw() }).unwrap();
        let MipsIndex::Hnsw(h) = ix else { unreachable!() };
        assert_eq!(h.unreachable_count(), 0);
    }

    #[test]
    fn duplicate_vectors_stay_reachable() {
        let rows: Vec<Vec<f64>> = (0..300).map(|i| vec![(i % 3) as f64, 1.0]).collect();
        let v = VectorSet::from_rows(&rows).unwrap();
        let ix = build_index(v, &IndexConfig { m_neighbors: 2, ..IndexConfig::hnsw() }).unwrap();
        let MipsIndex::Hnsw(h) = &ix else { unreachable!() };
        assert_eq!(h.unreachable_count(), 0);
        let r = query_topk(&ix, &[1.0, 0.0], 100).unwrap();
        assert_eq!(r.indices.len(), 100);
        assert!(r.scores.iter().all(|&s| s == 2.0));
    }

    #[test]
    fn recall_on_small_gaussian_set() {
        let v = gaussian(3000, 24, 2);
        let queries = gaussian(20, 24, 3);
        let flat = build_index(v.clone(), &IndexConfig::flat()).unwrap();
        let hnsw = build_index(v, &IndexConfig::hnsw()).unwrap();
        let k = 55;
        let mut hits = 0;
        for q in queries.rows() {
            let truth = query_topk(&flat, q, k).unwrap().indices;
            let got = query_topk(&hnsw, q, k).unwrap().indices;
            hits += got.iter().filter(|i| truth.contains(i)).count();
        }
        let recall = hits as f64 / (20 * k) as f64;
        assert!(recall >= 0.9, "recall {recall}");
    }
}
