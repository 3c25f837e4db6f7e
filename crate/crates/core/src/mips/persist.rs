//! Binary index format.
//!
//! All integers and floats are little-endian. Layout:
//!
//! ```text
//! magic "FMWM" | version u16 | flavor u8 | n u64 | dim u64 | n·dim f64
//! ivf:  nprobe u64 | nlist u64 | nlist·dim f64 | (nlist+1) u64 offsets | n u64 ids
//! hnsw: m u64 | ef_construction u64 | ef_search u64 | entry u64 | max_level u8
//!       then per node: level u8, and per layer 0..=level: count u32, count u32 ids
//! ```

use std::io::{Read, Write};

use super::{FlatIndex, HnswIndex, IvfIndex, MipsIndex, VectorSet};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"FMWM";
pub const FORMAT_VERSION: u16 = 1;

const FLAT_TAG: u8 = 0;
const IVF_TAG: u8 = 1;
const HNSW_TAG: u8 = 2;
const MAX_LEVEL: usize = 16;

pub(crate) fn save<W: Write>(index: &MipsIndex, mut w: W) -> Result<()> {
    w.write_all(&encode(index))?;
    Ok(())
}

pub(crate) fn load<R: Read>(mut r: R) -> Result<MipsIndex> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub(crate) fn encode(index: &MipsIndex) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let tag = match index {
        MipsIndex::Flat(_) => FLAT_TAG,
        MipsIndex::Ivf(_) => IVF_TAG,
        MipsIndex::Hnsw(_) => HNSW_TAG,
    };
    out.push(tag);
    let v = index.vectors();
    put_u64(&mut out, v.len() as u64);
    put_u64(&mut out, v.dim() as u64);
    put_f64s(&mut out, v.as_slice());
    match index {
        MipsIndex::Flat(_) => {}
        MipsIndex::Ivf(ix) => {
            put_u64(&mut out, ix.nprobe() as u64);
            put_u64(&mut out, ix.nlist() as u64);
            put_f64s(&mut out, ix.centroids());
            for &o in ix.offsets() {
                put_u64(&mut out, o as u64);
            }
            for &i in ix.ids() {
                put_u64(&mut out, i as u64);
            }
        }
        MipsIndex::Hnsw(ix) => {
            put_u64(&mut out, ix.m_neighbors() as u64);
            put_u64(&mut out, ix.ef_construction() as u64);
            put_u64(&mut out, ix.ef_search() as u64);
            put_u64(&mut out, ix.entry() as u64);
            out.push(ix.max_level() as u8);
            for node in ix.links() {
                out.push((node.len() - 1) as u8);
                for layer in node {
                    out.extend_from_slice(&(layer.len() as u32).to_le_bytes());
                    for &id in layer {
                        out.extend_from_slice(&id.to_le_bytes());
                    }
                }
            }
        }
    }
    out
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64s(out: &mut Vec<u8>, vs: &[f64]) {
    for v in vs {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn malformed<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse(msg.into()))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        match self.pos.checked_add(len) {
            Some(end) if end <= self.bytes.len() => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            _ => malformed(format!("truncated input at byte {}", self.pos)),
        }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// A `u64` count used as a size, checked against the bytes left.
    fn size(&mut self, elem_bytes: usize, what: &str) -> Result<usize> {
        let v = self.u64()?;
        match usize::try_from(v).ok().and_then(|c| c.checked_mul(elem_bytes)) {
            Some(total) if total <= self.remaining() => Ok(v as usize),
            _ => malformed(format!("{what} = {v} exceeds the input")),
        }
    }

    fn u64s(&mut self, count: usize) -> Result<Vec<u64>> {
        let raw = self.take(count.checked_mul(8).ok_or_else(|| Error::Parse("length overflow".into()))?)?;
        Ok(raw.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        Ok(self.u64s(count)?.into_iter().map(f64::from_bits).collect())
    }
}

pub(crate) fn decode(bytes: &[u8]) -> Result<MipsIndex> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4)? != MAGIC {
        return malformed("bad magic");
    }
    let version = cur.u16()?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let tag = cur.u8()?;
    let n = cur.size(0, "n")?;
    let dim = cur.size(0, "dim")?;
    if n == 0 || dim == 0 {
        return malformed("empty vector set");
    }
    let values = n.checked_mul(dim).filter(|v| v.checked_mul(8).is_some_and(|b| b <= cur.remaining()));
    let Some(values) = values else {
        return malformed("vector payload exceeds the input");
    };
    let vectors = VectorSet::new(cur.f64s(values)?, dim)?;

    let index = match tag {
        FLAT_TAG => MipsIndex::Flat(FlatIndex::new(vectors)),
        IVF_TAG => MipsIndex::Ivf(decode_ivf(&mut cur, vectors)?),
        HNSW_TAG => MipsIndex::Hnsw(decode_hnsw(&mut cur, vectors)?),
        other => return malformed(format!("unknown index flavor tag {other}")),
    };
    if cur.remaining() != 0 {
        return malformed(format!("{} trailing bytes", cur.remaining()));
    }
    Ok(index)
}

fn decode_ivf(cur: &mut Cursor<'_>, vectors: VectorSet) -> Result<IvfIndex> {
    let n = vectors.len();
    let dim = vectors.dim();
    let nprobe = cur.size(0, "nprobe")?;
    let nlist = cur.size(dim * 8, "nlist")?;
    if nlist == 0 || nlist > n || nprobe == 0 || nprobe > nlist {
        return malformed(format!("invalid cell counts nlist = {nlist}, nprobe = {nprobe}"));
    }
    let centroids = cur.f64s(nlist * dim)?;
    if centroids.iter().any(|c| !c.is_finite()) {
        return malformed("non-finite centroid");
    }
    let offsets: Vec<usize> = cur.u64s(nlist + 1)?.into_iter().map(|o| o as usize).collect();
    if offsets[0] != 0 || offsets[nlist] != n || offsets.windows(2).any(|w| w[0] > w[1]) {
        return malformed("cell offsets are not a partition of the vectors");
    }
    let ids: Vec<usize> = cur.u64s(n)?.into_iter().map(|i| i as usize).collect();
    let mut seen = vec![false; n];
    for &i in &ids {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return malformed("cell members are not a permutation of the vectors");
        }
    }
    Ok(IvfIndex::from_parts(vectors, centroids, offsets, ids, nprobe))
}

fn decode_hnsw(cur: &mut Cursor<'_>, vectors: VectorSet) -> Result<HnswIndex> {
    let n = vectors.len();
    let m = cur.size(0, "m")?;
    let ef_construction = cur.size(0, "ef_construction")?;
    let ef_search = cur.size(0, "ef_search")?;
    let entry = cur.size(0, "entry")?;
    let max_level = cur.u8()? as usize;
    if m < 2 || ef_construction == 0 || ef_search == 0 {
        return malformed("invalid graph parameters");
    }
    if entry >= n || max_level > MAX_LEVEL {
        return malformed("invalid entry point");
    }
    let mut links: Vec<Vec<Vec<u32>>> = Vec::with_capacity(n.min(cur.remaining()));
    for _ in 0..n {
        let level = cur.u8()? as usize;
        if level > max_level {
            return malformed(format!("node level {level} exceeds the top level {max_level}"));
        }
        let mut layers = Vec::with_capacity(level + 1);
        for _ in 0..=level {
            let count = cur.u32()? as usize;
            let raw = cur.take(count.checked_mul(4).ok_or_else(|| Error::Parse("length overflow".into()))?)?;
            let ids: Vec<u32> = raw.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
            if ids.iter().any(|&i| i as usize >= n) {
                return malformed("link to a missing node");
            }
            layers.push(ids);
        }
        links.push(layers);
    }
    if links[entry].len() != max_level + 1 {
        return malformed("entry point is not on the top level");
    }
    for node in &links {
        for (layer, ids) in node.iter().enumerate() {
            if ids.iter().any(|&i| links[i as usize].len() <= layer) {
                return malformed("link to a node absent from that layer");
            }
        }
    }
    HnswIndex::from_parts(vectors, links, entry as u32, max_level, m, ef_construction, ef_search)
        .map_err(|e| Error::Parse(e.to_string()))
}
