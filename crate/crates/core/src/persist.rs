//! Binary index and dataset files.
//!
//! Index layout (little-endian), version 1:
//!
//! ```text
//! "IRGX" | u32 version | u32 n | u32 d | u32 m | u32 num_layers
//! u32 ef | u64 seed | u8 reverse_edges
//! u32 num_groups | num_groups x u32 group start rank
//! for each layer, for each rank present at that layer:
//!     u8 count | count x u32 neighbor rank
//! num_layers x u64 build distance computations
//! u32 CRC32 of everything above
//! ```
//!
//! A rank is present at every layer down to the leaf holding its group, so the
//! per-layer row lists are implied by the group starts. Counts are one byte,
//! so `m <= 255`.
//!
//! Dataset layout, version 1:
//!
//! ```text
//! "IRGD" | u32 version | u32 n | u32 d | u32 num_attrs
//! n x d x f32 vectors | n x num_attrs x f64 attributes | n x u32 original ids
//! u32 CRC32
//! ```
//!
//! Both store objects in rank order.

use std::path::Path;

use crate::dataset::SortedDataset;
use crate::error::{Error, Result};
use crate::index::{BuildParams, LayerGraph, SegmentTreeIndex};
use crate::tree::SegmentTree;
use crate::vector::{Rank, Vectors};

pub const INDEX_MAGIC: &[u8; 4] = b"IRGX";
pub const DATASET_MAGIC: &[u8; 4] = b"IRGD";
pub const FORMAT_VERSION: u32 = 1;

fn corrupt<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::CorruptIndex(msg.into()))
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn finish(mut self) -> Vec<u8> {
        let crc = crc32fast::hash(&self.0);
        self.u32(crc);
        self.0
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Checks magic, version and checksum; the reader then covers the body.
    fn open(bytes: &'a [u8], magic: &[u8; 4]) -> Result<Self> {
        if bytes.len() < 12 {
            return corrupt("file too short");
        }
        if &bytes[..4] != magic {
            return corrupt(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&bytes[..4]),
                String::from_utf8_lossy(magic)
            ));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return corrupt(format!("unsupported format version {version}"));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().unwrap());
        if crc32fast::hash(body) != stored {
            return corrupt("checksum mismatch (truncated or damaged file)");
        }
        Ok(Self { buf: body, pos: 8 })
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < len {
            return corrupt("unexpected end of data");
        }
        let s = &self.buf[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn done(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return corrupt(format!("{} trailing bytes", self.buf.len() - self.pos));
        }
        Ok(())
    }
}

/// Serializes an index. Fails if `m` does not fit the one-byte counts.
pub fn index_to_bytes(index: &SegmentTreeIndex) -> Result<Vec<u8>> {
    let m = index.m();
    if m > u8::MAX as usize {
        return Err(Error::InvalidConfig(format!("m = {m} exceeds the on-disk limit of 255")));
    }
    let tree = index.tree();
    let params = index.params();
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(INDEX_MAGIC);
    w.u32(FORMAT_VERSION);
    w.u32(index.n() as u32);
    w.u32(index.dim() as u32);
    w.u32(m as u32);
    w.u32(index.num_layers() as u32);
    w.u32(params.ef as u32);
    w.u64(params.seed);
    w.u8(params.reverse_edges as u8);
    let starts = tree.group_starts();
    w.u32(tree.num_groups() as u32);
    for &s in &starts[..starts.len() - 1] {
        w.u32(s);
    }
    for layer in 0..index.num_layers() {
        for r in 0..index.n() as Rank {
            if tree.present(layer, r) {
                let row = index.neighbors(layer, r);
                w.u8(row.len() as u8);
                for &v in row {
                    w.u32(v);
                }
            }
        }
    }
    for &c in index.build_dist_comps() {
        w.u64(c);
    }
    Ok(w.finish())
}

pub fn index_from_bytes(bytes: &[u8]) -> Result<SegmentTreeIndex> {
    let mut r = Reader::open(bytes, INDEX_MAGIC)?;
    let n = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let m = r.u32()? as usize;
    let num_layers = r.u32()? as usize;
    let ef = r.u32()? as usize;
    let seed = r.u64()?;
    let reverse_edges = match r.u8()? {
        0 => false,
        1 => true,
        b => return corrupt(format!("bad flag byte {b}")),
    };
    if n == 0 || dim == 0 || m == 0 || m > u8::MAX as usize {
        return corrupt(format!("implausible header n = {n}, d = {dim}, m = {m}"));
    }
    let num_groups = r.u32()? as usize;
    if num_groups == 0 || num_groups > n {
        return corrupt(format!("{num_groups} groups for {n} objects"));
    }
    let mut starts = Vec::with_capacity(num_groups + 1);
    for _ in 0..num_groups {
        starts.push(r.u32()?);
    }
    starts.push(n as Rank);
    if starts[0] != 0 || starts.windows(2).any(|w| w[0] >= w[1]) {
        return corrupt("group starts are not strictly increasing from 0");
    }
    let tree = SegmentTree::new(starts);
    if tree.num_layers() != num_layers {
        return corrupt(format!(
            "header says {num_layers} layers, groups imply {}",
            tree.num_layers()
        ));
    }

    let mut layers = Vec::with_capacity(num_layers);
    for layer in 0..num_layers {
        let mut g = LayerGraph::empty(n, m);
        for u in 0..n as Rank {
            if !tree.present(layer, u) {
                continue;
            }
            let count = r.u8()? as usize;
            if count > m {
                return corrupt(format!("row of {count} exceeds m = {m}"));
            }
            let seg = tree.segment_at(layer, u);
            let base = u as usize * m;
            for slot in &mut g.slots[base..base + count] {
                let v = r.u32()?;
                if !seg.contains(v) || v == u {
                    return corrupt(format!("edge {u} -> {v} leaves its segment at layer {layer}"));
                }
                *slot = v;
            }
            g.counts[u as usize] = count as u32;
        }
        layers.push(g);
    }
    let mut dist_comps = Vec::with_capacity(num_layers);
    for _ in 0..num_layers {
        dist_comps.push(r.u64()?);
    }
    r.done()?;
    Ok(SegmentTreeIndex {
        tree,
        dim,
        params: BuildParams { m, ef, seed, reverse_edges },
        layers,
        dist_comps,
    })
}

/// Exact file size of an index, for size accounting.
pub fn index_file_size(index: &SegmentTreeIndex) -> u64 {
    let header = 4 + 4 * 5 + 4 + 8 + 1 + 4 + 4 * index.tree().num_groups() as u64;
    let rows: u64 = (0..index.n() as Rank)
        .map(|r| index.tree().leaf_depth(r) as u64 + 1)
        .sum();
    header + rows + 4 * index.total_edges() + 8 * index.num_layers() as u64 + 4
}

pub fn save_index(index: &SegmentTreeIndex, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, index_to_bytes(index)?)?;
    Ok(())
}

pub fn load_index(path: impl AsRef<Path>) -> Result<SegmentTreeIndex> {
    index_from_bytes(&std::fs::read(path)?)
}

pub fn dataset_to_bytes(ds: &SortedDataset) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(DATASET_MAGIC);
    w.u32(FORMAT_VERSION);
    w.u32(ds.len() as u32);
    w.u32(ds.dim() as u32);
    w.u32(ds.num_attrs() as u32);
    for x in ds.vectors().as_slice() {
        w.0.extend_from_slice(&x.to_le_bytes());
    }
    for r in 0..ds.len() as Rank {
        for a in ds.attrs_of(r) {
            w.0.extend_from_slice(&a.to_le_bytes());
        }
    }
    for &id in ds.original_ids() {
        w.u32(id);
    }
    w.finish()
}

pub fn dataset_from_bytes(bytes: &[u8]) -> Result<SortedDataset> {
    let mut r = Reader::open(bytes, DATASET_MAGIC)?;
    let n = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let num_attrs = r.u32()? as usize;
    let expected = n
        .checked_mul(dim * 4 + num_attrs * 8 + 4)
        .ok_or_else(|| Error::CorruptIndex("size overflow".into()))?;
    if r.buf.len() - r.pos != expected {
        return corrupt(format!("body is {} bytes, header implies {expected}", r.buf.len() - r.pos));
    }
    let data = r
        .take(n * dim * 4)?
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let attrs = r
        .take(n * num_attrs * 8)?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let ids = r
        .take(n * 4)?
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let vectors = Vectors::new(dim, data).map_err(|e| Error::CorruptIndex(e.to_string()))?;
    SortedDataset::from_sorted_parts(vectors, attrs, num_attrs, ids)
        .map_err(|e| Error::CorruptIndex(e.to_string()))
}

pub fn save_dataset(ds: &SortedDataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, dataset_to_bytes(ds))?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<SortedDataset> {
    dataset_from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::build_index;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy(n: usize, dup: bool) -> (SortedDataset, SegmentTreeIndex) {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v: Vec<f32> = (0..n * 3).map(|_| rng.gen()).collect();
        let attrs: Vec<f64> = (0..n * 2)
            .map(|i| if dup { (i / 6) as f64 } else { rng.gen() })
            .collect();
        let ds = SortedDataset::new(Vectors::new(3, v).unwrap(), attrs, 2).unwrap();
        let (index, _) = build_index(&ds, &BuildParams { m: 4, ef: 8, seed: 3, reverse_edges: true }).unwrap();
        (ds, index)
    }

    #[test]
    fn index_round_trip() {
        for dup in [false, true] {
            let (_, index) = toy(16, dup);
            let bytes = index_to_bytes(&index).unwrap();
            let back = index_from_bytes(&bytes).unwrap();
            assert_eq!(back, index);
            assert_eq!(index_to_bytes(&back).unwrap(), bytes);
            assert_eq!(bytes.len() as u64, index_file_size(&index));
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (ds, index) = toy(100, false);
        save_index(&index, dir.path().join("i.irg")).unwrap();
        save_dataset(&ds, dir.path().join("d.irg")).unwrap();
        assert_eq!(load_index(dir.path().join("i.irg")).unwrap(), index);
        assert_eq!(load_dataset(dir.path().join("d.irg")).unwrap(), ds);
    }

    #[test]
    fn rejects_wrong_magic_version_and_damage() {
        let (ds, index) = toy(16, false);
        let bytes = index_to_bytes(&index).unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(index_from_bytes(&bad), Err(Error::CorruptIndex(_))));

        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(index_from_bytes(&bad), Err(Error::CorruptIndex(_))));

        for cut in [3, 11, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(index_from_bytes(&bytes[..cut]), Err(Error::CorruptIndex(_))));
        }

        let mut bad = bytes.clone();
        let mid = bad.len() / 2;
        bad[mid] ^= 0x10;
        assert!(matches!(index_from_bytes(&bad), Err(Error::CorruptIndex(_))));

        assert!(matches!(dataset_from_bytes(&bytes), Err(Error::CorruptIndex(_))));
        let dbytes = dataset_to_bytes(&ds);
        assert!(matches!(index_from_bytes(&dbytes), Err(Error::CorruptIndex(_))));
        assert!(matches!(
            dataset_from_bytes(&dbytes[..dbytes.len() - 5]),
            Err(Error::CorruptIndex(_))
        ));
    }

    #[test]
    fn rejects_structurally_invalid_body_with_valid_checksum() {
        let (_, index) = toy(16, false);
        let mut body = index_to_bytes(&index).unwrap();
        body.truncate(body.len() - 4);
        // Point the first neighbor of rank 0 at layer 0 outside the index.
        let first_row = 4 + 20 + 4 + 8 + 1 + 4 + 4 * 16;
        assert!(body[first_row] > 0);
        body[first_row + 1..first_row + 5].copy_from_slice(&999u32.to_le_bytes());
        let crc = crc32fast::hash(&body);
        body.extend_from_slice(&crc.to_le_bytes());
        assert!(matches!(index_from_bytes(&body), Err(Error::CorruptIndex(_))));
    }

    #[test]
    fn large_m_is_rejected() {
        let (_, mut index) = toy(16, false);
        index.params.m = 300;
        assert!(matches!(index_to_bytes(&index), Err(Error::InvalidConfig(_))));
    }
}
