#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rangegraph::{l2_squared, Rank, SegmentTree, SortedDataset, Vectors};

/// Uniform `[0, 1)` vectors and attributes.
pub fn uniform(n: usize, d: usize, num_attrs: usize, seed: u64) -> SortedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f32> = (0..n * d).map(|_| rng.gen()).collect();
    let a: Vec<f64> = (0..n * num_attrs).map(|_| rng.gen()).collect();
    SortedDataset::new(Vectors::new(d, v).unwrap(), a, num_attrs).unwrap()
}

/// Like [`uniform`] but with primary values drawn from `levels` integers.
pub fn with_duplicates(n: usize, d: usize, levels: u32, seed: u64) -> SortedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f32> = (0..n * d).map(|_| rng.gen()).collect();
    let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0..levels) as f64).collect();
    SortedDataset::new(Vectors::new(d, v).unwrap(), a, 1).unwrap()
}

pub fn query_vectors(count: usize, d: usize, seed: u64) -> Vectors {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Vectors::new(d, (0..count * d).map(|_| rng.gen()).collect()).unwrap()
}

/// Pairwise squared distances, row-major.
pub struct DistMatrix {
    n: usize,
    d: Vec<f32>,
}

impl DistMatrix {
    pub fn new(ds: &SortedDataset) -> Self {
        let n = ds.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = l2_squared(ds.vector(i as Rank), ds.vector(j as Rank));
            }
        }
        Self { n, d }
    }

    #[inline]
    pub fn get(&self, a: Rank, b: Rank) -> f32 {
        self.d[a as usize * self.n + b as usize]
    }
}

/// Exact relative neighborhood graph over ranks `lo..=hi` by brute force:
/// `(u, v)` is kept iff no `w` in the set has `d(u, w) < d(u, v)` and
/// `d(w, v) < d(u, v)`. Rows are indexed by `rank - lo`, ascending ranks.
pub fn exact_rng(dm: &DistMatrix, lo: Rank, hi: Rank) -> Vec<Vec<Rank>> {
    (lo..=hi)
        .map(|u| {
            (lo..=hi)
                .filter(|&v| v != u)
                .filter(|&v| {
                    let duv = dm.get(u, v);
                    !(lo..=hi).any(|w| w != u && w != v && dm.get(u, w) < duv && dm.get(w, v) < duv)
                })
                .collect()
        })
        .collect()
}

/// `rows[layer][rank]` holding the exact RNG of every segment.
pub fn exact_rng_layers(tree: &SegmentTree, dm: &DistMatrix) -> Vec<Vec<Vec<Rank>>> {
    (0..tree.num_layers())
        .map(|layer| {
            let mut rows = vec![Vec::new(); tree.n()];
            for seg in tree.layer_segments(layer) {
                for (i, row) in exact_rng(dm, seg.lo, seg.hi).into_iter().enumerate() {
                    rows[seg.lo as usize + i] = row;
                }
            }
            rows
        })
        .collect()
}
