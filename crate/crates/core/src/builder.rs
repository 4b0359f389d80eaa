//! Bottom-up materialization of the elemental graphs.
//!
//! For a segment with children `own` (holding `u`) and `sib`, the candidates
//! of `u` are its neighbors in `own`'s graph plus a beam search for `u` in
//! `sib`'s graph. Anything in `own` that its child graph pruned would be pruned
//! again by the same object in the parent, so copying is sufficient there.

use std::cell::RefCell;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam::{beam_search, Neighbor, Output, RowsExpansion, SearchScratch, WalkCounters};
use crate::dataset::{RankRange, SortedDataset};
use crate::error::{Error, Result};
use crate::index::{BuildParams, LayerGraph, SegmentTreeIndex};
use crate::tree::{Segment, SegmentTree};
use crate::vector::{l2_squared, Rank, Vectors};

/// Groups of identical primary values up to this size get an exhaustive
/// candidate set; larger ones are built by incremental insertion.
const LEAF_EXHAUSTIVE_MAX: usize = 512;

/// Greedy relative-neighborhood pruning of `u`'s candidates.
///
/// Candidates are visited by ascending distance (ties by rank) and `c` is kept
/// unless an already kept `c'` has `d(u, c') < d(u, c)` and `d(c', c) < d(u, c)`.
/// Stops after `m` are kept. `candidates` carry `d(u, c)` and must not contain `u`.
pub fn rng_prune(vectors: &Vectors, u: Rank, candidates: &[(Rank, f32)], m: usize) -> Vec<Rank> {
    let mut cands: Vec<Neighbor> = candidates
        .iter()
        .map(|&(rank, dist)| Neighbor { rank, dist })
        .collect();
    let mut counter = 0;
    prune(vectors, u, &mut cands, m, &mut counter)
}

pub(crate) fn prune(
    vectors: &Vectors,
    u: Rank,
    cands: &mut [Neighbor],
    m: usize,
    dist_comps: &mut u64,
) -> Vec<Rank> {
    debug_assert!(cands.iter().all(|c| c.rank != u));
    cands.sort_unstable();
    let mut kept: Vec<Neighbor> = Vec::with_capacity(m.min(cands.len()));
    for &c in cands.iter() {
        if kept.len() >= m {
            break;
        }
        if kept.last().is_some_and(|k| k.rank == c.rank) {
            continue;
        }
        let cv = vectors.get(c.rank as usize);
        let occluded = kept.iter().any(|k| {
            if k.dist >= c.dist {
                return false;
            }
            *dist_comps += 1;
            l2_squared(vectors.get(k.rank as usize), cv) < c.dist
        });
        if !occluded {
            kept.push(c);
        }
    }
    kept.into_iter().map(|k| k.rank).collect()
}

#[inline]
fn with_dist(vectors: &Vectors, u: Rank, v: Rank) -> Neighbor {
    Neighbor {
        rank: v,
        dist: l2_squared(vectors.get(u as usize), vectors.get(v as usize)),
    }
}

/// Adds `v -> u` for every forward edge `u -> v`, re-pruning lists that
/// overflow `m`. `lists[i]` belongs to rank `base + i`.
pub(crate) fn add_reverse_edges(
    vectors: &Vectors,
    lists: &mut [Vec<Rank>],
    base: Rank,
    m: usize,
    dist_comps: &mut u64,
) {
    let forward = lists.to_vec();
    for (i, fwd) in forward.iter().enumerate() {
        let u = base + i as Rank;
        for &v in fwd {
            let list = &mut lists[(v - base) as usize];
            if list.contains(&u) {
                continue;
            }
            if list.len() < m {
                list.push(u);
                continue;
            }
            let mut cands: Vec<Neighbor> = list
                .iter()
                .chain(std::iter::once(&u))
                .map(|&w| with_dist(vectors, v, w))
                .collect();
            *dist_comps += cands.len() as u64;
            *list = prune(vectors, v, &mut cands, m, dist_comps);
        }
    }
}

/// Per-layer build accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub layer: usize,
    pub segments: usize,
    pub edges: u64,
    pub dist_comps: u64,
    pub wall_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub n: usize,
    pub dim: usize,
    pub params: BuildParams,
    pub num_layers: usize,
    pub layers: Vec<LayerReport>,
    pub total_dist_comps: u64,
    pub total_edges: u64,
    pub wall_secs: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn check_params(params: &BuildParams, warnings: &mut Vec<String>) -> Result<()> {
    if params.m == 0 {
        return Err(Error::InvalidConfig("m must be at least 1".into()));
    }
    if params.ef == 0 {
        return Err(Error::InvalidConfig("ef must be at least 1".into()));
    }
    if params.ef < params.m {
        warnings.push(format!(
            "ef = {} < m = {}: candidate lists may hold fewer than m entries",
            params.ef, params.m
        ));
    }
    Ok(())
}

struct LayerSlot<'a> {
    counts: &'a mut [u32],
    slots: &'a mut [Rank],
    m: usize,
}

impl LayerSlot<'_> {
    fn split(&mut self, at: usize) -> (LayerSlot<'_>, LayerSlot<'_>) {
        let (ca, cb) = self.counts.split_at_mut(at);
        let (sa, sb) = self.slots.split_at_mut(at * self.m);
        (
            LayerSlot { counts: ca, slots: sa, m: self.m },
            LayerSlot { counts: cb, slots: sb, m: self.m },
        )
    }

    fn view(&self, base: Rank) -> LayerView<'_> {
        LayerView {
            counts: self.counts,
            slots: self.slots,
            base,
            m: self.m,
        }
    }

    fn write(&mut self, i: usize, row: &[Rank]) {
        debug_assert!(row.len() <= self.m);
        self.counts[i] = row.len() as u32;
        self.slots[i * self.m..i * self.m + row.len()].copy_from_slice(row);
    }
}

#[derive(Clone, Copy)]
struct LayerView<'a> {
    counts: &'a [u32],
    slots: &'a [Rank],
    base: Rank,
    m: usize,
}

impl<'a> LayerView<'a> {
    #[inline]
    fn row(&self, r: Rank) -> &'a [Rank] {
        let i = (r - self.base) as usize;
        &self.slots[i * self.m..i * self.m + self.counts[i] as usize]
    }
}

struct Ctx<'a> {
    vectors: &'a Vectors,
    tree: &'a SegmentTree,
    params: BuildParams,
    dist_comps: Vec<AtomicU64>,
    wall_nanos: Vec<AtomicU64>,
}

impl Ctx<'_> {
    fn record(&self, layer: u32, dist_comps: u64, started: Instant) {
        self.dist_comps[layer as usize].fetch_add(dist_comps, Ordering::Relaxed);
        self.wall_nanos[layer as usize]
            .fetch_add(started.elapsed().as_nanos() as u64, Ordering::Relaxed);
    }
}

thread_local! {
    static SCRATCH: RefCell<Option<SearchScratch>> = const { RefCell::new(None) };
}

fn with_scratch<T>(n: usize, f: impl FnOnce(&mut SearchScratch) -> T) -> T {
    SCRATCH.with(|cell| {
        let mut slot = cell.borrow_mut();
        let scratch = slot.get_or_insert_with(|| SearchScratch::new(n));
        scratch.ensure(0, n);
        f(scratch)
    })
}

/// Builds the whole segment tree of elemental graphs.
pub fn build_index(
    ds: &SortedDataset,
    params: &BuildParams,
) -> Result<(SegmentTreeIndex, BuildReport)> {
    let mut warnings = Vec::new();
    check_params(params, &mut warnings)?;
    let started = Instant::now();
    let n = ds.len();
    let m = params.m;
    let tree = SegmentTree::new(ds.group_starts().to_vec());
    let num_layers = tree.num_layers();
    let ctx = Ctx {
        vectors: ds.vectors(),
        tree: &tree,
        params: *params,
        dist_comps: (0..num_layers).map(|_| AtomicU64::new(0)).collect(),
        wall_nanos: (0..num_layers).map(|_| AtomicU64::new(0)).collect(),
    };

    let mut layers: Vec<LayerGraph> = (0..num_layers).map(|_| LayerGraph::empty(n, m)).collect();
    {
        let mut slots: Vec<LayerSlot> = layers
            .iter_mut()
            .map(|g| LayerSlot {
                counts: &mut g.counts,
                slots: &mut g.slots,
                m,
            })
            .collect();
        build_subtree(&ctx, tree.root(), &mut slots);
    }

    let dist_comps: Vec<u64> = ctx.dist_comps.iter().map(|a| a.load(Ordering::Relaxed)).collect();
    let wall: Vec<f64> = ctx
        .wall_nanos
        .iter()
        .map(|a| a.load(Ordering::Relaxed) as f64 * 1e-9)
        .collect();
    drop(ctx);

    let index = SegmentTreeIndex {
        tree,
        dim: ds.dim(),
        params: *params,
        layers,
        dist_comps: dist_comps.clone(),
    };
    let layer_reports = (0..num_layers)
        .map(|layer| LayerReport {
            layer,
            segments: index.tree.layer_segments(layer).len(),
            edges: index.layer_edges(layer),
            dist_comps: dist_comps[layer],
            wall_secs: wall[layer],
        })
        .collect();
    let report = BuildReport {
        n,
        dim: ds.dim(),
        params: *params,
        num_layers,
        layers: layer_reports,
        total_dist_comps: dist_comps.iter().sum(),
        total_edges: index.total_edges(),
        wall_secs: started.elapsed().as_secs_f64(),
        warnings,
    };
    Ok((index, report))
}

fn build_subtree(ctx: &Ctx, seg: Segment, layers: &mut [LayerSlot<'_>]) {
    if seg.is_leaf() {
        build_leaf(ctx, seg, &mut layers[0]);
        return;
    }
    let (left, right) = ctx.tree.children(&seg);
    {
        let at = left.len();
        let (mut lparts, mut rparts): (Vec<LayerSlot>, Vec<LayerSlot>) =
            layers[1..].iter_mut().map(|s| s.split(at)).unzip();
        rayon::join(
            || build_subtree(ctx, left, &mut lparts),
            || build_subtree(ctx, right, &mut rparts),
        );
    }
    let (head, rest) = layers.split_first_mut().expect("internal segment has a child layer");
    let children = rest[0].view(seg.lo);
    build_segment(ctx, seg, (left, right), children, head);
}

/// Elemental graph of an internal segment from its children's graphs.
fn build_segment(
    ctx: &Ctx,
    seg: Segment,
    (left, right): (Segment, Segment),
    children: LayerView<'_>,
    out: &mut LayerSlot<'_>,
) {
    let started = Instant::now();
    let vectors = ctx.vectors;
    let BuildParams { m, ef, .. } = ctx.params;
    let n = ctx.tree.n();

    let forward: Vec<(Vec<Rank>, u64)> = (seg.lo..seg.hi + 1)
        .into_par_iter()
        .with_min_len(32)
        .map(|u| {
            let (own, sib) = if u <= left.hi { (left, right) } else { (right, left) };
            debug_assert!(own.contains(u));
            let mut count = 0u64;
            let own_row = children.row(u);
            let mut cands: Vec<Neighbor> = Vec::with_capacity(own_row.len() + ef.min(sib.len()));
            cands.extend(own_row.iter().map(|&v| with_dist(vectors, u, v)));
            count += own_row.len() as u64;
            if sib.len() <= ef {
                cands.extend((sib.lo..=sib.hi).map(|v| with_dist(vectors, u, v)));
                count += sib.len() as u64;
            } else {
                let mut exp = RowsExpansion { rows: |r: Rank| children.row(r) };
                let mut ctr = WalkCounters::default();
                let found = with_scratch(n, |scratch| {
                    beam_search(
                        vectors,
                        vectors.get(u as usize),
                        sib.midpoint(),
                        ef,
                        Output::Beam,
                        &mut exp,
                        scratch,
                        &mut ctr,
                    )
                });
                count += ctr.dist_comps;
                cands.extend(found);
            }
            let kept = prune(vectors, u, &mut cands, m, &mut count);
            (kept, count)
        })
        .collect();

    let mut total: u64 = forward.iter().map(|(_, c)| c).sum();
    let mut lists: Vec<Vec<Rank>> = forward.into_iter().map(|(k, _)| k).collect();
    if ctx.params.reverse_edges {
        add_reverse_edges(vectors, &mut lists, seg.lo, m, &mut total);
    }
    for (i, row) in lists.iter().enumerate() {
        out.write(i, row);
    }
    ctx.record(seg.layer, total, started);
}

/// Flat graph over one group of identical primary values.
fn build_leaf(ctx: &Ctx, seg: Segment, out: &mut LayerSlot<'_>) {
    if seg.len() == 1 {
        return;
    }
    let started = Instant::now();
    let vectors = ctx.vectors;
    let BuildParams { m, ef, seed, reverse_edges } = ctx.params;
    let mut count = 0u64;
    let lists = if seg.len() <= LEAF_EXHAUSTIVE_MAX.max(ef) {
        let mut lists: Vec<Vec<Rank>> = (seg.lo..=seg.hi)
            .map(|u| {
                let mut cands: Vec<Neighbor> = (seg.lo..=seg.hi)
                    .filter(|&v| v != u)
                    .map(|v| with_dist(vectors, u, v))
                    .collect();
                count += cands.len() as u64;
                prune(vectors, u, &mut cands, m, &mut count)
            })
            .collect();
        if reverse_edges {
            add_reverse_edges(vectors, &mut lists, seg.lo, m, &mut count);
        }
        lists
    } else {
        let (lists, c) = insertion_rows(
            vectors,
            seg.range(),
            m,
            ef,
            seed ^ u64::from(seg.glo),
            reverse_edges,
        );
        count += c;
        lists
    };
    for (i, row) in lists.iter().enumerate() {
        out.write(i, row);
    }
    ctx.record(seg.layer, count, started);
}

/// A single proximity graph over one contiguous rank range, built by
/// incremental insertion in a seeded random order (single-layer HNSW style).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatGraph {
    range: RankRange,
    entry: Rank,
    rows: Vec<Vec<Rank>>,
    dist_comps: u64,
}

impl FlatGraph {
    pub fn range(&self) -> RankRange {
        self.range
    }

    /// Search entry point; also the first node inserted.
    pub fn entry(&self) -> Rank {
        self.entry
    }

    #[inline]
    pub fn neighbors(&self, r: Rank) -> &[Rank] {
        &self.rows[(r - self.range.lo) as usize]
    }

    pub fn build_dist_comps(&self) -> u64 {
        self.dist_comps
    }

    pub fn num_edges(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// Builds one flat graph over `range` with the same pruning and degree cap as
/// the elemental graphs.
pub fn build_flat(ds: &SortedDataset, range: RankRange, params: &BuildParams) -> Result<FlatGraph> {
    check_params(params, &mut Vec::new())?;
    if range.hi as usize >= ds.len() {
        return Err(Error::InvalidInput(format!(
            "range [{}, {}] outside dataset of {}",
            range.lo,
            range.hi,
            ds.len()
        )));
    }
    let (rows, dist_comps) = insertion_rows(
        ds.vectors(),
        range,
        params.m,
        params.ef,
        params.seed,
        params.reverse_edges,
    );
    Ok(FlatGraph {
        range,
        entry: range.midpoint(),
        rows,
        dist_comps,
    })
}

fn insertion_rows(
    vectors: &Vectors,
    range: RankRange,
    m: usize,
    ef: usize,
    seed: u64,
    reverse_edges: bool,
) -> (Vec<Vec<Rank>>, u64) {
    let base = range.lo;
    let entry = range.midpoint();
    let mut order: Vec<Rank> = range.iter().filter(|&r| r != entry).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut rows: Vec<Vec<Rank>> = vec![Vec::new(); range.len()];
    let mut scratch = SearchScratch::with_window(base, range.len());
    let mut count = 0u64;
    for &x in &order {
        let mut cands = {
            let mut exp = RowsExpansion { rows: |r: Rank| rows[(r - base) as usize].as_slice() };
            let mut ctr = WalkCounters::default();
            let found = beam_search(
                vectors,
                vectors.get(x as usize),
                entry,
                ef,
                Output::Beam,
                &mut exp,
                &mut scratch,
                &mut ctr,
            );
            count += ctr.dist_comps;
            found
        };
        let kept = prune(vectors, x, &mut cands, m, &mut count);
        if reverse_edges {
            for &v in &kept {
                let list = &mut rows[(v - base) as usize];
                if list.len() < m {
                    list.push(x);
                } else {
                    let mut c: Vec<Neighbor> = list
                        .iter()
                        .chain(std::iter::once(&x))
                        .map(|&w| with_dist(vectors, v, w))
                        .collect();
                    count += c.len() as u64;
                    *list = prune(vectors, v, &mut c, m, &mut count);
                }
            }
        }
        rows[(x - base) as usize] = kept;
    }
    (rows, count)
}
