//! Query processing on the dedicated graph of a range, assembled on the fly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beam::{self, Expansion, Neighbor, Output, SearchScratch, WalkCounters};
use crate::dataset::{AttrPredicate, RangeFilter, RankRange, SortedDataset};
use crate::error::{Error, Result};
use crate::index::SegmentTreeIndex;
use crate::vector::{true_distance, Rank};

/// How out-of-range neighbors (on secondary attributes) are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OorPolicy {
    /// Never visit them (`p = 0`).
    Never,
    /// Always visit them (`p = 1`).
    Always,
    /// Visit with probability `exp(-t)`, `t` = out-of-range streak of the expanded node.
    Adaptive,
}

impl std::str::FromStr for OorPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "never" => Ok(Self::Never),
            "always" => Ok(Self::Always),
            "adaptive" => Ok(Self::Adaptive),
            _ => Err(Error::InvalidInput(format!(
                "unknown out-of-range policy '{s}' (never|always|adaptive)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub beam: usize,
    pub k: usize,
    pub oor_policy: OorPolicy,
    /// Seeds the per-query generator used by [`OorPolicy::Adaptive`].
    pub seed: u64,
    /// Skip layers whose intersection with the range equals the child's.
    pub skip_layers: bool,
}

impl SearchParams {
    pub fn new(beam: usize, k: usize) -> Self {
        Self {
            beam,
            k,
            oor_policy: OorPolicy::Adaptive,
            seed: 0,
            skip_layers: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.beam == 0 || self.k == 0 {
            return Err(Error::InvalidConfig("beam and k must be positive".into()));
        }
        if self.k > self.beam {
            return Err(Error::InvalidConfig(format!(
                "k = {} exceeds beam = {}",
                self.k, self.beam
            )));
        }
        Ok(())
    }
}

/// Per-query instrumentation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryStats {
    pub dist_comps: u64,
    /// Adjacency entries examined while assembling out-edges.
    pub edge_scans: u64,
    pub select_calls: u64,
    pub layers_collected: u64,
    pub hops: u64,
}

impl QueryStats {
    pub fn add(&mut self, other: &QueryStats) {
        self.dist_comps += other.dist_comps;
        self.edge_scans += other.edge_scans;
        self.select_calls += other.select_calls;
        self.layers_collected += other.layers_collected;
        self.hops += other.hops;
    }

    pub(crate) fn absorb(&mut self, walk: &WalkCounters) {
        self.dist_comps += walk.dist_comps;
        self.hops += walk.hops;
    }
}

/// Ascending neighbors by squared distance, plus instrumentation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub neighbors: Vec<Neighbor>,
    pub stats: QueryStats,
}

impl SearchResult {
    pub fn ranks(&self) -> Vec<Rank> {
        self.neighbors.iter().map(|n| n.rank).collect()
    }

    pub fn original_ids(&self, ds: &SortedDataset) -> Vec<u32> {
        self.neighbors.iter().map(|n| ds.original_id(n.rank)).collect()
    }

    /// Euclidean (not squared) distances.
    pub fn distances(&self) -> Vec<f32> {
        self.neighbors.iter().map(|n| true_distance(n.dist)).collect()
    }
}

/// Work done by one edge-selection call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SelectStats {
    pub scanned: u64,
    pub layers: u64,
}

/// Chooses up to `m` in-range out-neighbors of `u` for the dedicated graph of `range`.
///
/// Walks `u`'s root-to-leaf path, taking in-range neighbors from upper layers
/// first. A layer whose intersection with the range equals its child's is
/// skipped; the walk ends after collecting at a segment the range covers, at
/// `u`'s leaf, or once `m` neighbors are held.
///
/// # Panics
/// If `u` lies outside `range`.
pub fn select_edges(index: &SegmentTreeIndex, u: Rank, range: RankRange) -> Vec<Rank> {
    let mut out = Vec::with_capacity(index.m());
    select_edges_into(index, u, range, true, &mut out, None);
    out
}

/// [`select_edges`] appending to `out`, optionally without layer skipping,
/// recording the layers collected from in `trace`.
pub fn select_edges_into(
    index: &SegmentTreeIndex,
    u: Rank,
    range: RankRange,
    skip_layers: bool,
    out: &mut Vec<Rank>,
    mut trace: Option<&mut Vec<u32>>,
) -> SelectStats {
    assert!(
        range.contains(u),
        "rank {u} outside query range [{}, {}]",
        range.lo,
        range.hi
    );
    let m = index.m();
    let tree = index.tree();
    let start = out.len();
    let mut stats = SelectStats::default();

    let mut collect = |layer: u32, out: &mut Vec<Rank>| {
        stats.layers += 1;
        if let Some(t) = trace.as_deref_mut() {
            t.push(layer);
        }
        for &v in index.neighbors(layer as usize, u) {
            stats.scanned += 1;
            if range.contains(v) && !out[start..].contains(&v) {
                out.push(v);
                if out.len() - start >= m {
                    break;
                }
            }
        }
    };

    let mut seg = tree.root();
    while out.len() - start < m {
        if seg.is_leaf() {
            collect(seg.layer, out);
            break;
        }
        let child = tree.child_containing(&seg, u);
        if skip_layers && child.range().intersect(&range) == seg.range().intersect(&range) {
            seg = child;
            continue;
        }
        collect(seg.layer, out);
        if range.covers(&seg.range()) {
            break;
        }
        seg = child;
    }
    stats
}

/// The dedicated graph of a range, as seen by the search loop.
pub(crate) struct DedicatedGraph<'a> {
    pub index: &'a SegmentTreeIndex,
    pub range: RankRange,
    pub skip_layers: bool,
    pub stats: QueryStats,
}

impl Expansion for DedicatedGraph<'_> {
    #[inline]
    fn neighbors(&mut self, u: Rank, out: &mut Vec<Rank>) {
        let s = select_edges_into(self.index, u, self.range, self.skip_layers, out, None);
        self.stats.select_calls += 1;
        self.stats.edge_scans += s.scanned;
        self.stats.layers_collected += s.layers;
    }
}

struct MultiAttrGraph<'a> {
    inner: DedicatedGraph<'a>,
    ds: &'a SortedDataset,
    secondary: &'a [AttrPredicate],
    policy: OorPolicy,
    rng: ChaCha8Rng,
}

impl Expansion for MultiAttrGraph<'_> {
    #[inline]
    fn neighbors(&mut self, u: Rank, out: &mut Vec<Rank>) {
        self.inner.neighbors(u, out);
    }

    #[inline]
    fn visit(&mut self, v: Rank, parent_streak: u32) -> Option<u32> {
        if self.ds.satisfies(v, self.secondary) {
            return Some(0);
        }
        let go = match self.policy {
            OorPolicy::Never => false,
            OorPolicy::Always => true,
            OorPolicy::Adaptive => self.rng.gen::<f64>() < (-(parent_streak as f64)).exp(),
        };
        go.then_some(parent_streak + 1)
    }

    #[inline]
    fn in_beam(&self, v: Rank) -> bool {
        self.ds.satisfies(v, self.secondary)
    }

    #[inline]
    fn in_answer(&self, v: Rank) -> bool {
        self.ds.satisfies(v, self.secondary)
    }
}

fn check_inputs(index: &SegmentTreeIndex, ds: &SortedDataset, q: &[f32], params: &SearchParams) -> Result<()> {
    params.validate()?;
    if index.n() != ds.len() || index.dim() != ds.dim() {
        return Err(Error::InvalidInput(format!(
            "index (n = {}, d = {}) does not match dataset (n = {}, d = {})",
            index.n(),
            index.dim(),
            ds.len(),
            ds.dim()
        )));
    }
    if q.len() != ds.dim() {
        return Err(Error::InvalidInput(format!(
            "query has dim {} but dataset has dim {}",
            q.len(),
            ds.dim()
        )));
    }
    Ok(())
}

/// Range-filtered k-NN by greedy beam search on the range's dedicated graph,
/// entering at the middle rank of the range.
pub fn beam_search(
    index: &SegmentTreeIndex,
    ds: &SortedDataset,
    q: &[f32],
    range: RankRange,
    params: &SearchParams,
    scratch: &mut SearchScratch,
) -> Result<SearchResult> {
    check_inputs(index, ds, q, params)?;
    if range.hi as usize >= ds.len() {
        return Err(Error::EmptyRange);
    }
    scratch.ensure(0, ds.len());
    let mut graph = DedicatedGraph {
        index,
        range,
        skip_layers: params.skip_layers,
        stats: QueryStats::default(),
    };
    let mut walk = WalkCounters::default();
    let neighbors = beam::beam_search(
        ds.vectors(),
        q,
        range.midpoint(),
        params.beam,
        Output::Answer(params.k),
        &mut graph,
        scratch,
        &mut walk,
    );
    let mut stats = graph.stats;
    stats.absorb(&walk);
    Ok(SearchResult { neighbors, stats })
}

/// Conjunctive multi-attribute search: the dedicated graph comes from the
/// primary range, and neighbors failing a secondary predicate are visited
/// according to `params.oor_policy`. Only objects satisfying everything are
/// returned or occupy beam slots.
pub fn multi_attr_search(
    index: &SegmentTreeIndex,
    ds: &SortedDataset,
    q: &[f32],
    filter: &RangeFilter,
    params: &SearchParams,
    scratch: &mut SearchScratch,
) -> Result<SearchResult> {
    if filter.secondary.is_empty() {
        return beam_search(index, ds, q, filter.range, params, scratch);
    }
    check_inputs(index, ds, q, params)?;
    scratch.ensure(0, ds.len());
    let mut graph = MultiAttrGraph {
        inner: DedicatedGraph {
            index,
            range: filter.range,
            skip_layers: params.skip_layers,
            stats: QueryStats::default(),
        },
        ds,
        secondary: &filter.secondary,
        policy: params.oor_policy,
        rng: ChaCha8Rng::seed_from_u64(params.seed),
    };
    let mut walk = WalkCounters::default();
    let neighbors = beam::beam_search(
        ds.vectors(),
        q,
        filter.range.midpoint(),
        params.beam,
        Output::Answer(params.k),
        &mut graph,
        scratch,
        &mut walk,
    );
    let mut stats = graph.inner.stats;
    stats.absorb(&walk);
    Ok(SearchResult { neighbors, stats })
}

/// Number of in-range objects reachable from the entry point in the
/// dedicated graph of `range`.
pub fn reachable_in_range(index: &SegmentTreeIndex, range: RankRange) -> usize {
    let mut seen = vec![false; range.len()];
    let entry = range.midpoint();
    seen[(entry - range.lo) as usize] = true;
    let mut stack = vec![entry];
    let mut buf = Vec::new();
    let mut count = 1;
    while let Some(u) = stack.pop() {
        buf.clear();
        select_edges_into(index, u, range, true, &mut buf, None);
        for &v in &buf {
            let slot = &mut seen[(v - range.lo) as usize];
            if !*slot {
                *slot = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count
}
