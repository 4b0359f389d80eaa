//! Reference strategies: pre-, post- and in-filtering, and segment-wise search
//! over the canonical cover of the range.
//!
//! Post- and in-filtering search the root elemental graph, i.e. the graph over
//! the full dataset, so every strategy shares one index.

use std::collections::BinaryHeap;

use crate::beam::{self, Expansion, Neighbor, Output, SearchScratch, WalkCounters};
use crate::builder::FlatGraph;
use crate::dataset::{RangeFilter, SortedDataset};
use crate::error::{Error, Result};
use crate::index::SegmentTreeIndex;
use crate::search::{QueryStats, SearchParams, SearchResult};
use crate::vector::{l2_squared, Rank};

/// Exact k-NN by scanning the range and testing secondary predicates.
pub fn prefilter_search(ds: &SortedDataset, q: &[f32], filter: &RangeFilter, k: usize) -> SearchResult {
    let mut heap: BinaryHeap<Neighbor> = BinaryHeap::with_capacity(k + 1);
    let mut stats = QueryStats::default();
    for r in filter.range.iter() {
        if !ds.satisfies(r, &filter.secondary) {
            continue;
        }
        stats.dist_comps += 1;
        let nb = Neighbor {
            rank: r,
            dist: l2_squared(q, ds.vector(r)),
        };
        if heap.len() < k {
            heap.push(nb);
        } else if k > 0 && nb < *heap.peek().unwrap() {
            heap.pop();
            heap.push(nb);
        }
    }
    SearchResult {
        neighbors: heap.into_sorted_vec(),
        stats,
    }
}

fn root_checks(index: &SegmentTreeIndex, ds: &SortedDataset, q: &[f32], params: &SearchParams) -> Result<()> {
    params.validate()?;
    if index.n() != ds.len() || index.dim() != ds.dim() || q.len() != ds.dim() {
        return Err(Error::InvalidInput("index, dataset and query disagree in shape".into()));
    }
    Ok(())
}

struct RootGraph<'a> {
    index: &'a SegmentTreeIndex,
    ds: &'a SortedDataset,
    filter: &'a RangeFilter,
    /// Only expand towards admitted neighbors.
    in_filter: bool,
    scans: u64,
}

impl Expansion for RootGraph<'_> {
    fn neighbors(&mut self, u: Rank, out: &mut Vec<Rank>) {
        let row = self.index.neighbors(0, u);
        self.scans += row.len() as u64;
        if self.in_filter {
            out.extend(row.iter().copied().filter(|&v| self.filter.admits(self.ds, v)));
        } else {
            out.extend_from_slice(row);
        }
    }

    fn in_beam(&self, v: Rank) -> bool {
        !self.in_filter || self.filter.admits(self.ds, v)
    }

    fn in_answer(&self, v: Rank) -> bool {
        self.filter.admits(self.ds, v)
    }
}

fn root_search(
    index: &SegmentTreeIndex,
    ds: &SortedDataset,
    q: &[f32],
    filter: &RangeFilter,
    params: &SearchParams,
    scratch: &mut SearchScratch,
    in_filter: bool,
) -> Result<SearchResult> {
    root_checks(index, ds, q, params)?;
    scratch.ensure(0, ds.len());
    let entry = if in_filter {
        filter.range.midpoint()
    } else {
        ds.full_range().midpoint()
    };
    let mut graph = RootGraph {
        index,
        ds,
        filter,
        in_filter,
        scans: 0,
    };
    let mut walk = WalkCounters::default();
    let neighbors = beam::beam_search(
        ds.vectors(),
        q,
        entry,
        params.beam,
        Output::Answer(params.k),
        &mut graph,
        scratch,
        &mut walk,
    );
    let mut stats = QueryStats {
        edge_scans: graph.scans,
        select_calls: walk.hops,
        ..QueryStats::default()
    };
    stats.absorb(&walk);
    Ok(SearchResult { neighbors, stats })
}

/// Beam search on the full-dataset graph ignoring the filter, then the best
/// `k` admitted objects among everything visited.
pub fn postfilter_search(
    index: &SegmentTreeIndex,
    ds: &SortedDataset,
    q: &[f32],
    filter: &RangeFilter,
    params: &SearchParams,
    scratch: &mut SearchScratch,
) -> Result<SearchResult> {
    root_search(index, ds, q, filter, params, scratch, false)
}

/// Beam search on the full-dataset graph that only follows admitted neighbors.
pub fn infilter_search(
    index: &SegmentTreeIndex,
    ds: &SortedDataset,
    q: &[f32],
    filter: &RangeFilter,
    params: &SearchParams,
    scratch: &mut SearchScratch,
) -> Result<SearchResult> {
    root_search(index, ds, q, filter, params, scratch, true)
}

struct SegmentGraph<'a> {
    index: &'a SegmentTreeIndex,
    ds: &'a SortedDataset,
    filter: &'a RangeFilter,
    layer: usize,
    scans: u64,
}

impl Expansion for SegmentGraph<'_> {
    fn neighbors(&mut self, u: Rank, out: &mut Vec<Rank>) {
        let row = self.index.neighbors(self.layer, u);
        self.scans += row.len() as u64;
        out.extend_from_slice(row);
    }

    fn in_answer(&self, v: Rank) -> bool {
        self.filter.admits(self.ds, v)
    }
}

/// Independent searches on the elemental graphs of the canonical cover of
/// the range, merged into one top-k.
pub fn basic_search(
    index: &SegmentTreeIndex,
    ds: &SortedDataset,
    q: &[f32],
    filter: &RangeFilter,
    params: &SearchParams,
    scratch: &mut SearchScratch,
) -> Result<SearchResult> {
    root_checks(index, ds, q, params)?;
    scratch.ensure(0, ds.len());
    let mut stats = QueryStats::default();
    let mut merged: Vec<Neighbor> = Vec::new();
    for seg in index.tree().canonical_cover(filter.range) {
        let mut graph = SegmentGraph {
            index,
            ds,
            filter,
            layer: seg.layer as usize,
            scans: 0,
        };
        let mut walk = WalkCounters::default();
        let found = beam::beam_search(
            ds.vectors(),
            q,
            seg.midpoint(),
            params.beam,
            Output::Answer(params.k),
            &mut graph,
            scratch,
            &mut walk,
        );
        stats.absorb(&walk);
        stats.edge_scans += graph.scans;
        stats.select_calls += walk.hops;
        merged.extend(found);
    }
    merged.sort();
    merged.truncate(params.k);
    Ok(SearchResult {
        neighbors: merged,
        stats,
    })
}

struct FlatExpansion<'a> {
    graph: &'a FlatGraph,
    ds: &'a SortedDataset,
    filter: &'a RangeFilter,
    scans: u64,
}

impl Expansion for FlatExpansion<'_> {
    fn neighbors(&mut self, u: Rank, out: &mut Vec<Rank>) {
        let row = self.graph.neighbors(u);
        self.scans += row.len() as u64;
        out.extend_from_slice(row);
    }

    fn in_answer(&self, v: Rank) -> bool {
        self.filter.admits(self.ds, v)
    }
}

/// Beam search on a graph built for exactly the query's range.
pub fn flat_search(
    graph: &FlatGraph,
    ds: &SortedDataset,
    q: &[f32],
    filter: &RangeFilter,
    params: &SearchParams,
    scratch: &mut SearchScratch,
) -> Result<SearchResult> {
    params.validate()?;
    if !graph.range().covers(&filter.range) || q.len() != ds.dim() {
        return Err(Error::InvalidInput("query does not fit the per-range graph".into()));
    }
    scratch.ensure(0, ds.len());
    let mut exp = FlatExpansion {
        graph,
        ds,
        filter,
        scans: 0,
    };
    let mut walk = WalkCounters::default();
    let neighbors = beam::beam_search(
        ds.vectors(),
        q,
        graph.entry(),
        params.beam,
        Output::Answer(params.k),
        &mut exp,
        scratch,
        &mut walk,
    );
    let mut stats = QueryStats {
        edge_scans: exp.scans,
        select_calls: walk.hops,
        ..QueryStats::default()
    };
    stats.absorb(&walk);
    Ok(SearchResult { neighbors, stats })
}
