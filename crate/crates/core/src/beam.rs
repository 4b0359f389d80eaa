//! Best-first beam search shared by index construction and every query strategy.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::vector::{l2_squared, Rank, Vectors};

/// A rank with its squared distance to the query. Orders by distance, then rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub rank: Rank,
    pub dist: f32,
}

impl Eq for Neighbor {}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.rank.cmp(&other.rank))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Candidate {
    nb: Neighbor,
    streak: u32,
}

/// Epoch-stamped visited set over `[base, base + len)`; clearing is O(1).
#[derive(Debug, Clone)]
pub(crate) struct Visited {
    base: Rank,
    marks: Vec<u32>,
    epoch: u32,
}

impl Visited {
    pub(crate) fn new(base: Rank, len: usize) -> Self {
        Self {
            base,
            marks: vec![0; len],
            epoch: 1,
        }
    }

    pub(crate) fn clear(&mut self) {
        if self.epoch == u32::MAX {
            self.marks.fill(0);
            self.epoch = 1;
        } else {
            self.epoch += 1;
        }
    }

    #[inline]
    pub(crate) fn contains(&self, r: Rank) -> bool {
        self.marks[(r - self.base) as usize] == self.epoch
    }

    #[inline]
    pub(crate) fn insert(&mut self, r: Rank) {
        self.marks[(r - self.base) as usize] = self.epoch;
    }

    pub(crate) fn covers(&self, base: Rank, len: usize) -> bool {
        self.base <= base && (base - self.base) as usize + len <= self.marks.len()
    }
}

/// Per-query scratch space. Reuse across queries to keep setup O(1).
#[derive(Debug, Clone)]
pub struct SearchScratch {
    pub(crate) visited: Visited,
    cand: BinaryHeap<Reverse<Candidate>>,
    beam: BinaryHeap<Neighbor>,
    answer: BinaryHeap<Neighbor>,
    nbrs: Vec<Rank>,
}

impl SearchScratch {
    /// Scratch able to search any rank of an `n`-object dataset.
    pub fn new(n: usize) -> Self {
        Self::with_window(0, n)
    }

    pub(crate) fn with_window(base: Rank, len: usize) -> Self {
        Self {
            visited: Visited::new(base, len),
            cand: BinaryHeap::new(),
            beam: BinaryHeap::new(),
            answer: BinaryHeap::new(),
            nbrs: Vec::new(),
        }
    }

    pub(crate) fn ensure(&mut self, base: Rank, len: usize) {
        if !self.visited.covers(base, len) {
            *self = Self::with_window(base, len);
        }
    }
}

/// What a particular strategy plugs into the search loop.
pub(crate) trait Expansion {
    /// Appends the out-neighbors of `u` to `out`.
    fn neighbors(&mut self, u: Rank, out: &mut Vec<Rank>);

    /// Streak `v` would carry when reached from a node with `parent_streak`,
    /// or `None` to leave `v` unvisited for now.
    #[inline]
    fn visit(&mut self, _v: Rank, _parent_streak: u32) -> Option<u32> {
        Some(0)
    }

    /// Whether `v` may occupy one of the `beam` slots that drive termination.
    #[inline]
    fn in_beam(&self, _v: Rank) -> bool {
        true
    }

    /// Whether `v` may be returned.
    #[inline]
    fn in_answer(&self, _v: Rank) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct WalkCounters {
    pub dist_comps: u64,
    pub hops: u64,
}

pub(crate) enum Output {
    /// Best `k` visited nodes passing `in_answer`.
    Answer(usize),
    /// The final beam.
    Beam,
}

/// Greedy beam search from `entry`.
///
/// Repeatedly expands the nearest unexpanded candidate and stops once it is
/// farther than the `beam`-th best beam node. Distances are computed only for
/// nodes not visited before. Returns ascending neighbors.
#[allow(clippy::too_many_arguments)]
pub(crate) fn beam_search<E: Expansion>(
    vectors: &Vectors,
    query: &[f32],
    entry: Rank,
    beam: usize,
    output: Output,
    exp: &mut E,
    scratch: &mut SearchScratch,
    counters: &mut WalkCounters,
) -> Vec<Neighbor> {
    debug_assert!(beam >= 1);
    let SearchScratch {
        visited,
        cand,
        beam: top,
        answer,
        nbrs,
    } = scratch;
    visited.clear();
    cand.clear();
    top.clear();
    answer.clear();
    let k = match output {
        Output::Answer(k) => k,
        Output::Beam => 0,
    };

    let offer_answer = |answer: &mut BinaryHeap<Neighbor>, nb: Neighbor| {
        if answer.len() < k {
            answer.push(nb);
        } else if k > 0 && nb < *answer.peek().unwrap() {
            answer.pop();
            answer.push(nb);
        }
    };

    visited.insert(entry);
    let d0 = l2_squared(query, vectors.get(entry as usize));
    counters.dist_comps += 1;
    let entry_nb = Neighbor { rank: entry, dist: d0 };
    let entry_in_beam = exp.in_beam(entry);
    cand.push(Reverse(Candidate {
        nb: entry_nb,
        streak: u32::from(!entry_in_beam),
    }));
    if entry_in_beam {
        top.push(entry_nb);
    }
    if exp.in_answer(entry) {
        offer_answer(answer, entry_nb);
    }

    while let Some(Reverse(c)) = cand.pop() {
        if top.len() >= beam && c.nb.dist > top.peek().unwrap().dist {
            break;
        }
        counters.hops += 1;
        nbrs.clear();
        exp.neighbors(c.nb.rank, nbrs);
        for &v in nbrs.iter() {
            if visited.contains(v) {
                continue;
            }
            let Some(streak) = exp.visit(v, c.streak) else {
                continue;
            };
            visited.insert(v);
            let nb = Neighbor {
                rank: v,
                dist: l2_squared(query, vectors.get(v as usize)),
            };
            counters.dist_comps += 1;
            if exp.in_answer(v) {
                offer_answer(answer, nb);
            }
            if top.len() < beam || nb < *top.peek().unwrap() {
                cand.push(Reverse(Candidate { nb, streak }));
                if exp.in_beam(v) {
                    top.push(nb);
                    if top.len() > beam {
                        top.pop();
                    }
                }
            }
        }
    }

    let heap = match output {
        Output::Answer(_) => std::mem::take(answer),
        Output::Beam => std::mem::take(top),
    };
    heap.into_sorted_vec()
}

/// Plain adjacency-list graph expansion (no filtering).
pub(crate) struct RowsExpansion<'a, F: Fn(Rank) -> &'a [Rank]> {
    pub rows: F,
}

impl<'a, F: Fn(Rank) -> &'a [Rank]> Expansion for RowsExpansion<'a, F> {
    #[inline]
    fn neighbors(&mut self, u: Rank, out: &mut Vec<Rank>) {
        out.extend_from_slice((self.rows)(u));
    }
}
