//! Segment-tree geometry over the groups of identical primary values.
//!
//! The tree is built over group indices `0..c`; with distinct values every
//! group is one rank and this is the textbook `[l, mid] / [mid + 1, r]` tree
//! over ranks. Leaves are single groups.

use crate::dataset::RankRange;
use crate::vector::Rank;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentTree {
    /// Start rank of each group plus a trailing `n` sentinel.
    group_starts: Vec<Rank>,
    group_of: Vec<u32>,
    /// Depth of each group's leaf.
    leaf_depth: Vec<u8>,
    num_layers: usize,
}

/// A tree node: ranks `[lo, hi]` made of groups `[glo, ghi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Segment {
    pub lo: Rank,
    pub hi: Rank,
    pub glo: u32,
    pub ghi: u32,
    /// Depth, root = 0.
    pub layer: u32,
}

impl Segment {
    #[inline]
    pub fn range(&self) -> RankRange {
        RankRange { lo: self.lo, hi: self.hi }
    }

    #[inline]
    pub fn len(&self) -> usize {
        (self.hi - self.lo) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn is_leaf(&self) -> bool {
        self.glo == self.ghi
    }

    #[inline]
    pub fn contains(&self, r: Rank) -> bool {
        self.lo <= r && r <= self.hi
    }

    #[inline]
    pub fn midpoint(&self) -> Rank {
        self.lo + (self.hi - self.lo) / 2
    }
}

impl SegmentTree {
    pub fn new(group_starts: Vec<Rank>) -> Self {
        assert!(group_starts.len() >= 2, "tree needs at least one group");
        let c = group_starts.len() - 1;
        let n = *group_starts.last().unwrap() as usize;
        let mut group_of = Vec::with_capacity(n);
        for g in 0..c {
            let size = (group_starts[g + 1] - group_starts[g]) as usize;
            assert!(size > 0, "empty group {g}");
            group_of.extend(std::iter::repeat_n(g as u32, size));
        }
        let mut leaf_depth = vec![0u8; c];
        fn walk(glo: usize, ghi: usize, depth: u8, out: &mut [u8]) {
            if glo == ghi {
                out[glo] = depth;
                return;
            }
            let mid = (glo + ghi) / 2;
            walk(glo, mid, depth + 1, out);
            walk(mid + 1, ghi, depth + 1, out);
        }
        walk(0, c - 1, 0, &mut leaf_depth);
        let num_layers = *leaf_depth.iter().max().unwrap() as usize + 1;
        Self {
            group_starts,
            group_of,
            leaf_depth,
            num_layers,
        }
    }

    /// One group per rank.
    pub fn distinct(n: usize) -> Self {
        Self::new((0..=n as Rank).collect())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.group_of.len()
    }

    pub fn num_groups(&self) -> usize {
        self.group_starts.len() - 1
    }

    #[inline]
    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn group_starts(&self) -> &[Rank] {
        &self.group_starts
    }

    #[inline]
    pub fn group_of(&self, r: Rank) -> u32 {
        self.group_of[r as usize]
    }

    /// Depth of the leaf holding `r`; `r` has an adjacency row at layers `0..=leaf_depth`.
    #[inline]
    pub fn leaf_depth(&self, r: Rank) -> u32 {
        self.leaf_depth[self.group_of(r) as usize] as u32
    }

    #[inline]
    pub fn present(&self, layer: usize, r: Rank) -> bool {
        layer as u32 <= self.leaf_depth(r)
    }

    #[inline]
    fn segment(&self, glo: u32, ghi: u32, layer: u32) -> Segment {
        Segment {
            lo: self.group_starts[glo as usize],
            hi: self.group_starts[ghi as usize + 1] - 1,
            glo,
            ghi,
            layer,
        }
    }

    #[inline]
    pub fn root(&self) -> Segment {
        self.segment(0, (self.num_groups() - 1) as u32, 0)
    }

    #[inline]
    pub fn children(&self, seg: &Segment) -> (Segment, Segment) {
        debug_assert!(!seg.is_leaf());
        let gmid = seg.glo + (seg.ghi - seg.glo) / 2;
        (
            self.segment(seg.glo, gmid, seg.layer + 1),
            self.segment(gmid + 1, seg.ghi, seg.layer + 1),
        )
    }

    /// Child of `seg` containing rank `r`.
    #[inline]
    pub fn child_containing(&self, seg: &Segment, r: Rank) -> Segment {
        let gmid = seg.glo + (seg.ghi - seg.glo) / 2;
        if self.group_of(r) <= gmid {
            self.segment(seg.glo, gmid, seg.layer + 1)
        } else {
            self.segment(gmid + 1, seg.ghi, seg.layer + 1)
        }
    }

    /// Segment containing `r` at `layer` (which must not exceed `r`'s leaf depth).
    pub fn segment_at(&self, layer: usize, r: Rank) -> Segment {
        let mut seg = self.root();
        while (seg.layer as usize) < layer {
            seg = self.child_containing(&seg, r);
        }
        seg
    }

    /// Segments present at `layer`, in rank order.
    pub fn layer_segments(&self, layer: usize) -> Vec<Segment> {
        let mut out = Vec::new();
        let mut stack = vec![self.root()];
        while let Some(seg) = stack.pop() {
            if seg.layer as usize == layer {
                out.push(seg);
            } else if !seg.is_leaf() {
                let (l, r) = self.children(&seg);
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    /// Canonical disjoint cover of `range` by maximal tree segments, in rank order.
    /// Leaves only partially inside a range that splits a group are included whole.
    pub fn canonical_cover(&self, range: RankRange) -> Vec<Segment> {
        let mut out = Vec::new();
        let mut stack = vec![self.root()];
        while let Some(seg) = stack.pop() {
            if seg.hi < range.lo || seg.lo > range.hi {
                continue;
            }
            if range.covers(&seg.range()) || seg.is_leaf() {
                out.push(seg);
                continue;
            }
            let (l, r) = self.children(&seg);
            stack.push(r);
            stack.push(l);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sixteen_objects_have_five_layers() {
        let t = SegmentTree::distinct(16);
        assert_eq!(t.num_layers(), 5);
        assert_eq!(t.layer_segments(0).len(), 1);
        assert_eq!(t.layer_segments(4).len(), 16);
    }

    #[test]
    fn singleton_tree() {
        let t = SegmentTree::distinct(1);
        assert_eq!(t.num_layers(), 1);
        assert!(t.root().is_leaf());
    }

    #[test]
    fn ten_objects_leaf_depths() {
        // Walk the mid-split recursion independently.
        fn depths(l: u32, r: u32, d: u32, out: &mut Vec<(u32, u32)>) {
            if l == r {
                out.push((l, d));
            } else {
                let m = (l + r) / 2;
                depths(l, m, d + 1, out);
                depths(m + 1, r, d + 1, out);
            }
        }
        let mut expect = Vec::new();
        depths(0, 9, 0, &mut expect);
        let t = SegmentTree::distinct(10);
        for (r, d) in expect {
            assert_eq!(t.leaf_depth(r), d);
            assert!(d == 3 || d == 4);
        }
        assert_eq!(t.num_layers(), 5);
        for layer in 0..t.num_layers() {
            for seg in t.layer_segments(layer) {
                for r in seg.lo..=seg.hi {
                    assert!(t.present(layer, r));
                    assert_eq!(t.segment_at(layer, r), seg);
                }
            }
        }
    }

    #[test]
    fn canonical_cover_matches_figure_example() {
        let t = SegmentTree::distinct(16);
        let cover = t.canonical_cover(RankRange::new(5, 14));
        let got: Vec<(u32, u32, u32)> = cover.iter().map(|s| (s.lo, s.hi, s.layer)).collect();
        assert_eq!(
            got,
            vec![(5, 5, 4), (6, 7, 3), (8, 11, 2), (12, 13, 3), (14, 14, 4)]
        );
    }

    #[test]
    fn cover_of_a_segment_is_itself() {
        let t = SegmentTree::distinct(16);
        let cover = t.canonical_cover(RankRange::new(8, 15));
        assert_eq!(cover.len(), 1);
        assert_eq!(cover[0].layer, 1);
    }

    #[test]
    fn groups_stay_whole() {
        let t = SegmentTree::new(vec![0, 3, 4, 9, 10]);
        assert_eq!(t.num_layers(), 3);
        let leaves: Vec<_> = (0..t.num_layers())
            .flat_map(|l| t.layer_segments(l))
            .filter(|s| s.is_leaf())
            .map(|s| (s.lo, s.hi))
            .collect();
        assert_eq!(leaves, vec![(0, 2), (3, 3), (4, 8), (9, 9)]);
    }

    proptest! {
        #[test]
        fn layers_partition_present_ranks(
            sizes in prop::collection::vec(1u32..5, 1..60)
        ) {
            let mut starts = vec![0];
            for s in &sizes {
                starts.push(starts.last().unwrap() + s);
            }
            let t = SegmentTree::new(starts);
            for layer in 0..t.num_layers() {
                let segs = t.layer_segments(layer);
                let mut covered = Vec::new();
                for s in &segs {
                    covered.extend(s.lo..=s.hi);
                }
                let present: Vec<Rank> =
                    (0..t.n() as Rank).filter(|&r| t.present(layer, r)).collect();
                prop_assert_eq!(covered, present);
            }
        }

        #[test]
        fn cover_partitions_range(n in 1usize..300, a in 0usize..300, b in 0usize..300) {
            let t = SegmentTree::distinct(n);
            let (lo, hi) = ((a % n).min(b % n), (a % n).max(b % n));
            let cover = t.canonical_cover(RankRange::new(lo as Rank, hi as Rank));
            let mut expect = lo as Rank;
            for s in &cover {
                prop_assert_eq!(s.lo, expect);
                expect = s.hi + 1;
            }
            prop_assert_eq!(expect, hi as Rank + 1);
        }
    }
}
