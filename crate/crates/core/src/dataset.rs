//! Attribute-sorted datasets, rank ranges and workload generation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::vector::{Rank, Vectors};

/// An object as supplied by the caller, before sorting.
#[derive(Debug, Clone, PartialEq)]
pub struct DataObject {
    pub original_id: u32,
    pub vector: Vec<f32>,
    /// `attrs[0]` is the primary (graph-indexed) attribute.
    pub attrs: Vec<f64>,
}

/// Inclusive range of ranks `[lo, hi]`. Never empty; emptiness is modelled
/// as `Option<RankRange>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RankRange {
    pub lo: Rank,
    pub hi: Rank,
}

impl RankRange {
    pub fn new(lo: Rank, hi: Rank) -> Self {
        assert!(lo <= hi, "rank range [{lo}, {hi}] is inverted");
        Self { lo, hi }
    }

    #[inline]
    pub fn contains(&self, r: Rank) -> bool {
        self.lo <= r && r <= self.hi
    }

    #[inline]
    pub fn len(&self) -> usize {
        (self.hi - self.lo) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn covers(&self, other: &RankRange) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    #[inline]
    pub fn intersect(&self, other: &RankRange) -> Option<RankRange> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(RankRange { lo, hi })
    }

    #[inline]
    pub fn midpoint(&self) -> Rank {
        // floor((lo + hi) / 2) without overflow
        self.lo + (self.hi - self.lo) / 2
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<Rank> {
        self.lo..=self.hi
    }
}

/// Objects sorted ascending by the primary attribute (ties by original id),
/// with the groups of identical primary values.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedDataset {
    vectors: Vectors,
    /// Row-major `n x num_attrs`, rank order.
    attrs: Vec<f64>,
    num_attrs: usize,
    original_ids: Vec<u32>,
    /// Start rank of every group plus a trailing `n` sentinel.
    group_starts: Vec<Rank>,
    group_of: Vec<u32>,
}

impl SortedDataset {
    /// Sorts `vectors` (row `i` has original id `i`) by `attrs[i * num_attrs]`.
    pub fn new(vectors: Vectors, attrs: Vec<f64>, num_attrs: usize) -> Result<Self> {
        let n = vectors.len();
        if n == 0 {
            return invalid("dataset is empty");
        }
        if n > u32::MAX as usize {
            return invalid("dataset too large for 32-bit ranks");
        }
        if num_attrs == 0 {
            return invalid("at least one attribute is required");
        }
        if attrs.len() != n * num_attrs {
            return invalid(format!(
                "{} attribute values for {n} vectors x {num_attrs} attributes",
                attrs.len()
            ));
        }
        if let Some(pos) = attrs.iter().position(|a| !a.is_finite()) {
            return invalid(format!("non-finite attribute in row {}", pos / num_attrs));
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            attrs[a * num_attrs]
                .total_cmp(&attrs[b * num_attrs])
                .then(a.cmp(&b))
        });

        let vectors = vectors.permuted(&order);
        let mut sorted_attrs = Vec::with_capacity(attrs.len());
        for &i in &order {
            sorted_attrs.extend_from_slice(&attrs[i * num_attrs..(i + 1) * num_attrs]);
        }
        let original_ids = order.iter().map(|&i| i as u32).collect();
        Ok(Self::assemble(vectors, sorted_attrs, num_attrs, original_ids))
    }

    fn assemble(vectors: Vectors, attrs: Vec<f64>, num_attrs: usize, original_ids: Vec<u32>) -> Self {
        let n = vectors.len();
        let mut group_starts = vec![0];
        let mut group_of = Vec::with_capacity(n);
        for r in 0..n {
            if r > 0 && attrs[r * num_attrs] != attrs[(r - 1) * num_attrs] {
                group_starts.push(r as Rank);
            }
            group_of.push((group_starts.len() - 1) as u32);
        }
        group_starts.push(n as Rank);
        Self {
            vectors,
            attrs,
            num_attrs,
            original_ids,
            group_starts,
            group_of,
        }
    }

    /// Reassembles a dataset already in rank order (as produced by [`Self::new`]).
    pub(crate) fn from_sorted_parts(
        vectors: Vectors,
        attrs: Vec<f64>,
        num_attrs: usize,
        original_ids: Vec<u32>,
    ) -> Result<Self> {
        let n = vectors.len();
        if n == 0 || num_attrs == 0 || attrs.len() != n * num_attrs || original_ids.len() != n {
            return invalid("inconsistent dataset dimensions");
        }
        if attrs.iter().any(|a| !a.is_finite()) {
            return invalid("non-finite attribute");
        }
        if (1..n).any(|r| attrs[(r - 1) * num_attrs] > attrs[r * num_attrs]) {
            return invalid("objects are not sorted by the primary attribute");
        }
        Ok(Self::assemble(vectors, attrs, num_attrs, original_ids))
    }

    pub fn from_objects(objects: Vec<DataObject>) -> Result<Self> {
        let Some(first) = objects.first() else {
            return invalid("dataset is empty");
        };
        let (dim, num_attrs) = (first.vector.len(), first.attrs.len());
        let mut ids: Vec<u32> = objects.iter().map(|o| o.original_id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return invalid("duplicate original ids");
        }
        let mut data = Vec::with_capacity(objects.len() * dim);
        let mut attrs = Vec::with_capacity(objects.len() * num_attrs);
        for o in &objects {
            if o.vector.len() != dim || o.attrs.len() != num_attrs {
                return invalid(format!("object {} has inconsistent shape", o.original_id));
            }
            data.extend_from_slice(&o.vector);
            attrs.extend_from_slice(&o.attrs);
        }
        let mut ds = Self::new(Vectors::new(dim, data)?, attrs, num_attrs)?;
        for id in ds.original_ids.iter_mut() {
            *id = objects[*id as usize].original_id;
        }
        Ok(ds)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.original_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original_ids.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.vectors.dim()
    }

    pub fn num_attrs(&self) -> usize {
        self.num_attrs
    }

    pub fn vectors(&self) -> &Vectors {
        &self.vectors
    }

    #[inline]
    pub fn vector(&self, r: Rank) -> &[f32] {
        self.vectors.get(r as usize)
    }

    #[inline]
    pub fn attr(&self, r: Rank, j: usize) -> f64 {
        self.attrs[r as usize * self.num_attrs + j]
    }

    pub fn attrs_of(&self, r: Rank) -> &[f64] {
        let i = r as usize * self.num_attrs;
        &self.attrs[i..i + self.num_attrs]
    }

    #[inline]
    pub fn original_id(&self, r: Rank) -> u32 {
        self.original_ids[r as usize]
    }

    pub fn original_ids(&self) -> &[u32] {
        &self.original_ids
    }

    pub fn object(&self, r: Rank) -> DataObject {
        DataObject {
            original_id: self.original_id(r),
            vector: self.vector(r).to_vec(),
            attrs: self.attrs_of(r).to_vec(),
        }
    }

    /// Start rank of each group of identical primary values, plus `n`.
    pub fn group_starts(&self) -> &[Rank] {
        &self.group_starts
    }

    pub fn num_groups(&self) -> usize {
        self.group_starts.len() - 1
    }

    #[inline]
    pub fn group_of(&self, r: Rank) -> u32 {
        self.group_of[r as usize]
    }

    /// Half-open rank interval of every group.
    pub fn groups(&self) -> Vec<std::ops::Range<Rank>> {
        self.group_starts.windows(2).map(|w| w[0]..w[1]).collect()
    }

    pub fn full_range(&self) -> RankRange {
        RankRange::new(0, (self.len() - 1) as Rank)
    }

    /// Maps a closed raw interval on the primary attribute to ranks.
    ///
    /// `lo` is the first rank with value `>= a_l`, `hi` the last with value
    /// `<= a_r`. Both ends land on group boundaries by construction.
    pub fn map_range(&self, a_l: f64, a_r: f64) -> Option<RankRange> {
        if a_l.is_nan() || a_r.is_nan() || a_l > a_r {
            return None;
        }
        let n = self.len();
        let lo = partition_point(n, |r| self.attr(r as Rank, 0) < a_l);
        let end = partition_point(n, |r| self.attr(r as Rank, 0) <= a_r);
        (lo < end).then(|| RankRange::new(lo as Rank, (end - 1) as Rank))
    }

    /// Widens a rank range so it never splits a group.
    pub fn align_to_groups(&self, range: RankRange) -> RankRange {
        let lo = self.group_starts[self.group_of(range.lo) as usize];
        let hi = self.group_starts[self.group_of(range.hi) as usize + 1] - 1;
        RankRange::new(lo, hi)
    }

    /// Raw primary-attribute interval whose [`map_range`](Self::map_range)
    /// image is exactly `range` (which must be group aligned).
    pub fn raw_range(&self, range: RankRange) -> (f64, f64) {
        (self.attr(range.lo, 0), self.attr(range.hi, 0))
    }

    /// Whether rank `r` satisfies every secondary predicate.
    #[inline]
    pub fn satisfies(&self, r: Rank, secondary: &[AttrPredicate]) -> bool {
        secondary.iter().all(|p| p.matches(self.attr(r, p.attr)))
    }

    /// Resolves a query's raw intervals into a rank range plus secondary
    /// predicates. `None` when the primary interval selects nothing.
    pub fn resolve(&self, ranges: &[(f64, f64)]) -> Result<Option<RangeFilter>> {
        if ranges.is_empty() {
            return invalid("query has no attribute ranges");
        }
        if ranges.len() > self.num_attrs {
            return invalid(format!(
                "query has {} ranges but dataset has {} attributes",
                ranges.len(),
                self.num_attrs
            ));
        }
        if let Some((l, r)) = ranges.iter().find(|(l, r)| l.partial_cmp(r).is_none_or(|o| o.is_gt())) {
            return invalid(format!("inverted range [{l}, {r}]"));
        }
        let Some(range) = self.map_range(ranges[0].0, ranges[0].1) else {
            return Ok(None);
        };
        let secondary = ranges[1..]
            .iter()
            .enumerate()
            .map(|(j, &(lo, hi))| AttrPredicate { attr: j + 1, lo, hi })
            .collect();
        Ok(Some(RangeFilter { range, secondary }))
    }
}

fn partition_point(n: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Closed interval predicate on one attribute column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttrPredicate {
    pub attr: usize,
    pub lo: f64,
    pub hi: f64,
}

impl AttrPredicate {
    #[inline]
    pub fn matches(&self, value: f64) -> bool {
        self.lo <= value && value <= self.hi
    }
}

/// A query's filter after mapping: rank range on the primary attribute plus
/// raw predicates on the others.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeFilter {
    pub range: RankRange,
    pub secondary: Vec<AttrPredicate>,
}

impl RangeFilter {
    pub fn primary(range: RankRange) -> Self {
        Self {
            range,
            secondary: Vec::new(),
        }
    }

    #[inline]
    pub fn admits(&self, ds: &SortedDataset, r: Rank) -> bool {
        self.range.contains(r) && ds.satisfies(r, &self.secondary)
    }
}

/// A query vector plus raw ranges, one per attribute used.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub vector: Vec<f32>,
    pub ranges: Vec<(f64, f64)>,
    pub k: usize,
}

/// One line of a workload file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadQuery {
    pub query_index: usize,
    pub ranges: Vec<(f64, f64)>,
    pub k: usize,
    /// Range-fraction exponent `i` (range covers `n / 2^i` objects).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    pub queries: Vec<WorkloadQuery>,
    pub seed: u64,
}

impl Workload {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Sub-workload of the queries with the given fraction exponent.
    pub fn with_fraction(&self, exponent: u32) -> Workload {
        Workload {
            queries: self
                .queries
                .iter()
                .filter(|q| q.fraction == Some(exponent))
                .cloned()
                .collect(),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FractionSpec {
    /// Every range covers `n / 2^i` objects, `i` in `0..=9`.
    Fixed(u32),
    /// Ten equal random subsets, subset `i` gets exponent `i`.
    Mixed,
}

impl std::str::FromStr for FractionSpec {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("mixed") {
            return Ok(FractionSpec::Mixed);
        }
        match s.parse::<u32>() {
            Ok(i) if i <= 9 => Ok(FractionSpec::Fixed(i)),
            _ => invalid(format!("fraction must be 0..9 or 'mixed', got '{s}'")),
        }
    }
}

pub const MIXED_SUBSETS: u32 = 10;

/// Exponent assigned to each of `num_queries` queries.
fn assign_exponents(num_queries: usize, spec: FractionSpec, rng: &mut ChaCha8Rng) -> Vec<u32> {
    match spec {
        FractionSpec::Fixed(i) => vec![i; num_queries],
        FractionSpec::Mixed => {
            let mut perm: Vec<usize> = (0..num_queries).collect();
            perm.shuffle(rng);
            let mut exps = vec![0; num_queries];
            let subsets = MIXED_SUBSETS as usize;
            for (pos, &q) in perm.iter().enumerate() {
                exps[q] = (pos * subsets / num_queries) as u32;
            }
            exps
        }
    }
}

fn window_len(n: usize, exponent: u32) -> Result<usize> {
    let len = n >> exponent;
    if len == 0 {
        return invalid(format!("range fraction 2^-{exponent} selects no objects at n = {n}"));
    }
    Ok(len)
}

/// Generates a single-attribute workload. Ranges are drawn in rank space and
/// converted to raw values so that `map_range` reproduces them exactly.
///
/// Randomness comes from ChaCha8 seeded with `seed`.
pub fn gen_workload(
    ds: &SortedDataset,
    num_queries: usize,
    spec: FractionSpec,
    k: usize,
    seed: u64,
) -> Result<Workload> {
    if let FractionSpec::Fixed(i) = spec {
        if i > 9 {
            return invalid(format!("fraction exponent {i} outside 0..9"));
        }
    }
    let n = ds.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exps = assign_exponents(num_queries, spec, &mut rng);
    let mut queries = Vec::with_capacity(num_queries);
    for (query_index, &exp) in exps.iter().enumerate() {
        let len = window_len(n, exp)?;
        let start = rng.gen_range(0..=n - len);
        let range = ds.align_to_groups(RankRange::new(start as Rank, (start + len - 1) as Rank));
        queries.push(WorkloadQuery {
            query_index,
            ranges: vec![ds.raw_range(range)],
            k,
            fraction: Some(exp),
        });
    }
    Ok(Workload { queries, seed })
}

/// Multi-attribute workload: attribute `j` gets a random window covering
/// `n / 2^exponents[j]` objects in that attribute's sorted order.
/// The recorded fraction is the primary attribute's exponent.
pub fn gen_multi_workload(
    ds: &SortedDataset,
    num_queries: usize,
    exponents: &[u32],
    k: usize,
    seed: u64,
) -> Result<Workload> {
    if exponents.is_empty() || exponents.len() > ds.num_attrs() {
        return invalid(format!(
            "{} exponents for {} attributes",
            exponents.len(),
            ds.num_attrs()
        ));
    }
    let n = ds.len();
    let sorted_cols: Vec<Vec<f64>> = (1..exponents.len())
        .map(|j| {
            let mut col: Vec<f64> = (0..n).map(|r| ds.attr(r as Rank, j)).collect();
            col.sort_by(f64::total_cmp);
            col
        })
        .collect();
    let lens = exponents
        .iter()
        .map(|&e| window_len(n, e))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut queries = Vec::with_capacity(num_queries);
    for query_index in 0..num_queries {
        let start = rng.gen_range(0..=n - lens[0]);
        let primary = ds.align_to_groups(RankRange::new(
            start as Rank,
            (start + lens[0] - 1) as Rank,
        ));
        let mut ranges = vec![ds.raw_range(primary)];
        for (col, &len) in sorted_cols.iter().zip(&lens[1..]) {
            let s = rng.gen_range(0..=n - len);
            ranges.push((col[s], col[s + len - 1]));
        }
        queries.push(WorkloadQuery {
            query_index,
            ranges,
            k,
            fraction: Some(exponents[0]),
        });
    }
    Ok(Workload { queries, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ds_1d(attrs: &[f64]) -> SortedDataset {
        let v = Vectors::new(1, (0..attrs.len()).map(|i| i as f32).collect()).unwrap();
        SortedDataset::new(v, attrs.to_vec(), 1).unwrap()
    }

    #[test]
    fn sorts_by_primary_attribute() {
        let ds = ds_1d(&[5.0, 1.0, 3.0]);
        assert_eq!(ds.original_ids(), &[1, 2, 0]);
        assert_eq!(ds.vector(0), &[1.0]);
        assert_eq!(ds.attr(2, 0), 5.0);
    }

    #[test]
    fn groups_duplicates() {
        let ds = ds_1d(&[2.0, 2.0, 7.0]);
        assert_eq!(ds.groups(), vec![0..2, 2..3]);
        assert_eq!(ds.group_of(1), 0);
        assert_eq!(ds.group_of(2), 1);
    }

    #[test]
    fn ties_broken_by_original_id() {
        let ds = ds_1d(&[4.0, 1.0, 4.0, 1.0]);
        assert_eq!(ds.original_ids(), &[1, 3, 0, 2]);
    }

    #[test]
    fn from_objects_keeps_ids() {
        let objs = vec![
            DataObject { original_id: 70, vector: vec![0.0], attrs: vec![9.0] },
            DataObject { original_id: 11, vector: vec![1.0], attrs: vec![3.0] },
        ];
        let ds = SortedDataset::from_objects(objs).unwrap();
        assert_eq!(ds.original_ids(), &[11, 70]);
        assert_eq!(ds.object(1).vector, vec![0.0]);
    }

    #[test]
    fn load_errors() {
        let v = Vectors::new(1, vec![0.0, 1.0]).unwrap();
        assert!(SortedDataset::new(v.clone(), vec![1.0], 1).is_err());
        assert!(SortedDataset::new(v, vec![1.0, f64::NAN], 1).is_err());
    }

    #[test]
    fn map_range_examples() {
        let ds = ds_1d(&[1.0, 3.0, 5.0, 7.0]);
        assert_eq!(ds.map_range(2.0, 6.0), Some(RankRange::new(1, 2)));
        assert_eq!(ds.map_range(8.0, 9.0), None);
        assert_eq!(ds.map_range(0.0, 0.5), None);
        assert_eq!(ds.map_range(3.0, 3.0), Some(RankRange::new(1, 1)));
        assert_eq!(ds.map_range(4.0, 4.5), None);
        let dup = ds_1d(&[2.0, 2.0, 7.0]);
        assert_eq!(dup.map_range(2.0, 2.0), Some(RankRange::new(0, 1)));
    }

    #[test]
    fn resolve_builds_secondary_predicates() {
        let v = Vectors::new(1, vec![0.0; 3]).unwrap();
        let ds = SortedDataset::new(v, vec![1.0, 10.0, 2.0, 20.0, 3.0, 30.0], 2).unwrap();
        let f = ds.resolve(&[(1.0, 2.0), (15.0, 40.0)]).unwrap().unwrap();
        assert_eq!(f.range, RankRange::new(0, 1));
        assert!(!f.admits(&ds, 0));
        assert!(f.admits(&ds, 1));
        assert!(!f.admits(&ds, 2));
        assert!(ds.resolve(&[(3.0, 1.0)]).is_err());
        assert!(ds.resolve(&[]).is_err());
        assert_eq!(ds.resolve(&[(50.0, 60.0)]).unwrap(), None);
    }

    #[test]
    fn fixed_fraction_windows() {
        let attrs: Vec<f64> = (0..16).map(|i| i as f64 * 1.5).collect();
        let ds = ds_1d(&attrs);
        let w = gen_workload(&ds, 50, FractionSpec::Fixed(2), 10, 1).unwrap();
        for q in &w.queries {
            let r = ds.map_range(q.ranges[0].0, q.ranges[0].1).unwrap();
            assert_eq!(r.len(), 4);
        }
        let full = gen_workload(&ds, 5, FractionSpec::Fixed(0), 10, 1).unwrap();
        for q in &full.queries {
            assert_eq!(ds.map_range(q.ranges[0].0, q.ranges[0].1), Some(ds.full_range()));
        }
    }

    #[test]
    fn mixed_workload_has_ten_equal_subsets() {
        let attrs: Vec<f64> = (0..2048).map(|i| i as f64).collect();
        let ds = ds_1d(&attrs);
        let w = gen_workload(&ds, 1000, FractionSpec::Mixed, 10, 3).unwrap();
        for i in 0..10 {
            assert_eq!(w.with_fraction(i).len(), 100);
        }
    }

    #[test]
    fn zero_length_window_rejected() {
        let ds = ds_1d(&[1.0, 2.0, 3.0]);
        assert!(gen_workload(&ds, 1, FractionSpec::Fixed(5), 1, 0).is_err());
        assert!("10".parse::<FractionSpec>().is_err());
        assert_eq!("mixed".parse::<FractionSpec>().unwrap(), FractionSpec::Mixed);
    }

    #[test]
    fn workload_is_deterministic() {
        let attrs: Vec<f64> = (0..1000).map(|i| (i * 7 % 1000) as f64).collect();
        let ds = ds_1d(&attrs);
        let a = gen_workload(&ds, 100, FractionSpec::Mixed, 10, 99).unwrap();
        let b = gen_workload(&ds, 100, FractionSpec::Mixed, 10, 99).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn workload_round_trips_through_map_range(
            attrs in prop::collection::vec(0u32..40, 1..200),
            seed in any::<u64>(),
        ) {
            let attrs: Vec<f64> = attrs.into_iter().map(f64::from).collect();
            let ds = ds_1d(&attrs);
            let max_exp = (ds.len() as f64).log2().floor() as u32;
            let w = gen_workload(&ds, 20, FractionSpec::Fixed(max_exp.min(9)), 5, seed).unwrap();
            for q in &w.queries {
                let r = ds.map_range(q.ranges[0].0, q.ranges[0].1).unwrap();
                prop_assert_eq!(ds.align_to_groups(r), r);
                prop_assert!(r.len() >= ds.len() >> max_exp.min(9));
                prop_assert_eq!(ds.raw_range(r), q.ranges[0]);
            }
        }

        #[test]
        fn monotone_transform_preserves_rank_ranges(
            attrs in prop::collection::vec(-50i32..50, 1..100),
            a in -60i32..60,
            b in -60i32..60,
        ) {
            let (lo, hi) = (a.min(b) as f64 - 0.5, a.max(b) as f64 + 0.5);
            let f = |x: f64| (x / 4.0).exp() * 3.0 + 1.0;
            let attrs: Vec<f64> = attrs.into_iter().map(f64::from).collect();
            let ds = ds_1d(&attrs);
            let transformed: Vec<f64> = attrs.iter().map(|&x| f(x)).collect();
            let ds2 = ds_1d(&transformed);
            prop_assert_eq!(ds.original_ids(), ds2.original_ids());
            prop_assert_eq!(ds.groups(), ds2.groups());
            prop_assert_eq!(ds.map_range(lo, hi), ds2.map_range(f(lo), f(hi)));
        }

        #[test]
        fn groups_partition_ranks(attrs in prop::collection::vec(0u8..10, 1..80)) {
            let attrs: Vec<f64> = attrs.into_iter().map(f64::from).collect();
            let ds = ds_1d(&attrs);
            let groups = ds.groups();
            prop_assert_eq!(groups.first().unwrap().start, 0);
            prop_assert_eq!(groups.last().unwrap().end as usize, ds.len());
            for g in &groups {
                for r in g.clone() {
                    prop_assert_eq!(ds.attr(r, 0), ds.attr(g.start, 0));
                }
            }
            for w in groups.windows(2) {
                prop_assert_eq!(w[0].end, w[1].start);
                prop_assert!(ds.attr(w[0].start, 0) < ds.attr(w[1].start, 0));
            }
        }
    }
}
