//! Groundtruth, recall, and QPS-recall sweeps.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{basic_search, flat_search, infilter_search, postfilter_search, prefilter_search};
use crate::beam::{Neighbor, SearchScratch};
use crate::builder::build_flat;
use crate::dataset::{RangeFilter, RankRange, SortedDataset, Workload};
use crate::error::{invalid, Error, Result};
use crate::index::{BuildParams, SegmentTreeIndex};
use crate::search::{multi_attr_search, reachable_in_range, SearchParams, SearchResult};
use crate::vector::{l2_squared, Rank, Vectors};

/// Queries timed separately before the measured loop.
pub const WARMUP_QUERIES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Dedicated graph with layer skipping.
    IRange,
    /// Dedicated graph without layer skipping.
    IRangeNoSkip,
    Pre,
    Post,
    In,
    /// Separate searches on the canonical cover.
    Basic,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::IRange,
        Strategy::IRangeNoSkip,
        Strategy::Pre,
        Strategy::Post,
        Strategy::In,
        Strategy::Basic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::IRange => "irange",
            Strategy::IRangeNoSkip => "irange-noskip",
            Strategy::Pre => "pre",
            Strategy::Post => "post",
            Strategy::In => "in",
            Strategy::Basic => "basic",
        }
    }

    pub fn needs_index(self) -> bool {
        self != Strategy::Pre
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown strategy '{s}' (irange|irange-noskip|pre|post|in|basic)"
                ))
            })
    }
}

/// A workload query resolved against a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedQuery {
    pub query_index: usize,
    pub vector: Vec<f32>,
    pub ranges: Vec<(f64, f64)>,
    /// `None` when no object can satisfy the ranges.
    pub filter: Option<RangeFilter>,
    pub k: usize,
    pub fraction: Option<u32>,
}

/// Pairs workload lines with their query vectors and maps ranges to ranks.
pub fn prepare(ds: &SortedDataset, workload: &Workload, queries: &Vectors) -> Result<Vec<PreparedQuery>> {
    if queries.dim() != ds.dim() {
        return invalid(format!(
            "query vectors have dim {}, dataset has dim {}",
            queries.dim(),
            ds.dim()
        ));
    }
    workload
        .queries
        .iter()
        .map(|wq| {
            if wq.query_index >= queries.len() {
                return invalid(format!(
                    "query_index {} but only {} query vectors",
                    wq.query_index,
                    queries.len()
                ));
            }
            if wq.k == 0 {
                return invalid(format!("query {}: k must be positive", wq.query_index));
            }
            Ok(PreparedQuery {
                query_index: wq.query_index,
                vector: queries.get(wq.query_index).to_vec(),
                ranges: wq.ranges.clone(),
                filter: ds.resolve(&wq.ranges)?,
                k: wq.k,
                fraction: wq.fraction,
            })
        })
        .collect()
}

/// Exact k-NN for one query by scanning every object and testing the raw
/// attribute ranges directly. Returns original ids, nearest first.
pub fn exact_knn(ds: &SortedDataset, q: &[f32], ranges: &[(f64, f64)], k: usize) -> Vec<u32> {
    let mut hits: Vec<Neighbor> = (0..ds.len() as Rank)
        .filter(|&r| {
            ranges
                .iter()
                .enumerate()
                .all(|(j, &(lo, hi))| lo <= ds.attr(r, j) && ds.attr(r, j) <= hi)
        })
        .map(|r| Neighbor {
            rank: r,
            dist: l2_squared(q, ds.vector(r)),
        })
        .collect();
    hits.sort();
    hits.iter().take(k).map(|n| ds.original_id(n.rank)).collect()
}

/// Brute-force groundtruth for every query, in parallel across queries.
pub fn groundtruth(ds: &SortedDataset, queries: &[PreparedQuery]) -> Result<Vec<Vec<u32>>> {
    if let Some(q) = queries.iter().find(|q| q.ranges.len() > ds.num_attrs()) {
        return invalid(format!(
            "query {} has {} ranges but the dataset has {} attributes",
            q.query_index,
            q.ranges.len(),
            ds.num_attrs()
        ));
    }
    Ok(queries
        .par_iter()
        .map(|q| exact_knn(ds, &q.vector, &q.ranges, q.k))
        .collect())
}

/// `|gt ∩ found| / min(k, |gt|)` over the first `k` groundtruth ids;
/// 1 when nothing qualifies.
pub fn recall(gt: &[u32], found: &[u32], k: usize) -> f64 {
    let gt = &gt[..gt.len().min(k)];
    if gt.is_empty() {
        return 1.0;
    }
    let hits = gt.iter().filter(|id| found.contains(id)).count();
    hits as f64 / gt.len() as f64
}

/// Everything a strategy may need to answer a query.
#[derive(Clone, Copy)]
pub struct Searcher<'a> {
    pub ds: &'a SortedDataset,
    pub index: Option<&'a SegmentTreeIndex>,
}

impl Searcher<'_> {
    /// Runs `strategy` on one query. An empty filter yields an empty result.
    pub fn run(
        &self,
        strategy: Strategy,
        q: &[f32],
        filter: Option<&RangeFilter>,
        params: &SearchParams,
        scratch: &mut SearchScratch,
    ) -> Result<SearchResult> {
        let Some(f) = filter else {
            params.validate()?;
            return Ok(SearchResult::default());
        };
        if strategy == Strategy::Pre {
            params.validate()?;
            if q.len() != self.ds.dim() {
                return invalid(format!("query has dim {}, dataset {}", q.len(), self.ds.dim()));
            }
            return Ok(prefilter_search(self.ds, q, f, params.k));
        }
        let Some(index) = self.index else {
            return Err(Error::InvalidConfig(format!("strategy '{strategy}' needs an index")));
        };
        let ds = self.ds;
        match strategy {
            Strategy::IRange => multi_attr_search(index, ds, q, f, params, scratch),
            Strategy::IRangeNoSkip => {
                let p = SearchParams { skip_layers: false, ..*params };
                multi_attr_search(index, ds, q, f, &p, scratch)
            }
            Strategy::Post => postfilter_search(index, ds, q, f, params, scratch),
            Strategy::In => infilter_search(index, ds, q, f, params, scratch),
            Strategy::Basic => basic_search(index, ds, q, f, params, scratch),
            Strategy::Pre => unreachable!(),
        }
    }
}

/// One point of a QPS-recall curve. Counters are means per query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub strategy: String,
    pub beam: usize,
    pub recall: f64,
    pub qps: f64,
    pub dist_comps: f64,
    pub edge_scans: f64,
}

struct Measured {
    metrics: Metrics,
    secs: f64,
    queries: usize,
}

fn query_params(base: &SearchParams, beam: usize, q: &PreparedQuery) -> SearchParams {
    SearchParams {
        beam,
        k: q.k,
        seed: base.seed.wrapping_add(q.query_index as u64),
        ..*base
    }
}

fn measure(
    searcher: &Searcher,
    label: &str,
    queries: &[PreparedQuery],
    gt: &[Vec<u32>],
    beam: usize,
    base: &SearchParams,
    run: &mut dyn FnMut(&PreparedQuery, &SearchParams, &mut SearchScratch) -> Result<SearchResult>,
) -> Result<Measured> {
    if gt.len() != queries.len() {
        return invalid(format!("{} groundtruth rows for {} queries", gt.len(), queries.len()));
    }
    let mut scratch = SearchScratch::new(searcher.ds.len());
    for q in queries.iter().take(WARMUP_QUERIES) {
        run(q, &query_params(base, beam, q), &mut scratch)?;
    }
    let mut results = Vec::with_capacity(queries.len());
    let start = Instant::now();
    for q in queries {
        results.push(run(q, &query_params(base, beam, q), &mut scratch)?);
    }
    let secs = start.elapsed().as_secs_f64();

    let nq = queries.len().max(1) as f64;
    let mut rec = 0.0;
    let mut dist = 0u64;
    let mut scans = 0u64;
    for ((q, res), g) in queries.iter().zip(&results).zip(gt) {
        rec += recall(g, &res.original_ids(searcher.ds), q.k);
        dist += res.stats.dist_comps;
        scans += res.stats.edge_scans;
    }
    Ok(Measured {
        metrics: Metrics {
            strategy: label.to_string(),
            beam,
            recall: rec / nq,
            qps: if secs > 0.0 { queries.len() as f64 / secs } else { f64::INFINITY },
            dist_comps: dist as f64 / nq,
            edge_scans: scans as f64 / nq,
        },
        secs,
        queries: queries.len(),
    })
}

fn check_beams(beams: &[usize]) -> Result<()> {
    if beams.is_empty() || beams.contains(&0) {
        return Err(Error::InvalidConfig("beams must be a non-empty list of positive sizes".into()));
    }
    if beams.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("beams must be strictly ascending".into()));
    }
    Ok(())
}

/// Runs `strategy` over all queries at each beam, single-threaded, one row per beam.
///
/// `base` supplies the out-of-range policy, seed and skipping flag; beam and
/// `k` come from the sweep and the queries. Timing excludes a warm-up pass
/// over the first [`WARMUP_QUERIES`] queries.
pub fn sweep(
    searcher: &Searcher,
    strategy: Strategy,
    queries: &[PreparedQuery],
    gt: &[Vec<u32>],
    beams: &[usize],
    base: &SearchParams,
) -> Result<Vec<Metrics>> {
    check_beams(beams)?;
    if strategy.needs_index() && searcher.index.is_none() {
        return Err(Error::InvalidConfig(format!("strategy '{strategy}' needs an index")));
    }
    beams
        .iter()
        .map(|&beam| {
            let mut run = |q: &PreparedQuery, p: &SearchParams, s: &mut SearchScratch| {
                searcher.run(strategy, &q.vector, q.filter.as_ref(), p, s)
            };
            measure(searcher, strategy.name(), queries, gt, beam, base, &mut run)
                .map(|m| m.metrics)
        })
        .collect()
}

/// `value` at `target` recall, interpolating linearly in recall between the
/// bracketing sweep points. `None` if the curve never reaches `target`.
pub fn at_recall(curve: &[Metrics], target: f64, value: impl Fn(&Metrics) -> f64) -> Option<f64> {
    let i = curve.iter().position(|m| m.recall >= target)?;
    let hi = &curve[i];
    if i == 0 || hi.recall == target {
        return Some(value(hi));
    }
    let lo = &curve[i - 1];
    if lo.recall >= hi.recall {
        return Some(value(hi));
    }
    let t = (target - lo.recall) / (hi.recall - lo.recall);
    Some(value(lo) + t * (value(hi) - value(lo)))
}

pub fn qps_at_recall(curve: &[Metrics], target: f64) -> Option<f64> {
    at_recall(curve, target, |m| m.qps)
}

/// First sweep point with recall at least `target`.
pub fn first_reaching(curve: &[Metrics], target: f64) -> Option<&Metrics> {
    curve.iter().find(|m| m.recall >= target)
}

pub fn write_metrics_csv<W: Write>(out: W, rows: &[Metrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics_csv(path: impl AsRef<std::path::Path>) -> Result<Vec<Metrics>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::InvalidInput(e.to_string()))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::InvalidInput(e.to_string())))
        .collect()
}

/// Sweeps of one distinct range: a graph built for exactly that range versus
/// the dedicated graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeComparison {
    pub range: RankRange,
    pub queries: usize,
    pub oracle_build_dist_comps: u64,
    pub oracle: Vec<Metrics>,
    pub irange: Vec<Metrics>,
    /// In-range objects reachable from the entry point of the dedicated graph.
    pub reachable: usize,
}

/// Per-range comparisons plus pooled curves over all queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub ranges: Vec<RangeComparison>,
    pub oracle: Vec<Metrics>,
    pub irange: Vec<Metrics>,
}

fn pool(label: &str, parts: &[Vec<Measured>], beams: &[usize]) -> Vec<Metrics> {
    beams
        .iter()
        .enumerate()
        .map(|(b, &beam)| {
            let (mut secs, mut nq, mut rec, mut dist, mut scans) = (0.0, 0usize, 0.0, 0.0, 0.0);
            for p in parts {
                let m = &p[b];
                let w = m.queries as f64;
                secs += m.secs;
                nq += m.queries;
                rec += m.metrics.recall * w;
                dist += m.metrics.dist_comps * w;
                scans += m.metrics.edge_scans * w;
            }
            let w = nq.max(1) as f64;
            Metrics {
                strategy: label.to_string(),
                beam,
                recall: rec / w,
                qps: if secs > 0.0 { nq as f64 / secs } else { f64::INFINITY },
                dist_comps: dist / w,
                edge_scans: scans / w,
            }
        })
        .collect()
}

/// For each distinct primary range in `queries`, builds a fresh graph over
/// just that range with `build` parameters and sweeps it against the
/// dedicated graph on the same queries.
pub fn oracle_rebuild_compare(
    index: &SegmentTreeIndex,
    ds: &SortedDataset,
    queries: &[PreparedQuery],
    gt: &[Vec<u32>],
    build: &BuildParams,
    beams: &[usize],
    base: &SearchParams,
) -> Result<OracleReport> {
    check_beams(beams)?;
    if gt.len() != queries.len() {
        return invalid(format!("{} groundtruth rows for {} queries", gt.len(), queries.len()));
    }
    let mut groups: BTreeMap<RankRange, Vec<usize>> = BTreeMap::new();
    for (i, q) in queries.iter().enumerate() {
        if let Some(f) = &q.filter {
            groups.entry(f.range).or_default().push(i);
        }
    }
    let searcher = Searcher { ds, index: Some(index) };
    let mut ranges = Vec::new();
    let mut oracle_parts = Vec::new();
    let mut irange_parts = Vec::new();
    for (range, members) in groups {
        let qs: Vec<PreparedQuery> = members.iter().map(|&i| queries[i].clone()).collect();
        let g: Vec<Vec<u32>> = members.iter().map(|&i| gt[i].clone()).collect();
        let graph = build_flat(ds, range, build)?;
        let mut oracle = Vec::new();
        let mut irange = Vec::new();
        for &beam in beams {
            let mut run_flat = |q: &PreparedQuery, p: &SearchParams, s: &mut SearchScratch| {
                flat_search(&graph, ds, &q.vector, q.filter.as_ref().unwrap(), p, s)
            };
            oracle.push(measure(&searcher, "oracle", &qs, &g, beam, base, &mut run_flat)?);
            let mut run_ir = |q: &PreparedQuery, p: &SearchParams, s: &mut SearchScratch| {
                searcher.run(Strategy::IRange, &q.vector, q.filter.as_ref(), p, s)
            };
            irange.push(measure(&searcher, "irange", &qs, &g, beam, base, &mut run_ir)?);
        }
        ranges.push(RangeComparison {
            range,
            queries: qs.len(),
            oracle_build_dist_comps: graph.build_dist_comps(),
            oracle: oracle.iter().map(|m| m.metrics.clone()).collect(),
            irange: irange.iter().map(|m| m.metrics.clone()).collect(),
            reachable: reachable_in_range(index, range),
        });
        oracle_parts.push(oracle);
        irange_parts.push(irange);
    }
    Ok(OracleReport {
        oracle: pool("oracle", &oracle_parts, beams),
        irange: pool("irange", &irange_parts, beams),
        ranges,
    })
}

/// Ranges of `queries` whose dedicated graph does not reach every in-range
/// object from the entry point, with the reachable count.
pub fn unreachable_ranges(index: &SegmentTreeIndex, queries: &[PreparedQuery]) -> Vec<(RankRange, usize)> {
    let mut seen = std::collections::BTreeSet::new();
    queries
        .iter()
        .filter_map(|q| q.filter.as_ref().map(|f| f.range))
        .filter(|r| seen.insert(*r))
        .filter_map(|r| {
            let reach = reachable_in_range(index, r);
            (reach < r.len()).then_some((r, reach))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::build_index;
    use crate::dataset::{gen_workload, FractionSpec, WorkloadQuery};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize) -> (SortedDataset, SegmentTreeIndex, Vectors) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v: Vec<f32> = (0..n * 4).map(|_| rng.gen()).collect();
        let attrs: Vec<f64> = (0..n * 2).map(|_| rng.gen_range(0..1000) as f64).collect();
        let ds = SortedDataset::new(Vectors::new(4, v).unwrap(), attrs, 2).unwrap();
        let (index, _) = build_index(&ds, &BuildParams { m: 8, ef: 32, ..Default::default() }).unwrap();
        let qv: Vec<f32> = (0..50 * 4).map(|_| rng.gen()).collect();
        (ds, index, Vectors::new(4, qv).unwrap())
    }

    #[test]
    fn recall_examples() {
        assert_eq!(recall(&[1, 2, 3, 4], &[4, 3, 9, 8], 4), 0.5);
        assert_eq!(recall(&[1, 2], &[2, 1, 5], 10), 1.0);
        assert_eq!(recall(&[], &[], 10), 1.0);
        assert_eq!(recall(&[1, 2, 3], &[3], 2), 0.0);
        // Order of the result does not matter.
        assert_eq!(recall(&[1, 2, 3], &[3, 2, 1], 3), recall(&[1, 2, 3], &[1, 2, 3], 3));
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("hnsw".parse::<Strategy>().is_err());
    }

    #[test]
    fn groundtruth_full_range_is_global_top_k() {
        let (ds, _, qv) = setup(300);
        let w = Workload {
            queries: vec![WorkloadQuery { query_index: 3, ranges: vec![(-1e9, 1e9)], k: 10, fraction: None }],
            seed: 0,
        };
        let qs = prepare(&ds, &w, &qv).unwrap();
        let gt = groundtruth(&ds, &qs).unwrap();
        let mut all: Vec<(f32, u32)> = (0..300)
            .map(|r| (l2_squared(qv.get(3), ds.vector(r)), ds.original_id(r)))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(gt[0], all.iter().take(10).map(|x| x.1).collect::<Vec<_>>());
    }

    #[test]
    fn groundtruth_short_and_empty_rows() {
        let (ds, _, qv) = setup(300);
        let lo = ds.attr(0, 0);
        let w = Workload {
            queries: vec![
                WorkloadQuery { query_index: 0, ranges: vec![(lo, lo)], k: 10, fraction: None },
                WorkloadQuery { query_index: 1, ranges: vec![(2000.0, 3000.0)], k: 10, fraction: None },
            ],
            seed: 0,
        };
        let qs = prepare(&ds, &w, &qv).unwrap();
        let gt = groundtruth(&ds, &qs).unwrap();
        let expected = (0..300).filter(|&r| ds.attr(r, 0) == lo).count();
        assert_eq!(gt[0].len(), expected.min(10));
        assert!(gt[1].is_empty());
        assert!(qs[1].filter.is_none());
    }

    #[test]
    fn prefilter_sweep_is_exact() {
        let (ds, index, qv) = setup(600);
        let w = gen_workload(&ds, 30, FractionSpec::Mixed, 5, 1).unwrap();
        let qs = prepare(&ds, &w, &qv).unwrap();
        let gt = groundtruth(&ds, &qs).unwrap();
        let s = Searcher { ds: &ds, index: Some(&index) };
        let rows = sweep(&s, Strategy::Pre, &qs, &gt, &[5, 10], &SearchParams::new(5, 5)).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|m| m.recall == 1.0));
        let mean_len: f64 =
            qs.iter().map(|q| q.filter.as_ref().unwrap().range.len() as f64).sum::<f64>() / 30.0;
        assert!((rows[0].dist_comps - mean_len).abs() < 1e-9);
    }

    #[test]
    fn sweep_rejects_bad_beams_and_missing_index() {
        let (ds, _, qv) = setup(100);
        let w = gen_workload(&ds, 5, FractionSpec::Fixed(1), 5, 1).unwrap();
        let qs = prepare(&ds, &w, &qv).unwrap();
        let gt = groundtruth(&ds, &qs).unwrap();
        let s = Searcher { ds: &ds, index: None };
        let p = SearchParams::new(10, 5);
        assert!(sweep(&s, Strategy::Pre, &qs, &gt, &[20, 10], &p).is_err());
        assert!(sweep(&s, Strategy::Pre, &qs, &gt, &[], &p).is_err());
        assert!(sweep(&s, Strategy::IRange, &qs, &gt, &[10], &p).is_err());
    }

    #[test]
    fn irange_saturates_on_connected_ranges() {
        let (ds, index, qv) = setup(600);
        let w = gen_workload(&ds, 40, FractionSpec::Mixed, 5, 2).unwrap();
        let qs = prepare(&ds, &w, &qv).unwrap();
        let broken = unreachable_ranges(&index, &qs);
        for &(r, reach) in &broken {
            assert!(reach < r.len());
        }
        let connected: Vec<PreparedQuery> = qs
            .into_iter()
            .filter(|q| broken.iter().all(|b| Some(b.0) != q.filter.as_ref().map(|f| f.range)))
            .collect();
        assert!(connected.len() >= 30);
        let gt = groundtruth(&ds, &connected).unwrap();
        let s = Searcher { ds: &ds, index: Some(&index) };
        let rows = sweep(&s, Strategy::IRange, &connected, &gt, &[5, 600], &SearchParams::new(5, 5)).unwrap();
        assert_eq!(rows[1].recall, 1.0);
    }

    #[test]
    fn qps_interpolation() {
        let m = |recall, qps| Metrics {
            strategy: "x".into(),
            beam: 1,
            recall,
            qps,
            dist_comps: 0.0,
            edge_scans: 0.0,
        };
        let curve = vec![m(0.8, 1000.0), m(0.95, 400.0), m(0.99, 100.0)];
        assert!((qps_at_recall(&curve, 0.9).unwrap() - 600.0).abs() < 1e-9);
        assert_eq!(qps_at_recall(&curve, 0.5), Some(1000.0));
        assert_eq!(qps_at_recall(&curve, 0.999), None);
        assert_eq!(first_reaching(&curve, 0.9).unwrap().recall, 0.95);
        assert_eq!(at_recall(&curve, 0.95, |m| m.qps), Some(400.0));
    }

    #[test]
    fn metrics_csv_round_trip() {
        let rows = vec![Metrics {
            strategy: "irange".into(),
            beam: 10,
            recall: 0.5,
            qps: 123.5,
            dist_comps: 10.25,
            edge_scans: 3.0,
        }];
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("strategy,beam,recall,qps,dist_comps,edge_scans\n"));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, text).unwrap();
        assert_eq!(read_metrics_csv(&p).unwrap(), rows);
    }

    #[test]
    fn oracle_compare_groups_by_range() {
        let (ds, index, qv) = setup(400);
        let w = gen_workload(&ds, 4, FractionSpec::Fixed(2), 5, 3).unwrap();
        let mut queries = Vec::new();
        for (g, wq) in w.queries.iter().enumerate() {
            for j in 0..5 {
                queries.push(WorkloadQuery { query_index: g * 5 + j, ..wq.clone() });
            }
        }
        let w = Workload { queries, seed: 3 };
        let qs = prepare(&ds, &w, &qv).unwrap();
        let gt = groundtruth(&ds, &qs).unwrap();
        let build = BuildParams { m: 8, ef: 32, ..Default::default() };
        let rep = oracle_rebuild_compare(&index, &ds, &qs, &gt, &build, &[5, 50], &SearchParams::new(5, 5)).unwrap();
        assert!(rep.ranges.len() <= 4);
        assert_eq!(rep.ranges.iter().map(|r| r.queries).sum::<usize>(), 20);
        assert_eq!(rep.oracle.len(), 2);
        assert!(rep.oracle[1].recall >= 0.9);
    }
}
