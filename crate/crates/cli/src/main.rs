mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::{required, Config};
use rangegraph::eval::{self, Metrics, PreparedQuery, Searcher, Strategy};
use rangegraph::{io, persist};
use rangegraph::{
    build_index, gen_multi_workload, gen_workload, BuildParams, FractionSpec, OorPolicy, QueryStats,
    SearchParams, SearchScratch, SegmentTreeIndex, SortedDataset, Vectors,
};

#[derive(Parser)]
#[command(name = "rangegraph", version, about = "Range-filtered nearest neighbor search over segment-tree graphs")]
struct Cli {
    /// JSON file with default values for any flag (kebab-case keys).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index and save it with its sorted dataset.
    Build(BuildArgs),
    /// Generate a range-filtered query workload (JSONL).
    GenWorkload(GenWorkloadArgs),
    /// Brute-force groundtruth (ivecs).
    Gt(GtArgs),
    /// Answer a workload with one strategy and report results as JSON.
    Search(SearchArgs),
    /// QPS-recall sweep over beam sizes (CSV).
    Bench(BenchArgs),
    /// Compare per-range rebuilt graphs against the index (CSV).
    OracleCompare(OracleArgs),
}

#[derive(Args, Clone, Default)]
struct DataArgs {
    /// Vectors: `.fvecs`, or raw little-endian f32 with `--dim`.
    #[arg(long)]
    vectors: Option<PathBuf>,
    /// Dimension of a raw f32 vector file.
    #[arg(long)]
    dim: Option<usize>,
    /// Attribute table (CSV or TSV), first column is the indexed attribute.
    #[arg(long)]
    attrs: Option<PathBuf>,
    /// The attribute table has a header row.
    #[arg(long)]
    header: bool,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Maximum out-degree per layer (default 16).
    #[arg(long)]
    m: Option<usize>,
    /// Candidate beam width during construction (default 100).
    #[arg(long)]
    ef: Option<usize>,
    /// PRNG seed (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Skip the reverse-edge pass.
    #[arg(long)]
    no_reverse_edges: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Index file; the dataset goes to `<out>.data`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenWorkloadArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Take the dataset from an index built earlier.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Number of queries to generate.
    #[arg(long)]
    n_queries: Option<usize>,
    /// Exponent `i` (range covers n/2^i objects) in 0..9, `mixed`, or a
    /// comma list with one exponent per attribute for conjunctive queries.
    #[arg(long)]
    fraction: Option<String>,
    /// Query vectors; must hold at least `--n-queries` vectors.
    #[arg(long)]
    query_vectors: Option<PathBuf>,
    /// Neighbors per query (default 10).
    #[arg(long)]
    k: Option<usize>,
    /// PRNG seed (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GtArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Index file written by `build`.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Workload JSONL from `gen-workload`.
    #[arg(long)]
    workload: Option<PathBuf>,
    /// Query vectors referenced by the workload's `query_index`.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Overrides the per-query `k` of the workload.
    #[arg(long)]
    k: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Index file written by `build`.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Workload JSONL from `gen-workload`.
    #[arg(long)]
    workload: Option<PathBuf>,
    /// Query vectors referenced by the workload.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// irange (default), irange-noskip, pre, post, in or basic.
    #[arg(long)]
    strategy: Option<String>,
    /// Search beam width.
    #[arg(long)]
    beam: Option<usize>,
    /// Neighbors per query (default 10).
    #[arg(long)]
    k: Option<usize>,
    /// never, always or adaptive (default).
    #[arg(long)]
    oor_policy: Option<String>,
    /// PRNG seed (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Index file written by `build`.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Workload JSONL from `gen-workload`.
    #[arg(long)]
    workload: Option<PathBuf>,
    /// Query vectors referenced by the workload.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Groundtruth ivecs from `gt`.
    #[arg(long)]
    gt: Option<PathBuf>,
    /// irange (default), irange-noskip, pre, post, in or basic.
    #[arg(long)]
    strategy: Option<String>,
    /// Ascending comma-separated beam sizes.
    #[arg(long, value_delimiter = ',')]
    beams: Option<Vec<usize>>,
    /// never, always or adaptive (default).
    #[arg(long)]
    oor_policy: Option<String>,
    /// PRNG seed (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Reuse an index instead of building one.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Workload JSONL from `gen-workload`.
    #[arg(long)]
    workload: Option<PathBuf>,
    /// Query vectors referenced by the workload.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Groundtruth ivecs from `gt`.
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Maximum out-degree per layer (default 16).
    #[arg(long)]
    m: Option<usize>,
    /// Candidate beam width during construction (default 100).
    #[arg(long)]
    ef: Option<usize>,
    /// PRNG seed (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Ascending comma-separated beam sizes (default 10,20,40,80,160).
    #[arg(long, value_delimiter = ',')]
    beams: Option<Vec<usize>>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

const DEFAULT_BEAMS: &[usize] = &[10, 20, 40, 80, 160];

fn data_path(index: &Path) -> PathBuf {
    let mut s = index.as_os_str().to_owned();
    s.push(".data");
    PathBuf::from(s)
}

fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(t) = threads {
        ensure!(t > 0, "--threads must be positive");
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn read_dataset(data: &DataArgs, cfg: &Config) -> Result<SortedDataset> {
    let vectors_path = required(data.vectors.clone(), cfg.vectors.clone(), "vectors")?;
    let attrs_path = required(data.attrs.clone(), cfg.attrs.clone(), "attrs")?;
    let vectors = io::read_vectors(&vectors_path, data.dim.or(cfg.dim))
        .with_context(|| format!("reading {}", vectors_path.display()))?;
    let (attrs, cols) = io::read_attrs(&attrs_path, data.header || cfg.header.unwrap_or(false))
        .with_context(|| format!("reading {}", attrs_path.display()))?;
    ensure!(
        attrs.len() / cols == vectors.len(),
        "{} has {} rows but {} has {} vectors",
        attrs_path.display(),
        attrs.len() / cols,
        vectors_path.display(),
        vectors.len()
    );
    Ok(SortedDataset::new(vectors, attrs, cols)?)
}

/// Dataset from explicit files, else the one saved next to the index.
fn dataset_and_index(
    data: &DataArgs,
    index: Option<PathBuf>,
    cfg: &Config,
    need_index: bool,
) -> Result<(SortedDataset, Option<SegmentTreeIndex>)> {
    let index_path = index.or(cfg.index.clone());
    let index = match (&index_path, need_index) {
        (Some(p), true) => Some(
            persist::load_index(p).with_context(|| format!("loading index {}", p.display()))?,
        ),
        (None, true) => bail!("this strategy needs --index"),
        _ => None,
    };
    let ds = match &index_path {
        Some(p) if data.vectors.is_none() && cfg.vectors.is_none() => {
            let dp = data_path(p);
            persist::load_dataset(&dp).with_context(|| format!("loading dataset {}", dp.display()))?
        }
        _ => read_dataset(data, cfg)?,
    };
    if let Some(ix) = &index {
        ensure!(
            ix.n() == ds.len() && ix.dim() == ds.dim(),
            "index (n = {}, d = {}) does not match dataset (n = {}, d = {})",
            ix.n(),
            ix.dim(),
            ds.len(),
            ds.dim()
        );
    }
    Ok((ds, index))
}

fn read_queries(flag: Option<PathBuf>, cfg: &Config, dim: Option<usize>) -> Result<Vectors> {
    let path = required(flag, cfg.queries.clone(), "queries")?;
    io::read_vectors(&path, dim).with_context(|| format!("reading {}", path.display()))
}

fn prepared(
    ds: &SortedDataset,
    workload: Option<PathBuf>,
    queries: Option<PathBuf>,
    cfg: &Config,
    dim: Option<usize>,
) -> Result<Vec<PreparedQuery>> {
    let wpath = required(workload, cfg.workload.clone(), "workload")?;
    let w = io::read_workload(&wpath).with_context(|| format!("reading {}", wpath.display()))?;
    let qv = read_queries(queries, cfg, dim)?;
    Ok(eval::prepare(ds, &w, &qv)?)
}

fn search_params(beam: usize, k: usize, policy: Option<String>, seed: Option<u64>, cfg: &Config) -> Result<SearchParams> {
    let mut p = SearchParams::new(beam, k);
    if let Some(s) = policy.or(cfg.oor_policy.clone()) {
        p.oor_policy = s.parse::<OorPolicy>()?;
    }
    p.seed = seed.or(cfg.seed).unwrap_or(0);
    Ok(p)
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

fn write_csv(path: &Path, rows: &[Metrics]) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    eval::write_metrics_csv(BufWriter::new(f), rows)?;
    Ok(())
}

fn build(args: BuildArgs, cfg: &Config) -> Result<()> {
    set_threads(args.threads.or(cfg.threads))?;
    let ds = read_dataset(&args.data, cfg)?;
    let defaults = BuildParams::default();
    let params = BuildParams {
        m: args.m.or(cfg.m).unwrap_or(defaults.m),
        ef: args.ef.or(cfg.ef).unwrap_or(defaults.ef),
        seed: args.seed.or(cfg.seed).unwrap_or(defaults.seed),
        reverse_edges: !args.no_reverse_edges && cfg.reverse_edges.unwrap_or(true),
    };
    let (index, report) = build_index(&ds, &params)?;
    persist::save_index(&index, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    persist::save_dataset(&ds, data_path(&args.out))?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    write_json(None, &report)
}

fn gen_workload_cmd(args: GenWorkloadArgs, cfg: &Config) -> Result<()> {
    let (ds, _) = dataset_and_index(&args.data, args.index, cfg, false)?;
    let n_queries = required(args.n_queries, cfg.n_queries, "n-queries")?;
    let fraction = required(args.fraction, cfg.fraction.clone(), "fraction")?;
    let qpath = required(args.query_vectors, cfg.queries.clone(), "query-vectors")?;
    let qv = io::read_vectors(&qpath, args.data.dim.or(cfg.dim))
        .with_context(|| format!("reading {}", qpath.display()))?;
    ensure!(
        qv.len() >= n_queries,
        "{} holds {} vectors, fewer than --n-queries {n_queries}",
        qpath.display(),
        qv.len()
    );
    ensure!(qv.dim() == ds.dim(), "query vectors have dim {}, dataset {}", qv.dim(), ds.dim());
    let k = args.k.or(cfg.k).unwrap_or(10);
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let w = if fraction.contains(',') {
        let exps = fraction
            .split(',')
            .map(|s| s.trim().parse::<u32>().with_context(|| format!("bad exponent '{s}'")))
            .collect::<Result<Vec<_>>>()?;
        gen_multi_workload(&ds, n_queries, &exps, k, seed)?
    } else {
        gen_workload(&ds, n_queries, fraction.parse::<FractionSpec>()?, k, seed)?
    };
    io::write_workload(&args.out, &w).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn gt_cmd(args: GtArgs, cfg: &Config) -> Result<()> {
    set_threads(args.threads.or(cfg.threads))?;
    let (ds, _) = dataset_and_index(&args.data, args.index, cfg, false)?;
    let mut qs = prepared(&ds, args.workload, args.queries, cfg, args.data.dim.or(cfg.dim))?;
    if let Some(k) = args.k.or(cfg.k) {
        ensure!(k > 0, "--k must be positive");
        qs.iter_mut().for_each(|q| q.k = k);
    }
    let gt = eval::groundtruth(&ds, &qs)?;
    io::write_ivecs(&args.out, &gt).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

#[derive(Serialize)]
struct QueryOutput {
    query_index: usize,
    ids: Vec<u32>,
    distances: Vec<f32>,
    stats: QueryStats,
}

#[derive(Serialize)]
struct SearchOutput {
    strategy: String,
    beam: usize,
    k: usize,
    queries: usize,
    mean_dist_comps: f64,
    mean_edge_scans: f64,
    results: Vec<QueryOutput>,
}

fn strategy_of(flag: Option<String>, cfg: &Config) -> Result<Strategy> {
    Ok(flag
        .or(cfg.strategy.clone())
        .unwrap_or_else(|| "irange".into())
        .parse::<Strategy>()?)
}

fn search_cmd(args: SearchArgs, cfg: &Config) -> Result<()> {
    let strategy = strategy_of(args.strategy, cfg)?;
    let (ds, index) = dataset_and_index(&args.data, args.index, cfg, strategy.needs_index())?;
    let qs = prepared(&ds, args.workload, args.queries, cfg, args.data.dim.or(cfg.dim))?;
    let k = args.k.or(cfg.k).unwrap_or(10);
    let beam = required(args.beam, cfg.beam, "beam")?;
    let base = search_params(beam, k, args.oor_policy, args.seed, cfg)?;
    base.validate()?;
    let searcher = Searcher { ds: &ds, index: index.as_ref() };
    let mut scratch = SearchScratch::new(ds.len());
    let mut total = QueryStats::default();
    let mut results = Vec::with_capacity(qs.len());
    for q in &qs {
        let p = SearchParams { seed: base.seed.wrapping_add(q.query_index as u64), ..base };
        let res = searcher.run(strategy, &q.vector, q.filter.as_ref(), &p, &mut scratch)?;
        total.add(&res.stats);
        results.push(QueryOutput {
            query_index: q.query_index,
            ids: res.original_ids(&ds),
            distances: res.distances(),
            stats: res.stats,
        });
    }
    let nq = qs.len().max(1) as f64;
    let out = SearchOutput {
        strategy: strategy.to_string(),
        beam,
        k,
        queries: qs.len(),
        mean_dist_comps: total.dist_comps as f64 / nq,
        mean_edge_scans: total.edge_scans as f64 / nq,
        results,
    };
    write_json(args.out.as_deref(), &out)
}

fn read_gt(flag: Option<PathBuf>, cfg: &Config, expected: usize) -> Result<Vec<Vec<u32>>> {
    let path = required(flag, cfg.gt.clone(), "gt")?;
    let gt = io::read_ivecs(&path).with_context(|| format!("reading {}", path.display()))?;
    ensure!(
        gt.len() == expected,
        "{} has {} rows for {expected} queries",
        path.display(),
        gt.len()
    );
    Ok(gt)
}

fn bench_cmd(args: BenchArgs, cfg: &Config) -> Result<()> {
    let strategy = strategy_of(args.strategy, cfg)?;
    let (ds, index) = dataset_and_index(&args.data, args.index, cfg, strategy.needs_index())?;
    let qs = prepared(&ds, args.workload, args.queries, cfg, args.data.dim.or(cfg.dim))?;
    let gt = read_gt(args.gt, cfg, qs.len())?;
    let beams = args.beams.or(cfg.beams.clone()).unwrap_or_else(|| DEFAULT_BEAMS.to_vec());
    let base = search_params(beams[0].max(1), 1, args.oor_policy, args.seed, cfg)?;
    let searcher = Searcher { ds: &ds, index: index.as_ref() };
    let rows = eval::sweep(&searcher, strategy, &qs, &gt, &beams, &base)?;
    write_csv(&args.out, &rows)
}

fn oracle_cmd(args: OracleArgs, cfg: &Config) -> Result<()> {
    set_threads(args.threads.or(cfg.threads))?;
    let have_index = args.index.is_some() || cfg.index.is_some();
    let (ds, index) = dataset_and_index(&args.data, args.index, cfg, have_index)?;
    let defaults = BuildParams::default();
    let params = BuildParams {
        m: args.m.or(cfg.m).unwrap_or(defaults.m),
        ef: args.ef.or(cfg.ef).unwrap_or(defaults.ef),
        seed: args.seed.or(cfg.seed).unwrap_or(defaults.seed),
        reverse_edges: cfg.reverse_edges.unwrap_or(true),
    };
    let index = match index {
        Some(ix) => ix,
        None => build_index(&ds, &params)?.0,
    };
    let qs = prepared(&ds, args.workload, args.queries, cfg, args.data.dim.or(cfg.dim))?;
    let gt = read_gt(args.gt, cfg, qs.len())?;
    let beams = args.beams.or(cfg.beams.clone()).unwrap_or_else(|| DEFAULT_BEAMS.to_vec());
    let base = search_params(beams[0].max(1), 1, None, args.seed, cfg)?;
    let report = eval::oracle_rebuild_compare(&index, &ds, &qs, &gt, &params, &beams, &base)?;
    let rows: Vec<Metrics> = report.oracle.iter().chain(&report.irange).cloned().collect();
    write_csv(&args.out, &rows)?;
    write_json(None, &report)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Build(a) => build(a, &cfg),
        Command::GenWorkload(a) => gen_workload_cmd(a, &cfg),
        Command::Gt(a) => gt_cmd(a, &cfg),
        Command::Search(a) => search_cmd(a, &cfg),
        Command::Bench(a) => bench_cmd(a, &cfg),
        Command::OracleCompare(a) => oracle_cmd(a, &cfg),
    }
}
