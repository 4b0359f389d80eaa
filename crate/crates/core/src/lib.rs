//! Range-filtered approximate nearest neighbor search over a segment tree of
//! proximity graphs.
//!
//! Objects are sorted by a numeric attribute. Every segment-tree node gets its
//! own relative-neighborhood-style graph ("elemental graph"), materialized
//! bottom-up. At query time the out-edges of each visited object are assembled
//! from the elemental graphs along its root-to-leaf path, giving a graph over
//! exactly the in-range objects without ever storing it.

pub mod baselines;
mod beam;
pub mod builder;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod index;
pub mod io;
pub mod persist;
pub mod search;
pub mod tree;
pub mod vector;

pub use beam::{Neighbor, SearchScratch};
pub use builder::{build_flat, build_index, rng_prune, BuildReport, FlatGraph};
pub use dataset::{
    gen_multi_workload, gen_workload, AttrPredicate, DataObject, FractionSpec, Query, RangeFilter,
    RankRange, SortedDataset, Workload, WorkloadQuery,
};
pub use error::{Error, Result};
pub use index::{BuildParams, SegmentTreeIndex};
pub use search::{OorPolicy, QueryStats, SearchParams, SearchResult};
pub use tree::{Segment, SegmentTree};
pub use vector::{distance, l2_squared, Rank, Vectors};
