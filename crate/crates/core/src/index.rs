//! The materialized index: one capped adjacency list per rank per layer.

use serde::{Deserialize, Serialize};

use crate::tree::SegmentTree;
use crate::vector::Rank;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildParams {
    /// Maximum out-degree of every elemental graph.
    pub m: usize,
    /// Beam width of the candidate search into the sibling segment.
    pub ef: usize,
    pub seed: u64,
    /// Insert reverse edges (re-pruning overfull lists) after the forward pass.
    pub reverse_edges: bool,
}

impl Default for BuildParams {
    fn default() -> Self {
        Self {
            m: 16,
            ef: 100,
            seed: 0,
            reverse_edges: true,
        }
    }
}

/// Fixed-stride adjacency rows for every rank at one layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct LayerGraph {
    pub(crate) counts: Vec<u32>,
    pub(crate) slots: Vec<Rank>,
}

impl LayerGraph {
    pub(crate) fn empty(n: usize, m: usize) -> Self {
        Self {
            counts: vec![0; n],
            slots: vec![0; n * m],
        }
    }
}

/// Segment tree of elemental graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentTreeIndex {
    pub(crate) tree: SegmentTree,
    pub(crate) dim: usize,
    pub(crate) params: BuildParams,
    pub(crate) layers: Vec<LayerGraph>,
    /// Distance computations spent building each layer.
    pub(crate) dist_comps: Vec<u64>,
}

impl SegmentTreeIndex {
    /// Assembles an index from explicit rows, `rows[layer][rank]`.
    ///
    /// Rows for ranks absent at a layer must be empty. Used for graphs built
    /// outside the regular builder (e.g. exact reference graphs).
    pub fn from_rows(
        tree: SegmentTree,
        dim: usize,
        params: BuildParams,
        rows: &[Vec<Vec<Rank>>],
    ) -> Self {
        let n = tree.n();
        let m = params.m;
        assert_eq!(rows.len(), tree.num_layers());
        let mut layers = Vec::with_capacity(rows.len());
        for (layer, layer_rows) in rows.iter().enumerate() {
            assert_eq!(layer_rows.len(), n);
            let mut g = LayerGraph::empty(n, m);
            for (r, row) in layer_rows.iter().enumerate() {
                assert!(row.len() <= m, "row of {} exceeds m = {m}", row.len());
                assert!(row.is_empty() || tree.present(layer, r as Rank));
                g.counts[r] = row.len() as u32;
                g.slots[r * m..r * m + row.len()].copy_from_slice(row);
            }
            layers.push(g);
        }
        let dist_comps = vec![0; layers.len()];
        Self {
            tree,
            dim,
            params,
            layers,
            dist_comps,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.tree.n()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.params.m
    }

    pub fn params(&self) -> &BuildParams {
        &self.params
    }

    #[inline]
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    #[inline]
    pub fn tree(&self) -> &SegmentTree {
        &self.tree
    }

    /// Out-neighbors of `r` in the elemental graph of its layer-`layer` segment.
    #[inline]
    pub fn neighbors(&self, layer: usize, r: Rank) -> &[Rank] {
        let g = &self.layers[layer];
        let m = self.params.m;
        let start = r as usize * m;
        &g.slots[start..start + g.counts[r as usize] as usize]
    }

    pub fn build_dist_comps(&self) -> &[u64] {
        &self.dist_comps
    }

    pub fn total_edges(&self) -> u64 {
        self.layers
            .iter()
            .map(|g| g.counts.iter().map(|&c| c as u64).sum::<u64>())
            .sum()
    }

    pub fn layer_edges(&self, layer: usize) -> u64 {
        self.layers[layer].counts.iter().map(|&c| c as u64).sum()
    }
}
