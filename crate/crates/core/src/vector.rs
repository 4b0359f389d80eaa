//! Vector storage and the Euclidean distance used throughout the crate.
//!
//! Distances are *squared* L2 everywhere inside the library. Squaring is
//! monotone on non-negative reals, so every ordering, argmin and pruning
//! decision is the same as with the true distance. Values only get
//! square-rooted where they leave the library (see [`true_distance`]).

use crate::error::{invalid, Result};

/// Position of an object after sorting by its primary attribute.
pub type Rank = u32;

const LANES: usize = 8;

/// Squared Euclidean distance between two equal-length slices.
///
/// Accumulates in eight fixed lanes that are summed in a fixed order, so the
/// result is identical on every platform and `l2_squared(a, b) == l2_squared(b, a)`
/// holds bit-for-bit.
#[inline]
pub fn l2_squared(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; LANES];
    let chunks = a.len() / LANES;
    for c in 0..chunks {
        let base = c * LANES;
        let xa = &a[base..base + LANES];
        let xb = &b[base..base + LANES];
        for lane in 0..LANES {
            let diff = xa[lane] - xb[lane];
            acc[lane] += diff * diff;
        }
    }
    let mut tail = 0.0f32;
    for i in chunks * LANES..a.len() {
        let diff = a[i] - b[i];
        tail += diff * diff;
    }
    let s0 = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    let s1 = (acc[4] + acc[5]) + (acc[6] + acc[7]);
    (s0 + s1) + tail
}

/// Checked squared distance between two vectors.
pub fn distance(u: &[f32], v: &[f32]) -> Result<f32> {
    if u.len() != v.len() {
        return invalid(format!("dimension mismatch: {} vs {}", u.len(), v.len()));
    }
    Ok(l2_squared(u, v))
}

/// Converts an internal squared distance into a Euclidean distance.
#[inline]
pub fn true_distance(squared: f32) -> f32 {
    squared.sqrt()
}

/// A dense row-major matrix of `f32` vectors sharing one dimensionality.
#[derive(Debug, Clone, PartialEq)]
pub struct Vectors {
    dim: usize,
    data: Vec<f32>,
}

impl Vectors {
    pub fn new(dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return invalid("vector dimensionality must be positive");
        }
        if !data.len().is_multiple_of(dim) {
            return invalid(format!(
                "{} components do not divide into vectors of dim {dim}",
                data.len()
            ));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return invalid(format!(
                "non-finite component in vector {} (component {})",
                pos / dim,
                pos % dim
            ));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return invalid(format!("row {bad} has dim {} (expected {dim})", rows[bad].len()));
        }
        Self::new(dim, rows.concat())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f32]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// Returns a new matrix holding rows `order[0], order[1], ...`.
    pub(crate) fn permuted(&self, order: &[usize]) -> Self {
        let mut data = Vec::with_capacity(order.len() * self.dim);
        for &i in order {
            data.extend_from_slice(self.get(i));
        }
        Self { dim: self.dim, data }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(distance(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(distance(&[1.0, 2.0, 3.0], &[4.0, 6.0, 3.0]).unwrap(), 25.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(matches!(
            distance(&[1.0], &[1.0, 2.0]),
            Err(crate::Error::InvalidInput(_))
        ));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(Vectors::new(2, vec![0.0, f32::NAN]).is_err());
        assert!(Vectors::new(2, vec![f32::INFINITY, 0.0]).is_err());
        assert!(Vectors::new(2, vec![0.0, 1.0, 2.0]).is_err());
        assert!(Vectors::new(0, vec![]).is_err());
    }

    fn naive(a: &[f32], b: &[f32]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                let d = *x as f64 - *y as f64;
                d * d
            })
            .sum()
    }

    proptest! {
        #[test]
        fn symmetric_and_zero_on_identity(
            pair in (1usize..40).prop_flat_map(|d| (
                prop::collection::vec(-100.0f32..100.0, d),
                prop::collection::vec(-100.0f32..100.0, d),
            ))
        ) {
            let (a, b) = pair;
            prop_assert_eq!(l2_squared(&a, &b).to_bits(), l2_squared(&b, &a).to_bits());
            prop_assert_eq!(l2_squared(&a, &a), 0.0);
            let exact = naive(&a, &b);
            let got = l2_squared(&a, &b) as f64;
            prop_assert!((got - exact).abs() <= 1e-5 * exact.max(1.0));
        }

        #[test]
        fn squared_ordering_matches_euclidean(
            pts in (1usize..12).prop_flat_map(|d| prop::collection::vec(
                prop::collection::vec(-10.0f32..10.0, d), 3))
        ) {
            let (q, a, b) = (&pts[0], &pts[1], &pts[2]);
            let (sa, sb) = (l2_squared(q, a), l2_squared(q, b));
            let (ta, tb) = (true_distance(sa), true_distance(sb));
            prop_assert_eq!(sa < sb, ta < tb || (ta == tb && sa < sb));
            prop_assert!(!(sa < sb && ta > tb));
        }
    }
}
