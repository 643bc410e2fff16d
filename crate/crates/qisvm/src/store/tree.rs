//! Weighted index sampling over the squared entries of a vector.
//!
//! A [`SampleTree`] stores a signed vector together with a complete binary
//! tree of partial sums of its squared entries. Sampling an index
//! proportional to `values[i]^2 / total` is a root-to-leaf descent, so both
//! the draw cost and the tree depth are logarithmic in the vector length.
//! Trees are immutable once built; all mutation happens at construction.

use crate::error::{Error, Result};
use rand::Rng;

/// Immutable sampling structure over a vector's squared magnitudes.
///
/// Invariants established at construction:
/// * `total()` equals the pairwise (tree-structured) sum of all squared
///   entries,
/// * a descent with a uniform draw lands on index `i` with probability
///   exactly `values[i]^2 / total()`,
/// * `query(i)` returns the stored signed value bit-exactly.
#[derive(Debug, Clone)]
pub struct SampleTree {
    values: Vec<f64>,
    /// Heap-ordered partial sums: node `k` covers nodes `2k` and `2k+1`,
    /// leaves start at `cap`. Entry 0 is unused.
    nodes: Vec<f64>,
    cap: usize,
}

impl SampleTree {
    /// Builds the tree in linear time. Rejects empty input and non-finite
    /// entries.
    pub fn build(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("sample tree"));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "sample tree",
                index,
            });
        }
        let cap = values.len().next_power_of_two();
        let mut nodes = vec![0.0; 2 * cap];
        for (i, v) in values.iter().enumerate() {
            nodes[cap + i] = v * v;
        }
        for k in (1..cap).rev() {
            nodes[k] = nodes[2 * k] + nodes[2 * k + 1];
        }
        Ok(SampleTree { values, nodes, cap })
    }

    /// Number of stored values.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Squared 2-norm of the stored vector (the root of the sum tree).
    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    /// 2-norm of the stored vector.
    pub fn norm(&self) -> f64 {
        self.total().sqrt()
    }

    /// The stored signed value at `i`, bit-exact.
    pub fn query(&self, i: usize) -> Result<f64> {
        self.values.get(i).copied().ok_or(Error::IndexOutOfRange {
            context: "sample tree",
            index: i,
            size: self.values.len(),
        })
    }

    /// Slice view of the stored values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Draws an index with probability `values[i]^2 / total()`.
    ///
    /// Cost is one uniform draw plus a log-depth descent. Fails on an
    /// all-zero vector. A drawn target that exactly equals a subtree
    /// boundary descends left; with a 53-bit uniform this is a
    /// measure-zero event, noted here for reproducibility.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        self.sample_counted(rng).map(|(i, _)| i)
    }

    /// Like [`sample`](Self::sample) but also reports the number of tree
    /// nodes visited, which tests use to pin the logarithmic cost.
    pub fn sample_counted<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(usize, u32)> {
        if self.total() <= 0.0 {
            return Err(Error::DegenerateDistribution("sample tree"));
        }
        let mut target = rng.gen::<f64>() * self.total();
        let mut k = 1usize;
        let mut visited = 1u32;
        while k < self.cap {
            let left = self.nodes[2 * k];
            if target <= left {
                k *= 2;
            } else {
                target -= left;
                k = 2 * k + 1;
            }
            visited += 1;
        }
        Ok((k - self.cap, visited))
    }

    /// Exact sampling distribution `values[i]^2 / total()`, used by tests
    /// as the reference when comparing against empirical frequencies.
    pub fn distribution(&self) -> Vec<f64> {
        let t = self.total();
        self.values.iter().map(|v| v * v / t).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Domain};

    fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0
    }

    #[test]
    fn build_three_four() {
        let t = SampleTree::build(vec![3.0, 4.0]).unwrap();
        assert_eq!(t.total(), 25.0);
        let d = t.distribution();
        assert_eq!(d, vec![9.0 / 25.0, 16.0 / 25.0]);
    }

    #[test]
    fn zero_prefix_support() {
        let t = SampleTree::build(vec![0.0, 0.0, 5.0]).unwrap();
        let d = t.distribution();
        assert_eq!(d, vec![0.0, 0.0, 1.0]);
        let mut rng = substream(1, Domain::Train, 0);
        for _ in 0..100 {
            assert_eq!(t.sample(&mut rng).unwrap(), 2);
        }
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(matches!(
            SampleTree::build(vec![]),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            SampleTree::build(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(matches!(
            SampleTree::build(vec![f64::INFINITY]),
            Err(Error::NonFinite { index: 0, .. })
        ));
    }

    #[test]
    fn all_zero_sampling_is_degenerate() {
        let t = SampleTree::build(vec![0.0, 0.0]).unwrap();
        let mut rng = substream(2, Domain::Train, 0);
        assert!(matches!(
            t.sample(&mut rng),
            Err(Error::DegenerateDistribution(_))
        ));
    }

    #[test]
    fn deterministic_single_support() {
        let t = SampleTree::build(vec![1.0, 0.0]).unwrap();
        let mut rng = substream(3, Domain::Train, 0);
        for _ in 0..1000 {
            assert_eq!(t.sample(&mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn uniform_two_point_frequencies() {
        let t = SampleTree::build(vec![1.0, 1.0]).unwrap();
        let mut rng = substream(4, Domain::Train, 0);
        let n = 100_000;
        let mut hits = 0usize;
        for _ in 0..n {
            hits += t.sample(&mut rng).unwrap();
        }
        let p1 = hits as f64 / n as f64;
        assert!((p1 - 0.5).abs() < 0.01, "p1 = {p1}");
    }

    #[test]
    fn three_four_frequency() {
        let t = SampleTree::build(vec![3.0, 4.0]).unwrap();
        let mut rng = substream(5, Domain::Train, 0);
        let n = 100_000;
        let mut hits = 0usize;
        for _ in 0..n {
            hits += t.sample(&mut rng).unwrap();
        }
        let p2 = hits as f64 / n as f64;
        assert!((p2 - 0.64).abs() < 0.01, "p2 = {p2}");
    }

    #[test]
    fn seeded_64_entry_total_variation() {
        // Mildly skewed weights: uniform draws cubed.
        let mut rng = substream(6, Domain::Generate, 0);
        let values: Vec<f64> = (0..64)
            .map(|_| {
                let u: f64 = rng.gen_range(-1.0..1.0);
                u * u * u
            })
            .collect();
        let t = SampleTree::build(values).unwrap();
        let exact = t.distribution();
        let n = 100_000usize;
        let mut counts = vec![0usize; 64];
        let mut draw_rng = substream(6, Domain::Train, 0);
        for _ in 0..n {
            counts[t.sample(&mut draw_rng).unwrap()] += 1;
        }
        let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let tv = tv_distance(&exact, &empirical);
        assert!(tv < 0.01, "tv = {tv}");
    }

    #[test]
    fn total_matches_sum_of_squares() {
        let mut rng = substream(7, Domain::Generate, 0);
        let values: Vec<f64> = (0..100).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let t = SampleTree::build(values.clone()).unwrap();
        let naive: f64 = values.iter().map(|v| v * v).sum();
        assert!((t.total() - naive).abs() <= 1e-12 * naive.max(1.0));
    }

    #[test]
    fn query_is_bit_exact() {
        let values = vec![0.1, -0.2, 3.5e-7, -0.0, 1.0 / 3.0];
        let t = SampleTree::build(values.clone()).unwrap();
        for (i, v) in values.iter().enumerate() {
            assert_eq!(t.query(i).unwrap().to_bits(), v.to_bits());
        }
        assert!(t.query(5).is_err());
    }

    #[test]
    fn sample_cost_is_logarithmic() {
        for len in [1usize, 2, 3, 17, 64, 1000] {
            let values: Vec<f64> = (0..len).map(|i| (i + 1) as f64).collect();
            let t = SampleTree::build(values).unwrap();
            let mut rng = substream(8, Domain::Train, len as u64);
            let bound = (len.next_power_of_two().trailing_zeros()) + 1;
            for _ in 0..50 {
                let (_, visited) = t.sample_counted(&mut rng).unwrap();
                assert!(visited <= bound, "len {len}: visited {visited} > {bound}");
            }
        }
    }
}
