//! Polynomial kernel access through implicit tensor-power columns.
//!
//! For degree `p`, the feature map sends column `x_j` to its `p`-fold
//! tensor power, and the Gram matrix of the mapped columns is the
//! polynomial kernel `(x_i^T x_j)^p`. The mapped matrix has `n^p` rows
//! and is never materialized: entries are products of `p` base entries,
//! column norms are `‖x_j‖^p`, within-column draws are `p` independent
//! base draws, and column draws go through rejection against the
//! norm-power distribution.

use crate::access::SampleAccess;
use crate::error::{Error, Result};
use crate::sketch::REJECTION_CAP;
use crate::store::SampledMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Sampling view of the tensor-power image of a stored matrix.
#[derive(Debug, Clone)]
pub struct PolyKernelView<'a> {
    base: &'a SampledMatrix,
    degree: u32,
    col_norm_max: f64,
    frob_sq: f64,
    /// `n^p`, capacity-checked at construction.
    flat_rows: usize,
    rejection_cap: u64,
}

impl<'a> PolyKernelView<'a> {
    /// Wraps a stored matrix. Fails if `n^p` does not fit the index type.
    pub fn new(base: &'a SampledMatrix, degree: u32) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidConfig("kernel degree must be at least 1".into()));
        }
        let n = base.n_rows();
        let flat_rows = n.checked_pow(degree).ok_or(Error::CapacityExceeded {
            n,
            p: degree,
        })?;
        let m = base.m_cols();
        let mut col_norm_max: f64 = 0.0;
        let mut frob_sq = 0.0;
        for j in 0..m {
            let norm = base.col_norm(j);
            col_norm_max = col_norm_max.max(norm);
            // ‖x_j‖^(2p) accumulated from the exact squared norm.
            frob_sq += (norm * norm).powi(degree as i32);
        }
        Ok(PolyKernelView {
            base,
            degree,
            col_norm_max,
            frob_sq,
            flat_rows,
            rejection_cap: REJECTION_CAP,
        })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn base(&self) -> &SampledMatrix {
        self.base
    }

    /// Kernel entry for a pair of base columns: `(x_j^T x_i)^p`.
    pub fn kernel_entry(&self, i: usize, j: usize) -> Result<f64> {
        let m = self.base.m_cols();
        if i >= m || j >= m {
            return Err(Error::IndexOutOfRange {
                context: "kernel column pair",
                index: i.max(j),
                size: m,
            });
        }
        let mut dot = 0.0;
        for row in 0..self.base.n_rows() {
            dot += self.base.get(row, i) * self.base.get(row, j);
        }
        Ok(dot.powi(self.degree as i32))
    }

    /// Entry of the mapped matrix at a flat row index: the product of the
    /// base entries addressed by the base-`n` digits of `l`.
    pub fn z_entry(&self, l: usize, j: usize) -> Result<f64> {
        if l >= self.flat_rows {
            return Err(Error::IndexOutOfRange {
                context: "flat tensor row",
                index: l,
                size: self.flat_rows,
            });
        }
        Ok(self.z_entry_unchecked(l, j))
    }

    fn z_entry_unchecked(&self, l: usize, j: usize) -> f64 {
        let n = self.base.n_rows();
        let mut value = 1.0;
        let mut rest = l;
        for t in (0..self.degree).rev() {
            let weight = n.pow(t);
            value *= self.base.get(rest / weight, j);
            rest %= weight;
        }
        value
    }

    /// Packs `p` base row indices into the flat row index
    /// `sum_t i_t * n^(p-1-t)` (indices 0-based, most significant first).
    pub fn flat_index(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.degree as usize {
            return Err(Error::DimensionMismatch {
                context: "flat index digits",
                expected: self.degree as usize,
                actual: digits.len(),
            });
        }
        let n = self.base.n_rows();
        let mut l = 0usize;
        for &d in digits {
            if d >= n {
                return Err(Error::IndexOutOfRange {
                    context: "flat index digit",
                    index: d,
                    size: n,
                });
            }
            l = l * n + d;
        }
        Ok(l)
    }

    /// Draws a column index proportional to `‖x_j‖^(2p)`.
    ///
    /// Proposes from the base column-norm squares and accepts with
    /// probability `(‖x_j‖ / max_norm)^(2(p-1))`, which tilts the
    /// proposal law by exactly the missing norm power for every degree;
    /// at `p = 1` every proposal is accepted.
    pub fn sample_column(&self, rng: &mut ChaCha8Rng) -> Result<usize> {
        if self.frob_sq <= 0.0 {
            return Err(Error::DegenerateDistribution("tensor-power columns"));
        }
        let exponent = 2 * (self.degree as i32 - 1);
        for _ in 0..self.rejection_cap {
            let j = SampleAccess::sample_col(self.base, rng)?;
            if exponent == 0 {
                return Ok(j);
            }
            let ratio = self.base.col_norm(j) / self.col_norm_max;
            if rng.gen::<f64>() < ratio.powi(exponent) {
                return Ok(j);
            }
        }
        Err(Error::NonConvergence {
            cap: self.rejection_cap,
        })
    }

    /// Draws a flat row index within column `j`: `p` independent
    /// length-square draws on the base column, packed into the flat
    /// index, which realizes the length-square law of the tensor power.
    pub fn sample_row_in_col(&self, j: usize, rng: &mut ChaCha8Rng) -> Result<usize> {
        let n = self.base.n_rows();
        let mut l = 0usize;
        for _ in 0..self.degree {
            let i = self.base.sample_in_col(j, rng)?;
            l = l * n + i;
        }
        Ok(l)
    }
}

impl SampleAccess for PolyKernelView<'_> {
    fn n_rows(&self) -> usize {
        self.flat_rows
    }

    fn n_cols(&self) -> usize {
        self.base.m_cols()
    }

    fn frob(&self) -> f64 {
        self.frob_sq.sqrt()
    }

    fn frob_sq(&self) -> f64 {
        self.frob_sq
    }

    fn col_norm(&self, j: usize) -> f64 {
        self.base.col_norm(j).powi(self.degree as i32)
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.z_entry_unchecked(i, j)
    }

    fn sample_col(&self, rng: &mut ChaCha8Rng) -> Result<usize> {
        self.sample_column(rng)
    }

    fn sample_in_col(&self, j: usize, rng: &mut ChaCha8Rng) -> Result<usize> {
        self.sample_row_in_col(j, rng)
    }

    fn map_query(&self, x: &[f64], i: usize) -> f64 {
        let n = self.base.n_rows();
        let mut value = 1.0;
        let mut rest = i;
        for t in (0..self.degree).rev() {
            let weight = n.pow(t);
            value *= x[rest / weight];
            rest %= weight;
        }
        value
    }

    fn map_query_norm(&self, x: &[f64]) -> f64 {
        let norm_sq: f64 = x.iter().map(|v| v * v).sum();
        norm_sq.sqrt().powi(self.degree as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::materialize_tensor_columns;
    use crate::rng::{substream, Domain};
    use nalgebra::DMatrix;
    use rand::Rng;

    fn seeded_matrix(rows: usize, cols: usize, seed: u64) -> SampledMatrix {
        let mut rng = substream(seed, Domain::Generate, 0);
        let entries: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        SampledMatrix::from_dense(rows, cols, entries).unwrap()
    }

    #[test]
    fn degree_one_kernel_is_gram() {
        let x = seeded_matrix(3, 4, 81);
        let view = PolyKernelView::new(&x, 1).unwrap();
        let dense = x.to_matrix();
        let gram = dense.transpose() * &dense;
        for i in 0..4 {
            for j in 0..4 {
                let k = view.kernel_entry(i, j).unwrap();
                assert!((k - gram[(i, j)]).abs() <= 1e-12 * gram[(i, j)].abs().max(1.0));
            }
        }
    }

    #[test]
    fn basis_vector_cubed_kernel() {
        let x = SampledMatrix::from_rows(vec![vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let view = PolyKernelView::new(&x, 3).unwrap();
        assert_eq!(view.kernel_entry(0, 1).unwrap(), 1.0);
    }

    #[test]
    fn squared_kernel_matches_brute_force() {
        let x = seeded_matrix(3, 4, 82);
        let view = PolyKernelView::new(&x, 2).unwrap();
        let dense = x.to_matrix();
        let gram = dense.transpose() * &dense;
        for i in 0..4 {
            for j in 0..4 {
                let expected = gram[(i, j)] * gram[(i, j)];
                let got = view.kernel_entry(i, j).unwrap();
                assert!(
                    (got - expected).abs() <= 1e-12 * expected.abs().max(1.0),
                    "({i},{j}): {got} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn gram_of_tensor_columns_is_the_kernel() {
        // Z^T Z = K_p entrywise for small degrees and sizes.
        for p in 1..=3u32 {
            let x = seeded_matrix(4, 4, 83 + p as u64);
            let view = PolyKernelView::new(&x, p).unwrap();
            let z = materialize_tensor_columns(&x.to_matrix(), p).unwrap();
            let ztz = z.transpose() * &z;
            for i in 0..4 {
                for j in 0..4 {
                    let k = view.kernel_entry(i, j).unwrap();
                    assert!(
                        (k - ztz[(i, j)]).abs() <= 1e-12 * ztz[(i, j)].abs().max(1.0),
                        "p={p} ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn flat_index_formula() {
        // Base-n packing: digits (1, 2) with n = 3 give 1*3 + 2 = 5,
        // the 0-based form of the row-major tensor position.
        let x = seeded_matrix(3, 2, 86);
        let view = PolyKernelView::new(&x, 2).unwrap();
        assert_eq!(view.flat_index(&[1, 2]).unwrap(), 5);
        let linear = PolyKernelView::new(&x, 1).unwrap();
        assert_eq!(linear.flat_index(&[2]).unwrap(), 2);
        assert!(view.flat_index(&[3, 0]).is_err());
        assert!(view.flat_index(&[0]).is_err());
    }

    #[test]
    fn z_entry_decodes_digits() {
        let x = seeded_matrix(3, 2, 87);
        let view = PolyKernelView::new(&x, 2).unwrap();
        for i1 in 0..3 {
            for i2 in 0..3 {
                let l = view.flat_index(&[i1, i2]).unwrap();
                let expected = x.get(i1, 0) * x.get(i2, 0);
                assert_eq!(view.z_entry(l, 0).unwrap(), expected);
            }
        }
        assert!(view.z_entry(9, 0).is_err());
    }

    #[test]
    fn capacity_overflow_rejected() {
        let x = seeded_matrix(2, 2, 88);
        assert!(matches!(
            PolyKernelView::new(&x, 64),
            Err(Error::CapacityExceeded { n: 2, p: 64 })
        ));
        assert!(PolyKernelView::new(&x, 0).is_err());
    }

    #[test]
    fn degree_one_column_sampling_matches_base() {
        let x = seeded_matrix(3, 5, 89);
        let view = PolyKernelView::new(&x, 1).unwrap();
        let mut rng_a = substream(89, Domain::Train, 0);
        let mut rng_b = substream(89, Domain::Train, 0);
        for _ in 0..200 {
            let a = view.sample_column(&mut rng_a).unwrap();
            let b = SampleAccess::sample_col(&x, &mut rng_b).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn column_sampling_tilts_by_norm_power() {
        // Column norms (1, 1/sqrt(2)) with p = 2: target weights are
        // norms^4 = (1, 1/4), so P[j = 0] = 0.8.
        let s = 1.0 / 2f64.sqrt();
        let x = SampledMatrix::from_rows(vec![vec![1.0, s], vec![0.0, 0.0]]).unwrap();
        let view = PolyKernelView::new(&x, 2).unwrap();
        let mut rng = substream(90, Domain::Train, 0);
        let n = 100_000;
        let mut first = 0usize;
        for _ in 0..n {
            if view.sample_column(&mut rng).unwrap() == 0 {
                first += 1;
            }
        }
        let p = first as f64 / n as f64;
        assert!((p - 0.8).abs() < 0.02, "p = {p}");
    }

    #[test]
    fn single_nonzero_column_always_drawn() {
        let x = SampledMatrix::from_rows(vec![vec![0.0, 0.5], vec![0.0, 0.25]]).unwrap();
        let view = PolyKernelView::new(&x, 3).unwrap();
        let mut rng = substream(91, Domain::Train, 0);
        for _ in 0..100 {
            assert_eq!(view.sample_column(&mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn row_sampling_matches_tensor_square() {
        // Empirical distribution of flat rows vs the materialized
        // 9-entry tensor square of a single column.
        let x = seeded_matrix(3, 1, 92);
        let view = PolyKernelView::new(&x, 2).unwrap();
        let z = materialize_tensor_columns(&x.to_matrix(), 2).unwrap();
        let exact = crate::baseline::brute_force_joint_distribution(&z).unwrap();
        let mut rng = substream(92, Domain::Train, 0);
        let n = 100_000;
        let mut counts = vec![0usize; 9];
        for _ in 0..n {
            counts[view.sample_row_in_col(0, &mut rng).unwrap()] += 1;
        }
        let tv: f64 = exact
            .iter()
            .zip(&counts)
            .map(|(p, &c)| (p - c as f64 / n as f64).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.02, "tv = {tv}");
    }

    #[test]
    fn joint_sampling_matches_materialized_z() {
        // Composition (column draw, then flat-row draw) realizes the
        // joint length-square law of Z on a small instance.
        let x = seeded_matrix(3, 4, 93);
        let view = PolyKernelView::new(&x, 2).unwrap();
        let z = materialize_tensor_columns(&x.to_matrix(), 2).unwrap();
        let f2 = z.norm_squared();
        let mut exact = vec![0.0; 9 * 4];
        for l in 0..9 {
            for j in 0..4 {
                exact[l * 4 + j] = z[(l, j)] * z[(l, j)] / f2;
            }
        }
        let mut rng = substream(93, Domain::Train, 0);
        let n = 100_000;
        let mut counts = vec![0usize; 36];
        for _ in 0..n {
            let (l, j) = view.sample_entry(&mut rng).unwrap();
            counts[l * 4 + j] += 1;
        }
        let tv: f64 = exact
            .iter()
            .zip(&counts)
            .map(|(p, &c)| (p - c as f64 / n as f64).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv <= 0.03, "tv = {tv}");
    }

    #[test]
    fn frob_matches_materialized() {
        let x = seeded_matrix(3, 4, 94);
        for p in 1..=3u32 {
            let view = PolyKernelView::new(&x, p).unwrap();
            let z = materialize_tensor_columns(&x.to_matrix(), p).unwrap();
            assert!(
                (view.frob_sq() - z.norm_squared()).abs() <= 1e-10 * z.norm_squared(),
                "p = {p}"
            );
        }
    }

    #[test]
    fn map_query_is_tensor_power() {
        let x = seeded_matrix(3, 2, 95);
        let view = PolyKernelView::new(&x, 2).unwrap();
        let q = [0.5, -1.5, 2.0];
        let z = DMatrix::from_column_slice(3, 1, &q);
        let zq = materialize_tensor_columns(&z, 2).unwrap();
        for l in 0..9 {
            assert!((view.map_query(&q, l) - zq[(l, 0)]).abs() < 1e-14);
        }
        let norm: f64 = q.iter().map(|v| v * v).sum::<f64>();
        assert!((view.map_query_norm(&q) - norm).abs() < 1e-12);
    }
}
