//! Length-square sampling access to a (possibly implicit) matrix.
//!
//! The subsampling pipeline and the trace estimator only ever touch a
//! matrix through norms, single-entry queries and length-square draws.
//! Abstracting those behind a trait lets the same pipeline run on a dense
//! stored matrix and on implicit feature-map matrices (e.g. tensor-power
//! columns for polynomial kernels) that are never materialized.

use crate::error::Result;
use rand_chacha::ChaCha8Rng;

/// Sampling, query and norm access to an `n_rows x n_cols` real matrix.
///
/// `sample_entry` must realize the joint length-square law
/// `P[(i,j)] = A_ij^2 / frob^2`; implementors may factor it either as
/// (row-norm draw, within-row draw) or (column-norm draw, within-column
/// draw) — the two compositions define the same distribution.
pub trait SampleAccess {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;

    /// Frobenius norm of the represented matrix.
    fn frob(&self) -> f64;

    /// Squared Frobenius norm. Implementors that accumulate squares
    /// directly (sampling trees do) should return that exact sum rather
    /// than squaring `frob()`.
    fn frob_sq(&self) -> f64 {
        self.frob() * self.frob()
    }

    /// 2-norm of column `j`.
    fn col_norm(&self, j: usize) -> f64;

    /// Single entry `A[i, j]`.
    fn entry(&self, i: usize, j: usize) -> f64;

    /// Draws a column index with probability `col_norm(j)^2 / frob^2`.
    fn sample_col(&self, rng: &mut ChaCha8Rng) -> Result<usize>;

    /// Draws a row index within column `j` with probability
    /// `A[i,j]^2 / col_norm(j)^2`.
    fn sample_in_col(&self, j: usize, rng: &mut ChaCha8Rng) -> Result<usize>;

    /// Draws an index pair from the joint length-square distribution.
    fn sample_entry(&self, rng: &mut ChaCha8Rng) -> Result<(usize, usize)> {
        let j = self.sample_col(rng)?;
        let i = self.sample_in_col(j, rng)?;
        Ok((i, j))
    }

    /// Row `i` of the feature-map image of a raw input vector `x`.
    ///
    /// For a plain stored matrix this is `x[i]`; implicit feature maps
    /// evaluate their map at `i`. Used when scoring query points.
    fn map_query(&self, x: &[f64], i: usize) -> f64;

    /// Norm of the feature-map image of `x` (e.g. `‖x‖` for the identity
    /// map, `‖x‖^p` for a degree-`p` tensor power).
    fn map_query_norm(&self, x: &[f64]) -> f64;
}
