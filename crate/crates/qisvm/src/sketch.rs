//! Estimation primitives: trace inner products from length-square samples,
//! and rejection sampling of implicit matrix-vector products.

use crate::access::SampleAccess;
use crate::error::{Error, Result};
use crate::store::SampledMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Repetition schedule of the trace estimator.
///
/// `inner_reps = ceil(9 / xi^2)` single samples are averaged into one
/// mean, and `outer_reps = ceil(6 * log2(2 / eta))` means are combined by
/// their median, which bounds the error by `xi * ‖A‖_F * ‖B‖_F` with
/// probability at least `1 - eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceParams {
    pub xi: f64,
    pub eta: f64,
    pub inner_reps: usize,
    pub outer_reps: usize,
}

impl TraceParams {
    /// Schedule for relative precision `xi` and failure probability `eta`.
    pub fn new(xi: f64, eta: f64) -> Result<Self> {
        if !(xi > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "trace precision xi must be positive, got {xi}"
            )));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "trace failure probability eta must be in (0, 1), got {eta}"
            )));
        }
        let inner_reps = (9.0 / (xi * xi)).ceil().max(1.0) as usize;
        let outer_reps = (6.0 * (2.0 / eta).log2()).ceil().max(1.0) as usize;
        Ok(TraceParams {
            xi,
            eta,
            inner_reps,
            outer_reps,
        })
    }

    /// Schedule for an absolute precision target. The relative precision
    /// is `target / (a_frob * b_frob_bound)`; a zero `b_frob_bound` means
    /// the queried matrix is identically zero, so a single sample
    /// suffices.
    pub fn from_absolute(target: f64, a_frob: f64, b_frob_bound: f64, eta: f64) -> Result<Self> {
        if b_frob_bound == 0.0 {
            // The queried matrix is identically zero; one sample returns
            // the exact answer.
            return Ok(TraceParams {
                xi: f64::INFINITY,
                eta,
                inner_reps: 1,
                outer_reps: 1,
            });
        }
        if !(target > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "absolute trace target must be positive, got {target}"
            )));
        }
        Self::new(target / (a_frob * b_frob_bound), eta)
    }

    /// Total single-sample count of the schedule.
    pub fn total_samples(&self) -> usize {
        self.inner_reps * self.outer_reps
    }
}

/// Query access to the matrix `B` paired with `A` in a trace estimate.
///
/// `B` is shaped `A.n_cols() x A.n_rows()`; `entry(j, i)` returns
/// `B[j, i]`, and `frob_bound()` must be an upper bound on `‖B‖_F`.
pub trait TraceOracle {
    fn entry(&self, j: usize, i: usize) -> f64;
    fn frob_bound(&self) -> f64;
}

/// A dense matrix as a trace oracle, mainly for tests.
#[derive(Debug, Clone)]
pub struct DenseOracle {
    pub rows: Vec<Vec<f64>>,
    frob: f64,
}

impl DenseOracle {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        let frob = rows
            .iter()
            .flat_map(|r| r.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        DenseOracle { rows, frob }
    }
}

impl TraceOracle for DenseOracle {
    fn entry(&self, j: usize, i: usize) -> f64 {
        self.rows[j][i]
    }

    fn frob_bound(&self) -> f64 {
        self.frob
    }
}

/// Lower median of a sample, deterministic for even counts.
pub fn lower_median(values: &mut [f64]) -> f64 {
    debug_assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    values[(values.len() - 1) / 2]
}

/// Estimates `Tr[A B]` by a median of means over single samples
/// `‖A‖_F^2 / A_ij * B_ji` with `(i, j)` drawn from the length-square
/// distribution of `A`.
///
/// With `params` from [`TraceParams::new`], the result is within
/// `xi * ‖A‖_F * frob_bound` of the exact trace with probability at least
/// `1 - eta`. The caller owns the random stream, so a fixed stream gives
/// a fixed estimate.
pub fn estimate_trace<A: SampleAccess + ?Sized, B: TraceOracle + ?Sized>(
    a: &A,
    b: &B,
    params: &TraceParams,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if a.frob() <= 0.0 {
        return Err(Error::DegenerateDistribution("trace estimation input"));
    }
    let frob_sq = a.frob_sq();
    let mut means = Vec::with_capacity(params.outer_reps);
    for _ in 0..params.outer_reps {
        let mut sum = 0.0;
        for _ in 0..params.inner_reps {
            let (i, j) = a.sample_entry(rng)?;
            let a_ij = a.entry(i, j);
            // A zero entry has zero sampling probability; reachable only
            // through the measure-zero tie path of the tree descent.
            debug_assert!(a_ij != 0.0);
            sum += frob_sq / a_ij * b.entry(j, i);
        }
        means.push(sum / params.inner_reps as f64);
    }
    Ok(lower_median(&mut means))
}

/// Draws a row index of `y = A b` proportional to `y_i^2 / ‖y‖^2` without
/// computing `y`, by proposing rows of `A` from their norm squares and
/// accepting with probability `(A_i · b)^2 / (D * ‖A_i‖^2)`.
///
/// Requires unit-norm rows and `D >= ‖b‖^2`. The iteration cap turns a
/// vanishing acceptance rate (e.g. `y = 0`) into a diagnostic instead of
/// an endless loop.
pub fn rejection_sample(
    a: &SampledMatrix,
    b: &[f64],
    d: f64,
    cap: u64,
    rng: &mut ChaCha8Rng,
) -> Result<usize> {
    if b.len() != a.m_cols() {
        return Err(Error::DimensionMismatch {
            context: "rejection sampling vector",
            expected: a.m_cols(),
            actual: b.len(),
        });
    }
    let b_norm_sq: f64 = b.iter().map(|v| v * v).sum();
    if d < b_norm_sq {
        return Err(Error::Precondition(format!(
            "rejection bound D = {d} is below ‖b‖^2 = {b_norm_sq}"
        )));
    }
    for i in 0..a.n_rows() {
        let norm = a.row_norm(i);
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Precondition(format!(
                "row {i} has norm {norm}, rows must be unit-norm"
            )));
        }
    }
    for _ in 0..cap {
        let i = a.sample_row(rng)?;
        let dot: f64 = a
            .row_values(i)
            .iter()
            .zip(b)
            .map(|(aij, bj)| aij * bj)
            .sum();
        let row_norm = a.row_norm(i);
        let accept = dot * dot / (d * row_norm * row_norm);
        if rng.gen::<f64>() < accept {
            return Ok(i);
        }
    }
    Err(Error::NonConvergence { cap })
}

/// Default proposal cap for rejection sampling.
pub const REJECTION_CAP: u64 = 1_000_000;
