//! Labeled point sets with a train/test partition.

use crate::error::{Error, Result};
use crate::store::matrix::SampledMatrix;

/// A feature matrix (one column per point), ±1 labels, and a train/test
/// index partition.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    /// `n` features by `m` points.
    pub x: SampledMatrix,
    /// One label per point, each exactly `+1.0` or `-1.0`.
    pub y: Vec<f64>,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

impl LabeledDataset {
    /// Validates labels and partition: every label is ±1, the two index
    /// sets cover `0..m` disjointly, and the training side contains both
    /// classes.
    pub fn new(
        x: SampledMatrix,
        y: Vec<f64>,
        train_idx: Vec<usize>,
        test_idx: Vec<usize>,
    ) -> Result<Self> {
        let m = x.m_cols();
        if y.len() != m {
            return Err(Error::DimensionMismatch {
                context: "labels",
                expected: m,
                actual: y.len(),
            });
        }
        if let Some(j) = y.iter().position(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidConfig(format!(
                "label at point {j} is {} (must be +1 or -1)",
                y[j]
            )));
        }
        let mut seen = vec![false; m];
        for &j in train_idx.iter().chain(test_idx.iter()) {
            if j >= m {
                return Err(Error::IndexOutOfRange {
                    context: "partition",
                    index: j,
                    size: m,
                });
            }
            if seen[j] {
                return Err(Error::InvalidConfig(format!(
                    "point {j} appears twice in the partition"
                )));
            }
            seen[j] = true;
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidConfig(
                "partition does not cover every point".into(),
            ));
        }
        let has_pos = train_idx.iter().any(|&j| y[j] > 0.0);
        let has_neg = train_idx.iter().any(|&j| y[j] < 0.0);
        if !has_pos || !has_neg {
            return Err(Error::InvalidConfig(
                "training partition must contain both classes".into(),
            ));
        }
        Ok(LabeledDataset {
            x,
            y,
            train_idx,
            test_idx,
        })
    }

    pub fn n_features(&self) -> usize {
        self.x.n_rows()
    }

    pub fn n_points(&self) -> usize {
        self.x.m_cols()
    }

    /// Column `j` as an owned vector.
    pub fn point(&self, j: usize) -> Vec<f64> {
        (0..self.x.n_rows()).map(|i| self.x.get(i, j)).collect()
    }

    /// The training submatrix (columns `train_idx`, in partition order)
    /// with its own sampling trees, plus the matching labels.
    pub fn train_view(&self) -> Result<(SampledMatrix, Vec<f64>)> {
        let n = self.x.n_rows();
        let mut entries = Vec::with_capacity(n * self.train_idx.len());
        for i in 0..n {
            for &j in &self.train_idx {
                entries.push(self.x.get(i, j));
            }
        }
        let m = SampledMatrix::from_dense(n, self.train_idx.len(), entries)?;
        let y = self.train_idx.iter().map(|&j| self.y[j]).collect();
        Ok((m, y))
    }
}
