//! Dense matrix storage with length-square sampling in both orientations.

use crate::access::SampleAccess;
use crate::error::{Error, Result};
use crate::store::tree::SampleTree;
use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;

/// A dense real matrix wrapped with sampling trees over every row, every
/// column, the row norms and the column norms, plus its Frobenius norm.
///
/// Both orientations are stored (2x memory) because the trace estimator
/// samples rows of its argument while the subsampling stage samples
/// columns. Everything is immutable after construction and safe to share
/// across threads.
#[derive(Debug, Clone)]
pub struct SampledMatrix {
    n_rows: usize,
    m_cols: usize,
    /// Row-major entries; the single source of truth for queries.
    entries: Vec<f64>,
    row_trees: Vec<SampleTree>,
    col_trees: Vec<SampleTree>,
    row_norm_tree: SampleTree,
    col_norm_tree: SampleTree,
    frob: f64,
}

impl SampledMatrix {
    /// Builds all trees from a row-major entry slice. Cost is linear in
    /// the number of entries. Rejects empty dimensions, a length mismatch
    /// and non-finite entries.
    pub fn from_dense(n_rows: usize, m_cols: usize, entries: Vec<f64>) -> Result<Self> {
        if n_rows == 0 || m_cols == 0 {
            return Err(Error::EmptyInput("matrix dimensions"));
        }
        if entries.len() != n_rows * m_cols {
            return Err(Error::DimensionMismatch {
                context: "matrix entries",
                expected: n_rows * m_cols,
                actual: entries.len(),
            });
        }
        if let Some(index) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "matrix entries",
                index,
            });
        }

        let mut row_trees = Vec::with_capacity(n_rows);
        for i in 0..n_rows {
            row_trees.push(SampleTree::build(
                entries[i * m_cols..(i + 1) * m_cols].to_vec(),
            )?);
        }
        let mut col_trees = Vec::with_capacity(m_cols);
        for j in 0..m_cols {
            let col: Vec<f64> = (0..n_rows).map(|i| entries[i * m_cols + j]).collect();
            col_trees.push(SampleTree::build(col)?);
        }
        // Norm trees hold the 2-norms, so their squared weights are the
        // tree totals of the per-row / per-column trees.
        let row_norm_tree = SampleTree::build(row_trees.iter().map(|t| t.norm()).collect())?;
        let col_norm_tree = SampleTree::build(col_trees.iter().map(|t| t.norm()).collect())?;
        let frob = row_norm_tree.total().sqrt();

        Ok(SampledMatrix {
            n_rows,
            m_cols,
            entries,
            row_trees,
            col_trees,
            row_norm_tree,
            col_norm_tree,
            frob,
        })
    }

    /// Builds from nested rows.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        if n_rows == 0 {
            return Err(Error::EmptyInput("matrix rows"));
        }
        let m_cols = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != m_cols {
                return Err(Error::DimensionMismatch {
                    context: "matrix row length",
                    expected: m_cols,
                    actual: rows[i].len(),
                });
            }
        }
        Self::from_dense(n_rows, m_cols, rows.into_iter().flatten().collect())
    }

    /// Builds from a dense `nalgebra` matrix.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let (n_rows, m_cols) = m.shape();
        let mut entries = Vec::with_capacity(n_rows * m_cols);
        for i in 0..n_rows {
            for j in 0..m_cols {
                entries.push(m[(i, j)]);
            }
        }
        Self::from_dense(n_rows, m_cols, entries)
    }

    /// Copies the entries into a dense `nalgebra` matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_rows, self.m_cols, &self.entries)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn m_cols(&self) -> usize {
        self.m_cols
    }

    /// Entry `(i, j)`, bit-exact against the constructed data.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m_cols + j]
    }

    /// Frobenius norm.
    pub fn frob(&self) -> f64 {
        self.frob
    }

    /// 2-norm of row `i`.
    pub fn row_norm(&self, i: usize) -> f64 {
        self.row_trees[i].norm()
    }

    /// 2-norm of column `j`.
    pub fn col_norm(&self, j: usize) -> f64 {
        self.col_trees[j].norm()
    }

    /// Row and column counts as a pair.
    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.m_cols)
    }

    /// Draws a row index with probability `row_norm(i)^2 / frob^2`.
    pub fn sample_row(&self, rng: &mut ChaCha8Rng) -> Result<usize> {
        self.row_norm_tree
            .sample(rng)
            .map_err(|_| Error::DegenerateDistribution("matrix row norms"))
    }

    /// Draws a column index within row `i` with probability
    /// `A[i,j]^2 / row_norm(i)^2`.
    pub fn sample_in_row(&self, i: usize, rng: &mut ChaCha8Rng) -> Result<usize> {
        self.row_trees[i].sample(rng)
    }

    /// The per-row tree, exposed for row-oriented dot products.
    pub fn row_values(&self, i: usize) -> &[f64] {
        self.row_trees[i].values()
    }

    /// Squared row-norm total across the row-norm tree (equals `frob^2`).
    pub fn row_norm_total(&self) -> f64 {
        self.row_norm_tree.total()
    }

    /// Squared column-norm total across the column-norm tree
    /// (equals `frob^2`).
    pub fn col_norm_total(&self) -> f64 {
        self.col_norm_tree.total()
    }
}

impl SampleAccess for SampledMatrix {
    fn n_rows(&self) -> usize {
        self.n_rows
    }

    fn n_cols(&self) -> usize {
        self.m_cols
    }

    fn frob(&self) -> f64 {
        self.frob
    }

    fn frob_sq(&self) -> f64 {
        self.row_norm_tree.total()
    }

    fn col_norm(&self, j: usize) -> f64 {
        self.col_trees[j].norm()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)
    }

    fn sample_col(&self, rng: &mut ChaCha8Rng) -> Result<usize> {
        self.col_norm_tree
            .sample(rng)
            .map_err(|_| Error::DegenerateDistribution("matrix column norms"))
    }

    fn sample_in_col(&self, j: usize, rng: &mut ChaCha8Rng) -> Result<usize> {
        self.col_trees[j].sample(rng)
    }

    /// Row-oriented factoring of the joint law: a row by its norm square,
    /// then an entry within the row.
    fn sample_entry(&self, rng: &mut ChaCha8Rng) -> Result<(usize, usize)> {
        let i = self.sample_row(rng)?;
        let j = self.sample_in_row(i, rng)?;
        Ok((i, j))
    }

    fn map_query(&self, x: &[f64], i: usize) -> f64 {
        x[i]
    }

    fn map_query_norm(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}
