//! Two-stage matrix subsampling and the choice of sketch sizes.
//!
//! Stage one draws `r` columns proportional to their norm squares and
//! rescales them so the column sketch is an unbiased proxy for the
//! original Gram structure. Stage two draws `c` rows from the sketched
//! columns and materializes a small dense matrix whose Gram matrix
//! concentrates around the sketch's. Sketch sizes come either from the
//! concentration analysis (`ErrorBudget::theoretical`) or from the cheap
//! formulas used for experiments (`practical_params`).

use crate::access::SampleAccess;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// An implicit column sketch: `r` column indices of the parent matrix and
/// the per-column scale factors `frob / (sqrt(r) * col_norm)`.
///
/// Column `s` of the sketched matrix is the parent column `col_indices[s]`
/// times `col_scales[s]`, so every sketched column has 2-norm
/// `frob / sqrt(r)` and the sketch preserves the Frobenius norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSketch {
    pub col_indices: Vec<usize>,
    pub col_scales: Vec<f64>,
    pub r: usize,
}

impl ColumnSketch {
    /// Draws `r` columns i.i.d. from the column-norm-square distribution
    /// (duplicates kept; the sketch samples with replacement).
    pub fn sample<A: SampleAccess + ?Sized>(
        a: &A,
        r: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidConfig("sketch size r must be at least 1".into()));
        }
        let frob = a.frob();
        if frob <= 0.0 {
            return Err(Error::DegenerateDistribution("column sketch input"));
        }
        let scale_base = frob / (r as f64).sqrt();
        let mut col_indices = Vec::with_capacity(r);
        let mut col_scales = Vec::with_capacity(r);
        for _ in 0..r {
            let j = a.sample_col(rng)?;
            col_indices.push(j);
            col_scales.push(scale_base / a.col_norm(j));
        }
        Ok(ColumnSketch {
            col_indices,
            col_scales,
            r,
        })
    }

    /// Entry `(i, s)` of the sketched matrix.
    pub fn entry<A: SampleAccess + ?Sized>(&self, a: &A, i: usize, s: usize) -> f64 {
        self.col_scales[s] * a.entry(i, self.col_indices[s])
    }

    /// Materializes the sketched matrix densely (`n_rows x r`); intended
    /// for small instances and test oracles.
    pub fn materialize<A: SampleAccess + ?Sized>(&self, a: &A) -> DMatrix<f64> {
        DMatrix::from_fn(a.n_rows(), self.r, |i, s| self.entry(a, i, s))
    }

    /// The sketch Gram matrix (`r x r`), computed densely in
    /// `O(n_rows * r^2)`; intended for small instances and test oracles.
    pub fn gram<A: SampleAccess + ?Sized>(&self, a: &A) -> DMatrix<f64> {
        let n = a.n_rows();
        DMatrix::from_fn(self.r, self.r, |s, t| {
            let mut dot = 0.0;
            for i in 0..n {
                dot += a.entry(i, self.col_indices[s]) * a.entry(i, self.col_indices[t]);
            }
            self.col_scales[s] * self.col_scales[t] * dot
        })
    }
}

/// The materialized second-stage sketch: `c` rows drawn through the
/// column sketch, rescaled so each row has 2-norm `frob / sqrt(c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSketch {
    /// Parent-matrix row index of each drawn row.
    pub row_indices: Vec<usize>,
    /// Uniformly chosen sketch column each row was drawn through.
    pub source_cols: Vec<usize>,
    /// Dense `c x r` matrix.
    pub entries: DMatrix<f64>,
    pub c: usize,
}

impl RowSketch {
    /// Draws `c` rows: a sketch column `s` uniformly, then a row index
    /// within that column by its length-square distribution. A drawn row
    /// always has positive norm because zero entries are never sampled.
    pub fn sample<A: SampleAccess + ?Sized>(
        a: &A,
        sketch: &ColumnSketch,
        c: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if c == 0 {
            return Err(Error::InvalidConfig("sketch size c must be at least 1".into()));
        }
        let r = sketch.r;
        let scale_base = a.frob() / (c as f64).sqrt();
        let mut row_indices = Vec::with_capacity(c);
        let mut source_cols = Vec::with_capacity(c);
        let mut entries = DMatrix::zeros(c, r);
        let mut row = vec![0.0; r];
        for t in 0..c {
            let s = rng.gen_range(0..r);
            let j = a.sample_in_col(sketch.col_indices[s], rng)?;
            row_indices.push(j);
            source_cols.push(s);
            let mut norm_sq = 0.0;
            for (s2, slot) in row.iter_mut().enumerate() {
                *slot = sketch.entry(a, j, s2);
                norm_sq += *slot * *slot;
            }
            let factor = scale_base / norm_sq.sqrt();
            for (s2, slot) in row.iter().enumerate() {
                entries[(t, s2)] = factor * slot;
            }
        }
        Ok(RowSketch {
            row_indices,
            source_cols,
            entries,
            c,
        })
    }

    /// The small Gram matrix (`r x r`) of the materialized sketch.
    pub fn gram(&self) -> DMatrix<f64> {
        self.entries.transpose() * &self.entries
    }

    /// Frobenius norm of the materialized sketch.
    pub fn frob(&self) -> f64 {
        self.entries.norm()
    }
}

/// Error budget: the caller-facing precision/probability pair, the derived
/// sub-budgets the concentration analysis needs, and the sketch sizes.
///
/// `eps_prime`, `beta` and `zeta` follow a fixed deterministic split:
/// `zeta` takes equality in the final-bound inequality, and `beta` /
/// `eps_prime` take the conservative minimum of the two constraints each
/// appears in, so the same inputs always produce the same budget. `eps1` /
/// `eta1` are the per-element coefficient-query targets of the full error
/// composition, stored at unit query norm; `query_eps` / `query_eta` are
/// the cheaper per-element targets the pipeline actually runs with (see
/// [`crate::model`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBudget {
    pub eps: f64,
    pub eta: f64,
    pub eps_prime: f64,
    pub beta: f64,
    pub zeta: f64,
    pub r: u64,
    pub c: u64,
    pub eps1: f64,
    pub eta1: f64,
    /// Per-element coefficient-query precision actually used.
    pub query_eps: f64,
    /// Per-element coefficient-query failure budget actually used.
    pub query_eta: f64,
    pub kappa: f64,
    pub rank_k: usize,
    /// Frobenius norm the budget was derived for.
    pub frob: f64,
}

fn validate_budget_inputs(eps: f64, eta: f64, kappa: f64, rank_k: usize, frob: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!(
            "budget requires eps > 0, got {eps}"
        )));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Precondition(format!(
            "budget requires 0 < eta < 1, got {eta}"
        )));
    }
    if !(kappa >= 1.0) {
        return Err(Error::Precondition(format!(
            "budget requires kappa >= 1, got {kappa}"
        )));
    }
    if rank_k == 0 {
        return Err(Error::Precondition("budget requires rank_k >= 1".into()));
    }
    if !(frob > 0.0) {
        return Err(Error::Precondition(format!(
            "budget requires a positive Frobenius norm, got {frob}"
        )));
    }
    Ok(())
}

fn ceil_u64(v: f64) -> u64 {
    v.ceil().max(1.0) as u64
}

impl ErrorBudget {
    /// Budget from the concentration analysis.
    ///
    /// The split: `zeta = 3 eps / (20 kappa k)` (equality in the final
    /// bound), then `beta` is the smaller of its two admissible caps
    /// (half of the spectral-transfer slack, and the root of
    /// `kappa^2 b^2 + 2 kappa b = 1/(8k)`), and `eps_prime` likewise.
    /// Sketch sizes follow as `r = ceil(4 log2(8n/eta) / eps_prime^2)`
    /// and `c = ceil(4 kappa^2 log2(8r/eta) / beta^2)`.
    pub fn theoretical(
        eps: f64,
        eta: f64,
        n: usize,
        kappa: f64,
        rank_k: usize,
        frob: f64,
    ) -> Result<Self> {
        validate_budget_inputs(eps, eta, kappa, rank_k, frob)?;
        if n == 0 {
            return Err(Error::Precondition("budget requires n >= 1".into()));
        }
        let k = rank_k as f64;
        let f2 = frob * frob;
        let zeta = 3.0 * eps / (20.0 * kappa * k);
        let beta_quad_root = (-1.0 + (1.0 + 1.0 / (8.0 * k)).sqrt()) / kappa;
        let beta = (zeta / (2.0 * f2 * f2 * kappa * kappa)).min(beta_quad_root);
        let eps_prime =
            (zeta / (4.0 * f2 * kappa * kappa)).min(1.0 / (8.0 * k * kappa * kappa * f2));

        let r = ceil_u64(4.0 * (8.0 * n as f64 / eta).log2() / (eps_prime * eps_prime));
        let c = ceil_u64(4.0 * kappa * kappa * (8.0 * r as f64 / eta).log2() / (beta * beta));

        let budget = Self::with_sizes(eps, eta, kappa, rank_k, frob, eps_prime, beta, zeta, r, c)?;
        budget.check_inequalities()?;
        Ok(budget)
    }

    /// Budget wired to externally chosen sketch sizes (the practical
    /// formulas); the analytic sub-budgets are still derived and checked
    /// so the printed budget block is always complete.
    pub fn practical(
        eps: f64,
        eta: f64,
        b: u64,
        n: usize,
        kappa: f64,
        rank_k: usize,
        frob: f64,
    ) -> Result<Self> {
        validate_budget_inputs(eps, eta, kappa, rank_k, frob)?;
        let (r, c) = practical_params(eps, eta, b, n)?;
        let k = rank_k as f64;
        let f2 = frob * frob;
        let zeta = 3.0 * eps / (20.0 * kappa * k);
        let beta_quad_root = (-1.0 + (1.0 + 1.0 / (8.0 * k)).sqrt()) / kappa;
        let beta = (zeta / (2.0 * f2 * f2 * kappa * kappa)).min(beta_quad_root);
        let eps_prime =
            (zeta / (4.0 * f2 * kappa * kappa)).min(1.0 / (8.0 * k * kappa * kappa * f2));
        let budget = Self::with_sizes(eps, eta, kappa, rank_k, frob, eps_prime, beta, zeta, r, c)?;
        budget.check_inequalities()?;
        Ok(budget)
    }

    #[allow(clippy::too_many_arguments)]
    fn with_sizes(
        eps: f64,
        eta: f64,
        kappa: f64,
        rank_k: usize,
        frob: f64,
        eps_prime: f64,
        beta: f64,
        zeta: f64,
        r: u64,
        c: u64,
    ) -> Result<Self> {
        let inner = (36.0 / (eps * eps)).ceil().max(1.0);
        let outer = (6.0 * (16.0 / eta).log2()).ceil().max(1.0);
        let eps1 = eps / (2.0 * (r as f64).sqrt() * inner * outer);
        let eta1 = eta / (8.0 * r as f64 * inner * outer);
        let query_eps = eps * kappa * kappa / (4.0 * frob);
        let query_eta = eta / (4.0 * (864.0 * (8.0 / eta).log2() / (eps * eps)).ceil().max(1.0));
        Ok(ErrorBudget {
            eps,
            eta,
            eps_prime,
            beta,
            zeta,
            r,
            c,
            eps1,
            eta1,
            query_eps,
            query_eta,
            kappa,
            rank_k,
            frob,
        })
    }

    /// Substitutes the stored sub-budgets back into the three
    /// admissibility inequalities and names the first violated one.
    pub fn check_inequalities(&self) -> Result<()> {
        let k = self.rank_k as f64;
        let f2 = self.frob * self.frob;
        let kappa = self.kappa;
        let slack = 1.0 + 1e-12;
        let lhs3 = kappa * kappa * self.beta * self.beta
            + 2.0 * kappa * self.beta
            + kappa * kappa * self.eps_prime * f2;
        if lhs3 > slack / (4.0 * k) {
            return Err(Error::Precondition(format!(
                "orthogonality budget violated: kappa^2 beta^2 + 2 kappa beta + kappa^2 eps' F^2 = {lhs3} > 1/(4k)"
            )));
        }
        let lhs4 = (2.0 * self.eps_prime + self.beta * f2) * f2 * kappa * kappa;
        if lhs4 > slack * self.zeta {
            return Err(Error::Precondition(format!(
                "spectral-transfer budget violated: (2 eps' + beta F^2) F^2 kappa^2 = {lhs4} > zeta = {}",
                self.zeta
            )));
        }
        let lhs5 = 5.0 / 3.0 * kappa * k * self.zeta;
        if lhs5 > slack * self.eps / 4.0 {
            return Err(Error::Precondition(format!(
                "final-bound budget violated: (5/3) kappa k zeta = {lhs5} > eps/4 = {}",
                self.eps / 4.0
            )));
        }
        Ok(())
    }
}

/// The cheap sketch-size formulas used for experiments:
/// `r = b * ceil(4 log2(2n/eta) / eps^2)` and
/// `c = b * ceil(4 log2(2r/eta) / eps^2)` with the computed `r` feeding
/// the second formula.
pub fn practical_params(eps: f64, eta: f64, b: u64, n: usize) -> Result<(u64, u64)> {
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!(
            "practical sizes require eps > 0, got {eps}"
        )));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Precondition(format!(
            "practical sizes require 0 < eta < 1, got {eta}"
        )));
    }
    if b == 0 {
        return Err(Error::Precondition("practical sizes require b >= 1".into()));
    }
    if n == 0 {
        return Err(Error::Precondition("practical sizes require n >= 1".into()));
    }
    let e2 = eps * eps;
    let r = b * ceil_u64(4.0 * (2.0 * n as f64 / eta).log2() / e2);
    let c = b * ceil_u64(4.0 * (2.0 * r as f64 / eta).log2() / e2);
    Ok((r, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Domain};
    use crate::store::SampledMatrix;

    fn seeded_matrix(rows: usize, cols: usize, seed: u64) -> SampledMatrix {
        let mut rng = substream(seed, Domain::Generate, 0);
        let entries: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        SampledMatrix::from_dense(rows, cols, entries).unwrap()
    }

    #[test]
    fn identity_single_column() {
        let x = SampledMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let mut rng = substream(51, Domain::Train, 0);
        let sketch = ColumnSketch::sample(&x, 1, &mut rng).unwrap();
        let mat = sketch.materialize(&x);
        // The single column is sqrt(2) * e_i.
        let norm = mat.column(0).norm();
        assert!((norm - 2f64.sqrt()).abs() < 1e-12);
        let nonzero: Vec<f64> = mat.column(0).iter().copied().filter(|v| *v != 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert!((nonzero[0].abs() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn column_draw_probability() {
        // Columns of [[2,0],[0,1]] have norm squares 4 and 1.
        let x = SampledMatrix::from_rows(vec![vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let mut rng = substream(52, Domain::Train, 0);
        let n = 100_000;
        let mut first = 0usize;
        for _ in 0..n {
            let sketch = ColumnSketch::sample(&x, 1, &mut rng).unwrap();
            if sketch.col_indices[0] == 0 {
                first += 1;
            }
        }
        let p = first as f64 / n as f64;
        assert!((p - 0.8).abs() < 0.01, "p = {p}");
    }

    #[test]
    fn zero_matrix_rejected() {
        let x = SampledMatrix::from_rows(vec![vec![0.0, 0.0]]).unwrap();
        let mut rng = substream(53, Domain::Train, 0);
        assert!(matches!(
            ColumnSketch::sample(&x, 2, &mut rng),
            Err(Error::DegenerateDistribution(_))
        ));
    }

    #[test]
    fn column_sketch_is_unbiased() {
        // E[X' X'^T] = X X^T, entrywise within 5 standard errors over
        // 1e4 sketches.
        let x = seeded_matrix(5, 6, 54);
        let dense = x.to_matrix();
        let exact = &dense * dense.transpose();
        let reps = 10_000usize;
        let r = 3;
        let mut mean = DMatrix::<f64>::zeros(5, 5);
        let mut m2 = DMatrix::<f64>::zeros(5, 5);
        for t in 0..reps {
            let mut rng = substream(55, Domain::Trial, t as u64);
            let sketch = ColumnSketch::sample(&x, r, &mut rng).unwrap();
            let xp = sketch.materialize(&x);
            let g = &xp * xp.transpose();
            let count = (t + 1) as f64;
            for i in 0..5 {
                for j in 0..5 {
                    let delta = g[(i, j)] - mean[(i, j)];
                    mean[(i, j)] += delta / count;
                    m2[(i, j)] += delta * (g[(i, j)] - mean[(i, j)]);
                }
            }
        }
        for i in 0..5 {
            for j in 0..5 {
                let se = (m2[(i, j)] / (reps as f64 - 1.0) / reps as f64).sqrt();
                let diff = (mean[(i, j)] - exact[(i, j)]).abs();
                assert!(
                    diff <= 5.0 * se + 1e-12,
                    "entry ({i},{j}): diff {diff}, se {se}"
                );
            }
        }
    }

    #[test]
    fn row_sketch_is_unbiased() {
        // For a fixed column sketch, E[X''^T X''] = X'^T X'.
        let x = seeded_matrix(5, 6, 56);
        let mut rng = substream(56, Domain::Train, 0);
        let sketch = ColumnSketch::sample(&x, 3, &mut rng).unwrap();
        let exact = sketch.gram(&x);
        let reps = 10_000usize;
        let mut mean = DMatrix::<f64>::zeros(3, 3);
        let mut m2 = DMatrix::<f64>::zeros(3, 3);
        for t in 0..reps {
            let mut trial_rng = substream(57, Domain::Trial, t as u64);
            let rows = RowSketch::sample(&x, &sketch, 4, &mut trial_rng).unwrap();
            let g = rows.gram();
            let count = (t + 1) as f64;
            for i in 0..3 {
                for j in 0..3 {
                    let delta = g[(i, j)] - mean[(i, j)];
                    mean[(i, j)] += delta / count;
                    m2[(i, j)] += delta * (g[(i, j)] - mean[(i, j)]);
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let se = (m2[(i, j)] / (reps as f64 - 1.0) / reps as f64).sqrt();
                let diff = (mean[(i, j)] - exact[(i, j)]).abs();
                assert!(
                    diff <= 5.0 * se + 1e-12,
                    "entry ({i},{j}): diff {diff}, se {se}"
                );
            }
        }
    }

    #[test]
    fn exhaustive_identity_row_sketch_reproduces_gram() {
        // Hand-built sketch of I_2 capturing both columns and both rows
        // once each: X''^T X'' equals X'^T X' exactly.
        let x = SampledMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let sketch = ColumnSketch {
            col_indices: vec![0, 1],
            col_scales: vec![1.0, 1.0],
            r: 2,
        };
        let a_prime = sketch.gram(&x);
        // Rows 0 and 1 captured once each, scaled by frob/sqrt(2) / 1.
        let entries = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let rows = RowSketch {
            row_indices: vec![0, 1],
            source_cols: vec![0, 1],
            entries,
            c: 2,
        };
        assert_eq!(rows.gram(), a_prime);
    }

    #[test]
    fn single_row_sketch_norm() {
        let x = seeded_matrix(4, 5, 58);
        let mut rng = substream(58, Domain::Train, 0);
        let sketch = ColumnSketch::sample(&x, 3, &mut rng).unwrap();
        let rows = RowSketch::sample(&x, &sketch, 1, &mut rng).unwrap();
        assert!((rows.frob() - x.frob()).abs() <= 1e-10 * x.frob());
    }

    #[test]
    fn norm_preservation() {
        let x = seeded_matrix(6, 7, 59);
        for t in 0..50u64 {
            let mut rng = substream(59, Domain::Trial, t);
            let sketch = ColumnSketch::sample(&x, 4, &mut rng).unwrap();
            let xp = sketch.materialize(&x);
            assert!((xp.norm() - x.frob()).abs() <= 1e-10 * x.frob());
            let rows = RowSketch::sample(&x, &sketch, 5, &mut rng).unwrap();
            assert!((rows.frob() - x.frob()).abs() <= 1e-10 * x.frob());
        }
    }

    #[test]
    fn concentration_bound_violation_rate() {
        // Second-stage concentration at eps = 0.5, eta = 0.2 on a fixed
        // 6-column sketch; violations stay within eta plus binomial slack.
        let x = seeded_matrix(8, 10, 60);
        let mut rng = substream(60, Domain::Train, 0);
        let sketch = ColumnSketch::sample(&x, 6, &mut rng).unwrap();
        let xp = sketch.materialize(&x);
        let a_prime = sketch.gram(&x);
        let eps = 0.5;
        let eta = 0.2;
        let op_norm = xp.clone().svd(false, false).singular_values[0];
        assert!(
            eps <= op_norm / x.frob(),
            "premise eps <= ‖X'‖/‖X'‖_F fails: {} vs {}",
            eps,
            op_norm / x.frob()
        );
        let c = (4.0 * (2.0 * 6.0 / eta as f64).log2() / (eps * eps)).ceil() as usize;
        let threshold = eps * op_norm * x.frob();
        let runs = 500;
        let mut violations = 0usize;
        for t in 0..runs {
            let mut trial_rng = substream(61, Domain::Trial, t as u64);
            let rows = RowSketch::sample(&x, &sketch, c, &mut trial_rng).unwrap();
            let diff = &a_prime - rows.gram();
            let dev = diff.svd(false, false).singular_values[0];
            if dev > threshold {
                violations += 1;
            }
        }
        let rate = violations as f64 / runs as f64;
        assert!(rate <= 0.26, "violation rate {rate}");
    }

    #[test]
    fn practical_sizes_match_examples() {
        assert_eq!(practical_params(5.0, 0.1, 1, 10_000).unwrap(), (3, 1));
        assert_eq!(practical_params(5.0, 0.1, 10, 10_000).unwrap(), (30, 20));
        // eta near 1 with large eps floors the ceiling at 1.
        assert_eq!(practical_params(100.0, 0.999, 3, 10).unwrap(), (3, 3));
        assert!(practical_params(0.0, 0.1, 1, 10).is_err());
        assert!(practical_params(5.0, 1.0, 1, 10).is_err());
        assert!(practical_params(5.0, 0.1, 0, 10).is_err());
    }

    #[test]
    fn theoretical_budget_worked_example() {
        // eps=5, eta=0.1, n=100, kappa=1, k=1, frob=1.
        let b = ErrorBudget::theoretical(5.0, 0.1, 100, 1.0, 1, 1.0).unwrap();
        assert!((b.zeta - 0.75).abs() < 1e-15);
        let quad_root = -1.0 + 1.125f64.sqrt();
        assert!((b.beta - quad_root).abs() < 1e-15, "beta = {}", b.beta);
        assert!((b.eps_prime - 0.125).abs() < 1e-15);
        assert_eq!(b.r, (4.0 * (8000.0f64).log2() / 0.015625).ceil() as u64);
        b.check_inequalities().unwrap();
        // Exact substitution with equality checking on (5).
        assert!((5.0 / 3.0 * b.zeta - b.eps / 4.0).abs() < 1e-12);
    }

    #[test]
    fn budget_monotonicity() {
        // In the regime where the eps-dependent branches are active,
        // doubling eps strictly decreases r and c.
        let small = ErrorBudget::theoretical(0.05, 0.1, 1000, 1.0, 1, 1.0).unwrap();
        let double = ErrorBudget::theoretical(0.1, 0.1, 1000, 1.0, 1, 1.0).unwrap();
        assert!(double.r < small.r);
        assert!(double.c < small.c);
        // Larger n increases r.
        let big_n = ErrorBudget::theoretical(0.05, 0.1, 100_000, 1.0, 1, 1.0).unwrap();
        assert!(big_n.r > small.r);
        // Weak monotonicity holds everywhere.
        let e5 = ErrorBudget::theoretical(5.0, 0.1, 1000, 1.0, 1, 1.0).unwrap();
        let e10 = ErrorBudget::theoretical(10.0, 0.1, 1000, 1.0, 1, 1.0).unwrap();
        assert!(e10.r <= e5.r && e10.c <= e5.c);
    }

    #[test]
    fn budget_rejects_bad_inputs() {
        assert!(matches!(
            ErrorBudget::theoretical(-1.0, 0.1, 10, 1.0, 1, 1.0),
            Err(Error::Precondition(_))
        ));
        assert!(ErrorBudget::theoretical(1.0, 1.5, 10, 1.0, 1, 1.0).is_err());
        assert!(ErrorBudget::theoretical(1.0, 0.1, 10, 0.5, 1, 1.0).is_err());
        assert!(ErrorBudget::theoretical(1.0, 0.1, 10, 1.0, 0, 1.0).is_err());
        assert!(ErrorBudget::theoretical(1.0, 0.1, 10, 1.0, 1, 0.0).is_err());
        assert!(ErrorBudget::theoretical(1.0, 0.1, 0, 1.0, 1, 1.0).is_err());
    }

    #[test]
    fn theorem_one_sub_targets() {
        let b = ErrorBudget::practical(5.0, 0.1, 1, 10_000, 1.0, 1, 1.0).unwrap();
        assert_eq!(b.r, 3);
        assert_eq!(b.c, 1);
        let inner = (36.0f64 / 25.0).ceil();
        let outer = (6.0 * 160.0f64.log2()).ceil();
        let eps1 = 5.0 / (2.0 * 3.0f64.sqrt() * inner * outer);
        let eta1 = 0.1 / (8.0 * 3.0 * inner * outer);
        assert!((b.eps1 - eps1).abs() < 1e-15);
        assert!((b.eta1 - eta1).abs() < 1e-15);
        assert!((b.query_eps - 5.0 / 4.0).abs() < 1e-15);
    }
}
