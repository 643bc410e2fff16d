//! The end-to-end training and classification pipeline.
//!
//! Training subsamples the data matrix, eigendecomposes the small sketch
//! Gram matrix, and estimates the eigen-coefficients of the labels with
//! the trace estimator. The trained model answers coefficient queries
//! lazily — each query runs its own trace estimates seeded by a
//! per-index substream and is memoized — and classifies points by one
//! more trace estimate over the queried coefficients.

use crate::access::SampleAccess;
use crate::error::{Error, Result};
use crate::kernels::PolyKernelView;
use crate::rng::{substream, Domain};
use crate::sketch::{estimate_trace, TraceOracle, TraceParams};
use crate::store::{LabeledDataset, SampledMatrix};
use crate::subsample::{ColumnSketch, ErrorBudget, RowSketch};
use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::RwLock;

/// Guards against materializing absurd sketch sizes (the concentration
/// formulas can demand them for tiny precision budgets).
const MAX_SKETCH_R: u64 = 1_000_000;
const MAX_SKETCH_ENTRIES: u64 = 100_000_000;

/// Kernel selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Linear,
    Poly { degree: u32 },
}

/// How sketch sizes are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamMode {
    /// The cheap experiment formulas scaled by the subsample control `b`.
    Practical,
    /// The concentration-analysis budget.
    Theoretical,
}

/// Which sketch eigenvalues the model keeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankPolicy {
    /// Keep the top `k` positive eigenvalues.
    Fixed(usize),
    /// Keep eigenvalues at least `theta` times the largest.
    Relative(f64),
}

/// User-facing training parameters.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub eps: f64,
    pub eta: f64,
    /// Subsample size control for practical mode.
    pub b_ctrl: u64,
    /// Regularization; `f64::INFINITY` disables it.
    pub gamma: f64,
    pub mode: ParamMode,
    /// Condition-number bound of the data matrix.
    pub kappa: f64,
    /// Target rank; `None` derives the retention threshold from `kappa`.
    pub rank_k: Option<usize>,
    pub kernel: Kernel,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            eps: 5.0,
            eta: 0.1,
            b_ctrl: 1,
            gamma: f64::INFINITY,
            mode: ParamMode::Practical,
            kappa: 1.0,
            rank_k: None,
            kernel: Kernel::Linear,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::InvalidConfig(format!("eps must be > 0, got {}", self.eps)));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "eta must be in (0, 1), got {}",
                self.eta
            )));
        }
        if self.b_ctrl == 0 {
            return Err(Error::InvalidConfig("b must be >= 1".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma must be positive (or infinite), got {}",
                self.gamma
            )));
        }
        if !(self.kappa >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "kappa must be >= 1, got {}",
                self.kappa
            )));
        }
        if self.rank_k == Some(0) {
            return Err(Error::InvalidConfig("rank must be >= 1".into()));
        }
        if let Kernel::Poly { degree } = self.kernel {
            if degree == 0 {
                return Err(Error::InvalidConfig("kernel degree must be >= 1".into()));
            }
        }
        Ok(())
    }

    /// Rank used in the error budget.
    pub fn budget_rank(&self) -> usize {
        self.rank_k.unwrap_or(1)
    }

    /// Retention policy: an explicit rank when given, otherwise the
    /// relative threshold `1 / kappa^2`.
    pub fn rank_policy(&self) -> RankPolicy {
        match self.rank_k {
            Some(k) => RankPolicy::Fixed(k),
            None => RankPolicy::Relative(1.0 / (self.kappa * self.kappa)),
        }
    }
}

/// Output of [`spectral_decompose`].
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// Retained eigenvalues with the `gamma^{-1}` shift applied,
    /// descending.
    pub sigma_sq: Vec<f64>,
    /// The same eigenvalues before the shift; the eigenvector transfer
    /// map normalizes by these.
    pub sigma_sq_raw: Vec<f64>,
    /// Matching eigenvector columns (`r x k`), orthonormal.
    pub vectors: DMatrix<f64>,
}

impl Decomposition {
    pub fn rank(&self) -> usize {
        self.sigma_sq.len()
    }
}

/// Eigendecomposition of the sketch Gram matrix with rank selection and
/// the regularization shift.
///
/// The input must be symmetric to `1e-10` (relative to its largest
/// entry) and positive semidefinite up to a `-1e-10` floor. Retained
/// eigenvalues are strictly positive; with a finite `gamma` the returned
/// `sigma_sq` are shifted by `gamma^{-1}` while `sigma_sq_raw` keeps the
/// unshifted values (the downstream inversion needs both: shifting both
/// factors would double-count the regularizer).
pub fn spectral_decompose(
    a_dd: &DMatrix<f64>,
    gamma: f64,
    policy: RankPolicy,
) -> Result<Decomposition> {
    let r = a_dd.nrows();
    if a_dd.ncols() != r {
        return Err(Error::DimensionMismatch {
            context: "sketch Gram matrix",
            expected: r,
            actual: a_dd.ncols(),
        });
    }
    let scale = a_dd.amax().max(1.0);
    let max_asym = (a_dd - a_dd.transpose()).amax();
    if max_asym > 1e-10 * scale {
        return Err(Error::Asymmetric {
            max_asym,
            tol: 1e-10 * scale,
        });
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "gamma must be positive (or infinite), got {gamma}"
        )));
    }

    let eigen = nalgebra::SymmetricEigen::new(a_dd.clone());
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| eigen.eigenvalues[j].total_cmp(&eigen.eigenvalues[i]));
    let max_ev = eigen.eigenvalues[order[0]];
    if max_ev <= 0.0 {
        return Err(Error::ModelDegenerate(
            "sketch Gram matrix has no positive eigenvalues".into(),
        ));
    }
    let floor = -1e-10 * max_ev;
    if eigen.eigenvalues[order[r - 1]] < floor {
        return Err(Error::Precondition(format!(
            "matrix is not positive semidefinite: eigenvalue {} below floor {floor:e}",
            eigen.eigenvalues[order[r - 1]]
        )));
    }

    let retained: Vec<usize> = match policy {
        RankPolicy::Fixed(k) => order
            .iter()
            .copied()
            .filter(|&l| eigen.eigenvalues[l] > 0.0)
            .take(k)
            .collect(),
        RankPolicy::Relative(theta) => {
            if !(theta > 0.0 && theta <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "relative rank threshold must be in (0, 1], got {theta}"
                )));
            }
            order
                .iter()
                .copied()
                .filter(|&l| {
                    eigen.eigenvalues[l] > 0.0 && eigen.eigenvalues[l] >= theta * max_ev
                })
                .collect()
        }
    };
    if retained.is_empty() {
        return Err(Error::ModelDegenerate(
            "rank policy retained no eigenvalues".into(),
        ));
    }

    let inv_gamma = if gamma.is_infinite() { 0.0 } else { gamma.recip() };
    let sigma_sq_raw: Vec<f64> = retained.iter().map(|&l| eigen.eigenvalues[l]).collect();
    let sigma_sq: Vec<f64> = sigma_sq_raw.iter().map(|v| v + inv_gamma).collect();
    let vectors = DMatrix::from_fn(r, retained.len(), |i, c| {
        eigen.eigenvectors[(i, retained[c])]
    });
    Ok(Decomposition {
        sigma_sq,
        sigma_sq_raw,
        vectors,
    })
}

/// Oracle for the eigen-coefficient trace: the rank-one-in-rows matrix
/// `y (X' v_l)^T` queried as `entry(j, i) = y_j * (X' v_l)_i`, where
/// `(X' v_l)_i` is recomputed on demand from the `r` sketched columns.
struct LambdaOracle<'a, A: SampleAccess + ?Sized> {
    a: &'a A,
    sketch: &'a ColumnSketch,
    v_col: Vec<f64>,
    y: &'a [f64],
    bound: f64,
}

impl<A: SampleAccess + ?Sized> TraceOracle for LambdaOracle<'_, A> {
    fn entry(&self, j: usize, i: usize) -> f64 {
        if self.y[j] == 0.0 {
            return 0.0;
        }
        let mut xv = 0.0;
        for (s, &v) in self.v_col.iter().enumerate() {
            if v != 0.0 {
                xv += self.sketch.col_scales[s] * self.a.entry(i, self.sketch.col_indices[s]) * v;
            }
        }
        self.y[j] * xv
    }

    fn frob_bound(&self) -> f64 {
        self.bound
    }
}

/// Estimates the eigen-coefficients `lambda_l = v_tilde_l^T y`, one trace
/// estimate per retained eigenvalue, each on its own substream.
///
/// The estimate targets absolute precision
/// `3 eps sigma_l^2 ‖y‖ / (16 sqrt(k))` with failure budget
/// `eta / (4k)`; the raw trace is `sigma_l^2 lambda_l`, so the result is
/// divided by the unshifted eigenvalue.
pub fn estimate_lambdas<A: SampleAccess + ?Sized>(
    a: &A,
    y: &[f64],
    sketch: &ColumnSketch,
    decomp: &Decomposition,
    eps: f64,
    eta: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let k = decomp.rank();
    let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let bound = y_norm * a.frob();
    let mut lambdas = Vec::with_capacity(k);
    for l in 0..k {
        let s2 = decomp.sigma_sq_raw[l];
        let target = 3.0 * eps * s2 * s2 * y_norm / (16.0 * (k as f64).sqrt());
        let params = TraceParams::from_absolute(target, a.frob(), bound, eta / (4.0 * k as f64))?;
        let oracle = LambdaOracle {
            a,
            sketch,
            v_col: decomp.vectors.column(l).iter().copied().collect(),
            y,
            bound,
        };
        let mut rng = substream(seed, Domain::Lambda, l as u64);
        let trace = estimate_trace(a, &oracle, &params, &mut rng)?;
        lambdas.push(trace / s2);
    }
    Ok(lambdas)
}

/// Combines the eigen-coefficients into the sketch-space vector
/// `u = sum_l lambda_l / (sigma_raw^2 sigma^2) v_l`; with no
/// regularization the denominator is `sigma^4`.
fn compose_u(decomp: &Decomposition, lambda: &[f64]) -> Vec<f64> {
    let r = decomp.vectors.nrows();
    let mut u = vec![0.0; r];
    for (l, &lam) in lambda.iter().enumerate() {
        let coeff = lam / (decomp.sigma_sq_raw[l] * decomp.sigma_sq[l]);
        for s in 0..r {
            u[s] += coeff * decomp.vectors[(s, l)];
        }
    }
    u
}

/// A trained model: the column sketch, the retained eigensystem, the
/// estimated eigen-coefficients, the combined query vector and the
/// budget, plus a memoized coefficient cache.
///
/// Coefficient queries are seeded by `(seed, coefficient index)`, so any
/// thread that computes a given coefficient computes the identical value
/// and first-writer-wins memoization stays deterministic.
#[derive(Debug)]
pub struct SvmModel {
    pub sketch: ColumnSketch,
    /// Retained eigenvalues, shifted by `gamma^{-1}` when finite.
    pub sigma_sq: Vec<f64>,
    /// Unshifted eigenvalues.
    pub sigma_sq_raw: Vec<f64>,
    /// Eigenvector columns (`r x k`).
    pub v_dd: DMatrix<f64>,
    pub lambda_tilde: Vec<f64>,
    pub u: Vec<f64>,
    pub gamma: f64,
    /// Frobenius norm of the (mapped) training matrix.
    pub frob: f64,
    pub budget: ErrorBudget,
    pub kernel: Kernel,
    pub seed: u64,
    /// Norm of the training label vector.
    pub y_norm: f64,
    /// Base feature dimension of query points.
    pub n_features: usize,
    /// Row count of the mapped training matrix (`n_features^degree`).
    pub feature_rows: usize,
    pub m_train: usize,
    alpha_cache: RwLock<HashMap<usize, f64>>,
}

impl Clone for SvmModel {
    fn clone(&self) -> Self {
        SvmModel {
            sketch: self.sketch.clone(),
            sigma_sq: self.sigma_sq.clone(),
            sigma_sq_raw: self.sigma_sq_raw.clone(),
            v_dd: self.v_dd.clone(),
            lambda_tilde: self.lambda_tilde.clone(),
            u: self.u.clone(),
            gamma: self.gamma,
            frob: self.frob,
            budget: self.budget.clone(),
            kernel: self.kernel,
            seed: self.seed,
            y_norm: self.y_norm,
            n_features: self.n_features,
            feature_rows: self.feature_rows,
            m_train: self.m_train,
            alpha_cache: RwLock::new(self.alpha_cache.read().unwrap().clone()),
        }
    }
}

/// Classification outcome. An exactly zero score is resolved to the
/// positive class and flagged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub score: f64,
    pub label: i8,
    pub tie: bool,
}

impl SvmModel {
    /// Retained rank.
    pub fn rank(&self) -> usize {
        self.sigma_sq.len()
    }

    /// Recomputes `u` from the stored fields; bit-identical to the
    /// stored vector.
    pub fn recompute_u(&self) -> Vec<f64> {
        let decomp = Decomposition {
            sigma_sq: self.sigma_sq.clone(),
            sigma_sq_raw: self.sigma_sq_raw.clone(),
            vectors: self.v_dd.clone(),
        };
        compose_u(&decomp, &self.lambda_tilde)
    }

    /// Number of memoized coefficients.
    pub fn cached_coefficients(&self) -> usize {
        self.alpha_cache.read().unwrap().len()
    }

    fn check_matrix<A: SampleAccess + ?Sized>(&self, a: &A) -> Result<()> {
        if a.n_rows() != self.feature_rows || a.n_cols() != self.m_train {
            return Err(Error::DimensionMismatch {
                context: "training matrix shape vs model",
                expected: self.feature_rows * self.m_train,
                actual: a.n_rows() * a.n_cols(),
            });
        }
        if (a.frob() - self.frob).abs() > 1e-9 * self.frob.max(1.0) {
            return Err(Error::Precondition(format!(
                "matrix norm {} does not match the trained model ({})",
                a.frob(),
                self.frob
            )));
        }
        Ok(())
    }

    /// Queries one coefficient of the approximate solution against the
    /// plain training matrix, wrapping it for the model's kernel.
    pub fn query_alpha(&self, train: &SampledMatrix, p: usize) -> Result<f64> {
        match self.kernel {
            Kernel::Linear => self.query_alpha_with(train, p),
            Kernel::Poly { degree } => {
                let view = PolyKernelView::new(train, degree)?;
                self.query_alpha_with(&view, p)
            }
        }
    }

    /// Coefficient query against an explicit sampling view.
    ///
    /// `alpha_p = sum_s u_s R_sp` with each `R_sp` estimated by one trace
    /// run at the budget's per-element target, on the substream addressed
    /// by `p`. Results are memoized.
    pub fn query_alpha_with<A: SampleAccess + ?Sized>(&self, a: &A, p: usize) -> Result<f64> {
        self.check_matrix(a)?;
        if p >= self.m_train {
            return Err(Error::IndexOutOfRange {
                context: "coefficient index",
                index: p,
                size: self.m_train,
            });
        }
        if let Some(v) = self.alpha_cache.read().unwrap().get(&p) {
            return Ok(*v);
        }
        let r = self.sketch.r;
        // Every sketched column has this exact norm by construction.
        let bound = self.frob / (r as f64).sqrt();
        let params =
            TraceParams::from_absolute(self.budget.query_eps, a.frob(), bound, self.budget.query_eta)?;
        let mut rng = substream(self.seed, Domain::Alpha, p as u64);
        let mut sum = 0.0;
        for s in 0..r {
            if self.u[s] == 0.0 {
                continue;
            }
            let oracle = UnitColumnOracle {
                a,
                sketch: &self.sketch,
                s,
                p,
                bound,
            };
            let est = estimate_trace(a, &oracle, &params, &mut rng)?;
            sum += self.u[s] * est;
        }
        self.alpha_cache.write().unwrap().entry(p).or_insert(sum);
        Ok(sum)
    }

    /// Scores and labels a query point against the plain training matrix.
    pub fn classify(
        &self,
        train: &SampledMatrix,
        x: &[f64],
        rng: &mut ChaCha8Rng,
    ) -> Result<Classification> {
        match self.kernel {
            Kernel::Linear => self.classify_with(train, x, rng),
            Kernel::Poly { degree } => {
                let view = PolyKernelView::new(train, degree)?;
                self.classify_with(&view, x, rng)
            }
        }
    }

    /// Classification against an explicit sampling view: one trace
    /// estimate of the decision value with the coefficient oracle served
    /// by memoized queries; the sign is the label.
    pub fn classify_with<A: SampleAccess + ?Sized>(
        &self,
        a: &A,
        x: &[f64],
        rng: &mut ChaCha8Rng,
    ) -> Result<Classification> {
        self.check_matrix(a)?;
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                context: "query point",
                expected: self.n_features,
                actual: x.len(),
            });
        }
        let x_norm = a.map_query_norm(x);
        if x_norm <= 0.0 {
            return Err(Error::Precondition("query point must be nonzero".into()));
        }
        let target = self.budget.eps / 4.0 * self.y_norm * x_norm;
        let bound = self.budget.kappa * self.budget.kappa * self.y_norm * x_norm;
        let params = TraceParams::from_absolute(target, a.frob(), bound, self.budget.eta / 4.0)?;
        let oracle = ScoreOracle {
            model: self,
            a,
            x,
            bound,
            error: RefCell::new(None),
        };
        let score = estimate_trace(a, &oracle, &params, rng)?;
        if let Some(err) = oracle.error.into_inner() {
            return Err(err);
        }
        let (label, tie) = if score > 0.0 {
            (1, false)
        } else if score < 0.0 {
            (-1, false)
        } else {
            (1, true)
        };
        Ok(Classification { score, label, tie })
    }
}

/// Oracle for one element of the sketch-times-data matrix: the rank-one
/// matrix `e_p (X' e_s)^T` queried as
/// `entry(j, i) = [j == p] * scale_s * A[i, col_s]`.
struct UnitColumnOracle<'a, A: SampleAccess + ?Sized> {
    a: &'a A,
    sketch: &'a ColumnSketch,
    s: usize,
    p: usize,
    bound: f64,
}

impl<A: SampleAccess + ?Sized> TraceOracle for UnitColumnOracle<'_, A> {
    fn entry(&self, j: usize, i: usize) -> f64 {
        if j != self.p {
            return 0.0;
        }
        self.sketch.col_scales[self.s] * self.a.entry(i, self.sketch.col_indices[self.s])
    }

    fn frob_bound(&self) -> f64 {
        self.bound
    }
}

/// Oracle for the decision value `Tr[A alpha x^T]`: coefficients come
/// from the memoized per-index queries. Query failures are parked in a
/// cell and surfaced after the estimate.
struct ScoreOracle<'a, A: SampleAccess + ?Sized> {
    model: &'a SvmModel,
    a: &'a A,
    x: &'a [f64],
    bound: f64,
    error: RefCell<Option<Error>>,
}

impl<A: SampleAccess + ?Sized> TraceOracle for ScoreOracle<'_, A> {
    fn entry(&self, j: usize, i: usize) -> f64 {
        match self.model.query_alpha_with(self.a, j) {
            Ok(alpha_j) => alpha_j * self.a.map_query(self.x, i),
            Err(e) => {
                let mut slot = self.error.borrow_mut();
                if slot.is_none() {
                    *slot = Some(e);
                }
                0.0
            }
        }
    }

    fn frob_bound(&self) -> f64 {
        self.bound
    }
}

/// Trains a model on the dataset's training partition.
///
/// Stages: budget, column sketch, row sketch, spectral decomposition,
/// eigen-coefficient estimation. Errors carry the failing stage name.
pub fn build_model(data: &LabeledDataset, config: &RunConfig) -> Result<SvmModel> {
    config.validate()?;
    let (train, y) = data.train_view().map_err(|e| e.in_stage("train split"))?;
    match config.kernel {
        Kernel::Linear => build_model_on(&train, &y, data.n_features(), config),
        Kernel::Poly { degree } => {
            let view = PolyKernelView::new(&train, degree)?;
            build_model_on(&view, &y, data.n_features(), config)
        }
    }
}

/// Trains on an explicit sampling view (the training matrix or a kernel
/// view over it).
pub fn build_model_on<A: SampleAccess + ?Sized>(
    a: &A,
    y: &[f64],
    n_features: usize,
    config: &RunConfig,
) -> Result<SvmModel> {
    config.validate()?;
    if y.len() != a.n_cols() {
        return Err(Error::DimensionMismatch {
            context: "training labels",
            expected: a.n_cols(),
            actual: y.len(),
        });
    }

    let budget = match config.mode {
        ParamMode::Practical => ErrorBudget::practical(
            config.eps,
            config.eta,
            config.b_ctrl,
            a.n_rows(),
            config.kappa,
            config.budget_rank(),
            a.frob(),
        ),
        ParamMode::Theoretical => ErrorBudget::theoretical(
            config.eps,
            config.eta,
            a.n_rows(),
            config.kappa,
            config.budget_rank(),
            a.frob(),
        ),
    }
    .map_err(|e| e.in_stage("error budget"))?;

    if budget.r > MAX_SKETCH_R || budget.r.saturating_mul(budget.c) > MAX_SKETCH_ENTRIES {
        return Err(Error::InvalidConfig(format!(
            "sketch sizes r = {}, c = {} exceed the materialization guard; \
             practical mode keeps them desk-scale",
            budget.r, budget.c
        )));
    }
    let r = budget.r as usize;
    let c = budget.c as usize;

    let mut train_rng = substream(config.seed, Domain::Train, 0);
    let sketch =
        ColumnSketch::sample(a, r, &mut train_rng).map_err(|e| e.in_stage("column sampling"))?;
    let rows = RowSketch::sample(a, &sketch, c, &mut train_rng)
        .map_err(|e| e.in_stage("row sampling"))?;

    let decomp = spectral_decompose(&rows.gram(), config.gamma, config.rank_policy())
        .map_err(|e| e.in_stage("spectral decomposition"))?;

    let lambda_tilde = estimate_lambdas(
        a,
        y,
        &sketch,
        &decomp,
        config.eps,
        config.eta,
        config.seed,
    )
    .map_err(|e| e.in_stage("coefficient estimation"))?;

    let u = compose_u(&decomp, &lambda_tilde);
    let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();

    Ok(SvmModel {
        sketch,
        sigma_sq: decomp.sigma_sq,
        sigma_sq_raw: decomp.sigma_sq_raw,
        v_dd: decomp.vectors,
        lambda_tilde,
        u,
        gamma: config.gamma,
        frob: a.frob(),
        budget,
        kernel: config.kernel,
        seed: config.seed,
        y_norm,
        n_features,
        feature_rows: a.n_rows(),
        m_train: a.n_cols(),
        alpha_cache: RwLock::new(HashMap::new()),
    })
}
