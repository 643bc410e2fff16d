//! Exact reference solvers and brute-force oracles.
//!
//! Everything here computes densely and exactly (up to floating point),
//! for use as test oracles and as the classical comparison column in the
//! benchmark harness. Size guards keep the brute-force paths on desk-size
//! instances.

use crate::error::{Error, Result};
use crate::store::SampledMatrix;
use crate::subsample::{ColumnSketch, RowSketch};
use nalgebra::{DMatrix, DVector};

/// Entry-count guard for dense brute-force computations.
pub const BRUTE_FORCE_ENTRY_LIMIT: usize = 10_000;
/// Row-count guard for materializing tensor-power columns.
pub const BRUTE_FORCE_TENSOR_LIMIT: usize = 100_000;

/// Exact solution of the regularized least-squares SVM system.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub alpha: DVector<f64>,
    /// Hyperplane offset; zero in the offset-free formulation.
    pub bias: f64,
    pub gamma: f64,
    /// `‖(X^T X + gamma^{-1} I) alpha - y‖` for finite gamma, or the
    /// residual against the range-projected labels for the pseudoinverse
    /// solution.
    pub residual: f64,
    /// Number of spectral directions used.
    pub rank_used: usize,
}

/// Solves `(X^T X + gamma^{-1} I) alpha = y`; `gamma = inf` selects the
/// minimum-norm pseudoinverse solution with singular values below
/// `1e-10 * sigma_max` treated as zero.
pub fn exact_lssvm(x: &DMatrix<f64>, y: &DVector<f64>, gamma: f64) -> Result<ExactSolution> {
    let m = x.ncols();
    if y.len() != m {
        return Err(Error::DimensionMismatch {
            context: "exact solver labels",
            expected: m,
            actual: y.len(),
        });
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "gamma must be positive or infinite, got {gamma}"
        )));
    }

    if gamma.is_infinite() {
        let svd = x.clone().svd(false, true);
        let v_t = svd.v_t.as_ref().expect("requested V^T");
        let sigma_max = svd.singular_values.max();
        let cutoff = 1e-10 * sigma_max;
        let mut alpha = DVector::zeros(m);
        let mut projected = DVector::zeros(m);
        let mut rank_used = 0usize;
        for (l, &s) in svd.singular_values.iter().enumerate() {
            if s > cutoff {
                let v_l: DVector<f64> = v_t.row(l).transpose();
                let coeff = v_l.dot(y);
                alpha += &v_l * (coeff / (s * s));
                projected += &v_l * coeff;
                rank_used += 1;
            }
        }
        let gram = x.transpose() * x;
        let residual = (&gram * &alpha - projected).norm();
        Ok(ExactSolution {
            alpha,
            bias: 0.0,
            gamma,
            residual,
            rank_used,
        })
    } else {
        let mut system = x.transpose() * x;
        let inv_gamma = gamma.recip();
        for i in 0..m {
            system[(i, i)] += inv_gamma;
        }
        let chol = nalgebra::Cholesky::new(system.clone()).ok_or_else(|| {
            Error::ModelDegenerate("regularized normal system is not positive definite".into())
        })?;
        let alpha = chol.solve(y);
        let residual = (&system * &alpha - y).norm();
        Ok(ExactSolution {
            alpha,
            bias: 0.0,
            gamma,
            residual,
            rank_used: m,
        })
    }
}

/// Solves the general block system with a hyperplane offset:
/// `[[0, 1^T], [1, K + gamma^{-1} I]] (b, alpha) = (0, y)`.
pub fn exact_lssvm_bias(k: &DMatrix<f64>, y: &DVector<f64>, gamma: f64) -> Result<ExactSolution> {
    let m = k.nrows();
    if k.ncols() != m {
        return Err(Error::DimensionMismatch {
            context: "kernel matrix",
            expected: m,
            actual: k.ncols(),
        });
    }
    if y.len() != m {
        return Err(Error::DimensionMismatch {
            context: "bias solver labels",
            expected: m,
            actual: y.len(),
        });
    }
    let scale = k.amax().max(1.0);
    let max_asym = (k - k.transpose()).amax();
    if max_asym > 1e-8 * scale {
        return Err(Error::Asymmetric {
            max_asym,
            tol: 1e-8 * scale,
        });
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "gamma must be positive or infinite, got {gamma}"
        )));
    }
    let inv_gamma = if gamma.is_infinite() { 0.0 } else { gamma.recip() };

    let mut system = DMatrix::zeros(m + 1, m + 1);
    for j in 0..m {
        system[(0, j + 1)] = 1.0;
        system[(j + 1, 0)] = 1.0;
    }
    for i in 0..m {
        for j in 0..m {
            system[(i + 1, j + 1)] = k[(i, j)];
        }
        system[(i + 1, i + 1)] += inv_gamma;
    }
    let mut rhs = DVector::zeros(m + 1);
    for i in 0..m {
        rhs[i + 1] = y[i];
    }

    let lu = system.clone().full_piv_lu();
    let solution = lu.solve(&rhs).ok_or_else(|| {
        let svd = system.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        Error::ModelDegenerate(format!(
            "block system is singular (singular values range {smin:e} ..= {smax:e})"
        ))
    })?;
    let bias = solution[0];
    let alpha = DVector::from_fn(m, |i, _| solution[i + 1]);
    let residual = (&system * &solution - &rhs).norm();
    Ok(ExactSolution {
        alpha,
        bias,
        gamma,
        residual,
        rank_used: m,
    })
}

/// Dense trace of a product, `Tr[A B]`, guarded to small instances.
pub fn brute_force_trace(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let entries = a.nrows() * a.ncols();
    if entries > BRUTE_FORCE_ENTRY_LIMIT {
        return Err(Error::SizeGuard {
            context: "brute-force trace",
            actual: entries,
            limit: BRUTE_FORCE_ENTRY_LIMIT,
        });
    }
    if b.nrows() != a.ncols() || b.ncols() != a.nrows() {
        return Err(Error::DimensionMismatch {
            context: "brute-force trace operand",
            expected: a.ncols(),
            actual: b.nrows(),
        });
    }
    let mut t = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            t += a[(i, j)] * b[(j, i)];
        }
    }
    Ok(t)
}

/// Exact length-square distribution of a vector.
pub fn brute_force_distribution(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput("distribution"));
    }
    if values.len() > BRUTE_FORCE_ENTRY_LIMIT {
        return Err(Error::SizeGuard {
            context: "brute-force distribution",
            actual: values.len(),
            limit: BRUTE_FORCE_ENTRY_LIMIT,
        });
    }
    let total: f64 = values.iter().map(|v| v * v).sum();
    if total <= 0.0 {
        return Err(Error::DegenerateDistribution("brute-force distribution"));
    }
    Ok(values.iter().map(|v| v * v / total).collect())
}

/// Exact joint length-square distribution of a matrix, row-major.
pub fn brute_force_joint_distribution(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let flat: Vec<f64> = (0..a.nrows())
        .flat_map(|i| (0..a.ncols()).map(move |j| a[(i, j)]))
        .collect();
    brute_force_distribution(&flat)
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations,
/// independent of the solver the pipeline uses. Returns eigenvalues in
/// descending order with matching eigenvector columns.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "jacobi eigensolver",
            expected: n,
            actual: a.ncols(),
        });
    }
    let scale = a.amax().max(1.0);
    let max_asym = (a - a.transpose()).amax();
    if max_asym > 1e-10 * scale {
        return Err(Error::Asymmetric {
            max_asym,
            tol: 1e-10 * scale,
        });
    }
    let mut m = a.clone();
    let mut v = DMatrix::identity(n, n);
    let off = |m: &DMatrix<f64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)] * m[(i, j)];
                }
            }
        }
        s.sqrt()
    };
    let tol = 1e-14 * m.norm().max(1e-300);
    for _sweep in 0..100 {
        if off(&m) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol / (n as f64) {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                // Stable tangent of the rotation angle.
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = c * mip - s * miq;
                    m[(i, q)] = s * mip + c * miq;
                }
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = c * mpj - s * mqj;
                    m[(q, j)] = s * mpj + c * mqj;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = DVector::from_fn(n, |l, _| m[(order[l], order[l])]);
    let vectors = DMatrix::from_fn(n, n, |i, l| v[(i, order[l])]);
    Ok((values, vectors))
}

/// Condition number estimate `(sigma_1 / sigma_k)^2` from the singular
/// values of a dense matrix; intended for test datasets where the target
/// rank is known.
pub fn condition_estimate(x: &DMatrix<f64>, rank_k: usize) -> Result<f64> {
    if rank_k == 0 || rank_k > x.nrows().min(x.ncols()) {
        return Err(Error::InvalidConfig(format!(
            "rank {rank_k} invalid for a {}x{} matrix",
            x.nrows(),
            x.ncols()
        )));
    }
    let svd = x.clone().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let s1 = sv[0];
    let sk = sv[rank_k - 1];
    if sk <= 0.0 {
        return Err(Error::ModelDegenerate(format!(
            "singular value {rank_k} is zero; matrix rank is below the requested rank"
        )));
    }
    Ok((s1 / sk) * (s1 / sk))
}

/// Dense evaluation of the sketch-based approximation chain for a fixed
/// pair of sketches: the approximate eigenvectors, the eigen-coefficients
/// and the reconstructed coefficient vector.
#[derive(Debug, Clone)]
pub struct PipelineOracle {
    /// Unshifted sketch eigenvalues, descending, after rank selection.
    pub sigma_sq: Vec<f64>,
    /// Approximate eigenvectors of the full Gram matrix (`m x k`).
    pub v_tilde: DMatrix<f64>,
    /// Exact eigen-coefficients `lambda_l = v_tilde_l^T y`.
    pub lambda: Vec<f64>,
    /// `alpha' = sum_l lambda_l / (sigma_l^2 + gamma^{-1}) * v_tilde_l`.
    pub alpha_prime: DVector<f64>,
}

/// Materializes the approximation chain densely. Guarded to small
/// instances; eigenpairs come from [`jacobi_eigen`] so the oracle stays
/// independent of the pipeline's solver.
pub fn brute_force_pipeline(
    x: &SampledMatrix,
    y: &[f64],
    sketch: &ColumnSketch,
    rows: &RowSketch,
    gamma: f64,
    eigen_floor: f64,
) -> Result<PipelineOracle> {
    let (n, m) = x.shape();
    if n * m > BRUTE_FORCE_ENTRY_LIMIT {
        return Err(Error::SizeGuard {
            context: "brute-force pipeline",
            actual: n * m,
            limit: BRUTE_FORCE_ENTRY_LIMIT,
        });
    }
    if y.len() != m {
        return Err(Error::DimensionMismatch {
            context: "brute-force pipeline labels",
            expected: m,
            actual: y.len(),
        });
    }
    let a_dd = rows.gram();
    let (evals, evecs) = jacobi_eigen(&a_dd)?;
    let max_ev = evals.max();
    if max_ev <= 0.0 {
        return Err(Error::ModelDegenerate(
            "sketch Gram matrix has no positive eigenvalues".into(),
        ));
    }
    let kept: Vec<usize> = (0..evals.len())
        .filter(|&l| evals[l] > eigen_floor * max_ev)
        .collect();
    let inv_gamma = if gamma.is_infinite() { 0.0 } else { gamma.recip() };

    let dense = x.to_matrix();
    let x_prime = sketch.materialize(x);
    let r_mat = x_prime.transpose() * &dense; // r x m
    let y_vec = DVector::from_column_slice(y);

    let k = kept.len();
    let mut v_tilde = DMatrix::zeros(m, k);
    let mut sigma_sq = Vec::with_capacity(k);
    let mut lambda = Vec::with_capacity(k);
    let mut alpha_prime = DVector::zeros(m);
    for (col, &l) in kept.iter().enumerate() {
        let s2 = evals[l];
        sigma_sq.push(s2);
        let v_l = evecs.column(l);
        let vt_l = (r_mat.transpose() * v_l) / s2;
        let lam = vt_l.dot(&y_vec);
        lambda.push(lam);
        alpha_prime += &vt_l * (lam / (s2 + inv_gamma));
        v_tilde.set_column(col, &vt_l);
    }
    Ok(PipelineOracle {
        sigma_sq,
        v_tilde,
        lambda,
        alpha_prime,
    })
}

/// Materializes the degree-`p` tensor-power columns of a small matrix
/// (`n^p x m`), guarded by [`BRUTE_FORCE_TENSOR_LIMIT`].
pub fn materialize_tensor_columns(x: &DMatrix<f64>, p: u32) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    let rows = n
        .checked_pow(p)
        .filter(|&r| r <= BRUTE_FORCE_TENSOR_LIMIT)
        .ok_or(Error::SizeGuard {
            context: "tensor-power materialization",
            actual: usize::MAX,
            limit: BRUTE_FORCE_TENSOR_LIMIT,
        })?;
    let m = x.ncols();
    let mut z = DMatrix::zeros(rows, m);
    for j in 0..m {
        for l in 0..rows {
            // Decode l as p base-n digits, most significant first.
            let mut value = 1.0;
            let mut rest = l;
            for t in (0..p).rev() {
                let base = n.pow(t);
                value *= x[(rest / base, j)];
                rest %= base;
            }
            z[(l, j)] = value;
        }
    }
    Ok(z)
}
