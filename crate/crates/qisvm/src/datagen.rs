//! Artificial dataset construction.
//!
//! Datasets are products of two uniform random factors (rank at most
//! `k`), optionally perturbed entrywise by a small uniform turbulence,
//! normalized to unit operator norm, labeled by a random hyperplane
//! through the origin, and split uniformly into train and test.

use crate::error::{Error, Result};
use crate::rng::{substream, Domain};
use crate::store::{LabeledDataset, SampledMatrix};
use rand::Rng;

/// What to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenSpec {
    /// Feature dimension.
    pub n: usize,
    /// Point count.
    pub m: usize,
    /// Factor rank.
    pub k: usize,
    /// Add entrywise noise at a tenth of the mean absolute entry.
    pub turbulence: bool,
    /// Training-set size; the rest is the test set.
    pub m_train: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidConfig("dimensions must be positive".into()));
        }
        if self.k == 0 || self.k > self.n.min(self.m) {
            return Err(Error::InvalidConfig(format!(
                "rank k must satisfy 1 <= k <= min(n, m) = {}",
                self.n.min(self.m)
            )));
        }
        if self.m_train == 0 || self.m_train >= self.m {
            return Err(Error::InvalidConfig(format!(
                "training size must satisfy 1 <= m_train < m = {}",
                self.m
            )));
        }
        Ok(())
    }
}

const MAX_ATTEMPTS: u32 = 1000;

/// Largest singular value by power iteration on the normal map, to
/// relative precision 1e-10.
fn operator_norm(entries: &[f64], n: usize, m: usize, seed: u64) -> f64 {
    let mut rng = substream(seed, Domain::Generate, 2);
    let mut v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let mut u = vec![0.0; n];
    let mut sigma_sq_prev = 0.0;
    for _ in 0..100_000 {
        // u = X v.
        for (i, slot) in u.iter_mut().enumerate() {
            let mut sum = 0.0;
            for j in 0..m {
                sum += entries[i * m + j] * v[j];
            }
            *slot = sum;
        }
        // v = X^T u, normalized; the growth rate estimates sigma^2.
        let mut sigma_sq = 0.0;
        for (j, slot) in v.iter_mut().enumerate() {
            let mut sum = 0.0;
            for (i, ui) in u.iter().enumerate() {
                sum += entries[i * m + j] * ui;
            }
            *slot = sum;
            sigma_sq += sum * sum;
        }
        let vnorm = sigma_sq.sqrt();
        if vnorm == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= vnorm);
        let sigma_sq_now = u.iter().map(|x| x * x).sum::<f64>();
        if (sigma_sq_now - sigma_sq_prev).abs() <= 1e-10 * sigma_sq_now {
            return sigma_sq_now.sqrt();
        }
        sigma_sq_prev = sigma_sq_now;
    }
    sigma_sq_prev.sqrt()
}

/// Generates a dataset. Deterministic for a fixed spec.
pub fn generate(spec: &GenSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let (n, m, k) = (spec.n, spec.m, spec.k);
    let mut rng = substream(spec.seed, Domain::Generate, 0);

    // Product of two uniform factors: rank at most k.
    let a: Vec<f64> = (0..n * k).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let b: Vec<f64> = (0..k * m).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let mut entries = vec![0.0; n * m];
    for i in 0..n {
        for l in 0..k {
            let ail = a[i * k + l];
            if ail == 0.0 {
                continue;
            }
            let row = &mut entries[i * m..(i + 1) * m];
            for (j, slot) in row.iter_mut().enumerate() {
                *slot += ail * b[l * m + j];
            }
        }
    }

    if spec.turbulence {
        let mean_abs = entries.iter().map(|v| v.abs()).sum::<f64>() / (n * m) as f64;
        let span = 0.1 * mean_abs;
        let mut noise_rng = substream(spec.seed, Domain::Generate, 1);
        for slot in entries.iter_mut() {
            *slot += noise_rng.gen_range(-span..=span);
        }
    }

    // Unit operator norm.
    let sigma = operator_norm(&entries, n, m, spec.seed);
    if sigma <= 0.0 {
        return Err(Error::GenerationFailure {
            attempts: 1,
            reason: "generated matrix is zero",
        });
    }
    entries.iter_mut().for_each(|v| *v /= sigma);

    // Labels by a random hyperplane through the origin; redraw the
    // normal until both classes appear. A zero score labels positive
    // (a measure-zero event, fixed for reproducibility).
    let mut y = vec![0.0; m];
    let mut labeled = false;
    for attempt in 0..MAX_ATTEMPTS {
        let mut w_rng = substream(spec.seed, Domain::Generate, 10 + attempt as u64);
        let w: Vec<f64> = (0..n).map(|_| w_rng.gen_range(0.0..1.0)).collect();
        let mut has_pos = false;
        let mut has_neg = false;
        for j in 0..m {
            let mut score = 0.0;
            for (i, wi) in w.iter().enumerate() {
                score += wi * entries[i * m + j];
            }
            let label = if score < 0.0 { -1.0 } else { 1.0 };
            y[j] = label;
            if label > 0.0 {
                has_pos = true;
            } else {
                has_neg = true;
            }
        }
        if has_pos && has_neg {
            labeled = true;
            break;
        }
    }
    if !labeled {
        return Err(Error::GenerationFailure {
            attempts: MAX_ATTEMPTS,
            reason: "no separating hyperplane produced two classes",
        });
    }

    // Uniform train/test split, redrawn until the training side holds
    // both classes.
    let mut partition = None;
    for attempt in 0..MAX_ATTEMPTS {
        let mut split_rng = substream(spec.seed, Domain::Generate, 2000 + attempt as u64);
        let mut order: Vec<usize> = (0..m).collect();
        for j in (1..m).rev() {
            let pick = split_rng.gen_range(0..=j);
            order.swap(j, pick);
        }
        let has_pos = order[..spec.m_train].iter().any(|&j| y[j] > 0.0);
        let has_neg = order[..spec.m_train].iter().any(|&j| y[j] < 0.0);
        if has_pos && has_neg {
            partition = Some((
                order[..spec.m_train].to_vec(),
                order[spec.m_train..].to_vec(),
            ));
            break;
        }
    }
    let (train_idx, test_idx) = partition.ok_or(Error::GenerationFailure {
        attempts: MAX_ATTEMPTS,
        reason: "training split never contained both classes",
    })?;
    let x = SampledMatrix::from_dense(n, m, entries)?;
    LabeledDataset::new(x, y, train_idx, test_idx)
}
