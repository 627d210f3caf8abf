//! Diagonal-covariance Gaussian mixtures: k-means seeding and EM training.
//!
//! The density is `sum_k alpha_k prod_d N(y_d; mu_kd, var_kd)`. EM alternates
//! the responsibility update
//! `gamma_jk = alpha_k phi(y_j | k) / sum_l alpha_l phi(y_j | l)` with the
//! closed-form M-step for weights, means and (using the new means) variances,
//! until the largest absolute parameter change drops to `tolerance` or the
//! epoch budget runs out.

use rand::Rng;

use crate::{Error, Frames, Result};

pub const VARIANCE_FLOOR: f64 = 1e-6;
pub const DEFAULT_EPOCHS: usize = 200;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const KMEANS_MAX_ROUNDS: usize = 100;

/// Responsibility mass below which a component is considered collapsed.
const COLLAPSE_MASS: f64 = 1e-10;
const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    dim: usize,
    weights: Vec<f64>,
    // component-major: means[k * dim + d]
    means: Vec<f64>,
    variances: Vec<f64>,
}

impl GmmModel {
    pub fn new(
        dim: usize,
        weights: Vec<f64>,
        means: Vec<f64>,
        variances: Vec<f64>,
    ) -> Result<Self> {
        let q = weights.len();
        if dim == 0 || q == 0 {
            return Err(Error::Model(
                "mixture needs at least one component and dimension".into(),
            ));
        }
        if means.len() != q * dim || variances.len() != q * dim {
            return Err(Error::Model("mixture parameter shapes disagree".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Model("mixture weights must be nonnegative".into()));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::Model(format!("mixture weights sum to {s}")));
        }
        if variances
            .iter()
            .any(|v| !(v.is_finite() && *v >= VARIANCE_FLOOR))
        {
            return Err(Error::Model(
                "variances must be finite and above the floor".into(),
            ));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::Model("means must be finite".into()));
        }
        Ok(Self {
            dim,
            weights,
            means,
            variances,
        })
    }

    /// Single component.
    pub fn gaussian(mean: Vec<f64>, variance: Vec<f64>) -> Result<Self> {
        Self::new(mean.len(), vec![1.0], mean, variance)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self, k: usize) -> &[f64] {
        &self.means[k * self.dim..(k + 1) * self.dim]
    }

    pub fn variance(&self, k: usize) -> &[f64] {
        &self.variances[k * self.dim..(k + 1) * self.dim]
    }

    /// `Q (1 + 2D)` stored reals.
    pub fn param_count(&self) -> usize {
        self.components() * (1 + 2 * self.dim)
    }

    fn component_log_density(&self, k: usize, y: &[f64]) -> f64 {
        let mu = self.mean(k);
        let var = self.variance(k);
        let mut acc = 0.0;
        for d in 0..self.dim {
            let diff = y[d] - mu[d];
            acc -= 0.5 * (LN_2PI + var[d].ln() + diff * diff / var[d]);
        }
        acc
    }

    /// `ln P(y | theta)`, evaluated with log-sum-exp.
    pub fn log_pdf(&self, y: &[f64]) -> f64 {
        debug_assert_eq!(y.len(), self.dim);
        let mut terms = [0.0f64; 16];
        let mut heap = Vec::new();
        let q = self.components();
        let buf: &mut [f64] = if q <= terms.len() {
            &mut terms[..q]
        } else {
            heap.resize(q, 0.0);
            &mut heap
        };
        for (k, slot) in buf.iter_mut().enumerate() {
            *slot = ln0(self.weights[k]) + self.component_log_density(k, y);
        }
        log_sum_exp(buf)
    }

    pub fn pdf(&self, y: &[f64]) -> f64 {
        self.log_pdf(y).exp()
    }

    /// Total log-likelihood of a sample set.
    pub fn log_likelihood(&self, samples: &Frames) -> f64 {
        samples.iter().map(|y| self.log_pdf(y)).sum()
    }
}

fn ln0(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Per-dimension mean and (floored) variance of a sample set.
pub fn moments(samples: &Frames) -> (Vec<f64>, Vec<f64>) {
    let d = samples.dim();
    let n = samples.len().max(1) as f64;
    let mut mean = vec![0.0; d];
    for y in samples.iter() {
        mean.iter_mut().zip(y).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for y in samples.iter() {
        for i in 0..d {
            var[i] += (y[i] - mean[i]).powi(2);
        }
    }
    var.iter_mut()
        .for_each(|v| *v = (*v / n).max(VARIANCE_FLOOR));
    (mean, var)
}

/// k-means++ seeding followed by Lloyd iterations; the clusters become the
/// initial mixture (centroids, within-cluster variances, cluster fractions).
pub fn kmeans_init<R: Rng + ?Sized>(samples: &Frames, q: usize, rng: &mut R) -> Result<GmmModel> {
    let n = samples.len();
    let d = samples.dim();
    if q == 0 || n < q {
        return Err(Error::Training(format!(
            "{n} samples cannot seed {q} clusters"
        )));
    }
    let mut centroids: Vec<f64> = Vec::with_capacity(q * d);
    centroids.extend_from_slice(samples.frame(rng.random_range(0..n)));
    let mut nearest: Vec<f64> = samples
        .iter()
        .map(|y| sq_dist(y, &centroids[..d]))
        .collect();
    for _ in 1..q {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, w) in nearest.iter().enumerate() {
                if *w > 0.0 && target < *w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            // guard against rounding landing on an already chosen point
            if nearest[idx] == 0.0 {
                idx = nearest
                    .iter()
                    .enumerate()
                    .rev()
                    .find(|(_, w)| **w > 0.0)
                    .map_or(idx, |(i, _)| i);
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        let c = samples.frame(pick).to_vec();
        for (i, y) in samples.iter().enumerate() {
            nearest[i] = nearest[i].min(sq_dist(y, &c));
        }
        centroids.extend_from_slice(&c);
    }

    let mut assign = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ROUNDS {
        let mut changed = false;
        for (i, y) in samples.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for k in 0..q {
                let dist = sq_dist(y, &centroids[k * d..(k + 1) * d]);
                if dist < best_d {
                    best_d = dist;
                    best = k;
                }
            }
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![0.0; q * d];
        let mut counts = vec![0usize; q];
        for (i, y) in samples.iter().enumerate() {
            counts[assign[i]] += 1;
            for j in 0..d {
                sums[assign[i] * d + j] += y[j];
            }
        }
        for k in 0..q {
            // empty clusters keep their previous centroid
            if counts[k] > 0 {
                for j in 0..d {
                    centroids[k * d + j] = sums[k * d + j] / counts[k] as f64;
                }
            }
        }
    }

    let mut counts = vec![0usize; q];
    let mut vars = vec![0.0; q * d];
    for (i, y) in samples.iter().enumerate() {
        let k = assign[i];
        counts[k] += 1;
        for j in 0..d {
            vars[k * d + j] += (y[j] - centroids[k * d + j]).powi(2);
        }
    }
    for k in 0..q {
        for j in 0..d {
            let v = &mut vars[k * d + j];
            *v = if counts[k] > 0 {
                *v / counts[k] as f64
            } else {
                0.0
            };
            *v = v.max(VARIANCE_FLOOR);
        }
    }
    let weights: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    GmmModel::new(d, weights, centroids, vars)
}

/// Stopping rule for [`em_train`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub epochs: usize,
    pub tolerance: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            epochs: DEFAULT_EPOCHS,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// Trace of an EM run.
#[derive(Debug, Clone, Default)]
pub struct EmReport {
    pub iterations: usize,
    /// Log-likelihood of the parameters entering each iteration.
    pub log_likelihoods: Vec<f64>,
    pub reseeded: usize,
    pub converged: bool,
}

/// Refines `init` by expectation-maximization.
pub fn em_train<R: Rng + ?Sized>(
    samples: &Frames,
    init: &GmmModel,
    config: EmConfig,
    rng: &mut R,
) -> Result<(GmmModel, EmReport)> {
    let n = samples.len();
    let d = init.dim();
    if samples.dim() != d {
        return Err(Error::Training(format!(
            "samples of width {} for a {d}-dimensional mixture",
            samples.dim()
        )));
    }
    if n == 0 {
        return Err(Error::Training("no samples for EM".into()));
    }
    let q = init.components();
    let mut model = init.clone();
    let mut report = EmReport::default();
    let mut gamma = vec![0.0; n * q];
    let (_, global_var) = moments(samples);

    for _ in 0..config.epochs {
        // E-step
        let mut ll = 0.0;
        for (j, y) in samples.iter().enumerate() {
            let row = &mut gamma[j * q..(j + 1) * q];
            for (k, g) in row.iter_mut().enumerate() {
                *g = ln0(model.weights[k]) + model.component_log_density(k, y);
            }
            let lse = log_sum_exp(row);
            ll += lse;
            row.iter_mut().for_each(|g| *g = (*g - lse).exp());
        }
        report.log_likelihoods.push(ll);

        // M-step
        let mut next = model.clone();
        for k in 0..q {
            let mass: f64 = (0..n).map(|j| gamma[j * q + k]).sum();
            if mass < COLLAPSE_MASS {
                let pick = rng.random_range(0..n);
                log::warn!("mixture component {k} collapsed; re-seeding from sample {pick}");
                next.means[k * d..(k + 1) * d].copy_from_slice(samples.frame(pick));
                next.variances[k * d..(k + 1) * d].copy_from_slice(&global_var);
                next.weights[k] = 1.0 / q as f64;
                report.reseeded += 1;
                continue;
            }
            next.weights[k] = mass / n as f64;
            let mut mu = vec![0.0; d];
            for (j, y) in samples.iter().enumerate() {
                let g = gamma[j * q + k];
                mu.iter_mut().zip(y).for_each(|(m, v)| *m += g * v);
            }
            mu.iter_mut().for_each(|m| *m /= mass);
            let mut var = vec![0.0; d];
            for (j, y) in samples.iter().enumerate() {
                let g = gamma[j * q + k];
                for i in 0..d {
                    var[i] += g * (y[i] - mu[i]).powi(2);
                }
            }
            var.iter_mut()
                .for_each(|v| *v = (*v / mass).max(VARIANCE_FLOOR));
            next.means[k * d..(k + 1) * d].copy_from_slice(&mu);
            next.variances[k * d..(k + 1) * d].copy_from_slice(&var);
        }
        let total: f64 = next.weights.iter().sum();
        next.weights.iter_mut().for_each(|w| *w /= total);

        let change = max_abs_change(&model, &next);
        model = next;
        report.iterations += 1;
        if change <= config.tolerance {
            report.converged = true;
            break;
        }
    }
    Ok((model, report))
}

fn max_abs_change(a: &GmmModel, b: &GmmModel) -> f64 {
    a.weights
        .iter()
        .zip(&b.weights)
        .chain(a.means.iter().zip(&b.means))
        .chain(a.variances.iter().zip(&b.variances))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// k-means initialization followed by EM.
pub fn fit<R: Rng + ?Sized>(
    samples: &Frames,
    q: usize,
    config: EmConfig,
    rng: &mut R,
) -> Result<GmmModel> {
    let init = kmeans_init(samples, q, rng)?;
    em_train(samples, &init, config, rng).map(|(m, _)| m)
}
