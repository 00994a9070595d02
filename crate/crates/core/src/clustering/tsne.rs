//! Exact t-SNE (no Barnes-Hut approximation) for small point sets such as
//! topic-word rows.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{par, rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneParams {
    pub perplexity: f64,
    pub iterations: usize,
    /// `None` picks `max(n / early_exaggeration / 4, 50)`.
    #[serde(default)]
    pub learning_rate: Option<f64>,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub seed: u64,
}

impl Default for TsneParams {
    fn default() -> Self {
        TsneParams {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: None,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneResult {
    pub coords: Vec<[f64; 2]>,
    pub initial_kl: f64,
    pub final_kl: f64,
}

fn sq_distances(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    x.iter()
        .map(|a| {
            x.iter()
                .map(|b| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum())
                .collect()
        })
        .collect()
}

/// Conditional affinities of point `i` with the bandwidth found by bisection
/// on the entropy target `ln(perplexity)`.
fn conditional_row(d: &[f64], i: usize, perplexity: f64) -> Vec<f64> {
    let target = perplexity.ln();
    let (mut beta, mut lo, mut hi) = (1.0f64, f64::NEG_INFINITY, f64::INFINITY);
    let mut row = vec![0.0; d.len()];
    for _ in 0..100 {
        let min_d = d
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &v)| v)
            .fold(f64::INFINITY, f64::min);
        let mut sum = 0.0;
        let mut weighted = 0.0;
        for (j, &dj) in d.iter().enumerate() {
            row[j] = if j == i { 0.0 } else { (-(dj - min_d) * beta).exp() };
            sum += row[j];
            weighted += row[j] * (dj - min_d);
        }
        let entropy = sum.ln() + beta * weighted / sum;
        for p in row.iter_mut() {
            *p /= sum;
        }
        let diff = entropy - target;
        if diff.abs() < 1e-5 {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = if lo.is_finite() { (beta + lo) / 2.0 } else { beta / 2.0 };
        }
    }
    row
}

fn joint_affinities(x: &[Vec<f64>], perplexity: f64) -> Vec<Vec<f64>> {
    let d = sq_distances(x);
    let n = x.len();
    let cond = par::map_range(n, |i| conditional_row(&d[i], i, perplexity));
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        ((cond[i][j] + cond[j][i]) / (2.0 * n as f64)).max(1e-12)
                    }
                })
                .collect()
        })
        .collect()
}

fn student_kernel(y: &[[f64; 2]]) -> (Vec<Vec<f64>>, f64) {
    let num: Vec<Vec<f64>> = y
        .iter()
        .enumerate()
        .map(|(i, a)| {
            y.iter()
                .enumerate()
                .map(|(j, b)| {
                    if i == j {
                        0.0
                    } else {
                        let dx = a[0] - b[0];
                        let dy = a[1] - b[1];
                        1.0 / (1.0 + dx * dx + dy * dy)
                    }
                })
                .collect()
        })
        .collect();
    let total = num.iter().flatten().sum();
    (num, total)
}

fn kl_divergence(p: &[Vec<f64>], y: &[[f64; 2]]) -> f64 {
    let (num, total) = student_kernel(y);
    let mut kl = 0.0;
    for i in 0..p.len() {
        for j in 0..p.len() {
            if i != j {
                let q = (num[i][j] / total).max(1e-12);
                kl += p[i][j] * (p[i][j] / q).ln();
            }
        }
    }
    kl
}

/// Embeds the rows of `x` in two dimensions.
pub fn tsne_project(x: &[Vec<f64>], params: &TsneParams) -> Result<TsneResult> {
    let n = x.len();
    if n == 0 {
        return Err(Error::invalid("t-SNE needs at least one point"));
    }
    if n == 1 {
        return Ok(TsneResult {
            coords: vec![[0.0, 0.0]],
            initial_kl: 0.0,
            final_kl: 0.0,
        });
    }
    if !(params.perplexity > 0.0) || params.perplexity >= n as f64 {
        return Err(Error::invalid(format!(
            "t-SNE perplexity {} must lie in (0, {n})",
            params.perplexity
        )));
    }
    let p = joint_affinities(x, params.perplexity);
    let mut r = rng::seeded(params.seed);
    let normal = Normal::new(0.0, 1e-2).expect("valid normal");
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [normal.sample(&mut r), normal.sample(&mut r)])
        .collect();
    let initial_kl = kl_divergence(&p, &y);
    let lr = params
        .learning_rate
        .unwrap_or_else(|| (n as f64 / params.early_exaggeration / 4.0).max(50.0));
    let exaggeration_iters = params.exaggeration_iters.min(params.iterations / 4);
    let mut update = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];

    for it in 0..params.iterations {
        let exaggeration = if it < exaggeration_iters {
            params.early_exaggeration
        } else {
            1.0
        };
        let momentum = if it < 250 { 0.5 } else { 0.8 };
        let (num, total) = student_kernel(&y);
        let grads = par::map_range(n, |i| {
            let mut g = [0.0; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let m = (exaggeration * p[i][j] - num[i][j] / total) * num[i][j];
                g[0] += 4.0 * m * (y[i][0] - y[j][0]);
                g[1] += 4.0 * m * (y[i][1] - y[j][1]);
            }
            g
        });
        for i in 0..n {
            for d in 0..2 {
                let g = grads[i][d];
                gains[i][d] = if (g > 0.0) != (update[i][d] > 0.0) {
                    gains[i][d] + 0.2
                } else {
                    (gains[i][d] * 0.8).max(0.01)
                };
                update[i][d] = momentum * update[i][d] - lr * gains[i][d] * g;
                y[i][d] += update[i][d];
            }
        }
        for d in 0..2 {
            let mean = y.iter().map(|p| p[d]).sum::<f64>() / n as f64;
            for p in y.iter_mut() {
                p[d] -= mean;
            }
        }
    }
    let final_kl = kl_divergence(&p, &y);
    Ok(TsneResult {
        coords: y,
        initial_kl,
        final_kl,
    })
}
