use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{log_softmax, LstmLanguageModel, Step};
use crate::{par, rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub clip_norm: f64,
    /// Longer sequences are truncated to this many tokens.
    pub max_len: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: 5.0,
            max_len: 200,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("epsilon", self.epsilon),
            ("clip_norm", self.clip_norm),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        if self.epochs == 0 || self.batch_size == 0 || self.max_len == 0 {
            return Err(Error::invalid("epochs, batch_size and max_len must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("Adam betas must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-token cross-entropy over the training set before any update.
    pub initial_loss: f64,
    /// Mean per-token cross-entropy accumulated during each epoch.
    pub epoch_losses: Vec<f64>,
}

fn backward(model: &LstmLanguageModel, steps: &[Step], grad: &mut [f64]) -> f64 {
    let l = model.layout();
    let (de, dh, v) = (model.embed_dim, model.hidden_dim, model.vocab_size);
    let p = &model.params;
    let (w, u, w_out) = (&p[l.w.clone()], &p[l.u.clone()], &p[l.w_out.clone()]);

    let mut loss = 0.0;
    let mut dh_next = vec![0.0; dh];
    let mut dc_next = vec![0.0; dh];
    let mut dz = vec![0.0; 4 * dh];
    let zeros = vec![0.0; dh];
    for t in (0..steps.len()).rev() {
        let s = &steps[t];
        let (h_prev, c_prev) = if t > 0 {
            (&steps[t - 1].h, &steps[t - 1].c)
        } else {
            (&zeros, &zeros)
        };
        let logp = log_softmax(&s.logits);
        loss -= logp[s.target as usize];

        let mut d_h = dh_next.clone();
        for k in 0..v {
            let dl = logp[k].exp() - if k == s.target as usize { 1.0 } else { 0.0 };
            grad[l.b_out.start + k] += dl;
            let row = &w_out[k * dh..(k + 1) * dh];
            let g_row = &mut grad[l.w_out.start + k * dh..][..dh];
            for j in 0..dh {
                g_row[j] += dl * s.h[j];
                d_h[j] += dl * row[j];
            }
        }

        let g = &s.gates;
        for j in 0..dh {
            let (i, f, gg, o) = (g[j], g[dh + j], g[2 * dh + j], g[3 * dh + j]);
            let dc = d_h[j] * o * (1.0 - s.tanh_c[j] * s.tanh_c[j]) + dc_next[j];
            dz[j] = dc * gg * i * (1.0 - i);
            dz[dh + j] = dc * c_prev[j] * f * (1.0 - f);
            dz[2 * dh + j] = dc * i * (1.0 - gg * gg);
            dz[3 * dh + j] = d_h[j] * s.tanh_c[j] * o * (1.0 - o);
            dc_next[j] = dc * f;
        }

        let x_start = l.embedding.start + s.input as usize * de;
        let x: Vec<f64> = p[x_start..x_start + de].to_vec();
        let mut dx = vec![0.0; de];
        dh_next.fill(0.0);
        for r in 0..4 * dh {
            let d = dz[r];
            if d == 0.0 {
                continue;
            }
            grad[l.b.start + r] += d;
            let w_row = &w[r * de..(r + 1) * de];
            let gw = &mut grad[l.w.start + r * de..][..de];
            for e in 0..de {
                gw[e] += d * x[e];
                dx[e] += d * w_row[e];
            }
            let u_row = &u[r * dh..(r + 1) * dh];
            let gu = &mut grad[l.u.start + r * dh..][..dh];
            for j in 0..dh {
                gu[j] += d * h_prev[j];
                dh_next[j] += d * u_row[j];
            }
        }
        for e in 0..de {
            grad[x_start + e] += dx[e];
        }
    }
    loss
}

/// Summed cross-entropy over the sequence's targets, the number of targets,
/// and the gradient of the summed loss.
pub fn loss_and_gradient(
    model: &LstmLanguageModel,
    tokens: &[u32],
    max_len: usize,
) -> (f64, usize, Vec<f64>) {
    let (inputs, targets) = LstmLanguageModel::io_pairs(tokens, max_len);
    let steps = model.run(&inputs, &targets);
    let mut grad = vec![0.0; model.params.len()];
    let loss = backward(model, &steps, &mut grad);
    (loss, targets.len(), grad)
}

fn sequence_loss(model: &LstmLanguageModel, tokens: &[u32], max_len: usize) -> (f64, usize) {
    let (inputs, targets) = LstmLanguageModel::io_pairs(tokens, max_len);
    let loss = model
        .run(&inputs, &targets)
        .iter()
        .map(|s| -log_softmax(&s.logits)[s.target as usize])
        .sum();
    (loss, targets.len())
}

/// Minimizes mean next-token cross-entropy with Adam and global-norm
/// gradient clipping. The visiting order is reshuffled every epoch from a
/// stream seeded by `config.seed`.
pub fn train(
    model: &mut LstmLanguageModel,
    sequences: &[&[u32]],
    config: &TrainConfig,
) -> Result<TrainReport> {
    config.validate()?;
    if sequences.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    for s in sequences {
        if s.is_empty() {
            return Err(Error::EmptySequence(None));
        }
        if let Some(&bad) = s.iter().find(|&&t| t as usize >= model.vocab_size) {
            return Err(Error::TokenOutOfRange {
                id: bad,
                size: model.vocab_size,
            });
        }
    }

    let initial = par::map(sequences, |s| sequence_loss(model, s, config.max_len));
    let (sum, count) = initial
        .iter()
        .fold((0.0, 0usize), |(a, b), &(l, n)| (a + l, b + n));
    let initial_loss = sum / count as f64;

    let n_params = model.params.len();
    let mut m = vec![0.0; n_params];
    let mut v = vec![0.0; n_params];
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..sequences.len()).collect();
    let mut shuffle_rng = rng::seeded(config.seed);
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        let mut epoch_tokens = 0usize;
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            let model_ref: &LstmLanguageModel = model;
            let parts = par::map(batch, |&i| {
                loss_and_gradient(model_ref, sequences[i], config.max_len)
            });
            let mut grad = vec![0.0; n_params];
            let mut batch_loss = 0.0;
            let mut batch_tokens = 0usize;
            for (loss, n, g) in &parts {
                batch_loss += loss;
                batch_tokens += n;
                for (a, b) in grad.iter_mut().zip(g) {
                    *a += b;
                }
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                });
            }
            epoch_loss += batch_loss;
            epoch_tokens += batch_tokens;

            let scale = 1.0 / batch_tokens as f64;
            let mut norm_sq = 0.0;
            for g in grad.iter_mut() {
                *g *= scale;
                norm_sq += *g * *g;
            }
            let norm = norm_sq.sqrt();
            if norm > config.clip_norm {
                let c = config.clip_norm / norm;
                for g in grad.iter_mut() {
                    *g *= c;
                }
            }

            step += 1;
            let bc1 = 1.0 - config.beta1.powi(step);
            let bc2 = 1.0 - config.beta2.powi(step);
            for (k, p) in model.params.iter_mut().enumerate() {
                let g = grad[k];
                m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g;
                v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g * g;
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                *p -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
            }
        }
        let mean = epoch_loss / epoch_tokens as f64;
        log::debug!("epoch {epoch}: loss {mean:.5}");
        epoch_losses.push(mean);
    }
    Ok(TrainReport {
        initial_loss,
        epoch_losses,
    })
}

/// Largest relative difference between the analytic gradient of the mean
/// sequence loss and a central finite difference with step `epsilon`, taken
/// over all parameters as `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn gradient_check(model: &LstmLanguageModel, tokens: &[u32], epsilon: f64) -> f64 {
    let max_len = usize::MAX;
    let (_, n, grad) = loss_and_gradient(model, tokens, max_len);
    let n = n as f64;
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for k in 0..grad.len() {
        let orig = probe.params[k];
        probe.params[k] = orig + epsilon;
        let plus = sequence_loss(&probe, tokens, max_len).0 / n;
        probe.params[k] = orig - epsilon;
        let minus = sequence_loss(&probe, tokens, max_len).0 / n;
        probe.params[k] = orig;
        let numeric = (plus - minus) / (2.0 * epsilon);
        let analytic = grad[k] / n;
        let denom = analytic.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((analytic - numeric).abs() / denom);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lstm::ModelDims;

    fn small(v: usize, d: usize, seed: u64) -> LstmLanguageModel {
        LstmLanguageModel::init(
            v,
            ModelDims {
                embed_dim: d,
                hidden_dim: d,
            },
            seed,
        )
        .unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = small(6, 4, 11);
        let err = gradient_check(&m, &[3, 4, 5, 3, 0], 1e-4);
        assert!(err < 1e-4, "max relative error {err}");
        assert_eq!(err, gradient_check(&m, &[3, 4, 5, 3, 0], 1e-4));
    }

    #[test]
    fn unused_embedding_rows_get_zero_gradient() {
        let m = small(7, 3, 2);
        let (_, _, g) = loss_and_gradient(&m, &[3, 3, 4], usize::MAX);
        let l = m.layout();
        // inputs are BOS, 3, 3, 4
        for row in [0usize, 2, 5, 6] {
            assert!(g[l.embedding.start + row * 3..][..3].iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn memorizes_a_repeated_sequence() {
        let mut m = small(8, 8, 1);
        let seq: Vec<u32> = vec![3, 4, 5, 6, 7, 3, 4];
        let data: Vec<&[u32]> = vec![&seq; 4];
        let cfg = TrainConfig {
            epochs: 200,
            batch_size: 4,
            learning_rate: 0.02,
            ..Default::default()
        };
        let report = train(&mut m, &data, &cfg).unwrap();
        assert!((report.initial_loss - 8f64.ln()).abs() < 0.05 * 8f64.ln());
        let pp = m.perplexity(&seq).unwrap();
        assert!(pp < 1.1, "perplexity {pp}");
        assert!(report.epoch_losses.last().unwrap() < &(8f64.ln() / 10.0));
    }

    #[test]
    fn training_is_deterministic_and_path_independent() {
        let seqs: Vec<Vec<u32>> = (0..10).map(|i| vec![3 + i % 3, 4, 5 + i % 2]).collect();
        let refs: Vec<&[u32]> = seqs.iter().map(Vec::as_slice).collect();
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 4,
            seed: 5,
            ..Default::default()
        };
        let mut a = small(8, 4, 1);
        let mut b = small(8, 4, 1);
        let ra = train(&mut a, &refs, &cfg).unwrap();
        let rb = par::sequential(|| train(&mut b, &refs, &cfg).unwrap());
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn rejects_bad_input() {
        let mut m = small(5, 2, 0);
        assert!(train(&mut m, &[], &TrainConfig::default()).is_err());
        let bad: Vec<&[u32]> = vec![&[9]];
        assert!(train(&mut m, &bad, &TrainConfig::default()).is_err());
        let cfg = TrainConfig {
            clip_norm: 0.0,
            ..Default::default()
        };
        let ok: Vec<&[u32]> = vec![&[3]];
        assert!(train(&mut m, &ok, &cfg).is_err());
    }

    #[test]
    fn nan_loss_aborts() {
        let mut m = small(5, 2, 0);
        m.params_mut()[0] = f64::NAN;
        let data: Vec<&[u32]> = vec![&[3, 4]];
        // row 0 is the unknown-token embedding; feed it
        let data2: Vec<&[u32]> = vec![&[0, 4]];
        let cfg = TrainConfig {
            epochs: 1,
            ..Default::default()
        };
        let _ = train(&mut m.clone(), &data, &cfg);
        assert!(matches!(
            train(&mut m, &data2, &cfg),
            Err(Error::NonFiniteLoss { epoch: 0, batch: 0 })
        ));
    }
}
