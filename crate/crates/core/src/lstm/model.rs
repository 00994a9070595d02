use std::ops::Range;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelDims {
    pub embed_dim: usize,
    pub hidden_dim: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims {
            embed_dim: 64,
            hidden_dim: 128,
        }
    }
}

/// Parameter blocks inside the flat buffer.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub embedding: Range<usize>,
    pub w: Range<usize>,
    pub u: Range<usize>,
    pub b: Range<usize>,
    pub w_out: Range<usize>,
    pub b_out: Range<usize>,
}

impl Layout {
    fn new(v: usize, de: usize, dh: usize) -> Self {
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        Layout {
            embedding: take(v * de),
            w: take(4 * dh * de),
            u: take(4 * dh * dh),
            b: take(4 * dh),
            w_out: take(v * dh),
            b_out: take(v),
        }
    }

    fn total(&self) -> usize {
        self.b_out.end
    }
}

/// Embedding, one LSTM layer (gate order input, forget, cell, output) and a
/// softmax output projection. All parameters live in one flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLanguageModel {
    pub(crate) vocab_size: usize,
    pub(crate) embed_dim: usize,
    pub(crate) hidden_dim: usize,
    pub(crate) seed: u64,
    pub(crate) params: Vec<f64>,
}

/// Activations of one time step, kept for backpropagation.
pub(crate) struct Step {
    pub input: u32,
    pub target: u32,
    /// Activated gates, `[i | f | g | o]`.
    pub gates: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
    pub logits: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numerically stable log-softmax.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&l| l - lse).collect()
}

/// Perplexity from the probabilities the model gave each actual target:
/// `exp(-mean(ln q))`.
pub fn perplexity_from_probs(target_probs: &[f64]) -> f64 {
    let nll: f64 = target_probs.iter().map(|p| -p.ln()).sum();
    (nll / target_probs.len() as f64).exp()
}

impl LstmLanguageModel {
    /// Weights uniform in `±1/sqrt(hidden_dim)`, forget-gate bias 1.
    pub fn init(vocab_size: usize, dims: ModelDims, seed: u64) -> Result<Self> {
        let ModelDims {
            embed_dim,
            hidden_dim,
        } = dims;
        if vocab_size < 1 || embed_dim < 1 || hidden_dim < 1 {
            return Err(Error::invalid("model dimensions must be at least 1"));
        }
        let layout = Layout::new(vocab_size, embed_dim, hidden_dim);
        let r = 1.0 / (hidden_dim as f64).sqrt();
        let mut g = rng::seeded(seed);
        let mut params: Vec<f64> = (0..layout.total()).map(|_| g.random_range(-r..r)).collect();
        let forget = layout.b.start + hidden_dim..layout.b.start + 2 * hidden_dim;
        params[forget].fill(1.0);
        Ok(LstmLanguageModel {
            vocab_size,
            embed_dim,
            hidden_dim,
            seed,
            params,
        })
    }

    /// A model with the given flat parameter vector.
    pub fn from_params(
        vocab_size: usize,
        dims: ModelDims,
        seed: u64,
        params: Vec<f64>,
    ) -> Result<Self> {
        let expected = Self::parameter_count(vocab_size, dims);
        if params.len() != expected {
            return Err(Error::LengthMismatch {
                what: "parameter vector",
                left: params.len(),
                right: expected,
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("parameters must be finite"));
        }
        Ok(LstmLanguageModel {
            vocab_size,
            embed_dim: dims.embed_dim,
            hidden_dim: dims.hidden_dim,
            seed,
            params,
        })
    }

    pub fn parameter_count(vocab_size: usize, dims: ModelDims) -> usize {
        Layout::new(vocab_size, dims.embed_dim, dims.hidden_dim).total()
    }

    pub(crate) fn layout(&self) -> Layout {
        Layout::new(self.vocab_size, self.embed_dim, self.hidden_dim)
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            embed_dim: self.embed_dim,
            hidden_dim: self.hidden_dim,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Named parameter block, e.g. `"b"` for the gate biases.
    pub fn block(&self, name: &str) -> Option<&[f64]> {
        let l = self.layout();
        let r = match name {
            "embedding" => l.embedding,
            "w" => l.w,
            "u" => l.u,
            "b" => l.b,
            "w_out" => l.w_out,
            "b_out" => l.b_out,
            _ => return None,
        };
        Some(&self.params[r])
    }

    pub fn block_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let l = self.layout();
        let r = match name {
            "embedding" => l.embedding,
            "w" => l.w,
            "u" => l.u,
            "b" => l.b,
            "w_out" => l.w_out,
            "b_out" => l.b_out,
            _ => return None,
        };
        Some(&mut self.params[r])
    }

    /// Input ids `[BOS, v_1..]` and target ids `[v_1.., EOS]`. A sequence
    /// longer than `max_len` is cut to its first `max_len` tokens and loses
    /// the end marker.
    pub(crate) fn io_pairs(tokens: &[u32], max_len: usize) -> (Vec<u32>, Vec<u32>) {
        let mut inputs = vec![Vocabulary::BOS_ID];
        if tokens.len() > max_len {
            let kept = &tokens[..max_len];
            inputs.extend_from_slice(&kept[..max_len - 1]);
            (inputs, kept.to_vec())
        } else {
            inputs.extend_from_slice(tokens);
            let mut targets = tokens.to_vec();
            targets.push(Vocabulary::EOS_ID);
            (inputs, targets)
        }
    }

    pub(crate) fn run(&self, inputs: &[u32], targets: &[u32]) -> Vec<Step> {
        let l = self.layout();
        let (de, dh, v) = (self.embed_dim, self.hidden_dim, self.vocab_size);
        let p = &self.params;
        let (w, u, b) = (&p[l.w.clone()], &p[l.u.clone()], &p[l.b.clone()]);
        let (w_out, b_out) = (&p[l.w_out.clone()], &p[l.b_out.clone()]);
        let mut h_prev = vec![0.0; dh];
        let mut c_prev = vec![0.0; dh];
        let mut steps = Vec::with_capacity(inputs.len());
        let mut z = vec![0.0; 4 * dh];
        for (&input, &target) in inputs.iter().zip(targets) {
            let x = &p[l.embedding.start + input as usize * de..][..de];
            for r in 0..4 * dh {
                z[r] = b[r] + dot(&w[r * de..(r + 1) * de], x) + dot(&u[r * dh..(r + 1) * dh], &h_prev);
            }
            let mut gates = vec![0.0; 4 * dh];
            for j in 0..dh {
                gates[j] = sigmoid(z[j]);
                gates[dh + j] = sigmoid(z[dh + j]);
                gates[2 * dh + j] = z[2 * dh + j].tanh();
                gates[3 * dh + j] = sigmoid(z[3 * dh + j]);
            }
            let mut c = vec![0.0; dh];
            let mut tanh_c = vec![0.0; dh];
            let mut h = vec![0.0; dh];
            for j in 0..dh {
                c[j] = gates[dh + j] * c_prev[j] + gates[j] * gates[2 * dh + j];
                tanh_c[j] = c[j].tanh();
                h[j] = gates[3 * dh + j] * tanh_c[j];
            }
            let logits: Vec<f64> = (0..v)
                .map(|k| b_out[k] + dot(&w_out[k * dh..(k + 1) * dh], &h))
                .collect();
            h_prev.clone_from(&h);
            c_prev.clone_from(&c);
            steps.push(Step {
                input,
                target,
                gates,
                c,
                tanh_c,
                h,
                logits,
            });
        }
        steps
    }

    fn check_tokens(&self, tokens: &[u32]) -> Result<()> {
        if tokens.is_empty() {
            return Err(Error::EmptySequence(None));
        }
        if let Some(&bad) = tokens.iter().find(|&&t| t as usize >= self.vocab_size) {
            return Err(Error::TokenOutOfRange {
                id: bad,
                size: self.vocab_size,
            });
        }
        Ok(())
    }

    /// Next-token distributions for every position, ending with the
    /// prediction of the end marker (`|s| + 1` distributions).
    pub fn forward(&self, tokens: &[u32]) -> Result<Vec<Vec<f64>>> {
        self.check_tokens(tokens)?;
        let (inputs, targets) = Self::io_pairs(tokens, usize::MAX);
        Ok(self
            .run(&inputs, &targets)
            .iter()
            .map(|s| log_softmax(&s.logits).into_iter().map(f64::exp).collect())
            .collect())
    }

    /// Negative log-likelihood of each target (the actual next token,
    /// finishing with the end marker).
    pub fn target_nll(&self, tokens: &[u32]) -> Result<Vec<f64>> {
        self.check_tokens(tokens)?;
        let (inputs, targets) = Self::io_pairs(tokens, usize::MAX);
        Ok(self
            .run(&inputs, &targets)
            .iter()
            .map(|s| -log_softmax(&s.logits)[s.target as usize])
            .collect())
    }

    /// `exp` of the mean negative log-probability of the actual next tokens,
    /// end marker included. Larger means less likely under the model.
    ///
    /// Saturates at `f64::MAX` when the mean negative log-probability exceeds
    /// the range of `exp`; [`Self::log_perplexity`] keeps full resolution.
    pub fn perplexity(&self, tokens: &[u32]) -> Result<f64> {
        Ok(self.log_perplexity(tokens)?.exp().min(f64::MAX))
    }

    pub fn log_perplexity(&self, tokens: &[u32]) -> Result<f64> {
        let nll = self.target_nll(tokens)?;
        Ok(nll.iter().sum::<f64>() / nll.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(d: usize) -> ModelDims {
        ModelDims {
            embed_dim: d,
            hidden_dim: d,
        }
    }

    #[test]
    fn init_is_deterministic_with_forget_bias() {
        let a = LstmLanguageModel::init(10, dims(4), 3).unwrap();
        let b = LstmLanguageModel::init(10, dims(4), 3).unwrap();
        assert_eq!(a, b);
        let bias = a.block("b").unwrap();
        assert!(bias[4..8].iter().all(|&x| x == 1.0));
        assert!(a.params().iter().all(|p| p.abs() <= 1.0));
        assert_ne!(a, LstmLanguageModel::init(10, dims(4), 4).unwrap());
    }

    #[test]
    fn parameter_count_formula() {
        let (v, de, dh) = (11, 5, 7);
        let d = ModelDims {
            embed_dim: de,
            hidden_dim: dh,
        };
        let m = LstmLanguageModel::init(v, d, 0).unwrap();
        assert_eq!(m.params().len(), v * de + 4 * dh * (de + dh + 1) + v * (dh + 1));
        assert!(LstmLanguageModel::init(0, d, 0).is_err());
    }

    #[test]
    fn outputs_are_distributions() {
        let m = LstmLanguageModel::init(9, dims(6), 1).unwrap();
        let q = m.forward(&[3, 4, 5, 8]).unwrap();
        assert_eq!(q.len(), 5);
        for row in q {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!(row.iter().all(|&p| p >= 0.0));
        }
        assert!(m.forward(&[]).is_err());
        assert!(m.forward(&[9]).is_err());
    }

    #[test]
    fn constant_logits_give_uniform_and_pp_equal_to_vocab() {
        let mut m = LstmLanguageModel::init(7, dims(3), 1).unwrap();
        m.params_mut().fill(0.0);
        m.block_mut("b_out").unwrap().fill(0.37);
        for row in m.forward(&[3, 4, 5]).unwrap() {
            for p in row {
                assert!((p - 1.0 / 7.0).abs() < 1e-12);
            }
        }
        let pp = m.perplexity(&[3, 4, 5, 6]).unwrap();
        assert!((pp.ln() - 7f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn causality() {
        let m = LstmLanguageModel::init(8, dims(4), 2).unwrap();
        let a = m.forward(&[3, 4, 5, 6]).unwrap();
        let b = m.forward(&[3, 6, 4, 5]).unwrap();
        assert_eq!(a[0], b[0]);
        assert_eq!(a[1], b[1]);
        assert_ne!(a[2], b[2]);
    }

    #[test]
    fn eq1_arithmetic() {
        assert!((perplexity_from_probs(&[0.5; 6]) - 2.0).abs() < 1e-12);
        assert!((perplexity_from_probs(&[0.5, 0.125]) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn logit_shift_invariance() {
        let mut m = LstmLanguageModel::init(6, dims(3), 9).unwrap();
        let before = m.perplexity(&[3, 5, 4]).unwrap();
        for b in m.block_mut("b_out").unwrap() {
            *b += 3.0;
        }
        let after = m.perplexity(&[3, 5, 4]).unwrap();
        assert!((before - after).abs() < 1e-12 * before);
    }

    #[test]
    fn extreme_logits_stay_finite() {
        let mut m = LstmLanguageModel::init(5, dims(2), 0).unwrap();
        m.block_mut("b_out").unwrap().copy_from_slice(&[800.0, -800.0, -800.0, -800.0, -800.0]);
        let pp = m.perplexity(&[3, 4]).unwrap();
        assert!(pp.is_finite());
        assert!((m.log_perplexity(&[3, 4]).unwrap() - 1600.0).abs() < 1.0);
        let nll = m.target_nll(&[3, 4]).unwrap();
        assert!(nll.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn io_pairs_truncate() {
        let (i, t) = LstmLanguageModel::io_pairs(&[5, 6, 7], 10);
        assert_eq!(i, vec![1, 5, 6, 7]);
        assert_eq!(t, vec![5, 6, 7, 2]);
        let (i, t) = LstmLanguageModel::io_pairs(&[5, 6, 7], 2);
        assert_eq!(i, vec![1, 5]);
        assert_eq!(t, vec![5, 6]);
    }
}
