use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Corpus, Label, LabeledSequence, Vocabulary};
use crate::{rng, Error, Result};

/// First-order Markov chain over a vocabulary of raw tokens `w0..w{n-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovChain {
    pub initial: Vec<f64>,
    pub transitions: Vec<Vec<f64>>,
}

impl MarkovChain {
    fn validate(&self, vocab_size: usize) -> Result<()> {
        let check = |row: &[f64], what: &str| -> Result<()> {
            if row.len() != vocab_size {
                return Err(Error::invalid(format!("{what} has wrong length")));
            }
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("{what} is not a distribution (sum {sum})")));
            }
            Ok(())
        };
        check(&self.initial, "initial distribution")?;
        if self.transitions.len() != vocab_size {
            return Err(Error::invalid("transition matrix has wrong row count"));
        }
        for (i, row) in self.transitions.iter().enumerate() {
            check(row, &format!("transition row {i}"))?;
        }
        Ok(())
    }

    /// Tokens reachable from the initial distribution.
    pub fn support(&self) -> Vec<usize> {
        let n = self.initial.len();
        let mut seen = vec![false; n];
        let mut stack: Vec<usize> = (0..n).filter(|&j| self.initial[j] > 0.0).collect();
        for &j in &stack {
            seen[j] = true;
        }
        while let Some(i) = stack.pop() {
            for (j, &p) in self.transitions[i].iter().enumerate() {
                if p > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        (0..n).filter(|&j| seen[j]).collect()
    }

    /// Mixes every distribution of the chain with the uniform distribution
    /// over the chain's support at `rate`.
    pub fn perturbed(&self, rate: f64) -> MarkovChain {
        let support = self.support();
        let u = 1.0 / support.len() as f64;
        let mix = |row: &[f64]| -> Vec<f64> {
            let mut out: Vec<f64> = row.iter().map(|p| (1.0 - rate) * p).collect();
            for &j in &support {
                out[j] += rate * u;
            }
            out
        };
        MarkovChain {
            initial: mix(&self.initial),
            transitions: self.transitions.iter().map(|r| mix(r)).collect(),
        }
    }

    fn sample(&self, len: usize, samplers: &ChainSamplers, rng: &mut rng::Rng) -> Vec<usize> {
        let mut out = Vec::with_capacity(len);
        let mut cur = samplers.initial.sample(rng);
        out.push(cur);
        while out.len() < len {
            cur = samplers.rows[cur].sample(rng);
            out.push(cur);
        }
        out
    }
}

struct ChainSamplers {
    initial: WeightedIndex<f64>,
    rows: Vec<WeightedIndex<f64>>,
}

impl ChainSamplers {
    fn new(chain: &MarkovChain) -> Self {
        let w = |r: &[f64]| WeightedIndex::new(r).expect("validated distribution");
        ChainSamplers {
            initial: w(&chain.initial),
            rows: chain.transitions.iter().map(|r| w(r)).collect(),
        }
    }
}

/// Mixture of Markov chains used to produce labelled test corpora. Novel
/// sequences come from perturbed copies of the components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureGenerator {
    pub vocab_size: usize,
    pub components: Vec<MarkovChain>,
    pub mixture_weights: Vec<f64>,
    pub perturbation_rate: f64,
}

impl MixtureGenerator {
    pub fn new(
        vocab_size: usize,
        components: Vec<MarkovChain>,
        mixture_weights: Vec<f64>,
        perturbation_rate: f64,
    ) -> Result<Self> {
        let g = MixtureGenerator {
            vocab_size,
            components,
            mixture_weights,
            perturbation_rate,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() || self.components.len() != self.mixture_weights.len() {
            return Err(Error::invalid("need one mixture weight per component"));
        }
        let sum: f64 = self.mixture_weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.mixture_weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("mixture weights must form a distribution"));
        }
        if !(0.0..=1.0).contains(&self.perturbation_rate) {
            return Err(Error::invalid("perturbation rate must lie in [0, 1]"));
        }
        for c in &self.components {
            c.validate(self.vocab_size)?;
        }
        Ok(())
    }

    /// `m` components, each owning `private` tokens and sharing `shared`
    /// tokens with every other component. Every token in a component's
    /// support gets `branching` random successors within that support; the
    /// chain starts uniformly on its support. Mixture weights are equal.
    pub fn partially_disjoint(
        m: usize,
        private: usize,
        shared: usize,
        branching: usize,
        perturbation_rate: f64,
        seed: u64,
    ) -> Result<Self> {
        let support_size = private + shared;
        if m == 0 || support_size == 0 || branching == 0 || branching > support_size {
            return Err(Error::invalid("invalid mixture layout"));
        }
        let vocab_size = m * private + shared;
        let mut rng = rng::seeded(seed);
        let components = (0..m)
            .map(|c| {
                let support: Vec<usize> = (c * private..(c + 1) * private)
                    .chain(m * private..vocab_size)
                    .collect();
                let uniform = {
                    let mut r = vec![0.0; vocab_size];
                    for &j in &support {
                        r[j] = 1.0 / support_size as f64;
                    }
                    r
                };
                let mut transitions = vec![uniform.clone(); vocab_size];
                for &i in &support {
                    let succ = sample(&mut rng, support_size, branching);
                    let weights: Vec<f64> =
                        (0..branching).map(|_| rng.random_range(0.2..1.0)).collect();
                    let total: f64 = weights.iter().sum();
                    let mut row = vec![0.0; vocab_size];
                    for (k, s) in succ.iter().enumerate() {
                        row[support[s]] = weights[k] / total;
                    }
                    transitions[i] = row;
                }
                MarkovChain {
                    initial: uniform,
                    transitions,
                }
            })
            .collect();
        Self::new(
            vocab_size,
            components,
            vec![1.0 / m as f64; m],
            perturbation_rate,
        )
    }

    pub fn token(j: usize) -> String {
        format!("w{j}")
    }

    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary::from_tokens((0..self.vocab_size).map(Self::token), 1)
    }

    /// Samples `n_normal` sequences from the mixture followed by `n_novel`
    /// sequences from perturbed components. Lengths are uniform over
    /// `len_range` (inclusive). Each sequence records its component.
    pub fn generate(
        &self,
        n_normal: usize,
        n_novel: usize,
        len_range: (usize, usize),
        seed: u64,
    ) -> Result<Corpus> {
        self.validate()?;
        let (lo, hi) = len_range;
        if lo < 1 || lo > hi {
            return Err(Error::invalid("sequence length range must satisfy 1 <= min <= max"));
        }
        let vocab = self.vocabulary();
        let normal: Vec<ChainSamplers> = self.components.iter().map(ChainSamplers::new).collect();
        let novel: Vec<ChainSamplers> = self
            .components
            .iter()
            .map(|c| ChainSamplers::new(&c.perturbed(self.perturbation_rate)))
            .collect();
        let pick = WeightedIndex::new(&self.mixture_weights).expect("validated weights");
        let mut rng = rng::seeded(seed);
        let offset = Vocabulary::RESERVED as u32;
        let mut sequences = Vec::with_capacity(n_normal + n_novel);
        for i in 0..n_normal + n_novel {
            let is_novel = i >= n_normal;
            let c = pick.sample(&mut rng);
            let len = rng.random_range(lo..=hi);
            let samplers = if is_novel { &novel[c] } else { &normal[c] };
            let raw = self.components[c].sample(len, samplers, &mut rng);
            let mut s = LabeledSequence::new(
                i.to_string(),
                raw.into_iter().map(|j| j as u32 + offset).collect(),
                if is_novel { Label::Novel } else { Label::Normal },
            );
            s.component = Some(c);
            sequences.push(s);
        }
        Corpus::new(vocab, sequences)
    }
}
