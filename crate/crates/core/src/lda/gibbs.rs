use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub topics: usize,
    /// Symmetric document-topic prior; `None` means `50 / topics`.
    #[serde(default)]
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
}

impl LdaParams {
    pub fn new(topics: usize) -> Self {
        LdaParams {
            topics,
            alpha: None,
            beta: 0.01,
            iterations: 500,
            burn_in: 100,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.topics as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FoldInParams {
    pub iterations: usize,
    pub seed: u64,
}

impl Default for FoldInParams {
    fn default() -> Self {
        FoldInParams {
            iterations: 100,
            seed: 0,
        }
    }
}

/// A fitted LDA model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaRun {
    pub run_id: usize,
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    /// `topics x vocab` topic-word probabilities.
    pub phi: Vec<Vec<f64>>,
    /// `documents x topics` document-topic probabilities.
    pub theta: Vec<Vec<f64>>,
    /// Final topic assignment of every token.
    pub assignments: Vec<Vec<u32>>,
}

impl LdaRun {
    /// A run with a given topic-word matrix and no training documents.
    pub fn from_topic_word(run_id: usize, phi: Vec<Vec<f64>>, alpha: f64, beta: f64) -> Self {
        LdaRun {
            run_id,
            topics: phi.len(),
            alpha,
            beta,
            seed: 0,
            iterations: 0,
            burn_in: 0,
            phi,
            theta: Vec::new(),
            assignments: Vec::new(),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.phi.first().map_or(0, Vec::len)
    }
}

/// Collapsed Gibbs sampler state. Exposed so callers can observe the chain
/// sweep by sweep; [`fit_lda`] is the usual entry point.
pub struct GibbsSampler<'a> {
    docs: Vec<&'a [u32]>,
    topics: usize,
    vocab_size: usize,
    alpha: f64,
    beta: f64,
    z: Vec<Vec<u32>>,
    doc_topic: Vec<u32>,
    topic_word: Vec<u32>,
    topic_total: Vec<u32>,
    word_total: Vec<u32>,
    tokens: usize,
    probs: Vec<f64>,
    rng: rng::Rng,
    sweeps: usize,
}

impl<'a> GibbsSampler<'a> {
    pub fn new(
        docs: Vec<&'a [u32]>,
        vocab_size: usize,
        topics: usize,
        alpha: f64,
        beta: f64,
        seed: u64,
    ) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if topics < 1 {
            return Err(Error::invalid("topic count must be at least 1"));
        }
        if !(alpha > 0.0) || !(beta > 0.0) {
            return Err(Error::invalid("LDA priors must be positive"));
        }
        let tokens: usize = docs.iter().map(|d| d.len()).sum();
        if topics > tokens {
            return Err(Error::TooManyTopics { topics, tokens });
        }
        let mut rng = rng::seeded(seed);
        let mut doc_topic = vec![0u32; docs.len() * topics];
        let mut topic_word = vec![0u32; topics * vocab_size];
        let mut topic_total = vec![0u32; topics];
        let mut word_total = vec![0u32; vocab_size];
        let mut z = Vec::with_capacity(docs.len());
        for (d, doc) in docs.iter().enumerate() {
            let mut zd = Vec::with_capacity(doc.len());
            for &w in doc.iter() {
                let w = w as usize;
                if w >= vocab_size {
                    return Err(Error::TokenOutOfRange {
                        id: w as u32,
                        size: vocab_size,
                    });
                }
                let k = rng.random_range(0..topics);
                doc_topic[d * topics + k] += 1;
                topic_word[k * vocab_size + w] += 1;
                topic_total[k] += 1;
                word_total[w] += 1;
                zd.push(k as u32);
            }
            z.push(zd);
        }
        Ok(GibbsSampler {
            docs,
            topics,
            vocab_size,
            alpha,
            beta,
            z,
            doc_topic,
            topic_word,
            topic_total,
            word_total,
            tokens,
            probs: vec![0.0; topics],
            rng,
            sweeps: 0,
        })
    }

    /// Resamples every token assignment once.
    pub fn sweep(&mut self) {
        let k_n = self.topics;
        let v_n = self.vocab_size;
        let v_beta = v_n as f64 * self.beta;
        for d in 0..self.docs.len() {
            let doc = self.docs[d];
            for (i, &w) in doc.iter().enumerate() {
                let w = w as usize;
                let old = self.z[d][i] as usize;
                self.doc_topic[d * k_n + old] -= 1;
                self.topic_word[old * v_n + w] -= 1;
                self.topic_total[old] -= 1;

                let mut total = 0.0;
                for k in 0..k_n {
                    let p = (self.doc_topic[d * k_n + k] as f64 + self.alpha)
                        * (self.topic_word[k * v_n + w] as f64 + self.beta)
                        / (self.topic_total[k] as f64 + v_beta);
                    total += p;
                    self.probs[k] = total;
                }
                let u = self.rng.random::<f64>() * total;
                let new = self.probs.iter().position(|&c| u < c).unwrap_or(k_n - 1);

                self.doc_topic[d * k_n + new] += 1;
                self.topic_word[new * v_n + w] += 1;
                self.topic_total[new] += 1;
                self.z[d][i] = new as u32;
            }
        }
        self.sweeps += 1;
        debug_assert_eq!(self.check_counts(), Ok(()));
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Verifies that the count tables agree with the assignments: topic-word
    /// counts sum to the corpus token count and to each word's frequency,
    /// topic totals match their rows, document-topic rows match lengths.
    pub fn check_counts(&self) -> std::result::Result<(), String> {
        let (k_n, v_n) = (self.topics, self.vocab_size);
        let grand: u64 = self.topic_word.iter().map(|&c| c as u64).sum();
        if grand != self.tokens as u64 {
            return Err(format!("topic-word total {grand} != token count {}", self.tokens));
        }
        for k in 0..k_n {
            let row: u32 = self.topic_word[k * v_n..(k + 1) * v_n].iter().sum();
            if row != self.topic_total[k] {
                return Err(format!("topic {k}: row sum {row} != total {}", self.topic_total[k]));
            }
        }
        for w in 0..v_n {
            let col: u32 = (0..k_n).map(|k| self.topic_word[k * v_n + w]).sum();
            if col != self.word_total[w] {
                return Err(format!("word {w}: {col} != frequency {}", self.word_total[w]));
            }
        }
        for (d, doc) in self.docs.iter().enumerate() {
            let row: u32 = self.doc_topic[d * k_n..(d + 1) * k_n].iter().sum();
            if row as usize != doc.len() {
                return Err(format!("document {d}: {row} != length {}", doc.len()));
            }
        }
        Ok(())
    }

    pub fn token_count(&self) -> usize {
        self.tokens
    }

    pub fn topic_word_total(&self) -> u64 {
        self.topic_word.iter().map(|&c| c as u64).sum()
    }

    pub fn phi(&self) -> Vec<Vec<f64>> {
        let v_n = self.vocab_size;
        let denom_extra = v_n as f64 * self.beta;
        (0..self.topics)
            .map(|k| {
                let denom = self.topic_total[k] as f64 + denom_extra;
                self.topic_word[k * v_n..(k + 1) * v_n]
                    .iter()
                    .map(|&c| (c as f64 + self.beta) / denom)
                    .collect()
            })
            .collect()
    }

    pub fn theta(&self) -> Vec<Vec<f64>> {
        let k_n = self.topics;
        self.docs
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                let denom = doc.len() as f64 + k_n as f64 * self.alpha;
                self.doc_topic[d * k_n..(d + 1) * k_n]
                    .iter()
                    .map(|&c| (c as f64 + self.alpha) / denom)
                    .collect()
            })
            .collect()
    }

    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.z
    }
}

/// Fits LDA on `docs` and returns the point estimate from the final state.
pub fn fit_lda(
    docs: &[&[u32]],
    vocab_size: usize,
    params: &LdaParams,
    run_id: usize,
    seed: u64,
) -> Result<LdaRun> {
    if params.burn_in > params.iterations {
        return Err(Error::invalid("burn-in exceeds iteration count"));
    }
    let alpha = params.alpha();
    let mut sampler = GibbsSampler::new(
        docs.to_vec(),
        vocab_size,
        params.topics,
        alpha,
        params.beta,
        seed,
    )?;
    for _ in 0..params.iterations {
        sampler.sweep();
    }
    Ok(LdaRun {
        run_id,
        topics: params.topics,
        alpha,
        beta: params.beta,
        seed,
        iterations: params.iterations,
        burn_in: params.burn_in,
        phi: sampler.phi(),
        theta: sampler.theta(),
        assignments: sampler.z,
    })
}

/// Topic proportions of an unseen sequence, sampled with the run's
/// topic-word distribution held fixed.
pub fn fold_in(tokens: &[u32], run: &LdaRun, iterations: usize, seed: u64) -> Vec<f64> {
    let k_n = run.topics;
    let v_n = run.vocab_size();
    let mut rng = rng::seeded(seed);
    let mut counts = vec![0u32; k_n];
    let words: Vec<usize> = tokens
        .iter()
        .map(|&t| t as usize)
        .filter(|&t| t < v_n)
        .collect();
    let mut z: Vec<usize> = words
        .iter()
        .map(|_| {
            let k = rng.random_range(0..k_n);
            counts[k] += 1;
            k
        })
        .collect();
    let mut cum = vec![0.0; k_n];
    for _ in 0..iterations {
        for (i, &w) in words.iter().enumerate() {
            counts[z[i]] -= 1;
            let mut total = 0.0;
            for k in 0..k_n {
                total += (counts[k] as f64 + run.alpha) * run.phi[k][w];
                cum[k] = total;
            }
            let u = rng.random::<f64>() * total;
            let new = cum.iter().position(|&c| u < c).unwrap_or(k_n - 1);
            counts[new] += 1;
            z[i] = new;
        }
    }
    let denom = words.len() as f64 + k_n as f64 * run.alpha;
    counts
        .iter()
        .map(|&c| (c as f64 + run.alpha) / denom)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_docs() -> Vec<Vec<u32>> {
        vec![vec![3, 4, 3, 5], vec![5, 5, 6], vec![3, 6, 7, 7, 4]]
    }

    #[test]
    fn single_topic_closed_form() {
        let docs = small_docs();
        let refs: Vec<&[u32]> = docs.iter().map(Vec::as_slice).collect();
        let v = 8;
        let p = LdaParams {
            topics: 1,
            alpha: None,
            beta: 0.01,
            iterations: 10,
            burn_in: 2,
        };
        let run = fit_lda(&refs, v, &p, 0, 7).unwrap();
        let n = 12.0;
        for w in 0..v {
            let count = docs.iter().flatten().filter(|&&t| t as usize == w).count() as f64;
            assert_eq!(run.phi[0][w], (count + 0.01) / (n + v as f64 * 0.01));
        }
        assert!(run.theta.iter().all(|t| t == &vec![1.0]));
    }

    #[test]
    fn rows_are_distributions() {
        let docs = small_docs();
        let refs: Vec<&[u32]> = docs.iter().map(Vec::as_slice).collect();
        let run = fit_lda(&refs, 8, &LdaParams::new(3), 0, 1).unwrap();
        for row in run.phi.iter().chain(&run.theta) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic() {
        let docs = small_docs();
        let refs: Vec<&[u32]> = docs.iter().map(Vec::as_slice).collect();
        let a = fit_lda(&refs, 8, &LdaParams::new(2), 0, 5).unwrap();
        let b = fit_lda(&refs, 8, &LdaParams::new(2), 0, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_many_topics() {
        let docs = [vec![3u32, 4]];
        let refs: Vec<&[u32]> = docs.iter().map(Vec::as_slice).collect();
        assert!(matches!(
            fit_lda(&refs, 5, &LdaParams::new(3), 0, 0),
            Err(Error::TooManyTopics { topics: 3, tokens: 2 })
        ));
    }

    #[test]
    fn disjoint_halves_separate() {
        // two documents over disjoint halves of a 10-word vocabulary
        let a: Vec<u32> = (0..60).map(|i| i % 5).collect();
        let b: Vec<u32> = (0..60).map(|i| 5 + i % 5).collect();
        let refs: Vec<&[u32]> = vec![&a, &b];
        let p = LdaParams {
            topics: 2,
            alpha: Some(0.1),
            beta: 0.01,
            iterations: 500,
            burn_in: 100,
        };
        let run = fit_lda(&refs, 10, &p, 0, 11).unwrap();
        for k in 0..2 {
            let low: f64 = run.phi[k][..5].iter().sum();
            assert!(low > 0.9 || low < 0.1, "topic {k} mixes halves: {low}");
        }
    }

    #[test]
    fn fold_in_basics() {
        let phi = vec![
            vec![0.9, 0.05, 0.05],
            vec![0.05, 0.9, 0.05],
            vec![0.05, 0.05, 0.9],
        ];
        let run = LdaRun::from_topic_word(0, phi, 0.5, 0.01);
        let theta = fold_in(&[1; 20], &run, 100, 3);
        assert!((theta.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(theta.iter().all(|&p| p > 0.0));
        let best = (0..3).max_by(|&a, &b| theta[a].total_cmp(&theta[b])).unwrap();
        assert_eq!(best, 1);
        assert_eq!(theta, fold_in(&[1; 20], &run, 100, 3));

        let single = LdaRun::from_topic_word(0, vec![vec![0.5, 0.5]], 50.0, 0.01);
        assert_eq!(fold_in(&[0, 1, 1], &single, 10, 0), vec![1.0]);
    }

    #[test]
    fn counts_conserved_each_sweep() {
        let docs = small_docs();
        let refs: Vec<&[u32]> = docs.iter().map(Vec::as_slice).collect();
        let mut s = GibbsSampler::new(refs, 8, 3, 0.5, 0.1, 2).unwrap();
        for _ in 0..20 {
            s.sweep();
            assert_eq!(s.check_counts(), Ok(()));
            assert_eq!(s.topic_word_total(), 12);
        }
    }
}
