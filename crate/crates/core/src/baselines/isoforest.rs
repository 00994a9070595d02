use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::{par, rng, Error, Result};

/// Expected path length of an unsuccessful search in a binary search tree of
/// `m` points: `2 H(m - 1) - 2 (m - 1) / m`, zero for `m <= 1`.
pub fn average_path_length(m: usize) -> f64 {
    if m <= 1 {
        return 0.0;
    }
    let h: f64 = (1..m).map(|i| 1.0 / i as f64).sum();
    2.0 * h - 2.0 * (m - 1) as f64 / m as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum IsolationTree {
    Internal {
        feature: usize,
        split: f64,
        left: Box<IsolationTree>,
        right: Box<IsolationTree>,
    },
    External {
        size: usize,
    },
}

impl IsolationTree {
    fn build(data: &[Vec<f64>], idx: Vec<usize>, depth: usize, limit: usize, r: &mut rng::Rng) -> Self {
        if depth >= limit || idx.len() <= 1 {
            return IsolationTree::External { size: idx.len() };
        }
        // only features that vary inside the node can split it
        let dim = data[idx[0]].len();
        let ranges: Vec<(usize, f64, f64)> = (0..dim)
            .filter_map(|f| {
                let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    (lo.min(data[i][f]), hi.max(data[i][f]))
                });
                (lo < hi).then_some((f, lo, hi))
            })
            .collect();
        if ranges.is_empty() {
            return IsolationTree::External { size: idx.len() };
        }
        let (feature, lo, hi) = ranges[r.random_range(0..ranges.len())];
        let split = r.random_range(lo..hi);
        let (left, right): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| data[i][feature] < split);
        IsolationTree::Internal {
            feature,
            split,
            left: Box::new(Self::build(data, left, depth + 1, limit, r)),
            right: Box::new(Self::build(data, right, depth + 1, limit, r)),
        }
    }

    /// Path length of `x`, with external nodes extended by the average path
    /// length of their size.
    pub fn path_length(&self, x: &[f64]) -> f64 {
        let mut node = self;
        let mut depth = 0.0;
        loop {
            match node {
                IsolationTree::External { size } => return depth + average_path_length(*size),
                IsolationTree::Internal {
                    feature,
                    split,
                    left,
                    right,
                } => {
                    node = if x[*feature] < *split { left } else { right };
                    depth += 1.0;
                }
            }
        }
    }

    pub fn height(&self) -> usize {
        match self {
            IsolationTree::External { .. } => 0,
            IsolationTree::Internal { left, right, .. } => 1 + left.height().max(right.height()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationForest {
    pub trees: Vec<IsolationTree>,
    pub subsample: usize,
    pub dim: usize,
}

impl IsolationForest {
    /// Builds `tree_count` trees, tree `i` from seed `seed + i`, each on
    /// `subsample` points drawn without replacement (clamped to the data
    /// size) and grown to depth `ceil(log2 subsample)`.
    pub fn fit(vectors: &[Vec<f64>], tree_count: usize, subsample: usize, seed: u64) -> Result<Self> {
        let n = vectors.len();
        if n < 2 {
            return Err(Error::invalid("isolation forest needs at least two points"));
        }
        if tree_count == 0 {
            return Err(Error::invalid("tree_count must be positive"));
        }
        let dim = vectors[0].len();
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::invalid("isolation forest input rows differ in length"));
        }
        let psi = subsample.clamp(2, n);
        let limit = (psi as f64).log2().ceil() as usize;
        let trees = par::map_range(tree_count, |t| {
            let mut r = rng::seeded(rng::derive(seed, t as u64));
            let idx = sample(&mut r, n, psi).into_vec();
            IsolationTree::build(vectors, idx, 0, limit, &mut r)
        });
        Ok(IsolationForest {
            trees,
            subsample: psi,
            dim,
        })
    }

    pub fn mean_path_length(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.path_length(x)).sum::<f64>() / self.trees.len() as f64
    }

    /// `2^(-E[h(x)] / c(subsample))`, in (0, 1]; larger is more anomalous.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::LengthMismatch {
                what: "feature vector vs forest",
                left: x.len(),
                right: self.dim,
            });
        }
        Ok(2f64.powf(-self.mean_path_length(x) / average_path_length(self.subsample)))
    }

    pub fn score_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        par::map(xs, |x| self.score(x)).into_iter().collect()
    }
}
