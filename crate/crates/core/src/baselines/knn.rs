use crate::{par, Error, Result};

/// Minkowski-`p` distance between two equal-length vectors.
pub fn minkowski(a: &[f64], b: &[f64], p: f64) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
    if p == 1.0 {
        diffs.sum()
    } else if p == 2.0 {
        diffs.map(|d| d * d).sum::<f64>().sqrt()
    } else {
        diffs.map(|d| d.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Length of the longest common subsequence.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - lcs / max(|a|, |b|)`; zero for two empty sequences.
pub fn lcs_distance(a: &[u32], b: &[u32]) -> f64 {
    let m = a.len().max(b.len());
    if m == 0 {
        return 0.0;
    }
    1.0 - lcs_length(a, b) as f64 / m as f64
}

/// Mean of the `k` smallest distances, summed in ascending order.
fn mean_of_smallest(mut d: Vec<f64>, k: usize) -> Result<f64> {
    if k == 0 || k > d.len() {
        return Err(Error::invalid(format!(
            "k = {k} must lie in 1..={}",
            d.len()
        )));
    }
    if k < d.len() {
        d.select_nth_unstable_by(k - 1, f64::total_cmp);
        d.truncate(k);
    }
    d.sort_unstable_by(f64::total_cmp);
    Ok(d.iter().sum::<f64>() / k as f64)
}

/// kNN over token ids, zero-padded to the longest training sequence.
#[derive(Debug, Clone)]
pub struct KnnMinkowski {
    train: Vec<Vec<f64>>,
    pad_len: usize,
    p: f64,
}

impl KnnMinkowski {
    pub fn fit(train: &[&[u32]], p: f64) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::invalid(format!("Minkowski p must be >= 1, got {p}")));
        }
        let pad_len = train.iter().map(|s| s.len()).max().unwrap_or(0);
        let train = train.iter().map(|s| pad(s, pad_len)).collect();
        Ok(KnnMinkowski { train, pad_len, p })
    }

    pub fn pad_len(&self) -> usize {
        self.pad_len
    }

    /// Distances from `query` to every training sequence, in training order.
    pub fn distances(&self, query: &[u32]) -> Vec<f64> {
        if query.len() > self.pad_len {
            log::warn!(
                "query of length {} truncated to {}",
                query.len(),
                self.pad_len
            );
        }
        let q = pad(query, self.pad_len);
        par::map(&self.train, |t| minkowski(&q, t, self.p))
    }

    /// Mean distance to the `k` nearest training sequences.
    pub fn score(&self, query: &[u32], k: usize) -> Result<f64> {
        mean_of_smallest(self.distances(query), k)
    }
}

fn pad(s: &[u32], len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = s.iter().take(len).map(|&t| t as f64).collect();
    v.resize(len, 0.0);
    v
}

/// kNN with the LCS distance.
#[derive(Debug, Clone)]
pub struct KnnLcs {
    train: Vec<Vec<u32>>,
}

impl KnnLcs {
    pub fn fit(train: &[&[u32]]) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(KnnLcs {
            train: train.iter().map(|s| s.to_vec()).collect(),
        })
    }

    pub fn score(&self, query: &[u32], k: usize) -> Result<f64> {
        mean_of_smallest(par::map(&self.train, |t| lcs_distance(query, t)), k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minkowski_examples() {
        assert_eq!(minkowski(&[1.0, 2.0, 3.0], &[1.0, 2.0, 0.0], 1.0), 3.0);
        assert_eq!(minkowski(&[0.0, 0.0], &[3.0, 4.0], 2.0), 5.0);
        assert!((minkowski(&[0.0, 0.0], &[1.0, 1.0], 3.0) - 2f64.powf(1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn knn_on_training_point_is_zero() {
        let a: &[u32] = &[3, 4, 5];
        let b: &[u32] = &[3, 4];
        let knn = KnnMinkowski::fit(&[a, b], 2.0).unwrap();
        assert_eq!(knn.score(a, 1).unwrap(), 0.0);
        assert_eq!(knn.score(&[3, 4, 5], 2).unwrap(), 2.5);
        assert_eq!(knn.score(&[3, 4, 5, 9, 9], 1).unwrap(), 0.0);
        assert!(knn.score(a, 3).is_err());
        assert!(KnnMinkowski::fit(&[a], 0.5).is_err());
    }

    #[test]
    fn lcs_examples() {
        assert_eq!(lcs_length(&['A', 'B', 'C', 'D'], &['A', 'C', 'E', 'D']), 3);
        assert_eq!(lcs_length(&[1, 2, 3], &[1, 2, 3]), 3);
        assert_eq!(lcs_length::<u32>(&[], &[1]), 0);
        assert_eq!(lcs_distance(&[1, 2], &[1, 2]), 0.0);
        assert_eq!(lcs_distance(&[1, 2, 3, 4], &[5, 6]), 1.0);
        let knn = KnnLcs::fit(&[&[1, 2, 3], &[4, 5, 6]]).unwrap();
        assert_eq!(knn.score(&[1, 2, 3], 1).unwrap(), 0.0);
    }
}
