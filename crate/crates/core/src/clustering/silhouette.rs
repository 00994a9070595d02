use std::collections::BTreeMap;

use crate::{par, Error, Result};

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Mean silhouette coefficient under Euclidean distance. A point alone in
/// its cluster scores 0.
pub fn silhouette_score(vectors: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if vectors.len() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "vectors vs labels",
            left: vectors.len(),
            right: labels.len(),
        });
    }
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        *sizes.entry(l).or_default() += 1;
    }
    if sizes.len() < 2 {
        return Err(Error::TooFewClusters(sizes.len()));
    }
    let slot: BTreeMap<usize, usize> = sizes.keys().enumerate().map(|(i, &l)| (l, i)).collect();
    let counts: Vec<usize> = sizes.values().copied().collect();
    let cluster: Vec<usize> = labels.iter().map(|l| slot[l]).collect();

    let per_point = par::map_range(vectors.len(), |i| {
        let own = cluster[i];
        if counts[own] == 1 {
            return 0.0;
        }
        let mut sums = vec![0.0; counts.len()];
        for (j, v) in vectors.iter().enumerate() {
            if j != i {
                sums[cluster[j]] += euclidean(&vectors[i], v);
            }
        }
        let a = sums[own] / (counts[own] - 1) as f64;
        let b = (0..counts.len())
            .filter(|&c| c != own)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m == 0.0 {
            0.0
        } else {
            (b - a) / m
        }
    });
    Ok(per_point.iter().sum::<f64>() / vectors.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_points_separated() {
        let v = vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![5.0, 5.0], vec![5.0, 5.0]];
        assert_eq!(silhouette_score(&v, &[0, 0, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn singletons_score_zero() {
        let v = vec![vec![0.0], vec![1.0], vec![10.0]];
        // point 2 is alone; points 0,1: a = 1, b = 10, 9 → s = 0.9, 0.888..
        let s = silhouette_score(&v, &[0, 0, 1]).unwrap();
        let expected = (0.9 + (9.0 - 1.0) / 9.0 + 0.0) / 3.0;
        assert!((s - expected).abs() < 1e-15);
    }

    #[test]
    fn one_cluster_is_an_error() {
        let v = vec![vec![0.0], vec![1.0]];
        assert!(matches!(silhouette_score(&v, &[3, 3]), Err(Error::TooFewClusters(1))));
    }

    #[test]
    fn non_contiguous_labels() {
        let v = vec![vec![0.0], vec![0.1], vec![4.0], vec![4.2]];
        let a = silhouette_score(&v, &[7, 7, 2, 2]).unwrap();
        let b = silhouette_score(&v, &[0, 0, 1, 1]).unwrap();
        assert_eq!(a, b);
    }
}
