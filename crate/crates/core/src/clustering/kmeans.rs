//! Lloyd's algorithm with k-means++ seeding.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::silhouette::silhouette_score;
use crate::{par, rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after every assignment step.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the closest centroid (squared Euclidean); lowest index on ties.
pub fn nearest_centroid(x: &[f64], centroids: &[Vec<f64>]) -> usize {
    nearest(x, centroids).0
}

fn nearest(x: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(x, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(vectors: &[Vec<f64>], k: usize, r: &mut rng::Rng) -> Vec<Vec<f64>> {
    let n = vectors.len();
    let mut chosen = vec![false; n];
    let first = r.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![vectors[first].clone()];
    let mut d2: Vec<f64> = vectors.iter().map(|v| sq_dist(v, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let u = r.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if u < acc && d > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            (0..n).find(|&i| !chosen[i]).unwrap_or(0)
        };
        chosen[pick] = true;
        let c = vectors[pick].clone();
        for (d, v) in d2.iter_mut().zip(vectors) {
            *d = d.min(sq_dist(v, &c));
        }
        centroids.push(c);
    }
    centroids
}

pub fn kmeans(vectors: &[Vec<f64>], k: usize, seed: u64, max_iters: usize) -> Result<KMeansResult> {
    let n = vectors.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k-means needs 1 <= k <= n (k = {k}, n = {n})")));
    }
    let dim = vectors[0].len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::invalid("k-means input rows differ in length"));
    }
    let mut r = rng::seeded(seed);
    let mut centroids = plus_plus_init(vectors, k, &mut r);
    let mut labels: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    loop {
        let assigned = par::map(vectors, |v| nearest(v, &centroids));
        let new_labels: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        let inertia: f64 = assigned.iter().map(|a| a.1).sum();
        history.push(inertia);
        if new_labels == labels {
            converged = true;
        }
        labels = new_labels;
        if converged || iterations >= max_iters {
            break;
        }
        iterations += 1;

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (v, &l) in vectors.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(v) {
                *s += x;
            }
        }
        let mut reseeded = vec![false; n];
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // empty cluster: move it onto the point farthest from its centroid
                let far = (0..n)
                    .filter(|&i| !reseeded[i])
                    .max_by(|&i, &j| assigned[i].1.total_cmp(&assigned[j].1).then(j.cmp(&i)))
                    .unwrap_or(0);
                reseeded[far] = true;
                centroids[c] = vectors[far].clone();
            }
        }
    }
    Ok(KMeansResult {
        labels,
        centroids,
        inertia: *history.last().expect("at least one assignment"),
        inertia_history: history,
        iterations,
        converged,
    })
}

/// Runs k-means for every k in `ks` and returns the k with the highest
/// silhouette score (lowest k on ties) with all scores.
pub fn select_k_by_silhouette(
    vectors: &[Vec<f64>],
    ks: impl IntoIterator<Item = usize>,
    seed: u64,
    max_iters: usize,
) -> Result<(usize, Vec<(usize, f64)>)> {
    let mut scores = Vec::new();
    for k in ks {
        if k < 2 || k > vectors.len() {
            continue;
        }
        let fit = kmeans(vectors, k, seed, max_iters)?;
        match silhouette_score(vectors, &fit.labels) {
            Ok(s) => scores.push((k, s)),
            Err(Error::TooFewClusters(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    let best = scores
        .iter()
        .fold(None::<(usize, f64)>, |best, &(k, s)| match best {
            Some((_, bs)) if bs >= s => best,
            _ => Some((k, s)),
        })
        .ok_or_else(|| Error::invalid("no candidate k produced two or more clusters"))?;
    Ok((best.0, scores))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_groups_split_perfectly() {
        let mut v = Vec::new();
        for i in 0..10 {
            v.push(vec![i as f64 * 0.01, 0.0]);
            v.push(vec![100.0 + i as f64 * 0.01, 50.0]);
        }
        let fit = kmeans(&v, 2, 3, 100).unwrap();
        assert!(fit.converged);
        for i in (0..20).step_by(2) {
            assert_eq!(fit.labels[i], fit.labels[0]);
            assert_eq!(fit.labels[i + 1], fit.labels[1]);
        }
        assert_ne!(fit.labels[0], fit.labels[1]);
    }

    #[test]
    fn k_equals_n() {
        let v: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let fit = kmeans(&v, 7, 0, 50).unwrap();
        assert_eq!(fit.inertia, 0.0);
        let mut l = fit.labels.clone();
        l.sort();
        l.dedup();
        assert_eq!(l.len(), 7);
    }

    #[test]
    fn bad_k() {
        let v = vec![vec![0.0]];
        assert!(kmeans(&v, 2, 0, 10).is_err());
        assert!(kmeans(&v, 0, 0, 10).is_err());
    }

    #[test]
    fn duplicates_do_not_break_seeding() {
        let v = vec![vec![1.0, 1.0]; 5];
        let fit = kmeans(&v, 3, 1, 10).unwrap();
        assert_eq!(fit.inertia, 0.0);
    }

    #[test]
    fn silhouette_picks_three_blobs() {
        let mut v = Vec::new();
        for (cx, cy) in [(0.0, 0.0), (20.0, 0.0), (0.0, 20.0)] {
            for i in 0..8 {
                v.push(vec![cx + (i % 3) as f64 * 0.3, cy + (i / 3) as f64 * 0.3]);
            }
        }
        let (k, scores) = select_k_by_silhouette(&v, 2..=6, 4, 100).unwrap();
        assert_eq!(k, 3);
        assert_eq!(scores.len(), 5);
    }
}
