use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Clone, Debug)]
pub struct KMeans {
    pub centroids: Vec<[f64; 2]>,
    pub labels: Vec<usize>,
    /// Weighted within-cluster sum of squares after each Lloyd iteration.
    pub history: Vec<f64>,
}

fn sq(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn nearest(p: [f64; 2], centroids: &[[f64; 2]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.iter().enumerate() {
        let d = sq(p, *c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn pick(weights: &[f64], rng: &mut Rng, taken: &[bool]) -> usize {
    let total: f64 = weights.iter().sum();
    if total > 0.0 && total.is_finite() {
        let mut u = rng.random::<f64>() * total;
        for (i, w) in weights.iter().enumerate() {
            if *w > 0.0 {
                if u < *w {
                    return i;
                }
                u -= w;
            }
        }
        if let Some(i) = weights.iter().rposition(|w| *w > 0.0) {
            return i;
        }
    }
    taken.iter().position(|t| !t).unwrap_or(0)
}

pub fn objective(points: &[[f64; 2]], weights: &[f64], centroids: &[[f64; 2]]) -> f64 {
    points
        .iter()
        .zip(weights)
        .map(|(p, w)| w * nearest(*p, centroids).1)
        .sum()
}

/// Population-weighted Lloyd iterations with k-means++ seeding.
pub fn weighted_kmeans(
    points: &[[f64; 2]],
    weights: &[f64],
    k: usize,
    rng: &mut Rng,
    max_iter: usize,
    rel_tol: f64,
) -> Result<KMeans> {
    if k == 0 {
        return Err(Error::Config("cluster count must be at least 1".into()));
    }
    if k > points.len() {
        return Err(Error::Config(format!(
            "{k} clusters requested for {} points",
            points.len()
        )));
    }
    let n = points.len();
    let mut taken = vec![false; n];
    let first = pick(weights, rng, &taken);
    taken[first] = true;
    let mut centroids = vec![points[first]];
    while centroids.len() < k {
        let scores: Vec<f64> = (0..n)
            .map(|i| {
                if taken[i] {
                    0.0
                } else {
                    weights[i] * nearest(points[i], &centroids).1
                }
            })
            .collect();
        let i = pick(&scores, rng, &taken);
        taken[i] = true;
        centroids.push(points[i]);
    }

    let mut labels = vec![0; n];
    let mut history = Vec::new();
    let mut prev = f64::INFINITY;
    for _ in 0..max_iter {
        for (i, p) in points.iter().enumerate() {
            labels[i] = nearest(*p, &centroids).0;
        }
        let mut acc = vec![[0.0f64; 3]; k];
        for (i, p) in points.iter().enumerate() {
            let a = &mut acc[labels[i]];
            a[0] += weights[i] * p[0];
            a[1] += weights[i] * p[1];
            a[2] += weights[i];
        }
        for (c, a) in centroids.iter_mut().zip(&acc) {
            if a[2] > 0.0 {
                *c = [a[0] / a[2], a[1] / a[2]];
            }
        }
        let obj = objective(points, weights, &centroids);
        history.push(obj);
        if prev.is_finite() && (prev - obj) <= rel_tol * prev.abs() {
            break;
        }
        prev = obj;
    }
    for (i, p) in points.iter().enumerate() {
        labels[i] = nearest(*p, &centroids).0;
    }
    Ok(KMeans {
        centroids,
        labels,
        history,
    })
}
