use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng;

/// Fitted codebook with the objective recorded after every assignment pass.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<Vec<f64>>,
    pub objective_history: Vec<f64>,
}

impl KMeans {
    pub fn objective(&self) -> f64 {
        self.objective_history.last().copied().unwrap_or(0.0)
    }

    pub fn assign(&self, x: &[f64]) -> usize {
        nearest(&self.centroids, x).0
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index and squared distance of the closest centroid; ties go to the lower index.
pub(crate) fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(c, x);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Lloyd's algorithm from greedy k-means++ seeds drawn among distinct points. A
/// cluster left empty takes over the point farthest from its centroid.
pub fn kmeans_fit(points: &[Vec<f64>], k: usize, iters: usize, seed: u64) -> Result<KMeans> {
    if k == 0 {
        return Err(Error::Structural("k-means needs k ≥ 1".into()));
    }
    let dim = points.first().map_or(0, |p| p.len());
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Shape("descriptors differ in length".into()));
    }
    let mut distinct: Vec<&Vec<f64>> = points.iter().collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    distinct.dedup();
    if distinct.len() < k {
        return Err(Error::Structural(format!("{} distinct descriptors, need at least {k}", distinct.len())));
    }

    let mut rng = rng::seeded(seed);
    let mut centroids: Vec<Vec<f64>> = vec![distinct[rng.random_range(0..distinct.len())].clone()];
    let mut d2: Vec<f64> = distinct.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    // Greedy k-means++: each round samples a few D²-weighted candidates and
    // keeps the one that lowers the potential most.
    let trials = 2 + (k as f64).ln() as usize;
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let mut pick = d2.iter().rposition(|&d| d > 0.0).expect("distinct points remain");
            let mut u = rng.random::<f64>() * total;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && u < d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            let next: Vec<f64> = distinct.iter().zip(&d2).map(|(p, &d)| d.min(sq_dist(p, distinct[pick]))).collect();
            let potential: f64 = next.iter().sum();
            if best.as_ref().is_none_or(|b| potential < b.0) {
                best = Some((potential, pick, next));
            }
        }
        let (_, pick, next) = best.expect("at least one trial");
        d2 = next;
        centroids.push(distinct[pick].clone());
    }

    let mut history = Vec::with_capacity(iters + 1);
    let mut labels = vec![0usize; points.len()];
    let mut dists = vec![0.0; points.len()];
    for it in 0..=iters {
        for (i, p) in points.iter().enumerate() {
            (labels[i], dists[i]) = nearest(&centroids, p);
        }
        let mut counts = vec![0usize; k];
        for &l in &labels {
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..points.len())
                    .filter(|&i| counts[labels[i]] > 1)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .expect("k distinct points fill k clusters");
                counts[labels[far]] -= 1;
                counts[c] = 1;
                labels[far] = c;
                centroids[c] = points[far].clone();
                dists[far] = 0.0;
            }
        }
        history.push(dists.iter().sum());
        if it == iters {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &l) in points.iter().zip(&labels) {
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut moved = false;
        for (c, s) in sums.into_iter().enumerate() {
            let mean: Vec<f64> = s.into_iter().map(|v| v / counts[c] as f64).collect();
            moved |= mean != centroids[c];
            centroids[c] = mean;
        }
        if !moved {
            break;
        }
    }
    Ok(KMeans {
        centroids,
        objective_history: history,
    })
}
