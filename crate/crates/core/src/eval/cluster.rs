//! k-means with k-means++ seeding, and silhouette.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::Dense;
use crate::error::{Error, Result};

use super::metrics::{ari, nmi};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: &[f64], centers: &Dense) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centers.rows() {
        let d = sq_dist(x, centers.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd iterations from a k-means++ start. Returns assignments.
pub fn kmeans(x: &Dense, k: usize, seed: u64, max_iter: usize) -> Vec<usize> {
    let n = x.rows();
    assert!(k >= 1 && k <= n, "need 1 ≤ k ≤ n");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = Dense::zeros(k, x.cols());
    centers.row_mut(0).copy_from_slice(x.row(rng.gen_range(0..n)));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), centers.row(0))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut t = rng.gen_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if t < w {
                    chosen = i;
                    break;
                }
                t -= w;
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centers.row_mut(c).copy_from_slice(x.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), centers.row(c)));
        }
    }

    let mut assign = vec![usize::MAX; n];
    for _ in 0..max_iter {
        let mut changed = false;
        for (i, a) in assign.iter_mut().enumerate() {
            let (c, _) = nearest(x.row(i), &centers);
            if *a != c {
                *a = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = Dense::zeros(k, x.cols());
        let mut counts = vec![0usize; k];
        for (i, &a) in assign.iter().enumerate() {
            counts[a] += 1;
            for (s, v) in sums.row_mut(a).iter_mut().zip(x.row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // re-seed an empty cluster at the farthest point
                let far = (0..n)
                    .max_by(|&a, &b| {
                        nearest(x.row(a), &centers)
                            .1
                            .total_cmp(&nearest(x.row(b), &centers).1)
                            .then(b.cmp(&a))
                    })
                    .expect("n ≥ 1");
                centers.row_mut(c).copy_from_slice(x.row(far));
            } else {
                let inv = 1.0 / counts[c] as f64;
                for (o, s) in centers.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *o = s * inv;
                }
            }
        }
    }
    assign
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ClusterScores {
    pub nmi: f64,
    pub ari: f64,
    pub restarts: usize,
}

/// k-means with `k` = number of classes, scores averaged over restarts.
pub fn cluster_eval(emb: &Dense, y: &[usize], restarts: usize, seed: u64) -> Result<ClusterScores> {
    if y.len() != emb.rows() {
        return Err(Error::DimensionMismatch("labels and embeddings differ in length".into()));
    }
    let mut classes = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Config("clustering needs at least two classes".into()));
    }
    let restarts = restarts.max(1);
    let (mut s_nmi, mut s_ari) = (0.0, 0.0);
    for r in 0..restarts {
        let a = kmeans(emb, classes.len(), seed.wrapping_add(r as u64), 300);
        s_nmi += nmi(y, &a);
        s_ari += ari(y, &a);
    }
    Ok(ClusterScores {
        nmi: s_nmi / restarts as f64,
        ari: s_ari / restarts as f64,
        restarts,
    })
}

/// Mean silhouette under Euclidean distance with `y` as the partition, on a
/// seeded subsample of at most `max_points` nodes.
pub fn silhouette(emb: &Dense, y: &[usize], max_points: usize, seed: u64) -> f64 {
    let n = emb.rows();
    let idx: Vec<usize> = if n > max_points {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = sample(&mut rng, n, max_points).into_vec();
        s.sort_unstable();
        s
    } else {
        (0..n).collect()
    };
    let classes = y.iter().max().map_or(0, |m| m + 1);
    let mut size = vec![0usize; classes];
    for &i in &idx {
        size[y[i]] += 1;
    }
    if size.iter().filter(|&&s| s > 0).count() < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut dist = vec![0.0; classes];
    for &i in &idx {
        dist.iter_mut().for_each(|d| *d = 0.0);
        for &j in &idx {
            if i != j {
                dist[y[j]] += sq_dist(emb.row(i), emb.row(j)).sqrt();
            }
        }
        let own = y[i];
        if size[own] <= 1 {
            continue;
        }
        let a = dist[own] / (size[own] - 1) as f64;
        let b = (0..classes)
            .filter(|&c| c != own && size[c] > 0)
            .map(|c| dist[c] / size[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    total / idx.len() as f64
}
