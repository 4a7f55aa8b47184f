//! Linear probe: multinomial logistic regression on frozen embeddings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{dot, Dense};
use crate::error::{Error, Result};

use super::metrics::{macro_auc, macro_f1, micro_f1};
use super::Stat;

/// L2 strengths tried on the validation split.
pub const L2_GRID: [f64; 5] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0];

/// Minimizes `f` with limited-memory BFGS and a backtracking Armijo search.
pub fn lbfgs(
    mut x: Vec<f64>,
    mut f: impl FnMut(&[f64]) -> (f64, Vec<f64>),
    max_iter: usize,
    tol: f64,
) -> Vec<f64> {
    const MEMORY: usize = 10;
    let (mut fx, mut g) = f(&x);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    for _ in 0..max_iter {
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax < tol {
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alpha = Vec::with_capacity(s_hist.len());
        for (s, y) in s_hist.iter().zip(&y_hist).rev() {
            let a = dot(s, &q) / dot(y, s);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alpha.push(a);
        }
        let gamma = match (s_hist.last(), y_hist.last()) {
            (Some(s), Some(y)) => dot(s, y) / dot(y, y),
            _ => 1.0 / dot(&g, &g).sqrt().max(1.0),
        };
        for v in q.iter_mut() {
            *v *= gamma;
        }
        for ((s, y), a) in s_hist.iter().zip(&y_hist).zip(alpha.iter().rev()) {
            let b = dot(y, &q) / dot(y, s);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
            s_hist.clear();
            y_hist.clear();
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (fc, gc) = f(&cand);
            if fc <= fx + 1e-4 * step * slope {
                accepted = Some((cand, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gn)) = accepted else { break };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 {
            if s_hist.len() == MEMORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
        }
        let done = (fx - fnew).abs() <= 1e-12 * fx.abs().max(1.0);
        x = xn;
        fx = fnew;
        g = gn;
        if done {
            break;
        }
    }
    x
}

/// Trained softmax classifier.
pub struct LogReg {
    w: Dense,
    b: Vec<f64>,
}

impl LogReg {
    /// Mean cross-entropy plus `l2/2 ‖W‖²`.
    pub fn fit(x: &Dense, y: &[usize], classes: usize, l2: f64, seed: u64) -> Self {
        let (n, d) = x.shape();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init: Vec<f64> = (0..d * classes + classes)
            .map(|k| if k < d * classes { rng.gen_range(-0.01..0.01) } else { 0.0 })
            .collect();
        let objective = |theta: &[f64]| {
            let w = &theta[..d * classes];
            let b = &theta[d * classes..];
            let mut grad = vec![0.0; theta.len()];
            let mut loss = 0.0;
            let mut logits = vec![0.0; classes];
            for i in 0..n {
                let xi = x.row(i);
                for (c, l) in logits.iter_mut().enumerate() {
                    *l = b[c];
                }
                for (j, &v) in xi.iter().enumerate() {
                    if v != 0.0 {
                        for (c, l) in logits.iter_mut().enumerate() {
                            *l += v * w[j * classes + c];
                        }
                    }
                }
                let mx = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = logits.iter().map(|l| (l - mx).exp()).sum();
                loss += mx + z.ln() - logits[y[i]];
                for c in 0..classes {
                    let p = (logits[c] - mx).exp() / z - if c == y[i] { 1.0 } else { 0.0 };
                    let p = p / n as f64;
                    grad[d * classes + c] += p;
                    for (j, &v) in xi.iter().enumerate() {
                        grad[j * classes + c] += p * v;
                    }
                }
            }
            loss /= n as f64;
            for (k, &wk) in w.iter().enumerate() {
                loss += 0.5 * l2 * wk * wk;
                grad[k] += l2 * wk;
            }
            (loss, grad)
        };
        let theta = lbfgs(init, objective, 500, 1e-8);
        LogReg {
            w: Dense::from_vec(d, classes, theta[..d * classes].to_vec()).expect("weight shape"),
            b: theta[d * classes..].to_vec(),
        }
    }

    pub fn predict_proba(&self, x: &Dense) -> Vec<Vec<f64>> {
        let mut logits = x.matmul(&self.w).expect("probe input width");
        logits.add_row_vector(&self.b);
        (0..logits.rows())
            .map(|i| {
                let r = logits.row(i);
                let mx = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = r.iter().map(|l| (l - mx).exp()).collect();
                let z: f64 = e.iter().sum();
                e.into_iter().map(|v| v / z).collect()
            })
            .collect()
    }
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = c;
        }
    }
    best
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProbeScores {
    pub macro_f1: Stat,
    pub micro_f1: Stat,
    pub auc: Stat,
    /// Chosen L2 strength per run.
    pub l2: Vec<f64>,
}

/// Centers on the training mean and divides by the training RMS row norm.
/// Both steps commute with rotations of the embedding space.
fn preprocess(emb: &Dense, train: &[usize]) -> Dense {
    let d = emb.cols();
    let mut mean = vec![0.0; d];
    for &i in train {
        for (m, v) in mean.iter_mut().zip(emb.row(i)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= train.len() as f64;
    }
    let mut out = emb.clone();
    let neg: Vec<f64> = mean.iter().map(|m| -m).collect();
    out.add_row_vector(&neg);
    let ms: f64 = train.iter().map(|&i| dot(out.row(i), out.row(i))).sum::<f64>() / train.len() as f64;
    let scale = ms.sqrt();
    if scale > 0.0 {
        out.scale(1.0 / scale);
    }
    out
}

/// Trains on `train`, picks the L2 strength by validation Macro-F1 and
/// scores `test`, `runs` times with different seeds.
pub fn linear_probe(
    emb: &Dense,
    y: &[usize],
    train: &[usize],
    val: &[usize],
    test: &[usize],
    runs: usize,
    seed: u64,
) -> Result<ProbeScores> {
    if y.len() != emb.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} embeddings",
            y.len(),
            emb.rows()
        )));
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::Config("train and test splits must be non-empty".into()));
    }
    let classes = y.iter().max().map_or(0, |m| m + 1);
    for c in 0..classes {
        if !train.iter().any(|&i| y[i] == c) {
            return Err(Error::MissingClass(c));
        }
    }
    let x = preprocess(emb, train);
    let xt = x.select_rows(train);
    let yt: Vec<usize> = train.iter().map(|&i| y[i]).collect();
    let xv = x.select_rows(val);
    let yv: Vec<usize> = val.iter().map(|&i| y[i]).collect();
    let xs = x.select_rows(test);
    let ys: Vec<usize> = test.iter().map(|&i| y[i]).collect();

    let (mut ma, mut mi, mut auc, mut chosen) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for run in 0..runs.max(1) {
        let run_seed = seed.wrapping_add(run as u64);
        let mut best: Option<(f64, f64, LogReg)> = None;
        for &l2 in &L2_GRID {
            let model = LogReg::fit(&xt, &yt, classes, l2, run_seed);
            let score = if val.is_empty() {
                0.0
            } else {
                let pv: Vec<usize> = model.predict_proba(&xv).iter().map(|p| argmax(p)).collect();
                macro_f1(&yv, &pv)
            };
            if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
                best = Some((score, l2, model));
            }
        }
        let (_, l2, model) = best.expect("non-empty grid");
        let probs = model.predict_proba(&xs);
        let pred: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
        ma.push(macro_f1(&ys, &pred));
        mi.push(micro_f1(&ys, &pred));
        auc.push(macro_auc(&ys, &probs, classes));
        chosen.push(l2);
    }
    Ok(ProbeScores {
        macro_f1: Stat::of(&ma),
        micro_f1: Stat::of(&mi),
        auc: Stat::of(&auc),
        l2: chosen,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lbfgs_quadratic() {
        let x = lbfgs(
            vec![5.0, -3.0],
            |v| {
                let f = (v[0] - 1.0).powi(2) + 10.0 * (v[1] + 2.0).powi(2);
                (f, vec![2.0 * (v[0] - 1.0), 20.0 * (v[1] + 2.0)])
            },
            100,
            1e-10,
        );
        assert!((x[0] - 1.0).abs() < 1e-7 && (x[1] + 2.0).abs() < 1e-7);
    }

    #[test]
    fn separable_one_hot() {
        let y: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let rows: Vec<Vec<f64>> = y
            .iter()
            .map(|&c| (0..3).map(|k| if k == c { 1.0 } else { 0.0 }).collect())
            .collect();
        let emb = Dense::from_rows(&rows);
        let idx: Vec<usize> = (0..30).collect();
        let s = linear_probe(&emb, &y, &idx[..9], &idx[9..15], &idx[15..], 3, 0).unwrap();
        assert_eq!(s.macro_f1.mean, 1.0);
        assert_eq!(s.micro_f1.mean, 1.0);
        assert_eq!(s.auc.mean, 1.0);
    }

    #[test]
    fn missing_class_is_an_error() {
        let emb = Dense::zeros(4, 2);
        let y = [0, 1, 0, 1];
        assert!(matches!(
            linear_probe(&emb, &y, &[0, 2], &[], &[1, 3], 1, 0),
            Err(Error::MissingClass(1))
        ));
    }
}
