//! Classification and clustering scores.

use std::collections::BTreeMap;

/// Macro-averaged F1 over the labels present in either vector.
pub fn macro_f1(truth: &[usize], pred: &[usize]) -> f64 {
    assert_eq!(truth.len(), pred.len());
    let mut labels: Vec<usize> = truth.iter().chain(pred).copied().collect();
    labels.sort_unstable();
    labels.dedup();
    if labels.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for &c in &labels {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fneg = 0usize;
        for (&t, &p) in truth.iter().zip(pred) {
            match (t == c, p == c) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fneg += 1,
                _ => {}
            }
        }
        let denom = 2 * tp + fp + fneg;
        if denom > 0 {
            sum += 2.0 * tp as f64 / denom as f64;
        }
    }
    sum / labels.len() as f64
}

/// Micro-averaged F1; equals accuracy for single-label data.
pub fn micro_f1(truth: &[usize], pred: &[usize]) -> f64 {
    assert_eq!(truth.len(), pred.len());
    if truth.is_empty() {
        return 0.0;
    }
    truth.iter().zip(pred).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}

/// Area under the ROC curve via the rank statistic, ties averaged.
/// `None` when one of the two groups is empty.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        // ranks are 1-based
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            if positive[k] {
                rank_sum += avg;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    Some((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// Macro one-vs-rest AUC on per-class probabilities (`probs[i][c]`).
pub fn macro_auc(truth: &[usize], probs: &[Vec<f64>], classes: usize) -> f64 {
    let mut sum = 0.0;
    let mut count = 0;
    for c in 0..classes {
        let scores: Vec<f64> = probs.iter().map(|p| p[c]).collect();
        let pos: Vec<bool> = truth.iter().map(|&t| t == c).collect();
        if let Some(a) = binary_auc(&scores, &pos) {
            sum += a;
            count += 1;
        }
    }
    if count == 0 {
        0.5
    } else {
        sum / count as f64
    }
}

struct Contingency {
    table: BTreeMap<(usize, usize), usize>,
    rows: BTreeMap<usize, usize>,
    cols: BTreeMap<usize, usize>,
    n: usize,
}

fn contingency(a: &[usize], b: &[usize]) -> Contingency {
    assert_eq!(a.len(), b.len());
    let mut c = Contingency {
        table: BTreeMap::new(),
        rows: BTreeMap::new(),
        cols: BTreeMap::new(),
        n: a.len(),
    };
    for (&x, &y) in a.iter().zip(b) {
        *c.table.entry((x, y)).or_default() += 1;
        *c.rows.entry(x).or_default() += 1;
        *c.cols.entry(y).or_default() += 1;
    }
    c
}

fn entropy(counts: &BTreeMap<usize, usize>, n: f64) -> f64 {
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information with arithmetic-mean normalization.
/// Two single-cluster labelings score 1.
pub fn nmi(a: &[usize], b: &[usize]) -> f64 {
    let c = contingency(a, b);
    if c.n == 0 {
        return 0.0;
    }
    let n = c.n as f64;
    let ha = entropy(&c.rows, n);
    let hb = entropy(&c.cols, n);
    if ha == 0.0 && hb == 0.0 {
        return 1.0;
    }
    let mut mi = 0.0;
    for (&(x, y), &nxy) in &c.table {
        let pxy = nxy as f64 / n;
        let px = c.rows[&x] as f64 / n;
        let py = c.cols[&y] as f64 / n;
        mi += pxy * (pxy / (px * py)).ln();
    }
    let denom = (ha + hb) / 2.0;
    if denom <= 0.0 {
        0.0
    } else {
        (mi / denom).clamp(0.0, 1.0)
    }
}

fn comb2(k: usize) -> f64 {
    let k = k as f64;
    k * (k - 1.0) / 2.0
}

/// Adjusted Rand index. Identical trivial partitions score 1.
pub fn ari(a: &[usize], b: &[usize]) -> f64 {
    let c = contingency(a, b);
    if c.n < 2 {
        return 1.0;
    }
    let sum_ij: f64 = c.table.values().map(|&v| comb2(v)).sum();
    let sum_a: f64 = c.rows.values().map(|&v| comb2(v)).sum();
    let sum_b: f64 = c.cols.values().map(|&v| comb2(v)).sum();
    let total = comb2(c.n);
    let expected = sum_a * sum_b / total;
    let max = (sum_a + sum_b) / 2.0;
    if max == expected {
        return 1.0;
    }
    (sum_ij - expected) / (max - expected)
}
