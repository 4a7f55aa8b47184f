use std::cmp::Ordering;

/// Higher score first, then lower index.
#[inline]
pub fn rank_order(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Indices of the `k` best `(index, score)` candidates in rank order.
pub fn top_k(candidates: impl IntoIterator<Item = (usize, f64)>, k: usize) -> Vec<usize> {
    top_k_scored(candidates, k).into_iter().map(|(i, _)| i).collect()
}

/// Like [`top_k`] but keeps the scores.
pub fn top_k_scored(
    candidates: impl IntoIterator<Item = (usize, f64)>,
    k: usize,
) -> Vec<(usize, f64)> {
    let mut v: Vec<(usize, f64)> = candidates.into_iter().collect();
    if k == 0 {
        return Vec::new();
    }
    if v.len() > k {
        v.select_nth_unstable_by(k - 1, rank_order);
        v.truncate(k);
    }
    v.sort_by(rank_order);
    v
}
