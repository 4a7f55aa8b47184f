//! Square CSR matrices over target nodes and the propagation kernels built
//! on them.

use crate::dense::Dense;
use crate::error::{Error, Result};

/// Square CSR matrix. Columns are strictly increasing within each row and
/// explicit zeros are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseAdjacency {
    n: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseAdjacency {
    pub fn zeros(n: usize) -> Self {
        SparseAdjacency {
            n,
            offsets: vec![0; n + 1],
            indices: Vec::new(),
            values: Vec::new(),
            symmetric: true,
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseAdjacency {
            n,
            offsets: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
            symmetric: true,
        }
    }

    /// Validating constructor from raw CSR arrays.
    pub fn from_csr(
        n: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if offsets.len() != n + 1 || offsets[0] != 0 {
            return Err(Error::InvalidSparse("offsets length or origin".into()));
        }
        if offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidSparse("offsets not monotone".into()));
        }
        let nnz = offsets[n];
        if indices.len() != nnz || values.len() != nnz {
            return Err(Error::InvalidSparse("nnz mismatch".into()));
        }
        for i in 0..n {
            let cols = &indices[offsets[i]..offsets[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidSparse(format!(
                    "row {i}: columns not strictly increasing"
                )));
            }
            if cols.last().is_some_and(|&c| c >= n) {
                return Err(Error::InvalidSparse(format!("row {i}: column out of range")));
            }
        }
        if values.contains(&0.0) {
            return Err(Error::InvalidSparse("explicit zero".into()));
        }
        Ok(SparseAdjacency {
            n,
            offsets,
            indices,
            values,
            symmetric: false,
        })
    }

    /// Builds from unordered triplets; duplicates are summed and zeros dropped.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i},{j}) outside {n}x{n}");
            rows[i].push((j, v));
        }
        Self::from_row_lists(rows)
    }

    /// Builds a 0/1 matrix from per-row neighbor lists (duplicates collapse).
    pub fn from_neighbor_lists(lists: &[Vec<usize>]) -> Self {
        let rows = lists
            .iter()
            .map(|l| l.iter().map(|&j| (j, 1.0)).collect::<Vec<_>>())
            .collect::<Vec<_>>();
        let mut m = Self::from_row_lists(rows);
        for v in &mut m.values {
            *v = 1.0;
        }
        m
    }

    fn from_row_lists(mut rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for row in &mut rows {
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == j {
                    v += row[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            offsets.push(indices.len());
        }
        SparseAdjacency {
            n,
            offsets,
            indices,
            values,
            symmetric: false,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Whether the symmetric flag has been set (and therefore verified).
    pub fn is_marked_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Value-exact transpose equality.
    pub fn check_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).all(|(&j, &v)| self.get(j, i) == v)
        })
    }

    /// Sets the symmetric flag after verifying it.
    pub fn into_symmetric(mut self) -> Result<Self> {
        if !self.check_symmetric() {
            return Err(Error::InvalidSparse("matrix is not symmetric".into()));
        }
        self.symmetric = true;
        Ok(self)
    }

    pub fn transpose(&self) -> SparseAdjacency {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                rows[j].push((i, v));
            }
        }
        let mut t = Self::from_row_lists(rows);
        t.symmetric = self.symmetric;
        t
    }

    /// Union with the transpose, every stored value set to 1.
    pub fn symmetrize_binary(&self) -> SparseAdjacency {
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for &j in self.row(i).0 {
                lists[i].push(j);
                lists[j].push(i);
            }
        }
        let mut m = Self::from_neighbor_lists(&lists);
        m.symmetric = true;
        m
    }

    pub fn without_diagonal(&self) -> SparseAdjacency {
        let trips = (0..self.n).flat_map(|i| {
            let (cols, vals) = self.row(i);
            cols.iter()
                .zip(vals)
                .filter(move |(&j, _)| j != i)
                .map(move |(&j, &v)| (i, j, v))
        });
        let mut m = Self::from_triplets(self.n, trips);
        m.symmetric = self.symmetric;
        m
    }

    pub fn has_zero_diagonal(&self) -> bool {
        (0..self.n).all(|i| self.get(i, i) == 0.0)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).1.iter().sum()).collect()
    }

    /// Number of undirected edges, i.e. stored entries strictly above the diagonal.
    pub fn upper_edge_count(&self) -> usize {
        self.upper_edges().count()
    }

    /// Iterates `(i, j)` with `i < j` over stored entries.
    pub fn upper_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.row(i)
                .0
                .iter()
                .copied()
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }

    /// Entry-wise `self + other`.
    pub fn add(&self, other: &SparseAdjacency) -> Result<SparseAdjacency> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "adding {}x{} and {}x{}",
                self.n, self.n, other.n, other.n
            )));
        }
        let mut offsets = vec![0];
        let mut indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let (j, v) = if q >= cb.len() || (p < ca.len() && ca[p] < cb[q]) {
                    p += 1;
                    (ca[p - 1], va[p - 1])
                } else if p >= ca.len() || cb[q] < ca[p] {
                    q += 1;
                    (cb[q - 1], vb[q - 1])
                } else {
                    p += 1;
                    q += 1;
                    (ca[p - 1], va[p - 1] + vb[q - 1])
                };
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            offsets.push(indices.len());
        }
        Ok(SparseAdjacency {
            n: self.n,
            offsets,
            indices,
            values,
            symmetric: self.symmetric && other.symmetric,
        })
    }

    pub fn scaled(&self, s: f64) -> SparseAdjacency {
        let mut m = self.clone();
        for v in &mut m.values {
            *v *= s;
        }
        if s == 0.0 {
            return SparseAdjacency::zeros(self.n);
        }
        m
    }

    pub fn to_dense(&self) -> Dense {
        let mut d = Dense::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d.set(i, j, v);
            }
        }
        d
    }

    /// Sparse-dense product. Each output row sums its terms in ascending
    /// column order.
    pub fn spmm(&self, h: &Dense) -> Result<Dense> {
        if h.rows() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "spmm: {}x{} sparse by {}x{} dense",
                self.n,
                self.n,
                h.rows(),
                h.cols()
            )));
        }
        let d = h.cols();
        let mut out = Dense::zeros(self.n, d);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let o = out.row_mut(i);
            for (&j, &v) in cols.iter().zip(vals) {
                for (oc, hc) in o.iter_mut().zip(h.row(j)) {
                    *oc += v * hc;
                }
            }
        }
        Ok(out)
    }

    /// Dot product of two rows, ascending column order over shared columns.
    pub fn row_dot(&self, i: usize, other: &SparseAdjacency, j: usize) -> f64 {
        let (ca, va) = self.row(i);
        let (cb, vb) = other.row(j);
        let (mut p, mut q) = (0, 0);
        let mut s = 0.0;
        while p < ca.len() && q < cb.len() {
            match ca[p].cmp(&cb[q]) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    s += va[p] * vb[q];
                    p += 1;
                    q += 1;
                }
            }
        }
        s
    }

    /// Copy with each row scaled to unit L2 norm; empty rows stay empty.
    pub fn row_normalized(&self) -> SparseAdjacency {
        let mut m = self.clone();
        for i in 0..self.n {
            let (a, b) = (m.offsets[i], m.offsets[i + 1]);
            let vals = &mut m.values[a..b];
            let nrm = crate::dense::norm(vals);
            if nrm > 0.0 {
                for v in vals.iter_mut() {
                    *v /= nrm;
                }
            }
        }
        m.symmetric = false;
        m
    }

    fn map_with_degrees(&self, f: impl Fn(usize, usize, f64, &[f64]) -> f64) -> SparseAdjacency {
        // Ã = A + I, D̃ = diag(row sums of Ã)
        let with_loops = self
            .add(&SparseAdjacency::identity(self.n))
            .expect("same size");
        let deg = with_loops.row_sums();
        let mut m = with_loops;
        for i in 0..self.n {
            for k in m.offsets[i]..m.offsets[i + 1] {
                let j = m.indices[k];
                m.values[k] = f(i, j, m.values[k], &deg);
            }
        }
        m
    }
}

/// `D̃^{-1/2} (A + I) D̃^{-1/2}`.
pub fn renorm_adj_sym(a: &SparseAdjacency) -> SparseAdjacency {
    let mut m = a.map_with_degrees(|i, j, v, deg| v / (deg[i].sqrt() * deg[j].sqrt()));
    m.symmetric = a.symmetric;
    m
}

/// `I − D̃^{-1/2} (A + I) D̃^{-1/2}`.
pub fn renorm_lap_sym(a: &SparseAdjacency) -> SparseAdjacency {
    let adj = renorm_adj_sym(a);
    let neg = adj.scaled(-1.0);
    let mut m = SparseAdjacency::identity(a.n).add(&neg).expect("same size");
    m.symmetric = a.symmetric;
    m
}

/// Random-walk normalization `D̃^{-1} (A + I)`; every row sums to one.
pub fn rw_normalize(a: &SparseAdjacency) -> SparseAdjacency {
    let mut m = a.map_with_degrees(|i, _j, v, deg| v / deg[i]);
    m.symmetric = false;
    m
}

/// `D̃^{1/2}·1`, the null vector of [`renorm_lap_sym`].
pub fn sqrt_degree_vector(a: &SparseAdjacency) -> Vec<f64> {
    a.row_sums().into_iter().map(|d| (d + 1.0).sqrt()).collect()
}

/// Convenience wrapper around [`SparseAdjacency::spmm`].
pub fn spmm(a: &SparseAdjacency, h: &Dense) -> Result<Dense> {
    a.spmm(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(n: usize, pairs: &[(usize, usize)]) -> SparseAdjacency {
        SparseAdjacency::from_triplets(n, pairs.iter().flat_map(|&(i, j)| [(i, j, 1.0), (j, i, 1.0)]))
            .into_symmetric()
            .unwrap()
    }

    #[test]
    fn renorm_isolated_node() {
        let a = SparseAdjacency::zeros(1);
        assert_eq!(renorm_adj_sym(&a).to_dense().data(), &[1.0]);
        assert_eq!(renorm_lap_sym(&a).to_dense().data(), &[0.0]);
        assert_eq!(renorm_lap_sym(&a).nnz(), 0);
        assert_eq!(rw_normalize(&a).to_dense().data(), &[1.0]);
    }

    #[test]
    fn renorm_single_edge() {
        let a = edge(2, &[(0, 1)]);
        let adj = renorm_adj_sym(&a).to_dense();
        for v in adj.data() {
            assert!((v - 0.5).abs() < 1e-15);
        }
        let lap = renorm_lap_sym(&a).to_dense();
        let expect = [0.5, -0.5, -0.5, 0.5];
        for (v, e) in lap.data().iter().zip(expect) {
            assert!((v - e).abs() < 1e-15);
        }
        let rw = rw_normalize(&a).to_dense();
        assert_eq!(rw.data(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn renorm_triangle() {
        let a = edge(3, &[(0, 1), (1, 2), (0, 2)]);
        for v in renorm_adj_sym(&a).to_dense().data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn spmm_identity_and_zero() {
        let h = Dense::from_rows(&[vec![1.0, 2.0], vec![3.0, -4.0], vec![0.5, 0.0]]);
        assert_eq!(SparseAdjacency::identity(3).spmm(&h).unwrap(), h);
        assert_eq!(SparseAdjacency::zeros(3).spmm(&h).unwrap(), Dense::zeros(3, 2));
        assert!(SparseAdjacency::zeros(2).spmm(&h).is_err());
    }

    #[test]
    fn csr_validation() {
        assert!(SparseAdjacency::from_csr(2, vec![0, 2, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseAdjacency::from_csr(2, vec![0, 1, 1], vec![1], vec![0.0]).is_err());
        assert!(SparseAdjacency::from_csr(2, vec![0, 1, 1], vec![2], vec![1.0]).is_err());
        let ok = SparseAdjacency::from_csr(2, vec![0, 1, 1], vec![1], vec![1.0]).unwrap();
        assert!(ok.clone().into_symmetric().is_err());
        assert!(!ok.check_symmetric());
    }

    #[test]
    fn symmetrize_and_add() {
        let a = SparseAdjacency::from_triplets(3, [(0, 1, 1.0), (2, 1, 1.0)]);
        let s = a.symmetrize_binary();
        assert!(s.check_symmetric());
        assert_eq!(s.nnz(), 4);
        let sum = s.add(&s.scaled(-1.0)).unwrap();
        assert_eq!(sum.nnz(), 0);
    }
}
