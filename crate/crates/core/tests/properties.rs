use hetrolat::homophily::{edge_hr, knn_graph, node_hr};
use hetrolat::latent::{
    build_latent_graphs_full, build_latent_graphs_scalable, diffusion_matrix, SimilarityIndex,
    ScalableLatentConfig,
};
use hetrolat::filters::{high_pass, low_pass};
use hetrolat::sparse::{renorm_adj_sym, renorm_lap_sym, rw_normalize};
use hetrolat::{Dense, SparseAdjacency};
use proptest::prelude::*;

/// Symmetric 0/1 adjacency with zero diagonal from an upper-triangle mask.
fn adjacency(n: usize, mask: &[bool]) -> SparseAdjacency {
    let mut t = Vec::new();
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            if mask[k % mask.len()] {
                t.push((i, j, 1.0));
                t.push((j, i, 1.0));
            }
            k += 1;
        }
    }
    SparseAdjacency::from_triplets(n, t)
}

fn graph() -> impl Strategy<Value = SparseAdjacency> {
    (2usize..25, prop::collection::vec(prop::bool::weighted(0.2), 1..300))
        .prop_map(|(n, mask)| adjacency(n, &mask))
}

fn matrix(n: usize, d: usize) -> impl Strategy<Value = Dense> {
    prop::collection::vec(0.0f64..1.0, n * d).prop_map(move |v| Dense::from_vec(n, d, v).unwrap())
}

fn graph_and_features(d: usize) -> impl Strategy<Value = (SparseAdjacency, Dense)> {
    graph().prop_flat_map(move |a| {
        let n = a.n();
        (Just(a), matrix(n, d))
    })
}

proptest! {
    #[test]
    fn renormalized_operators(a in graph()) {
        let s = renorm_adj_sym(&a);
        let l = renorm_lap_sym(&a);
        prop_assert!(s.check_symmetric() && l.check_symmetric());
        prop_assert!(s.values().iter().all(|&v| v > 0.0 && v <= 1.0));
        let mut sum = s.to_dense();
        sum.add_assign(&l.to_dense());
        prop_assert!(sum.max_abs_diff(&Dense::identity(a.n())) <= 1e-12);
        for (i, r) in rw_normalize(&a).row_sums().into_iter().enumerate() {
            prop_assert!((r - 1.0).abs() <= 1e-12, "row {}", i);
        }
    }

    #[test]
    fn spmm_matches_dense_product((a, h) in graph_and_features(3)) {
        let s = renorm_adj_sym(&a);
        let want = s.to_dense().matmul(&h).unwrap();
        let got = s.spmm(&h).unwrap();
        let scale = want.data().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(got.max_abs_diff(&want) <= 1e-12 * scale);
    }

    #[test]
    fn filters_split_the_signal((a, h) in graph_and_features(2)) {
        // Ã + L̃ = I, so first-order low and high parts add back to the input
        let mut sum = low_pass(&a, &h, 1).unwrap();
        sum.add_assign(&high_pass(&a, &h, 1).unwrap());
        prop_assert!(sum.max_abs_diff(&h) <= 1e-12);
    }

    #[test]
    fn homophily_ratios_are_bounded(a in graph(), labels in prop::collection::vec(0usize..3, 25)) {
        let y = &labels[..a.n()];
        if let Ok(h) = edge_hr(&a, y) {
            prop_assert!((0.0..=1.0).contains(&h));
        } else {
            prop_assert_eq!(a.nnz(), 0);
        }
        for (i, v) in node_hr(&a, y).into_iter().enumerate() {
            prop_assert_eq!(v.is_none(), a.row_nnz(i) == 0);
            if let Some(v) = v {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn knn_graph_shape(x in (3usize..20).prop_flat_map(|n| matrix(n, 4)), k in 1usize..3) {
        let g = knn_graph(&x, k).unwrap();
        prop_assert!(g.check_symmetric());
        prop_assert!(g.has_zero_diagonal());
        for i in 0..x.rows() {
            prop_assert!(g.row_nnz(i) >= k.min(x.rows() - 1));
        }
    }

    #[test]
    fn similarities_are_symmetric_and_bounded((a, x) in graph_and_features(3)) {
        let m = diffusion_matrix(&[&a]).unwrap();
        let idx = SimilarityIndex::new(&m, &x).unwrap();
        for i in 0..a.n() {
            for j in 0..a.n() {
                let c = idx.pair(i, j);
                let d = idx.pair(j, i);
                prop_assert_eq!(c.coupled, d.coupled);
                for v in [c.structural, c.feature, c.coupled, c.dissimilarity()] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
        }
    }

    #[test]
    fn latent_lists_are_well_formed((a, x) in graph_and_features(3), k in 1usize..4, k_pos in 0usize..3) {
        let n = a.n();
        let k = k.min(n - 1);
        let m = diffusion_matrix(&[&a]).unwrap();
        let p = build_latent_graphs_full(&m, &x, k, k_pos.min(k)).unwrap();
        for i in 0..n {
            for list in [&p.homophilic_lists[i], &p.heterophilic_lists[i]] {
                prop_assert_eq!(list.len(), k);
                prop_assert!(!list.contains(&i));
                let mut u = list.clone();
                u.sort_unstable();
                u.dedup();
                prop_assert_eq!(u.len(), k);
            }
            prop_assert_eq!(&p.positives[i][..], &p.homophilic_lists[i][..k_pos.min(k)]);
        }
        for g in [&p.homophilic, &p.heterophilic] {
            prop_assert!(g.check_symmetric() && g.has_zero_diagonal());
            prop_assert!(g.values().iter().all(|&v| v == 1.0));
            prop_assert!(g.nnz() <= 2 * n * k);
        }
    }

    #[test]
    fn saturated_anchors_reproduce_full_heterophilic((a, x) in graph_and_features(3), seed in 0u64..100) {
        let n = a.n();
        let k = 2.min(n - 1);
        let m = diffusion_matrix(&[&a]).unwrap();
        let full = build_latent_graphs_full(&m, &x, k, 1).unwrap();
        let cfg = ScalableLatentConfig { k, k_pos: 1, anchors: n, seed };
        let scal = build_latent_graphs_scalable(&[&a], &x, &cfg).unwrap();
        prop_assert_eq!(full.heterophilic_lists, scal.heterophilic_lists);
        // homophilic candidates are restricted to meta-path neighbors
        for i in 0..n {
            for &j in &scal.homophilic_lists[i] {
                prop_assert!(a.get(i, j) == 1.0);
            }
        }
    }
}
