//! Acceptance gate. Every criterion runs in sequence inside one test so the
//! timing checks see an otherwise idle process; each prints a single
//! PASS/FAIL/SKIP line to stdout.

mod common;

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use common::{fd_errors, random_params, Path, Problem, TERMS};
use hetrolat::dataset::load_graph;
use hetrolat::eval::{cluster_eval, generate_synthetic, linear_probe, EdgeProbs, SyntheticSpec};
use hetrolat::filters::{latent_prefilter, pre_filter};
use hetrolat::graph::{EdgeType, HeteroGraph, MetaPath};
use hetrolat::homophily::{edge_hr, knn_graph, mhr, nhr};
use hetrolat::latent::{
    build_latent_graphs_full, build_latent_graphs_scalable, diffusion_matrix, latent_hr_audit,
    ScalableLatentConfig,
};
use hetrolat::model::{train_full, train_scalable, Activation, TrainConfig};
use hetrolat::sparse::{renorm_adj_sym, renorm_lap_sym, rw_normalize, sqrt_degree_vector};
use hetrolat::{Dense, SparseAdjacency};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: Option<bool>,
    detail: String,
}

fn pass(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass: Some(ok),
        detail: detail.into(),
    }
}

fn report(id: usize, name: &str, o: &Outcome) {
    let status = match o.pass {
        Some(true) => "PASS",
        Some(false) => "FAIL",
        None => "SKIP",
    };
    // written past the harness capture so the lines always show
    let line = format!("acceptance {id:>2} {status} {name}: {}\n", o.detail);
    std::io::stdout().write_all(line.as_bytes()).unwrap();
}

// ---------------------------------------------------------------- oracles

fn random_hetero(seed: u64) -> HeteroGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(5..=30);
    let na = rng.gen_range(2..=10);
    let nb = rng.gen_range(2..=10);
    let pairs = |src: usize, dst: usize, p: f64, rng: &mut ChaCha8Rng| {
        let mut v = Vec::new();
        for s in 0..src {
            for d in 0..dst {
                if rng.gen::<f64>() < p {
                    v.push((s, d));
                }
            }
        }
        v
    };
    let ta = pairs(n, na, rng.gen_range(0.05..0.3), &mut rng);
    let tb = pairs(n, nb, rng.gen_range(0.05..0.3), &mut rng);
    let tt = pairs(n, n, rng.gen_range(0.02..0.15), &mut rng);
    let ab = pairs(na, nb, rng.gen_range(0.1..0.4), &mut rng);
    let et = |name: &str, s: &str, d: &str, pairs| EdgeType {
        name: name.into(),
        src_type: s.into(),
        dst_type: d.into(),
        pairs,
    };
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..5).map(|_| rng.gen_range(0.01..1.0)).collect()).collect();
    let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
    let mps: Vec<MetaPath> = ["TAT: ta,~ta", "TBT: tb,~tb", "TT: tt", "TABAT: ta,ab,~ab,~ta"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    HeteroGraph::new(
        vec![("T".into(), n), ("A".into(), na), ("B".into(), nb)],
        vec![
            et("ta", "T", "A", ta),
            et("tb", "T", "B", tb),
            et("tt", "T", "T", tt),
            et("ab", "A", "B", ab),
        ],
        "T",
        Dense::from_rows(&x),
        Some(y),
        mps,
    )
    .unwrap()
}

/// Dense boolean composition of the meta-path relations, OR-ed with its
/// transpose, diagonal cleared.
fn oracle_adjacency(g: &HeteroGraph, mp: &MetaPath) -> Vec<Vec<bool>> {
    let count = |t: &str| g.node_types().iter().find(|(n, _)| n == t).unwrap().1;
    let n = g.num_targets();
    let mut reach: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect();
    for step in &mp.steps {
        let et = g.edge_types().iter().find(|e| e.name == step.edge_type).unwrap();
        let (from, to) = if step.reversed {
            (&et.dst_type, &et.src_type)
        } else {
            (&et.src_type, &et.dst_type)
        };
        let mut rel = vec![vec![false; count(to)]; count(from)];
        for &(s, d) in &et.pairs {
            if step.reversed {
                rel[d][s] = true;
            } else {
                rel[s][d] = true;
            }
        }
        let cols = count(to);
        let mut next = vec![vec![false; cols]; n];
        for i in 0..n {
            for (k, &r) in reach[i].iter().enumerate() {
                if r {
                    for j in 0..cols {
                        next[i][j] |= rel[k][j];
                    }
                }
            }
        }
        reach = next;
    }
    (0..n)
        .map(|i| (0..n).map(|j| i != j && (reach[i][j] || reach[j][i])).collect())
        .collect()
}

fn oracle_edge_hr(a: &[Vec<bool>], y: &[usize]) -> Option<f64> {
    let (mut same, mut total) = (0usize, 0usize);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            if a[i][j] {
                total += 1;
                same += (y[i] == y[j]) as usize;
            }
        }
    }
    (total > 0).then(|| same as f64 / total as f64)
}

fn oracle_nhr(a: &[Vec<bool>], y: &[usize]) -> Vec<Option<f64>> {
    (0..a.len())
        .map(|i| {
            let deg = a[i].iter().filter(|&&b| b).count();
            let same = (0..a.len()).filter(|&j| a[i][j] && y[i] == y[j]).count();
            (deg > 0).then(|| same as f64 / deg as f64)
        })
        .collect()
}

fn oracle_cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}

/// Structural, feature and coupled similarity matrices from dense loops.
fn oracle_similarity(adjs: &[Vec<Vec<bool>>], x: &Dense) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = x.rows();
    let mut m = vec![vec![0.0; n]; n];
    for a in adjs {
        for i in 0..n {
            let deg = a[i].iter().filter(|&&b| b).count() as f64 + 1.0;
            for j in 0..n {
                let v = if a[i][j] || i == j { 1.0 } else { 0.0 };
                m[i][j] += v / deg / adjs.len() as f64;
            }
        }
    }
    let mut st = vec![vec![0.0; n]; n];
    let mut sf = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            st[i][j] = oracle_cos(&m[i], &m[j]);
            sf[i][j] = oracle_cos(x.row(i), x.row(j));
        }
    }
    (st, sf)
}

fn oracle_topk(scores: &[f64], i: usize, k: usize) -> Vec<usize> {
    let mut c: Vec<usize> = (0..scores.len()).filter(|&j| j != i).collect();
    c.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    c.truncate(k);
    c
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let mut failures = Vec::new();
    let mut checked = 0;
    for seed in 0..50 {
        let g = random_hetero(seed);
        let y = g.labels().unwrap();
        let mut adjs = Vec::new();
        for (p, mp) in g.metapaths().iter().enumerate() {
            let oa = oracle_adjacency(&g, mp);
            let lib = g.subgraph(p).unwrap();
            let n = g.num_targets();
            let same_graph = (0..n).all(|i| (0..n).all(|j| (lib.get(i, j) == 1.0) == oa[i][j]));
            if !same_graph {
                failures.push(format!("graph {seed} {}: adjacency", mp.name));
            }
            match (edge_hr(lib, y), oracle_edge_hr(&oa, y)) {
                (Ok(a), Some(b)) if a == b => {}
                (Err(_), None) => {}
                other => failures.push(format!("graph {seed} {}: edge HR {other:?}", mp.name)),
            }
            match (mhr(&g, mp), oracle_edge_hr(&oa, y)) {
                (Ok(a), Some(b)) if a == b => {}
                (Err(_), None) => {}
                other => failures.push(format!("graph {seed} {}: MHR {other:?}", mp.name)),
            }
            if nhr(&g, mp).unwrap() != oracle_nhr(&oa, y) {
                failures.push(format!("graph {seed} {}: NHR", mp.name));
            }
            adjs.push(oa);
            checked += 1;
        }

        let x = g.features();
        let n = g.num_targets();
        let (st, sf) = oracle_similarity(&adjs, x);
        let subs = g.subgraphs().unwrap();
        let m = diffusion_matrix(&subs).unwrap();
        let index = hetrolat::latent::SimilarityIndex::new(&m, x).unwrap();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let c = index.pair(i, j);
                if (c.structural - st[i][j]).abs() > 1e-12
                    || (c.feature - sf[i][j]).abs() > 1e-12
                    || (c.coupled - st[i][j] * sf[i][j]).abs() > 1e-12
                {
                    failures.push(format!("graph {seed}: similarity ({i},{j})"));
                }
            }
        }
        let k = 3.min(n - 1);
        let pair = build_latent_graphs_full(&m, x, k, 2).unwrap();
        for i in 0..n {
            let s: Vec<f64> = (0..n).map(|j| st[i][j] * sf[i][j]).collect();
            let w: Vec<f64> = (0..n).map(|j| (1.0 - st[i][j]) * (1.0 - sf[i][j])).collect();
            if pair.homophilic_lists[i] != oracle_topk(&s, i, k)
                || pair.heterophilic_lists[i] != oracle_topk(&w, i, k)
                || pair.positives[i] != oracle_topk(&s, i, 2)
            {
                failures.push(format!("graph {seed}: top-K lists of node {i}"));
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    pass(
        failures.is_empty() && secs < 10.0,
        format!(
            "{checked} meta-path subgraphs on 50 graphs, {} mismatches{}, {secs:.2}s",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

fn random_sparse(seed: u64) -> SparseAdjacency {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=60);
    let p = rng.gen_range(0.0..0.3);
    let mut t = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < p {
                t.push((i, j, 1.0));
                t.push((j, i, 1.0));
            }
        }
    }
    SparseAdjacency::from_triplets(n, t)
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let (mut e_sum, mut e_null, mut e_rw) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..100 {
        let a = random_sparse(seed);
        let n = a.n();
        let s = renorm_adj_sym(&a).to_dense();
        let l = renorm_lap_sym(&a).to_dense();
        let mut sum = s.clone();
        sum.add_assign(&l);
        e_sum = e_sum.max(sum.max_abs_diff(&Dense::identity(n)));
        let v = Dense::from_vec(n, 1, sqrt_degree_vector(&a)).unwrap();
        let lv = renorm_lap_sym(&a).spmm(&v).unwrap();
        e_null = e_null.max(lv.data().iter().fold(0.0, |m, x| m.max(x.abs())));
        for r in rw_normalize(&a).row_sums() {
            e_rw = e_rw.max((r - 1.0).abs());
        }
    }
    let secs = t.elapsed().as_secs_f64();
    pass(
        e_sum <= 1e-12 && e_null <= 1e-9 && e_rw <= 1e-12 && secs < 5.0,
        format!("|Ã+L̃−I| {e_sum:.1e}, |L̃·√d| {e_null:.1e}, |rw row sum−1| {e_rw:.1e}, {secs:.2}s"),
    )
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let prob = Problem::new(2);
    let params = random_params(4, 3, 5);
    let mut worst = (0.0f64, String::new());
    for path in [Path::Full, Path::Prefiltered] {
        for (term, w) in TERMS {
            for (name, err) in fd_errors(&prob, &params, Activation::Elu, &path, 1.0, w, 1e-5, 1e-6) {
                if err > worst.0 {
                    worst = (err, format!("{term}/{name}"));
                }
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    pass(
        worst.0 <= 1e-4 && secs < 30.0,
        format!("worst relative error {:.2e} at {}, {secs:.2}s", worst.0, worst.1),
    )
}

fn degree_weighted_gap(g: &HeteroGraph) -> Option<f64> {
    let mut worst: Option<f64> = None;
    for (p, mp) in g.metapaths().iter().enumerate() {
        let a = g.subgraph(p).unwrap();
        let Ok(m) = mhr(g, mp) else { continue };
        let h = nhr(g, mp).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for (i, v) in h.iter().enumerate() {
            if let Some(v) = v {
                let d = a.row_nnz(i) as f64;
                num += d * v;
                den += d;
            }
        }
        let gap = (m - num / den).abs();
        worst = Some(worst.map_or(gap, |w: f64| w.max(gap)));
    }
    worst
}

fn criterion_4() -> Outcome {
    let mut worst = 0.0f64;
    let mut graphs = 0;
    for seed in 0..50 {
        if let Some(gap) = degree_weighted_gap(&random_hetero(seed)) {
            worst = worst.max(gap);
        }
        graphs += 1;
    }
    for seed in 0..5 {
        let g = generate_synthetic(&SyntheticSpec {
            seed,
            ..Default::default()
        })
        .unwrap();
        worst = worst.max(degree_weighted_gap(&g).unwrap());
        graphs += 1;
    }
    pass(worst <= 1e-12, format!("max |MHR − Σd·NHR/Σd| {worst:.1e} over {graphs} graphs"))
}

fn criterion_5() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for seed in 0..5 {
        let g = generate_synthetic(&SyntheticSpec {
            seed,
            ..Default::default()
        })
        .unwrap();
        let y = g.labels().unwrap();
        let n = g.num_targets();
        let subs = g.subgraphs().unwrap();
        let m = diffusion_matrix(&subs).unwrap();
        let full = build_latent_graphs_full(&m, g.features(), 5, 2).unwrap();
        let cfg = ScalableLatentConfig {
            k: 5,
            k_pos: 2,
            anchors: n,
            seed,
        };
        let scal = build_latent_graphs_scalable(&subs, g.features(), &cfg).unwrap();
        let af = latent_hr_audit(&full, y).unwrap();
        let asc = latent_hr_audit(&scal, y).unwrap();
        let gf = af.hr_homophilic - af.hr_heterophilic;
        let gs = asc.hr_homophilic - asc.hr_heterophilic;
        let same_w = full.heterophilic_lists == scal.heterophilic_lists;
        ok &= gf >= 0.3 && gs >= 0.3 && same_w;
        lines.push(format!("seed {seed}: full {gf:.3} scalable {gs:.3}{}", if same_w { "" } else { " W lists differ" }));
    }
    pass(ok, lines.join("; "))
}

fn criterion_6() -> Outcome {
    let g = generate_synthetic(&SyntheticSpec::default()).unwrap();
    let n = g.num_targets();
    let subs = g.subgraphs().unwrap();
    let pair = build_latent_graphs_scalable(
        &subs,
        g.features(),
        &ScalableLatentConfig {
            k: 5,
            k_pos: 2,
            anchors: n,
            seed: 0,
        },
    )
    .unwrap();
    let cfg = TrainConfig {
        encoder: Activation::Linear,
        batch_size: n,
        max_epochs: 1,
        ..Default::default()
    };
    let mut filtered = pre_filter(&g, cfg.r).unwrap();
    filtered.latent = Some(latent_prefilter(&pair, g.features(), cfg.r).unwrap());
    let a = train_full(&g, &pair, &cfg).unwrap().history[0].total;
    let b = train_scalable(&g, &pair, &filtered, &cfg).unwrap().history[0].total;
    let rel = (a - b).abs() / a.abs();
    pass(rel <= 1e-8, format!("full {a:.12} scalable {b:.12} relative gap {rel:.1e}"))
}

/// Settings used for the end-to-end run.
fn e2e_config() -> TrainConfig {
    TrainConfig {
        d: 64,
        max_epochs: 300,
        tau: 0.3,
        lr: 5e-3,
        seed: 0,
        ..Default::default()
    }
}

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let g = generate_synthetic(&SyntheticSpec::default()).unwrap();
    let y = g.labels().unwrap();
    let subs = g.subgraphs().unwrap();
    let m = diffusion_matrix(&subs).unwrap();
    let pair = build_latent_graphs_full(&m, g.features(), 5, 2).unwrap();
    let out = train_full(&g, &pair, &e2e_config()).unwrap();
    let first = out.history[0].total;
    let last = out.history.last().unwrap().total;
    let drop = (first - last) / first;

    let s = g.splits().unwrap();
    let train = &s.train["train20"];
    let probe = |e: &Dense| linear_probe(e, y, train, &s.val, &s.test, 10, 0).unwrap().macro_f1.mean;
    let cluster = |e: &Dense| cluster_eval(e, y, 10, 0).unwrap().nmi;
    let (f1_z, f1_x) = (probe(&out.z), probe(g.features()));
    let (nmi_z, nmi_x) = (cluster(&out.z), cluster(g.features()));
    let secs = t.elapsed().as_secs_f64();
    let ok = drop >= 0.3
        && f1_z >= 0.85
        && nmi_z >= 0.6
        && f1_z - f1_x >= 0.10
        && nmi_z - nmi_x >= 0.10
        && secs < 180.0;
    pass(
        ok,
        format!(
            "loss {first:.3}→{last:.3} ({:.1}% lower, {} epochs), Macro-F1 {f1_z:.3} vs raw {f1_x:.3}, NMI {nmi_z:.3} vs raw {nmi_x:.3}, {secs:.1}s",
            100.0 * drop,
            out.history.len()
        ),
    )
}

fn criterion_8() -> Outcome {
    let g = generate_synthetic(&SyntheticSpec::default()).unwrap();
    let n = g.num_targets();
    let subs = g.subgraphs().unwrap();
    let m = diffusion_matrix(&subs).unwrap();
    let pair = build_latent_graphs_full(&m, g.features(), 5, 2).unwrap();
    let cfg = TrainConfig {
        max_epochs: 15,
        batch_size: n / 3,
        seed: 7,
        ..Default::default()
    };
    let a = train_full(&g, &pair, &cfg).unwrap().z;
    let b = train_full(&g, &pair, &cfg).unwrap().z;
    let f = pre_filter(&g, cfg.r).unwrap();
    let c = train_scalable(&g, &pair, &f, &cfg).unwrap().z;
    let d = train_scalable(&g, &pair, &f, &cfg).unwrap().z;
    let bits = |m: &Dense| m.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let ok = bits(&a) == bits(&b) && bits(&c) == bits(&d);
    pass(ok, format!("full and mini-batch embeddings bitwise equal across two runs: {ok}"))
}

fn criterion_9() -> Outcome {
    let sizes = [1000usize, 2000, 4000];
    let mut times = Vec::new();
    for &n in &sizes {
        let classes = 4;
        let per = n / classes;
        let spec = SyntheticSpec {
            n_per_class: per,
            classes,
            metapaths: vec![
                EdgeProbs {
                    intra: 8.0 / per as f64,
                    inter: 1.0 / (per * (classes - 1)) as f64,
                },
                EdgeProbs {
                    intra: 2.0 / per as f64,
                    inter: 4.0 / (per * (classes - 1)) as f64,
                },
            ],
            ..Default::default()
        };
        let g = generate_synthetic(&spec).unwrap();
        let subs = g.subgraphs().unwrap();
        let pair = build_latent_graphs_scalable(
            &subs,
            g.features(),
            &ScalableLatentConfig {
                k: 5,
                k_pos: 2,
                anchors: 256,
                seed: 0,
            },
        )
        .unwrap();
        let cfg = TrainConfig {
            batch_size: 256,
            max_epochs: 4,
            patience: 100,
            ..Default::default()
        };
        let f = pre_filter(&g, cfg.r).unwrap();
        let h = train_scalable(&g, &pair, &f, &cfg).unwrap().history;
        let mut best = h[0].elapsed_ms;
        for w in h.windows(2) {
            best = best.min(w[1].elapsed_ms - w[0].elapsed_ms);
        }
        times.push(best);
    }
    let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let mx = xs.iter().sum::<f64>() / 3.0;
    let my = times.iter().sum::<f64>() / 3.0;
    let sxy: f64 = xs.iter().zip(&times).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&times).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    let ss_tot: f64 = times.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    let ratios = [times[1] / times[0], times[2] / times[1]];
    pass(
        r2 >= 0.95,
        format!(
            "epoch ms {:.1} / {:.1} / {:.1} for N = 1k/2k/4k, doubling ratios {:.2} {:.2}, R² {r2:.4}",
            times[0], times[1], times[2], ratios[0], ratios[1]
        ),
    )
}

fn acm_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("HETROLAT_ACM_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/acm"));
    dir.join("node_types.tsv").exists().then_some(dir)
}

fn criterion_10() -> Outcome {
    let Some(dir) = acm_dir() else {
        return Outcome {
            pass: None,
            detail: "ACM dataset not found (set HETROLAT_ACM_DIR)".into(),
        };
    };
    let g = match load_graph(&dir) {
        Ok(g) => g,
        Err(e) => return pass(false, format!("loading {}: {e}", dir.display())),
    };
    let y = g.labels().unwrap();
    let find = |name: &str| g.metapaths().iter().find(|m| m.name == name);
    let (Some(pap), Some(psp)) = (find("PAP"), find("PSP")) else {
        return pass(false, "dataset lacks PAP/PSP meta-paths");
    };
    let m_pap = 100.0 * mhr(&g, pap).unwrap();
    let m_psp = 100.0 * mhr(&g, psp).unwrap();
    let knn = 100.0 * edge_hr(&knn_graph(g.features(), 5).unwrap(), y).unwrap();
    let subs = g.subgraphs().unwrap();
    let m = diffusion_matrix(&subs).unwrap();
    let pair = build_latent_graphs_full(&m, g.features(), 5, 2).unwrap();
    let audit = latent_hr_audit(&pair, y).unwrap();
    let (hs, hw) = (100.0 * audit.hr_homophilic, 100.0 * audit.hr_heterophilic);
    let ok = (m_pap - 80.85).abs() < 0.005
        && (m_psp - 63.93).abs() < 0.005
        && (knn - 74.17).abs() <= 1.5
        && (hs - 84.41).abs() <= 3.0
        && (hw - 19.08).abs() <= 3.0;
    pass(
        ok,
        format!(
            "MHR PAP {m_pap:.2} PSP {m_psp:.2}, KNN-5 HR {knn:.2}, latent HR S {hs:.2} W {hw:.2} (raw lists {:.2} / {:.2})",
            100.0 * audit.raw_hr_homophilic.unwrap_or(f64::NAN),
            100.0 * audit.raw_hr_heterophilic.unwrap_or(f64::NAN)
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("metric oracle equivalence", criterion_1),
        ("spectral identities", criterion_2),
        ("gradient exactness", criterion_3),
        ("degree-weighted identity", criterion_4),
        ("latent-graph separation", criterion_5),
        ("scalable/full consistency", criterion_6),
        ("end-to-end learning signal", criterion_7),
        ("determinism", criterion_8),
        ("linear scaling", criterion_9),
        ("reference dataset", criterion_10),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        report(i + 1, name, &o);
        if o.pass == Some(false) {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
