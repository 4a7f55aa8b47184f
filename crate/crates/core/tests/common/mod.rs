#![allow(dead_code)]

use hetrolat::filters::FilterPair;
use hetrolat::graph::{EdgeType, HeteroGraph, MetaPath};
use hetrolat::latent::{build_latent_graphs_full, diffusion_matrix};
use hetrolat::model::{evaluate, Activation, Inputs, LossWeights, Params, PARAM_NAMES};
use hetrolat::sparse::{renorm_adj_sym, renorm_lap_sym};
use hetrolat::{Dense, LatentGraphPair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Six papers, two authors, two subjects; `PAP` and `PSP`.
pub fn six_node_graph() -> HeteroGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..4).map(|_| rng.gen_range(0.05..1.0)).collect())
        .collect();
    let pa = EdgeType {
        name: "pa".into(),
        src_type: "P".into(),
        dst_type: "A".into(),
        pairs: vec![(0, 0), (1, 0), (2, 0), (3, 1), (4, 1), (2, 1)],
    };
    let ps = EdgeType {
        name: "ps".into(),
        src_type: "P".into(),
        dst_type: "S".into(),
        pairs: vec![(0, 0), (3, 0), (1, 1), (4, 1), (5, 1)],
    };
    HeteroGraph::new(
        vec![("P".into(), 6), ("A".into(), 2), ("S".into(), 2)],
        vec![pa, ps],
        "P",
        Dense::from_rows(&x),
        Some(vec![0, 0, 1, 1, 2, 2]),
        vec!["PAP: pa,~pa".parse().unwrap(), "PSP: ps,~ps".parse::<MetaPath>().unwrap()],
    )
    .unwrap()
}

pub fn six_node_latent(g: &HeteroGraph) -> LatentGraphPair {
    let subs = g.subgraphs().unwrap();
    let m = diffusion_matrix(&subs).unwrap();
    build_latent_graphs_full(&m, g.features(), 2, 1).unwrap()
}

/// Random parameters, larger than the default init so that every
/// nonlinearity is exercised away from zero.
pub fn random_params(d_f: usize, d: usize, seed: u64) -> Params {
    let mut p = Params::init(d_f, d, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
    for t in p.tensors_mut() {
        for v in t.iter_mut() {
            *v += rng.gen_range(-0.3..0.3);
        }
    }
    p
}

pub enum Path {
    Full,
    Prefiltered,
}

/// Loss and gradient of one weighting on the six-node instance.
pub struct Problem {
    pub g: HeteroGraph,
    pub latent: LatentGraphPair,
    pub filters: Vec<FilterPair>,
    pub s_op: hetrolat::SparseAdjacency,
    pub w_op: hetrolat::SparseAdjacency,
    pub low: Vec<Dense>,
    pub high: Vec<Dense>,
    pub lat: (Dense, Dense),
    pub r: usize,
}

impl Problem {
    pub fn new(r: usize) -> Self {
        let g = six_node_graph();
        let latent = six_node_latent(&g);
        let filters: Vec<FilterPair> = g.subgraphs().unwrap().into_iter().map(FilterPair::new).collect();
        let f = hetrolat::filters::pre_filter(&g, r).unwrap();
        let lat = hetrolat::filters::latent_prefilter(&latent, g.features(), r).unwrap();
        Problem {
            s_op: renorm_adj_sym(&latent.homophilic),
            w_op: renorm_lap_sym(&latent.heterophilic),
            filters,
            low: f.low,
            high: f.high,
            lat,
            latent,
            g,
            r,
        }
    }

    pub fn inputs(&self, path: &Path) -> Inputs<'_> {
        match path {
            Path::Full => Inputs::Full {
                x: self.g.features(),
                filters: &self.filters,
                latent_low: &self.s_op,
                latent_high: &self.w_op,
                r: self.r,
            },
            Path::Prefiltered => Inputs::Prefiltered {
                low: &self.low,
                high: &self.high,
                latent_low: &self.lat.0,
                latent_high: &self.lat.1,
            },
        }
    }

    pub fn loss(&self, p: &Params, act: Activation, path: &Path, gamma: f64, w: LossWeights) -> f64 {
        evaluate(p, act, &self.inputs(path), self.g.features(), &self.latent.positives, gamma, 0.5, w, None)
            .unwrap()
            .loss
            .total
    }

    pub fn grad(&self, p: &Params, act: Activation, path: &Path, gamma: f64, w: LossWeights) -> Params {
        let mut g = p.zeros_like();
        evaluate(p, act, &self.inputs(path), self.g.features(), &self.latent.positives, gamma, 0.5, w, Some(&mut g))
            .unwrap();
        g
    }
}

/// Relative error `|a − b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Worst central-difference relative error per parameter group.
pub fn fd_errors(
    prob: &Problem,
    params: &Params,
    act: Activation,
    path: &Path,
    gamma: f64,
    w: LossWeights,
    h: f64,
    floor: f64,
) -> Vec<(&'static str, f64)> {
    let analytic = prob.grad(params, act, path, gamma, w);
    let an = analytic.tensors();
    let mut out = Vec::new();
    let mut probe = params.clone();
    for (t, name) in PARAM_NAMES.iter().enumerate() {
        let mut worst = 0.0f64;
        for k in 0..an[t].len() {
            let orig = probe.tensors()[t][k];
            probe.tensors_mut()[t][k] = orig + h;
            let up = prob.loss(&probe, act, path, gamma, w);
            probe.tensors_mut()[t][k] = orig - h;
            let down = prob.loss(&probe, act, path, gamma, w);
            probe.tensors_mut()[t][k] = orig;
            let fd = (up - down) / (2.0 * h);
            worst = worst.max(rel_err(an[t][k], fd, floor));
        }
        out.push((*name, worst));
    }
    out
}

pub const TERMS: [(&str, LossWeights); 3] = [
    ("sce", LossWeights { sce: 1.0, contrast_low: 0.0, contrast_high: 0.0 }),
    ("contrast_low", LossWeights { sce: 0.0, contrast_low: 1.0, contrast_high: 0.0 }),
    ("contrast_high", LossWeights { sce: 0.0, contrast_low: 0.0, contrast_high: 1.0 }),
];
