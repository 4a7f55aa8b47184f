//! Full-graph and mini-batch training loops.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dense::Dense;
use crate::error::{Error, Result};
use crate::filters::{latent_prefilter, FilterPair, FilteredFeatures};
use crate::graph::HeteroGraph;
use crate::latent::LatentGraphPair;
use crate::sparse::{renorm_adj_sym, renorm_lap_sym};

use super::objective::{evaluate, fused_embedding, Inputs, LossBreakdown, LossWeights};
use super::{AdamHyper, ModelState, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub sce: f64,
    pub contrastive: f64,
    pub total: f64,
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub state: ModelState,
    /// Fused embedding from a forward pass with the final parameters.
    pub z: Dense,
    pub history: Vec<EpochLog>,
    pub stopped_early: bool,
    /// Positive pairs dropped because the partner was in another batch.
    pub positives_outside_batch: usize,
    /// Reconstruction rows with an undefined cosine, summed over steps.
    pub degenerate_rows: usize,
}

struct Stopper {
    best: f64,
    wait: usize,
    patience: usize,
}

impl Stopper {
    /// True when the loss has not improved for `patience` epochs.
    fn update(&mut self, loss: f64) -> bool {
        if loss < self.best {
            self.best = loss;
            self.wait = 0;
            false
        } else {
            self.wait += 1;
            self.wait >= self.patience
        }
    }
}

fn check_step(state: &ModelState, grad: &super::Params, loss: &LossBreakdown, epoch: usize) -> Result<()> {
    let bad = if !loss.total.is_finite() {
        Some("loss".to_string())
    } else {
        grad.first_non_finite().map(|n| format!("gradient of {n}"))
    };
    match bad {
        Some(what) => Err(Error::Diverged {
            epoch,
            what,
            last_good: Box::new(state.clone()),
        }),
        None => Ok(()),
    }
}

fn log_epoch(e: &EpochLog) {
    log::info!(
        "epoch={} sce={:.6} contrastive={:.6} total={:.6} elapsed_ms={:.1}",
        e.epoch,
        e.sce,
        e.contrastive,
        e.total,
        e.elapsed_ms
    );
}

fn validate(g: &HeteroGraph, latent: &LatentGraphPair, cfg: &TrainConfig) -> Result<()> {
    cfg.validate()?;
    if latent.n() != g.num_targets() {
        return Err(Error::DimensionMismatch(format!(
            "latent graphs have {} nodes, graph has {}",
            latent.n(),
            g.num_targets()
        )));
    }
    if g.metapaths().is_empty() {
        return Err(Error::Config("at least one metapath is required".into()));
    }
    Ok(())
}

/// Trains on the whole graph, filtering encoded features every step.
pub fn train_full(g: &HeteroGraph, latent: &LatentGraphPair, cfg: &TrainConfig) -> Result<TrainOutcome> {
    validate(g, latent, cfg)?;
    let x = g.features();
    let filters: Vec<FilterPair> = g.subgraphs()?.into_iter().map(FilterPair::new).collect();
    let s_op = renorm_adj_sym(&latent.homophilic);
    let w_op = renorm_lap_sym(&latent.heterophilic);
    let inputs = Inputs::Full {
        x,
        filters: &filters,
        latent_low: &s_op,
        latent_high: &w_op,
        r: cfg.r,
    };
    let hp = AdamHyper::new(cfg.lr, cfg.weight_decay);
    let mut state = ModelState::new(x.cols(), cfg);
    let mut stopper = Stopper {
        best: f64::INFINITY,
        wait: 0,
        patience: cfg.patience,
    };
    let mut history = Vec::new();
    let mut stopped_early = false;
    let mut degenerate_rows = 0;
    let start = Instant::now();
    for epoch in 0..cfg.max_epochs {
        let mut grad = state.params.zeros_like();
        let ev = evaluate(
            &state.params,
            state.activation,
            &inputs,
            x,
            &latent.positives,
            cfg.gamma,
            cfg.tau,
            LossWeights::default(),
            Some(&mut grad),
        )?;
        check_step(&state, &grad, &ev.loss, epoch)?;
        state.adam_step(&grad, &hp);
        degenerate_rows += ev.loss.degenerate_rows;
        let entry = EpochLog {
            epoch,
            sce: ev.loss.sce,
            contrastive: ev.loss.contrastive(),
            total: ev.loss.total,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        log_epoch(&entry);
        history.push(entry);
        if stopper.update(ev.loss.total) {
            stopped_early = true;
            break;
        }
    }
    if degenerate_rows > 0 {
        log::warn!("{degenerate_rows} reconstruction rows had zero norm");
    }
    let z = fused_embedding(&state.params, state.activation, &inputs)?;
    Ok(TrainOutcome {
        state,
        z,
        history,
        stopped_early,
        positives_outside_batch: 0,
        degenerate_rows,
    })
}

/// Batch slice of every pre-filtered block.
struct BatchInputs {
    low: Vec<Dense>,
    high: Vec<Dense>,
    latent_low: Dense,
    latent_high: Dense,
}

impl BatchInputs {
    fn gather(f: &FilteredFeatures, lat: &(Dense, Dense), rows: &[usize]) -> Self {
        BatchInputs {
            low: f.low.iter().map(|m| m.select_rows(rows)).collect(),
            high: f.high.iter().map(|m| m.select_rows(rows)).collect(),
            latent_low: lat.0.select_rows(rows),
            latent_high: lat.1.select_rows(rows),
        }
    }

    fn inputs(&self) -> Inputs<'_> {
        Inputs::Prefiltered {
            low: &self.low,
            high: &self.high,
            latent_low: &self.latent_low,
            latent_high: &self.latent_high,
        }
    }
}

/// Mini-batch training on features filtered ahead of time. Each epoch
/// shuffles the nodes with a seeded generator and takes one optimizer step
/// per batch; contrastive candidates are the batch members.
pub fn train_scalable(
    g: &HeteroGraph,
    latent: &LatentGraphPair,
    filtered: &FilteredFeatures,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    validate(g, latent, cfg)?;
    if cfg.batch_size < 2 {
        return Err(Error::Config("batch_size must be at least 2".into()));
    }
    let n = g.num_targets();
    let x = g.features();
    let p = g.metapaths().len();
    if filtered.r != cfg.r {
        return Err(Error::Config(format!(
            "features were filtered with r={}, config has r={}",
            filtered.r, cfg.r
        )));
    }
    if filtered.low.len() != p
        || filtered.high.len() != p
        || filtered.low.iter().chain(&filtered.high).any(|m| m.shape() != x.shape())
    {
        return Err(Error::DimensionMismatch("pre-filtered features do not match the graph".into()));
    }
    let computed;
    let lat = match &filtered.latent {
        Some(l) => l,
        None => {
            computed = latent_prefilter(latent, x, cfg.r)?;
            &computed
        }
    };

    let hp = AdamHyper::new(cfg.lr, cfg.weight_decay);
    let mut state = ModelState::new(x.cols(), cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut local = vec![usize::MAX; n];
    let mut stopper = Stopper {
        best: f64::INFINITY,
        wait: 0,
        patience: cfg.patience,
    };
    let mut history = Vec::new();
    let mut stopped_early = false;
    let mut outside = 0;
    let mut degenerate_rows = 0;
    let start = Instant::now();
    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut acc = LossBreakdown::default();
        for chunk in order.chunks(cfg.batch_size) {
            let mut rows = chunk.to_vec();
            rows.sort_unstable();
            for (l, &i) in rows.iter().enumerate() {
                local[i] = l;
            }
            let positives: Vec<Vec<usize>> = rows
                .iter()
                .map(|&i| {
                    latent.positives[i]
                        .iter()
                        .filter_map(|&j| {
                            let l = local[j];
                            if l == usize::MAX {
                                outside += 1;
                                None
                            } else {
                                Some(l)
                            }
                        })
                        .collect()
                })
                .collect();
            let batch = BatchInputs::gather(filtered, lat, &rows);
            let target = x.select_rows(&rows);
            let mut grad = state.params.zeros_like();
            let ev = evaluate(
                &state.params,
                state.activation,
                &batch.inputs(),
                &target,
                &positives,
                cfg.gamma,
                cfg.tau,
                LossWeights::default(),
                Some(&mut grad),
            )?;
            check_step(&state, &grad, &ev.loss, epoch)?;
            state.adam_step(&grad, &hp);
            let w = rows.len() as f64 / n as f64;
            acc.sce += w * ev.loss.sce;
            acc.contrast_low += w * ev.loss.contrast_low;
            acc.contrast_high += w * ev.loss.contrast_high;
            acc.total += w * ev.loss.total;
            degenerate_rows += ev.loss.degenerate_rows;
            for &i in &rows {
                local[i] = usize::MAX;
            }
        }
        let entry = EpochLog {
            epoch,
            sce: acc.sce,
            contrastive: acc.contrastive(),
            total: acc.total,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        log_epoch(&entry);
        history.push(entry);
        if stopper.update(acc.total) {
            stopped_early = true;
            break;
        }
    }
    if outside > 0 {
        log::warn!("{outside} positive pairs fell outside their batch and were replaced by self");
    }
    let mut z = Dense::zeros(n, cfg.d);
    let all: Vec<usize> = (0..n).collect();
    for chunk in all.chunks(cfg.batch_size.max(1)) {
        let batch = BatchInputs::gather(filtered, lat, chunk);
        let zb = fused_embedding(&state.params, state.activation, &batch.inputs())?;
        for (r, &i) in chunk.iter().enumerate() {
            z.row_mut(i).copy_from_slice(zb.row(r));
        }
    }
    Ok(TrainOutcome {
        state,
        z,
        history,
        stopped_early,
        positives_outside_batch: outside,
        degenerate_rows,
    })
}
