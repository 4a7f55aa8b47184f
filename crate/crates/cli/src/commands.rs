use std::fs;
use std::path::{Path, PathBuf};

use hetrolat::binio::{read_latent, read_matrix, write_latent, write_matrix};
use hetrolat::dataset::{load_graph, parse_splits, write_dataset};
use hetrolat::eval::{evaluate_embedding, generate_synthetic, EvalConfig, SyntheticSpec};
use hetrolat::filters::{graph_checksum, pre_filter_cached, FilteredFeatures};
use hetrolat::homophily::homophily_report;
use hetrolat::latent::{
    build_latent_graphs_full_capped, build_latent_graphs_scalable, diffusion_matrix, latent_hr_audit,
    ScalableLatentConfig,
};
use hetrolat::model::{train_full, train_scalable, write_state, TrainConfig, TrainOutcome};
use hetrolat::{HeteroGraph, LatentGraphPair};
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, InStage, Result, StageError};
use crate::manifest::{manifest_path, read_json, write_json, Recorder};

type StageResult<T> = std::result::Result<T, StageError>;

pub struct AnalyzeArgs {
    pub dataset: PathBuf,
    pub knn: Vec<usize>,
    pub out: PathBuf,
    pub nhr: Option<PathBuf>,
}

pub struct LatentArgs {
    pub dataset: PathBuf,
    pub k: usize,
    pub k_pos: usize,
    pub scalable: bool,
    pub anchors: usize,
    pub seed: u64,
    pub dense_cap: usize,
    pub out: PathBuf,
}

pub struct PrefilterArgs {
    pub dataset: PathBuf,
    pub r: usize,
    pub latent: Option<PathBuf>,
    pub out: PathBuf,
}

pub struct TrainArgs {
    pub dataset: PathBuf,
    pub latent: PathBuf,
    pub scalable: bool,
    pub filtered: Option<PathBuf>,
    pub batch: Option<usize>,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub emb: PathBuf,
}

pub struct EvalArgs {
    pub dataset: PathBuf,
    pub emb: PathBuf,
    pub splits: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
}

pub struct SynthArgs {
    pub spec: Option<PathBuf>,
    pub out: PathBuf,
}

pub struct PipelineArgs {
    pub dataset: PathBuf,
    pub config: Option<PathBuf>,
    pub eval_config: Option<PathBuf>,
    pub scalable: bool,
    pub knn: Vec<usize>,
    pub dense_cap: usize,
    pub out: Option<PathBuf>,
}

fn load(dir: &Path, splits: Option<&Path>) -> Result<HeteroGraph> {
    let g = load_graph(dir)?;
    log::info!(
        "loaded {}: {} target nodes, {} features, {} metapaths",
        dir.display(),
        g.num_targets(),
        g.feature_dim(),
        g.metapaths().len()
    );
    match splits {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            Ok(g.with_splits(parse_splits(&text)?)?)
        }
        None => Ok(g),
    }
}

fn config_or_default<T: Default + serde::de::DeserializeOwned>(path: Option<&Path>) -> Result<T> {
    path.map_or_else(|| Ok(T::default()), read_json)
}

fn to_value(v: &impl Serialize) -> serde_json::Value {
    serde_json::to_value(v).expect("config serializes")
}

fn finish(rec: Recorder, primary: &Path) -> StageResult<()> {
    let path = manifest_path(primary);
    rec.write(&path).in_stage("manifest")?;
    log::info!("wrote {}", path.display());
    Ok(())
}

// ------------------------------------------------------------------ analyze

fn analyze_into(rec: &mut Recorder, g: &HeteroGraph, knn: &[usize], out: &Path, nhr: Option<&Path>) -> StageResult<()> {
    rec.stage("analyze");
    let report = homophily_report(g, knn).in_stage("analyze")?;
    for m in &report.metapaths {
        log::info!("{}: MHR {:.4} over {} edges", m.name, m.mhr, m.edges);
    }
    write_json(out, &report).in_stage("analyze")?;
    rec.artifact(out).in_stage("analyze")?;
    if let Some(p) = nhr {
        fs::write(p, report.nhr_tsv()).map_err(|e| CliError::io(p, e)).in_stage("analyze")?;
        rec.artifact(p).in_stage("analyze")?;
    }
    rec.summary("mhr", report.metapaths.iter().map(|m| (m.name.clone(), m.mhr)).collect::<Vec<_>>());
    Ok(())
}

pub fn analyze(a: &AnalyzeArgs) -> StageResult<()> {
    let mut rec = Recorder::new("analyze", json!({ "knn": a.knn }));
    rec.stage("load");
    let g = load(&a.dataset, None).in_stage("load")?;
    rec.dataset(&a.dataset).in_stage("load")?;
    analyze_into(&mut rec, &g, &a.knn, &a.out, a.nhr.as_deref())?;
    finish(rec, &a.out)
}

// ------------------------------------------------------------- build-latent

fn build_latent(g: &HeteroGraph, a: &LatentArgs) -> Result<LatentGraphPair> {
    let subs = g.subgraphs()?;
    if a.scalable {
        let n = g.num_targets();
        let anchors = if a.anchors > n {
            log::warn!("{} anchors requested for {n} nodes; using all nodes", a.anchors);
            n
        } else {
            a.anchors
        };
        let cfg = ScalableLatentConfig {
            k: a.k,
            k_pos: a.k_pos,
            anchors,
            seed: a.seed,
        };
        Ok(build_latent_graphs_scalable(&subs, g.features(), &cfg)?)
    } else {
        let m = diffusion_matrix(&subs)?;
        Ok(build_latent_graphs_full_capped(&m, g.features(), a.k, a.k_pos, a.dense_cap)?)
    }
}

fn latent_into(rec: &mut Recorder, g: &HeteroGraph, a: &LatentArgs) -> StageResult<LatentGraphPair> {
    rec.stage("build-latent");
    let pair = build_latent(g, a).in_stage("build-latent")?;
    write_latent(&a.out, &pair).in_stage("build-latent")?;
    rec.artifact(&a.out).in_stage("build-latent")?;
    rec.summary(
        "latent_edges",
        json!({
            "homophilic": pair.homophilic.upper_edge_count(),
            "heterophilic": pair.heterophilic.upper_edge_count(),
        }),
    );
    if let Some(y) = g.labels() {
        let audit = latent_hr_audit(&pair, y).in_stage("build-latent")?;
        log::info!(
            "latent HR: homophilic {:.4}, heterophilic {:.4}",
            audit.hr_homophilic,
            audit.hr_heterophilic
        );
        rec.summary("latent_hr", audit);
    }
    Ok(pair)
}

pub fn build_latent_cmd(a: &LatentArgs) -> StageResult<()> {
    let mut rec = Recorder::new(
        "build-latent",
        json!({
            "k": a.k, "k_pos": a.k_pos, "scalable": a.scalable,
            "anchors": a.anchors, "seed": a.seed, "dense_cap": a.dense_cap,
        }),
    );
    rec.seed(a.seed);
    rec.stage("load");
    let g = load(&a.dataset, None).in_stage("load")?;
    rec.dataset(&a.dataset).in_stage("load")?;
    latent_into(&mut rec, &g, a)?;
    finish(rec, &a.out)
}

// ---------------------------------------------------------------- prefilter

fn prefilter_into(
    rec: &mut Recorder,
    g: &HeteroGraph,
    r: usize,
    latent: Option<&LatentGraphPair>,
    out: &Path,
) -> StageResult<FilteredFeatures> {
    rec.stage("prefilter");
    let (f, computed) = pre_filter_cached(g, r, latent, out).in_stage("prefilter")?;
    log::info!(
        "{} filtered features in {}",
        if computed { "computed" } else { "reused cached" },
        out.display()
    );
    rec.summary("prefilter_cache_hit", !computed);
    rec.artifact(out).in_stage("prefilter")?;
    Ok(f)
}

pub fn prefilter(a: &PrefilterArgs) -> StageResult<()> {
    let mut rec = Recorder::new(
        "prefilter",
        json!({ "r": a.r, "latent": a.latent.as_ref().map(|p| p.display().to_string()) }),
    );
    rec.stage("load");
    let g = load(&a.dataset, None).in_stage("load")?;
    rec.dataset(&a.dataset).in_stage("load")?;
    let latent = a.latent.as_ref().map(read_latent).transpose().in_stage("load")?;
    prefilter_into(&mut rec, &g, a.r, latent.as_ref(), &a.out)?;
    finish(rec, &a.out)
}

// -------------------------------------------------------------------- train

fn checkpoint_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.last_good.bin"))
}

fn run_training(
    g: &HeteroGraph,
    pair: &LatentGraphPair,
    filtered: Option<&FilteredFeatures>,
    cfg: &TrainConfig,
    out: &Path,
) -> Result<TrainOutcome> {
    let res = match filtered {
        Some(f) => train_scalable(g, pair, f, cfg),
        None => train_full(g, pair, cfg),
    };
    match res {
        Err(hetrolat::Error::Diverged { epoch, what, last_good }) => {
            let p = checkpoint_path(out);
            write_state(&p, &last_good)?;
            log::error!("last good parameters written to {}", p.display());
            Err(hetrolat::Error::Diverged { epoch, what, last_good }.into())
        }
        other => Ok(other?),
    }
}

fn train_into(
    rec: &mut Recorder,
    g: &HeteroGraph,
    pair: &LatentGraphPair,
    filtered: Option<&FilteredFeatures>,
    cfg: &TrainConfig,
    out: &Path,
    emb: &Path,
) -> StageResult<()> {
    rec.stage("train");
    let outcome = run_training(g, pair, filtered, cfg, out).in_stage("train")?;
    write_state(out, &outcome.state).in_stage("train")?;
    write_matrix(emb, &outcome.z).in_stage("train")?;
    rec.artifact(out).in_stage("train")?;
    rec.artifact(emb).in_stage("train")?;
    let last = outcome.history.last();
    rec.summary(
        "training",
        json!({
            "epochs": outcome.history.len(),
            "stopped_early": outcome.stopped_early,
            "first_loss": outcome.history.first().map(|e| e.total),
            "final_loss": last.map(|e| e.total),
            "final_sce": last.map(|e| e.sce),
            "final_contrastive": last.map(|e| e.contrastive),
            "positives_outside_batch": outcome.positives_outside_batch,
            "degenerate_rows": outcome.degenerate_rows,
        }),
    );
    Ok(())
}

fn check_filtered(g: &HeteroGraph, f: &FilteredFeatures, checksum: &str, cfg: &TrainConfig) -> Result<()> {
    if f.r != cfg.r {
        return Err(CliError::Invalid(format!(
            "filtered features use r={}, config has r={}",
            f.r, cfg.r
        )));
    }
    if graph_checksum(g, cfg.r)? != checksum {
        return Err(CliError::Invalid(
            "filtered features were computed from a different graph; rerun prefilter".into(),
        ));
    }
    Ok(())
}

pub fn train(a: &TrainArgs) -> StageResult<()> {
    let mut cfg: TrainConfig = config_or_default(a.config.as_deref()).in_stage("load")?;
    if let Some(b) = a.batch {
        cfg.batch_size = b;
    }
    cfg.validate().in_stage("load")?;
    let mut rec = Recorder::new("train", json!({ "train": to_value(&cfg), "scalable": a.scalable }));
    rec.seed(cfg.seed);
    rec.stage("load");
    let g = load(&a.dataset, None).in_stage("load")?;
    rec.dataset(&a.dataset).in_stage("load")?;
    let pair = read_latent(&a.latent).in_stage("load")?;
    let filtered = match (&a.filtered, a.scalable) {
        (Some(dir), true) => {
            let (f, m) = FilteredFeatures::load(dir).in_stage("load")?;
            check_filtered(&g, &f, &m.checksum, &cfg).in_stage("load")?;
            Some(f)
        }
        (None, true) => {
            return Err(CliError::Invalid("--scalable needs --filtered".into())).in_stage("load");
        }
        (_, false) => None,
    };
    train_into(&mut rec, &g, &pair, filtered.as_ref(), &cfg, &a.out, &a.emb)?;
    finish(rec, &a.out)
}

// --------------------------------------------------------------------- eval

fn eval_into(rec: &mut Recorder, g: &HeteroGraph, emb: &Path, cfg: &EvalConfig, out: &Path) -> StageResult<()> {
    rec.stage("eval");
    let z = read_matrix(emb).in_stage("eval")?;
    let report = evaluate_embedding(g, &z, cfg).in_stage("eval")?;
    for (tag, s) in &report.classification {
        log::info!("{tag}: Macro-F1 {:.4} Micro-F1 {:.4} AUC {:.4}", s.macro_f1.mean, s.micro_f1.mean, s.auc.mean);
    }
    log::info!("clustering: NMI {:.4} ARI {:.4}", report.clustering.nmi, report.clustering.ari);
    write_json(out, &report).in_stage("eval")?;
    rec.artifact(out).in_stage("eval")?;
    rec.summary("clustering", &report.clustering);
    Ok(())
}

pub fn eval(a: &EvalArgs) -> StageResult<()> {
    let cfg: EvalConfig = config_or_default(a.config.as_deref()).in_stage("load")?;
    let mut rec = Recorder::new("eval", json!({ "eval": to_value(&cfg) }));
    rec.seed(cfg.seed);
    rec.stage("load");
    let g = load(&a.dataset, a.splits.as_deref()).in_stage("load")?;
    rec.dataset(&a.dataset).in_stage("load")?;
    eval_into(&mut rec, &g, &a.emb, &cfg, &a.out)?;
    finish(rec, &a.out)
}

// -------------------------------------------------------------------- synth

pub fn synth(a: &SynthArgs) -> StageResult<()> {
    let spec: SyntheticSpec = config_or_default(a.spec.as_deref()).in_stage("load")?;
    let mut rec = Recorder::new("synth", to_value(&spec));
    rec.seed(spec.seed);
    rec.stage("synth");
    let g = generate_synthetic(&spec).in_stage("synth")?;
    write_dataset(&g, &a.out).in_stage("synth")?;
    rec.artifact(&a.out).in_stage("synth")?;
    rec.summary(
        "expected_mhr",
        (0..spec.metapaths.len()).map(|p| spec.expected_mhr(p)).collect::<Vec<_>>(),
    );
    finish(rec, &a.out)
}

// ----------------------------------------------------------------- pipeline

pub fn pipeline(a: &PipelineArgs) -> StageResult<()> {
    let cfg: TrainConfig = config_or_default(a.config.as_deref()).in_stage("load")?;
    cfg.validate().in_stage("load")?;
    let eval_cfg: EvalConfig = config_or_default(a.eval_config.as_deref()).in_stage("load")?;
    let work = a.out.clone().unwrap_or_else(|| a.dataset.clone());
    fs::create_dir_all(&work).map_err(|e| CliError::io(&work, e)).in_stage("load")?;

    let mut rec = Recorder::new(
        "pipeline",
        json!({
            "train": to_value(&cfg), "eval": to_value(&eval_cfg),
            "scalable": a.scalable, "knn": a.knn, "dense_cap": a.dense_cap,
        }),
    );
    rec.seed(cfg.seed);
    rec.stage("load");
    let g = load(&a.dataset, None).in_stage("load")?;
    rec.dataset(&a.dataset).in_stage("load")?;

    if g.labels().is_some() {
        analyze_into(&mut rec, &g, &a.knn, &work.join("homophily.json"), None)?;
    }
    let latent_args = LatentArgs {
        dataset: a.dataset.clone(),
        k: cfg.k,
        k_pos: cfg.k_pos,
        scalable: a.scalable,
        anchors: cfg.anchors,
        seed: cfg.seed,
        dense_cap: a.dense_cap,
        out: work.join("latent.bin"),
    };
    let pair = latent_into(&mut rec, &g, &latent_args)?;
    let filtered = prefilter_into(&mut rec, &g, cfg.r, Some(&pair), &work.join("filtered"))?;
    let emb = work.join("embeddings.f64");
    let model = work.join("model.bin");
    train_into(&mut rec, &g, &pair, a.scalable.then_some(&filtered), &cfg, &model, &emb)?;
    if g.labels().is_some() {
        eval_into(&mut rec, &g, &emb, &eval_cfg, &work.join("eval.json"))?;
    } else {
        log::warn!("dataset has no labels; skipping evaluation");
    }
    finish(rec, &work.join("pipeline"))
}
