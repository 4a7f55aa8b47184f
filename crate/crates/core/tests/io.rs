use std::fs;

use hetrolat::binio::{read_latent, read_matrix, write_latent, write_matrix};
use hetrolat::dataset::{dataset_checksum, load_graph, write_dataset};
use hetrolat::eval::{generate_synthetic, SyntheticSpec};
use hetrolat::filters::{pre_filter, pre_filter_cached, read_manifest};
use hetrolat::homophily::mhr;
use hetrolat::latent::{build_latent_graphs_full, diffusion_matrix};
use hetrolat::model::{read_state, train_full, write_state, TrainConfig};
use hetrolat::Dense;

fn synth() -> hetrolat::graph::HeteroGraph {
    generate_synthetic(&SyntheticSpec {
        n_per_class: 20,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn dataset_directory_roundtrip() {
    let g = synth();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&g, dir.path()).unwrap();
    let back = load_graph(dir.path()).unwrap();
    assert_eq!(back.num_targets(), g.num_targets());
    assert_eq!(back.features(), g.features());
    assert_eq!(back.labels(), g.labels());
    assert_eq!(back.splits(), g.splits());
    for (a, b) in g.metapaths().iter().zip(back.metapaths()) {
        assert_eq!(mhr(&g, a).unwrap(), mhr(&back, b).unwrap());
    }

    let sum = dataset_checksum(dir.path()).unwrap();
    assert_eq!(sum, dataset_checksum(dir.path()).unwrap());
    fs::write(dir.path().join("labels.tsv"), "0\n".repeat(g.num_targets())).unwrap();
    assert_ne!(sum, dataset_checksum(dir.path()).unwrap());
}

#[test]
fn corrupted_dataset_is_rejected() {
    let g = synth();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&g, dir.path()).unwrap();
    let feats = dir.path().join("features.tsv");
    let text = fs::read_to_string(&feats).unwrap();
    fs::write(&feats, text.replacen('\t', "\t-", 1)).unwrap();
    assert!(load_graph(dir.path()).is_err());
    fs::write(&feats, text).unwrap();
    fs::remove_file(dir.path().join("node_types.tsv")).unwrap();
    assert!(load_graph(dir.path()).is_err());
}

#[test]
fn binary_artifacts_roundtrip() {
    let g = synth();
    let dir = tempfile::tempdir().unwrap();
    let m = Dense::from_rows(&[vec![1.5, -2.0, 0.0], vec![f64::MIN_POSITIVE, 3.0, 1e300]]);
    let p = dir.path().join("m.f64");
    write_matrix(&p, &m).unwrap();
    assert_eq!(fs::metadata(&p).unwrap().len(), 8 + 6 * 8);
    assert_eq!(read_matrix(&p).unwrap(), m);

    let pair = build_latent_graphs_full(&diffusion_matrix(&g.subgraphs().unwrap()).unwrap(), g.features(), 4, 2).unwrap();
    let p = dir.path().join("latent.bin");
    write_latent(&p, &pair).unwrap();
    assert_eq!(read_latent(&p).unwrap(), pair);
    let bytes = fs::read(&p).unwrap();
    fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
    assert!(read_latent(&p).is_err());

    let out = train_full(&g, &pair, &TrainConfig { d: 8, max_epochs: 2, ..Default::default() }).unwrap();
    let p = dir.path().join("model.bin");
    write_state(&p, &out.state).unwrap();
    assert_eq!(read_state(&p).unwrap(), out.state);
}

#[test]
fn prefilter_cache_follows_checksums() {
    let g = synth();
    let dir = tempfile::tempdir().unwrap();
    let (first, computed) = pre_filter_cached(&g, 2, None, dir.path()).unwrap();
    assert!(computed);
    assert_eq!(first, pre_filter(&g, 2).unwrap());
    let (again, computed) = pre_filter_cached(&g, 2, None, dir.path()).unwrap();
    assert!(!computed);
    assert_eq!(again, first);

    let (_, computed) = pre_filter_cached(&g, 1, None, dir.path()).unwrap();
    assert!(computed);
    assert_eq!(read_manifest(dir.path()).unwrap().r, 1);

    let pair = build_latent_graphs_full(&diffusion_matrix(&g.subgraphs().unwrap()).unwrap(), g.features(), 3, 1).unwrap();
    let (with_latent, computed) = pre_filter_cached(&g, 1, Some(&pair), dir.path()).unwrap();
    assert!(computed && with_latent.latent.is_some());
    let (_, computed) = pre_filter_cached(&g, 1, Some(&pair), dir.path()).unwrap();
    assert!(!computed);

    let m = read_manifest(dir.path()).unwrap();
    fs::remove_file(dir.path().join(&m.files[0])).unwrap();
    let (_, computed) = pre_filter_cached(&g, 1, Some(&pair), dir.path()).unwrap();
    assert!(computed);
}
