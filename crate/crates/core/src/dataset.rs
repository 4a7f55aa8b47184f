//! Reading and writing the tab-separated dataset directory.
//!
//! Layout:
//!
//! ```text
//! node_types.tsv      type \t count          (first line is the target type)
//! edges_<name>.tsv    "# src_type \t dst_type" header, then "src \t dst" lines
//! features.tsv        N rows of d_f reals
//! labels.tsv          optional, one integer per line
//! metapaths.txt       "NAME: edge,~edge,..."
//! splits.tsv          optional, "node \t train20|train40|train60|val|test"
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::dense::Dense;
use crate::error::{Error, Result};
use crate::graph::{EdgeType, HeteroGraph, MetaPath, Splits, TRAIN_TAGS};

fn read(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(file: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_string(),
        line,
        msg: msg.into(),
    }
}

/// Lines that carry data: non-blank and not `#` comments, with 1-based numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn parse_node_types(text: &str) -> Result<Vec<(String, usize)>> {
    let mut out = Vec::new();
    for (ln, line) in data_lines(text) {
        let mut it = line.split('\t');
        let name = it.next().unwrap_or("").trim();
        let count = it
            .next()
            .ok_or_else(|| parse_err("node_types.tsv", ln, "expected `type\\tcount`"))?
            .trim()
            .parse::<usize>()
            .map_err(|e| parse_err("node_types.tsv", ln, e.to_string()))?;
        if name.is_empty() {
            return Err(parse_err("node_types.tsv", ln, "empty type name"));
        }
        out.push((name.to_string(), count));
    }
    if out.is_empty() {
        return Err(parse_err("node_types.tsv", 0, "no node types"));
    }
    Ok(out)
}

fn parse_edges(name: &str, text: &str) -> Result<EdgeType> {
    let file = format!("edges_{name}.tsv");
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((k, l)) => break (k + 1, l),
            None => return Err(parse_err(&file, 0, "missing `# src_type\\tdst_type` header")),
        }
    };
    let types = header
        .1
        .trim_start()
        .strip_prefix('#')
        .ok_or_else(|| parse_err(&file, header.0, "missing `# src_type\\tdst_type` header"))?;
    let mut parts = types.split('\t').map(str::trim).filter(|s| !s.is_empty());
    let (src_type, dst_type) = match (parts.next(), parts.next()) {
        (Some(a), Some(b)) => (a.to_string(), b.to_string()),
        _ => return Err(parse_err(&file, header.0, "header needs two types")),
    };
    let mut pairs = Vec::new();
    for (k, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split('\t');
        let mut num = |what: &str| -> Result<usize> {
            it.next()
                .ok_or_else(|| parse_err(&file, k + 1, format!("missing {what}")))?
                .trim()
                .parse::<usize>()
                .map_err(|e| parse_err(&file, k + 1, e.to_string()))
        };
        let s = num("src")?;
        let d = num("dst")?;
        pairs.push((s, d));
    }
    Ok(EdgeType {
        name: name.to_string(),
        src_type,
        dst_type,
        pairs,
    })
}

fn parse_features(text: &str) -> Result<Dense> {
    let mut data = Vec::new();
    let mut rows = 0;
    let mut cols = None;
    for (ln, line) in data_lines(text) {
        let before = data.len();
        for tok in line.split('\t') {
            let v = tok
                .trim()
                .parse::<f64>()
                .map_err(|e| parse_err("features.tsv", ln, e.to_string()))?;
            data.push(v);
        }
        let c = data.len() - before;
        match cols {
            None => cols = Some(c),
            Some(c0) if c0 != c => {
                return Err(parse_err(
                    "features.tsv",
                    ln,
                    format!("{c} columns, expected {c0}"),
                ))
            }
            _ => {}
        }
        rows += 1;
    }
    Dense::from_vec(rows, cols.unwrap_or(0), data)
}

fn parse_labels(text: &str) -> Result<Vec<usize>> {
    data_lines(text)
        .map(|(ln, l)| {
            let v = l
                .trim()
                .parse::<i64>()
                .map_err(|e| parse_err("labels.tsv", ln, e.to_string()))?;
            usize::try_from(v)
                .map_err(|_| Error::LabelOutOfRange(format!("label {v} on line {ln}")))
        })
        .collect()
}

fn parse_metapaths(text: &str) -> Result<Vec<MetaPath>> {
    data_lines(text)
        .map(|(ln, l)| l.parse::<MetaPath>().map_err(|e| parse_err("metapaths.txt", ln, e)))
        .collect()
}

pub fn parse_splits(text: &str) -> Result<Splits> {
    let mut s = Splits::default();
    for (ln, line) in data_lines(text) {
        let (id, tag) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("splits.tsv", ln, "expected `node\\ttag`"))?;
        let id = id
            .trim()
            .parse::<usize>()
            .map_err(|e| parse_err("splits.tsv", ln, e.to_string()))?;
        match tag.trim() {
            "val" => s.val.push(id),
            "test" => s.test.push(id),
            t if TRAIN_TAGS.contains(&t) => s.train.entry(t.to_string()).or_default().push(id),
            t => return Err(parse_err("splits.tsv", ln, format!("unknown split `{t}`"))),
        }
    }
    Ok(s)
}

/// Loads and validates a dataset directory.
pub fn load_graph(dir: impl AsRef<Path>) -> Result<HeteroGraph> {
    let dir = dir.as_ref();
    let node_types = parse_node_types(&read(&dir.join("node_types.tsv"))?)?;
    let target = node_types[0].0.clone();

    let mut edge_files: Vec<(String, std::path::PathBuf)> = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let fname = entry.file_name().to_string_lossy().into_owned();
        if let Some(name) = fname.strip_prefix("edges_").and_then(|r| r.strip_suffix(".tsv")) {
            edge_files.push((name.to_string(), entry.path()));
        }
    }
    edge_files.sort();
    let edge_types = edge_files
        .iter()
        .map(|(name, path)| parse_edges(name, &read(path)?))
        .collect::<Result<Vec<_>>>()?;

    let features = parse_features(&read(&dir.join("features.tsv"))?)?;
    let labels_path = dir.join("labels.tsv");
    let labels = if labels_path.exists() {
        Some(parse_labels(&read(&labels_path)?)?)
    } else {
        None
    };
    let mp_path = dir.join("metapaths.txt");
    let metapaths = if mp_path.exists() {
        parse_metapaths(&read(&mp_path)?)?
    } else {
        Vec::new()
    };
    let g = HeteroGraph::new(node_types, edge_types, target, features, labels, metapaths)?;
    let splits_path = dir.join("splits.tsv");
    if splits_path.exists() {
        g.with_splits(parse_splits(&read(&splits_path)?)?)
    } else {
        Ok(g)
    }
}

/// Writes `g` in the directory layout read by [`load_graph`].
pub fn write_dataset(g: &HeteroGraph, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, body: String| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, body).map_err(|e| Error::io(&p, e))
    };

    // target type goes first
    let mut types = String::new();
    let target = g.target_type();
    for (t, c) in g
        .node_types()
        .iter()
        .filter(|(t, _)| t == target)
        .chain(g.node_types().iter().filter(|(t, _)| t != target))
    {
        types.push_str(&format!("{t}\t{c}\n"));
    }
    write("node_types.tsv", types)?;

    for et in g.edge_types() {
        let mut body = format!("# {}\t{}\n", et.src_type, et.dst_type);
        for (s, d) in &et.pairs {
            body.push_str(&format!("{s}\t{d}\n"));
        }
        write(&format!("edges_{}.tsv", et.name), body)?;
    }

    let x = g.features();
    let p = dir.join("features.tsv");
    let file = fs::File::create(&p).map_err(|e| Error::io(&p, e))?;
    let mut w = std::io::BufWriter::new(file);
    for i in 0..x.rows() {
        let line = x
            .row(i)
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join("\t");
        writeln!(w, "{line}").map_err(|e| Error::io(&p, e))?;
    }
    w.flush().map_err(|e| Error::io(&p, e))?;

    if let Some(y) = g.labels() {
        write(
            "labels.tsv",
            y.iter().map(|v| format!("{v}\n")).collect::<String>(),
        )?;
    }
    write(
        "metapaths.txt",
        g.metapaths().iter().map(|m| format!("{m}\n")).collect(),
    )?;
    if let Some(s) = g.splits() {
        let mut body = String::new();
        for (tag, ids) in &s.train {
            for i in ids {
                body.push_str(&format!("{i}\t{tag}\n"));
            }
        }
        for i in &s.val {
            body.push_str(&format!("{i}\tval\n"));
        }
        for i in &s.test {
            body.push_str(&format!("{i}\ttest\n"));
        }
        write("splits.tsv", body)?;
    }
    Ok(())
}

/// SHA-256 over the dataset files, in sorted file-name order.
pub fn dataset_checksum(dir: impl AsRef<Path>) -> Result<String> {
    let dir = dir.as_ref();
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let is_data = name == "node_types.tsv"
            || name == "features.tsv"
            || name == "labels.tsv"
            || name == "metapaths.txt"
            || name == "splits.tsv"
            || (name.starts_with("edges_") && name.ends_with(".tsv"));
        if is_data {
            names.push(name);
        }
    }
    names.sort();
    let mut h = Sha256::new();
    for name in names {
        let p = dir.join(&name);
        let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex(&h.finalize()))
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
