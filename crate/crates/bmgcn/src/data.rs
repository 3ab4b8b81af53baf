//! Canonical on-disk dataset layout and parameter checkpoints.
//!
//! A dataset directory holds `edges.tsv` (src/dst pairs, 0-based),
//! `features.tsv` (node id then features), `labels.tsv` (node id, class id)
//! and optionally `meta.tsv` (n, d, c on one line). All tab-separated text;
//! reals use 17 significant digits so 64-bit values round-trip exactly.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::gnn::GraphData;
use crate::graph::{Graph, LabelAssignment};
use crate::tensor::Tensor;

/// 17 significant digits: enough to reproduce any f64 exactly.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str, ctx: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Data(format!("bad real `{s}` in {ctx}")))
}

fn parse_usize(s: &str, ctx: &str) -> Result<usize> {
    s.parse::<usize>()
        .map_err(|_| Error::Data(format!("bad integer `{s}` in {ctx}")))
}

pub fn save_dataset(
    dir: &Path,
    graph: &Graph,
    labels: &LabelAssignment,
    features: &Tensor,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut edges = BufWriter::new(fs::File::create(dir.join("edges.tsv"))?);
    for (a, b) in graph.undirected_edges() {
        writeln!(edges, "{a}\t{b}")?;
    }
    edges.flush()?;

    let mut feat = BufWriter::new(fs::File::create(dir.join("features.tsv"))?);
    for i in 0..features.rows() {
        write!(feat, "{i}")?;
        for &v in features.row(i) {
            write!(feat, "\t{}", format_f64(v))?;
        }
        writeln!(feat)?;
    }
    feat.flush()?;

    let mut lab = BufWriter::new(fs::File::create(dir.join("labels.tsv"))?);
    for i in 0..labels.n() {
        if let Some(l) = labels.get(i) {
            writeln!(lab, "{i}\t{l}")?;
        }
    }
    lab.flush()?;

    let meta = format!(
        "{}\t{}\t{}\n",
        graph.n(),
        features.cols(),
        labels.num_classes()
    );
    fs::write(dir.join("meta.tsv"), meta)?;
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(text.lines().map(str::to_owned).collect())
}

pub fn load_dataset(dir: &Path) -> Result<GraphData> {
    let meta_path = dir.join("meta.tsv");
    let meta: Option<(usize, usize, usize)> = if meta_path.exists() {
        let lines = read_lines(&meta_path)?;
        let first = lines
            .first()
            .ok_or_else(|| Error::Data("meta.tsv is empty".into()))?;
        let parts: Vec<&str> = first.split('\t').collect();
        if parts.len() != 3 {
            return Err(Error::Data("meta.tsv must hold `n\\td\\tc`".into()));
        }
        Some((
            parse_usize(parts[0], "meta.tsv")?,
            parse_usize(parts[1], "meta.tsv")?,
            parse_usize(parts[2], "meta.tsv")?,
        ))
    } else {
        None
    };

    // features define n and d
    let feat_lines = read_lines(&dir.join("features.tsv"))?;
    let n = meta.map(|(n, _, _)| n).unwrap_or(feat_lines.len());
    if feat_lines.len() != n {
        return Err(Error::Data(format!(
            "expected {n} feature rows, found {}",
            feat_lines.len()
        )));
    }
    if n == 0 {
        return Err(Error::Data("dataset has no nodes".into()));
    }
    let mut d = None;
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; n];
    for line in &feat_lines {
        let mut parts = line.split('\t');
        let id = parse_usize(
            parts.next().ok_or_else(|| Error::Data("empty feature line".into()))?,
            "features.tsv",
        )?;
        if id >= n {
            return Err(Error::Data(format!("feature id {id} out of range (n={n})")));
        }
        let vals: Vec<f64> = parts
            .map(|p| parse_f64(p, "features.tsv"))
            .collect::<Result<_>>()?;
        match d {
            None => d = Some(vals.len()),
            Some(dd) if dd != vals.len() => {
                return Err(Error::Data("inconsistent feature dimension".into()))
            }
            _ => {}
        }
        if rows[id].is_some() {
            return Err(Error::Data(format!("duplicate feature row for node {id}")));
        }
        rows[id] = Some(vals);
    }
    let d = d.unwrap_or(0);
    if d == 0 {
        return Err(Error::Data("feature dimension must be >= 1".into()));
    }
    if let Some((_, md, _)) = meta {
        if md != d {
            return Err(Error::Data(format!("meta.tsv says d={md}, features have d={d}")));
        }
    }
    let mut features = Tensor::zeros(n, d);
    for (i, row) in rows.into_iter().enumerate() {
        let row = row.ok_or_else(|| Error::Data(format!("node {i} has no feature row")))?;
        features.row_mut(i).copy_from_slice(&row);
    }
    features.ensure_finite("features.tsv").map_err(|_| {
        Error::Data("features.tsv contains non-finite values".into())
    })?;

    let label_lines = read_lines(&dir.join("labels.tsv"))?;
    let mut raw = vec![None; n];
    let mut max_label = 0usize;
    for line in &label_lines {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 2 {
            return Err(Error::Data(format!("bad label line `{line}`")));
        }
        let id = parse_usize(parts[0], "labels.tsv")?;
        let class = parse_usize(parts[1], "labels.tsv")?;
        if id >= n {
            return Err(Error::Data(format!("label id {id} out of range (n={n})")));
        }
        raw[id] = Some(class);
        max_label = max_label.max(class);
    }
    let c = meta.map(|(_, _, c)| c).unwrap_or(max_label + 1);
    let labels = LabelAssignment::new(raw, c)?;

    let edge_lines = read_lines(&dir.join("edges.tsv"))?;
    let mut pairs = Vec::with_capacity(edge_lines.len());
    for line in &edge_lines {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 2 {
            return Err(Error::Data(format!("bad edge line `{line}`")));
        }
        pairs.push((
            parse_usize(parts[0], "edges.tsv")?,
            parse_usize(parts[1], "edges.tsv")?,
        ));
    }
    let graph = Graph::from_edges(&pairs, n)?;
    Ok(GraphData { graph, labels, features })
}

/// Parameter text dump: `name\trows\tcols` header line, then one line per row.
pub fn save_params(path: &Path, params: &[(String, Tensor)]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for (name, t) in params {
        writeln!(out, "{name}\t{}\t{}", t.rows(), t.cols())?;
        for i in 0..t.rows() {
            let line: Vec<String> = t.row(i).iter().map(|&v| format_f64(v)).collect();
            writeln!(out, "{}", line.join("\t"))?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<Vec<(String, Tensor)>> {
    let lines = read_lines(path)?;
    let mut out = Vec::new();
    let mut iter = lines.iter();
    while let Some(header) = iter.next() {
        if header.is_empty() {
            continue;
        }
        let parts: Vec<&str> = header.split('\t').collect();
        if parts.len() != 3 {
            return Err(Error::Data(format!("bad checkpoint header `{header}`")));
        }
        let name = parts[0].to_owned();
        let rows = parse_usize(parts[1], "checkpoint")?;
        let cols = parse_usize(parts[2], "checkpoint")?;
        let mut t = Tensor::zeros(rows, cols);
        for i in 0..rows {
            let line = iter
                .next()
                .ok_or_else(|| Error::Data(format!("truncated checkpoint in `{name}`")))?;
            let vals: Vec<f64> = line
                .split('\t')
                .map(|p| parse_f64(p, "checkpoint"))
                .collect::<Result<_>>()?;
            if vals.len() != cols {
                return Err(Error::Data(format!("bad row width in `{name}`")));
            }
            t.row_mut(i).copy_from_slice(&vals);
        }
        out.push((name, t));
    }
    Ok(out)
}
