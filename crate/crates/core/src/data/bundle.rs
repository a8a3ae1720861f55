//! Dataset bundle directory:
//!
//! - `edges.tsv`: `source  target  type` rows
//! - `features.csv`: `vertex_id` followed by one column per feature
//! - `labels.csv`: `vertex_id,label`, an empty label meaning unlabeled
//! - `splits.json`: named vertex index arrays

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::graph::AttributedGraph;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Bundle {
    pub graph: AttributedGraph,
    pub feature_names: Vec<String>,
    pub splits: BTreeMap<String, Vec<usize>>,
}

impl Bundle {
    /// Names features `f0, f1, …`.
    pub fn new(graph: AttributedGraph, splits: BTreeMap<String, Vec<usize>>) -> Self {
        let feature_names = (0..graph.feature_dim()).map(|k| format!("f{k}")).collect();
        Self {
            graph,
            feature_names,
            splits,
        }
    }

    pub fn split(&self, name: &str) -> Result<&[usize]> {
        self.splits
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::InvalidArgument(format!("bundle has no split named '{name}'")))
    }
}

fn format_error(file: &str, reason: impl Into<String>) -> Error {
    Error::Format {
        file: file.into(),
        reason: reason.into(),
    }
}

fn parse<T: std::str::FromStr>(file: &str, field: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| format_error(file, format!("cannot parse '{field}'")))
}

pub fn write_bundle(dir: &Path, bundle: &Bundle) -> Result<()> {
    let g = &bundle.graph;
    if bundle.feature_names.len() != g.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: g.feature_dim(),
            actual: bundle.feature_names.len(),
            context: "feature names",
        });
    }
    fs::create_dir_all(dir)?;

    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_path(dir.join("edges.tsv"))?;
    w.write_record(["source", "target", "type"])?;
    for e in g.edges() {
        w.write_record([e.u.to_string(), e.v.to_string(), e.kind.to_string()])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("features.csv"))?;
    w.write_record(std::iter::once("vertex_id").chain(bundle.feature_names.iter().map(String::as_str)))?;
    for i in 0..g.n() {
        w.write_record(std::iter::once(i.to_string()).chain(g.feature(i).iter().map(f64::to_string)))?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("labels.csv"))?;
    w.write_record(["vertex_id", "label"])?;
    for (i, label) in g.labels().iter().enumerate() {
        w.write_record([i.to_string(), label.map(|y| y.to_string()).unwrap_or_default()])?;
    }
    w.flush()?;

    let mut text = serde_json::to_string_pretty(&bundle.splits)?;
    text.push('\n');
    fs::write(dir.join("splits.json"), text)?;
    Ok(())
}

pub fn read_bundle(dir: &Path) -> Result<Bundle> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(dir.join("features.csv"))?;
    let header = r.headers()?.clone();
    if header.get(0) != Some("vertex_id") {
        return Err(format_error("features.csv", "first column must be vertex_id"));
    }
    let feature_names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let d = feature_names.len();
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != d + 1 {
            return Err(format_error("features.csv", format!("row with {} fields, expected {}", rec.len(), d + 1)));
        }
        let id = parse("features.csv", &rec[0])?;
        let x = rec.iter().skip(1).map(|f| parse("features.csv", f)).collect::<Result<_>>()?;
        rows.push((id, x));
    }
    let n = rows.len();
    let mut features = vec![0.0; n * d];
    let mut seen = vec![false; n];
    for (id, x) in rows {
        if id >= n || seen[id] {
            return Err(format_error("features.csv", format!("vertex ids must be 0..{n} without repeats, got {id}")));
        }
        seen[id] = true;
        features[id * d..(id + 1) * d].copy_from_slice(&x);
    }

    let mut r = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .from_path(dir.join("edges.tsv"))?;
    let mut edges = Vec::new();
    let mut types = 1;
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(format_error("edges.tsv", "expected source, target and type"));
        }
        let e: (usize, usize, usize) = (
            parse("edges.tsv", &rec[0])?,
            parse("edges.tsv", &rec[1])?,
            parse("edges.tsv", &rec[2])?,
        );
        types = types.max(e.2 + 1);
        edges.push(e);
    }

    let mut labels = vec![None; n];
    let mut r = csv::Reader::from_path(dir.join("labels.csv"))?;
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(format_error("labels.csv", "expected vertex_id and label"));
        }
        let id: usize = parse("labels.csv", &rec[0])?;
        if id >= n {
            return Err(format_error("labels.csv", format!("vertex {id} out of range")));
        }
        if !rec[1].trim().is_empty() {
            labels[id] = Some(parse("labels.csv", &rec[1])?);
        }
    }

    let splits: BTreeMap<String, Vec<usize>> =
        serde_json::from_str(&fs::read_to_string(dir.join("splits.json"))?)?;
    if let Some((name, bad)) = splits
        .iter()
        .find_map(|(k, v)| v.iter().find(|&&i| i >= n).map(|i| (k, *i)))
    {
        return Err(format_error("splits.json", format!("split '{name}' has vertex {bad} out of range")));
    }

    let graph = AttributedGraph::new(n, edges, types, d, features, Some(labels))?;
    Ok(Bundle {
        graph,
        feature_names,
        splits,
    })
}
