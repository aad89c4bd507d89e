//! Declarative labeling functions, the labeling matrix they produce, and the
//! coverage / overlap / conflict statistics over that matrix.
//!
//! LF sets are read from TOML documents with one `[[lf]]` table per function:
//!
//! ```toml
//! [[lf]]
//! name = "check_alcohol"
//! type = "numeric"
//! feature = "alcohol"
//! branches = ["> 0.75 -> 1", "< 0.15 -> 0"]
//!
//! [[lf]]
//! name = "check_out"
//! type = "keyword"
//! phrase = "check out"
//! emit = 1
//! ```
//!
//! Branches are tried in order and the first match emits; if none matches,
//! or the feature was absent in the source, the function abstains.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{DataKind, Dataset};
use crate::error::{Error, Result};

pub const ABSTAIN: i8 = -1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl Comparator {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparator::Lt => value < threshold,
            Comparator::Gt => value > threshold,
            Comparator::Le => value <= threshold,
            Comparator::Ge => value >= threshold,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "<" => Comparator::Lt,
            ">" => Comparator::Gt,
            "<=" | "≤" => Comparator::Le,
            ">=" | "≥" => Comparator::Ge,
            _ => return None,
        })
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparator::Lt => "<",
            Comparator::Gt => ">",
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub comparator: Comparator,
    pub threshold: f64,
    pub emit: u8,
}

impl Branch {
    /// Parses `"> 0.75 -> 1"`.
    fn parse(s: &str) -> Option<Self> {
        let (cond, emit) = s.split_once("->")?;
        let emit: u8 = emit.trim().parse().ok().filter(|e| *e <= 1)?;
        let cond = cond.trim();
        let split = cond
            .find(|c: char| !matches!(c, '<' | '>' | '=' | '≤' | '≥'))
            .unwrap_or(cond.len());
        let comparator = Comparator::parse(cond[..split].trim())?;
        let threshold: f64 = cond[split..].trim().parse().ok().filter(|t: &f64| t.is_finite())?;
        Some(Self {
            comparator,
            threshold,
            emit,
        })
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} -> {}", self.comparator, self.threshold, self.emit)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Rule {
    /// One comparison on one feature.
    Numeric { feature: String, branch: Branch },
    /// Ordered comparisons on one feature; first match wins.
    NumericBand { feature: String, branches: Vec<Branch> },
    /// Case-insensitive substring match on the raw text.
    Keyword { phrase: String, emit: u8 },
    /// Never votes.
    Absent { feature: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelingFunction {
    pub name: String,
    pub rule: Rule,
    /// Column index of the referenced feature, resolved against the schema.
    #[serde(skip)]
    feature_index: Option<usize>,
    #[serde(skip)]
    phrase_lower: Option<String>,
}

impl LabelingFunction {
    pub fn new(name: impl Into<String>, rule: Rule) -> Self {
        let phrase_lower = match &rule {
            Rule::Keyword { phrase, .. } => Some(phrase.to_lowercase()),
            _ => None,
        };
        Self {
            name: name.into(),
            rule,
            feature_index: None,
            phrase_lower,
        }
    }

    pub fn feature(&self) -> Option<&str> {
        match &self.rule {
            Rule::Numeric { feature, .. }
            | Rule::NumericBand { feature, .. }
            | Rule::Absent { feature } => Some(feature),
            Rule::Keyword { .. } => None,
        }
    }

    /// Resolves the referenced feature against `d`'s schema.
    pub fn bind(&mut self, d: &Dataset) -> Result<()> {
        match &self.rule {
            Rule::Keyword { .. } => {
                if d.kind() != DataKind::Text {
                    return Err(Error::LfSpec(format!(
                        "`{}`: keyword rules need a text dataset",
                        self.name
                    )));
                }
            }
            Rule::Numeric { feature, .. } | Rule::NumericBand { feature, .. } | Rule::Absent { feature } => {
                if d.kind() != DataKind::Numeric {
                    return Err(Error::LfSpec(format!(
                        "`{}`: numeric rules need a numeric dataset",
                        self.name
                    )));
                }
                let idx = d.feature_index(feature).ok_or_else(|| {
                    Error::LfSpec(format!("`{}`: unknown feature `{feature}`", self.name))
                })?;
                self.feature_index = Some(idx);
            }
        }
        Ok(())
    }

    /// Label for point `id` of `d`: 0, 1 or [`ABSTAIN`].
    pub fn apply(&self, d: &Dataset, id: usize) -> i8 {
        match &self.rule {
            Rule::Absent { .. } => ABSTAIN,
            Rule::Keyword { emit, .. } => {
                let phrase = self.phrase_lower.as_deref().unwrap_or_default();
                match d.text(id) {
                    Some(t) if t.to_lowercase().contains(phrase) => *emit as i8,
                    _ => ABSTAIN,
                }
            }
            Rule::Numeric { branch, .. } => self.apply_branches(d, id, std::slice::from_ref(branch)),
            Rule::NumericBand { branches, .. } => self.apply_branches(d, id, branches),
        }
    }

    fn apply_branches(&self, d: &Dataset, id: usize, branches: &[Branch]) -> i8 {
        let f = match self.feature_index {
            Some(f) => f,
            None => match self.feature().and_then(|name| d.feature_index(name)) {
                Some(f) => f,
                None => return ABSTAIN,
            },
        };
        if d.is_missing(id, f) {
            return ABSTAIN;
        }
        let v = d.point(id).get(f);
        branches
            .iter()
            .find(|b| b.comparator.holds(v, b.threshold))
            .map_or(ABSTAIN, |b| b.emit as i8)
    }
}

#[derive(Deserialize)]
struct LfDocument {
    #[serde(default)]
    lf: Vec<LfEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LfEntry {
    name: String,
    #[serde(rename = "type")]
    kind: String,
    feature: Option<String>,
    phrase: Option<String>,
    emit: Option<u8>,
    #[serde(default)]
    branches: Vec<String>,
}

/// Parses an LF document without checking feature names.
pub fn parse_lf_set_unchecked(src: &str) -> Result<Vec<LabelingFunction>> {
    let doc: LfDocument = toml::from_str(src).map_err(|e| Error::LfSpec(e.to_string()))?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(doc.lf.len());
    for e in doc.lf {
        if !seen.insert(e.name.clone()) {
            return Err(Error::LfSpec(format!("duplicate labeling function `{}`", e.name)));
        }
        let need_feature = |e: &LfEntry| {
            e.feature
                .clone()
                .ok_or_else(|| Error::LfSpec(format!("`{}`: missing `feature`", e.name)))
        };
        let rule = match e.kind.as_str() {
            "numeric" | "band" => {
                let feature = need_feature(&e)?;
                let branches = e
                    .branches
                    .iter()
                    .map(|b| {
                        Branch::parse(b).ok_or_else(|| {
                            Error::LfSpec(format!("`{}`: malformed branch `{b}`", e.name))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                match branches.len() {
                    0 => return Err(Error::LfSpec(format!("`{}`: no branches", e.name))),
                    1 if e.kind == "numeric" => Rule::Numeric {
                        feature,
                        branch: branches[0],
                    },
                    _ => Rule::NumericBand { feature, branches },
                }
            }
            "keyword" => {
                let phrase = e
                    .phrase
                    .clone()
                    .filter(|p| !p.is_empty())
                    .ok_or_else(|| Error::LfSpec(format!("`{}`: missing `phrase`", e.name)))?;
                let emit = e
                    .emit
                    .filter(|v| *v <= 1)
                    .ok_or_else(|| Error::LfSpec(format!("`{}`: `emit` must be 0 or 1", e.name)))?;
                Rule::Keyword { phrase, emit }
            }
            "absent" => Rule::Absent {
                feature: need_feature(&e)?,
            },
            other => {
                return Err(Error::LfSpec(format!("`{}`: unknown type `{other}`", e.name)));
            }
        };
        out.push(LabelingFunction::new(e.name, rule));
    }
    Ok(out)
}

/// Parses an LF document and binds every function to `schema`.
pub fn parse_lf_set(src: &str, schema: &Dataset) -> Result<Vec<LabelingFunction>> {
    let mut lfs = parse_lf_set_unchecked(src)?;
    for lf in &mut lfs {
        lf.bind(schema)?;
    }
    Ok(lfs)
}

pub fn load_lf_set(path: impl AsRef<Path>, schema: &Dataset) -> Result<Vec<LabelingFunction>> {
    let path = path.as_ref();
    let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lf_set(&src, schema)
}

/// Row-major k×m matrix of LF outputs in {0, 1, -1}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMatrix {
    rows: usize,
    cols: usize,
    names: Vec<String>,
    data: Vec<i8>,
}

impl LabelMatrix {
    pub fn abstaining(rows: usize, names: Vec<String>) -> Self {
        let cols = names.len();
        Self {
            rows,
            cols,
            names,
            data: vec![ABSTAIN; rows * cols],
        }
    }

    pub fn from_rows(names: Vec<String>, rows: &[Vec<i8>]) -> Result<Self> {
        let cols = names.len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Dimension {
                    expected: cols,
                    got: r.len(),
                });
            }
            if let Some(bad) = r.iter().find(|v| !matches!(v, -1..=1)) {
                return Err(Error::Input(format!("label {bad} outside {{-1, 0, 1}}")));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            names,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, i: usize, l: usize) -> i8 {
        self.data[i * self.cols + l]
    }

    pub fn set(&mut self, i: usize, l: usize, v: i8) {
        debug_assert!(matches!(v, -1..=1));
        self.data[i * self.cols + l] = v;
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, l: usize) -> impl Iterator<Item = i8> + '_ {
        (0..self.rows).map(move |i| self.get(i, l))
    }

    /// Number of non-abstain cells.
    pub fn labeled_cells(&self) -> usize {
        self.data.iter().filter(|&&v| v != ABSTAIN).count()
    }

    /// Number of rows with at least one non-abstain cell.
    pub fn covered_rows(&self) -> usize {
        (0..self.rows)
            .filter(|&i| self.row(i).iter().any(|&v| v != ABSTAIN))
            .count()
    }

    /// Keeps the first `m` columns.
    pub fn truncate_columns(&self, m: usize) -> Self {
        let m = m.min(self.cols);
        let mut data = Vec::with_capacity(self.rows * m);
        for i in 0..self.rows {
            data.extend_from_slice(&self.row(i)[..m]);
        }
        Self {
            rows: self.rows,
            cols: m,
            names: self.names[..m].to_vec(),
            data,
        }
    }

    /// Rows reordered so that output row `r` is input row `order[r]`.
    pub fn permute_rows(&self, order: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for &i in order {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: order.len(),
            cols: self.cols,
            names: self.names.clone(),
            data,
        }
    }

    /// CSV with a `point_id` column followed by one column per LF.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["point_id".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for i in 0..self.rows {
            let mut rec = vec![i.to_string()];
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::Reader::from_path(path)?;
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if headers.first().map(String::as_str) != Some("point_id") {
            return Err(Error::Schema("label matrix must start with a `point_id` column".into()));
        }
        let names = headers[1..].to_vec();
        let mut rows = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(r as u64 + 2);
            let id: usize = rec[0].trim().parse().map_err(|_| Error::Parse {
                line,
                column: "point_id".into(),
                value: rec[0].to_string(),
            })?;
            if id != r {
                return Err(Error::Schema(format!(
                    "line {line}: point ids must be contiguous from 0, found {id}"
                )));
            }
            let row = rec
                .iter()
                .skip(1)
                .zip(&names)
                .map(|(cell, name)| {
                    cell.trim().parse::<i8>().map_err(|_| Error::Parse {
                        line,
                        column: name.clone(),
                        value: cell.to_string(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::from_rows(names, &rows)
    }
}

/// Fills the labeling matrix row by row.
pub fn apply_all(lfs: &[LabelingFunction], d: &Dataset) -> Result<LabelMatrix> {
    if lfs.is_empty() {
        return Err(Error::Input("no labeling functions to apply".into()));
    }
    let mut bound = lfs.to_vec();
    for lf in &mut bound {
        lf.bind(d)?;
    }
    let m = bound.len();
    let mut data = vec![ABSTAIN; d.len() * m];
    data.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
        for (cell, lf) in row.iter_mut().zip(&bound) {
            *cell = lf.apply(d, i);
        }
    });
    Ok(LabelMatrix {
        rows: d.len(),
        cols: m,
        names: bound.into_iter().map(|lf| lf.name).collect(),
        data,
    })
}

/// Per-LF fractions of the k points, with their means and sums over LFs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LfStats {
    pub names: Vec<String>,
    pub coverage: Vec<f64>,
    pub overlaps: Vec<f64>,
    pub conflicts: Vec<f64>,
}

impl LfStats {
    fn mean(v: &[f64]) -> f64 {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    }

    pub fn mean_coverage(&self) -> f64 {
        Self::mean(&self.coverage)
    }

    pub fn mean_overlaps(&self) -> f64 {
        Self::mean(&self.overlaps)
    }

    pub fn mean_conflicts(&self) -> f64 {
        Self::mean(&self.conflicts)
    }

    pub fn sum_coverage(&self) -> f64 {
        self.coverage.iter().sum()
    }

    pub fn sum_overlaps(&self) -> f64 {
        self.overlaps.iter().sum()
    }

    pub fn sum_conflicts(&self) -> f64 {
        self.conflicts.iter().sum()
    }

    pub fn summary(&self) -> LfStatsSummary {
        LfStatsSummary {
            mean_coverage: self.mean_coverage(),
            mean_overlaps: self.mean_overlaps(),
            mean_conflicts: self.mean_conflicts(),
            sum_coverage: self.sum_coverage(),
            sum_overlaps: self.sum_overlaps(),
            sum_conflicts: self.sum_conflicts(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LfStatsSummary {
    pub mean_coverage: f64,
    pub mean_overlaps: f64,
    pub mean_conflicts: f64,
    pub sum_coverage: f64,
    pub sum_overlaps: f64,
    pub sum_conflicts: f64,
}

/// Coverage: LF labels the point. Overlap: it does and some other LF labels
/// it too. Conflict: some other LF labels it with the opposite class.
pub fn lf_stats(mat: &LabelMatrix) -> LfStats {
    let (k, m) = (mat.rows(), mat.cols());
    let mut cov = vec![0usize; m];
    let mut ovl = vec![0usize; m];
    let mut con = vec![0usize; m];
    for i in 0..k {
        let row = mat.row(i);
        let ones = row.iter().filter(|&&v| v == 1).count();
        let zeros = row.iter().filter(|&&v| v == 0).count();
        for (l, &v) in row.iter().enumerate() {
            if v == ABSTAIN {
                continue;
            }
            cov[l] += 1;
            if ones + zeros >= 2 {
                ovl[l] += 1;
            }
            let opposite = if v == 1 { zeros } else { ones };
            if opposite > 0 {
                con[l] += 1;
            }
        }
    }
    let frac = |c: Vec<usize>| -> Vec<f64> {
        c.into_iter()
            .map(|c| if k == 0 { 0.0 } else { c as f64 / k as f64 })
            .collect()
    };
    LfStats {
        names: mat.names().to_vec(),
        coverage: frac(cov),
        overlaps: frac(ovl),
        conflicts: frac(con),
    }
}
