//! Dataset ingestion: tabular CSV loading with missing-cell tracking, min-max
//! scaling, text tokenization and vectorization, and seeded train/test splits.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cells spelled like this are treated as absent rather than unparsable.
const MISSING_MARKERS: &[&str] = &["", "NA", "N/A", "NaN", "nan", "null", "None", "?"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    Numeric,
    Text,
}

/// Sparse vector with strictly increasing indices and nonzero values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Builds a sparse vector, sorting entries and dropping explicit zeros.
    /// Duplicate indices are summed.
    pub fn new(dim: usize, mut entries: Vec<(u32, f64)>) -> Result<Self> {
        entries.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            if i as usize >= dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: i as usize + 1,
                });
            }
            if !v.is_finite() {
                return Err(Error::Input(format!("non-finite sparse value at index {i}")));
            }
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        Ok(Self {
            dim,
            entries: merged,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.entries.binary_search_by_key(&(index as u32), |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FeatureVector {
    Dense(Vec<f64>),
    Sparse(SparseVector),
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        match self {
            FeatureVector::Dense(v) => v.len(),
            FeatureVector::Sparse(s) => s.dim,
        }
    }

    pub fn get(&self, index: usize) -> f64 {
        match self {
            FeatureVector::Dense(v) => v[index],
            FeatureVector::Sparse(s) => s.get(index),
        }
    }

    /// Calls `f(index, value)` for every stored entry (all entries when dense).
    pub fn for_each_entry(&self, mut f: impl FnMut(usize, f64)) {
        match self {
            FeatureVector::Dense(v) => v.iter().enumerate().for_each(|(i, &x)| f(i, x)),
            FeatureVector::Sparse(s) => s.entries.iter().for_each(|&(i, x)| f(i as usize, x)),
        }
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        match self {
            FeatureVector::Dense(v) => v.iter().zip(weights).map(|(a, b)| a * b).sum(),
            FeatureVector::Sparse(s) => s
                .entries
                .iter()
                .map(|&(i, x)| x * weights[i as usize])
                .sum(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match self {
            FeatureVector::Dense(v) => v.clone(),
            FeatureVector::Sparse(s) => {
                let mut out = vec![0.0; s.dim];
                for &(i, x) in &s.entries {
                    out[i as usize] = x;
                }
                out
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            FeatureVector::Dense(v) => v.iter().all(|x| x.is_finite()),
            FeatureVector::Sparse(s) => s.entries.iter().all(|(_, x)| x.is_finite()),
        }
    }
}

/// Token to column map. Tokens are kept in lexicographic order so that the
/// index assignment does not depend on corpus order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn fit<I, S>(documents: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = BTreeSet::new();
        for doc in documents {
            set.extend(tokenize(doc.as_ref()));
        }
        Self::from_tokens(set)
    }

    pub fn from_tokens(tokens: impl IntoIterator<Item = String>) -> Self {
        let set: BTreeSet<String> = tokens.into_iter().map(|t| t.to_lowercase()).collect();
        let tokens: Vec<String> = set.into_iter().collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorMode {
    /// Binary token presence.
    OneHot,
    /// Token occurrence counts.
    Counts,
}

/// Lowercases and splits on runs of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Out-of-vocabulary tokens are ignored.
pub fn vectorize<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, mode: VectorMode) -> FeatureVector {
    let mut counts: HashMap<u32, f64> = HashMap::new();
    for tok in tokens {
        if let Some(idx) = vocab.get(tok.as_ref()) {
            *counts.entry(idx).or_insert(0.0) += 1.0;
        }
    }
    let entries = counts
        .into_iter()
        .map(|(i, c)| match mode {
            VectorMode::OneHot => (i, 1.0),
            VectorMode::Counts => (i, c),
        })
        .collect();
    FeatureVector::Sparse(
        SparseVector::new(vocab.len(), entries).expect("vocabulary indices are in range"),
    )
}

/// Binary ground truth for the wine-quality datasets: good when quality > 5.
pub fn label_wine_truth(quality: i64) -> Result<u8> {
    if !(0..=10).contains(&quality) {
        return Err(Error::Input(format!("wine quality {quality} outside 0..=10")));
    }
    Ok(u8::from(quality > 5))
}

/// How the truth column is mapped to {0, 1}.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthTransform {
    /// Values already 0/1 (also accepts yes/no and true/false).
    #[default]
    Binary,
    /// Integer quality score, positive when > 5.
    WineQuality,
}

impl TruthTransform {
    fn apply(self, raw: &str) -> Option<u8> {
        let raw = raw.trim();
        match self {
            TruthTransform::Binary => match raw.to_ascii_lowercase().as_str() {
                "1" | "1.0" | "yes" | "true" => Some(1),
                "0" | "0.0" | "no" | "false" => Some(0),
                _ => None,
            },
            TruthTransform::WineQuality => {
                let q: f64 = raw.parse().ok()?;
                if q.fract() != 0.0 {
                    return None;
                }
                label_wine_truth(q as i64).ok()
            }
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct TabularOptions {
    /// Feature columns to keep. `None` keeps every column except the truth
    /// column and the excluded ones.
    pub feature_columns: Option<Vec<String>>,
    pub exclude_columns: Vec<String>,
    pub truth_column: Option<String>,
    pub truth_transform: TruthTransform,
    pub delimiter: Option<u8>,
}

/// Immutable collection of points. Point ids are the positions `0..k`;
/// `origin` records each point's row index in the source it was loaded from.
#[derive(Clone, Debug)]
pub struct Dataset {
    kind: DataKind,
    feature_names: Vec<String>,
    points: Vec<FeatureVector>,
    origin: Vec<usize>,
    /// Sorted feature indices that were absent in the source (numeric only).
    missing: Vec<Vec<u32>>,
    texts: Option<Vec<String>>,
    vocab: Option<Arc<Vocabulary>>,
    truth: Option<Vec<u8>>,
}

impl Dataset {
    /// Builds a numeric dataset from dense rows.
    pub fn numeric(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        truth: Option<Vec<u8>>,
    ) -> Result<Self> {
        let missing = vec![Vec::new(); rows.len()];
        Self::numeric_with_missing(feature_names, rows, missing, truth)
    }

    pub fn numeric_with_missing(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        missing: Vec<Vec<u32>>,
        truth: Option<Vec<u8>>,
    ) -> Result<Self> {
        let n = feature_names.len();
        if n == 0 {
            return Err(Error::Schema("dataset needs at least one feature".into()));
        }
        for row in &rows {
            if row.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Input("non-finite feature value".into()));
            }
        }
        if missing.len() != rows.len() {
            return Err(Error::Input("missing-mask length differs from row count".into()));
        }
        check_truth(&truth, rows.len())?;
        let k = rows.len();
        Ok(Self {
            kind: DataKind::Numeric,
            feature_names,
            points: rows.into_iter().map(FeatureVector::Dense).collect(),
            origin: (0..k).collect(),
            missing,
            texts: None,
            vocab: None,
            truth,
        })
    }

    /// Builds a text dataset whose points are one-hot vectors over `vocab`.
    /// When `vocab` is `None` it is fitted on `texts`.
    pub fn from_texts(texts: Vec<String>, truth: Option<Vec<u8>>, vocab: Option<Vocabulary>) -> Result<Self> {
        check_truth(&truth, texts.len())?;
        let vocab = Arc::new(vocab.unwrap_or_else(|| Vocabulary::fit(&texts)));
        let k = texts.len();
        let mut d = Self {
            kind: DataKind::Text,
            feature_names: Vec::new(),
            points: Vec::new(),
            origin: (0..k).collect(),
            missing: vec![Vec::new(); k],
            texts: Some(texts),
            vocab: None,
            truth,
        };
        d.set_vocabulary(vocab)?;
        Ok(d)
    }

    fn set_vocabulary(&mut self, vocab: Arc<Vocabulary>) -> Result<()> {
        if vocab.is_empty() {
            return Err(Error::Schema("text vocabulary is empty".into()));
        }
        let texts = self.texts.as_ref().expect("text dataset has texts");
        self.points = texts
            .iter()
            .map(|t| vectorize(&tokenize(t), &vocab, VectorMode::OneHot))
            .collect();
        self.feature_names = vocab.tokens().to_vec();
        self.vocab = Some(vocab);
        Ok(())
    }

    /// Re-vectorizes a text dataset against a different vocabulary.
    pub fn with_vocabulary(&self, vocab: Arc<Vocabulary>) -> Result<Self> {
        if self.kind != DataKind::Text {
            return Err(Error::Input("vocabulary applies to text datasets only".into()));
        }
        let mut d = self.clone();
        d.set_vocabulary(vocab)?;
        Ok(d)
    }

    /// Refits the vocabulary on this dataset's own texts.
    pub fn refit_vocabulary(&self) -> Result<Self> {
        let texts = self
            .texts
            .as_ref()
            .ok_or_else(|| Error::Input("vocabulary applies to text datasets only".into()))?;
        self.with_vocabulary(Arc::new(Vocabulary::fit(texts)))
    }

    pub fn kind(&self) -> DataKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    pub fn points(&self) -> &[FeatureVector] {
        &self.points
    }

    pub fn point(&self, id: usize) -> &FeatureVector {
        &self.points[id]
    }

    pub fn point_ids(&self) -> std::ops::Range<usize> {
        0..self.points.len()
    }

    pub fn origin(&self) -> &[usize] {
        &self.origin
    }

    pub fn is_missing(&self, id: usize, feature: usize) -> bool {
        self.missing[id].binary_search(&(feature as u32)).is_ok()
    }

    pub fn missing(&self) -> &[Vec<u32>] {
        &self.missing
    }

    pub fn texts(&self) -> Option<&[String]> {
        self.texts.as_deref()
    }

    pub fn text(&self, id: usize) -> Option<&str> {
        self.texts.as_ref().map(|t| t[id].as_str())
    }

    pub fn vocabulary(&self) -> Option<&Arc<Vocabulary>> {
        self.vocab.as_ref()
    }

    pub fn truth(&self) -> Option<&[u8]> {
        self.truth.as_deref()
    }

    /// Features handed to end models: the points themselves for numeric data,
    /// token counts for text.
    pub fn model_features(&self) -> Vec<FeatureVector> {
        match (self.kind, &self.texts, &self.vocab) {
            (DataKind::Text, Some(texts), Some(vocab)) => texts
                .iter()
                .map(|t| vectorize(&tokenize(t), vocab, VectorMode::Counts))
                .collect(),
            _ => self.points.clone(),
        }
    }

    /// Restricts the dataset to `ids`, in the given order.
    pub fn subset(&self, ids: &[usize]) -> Dataset {
        Dataset {
            kind: self.kind,
            feature_names: self.feature_names.clone(),
            points: ids.iter().map(|&i| self.points[i].clone()).collect(),
            origin: ids.iter().map(|&i| self.origin[i]).collect(),
            missing: ids.iter().map(|&i| self.missing[i].clone()).collect(),
            texts: self
                .texts
                .as_ref()
                .map(|t| ids.iter().map(|&i| t[i].clone()).collect()),
            vocab: self.vocab.clone(),
            truth: self
                .truth
                .as_ref()
                .map(|t| ids.iter().map(|&i| t[i]).collect()),
        }
    }

    /// Writes the dataset back out with the same column layout it was
    /// loaded with. Absent numeric cells are written empty.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        match self.kind {
            DataKind::Numeric => {
                let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
                if self.truth.is_some() {
                    header.push("truth");
                }
                w.write_record(&header)?;
                for (id, p) in self.points.iter().enumerate() {
                    let mut rec: Vec<String> = (0..self.dim())
                        .map(|f| {
                            if self.is_missing(id, f) {
                                String::new()
                            } else {
                                p.get(f).to_string()
                            }
                        })
                        .collect();
                    if let Some(t) = &self.truth {
                        rec.push(t[id].to_string());
                    }
                    w.write_record(&rec)?;
                }
            }
            DataKind::Text => {
                let texts = self.texts.as_ref().expect("text dataset has texts");
                if let Some(t) = &self.truth {
                    w.write_record(["text", "truth"])?;
                    for (s, y) in texts.iter().zip(t) {
                        w.write_record([s.as_str(), &y.to_string()])?;
                    }
                } else {
                    w.write_record(["text"])?;
                    for s in texts {
                        w.write_record([s.as_str()])?;
                    }
                }
            }
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

fn check_truth(truth: &Option<Vec<u8>>, k: usize) -> Result<()> {
    if let Some(t) = truth {
        if t.len() != k {
            return Err(Error::Dimension {
                expected: k,
                got: t.len(),
            });
        }
        if t.iter().any(|&y| y > 1) {
            return Err(Error::Input("truth labels must be 0 or 1".into()));
        }
    }
    Ok(())
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn reader_for(path: &Path, delimiter: Option<u8>) -> Result<csv::Reader<File>> {
    let file = open(path)?;
    let delimiter = match delimiter {
        Some(d) => d,
        None => sniff_delimiter(path)?,
    };
    Ok(csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .from_reader(file))
}

/// Picks `;` when the header line contains more semicolons than commas (the
/// UCI wine files ship that way), `,` otherwise.
fn sniff_delimiter(path: &Path) -> Result<u8> {
    let mut first = String::new();
    BufReader::new(open(path)?)
        .read_line(&mut first)
        .map_err(|e| Error::io(path, e))?;
    let semis = first.matches(';').count();
    let commas = first.matches(',').count();
    Ok(if semis > commas { b';' } else { b',' })
}

fn is_missing_marker(cell: &str) -> bool {
    MISSING_MARKERS.contains(&cell.trim())
}

/// Loads a numeric table. Absent cells are imputed with the column mean of
/// present values and remembered in the missing mask; rows missing more than
/// half of their features, or missing the truth value, are dropped.
pub fn load_tabular(path: impl AsRef<Path>, opts: &TabularOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let mut rdr = reader_for(path, opts.delimiter)?;
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column `{name}` not found in {}", path.display())))
    };

    let truth_idx = opts.truth_column.as_deref().map(column).transpose()?;
    let feature_names: Vec<String> = match &opts.feature_columns {
        Some(cols) => cols.clone(),
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, h)| Some(*i) != truth_idx && !opts.exclude_columns.contains(h))
            .map(|(_, h)| h.clone())
            .collect(),
    };
    let feature_idx: Vec<usize> = feature_names
        .iter()
        .map(|f| column(f))
        .collect::<Result<_>>()?;
    if feature_idx.is_empty() {
        return Err(Error::Schema("no feature columns selected".into()));
    }

    let n = feature_idx.len();
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    let mut truth = truth_idx.map(|_| Vec::new());
    let mut origin = Vec::new();
    let (mut dropped_sparse, mut dropped_truth) = (0usize, 0usize);

    for (row_no, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(row_no as u64 + 2);
        let mut values = Vec::with_capacity(n);
        for (&ci, name) in feature_idx.iter().zip(&feature_names) {
            let cell = record.get(ci).unwrap_or("");
            if is_missing_marker(cell) {
                values.push(None);
                continue;
            }
            let v: f64 = cell.trim().parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                Error::Parse {
                    line,
                    column: name.clone(),
                    value: cell.to_string(),
                }
            })?;
            values.push(Some(v));
        }
        let absent = values.iter().filter(|v| v.is_none()).count();
        if absent * 2 > n {
            dropped_sparse += 1;
            continue;
        }
        if let (Some(ti), Some(out)) = (truth_idx, truth.as_mut()) {
            let cell = record.get(ti).unwrap_or("");
            if is_missing_marker(cell) {
                dropped_truth += 1;
                continue;
            }
            let y = opts.truth_transform.apply(cell).ok_or_else(|| Error::Parse {
                line,
                column: opts.truth_column.clone().unwrap_or_default(),
                value: cell.to_string(),
            })?;
            out.push(y);
        }
        rows.push(values);
        origin.push(row_no);
    }
    if dropped_sparse > 0 {
        log::warn!(
            "{}: dropped {dropped_sparse} rows missing more than half of their features",
            path.display()
        );
    }
    if dropped_truth > 0 {
        log::warn!("{}: dropped {dropped_truth} rows without a truth value", path.display());
    }

    let mut means = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for row in &rows {
        for (f, v) in row.iter().enumerate() {
            if let Some(v) = v {
                means[f] += v;
                counts[f] += 1;
            }
        }
    }
    for (m, c) in means.iter_mut().zip(&counts) {
        *m = if *c > 0 { *m / *c as f64 } else { 0.0 };
    }

    let mut missing = Vec::with_capacity(rows.len());
    let dense: Vec<Vec<f64>> = rows
        .into_iter()
        .map(|row| {
            let mut absent = Vec::new();
            let vals = row
                .into_iter()
                .enumerate()
                .map(|(f, v)| {
                    v.unwrap_or_else(|| {
                        absent.push(f as u32);
                        means[f]
                    })
                })
                .collect();
            missing.push(absent);
            vals
        })
        .collect();

    let mut d = Dataset::numeric_with_missing(feature_names, dense, missing, truth)?;
    d.origin = origin;
    Ok(d)
}

/// Loads a text corpus from a CSV with a designated text column.
pub fn load_text_csv(
    path: impl AsRef<Path>,
    text_column: &str,
    truth_column: Option<&str>,
    truth_transform: TruthTransform,
) -> Result<Dataset> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(open(path)?);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column `{name}` not found in {}", path.display())))
    };
    let ti = find(text_column)?;
    let yi = truth_column.map(find).transpose()?;
    let mut texts = Vec::new();
    let mut truth = yi.map(|_| Vec::new());
    for (row_no, record) in rdr.records().enumerate() {
        let record = record?;
        texts.push(record.get(ti).unwrap_or("").to_string());
        if let (Some(yi), Some(out)) = (yi, truth.as_mut()) {
            let cell = record.get(yi).unwrap_or("");
            let y = truth_transform.apply(cell).ok_or_else(|| Error::Parse {
                line: record.position().map(|p| p.line()).unwrap_or(row_no as u64 + 2),
                column: truth_column.unwrap_or_default().to_string(),
                value: cell.to_string(),
            })?;
            out.push(y);
        }
    }
    Dataset::from_texts(texts, truth, None)
}

/// Loads a text corpus stored one record per line, without labels.
pub fn load_text_lines(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let texts = BufReader::new(open(path)?)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path, e))?;
    Dataset::from_texts(texts, None, None)
}

/// Per-feature minima and maxima of a numeric dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(d: &Dataset) -> Result<Self> {
        if d.kind != DataKind::Numeric {
            return Err(Error::Input("min-max scaling needs a numeric dataset".into()));
        }
        if d.is_empty() {
            return Err(Error::Input("cannot fit a scaler on an empty dataset".into()));
        }
        let n = d.dim();
        let mut mins = vec![f64::INFINITY; n];
        let mut maxs = vec![f64::NEG_INFINITY; n];
        for p in &d.points {
            p.for_each_entry(|f, v| {
                mins[f] = mins[f].min(v);
                maxs[f] = maxs[f].max(v);
            });
        }
        Ok(Self { mins, maxs })
    }

    /// Constant features map to 0. Values outside the fitted range are clamped.
    pub fn transform(&self, d: &Dataset) -> Result<Dataset> {
        if d.kind != DataKind::Numeric {
            return Err(Error::Input("min-max scaling needs a numeric dataset".into()));
        }
        if d.dim() != self.mins.len() {
            return Err(Error::Dimension {
                expected: self.mins.len(),
                got: d.dim(),
            });
        }
        let mut out = d.clone();
        for p in &mut out.points {
            if let FeatureVector::Dense(v) = p {
                for (f, x) in v.iter_mut().enumerate() {
                    let range = self.maxs[f] - self.mins[f];
                    *x = if range > 0.0 {
                        ((*x - self.mins[f]) / range).clamp(0.0, 1.0)
                    } else {
                        0.0
                    };
                }
            }
        }
        Ok(out)
    }
}

pub fn minmax_normalize(d: &Dataset) -> Result<Dataset> {
    MinMaxScaler::fit(d)?.transform(d)
}

/// Seeded shuffle split. The first part receives `clamp(floor(k * fraction),
/// 1, k - 1)` points; both parts keep source order.
pub fn split(d: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Input(format!(
            "train fraction must lie strictly between 0 and 1, got {train_fraction}"
        )));
    }
    let k = d.len();
    if k < 2 {
        return Err(Error::Input(format!("cannot split a dataset of {k} points")));
    }
    let n_train = ((k as f64 * train_fraction).floor() as usize).clamp(1, k - 1);
    let mut ids: Vec<usize> = (0..k).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (a, b) = ids.split_at(n_train);
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    Ok((d.subset(&a), d.subset(&b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn column(d: &Dataset, f: usize) -> Vec<f64> {
        d.points().iter().map(|p| p.get(f)).collect()
    }

    #[test]
    fn tokenize_lowercases_and_strips_punctuation() {
        assert_eq!(tokenize("Check OUT my channel!"), ["check", "out", "my", "channel"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("a--b  c"), ["a", "b", "c"]);
    }

    #[test]
    fn vectorize_counts_and_onehot() {
        let vocab = Vocabulary::from_tokens(["a".to_string(), "b".to_string()]);
        let toks = ["a", "a", "b", "zzz"];
        let counts = vectorize(&toks, &vocab, VectorMode::Counts);
        assert_eq!(counts.get(0), 2.0);
        assert_eq!(counts.get(1), 1.0);
        let onehot = vectorize(&toks, &vocab, VectorMode::OneHot);
        assert_eq!(onehot.get(0), 1.0);
        assert_eq!(onehot.get(1), 1.0);
    }

    #[test]
    fn wine_truth_threshold() {
        assert_eq!(label_wine_truth(6).unwrap(), 1);
        assert_eq!(label_wine_truth(5).unwrap(), 0);
        assert_eq!(label_wine_truth(0).unwrap(), 0);
        assert!(label_wine_truth(11).is_err());
        assert!(label_wine_truth(-1).is_err());
    }

    #[test]
    fn minmax_maps_to_unit_interval() {
        let d = Dataset::numeric(
            vec!["a".into(), "c".into()],
            vec![vec![2.0, 3.0], vec![4.0, 3.0], vec![6.0, 3.0]],
            None,
        )
        .unwrap();
        let n = minmax_normalize(&d).unwrap();
        assert_eq!(column(&n, 0), [0.0, 0.5, 1.0]);
        assert_eq!(column(&n, 1), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn minmax_rejects_empty() {
        let d = Dataset::numeric(vec!["a".into()], vec![], None).unwrap();
        assert!(minmax_normalize(&d).is_err());
    }

    #[test]
    fn load_tabular_basic_and_missing() {
        let f = write_tmp("x,y,label\n0.5,1,1\n,2,0\n1.5,NA,1\n,,0\n");
        let d = load_tabular(
            f.path(),
            &TabularOptions {
                truth_column: Some("label".into()),
                ..Default::default()
            },
        )
        .unwrap();
        // last row has both features absent and is dropped
        assert_eq!(d.len(), 3);
        assert_eq!(d.feature_names(), ["x", "y"]);
        assert_eq!(d.truth().unwrap(), [1, 0, 1]);
        assert!(d.is_missing(1, 0));
        assert!(d.is_missing(2, 1));
        assert!(!d.is_missing(0, 0));
        // imputed with the column mean of present values
        assert_eq!(d.point(1).get(0), 1.0);
        assert_eq!(d.point(2).get(1), 1.5);
        assert_eq!(d.origin(), [0, 1, 2]);
    }

    #[test]
    fn load_tabular_single_row_round_trips() {
        let f = write_tmp("a,b\n0.5,0.125\n");
        let d = load_tabular(f.path(), &TabularOptions::default()).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.point(0).to_dense(), [0.5, 0.125]);
    }

    #[test]
    fn load_tabular_empty_after_header() {
        let f = write_tmp("a,b\n");
        let d = load_tabular(f.path(), &TabularOptions::default()).unwrap();
        assert_eq!(d.len(), 0);
        assert_eq!(d.dim(), 2);
    }

    #[test]
    fn load_tabular_errors() {
        let f = write_tmp("a,b\n1,2\n3,oops\n");
        match load_tabular(f.path(), &TabularOptions::default()) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(column, "b");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let f = write_tmp("a,b\n1,2\n");
        let opts = TabularOptions {
            feature_columns: Some(vec!["nope".into()]),
            ..Default::default()
        };
        assert!(matches!(load_tabular(f.path(), &opts), Err(Error::Schema(_))));
    }

    #[test]
    fn load_tabular_semicolon_and_quality_truth() {
        let f = write_tmp("\"alcohol\";\"quality\"\n9.4;5\n12.1;7\n");
        let d = load_tabular(
            f.path(),
            &TabularOptions {
                truth_column: Some("quality".into()),
                truth_transform: TruthTransform::WineQuality,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(d.truth().unwrap(), [0, 1]);
        assert_eq!(d.dim(), 1);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let rows = (0..10).map(|i| vec![i as f64]).collect();
        let d = Dataset::numeric(vec!["x".into()], rows, Some(vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1])).unwrap();
        let (a, b) = split(&d, 0.3, 7).unwrap();
        assert_eq!((a.len(), b.len()), (3, 7));
        let (a2, b2) = split(&d, 0.3, 7).unwrap();
        assert_eq!(a.origin(), a2.origin());
        assert_eq!(b.origin(), b2.origin());
        let mut all: Vec<usize> = a.origin().iter().chain(b.origin()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        // truth travels with its point
        for part in [&a, &b] {
            for (id, &o) in part.origin().iter().enumerate() {
                assert_eq!(part.truth().unwrap()[id], (o % 2) as u8);
                assert_eq!(part.point(id).get(0), o as f64);
            }
        }
        assert!(split(&d, 0.0, 1).is_err());
        assert!(split(&d, 1.0, 1).is_err());
    }

    #[test]
    fn split_red_wine_sized() {
        let rows = (0..1599).map(|i| vec![i as f64]).collect();
        let d = Dataset::numeric(vec!["x".into()], rows, None).unwrap();
        let (a, b) = split(&d, 0.3, 0).unwrap();
        assert_eq!((a.len(), b.len()), (479, 1120));
    }

    #[test]
    fn text_dataset_counts_and_onehot() {
        let d = Dataset::from_texts(vec!["a a b".into(), "b c".into()], None, None).unwrap();
        assert_eq!(d.feature_names(), ["a", "b", "c"]);
        assert_eq!(d.point(0).get(0), 1.0);
        let counts = d.model_features();
        assert_eq!(counts[0].get(0), 2.0);
        assert_eq!(counts[1].get(2), 1.0);
    }

    #[test]
    fn text_revectorize_ignores_oov() {
        let train = Dataset::from_texts(vec!["spam spam".into()], None, None).unwrap();
        let test = Dataset::from_texts(vec!["spam eggs".into()], None, None).unwrap();
        let test = test.with_vocabulary(train.vocabulary().unwrap().clone()).unwrap();
        assert_eq!(test.dim(), 1);
        assert_eq!(test.model_features()[0].get(0), 1.0);
    }

    #[test]
    fn write_csv_round_trip() {
        let f = write_tmp("x,y,t\n0.5,,1\n0.25,2,0\n");
        let opts = TabularOptions {
            truth_column: Some("t".into()),
            ..Default::default()
        };
        let d = load_tabular(f.path(), &opts).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        d.write_csv(out.path()).unwrap();
        let back = load_tabular(
            out.path(),
            &TabularOptions {
                truth_column: Some("truth".into()),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(back.truth(), d.truth());
        assert_eq!(back.missing(), d.missing());
        assert_eq!(back.point(1).to_dense(), d.point(1).to_dense());
    }

    #[test]
    fn sparse_vector_normalizes_entries() {
        let s = SparseVector::new(4, vec![(2, 1.0), (0, 0.0), (2, 2.0), (1, 5.0)]).unwrap();
        assert_eq!(s.entries(), &[(1, 5.0), (2, 3.0)]);
        assert!(SparseVector::new(2, vec![(2, 1.0)]).is_err());
    }
}
