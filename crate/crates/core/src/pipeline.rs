//! Config-driven runs: load, split, label, optionally augment, aggregate,
//! train and score, plus one-parameter sweeps over that pipeline.
//!
//! A config is a TOML document with `[dataset]`, `[lfs]`, `[reinforce]`,
//! `[model]` and `[run]` sections and an optional `[sweep]`. Relative paths
//! are resolved against the directory holding the config file.
//!
//! The dataset is split once per run seed into a gold part
//! (`run.train_fraction`, 30% by default) and an unlabeled part. Weak arms
//! apply the LFs to the unlabeled part, train on the aggregated labels and
//! are scored on the gold part. The supervised arm trains on gold truth and
//! is scored on the unlabeled part's truth, or on the gold part itself with
//! `supervised_eval = "same_as_train"`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::{majority_vote, training_set_from};
use crate::dataset::{
    load_tabular, load_text_csv, minmax_normalize, split, DataKind, Dataset, TabularOptions, TruthTransform,
};
use crate::distance::{MetricKind, MetricSpec, DEFAULT_MAHALANOBIS_RIDGE, DEFAULT_MINKOWSKI_P};
use crate::error::{Error, Result};
use crate::lf::{apply_all, lf_stats, load_lf_set, LabelMatrix, LfStatsSummary};
use crate::models::{evaluate, predict, train, Metrics, ModelSpec};
use crate::reinforce::{
    reinforce, AugmentMode, Boundaries, IqrPopulation, IqrScope, ReinforceParams, DEFAULT_XI,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Label used in reports; defaults to the file stem.
    #[serde(default)]
    pub name: Option<String>,
    pub path: PathBuf,
    #[serde(default = "default_kind")]
    pub kind: DataKind,
    #[serde(default)]
    pub feature_columns: Option<Vec<String>>,
    #[serde(default)]
    pub exclude_columns: Vec<String>,
    #[serde(default)]
    pub truth_column: Option<String>,
    #[serde(default)]
    pub truth_transform: TruthTransform,
    /// Column holding the document, for text datasets.
    #[serde(default)]
    pub text_column: Option<String>,
    #[serde(default = "yes")]
    pub normalize: bool,
    /// Seeded subsample when the file has more rows than this.
    #[serde(default)]
    pub max_points: Option<usize>,
}

fn default_kind() -> DataKind {
    DataKind::Numeric
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LfConfig {
    pub path: PathBuf,
    /// Use only the first `limit` functions of the file.
    #[serde(default)]
    pub limit: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    FixedEpsilon,
    IqrFactor,
    #[default]
    AutoIqr,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReinforceConfig {
    #[serde(default)]
    pub mode: ModeName,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub h_iqr: Option<f64>,
    /// Distance cutoff; absent means no cutoff.
    #[serde(default)]
    pub epsilon_d: Option<f64>,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "default_xi")]
    pub xi: f64,
    #[serde(default)]
    pub iqr_scope: IqrScope,
    #[serde(default)]
    pub iqr_population: IqrPopulation,
    #[serde(default = "default_metric")]
    pub metric: MetricKind,
    #[serde(default = "default_p")]
    pub minkowski_p: f64,
    #[serde(default = "default_ridge")]
    pub mahalanobis_ridge: f64,
}

fn one() -> f64 {
    1.0
}
fn default_xi() -> f64 {
    DEFAULT_XI
}
fn default_metric() -> MetricKind {
    MetricKind::Euclidean
}
fn default_p() -> f64 {
    DEFAULT_MINKOWSKI_P
}
fn default_ridge() -> f64 {
    DEFAULT_MAHALANOBIS_RIDGE
}

impl Default for ReinforceConfig {
    fn default() -> Self {
        Self {
            mode: ModeName::AutoIqr,
            epsilon: None,
            h_iqr: None,
            epsilon_d: None,
            alpha: 1.0,
            beta: 1.0,
            xi: DEFAULT_XI,
            iqr_scope: IqrScope::Global,
            iqr_population: IqrPopulation::AbstainOnly,
            metric: MetricKind::Euclidean,
            minkowski_p: DEFAULT_MINKOWSKI_P,
            mahalanobis_ridge: DEFAULT_MAHALANOBIS_RIDGE,
        }
    }
}

impl ReinforceConfig {
    pub fn to_params(&self, sequential: bool) -> Result<ReinforceParams> {
        let mode = match self.mode {
            ModeName::FixedEpsilon => AugmentMode::FixedEpsilon {
                epsilon: self
                    .epsilon
                    .ok_or_else(|| Error::Config("mode `fixed_epsilon` needs `epsilon`".into()))?,
            },
            ModeName::IqrFactor => AugmentMode::IqrFactor {
                h: self
                    .h_iqr
                    .ok_or_else(|| Error::Config("mode `iqr_factor` needs `h_iqr`".into()))?,
            },
            ModeName::AutoIqr => AugmentMode::AutoIqr,
        };
        let mut metric = MetricSpec::new(self.metric);
        metric.p = self.minkowski_p;
        let p = ReinforceParams {
            alpha: self.alpha,
            beta: self.beta,
            epsilon_d: self.epsilon_d.unwrap_or(f64::INFINITY),
            mode,
            xi: self.xi,
            iqr_scope: self.iqr_scope,
            iqr_population: self.iqr_population,
            metric,
            mahalanobis_ridge: self.mahalanobis_ridge,
            sequential,
        };
        p.validate()?;
        p.metric.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    /// LFs and majority vote.
    Baseline,
    /// LFs, augmentation, then majority vote.
    Reinforced,
    /// Gold labels.
    Supervised,
}

impl Arm {
    pub fn name(self) -> &'static str {
        match self {
            Arm::Baseline => "baseline",
            Arm::Reinforced => "reinforced",
            Arm::Supervised => "supervised",
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Arm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Arm::Baseline),
            "reinforced" => Ok(Arm::Reinforced),
            "supervised" => Ok(Arm::Supervised),
            other => Err(Error::Config(format!("unknown arm {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupervisedEval {
    /// Score on the part the weak arms train on.
    #[default]
    Holdout,
    /// Score on the gold training part itself.
    SameAsTrain,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_arm")]
    pub arm: Arm,
    #[serde(default = "default_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    /// Runs use seeds `seed, seed + 1, ...`.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub supervised_eval: SupervisedEval,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub sequential: bool,
}

fn default_arm() -> Arm {
    Arm::Reinforced
}
fn default_fraction() -> f64 {
    0.3
}
fn default_repeats() -> usize {
    1
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            arm: Arm::Reinforced,
            train_fraction: 0.3,
            seed: 0,
            repeats: 1,
            supervised_eval: SupervisedEval::Holdout,
            out: None,
            sequential: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    NumLfs,
    HIqr,
    Epsilon,
    Metric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Number(f64),
    Name(String),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Number(v) => write!(f, "{v}"),
            SweepValue::Name(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<SweepValue>,
    /// Arms to run for every value; defaults to `run.arm`.
    #[serde(default)]
    pub arms: Option<Vec<Arm>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub lfs: Option<LfConfig>,
    #[serde(default)]
    pub reinforce: ReinforceConfig,
    #[serde(default = "ModelSpec::logreg")]
    pub model: ModelSpec,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl PipelineConfig {
    pub fn from_toml(src: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: PipelineConfig = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let src = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&src, base)
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn dataset_name(&self) -> String {
        self.dataset.name.clone().unwrap_or_else(|| {
            self.dataset
                .path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into())
        })
    }

    pub fn out_dir(&self) -> Option<PathBuf> {
        self.run.out.as_ref().map(|p| self.resolve(p))
    }

    /// Checks the settings a full run needs.
    pub fn validate(&self) -> Result<()> {
        let data = self.resolve(&self.dataset.path);
        if !data.is_file() {
            return Err(Error::Config(format!("dataset file {} does not exist", data.display())));
        }
        if self.dataset.truth_column.is_none() {
            return Err(Error::Config(format!(
                "arm `{}` needs `dataset.truth_column` to score the end model",
                self.run.arm
            )));
        }
        if self.dataset.kind == DataKind::Text && self.dataset.text_column.is_none() {
            return Err(Error::Config("text datasets need `dataset.text_column`".into()));
        }
        if !(self.run.train_fraction > 0.0 && self.run.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "run.train_fraction must lie in (0, 1), got {}",
                self.run.train_fraction
            )));
        }
        if self.run.repeats == 0 {
            return Err(Error::Config("run.repeats must be at least 1".into()));
        }
        if self.run.arm != Arm::Supervised {
            self.lf_path()?;
        }
        if self.run.arm == Arm::Reinforced {
            self.reinforce.to_params(self.run.sequential)?;
        }
        self.model.validate()
    }

    fn lf_path(&self) -> Result<PathBuf> {
        let lfs = self
            .lfs
            .as_ref()
            .ok_or_else(|| Error::Config(format!("arm `{}` needs an [lfs] section", self.run.arm)))?;
        let path = self.resolve(&lfs.path);
        if !path.is_file() {
            return Err(Error::Config(format!("LF file {} does not exist", path.display())));
        }
        Ok(path)
    }
}

/// Loads, normalizes and (if configured) subsamples the dataset.
pub fn load_dataset(cfg: &PipelineConfig) -> Result<Dataset> {
    let ds = &cfg.dataset;
    let path = cfg.resolve(&ds.path);
    if !path.is_file() {
        return Err(Error::Config(format!("dataset file {} does not exist", path.display())));
    }
    let mut d = match ds.kind {
        DataKind::Numeric => {
            let opts = TabularOptions {
                feature_columns: ds.feature_columns.clone(),
                exclude_columns: ds.exclude_columns.clone(),
                truth_column: ds.truth_column.clone(),
                truth_transform: ds.truth_transform,
                delimiter: None,
            };
            load_tabular(&path, &opts)?
        }
        DataKind::Text => {
            let col = ds
                .text_column
                .as_deref()
                .ok_or_else(|| Error::Config("text datasets need `dataset.text_column`".into()))?;
            load_text_csv(&path, col, ds.truth_column.as_deref(), ds.truth_transform)?
        }
    };
    if let Some(max) = ds.max_points {
        if d.len() > max {
            let mut ids: Vec<usize> = (0..d.len()).collect();
            ids.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.run.seed));
            ids.truncate(max);
            ids.sort_unstable();
            log::info!("subsampled {} of {} points", max, d.len());
            d = d.subset(&ids);
        }
    }
    if d.is_empty() {
        return Err(Error::Input(format!("{} has no data rows", path.display())));
    }
    if ds.kind == DataKind::Numeric && ds.normalize {
        d = minmax_normalize(&d)?;
    }
    Ok(d)
}

/// Gold and unlabeled parts for one seed. Text parts share a vocabulary
/// fitted on the part that trains the end model.
#[derive(Clone, Debug)]
pub struct Parts {
    pub gold: Dataset,
    pub unlabeled: Dataset,
}

pub fn split_for(cfg: &PipelineConfig, d: &Dataset, seed: u64, arm: Arm) -> Result<Parts> {
    let (gold, unlabeled) = split(d, cfg.run.train_fraction, seed)?;
    if d.kind() != DataKind::Text {
        return Ok(Parts { gold, unlabeled });
    }
    let (gold, unlabeled) = if arm == Arm::Supervised {
        let gold = gold.refit_vocabulary()?;
        let vocab = Arc::clone(gold.vocabulary().expect("text dataset"));
        (gold, unlabeled.with_vocabulary(vocab)?)
    } else {
        let unlabeled = unlabeled.refit_vocabulary()?;
        let vocab = Arc::clone(unlabeled.vocabulary().expect("text dataset"));
        (gold.with_vocabulary(vocab)?, unlabeled)
    };
    Ok(Parts { gold, unlabeled })
}

/// Applies the configured LFs (respecting `lfs.limit`) to `d`.
pub fn apply_lfs(cfg: &PipelineConfig, d: &Dataset) -> Result<LabelMatrix> {
    let path = cfg.lf_path()?;
    let mut lfs = load_lf_set(&path, d)?;
    if let Some(limit) = cfg.lfs.as_ref().and_then(|l| l.limit) {
        if limit == 0 || limit > lfs.len() {
            return Err(Error::Config(format!(
                "lfs.limit = {limit}, but {} defines {} functions",
                path.display(),
                lfs.len()
            )));
        }
        lfs.truncate(limit);
    }
    apply_all(&lfs, d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// Outcome of one seeded run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub seed: u64,
    pub status: RunStatus,
    pub error: Option<String>,
    pub gold_points: usize,
    pub unlabeled_points: usize,
    pub lf_stats_pre: Option<LfStatsSummary>,
    pub lf_stats_post: Option<LfStatsSummary>,
    /// Points with a majority-vote label before and after augmentation.
    pub labeled_pre: Option<usize>,
    pub labeled_post: Option<usize>,
    pub augmented_cells: Option<usize>,
    pub h_iqr: Option<f64>,
    pub boundaries: Option<Vec<Boundaries>>,
    /// Size of the end model's training set.
    pub labeled_count: Option<usize>,
    pub metrics: Option<Metrics>,
}

/// Wall-clock milliseconds per stage of one run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub seed: u64,
    pub apply_lfs_ms: f64,
    pub reinforce_ms: f64,
    pub aggregate_ms: f64,
    pub train_ms: f64,
    pub evaluate_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: String,
    pub arm: Arm,
    pub model: String,
    pub config: serde_json::Value,
    pub points: usize,
    pub runs: Vec<RunRow>,
    pub ok_runs: usize,
    /// Means over successful runs.
    pub mean: Option<Metrics>,
    pub mean_labeled_pre: Option<f64>,
    pub mean_labeled_post: Option<f64>,
    pub mean_labeled_count: Option<f64>,
    /// The only nondeterministic part of a report.
    pub timings: Vec<StageTimings>,
}

impl RunReport {
    /// JSON without the `timings` field; identical configs and seeds give
    /// identical output.
    pub fn stable_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timings");
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn run_once(cfg: &PipelineConfig, d: &Dataset, arm: Arm, seed: u64) -> (RunRow, StageTimings) {
    let mut row = RunRow {
        seed,
        status: RunStatus::Failed,
        error: None,
        gold_points: 0,
        unlabeled_points: 0,
        lf_stats_pre: None,
        lf_stats_post: None,
        labeled_pre: None,
        labeled_post: None,
        augmented_cells: None,
        h_iqr: None,
        boundaries: None,
        labeled_count: None,
        metrics: None,
    };
    let mut timings = StageTimings {
        seed,
        ..Default::default()
    };
    match run_stages(cfg, d, arm, seed, &mut row, &mut timings) {
        Ok(()) => row.status = RunStatus::Ok,
        Err(e) => {
            log::warn!("run with seed {seed} failed: {e}");
            row.error = Some(e.to_string());
        }
    }
    (row, timings)
}

fn run_stages(
    cfg: &PipelineConfig,
    d: &Dataset,
    arm: Arm,
    seed: u64,
    row: &mut RunRow,
    timings: &mut StageTimings,
) -> Result<()> {
    let parts = split_for(cfg, d, seed, arm)?;
    row.gold_points = parts.gold.len();
    row.unlabeled_points = parts.unlabeled.len();
    let gold_truth = parts
        .gold
        .truth()
        .ok_or_else(|| Error::Config("dataset has no truth column".into()))?
        .to_vec();

    let (train_x, train_y, test_x, test_y) = if arm == Arm::Supervised {
        let (test_x, test_y) = match cfg.run.supervised_eval {
            SupervisedEval::Holdout => (
                parts.unlabeled.model_features(),
                parts
                    .unlabeled
                    .truth()
                    .ok_or_else(|| Error::Config("dataset has no truth column".into()))?
                    .to_vec(),
            ),
            SupervisedEval::SameAsTrain => (parts.gold.model_features(), gold_truth.clone()),
        };
        (parts.gold.model_features(), gold_truth, test_x, test_y)
    } else {
        let t = Instant::now();
        let mat = apply_lfs(cfg, &parts.unlabeled)?;
        timings.apply_lfs_ms = ms(t);
        let pre = lf_stats(&mat);
        row.lf_stats_pre = Some(pre.summary());
        row.labeled_pre = Some(majority_vote(&mat).labeled_count());

        let mat = if arm == Arm::Reinforced {
            let t = Instant::now();
            let params = cfg.reinforce.to_params(cfg.run.sequential)?;
            let out = reinforce(&mat, &parts.unlabeled, &params)?;
            timings.reinforce_ms = ms(t);
            row.h_iqr = out.diagnostics.h_iqr;
            row.boundaries = Some(out.boundaries.clone());
            row.augmented_cells = Some(out.diagnostics.labeled_cells_post - out.diagnostics.labeled_cells_pre);
            out.matrix
        } else {
            mat
        };
        row.lf_stats_post = Some(lf_stats(&mat).summary());

        let t = Instant::now();
        let agg = majority_vote(&mat);
        row.labeled_post = Some(agg.labeled_count());
        let ts = training_set_from(&agg, &parts.unlabeled.model_features())?;
        timings.aggregate_ms = ms(t);
        (ts.features, ts.labels, parts.gold.model_features(), gold_truth)
    };
    row.labeled_count = Some(train_y.len());

    let t = Instant::now();
    let model = train(&cfg.model, &train_x, &train_y)?;
    timings.train_ms = ms(t);
    let t = Instant::now();
    let pred = predict(&model, &test_x)?;
    row.metrics = Some(evaluate(&pred, &test_y)?);
    timings.evaluate_ms = ms(t);
    Ok(())
}

fn mean_of(values: impl Iterator<Item = Option<usize>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().map(|x| x as f64).collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Runs the configured arm `run.repeats` times on an already loaded dataset.
pub fn run_loaded(cfg: &PipelineConfig, d: &Dataset) -> Result<RunReport> {
    cfg.validate()?;
    let arm = cfg.run.arm;
    let seeds: Vec<u64> = (0..cfg.run.repeats as u64).map(|r| cfg.run.seed + r).collect();
    let results: Vec<(RunRow, StageTimings)> = seeds.iter().map(|&s| run_once(cfg, d, arm, s)).collect();
    let (runs, timings): (Vec<RunRow>, Vec<StageTimings>) = results.into_iter().unzip();
    let ok: Vec<&RunRow> = runs.iter().filter(|r| r.status == RunStatus::Ok).collect();
    let metrics: Vec<Metrics> = ok.iter().filter_map(|r| r.metrics).collect();
    Ok(RunReport {
        dataset: cfg.dataset_name(),
        arm,
        model: cfg.model.name().to_string(),
        config: serde_json::to_value(cfg)?,
        points: d.len(),
        ok_runs: ok.len(),
        mean: Metrics::mean(&metrics),
        mean_labeled_pre: mean_of(ok.iter().map(|r| r.labeled_pre)),
        mean_labeled_post: mean_of(ok.iter().map(|r| r.labeled_post)),
        mean_labeled_count: mean_of(ok.iter().map(|r| r.labeled_count)),
        runs,
        timings,
    })
}

pub fn run(cfg: &PipelineConfig) -> Result<RunReport> {
    cfg.validate()?;
    let d = load_dataset(cfg)?;
    run_loaded(cfg, &d)
}

/// One (value, arm) cell of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub value: SweepValue,
    pub arm: Arm,
    pub status: RunStatus,
    pub error: Option<String>,
    pub report: Option<RunReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub dataset: String,
    pub parameter: SweepParameter,
    pub cells: Vec<SweepCell>,
}

/// Flat plot row: the swept value against scores and labeling statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: String,
    pub arm: Arm,
    pub status: RunStatus,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub labeled_pre: Option<f64>,
    pub labeled_post: Option<f64>,
    pub mean_coverage: Option<f64>,
    pub mean_overlaps: Option<f64>,
    pub mean_conflicts: Option<f64>,
    pub h_iqr: Option<f64>,
}

impl SweepReport {
    pub fn points(&self) -> Vec<SweepPoint> {
        self.cells
            .iter()
            .map(|c| {
                let rep = c.report.as_ref();
                let mean = rep.and_then(|r| r.mean);
                let first_ok = rep.and_then(|r| r.runs.iter().find(|x| x.status == RunStatus::Ok));
                let post = first_ok.and_then(|r| r.lf_stats_post.as_ref());
                SweepPoint {
                    value: c.value.to_string(),
                    arm: c.arm,
                    status: c.status,
                    accuracy: mean.map(|m| m.accuracy),
                    precision: mean.map(|m| m.precision),
                    recall: mean.map(|m| m.recall),
                    f1: mean.map(|m| m.f1),
                    labeled_pre: rep.and_then(|r| r.mean_labeled_pre),
                    labeled_post: rep.and_then(|r| r.mean_labeled_post),
                    mean_coverage: post.map(|s| s.mean_coverage),
                    mean_overlaps: post.map(|s| s.mean_overlaps),
                    mean_conflicts: post.map(|s| s.mean_conflicts),
                    h_iqr: first_ok.and_then(|r| r.h_iqr),
                }
            })
            .collect()
    }

    pub fn write_plot_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            for p in self.points() {
                w.serialize(p)?;
            }
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        write_atomic(path, &buf)
    }
}

/// Config for one sweep cell.
pub fn with_sweep_value(cfg: &PipelineConfig, param: SweepParameter, value: &SweepValue) -> Result<PipelineConfig> {
    let mut c = cfg.clone();
    let number = || match value {
        SweepValue::Number(v) => Ok(*v),
        SweepValue::Name(s) => s
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("sweep value {s:?} is not a number"))),
    };
    match param {
        SweepParameter::NumLfs => {
            let n = number()?;
            if n < 1.0 || n.fract() != 0.0 {
                return Err(Error::Config(format!("num_lfs must be a positive integer, got {n}")));
            }
            let lfs = c
                .lfs
                .as_mut()
                .ok_or_else(|| Error::Config("num_lfs sweep needs an [lfs] section".into()))?;
            lfs.limit = Some(n as usize);
        }
        SweepParameter::HIqr => {
            c.reinforce.mode = ModeName::IqrFactor;
            c.reinforce.h_iqr = Some(number()?);
        }
        SweepParameter::Epsilon => {
            c.reinforce.mode = ModeName::FixedEpsilon;
            c.reinforce.epsilon = Some(number()?);
        }
        SweepParameter::Metric => {
            let name = match value {
                SweepValue::Name(s) => s.clone(),
                SweepValue::Number(v) => v.to_string(),
            };
            c.reinforce.metric = name.parse()?;
        }
    }
    c.sweep = None;
    Ok(c)
}

/// Runs every (value, arm) cell. Failing cells are recorded, not fatal.
pub fn sweep(cfg: &PipelineConfig) -> Result<SweepReport> {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("no [sweep] section".into()))?;
    if spec.values.is_empty() {
        return Err(Error::Config("sweep.values is empty".into()));
    }
    let arms = spec.arms.clone().unwrap_or_else(|| vec![cfg.run.arm]);
    if arms.is_empty() {
        return Err(Error::Config("sweep.arms is empty".into()));
    }
    let d = load_dataset(cfg)?;
    let jobs: Vec<(SweepValue, Arm)> = spec
        .values
        .iter()
        .flat_map(|v| arms.iter().map(move |&a| (v.clone(), a)))
        .collect();
    let cell = |(value, arm): &(SweepValue, Arm)| {
        let outcome = with_sweep_value(cfg, spec.parameter, value).and_then(|mut c| {
            c.run.arm = *arm;
            run_loaded(&c, &d)
        });
        match outcome {
            Ok(rep) if rep.ok_runs > 0 => SweepCell {
                value: value.clone(),
                arm: *arm,
                status: RunStatus::Ok,
                error: None,
                report: Some(rep),
            },
            Ok(rep) => SweepCell {
                value: value.clone(),
                arm: *arm,
                status: RunStatus::Failed,
                error: rep.runs.iter().find_map(|r| r.error.clone()),
                report: Some(rep),
            },
            Err(e) => SweepCell {
                value: value.clone(),
                arm: *arm,
                status: RunStatus::Failed,
                error: Some(e.to_string()),
                report: None,
            },
        }
    };
    let cells: Vec<SweepCell> = if cfg.run.sequential {
        jobs.iter().map(cell).collect()
    } else {
        jobs.par_iter().map(cell).collect()
    };
    Ok(SweepReport {
        dataset: cfg.dataset_name(),
        parameter: spec.parameter,
        cells,
    })
}

/// Writes via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// `report.json` plus one `metrics.csv` row per run.
pub fn write_run_outputs(dir: &Path, report: &RunReport) -> Result<()> {
    write_atomic(&dir.join("report.json"), serde_json::to_string_pretty(report)?.as_bytes())?;
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record([
            "dataset", "arm", "model", "seed", "status", "accuracy", "precision", "recall", "f1", "labeled_count",
        ])?;
        for r in &report.runs {
            let m = r.metrics;
            let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            w.write_record([
                report.dataset.clone(),
                report.arm.to_string(),
                report.model.clone(),
                r.seed.to_string(),
                if r.status == RunStatus::Ok { "ok" } else { "failed" }.to_string(),
                f(m.map(|m| m.accuracy)),
                f(m.map(|m| m.precision)),
                f(m.map(|m| m.recall)),
                f(m.map(|m| m.f1)),
                r.labeled_count.map(|c| c.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(dir, e))?;
    }
    write_atomic(&dir.join("metrics.csv"), &buf)
}
