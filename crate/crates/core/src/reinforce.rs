//! Gravitation-based label augmentation.
//!
//! Every point an LF labels attracts the points that LF abstains on, with
//! strength `beta / distance^alpha` inside the cutoff `epsilon_d`, signed by
//! the label (positive for 1, negative for 0). The signed attractions are
//! summed per abstain cell; cells whose sum falls below `b_neg` become 0 and
//! those above `b_pos` become 1. Boundaries are either a fixed symmetric
//! threshold or derived from the quartiles of the summed effects.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::majority_vote;
use crate::dataset::Dataset;
use crate::distance::{distance, DistanceCache, MetricSpec, DEFAULT_MAHALANOBIS_RIDGE};
use crate::error::{Error, Result};
use crate::lf::{lf_stats, LabelMatrix, LfStats, ABSTAIN};

pub const DEFAULT_XI: f64 = 0.35;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AugmentMode {
    /// `b_neg = -epsilon`, `b_pos = epsilon`.
    FixedEpsilon { epsilon: f64 },
    /// Quartile boundaries widened by `h` interquartile ranges.
    IqrFactor { h: f64 },
    /// Like `IqrFactor`, with `h = xi * sum(coverage) * sum(overlaps) * sum(conflicts)`.
    AutoIqr,
}

impl fmt::Display for AugmentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AugmentMode::FixedEpsilon { epsilon } => write!(f, "fixed_epsilon({epsilon})"),
            AugmentMode::IqrFactor { h } => write!(f, "iqr_factor({h})"),
            AugmentMode::AutoIqr => f.write_str("auto_iqr"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IqrScope {
    /// One boundary pair from all LFs' effects pooled.
    #[default]
    Global,
    /// One boundary pair per LF column.
    PerLf,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IqrPopulation {
    /// Quartiles over abstain cells only.
    #[default]
    AbstainOnly,
    /// Quartiles over every cell, including the zeros of labeled cells.
    AllCells,
}

#[derive(Clone, Debug)]
pub struct ReinforceParams {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon_d: f64,
    pub mode: AugmentMode,
    pub xi: f64,
    pub iqr_scope: IqrScope,
    pub iqr_population: IqrPopulation,
    pub metric: MetricSpec,
    pub mahalanobis_ridge: f64,
    /// Single-threaded aggregation.
    pub sequential: bool,
}

impl Default for ReinforceParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            epsilon_d: f64::INFINITY,
            mode: AugmentMode::AutoIqr,
            xi: DEFAULT_XI,
            iqr_scope: IqrScope::Global,
            iqr_population: IqrPopulation::AbstainOnly,
            metric: MetricSpec::euclidean(),
            mahalanobis_ridge: DEFAULT_MAHALANOBIS_RIDGE,
            sequential: false,
        }
    }
}

impl ReinforceParams {
    pub fn fixed(epsilon: f64, epsilon_d: f64) -> Self {
        Self {
            mode: AugmentMode::FixedEpsilon { epsilon },
            epsilon_d,
            ..Self::default()
        }
    }

    pub fn iqr(h: f64) -> Self {
        Self {
            mode: AugmentMode::IqrFactor { h },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::Config(format!("{what} out of range: {v}")));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha", self.alpha);
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta", self.beta);
        }
        if !(self.epsilon_d > 0.0) {
            return bad("epsilon_d", self.epsilon_d);
        }
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return bad("xi", self.xi);
        }
        match self.mode {
            AugmentMode::FixedEpsilon { epsilon } if !(epsilon >= 0.0) => bad("epsilon", epsilon),
            AugmentMode::IqrFactor { h } if !(h >= 0.0 && h.is_finite()) => bad("h_iqr", h),
            _ => Ok(()),
        }
    }
}

/// Attraction of one labeled point on an abstain point at distance `dist`.
///
/// Distance zero (a duplicate point) is clamped to `duplicate_floor`, the
/// smallest nonzero distance observed.
pub fn effect(label: u8, dist: f64, p: &ReinforceParams, duplicate_floor: f64) -> f64 {
    if !(dist < p.epsilon_d) {
        return 0.0;
    }
    let d = if dist > 0.0 { dist } else { duplicate_floor };
    let magnitude = p.beta / d.powf(p.alpha);
    if label == 1 {
        magnitude
    } else {
        -magnitude
    }
}

/// k×m matrix of summed effects; zero on labeled cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl EffectMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, l: usize) -> f64 {
        self.data[i * self.cols + l]
    }

    pub fn set(&mut self, i: usize, l: usize, v: f64) {
        self.data[i * self.cols + l] = v;
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }
}

/// Counters from one aggregation pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregationStats {
    /// Smallest nonzero distance seen between an abstain and a labeled point.
    pub d_min: Option<f64>,
    pub duplicate_pairs: usize,
    pub pairs_visited: usize,
    pub distance_computations: usize,
}

struct CellSum {
    sum: f64,
    /// Net signed count of zero-distance labeled neighbours.
    duplicates: i64,
    duplicate_pairs: usize,
    visited: usize,
    d_min: f64,
}

/// Sums the signed attractions for every abstain cell, using `cache` for
/// distances.
pub fn aggregate_effects_with(
    mat: &LabelMatrix,
    d: &Dataset,
    p: &ReinforceParams,
    cache: &DistanceCache,
) -> Result<(EffectMatrix, AggregationStats)> {
    if mat.rows() != d.len() {
        return Err(Error::Dimension {
            expected: d.len(),
            got: mat.rows(),
        });
    }
    if cache.len() != d.len() {
        return Err(Error::Dimension {
            expected: d.len(),
            got: cache.len(),
        });
    }
    p.validate()?;
    p.metric.validate()?;
    let (k, m) = (mat.rows(), mat.cols());

    let mut cells: Vec<(usize, usize, CellSum)> = Vec::new();
    for l in 0..m {
        let labeled: Vec<(usize, u8)> = (0..k)
            .filter_map(|j| match mat.get(j, l) {
                ABSTAIN => None,
                v => Some((j, v as u8)),
            })
            .collect();
        let abstain: Vec<usize> = (0..k).filter(|&i| mat.get(i, l) == ABSTAIN).collect();
        if labeled.is_empty() {
            continue;
        }
        let cell = |i: usize| -> Result<(usize, usize, CellSum)> {
            let mut acc = CellSum {
                sum: 0.0,
                duplicates: 0,
                duplicate_pairs: 0,
                visited: 0,
                d_min: f64::INFINITY,
            };
            for &(j, label) in &labeled {
                let dist = cache.get_or_compute(i, j, || distance(&p.metric, d.point(i), d.point(j)))?;
                acc.visited += 1;
                if dist == 0.0 {
                    acc.duplicate_pairs += 1;
                    acc.duplicates += if label == 1 { 1 } else { -1 };
                    continue;
                }
                acc.d_min = acc.d_min.min(dist);
                // the floor is irrelevant here, dist > 0
                acc.sum += effect(label, dist, p, dist);
            }
            Ok((i, l, acc))
        };
        let column: Vec<(usize, usize, CellSum)> = if p.sequential {
            abstain.iter().map(|&i| cell(i)).collect::<Result<_>>()?
        } else {
            abstain.par_iter().map(|&i| cell(i)).collect::<Result<_>>()?
        };
        cells.extend(column);
    }

    let d_min = cells
        .iter()
        .map(|(_, _, c)| c.d_min)
        .fold(f64::INFINITY, f64::min);
    let d_min = d_min.is_finite().then_some(d_min);
    // With no nonzero distance at all, duplicates are weighted as if at distance 1.
    let floor = d_min.unwrap_or(1.0);
    let dup_effect = effect(1, floor, &ReinforceParams { epsilon_d: f64::INFINITY, ..p.clone() }, floor);

    let mut effects = EffectMatrix::zeros(k, m);
    let mut stats = AggregationStats {
        d_min,
        ..Default::default()
    };
    for (i, l, c) in cells {
        let mut v = c.sum;
        if c.duplicates != 0 {
            v += c.duplicates as f64 * dup_effect;
        }
        effects.set(i, l, v);
        stats.duplicate_pairs += c.duplicate_pairs;
        stats.pairs_visited += c.visited;
    }
    stats.distance_computations = cache.computations();
    Ok((effects, stats))
}

/// [`aggregate_effects_with`] using a fresh cache.
pub fn aggregate_effects(mat: &LabelMatrix, d: &Dataset, p: &ReinforceParams) -> Result<EffectMatrix> {
    let cache = DistanceCache::new(d.len());
    aggregate_effects_with(mat, d, p, &cache).map(|(e, _)| e)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Boundaries {
    pub b_neg: f64,
    pub b_pos: f64,
}

impl Boundaries {
    pub fn symmetric(epsilon: f64) -> Self {
        Self {
            b_neg: -epsilon,
            b_pos: epsilon,
        }
    }

    /// Bounds that never fire.
    pub fn none() -> Self {
        Self {
            b_neg: f64::NEG_INFINITY,
            b_pos: f64::INFINITY,
        }
    }
}

/// Percentile `q` in [0, 100] of sorted data, interpolating linearly between
/// the closest ranks.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let pos = (q / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// First and third quartile of `values` (any order).
pub fn quartiles(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some((percentile_sorted(&v, 25.0), percentile_sorted(&v, 75.0)))
}

fn boundaries_from(values: &[f64], h: f64) -> Boundaries {
    match quartiles(values) {
        None => Boundaries { b_neg: 0.0, b_pos: 0.0 },
        Some((q1, q3)) => {
            let iqr = q3 - q1;
            Boundaries {
                b_neg: q1 - iqr * h,
                b_pos: q3 + iqr * h,
            }
        }
    }
}

fn population(effects: &EffectMatrix, mat: &LabelMatrix, which: IqrPopulation, column: Option<usize>) -> Vec<f64> {
    let cols: Vec<usize> = match column {
        Some(l) => vec![l],
        None => (0..effects.cols()).collect(),
    };
    let mut out = Vec::new();
    for i in 0..effects.rows() {
        for &l in &cols {
            if which == IqrPopulation::AllCells || mat.get(i, l) == ABSTAIN {
                out.push(effects.get(i, l));
            }
        }
    }
    out
}

/// One boundary pair per LF column; with global scope all pairs are equal.
/// An empty population yields `(0, 0)`.
pub fn iqr_boundaries(
    effects: &EffectMatrix,
    mat: &LabelMatrix,
    h: f64,
    scope: IqrScope,
    which: IqrPopulation,
) -> Result<Vec<Boundaries>> {
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::Config(format!("IQR factor must be non-negative, got {h}")));
    }
    if effects.rows() != mat.rows() || effects.cols() != mat.cols() {
        return Err(Error::Dimension {
            expected: mat.rows() * mat.cols(),
            got: effects.rows() * effects.cols(),
        });
    }
    Ok(match scope {
        IqrScope::Global => {
            let b = boundaries_from(&population(effects, mat, which, None), h);
            vec![b; mat.cols()]
        }
        IqrScope::PerLf => (0..mat.cols())
            .map(|l| boundaries_from(&population(effects, mat, which, Some(l)), h))
            .collect(),
    })
}

/// IQR factor from the pre-augmentation LF statistics.
pub fn auto_h_iqr(stats: &LfStats, xi: f64) -> f64 {
    xi * stats.sum_coverage() * stats.sum_overlaps() * stats.sum_conflicts()
}

/// Fills abstain cells whose effect lies strictly outside the column's
/// boundaries. Labeled cells are never touched.
pub fn augment(mat: &LabelMatrix, effects: &EffectMatrix, bounds: &[Boundaries]) -> Result<LabelMatrix> {
    if effects.rows() != mat.rows() || effects.cols() != mat.cols() || bounds.len() != mat.cols() {
        return Err(Error::Input("matrix, effects and boundaries disagree in shape".into()));
    }
    let mut out = mat.clone();
    for i in 0..mat.rows() {
        for (l, b) in bounds.iter().enumerate() {
            if mat.get(i, l) != ABSTAIN {
                continue;
            }
            let e = effects.get(i, l);
            if e < b.b_neg {
                out.set(i, l, 0);
            }
            if e > b.b_pos {
                out.set(i, l, 1);
            }
        }
    }
    Ok(out)
}

/// Distribution of one LF's effects over its abstain cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectSummary {
    pub lf: String,
    pub count: usize,
    pub min: Option<f64>,
    pub q1: Option<f64>,
    pub median: Option<f64>,
    pub q3: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
}

fn summarize(name: &str, values: &[f64]) -> EffectSummary {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let stat = |q: f64| (!v.is_empty()).then(|| percentile_sorted(&v, q));
    EffectSummary {
        lf: name.to_string(),
        count: v.len(),
        min: v.first().copied(),
        q1: stat(25.0),
        median: stat(50.0),
        q3: stat(75.0),
        max: v.last().copied(),
        mean: (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub mode: AugmentMode,
    /// IQR factor used, for the IQR modes.
    pub h_iqr: Option<f64>,
    /// Set when the automatic factor came out as exactly zero, which puts
    /// the boundaries on the quartiles themselves.
    pub h_iqr_degenerate: bool,
    pub boundaries: Vec<Boundaries>,
    pub stats_pre: LfStats,
    pub stats_post: LfStats,
    pub labeled_pre: usize,
    pub labeled_post: usize,
    pub covered_rows_pre: usize,
    pub covered_rows_post: usize,
    pub labeled_cells_pre: usize,
    pub labeled_cells_post: usize,
    pub augmented_to_zero: Vec<usize>,
    pub augmented_to_one: Vec<usize>,
    pub effect_summaries: Vec<EffectSummary>,
    pub aggregation: AggregationStats,
}

#[derive(Clone, Debug)]
pub struct ReinforceOutput {
    pub matrix: LabelMatrix,
    pub effects: EffectMatrix,
    pub boundaries: Vec<Boundaries>,
    pub diagnostics: Diagnostics,
}

/// Effects, boundaries and augmented matrix for one labeling matrix.
pub fn reinforce(mat: &LabelMatrix, d: &Dataset, p: &ReinforceParams) -> Result<ReinforceOutput> {
    if mat.cols() == 0 {
        return Err(Error::Input("no labeling functions".into()));
    }
    if mat.rows() == 0 {
        return Err(Error::Input("no data points".into()));
    }
    p.validate()?;
    let metric = p.metric.prepared_for(d, p.mahalanobis_ridge)?;
    let params = ReinforceParams {
        metric,
        ..p.clone()
    };
    let stats_pre = lf_stats(mat);
    let cache = DistanceCache::new(d.len());
    let (effects, aggregation) = aggregate_effects_with(mat, d, &params, &cache)?;

    let (boundaries, h_iqr, degenerate) = match p.mode {
        AugmentMode::FixedEpsilon { epsilon } => (vec![Boundaries::symmetric(epsilon); mat.cols()], None, false),
        AugmentMode::IqrFactor { h } => (
            iqr_boundaries(&effects, mat, h, p.iqr_scope, p.iqr_population)?,
            Some(h),
            false,
        ),
        AugmentMode::AutoIqr => {
            let h = auto_h_iqr(&stats_pre, p.xi);
            if h == 0.0 {
                log::warn!("automatic IQR factor is 0: boundaries sit on the quartiles");
            }
            (
                iqr_boundaries(&effects, mat, h, p.iqr_scope, p.iqr_population)?,
                Some(h),
                h == 0.0,
            )
        }
    };

    let augmented = augment(mat, &effects, &boundaries)?;
    let mut to_zero = vec![0usize; mat.cols()];
    let mut to_one = vec![0usize; mat.cols()];
    for i in 0..mat.rows() {
        for l in 0..mat.cols() {
            if mat.get(i, l) == ABSTAIN {
                match augmented.get(i, l) {
                    0 => to_zero[l] += 1,
                    1 => to_one[l] += 1,
                    _ => {}
                }
            }
        }
    }
    let effect_summaries = (0..mat.cols())
        .map(|l| {
            let vals: Vec<f64> = (0..mat.rows())
                .filter(|&i| mat.get(i, l) == ABSTAIN)
                .map(|i| effects.get(i, l))
                .collect();
            summarize(&mat.names()[l], &vals)
        })
        .collect();

    let diagnostics = Diagnostics {
        mode: p.mode,
        h_iqr,
        h_iqr_degenerate: degenerate,
        boundaries: boundaries.clone(),
        stats_post: lf_stats(&augmented),
        stats_pre,
        labeled_pre: majority_vote(mat).labeled_count(),
        labeled_post: majority_vote(&augmented).labeled_count(),
        covered_rows_pre: mat.covered_rows(),
        covered_rows_post: augmented.covered_rows(),
        labeled_cells_pre: mat.labeled_cells(),
        labeled_cells_post: augmented.labeled_cells(),
        augmented_to_zero: to_zero,
        augmented_to_one: to_one,
        effect_summaries,
        aggregation,
    };
    Ok(ReinforceOutput {
        matrix: augmented,
        effects,
        boundaries,
        diagnostics,
    })
}
