//! Pairwise distances over dense and sparse feature vectors, Mahalanobis
//! precomputation, and a lazily filled symmetric distance cache.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::{DataKind, Dataset, FeatureVector};
use crate::error::{Error, Result};

pub const DEFAULT_MINKOWSKI_P: f64 = 3.0;
pub const DEFAULT_MAHALANOBIS_RIDGE: f64 = 1e-6;
/// Cosine distances at or below this are rounding noise and read as zero.
pub const COSINE_ZERO: f64 = 16.0 * f64::EPSILON;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Euclidean,
    Cosine,
    Chebyshev,
    Hamming,
    Jaccard,
    Mahalanobis,
    Minkowski,
}

impl MetricKind {
    pub const ALL: [MetricKind; 7] = [
        MetricKind::Chebyshev,
        MetricKind::Cosine,
        MetricKind::Euclidean,
        MetricKind::Hamming,
        MetricKind::Jaccard,
        MetricKind::Mahalanobis,
        MetricKind::Minkowski,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Euclidean => "euclidean",
            MetricKind::Cosine => "cosine",
            MetricKind::Chebyshev => "chebyshev",
            MetricKind::Hamming => "hamming",
            MetricKind::Jaccard => "jaccard",
            MetricKind::Mahalanobis => "mahalanobis",
            MetricKind::Minkowski => "minkowski",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown distance metric `{s}`")))
    }
}

/// Row-major inverse covariance matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct InverseCovariance {
    n: usize,
    data: Vec<f64>,
}

impl InverseCovariance {
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: data.len(),
            });
        }
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricSpec {
    pub kind: MetricKind,
    /// Minkowski order.
    pub p: f64,
    pub inv_cov: Option<Arc<InverseCovariance>>,
}

impl MetricSpec {
    pub fn new(kind: MetricKind) -> Self {
        Self {
            kind,
            p: DEFAULT_MINKOWSKI_P,
            inv_cov: None,
        }
    }

    pub fn euclidean() -> Self {
        Self::new(MetricKind::Euclidean)
    }

    pub fn minkowski(p: f64) -> Self {
        Self {
            p,
            ..Self::new(MetricKind::Minkowski)
        }
    }

    pub fn mahalanobis(inv_cov: InverseCovariance) -> Self {
        Self {
            inv_cov: Some(Arc::new(inv_cov)),
            ..Self::new(MetricKind::Mahalanobis)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == MetricKind::Minkowski && !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::Config(format!("minkowski order must be >= 1, got {}", self.p)));
        }
        if self.kind == MetricKind::Mahalanobis && self.inv_cov.is_none() {
            return Err(Error::Config("mahalanobis metric needs an inverse covariance".into()));
        }
        Ok(())
    }

    /// Fills in the inverse covariance from `d` when the metric needs one.
    pub fn prepared_for(&self, d: &Dataset, ridge: f64) -> Result<Self> {
        let mut out = self.clone();
        if self.kind == MetricKind::Mahalanobis && self.inv_cov.is_none() {
            out.inv_cov = Some(Arc::new(mahalanobis_precompute(d, ridge)?));
        }
        out.validate()?;
        Ok(out)
    }
}

/// Visits every index where at least one of the vectors may be nonzero,
/// passing `(x_i, y_i)`. Indices where both are implicitly zero are skipped.
fn for_each_union(x: &FeatureVector, y: &FeatureVector, mut f: impl FnMut(f64, f64)) {
    match (x, y) {
        (FeatureVector::Dense(a), FeatureVector::Dense(b)) => {
            a.iter().zip(b).for_each(|(&p, &q)| f(p, q));
        }
        (FeatureVector::Sparse(a), FeatureVector::Sparse(b)) => {
            let (a, b) = (a.entries(), b.entries());
            let (mut i, mut j) = (0, 0);
            while i < a.len() || j < b.len() {
                match (a.get(i), b.get(j)) {
                    (Some(&(ia, va)), Some(&(ib, vb))) => {
                        if ia == ib {
                            f(va, vb);
                            i += 1;
                            j += 1;
                        } else if ia < ib {
                            f(va, 0.0);
                            i += 1;
                        } else {
                            f(0.0, vb);
                            j += 1;
                        }
                    }
                    (Some(&(_, va)), None) => {
                        f(va, 0.0);
                        i += 1;
                    }
                    (None, Some(&(_, vb))) => {
                        f(0.0, vb);
                        j += 1;
                    }
                    (None, None) => unreachable!(),
                }
            }
        }
        (FeatureVector::Dense(a), FeatureVector::Sparse(_)) => {
            let b = y.to_dense();
            a.iter().zip(&b).for_each(|(&p, &q)| f(p, q));
        }
        (FeatureVector::Sparse(_), FeatureVector::Dense(b)) => {
            let a = x.to_dense();
            a.iter().zip(b).for_each(|(&p, &q)| f(p, q));
        }
    }
}

pub fn distance(m: &MetricSpec, x: &FeatureVector, y: &FeatureVector) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::Dimension {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    let n = x.dim();
    let d = match m.kind {
        MetricKind::Euclidean => {
            let mut s = 0.0;
            for_each_union(x, y, |a, b| s += (a - b) * (a - b));
            s.sqrt()
        }
        MetricKind::Minkowski => {
            if !(m.p >= 1.0) {
                return Err(Error::Config(format!("minkowski order must be >= 1, got {}", m.p)));
            }
            let mut s = 0.0;
            for_each_union(x, y, |a, b| s += (a - b).abs().powf(m.p));
            s.powf(1.0 / m.p)
        }
        MetricKind::Chebyshev => {
            let mut s: f64 = 0.0;
            for_each_union(x, y, |a, b| s = s.max((a - b).abs()));
            s
        }
        MetricKind::Hamming => {
            if n == 0 {
                return Ok(0.0);
            }
            let mut diff = 0usize;
            for_each_union(x, y, |a, b| diff += usize::from(a != b));
            diff as f64 / n as f64
        }
        MetricKind::Jaccard => {
            let (mut inter, mut union) = (0usize, 0usize);
            for_each_union(x, y, |a, b| {
                let (sa, sb) = (a != 0.0, b != 0.0);
                inter += usize::from(sa && sb);
                union += usize::from(sa || sb);
            });
            if union == 0 {
                0.0
            } else {
                1.0 - inter as f64 / union as f64
            }
        }
        MetricKind::Cosine => {
            let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
            for_each_union(x, y, |a, b| {
                xy += a * b;
                xx += a * a;
                yy += b * b;
            });
            match (xx == 0.0, yy == 0.0) {
                (true, true) => 0.0,
                (true, false) | (false, true) => 1.0,
                // sqrt(xx * yy) keeps cos(x, x) exactly 1
                _ => {
                    let d = (1.0 - xy / (xx * yy).sqrt()).clamp(0.0, 2.0);
                    // parallel vectors leave rounding residue that would
                    // otherwise read as a tiny nonzero distance
                    if d <= COSINE_ZERO {
                        0.0
                    } else {
                        d
                    }
                }
            }
        }
        MetricKind::Mahalanobis => {
            let s = m
                .inv_cov
                .as_ref()
                .ok_or_else(|| Error::Config("mahalanobis metric needs an inverse covariance".into()))?;
            if s.dim() != n {
                return Err(Error::Dimension {
                    expected: s.dim(),
                    got: n,
                });
            }
            let (a, b) = (x.to_dense(), y.to_dense());
            let diff: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
            let mut q = 0.0;
            for i in 0..n {
                let mut row = 0.0;
                for j in 0..n {
                    row += s.get(i, j) * diff[j];
                }
                q += diff[i] * row;
            }
            q.max(0.0).sqrt()
        }
    };
    Ok(d)
}

/// Sample covariance (n - 1 denominator) plus `ridge` on the diagonal,
/// inverted and symmetrized.
pub fn mahalanobis_precompute(d: &Dataset, ridge: f64) -> Result<InverseCovariance> {
    if d.kind() != DataKind::Numeric {
        return Err(Error::Input("mahalanobis needs a numeric dataset".into()));
    }
    let (k, n) = (d.len(), d.dim());
    if k <= n {
        return Err(Error::Input(format!(
            "covariance of {n} features needs more than {n} points, got {k}"
        )));
    }
    if !(ridge >= 0.0) {
        return Err(Error::Input(format!("ridge must be non-negative, got {ridge}")));
    }
    let rows: Vec<Vec<f64>> = d.points().iter().map(FeatureVector::to_dense).collect();
    let mut mean = vec![0.0; n];
    for r in &rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= k as f64);
    let mut cov = DMatrix::<f64>::zeros(n, n);
    for r in &rows {
        for i in 0..n {
            let di = r[i] - mean[i];
            for j in 0..=i {
                cov[(i, j)] += di * (r[j] - mean[j]);
            }
        }
    }
    for i in 0..n {
        for j in 0..=i {
            let v = cov[(i, j)] / (k - 1) as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
        cov[(i, i)] += ridge;
    }
    let condition = || {
        let sv = cov.clone().singular_values();
        let (max, min) = (sv.max(), sv.min());
        if min > 0.0 {
            max / min
        } else {
            f64::INFINITY
        }
    };
    let inv = cov
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| {
            Error::Numeric(format!(
                "covariance is singular even with ridge {ridge} (condition estimate {:.3e})",
                condition()
            ))
        })?;
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!(
            "inverse covariance is not finite (condition estimate {:.3e})",
            condition()
        )));
    }
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = 0.5 * (inv[(i, j)] + inv[(j, i)]);
        }
    }
    InverseCovariance::from_row_major(n, data)
}

/// Cache tables larger than this many pairs are not allocated; distances are
/// then recomputed on every lookup.
const MAX_CACHED_PAIRS: usize = 1 << 26;
const UNSET: u64 = u64::MAX;

/// Symmetric distance table filled on first lookup of each unordered pair.
///
/// Concurrent fills of the same pair may both compute (the value is
/// deterministic, so the race is benign); the computation counter is exact
/// when the cache is driven from a single thread.
pub struct DistanceCache {
    k: usize,
    slots: Option<Vec<AtomicU64>>,
    computed: AtomicUsize,
}

impl DistanceCache {
    pub fn new(k: usize) -> Self {
        let pairs = k * k.saturating_sub(1) / 2;
        let slots = (pairs <= MAX_CACHED_PAIRS).then(|| (0..pairs).map(|_| AtomicU64::new(UNSET)).collect());
        Self {
            k,
            slots,
            computed: AtomicUsize::new(0),
        }
    }

    /// A cache that stores nothing.
    pub fn disabled(k: usize) -> Self {
        Self {
            k,
            slots: None,
            computed: AtomicUsize::new(0),
        }
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn is_enabled(&self) -> bool {
        self.slots.is_some()
    }

    /// Number of distance evaluations performed so far.
    pub fn computations(&self) -> usize {
        self.computed.load(Ordering::Relaxed)
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        hi * (hi - 1) / 2 + lo
    }

    pub fn peek(&self, i: usize, j: usize) -> Option<f64> {
        let slots = self.slots.as_ref()?;
        let bits = slots[self.slot(i, j)].load(Ordering::Relaxed);
        (bits != UNSET).then(|| f64::from_bits(bits))
    }

    pub fn get_or_compute(&self, i: usize, j: usize, compute: impl FnOnce() -> Result<f64>) -> Result<f64> {
        debug_assert!(i != j && i < self.k && j < self.k);
        if let Some(v) = self.peek(i, j) {
            return Ok(v);
        }
        let v = compute()?;
        self.computed.fetch_add(1, Ordering::Relaxed);
        if let Some(slots) = &self.slots {
            slots[self.slot(i, j)].store(v.to_bits(), Ordering::Relaxed);
        }
        Ok(v)
    }
}

/// Distance between points `i` and `j` of `d`, computed at most once per
/// unordered pair.
pub fn cached_distance(cache: &DistanceCache, m: &MetricSpec, d: &Dataset, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::Input("cached distance needs two distinct points".into()));
    }
    if i >= d.len() || j >= d.len() || cache.len() != d.len() {
        return Err(Error::Input(format!(
            "point pair ({i}, {j}) outside dataset of {} points",
            d.len()
        )));
    }
    cache.get_or_compute(i, j, || distance(m, d.point(i), d.point(j)))
}
