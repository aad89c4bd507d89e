//! End classifiers trained on aggregated labels, and their scores.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureVector;
use crate::error::{Error, Result};

pub const DEFAULT_C: f64 = 1000.0;
pub const DEFAULT_MAX_ITER: usize = 20_000;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_K: usize = 5;
pub const DEFAULT_VAR_SMOOTHING: f64 = 1e-9;

fn default_c() -> f64 {
    DEFAULT_C
}
fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}
fn default_k() -> usize {
    DEFAULT_K
}
fn default_var_smoothing() -> f64 {
    DEFAULT_VAR_SMOOTHING
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Logreg {
        /// Inverse regularization strength.
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
        /// Stop when the gradient norm falls below `tol` times its initial value.
        #[serde(default = "default_tol")]
        tol: f64,
    },
    Knn {
        #[serde(default = "default_k")]
        k: usize,
    },
    NaiveBayes {
        /// Added to every Gaussian variance, as a fraction of the largest
        /// feature variance.
        #[serde(default = "default_var_smoothing")]
        var_smoothing: f64,
    },
}

impl ModelSpec {
    pub fn logreg() -> Self {
        ModelSpec::Logreg {
            c: DEFAULT_C,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }

    pub fn knn(k: usize) -> Self {
        ModelSpec::Knn { k }
    }

    pub fn naive_bayes() -> Self {
        ModelSpec::NaiveBayes {
            var_smoothing: DEFAULT_VAR_SMOOTHING,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Logreg { .. } => "logreg",
            ModelSpec::Knn { .. } => "knn",
            ModelSpec::NaiveBayes { .. } => "naive_bayes",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::Logreg { c, max_iter, tol } => {
                if !(c > 0.0 && c.is_finite()) || max_iter == 0 || !(tol > 0.0) {
                    return Err(Error::Config(format!("invalid logreg settings: {self:?}")));
                }
            }
            ModelSpec::Knn { k } => {
                if k == 0 {
                    return Err(Error::Config("knn needs k >= 1".into()));
                }
                if k % 2 == 0 {
                    log::warn!("knn with even k = {k}: ties are broken by distance weighting");
                }
            }
            ModelSpec::NaiveBayes { var_smoothing } => {
                if !(var_smoothing > 0.0 && var_smoothing.is_finite()) {
                    return Err(Error::Config(format!("var_smoothing must be positive, got {var_smoothing}")));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    /// Accepts the model name with default settings.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logreg" | "logit" | "logr" => Ok(Self::logreg()),
            "knn" => Ok(Self::knn(DEFAULT_K)),
            "naive_bayes" | "naivb" | "nb" => Ok(Self::naive_bayes()),
            other => Err(Error::Config(format!("unknown end model {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogReg {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every accepted step, starting from the initial point.
    pub loss_trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    k: usize,
    points: Vec<FeatureVector>,
    labels: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    log_prior: [f64; 2],
    means: [Vec<f64>; 2],
    vars: [Vec<f64>; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernoulliNb {
    log_prior: [f64; 2],
    /// log p(present | class) - log p(absent | class), per feature.
    log_odds: [Vec<f64>; 2],
    /// Sum over features of log p(absent | class).
    absent_total: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    LogReg(LogReg),
    Knn(Knn),
    GaussianNb(GaussianNb),
    BernoulliNb(BernoulliNb),
}

fn check_inputs(features: &[FeatureVector], labels: &[u8]) -> Result<usize> {
    if features.len() != labels.len() {
        return Err(Error::Dimension {
            expected: features.len(),
            got: labels.len(),
        });
    }
    if features.is_empty() {
        return Err(Error::NoTrainingData);
    }
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::Input(format!("training label {bad} is not 0 or 1")));
    }
    let dim = features[0].dim();
    for f in features {
        if f.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: f.dim(),
            });
        }
        if !f.is_finite() {
            return Err(Error::Numeric("non-finite training feature".into()));
        }
    }
    Ok(dim)
}

fn class_counts(labels: &[u8]) -> [usize; 2] {
    let ones = labels.iter().filter(|&&l| l == 1).count();
    [labels.len() - ones, ones]
}

fn require_both_classes(labels: &[u8], model: &str) -> Result<[usize; 2]> {
    let counts = class_counts(labels);
    if counts[0] == 0 || counts[1] == 0 {
        let only = if counts[1] == 0 { 0 } else { 1 };
        return Err(Error::DegenerateTraining(format!(
            "{model} needs both classes, all {} training labels are {only}",
            labels.len()
        )));
    }
    Ok(counts)
}

pub fn train(spec: &ModelSpec, features: &[FeatureVector], labels: &[u8]) -> Result<Model> {
    spec.validate()?;
    let dim = check_inputs(features, labels)?;
    match *spec {
        ModelSpec::Logreg { c, max_iter, tol } => {
            require_both_classes(labels, "logreg")?;
            Ok(Model::LogReg(fit_logreg(features, labels, dim, c, max_iter, tol)))
        }
        ModelSpec::Knn { k } => {
            if features.len() < k {
                return Err(Error::DegenerateTraining(format!(
                    "knn with k = {k} needs at least {k} training points, got {}",
                    features.len()
                )));
            }
            Ok(Model::Knn(Knn {
                k,
                points: features.to_vec(),
                labels: labels.to_vec(),
            }))
        }
        ModelSpec::NaiveBayes { var_smoothing } => {
            let counts = require_both_classes(labels, "naive_bayes")?;
            if matches!(features[0], FeatureVector::Sparse(_)) {
                Ok(Model::BernoulliNb(fit_bernoulli(features, labels, dim, counts)))
            } else {
                Ok(Model::GaussianNb(fit_gaussian(features, labels, dim, counts, var_smoothing)))
            }
        }
    }
}

fn softplus(z: f64) -> f64 {
    // log(1 + e^z) without overflow
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `0.5 |w|^2 + c * sum(log-loss)`, bias unpenalized. `theta` holds the
/// weights followed by the bias.
pub fn logreg_objective(features: &[FeatureVector], labels: &[u8], c: f64, theta: &[f64]) -> f64 {
    let (w, b) = theta.split_at(theta.len() - 1);
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let data: f64 = features
        .iter()
        .zip(labels)
        .map(|(x, &y)| {
            let z = x.dot(w) + b[0];
            // -log p(y | x)
            if y == 1 {
                softplus(-z)
            } else {
                softplus(z)
            }
        })
        .sum();
    reg + c * data
}

pub fn logreg_gradient(features: &[FeatureVector], labels: &[u8], c: f64, theta: &[f64]) -> Vec<f64> {
    let n = theta.len() - 1;
    let (w, b) = theta.split_at(n);
    let mut g: Vec<f64> = w.to_vec();
    g.push(0.0);
    for (x, &y) in features.iter().zip(labels) {
        let r = c * (sigmoid(x.dot(w) + b[0]) - y as f64);
        x.for_each_entry(|j, v| g[j] += r * v);
        g[n] += r;
    }
    g
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn fit_logreg(features: &[FeatureVector], labels: &[u8], dim: usize, c: f64, max_iter: usize, tol: f64) -> LogReg {
    const ARMIJO: f64 = 1e-4;
    let mut theta = vec![0.0; dim + 1];
    let mut f = logreg_objective(features, labels, c, &theta);
    let mut g = logreg_gradient(features, labels, c, &theta);
    let target = tol * norm(&g).max(1.0);
    let mut trace = vec![f];
    let mut step = 1.0 / norm(&g).max(1.0);
    let mut converged = norm(&g) <= target;
    let mut iterations = 0;

    while !converged && iterations < max_iter {
        iterations += 1;
        let gg: f64 = g.iter().map(|v| v * v).sum();
        let mut t = step;
        let (next, f_next) = loop {
            let cand: Vec<f64> = theta.iter().zip(&g).map(|(x, d)| x - t * d).collect();
            let fc = logreg_objective(features, labels, c, &cand);
            if fc <= f - ARMIJO * t * gg {
                break (cand, fc);
            }
            t *= 0.5;
            if t < 1e-300 {
                break (theta.clone(), f);
            }
        };
        if f_next >= f && next == theta {
            // no representable decrease left
            converged = norm(&g) <= target;
            break;
        }
        let g_next = logreg_gradient(features, labels, c, &next);
        // Barzilai-Borwein step for the next line search
        let (mut ss, mut sy) = (0.0, 0.0);
        for i in 0..theta.len() {
            let s = next[i] - theta[i];
            ss += s * s;
            sy += s * (g_next[i] - g[i]);
        }
        step = if sy > 0.0 { ss / sy } else { t * 2.0 };
        theta = next;
        f = f_next;
        g = g_next;
        trace.push(f);
        converged = norm(&g) <= target;
    }
    if !converged {
        log::warn!(
            "logreg stopped after {iterations} iterations with gradient norm {:.3e}",
            norm(&g)
        );
    }
    let bias = theta.pop().unwrap_or(0.0);
    LogReg {
        weights: theta,
        bias,
        iterations,
        converged,
        loss_trace: trace,
    }
}

fn fit_gaussian(
    features: &[FeatureVector],
    labels: &[u8],
    dim: usize,
    counts: [usize; 2],
    var_smoothing: f64,
) -> GaussianNb {
    let n = labels.len() as f64;
    let mut means = [vec![0.0; dim], vec![0.0; dim]];
    let mut all_mean = vec![0.0; dim];
    for (x, &y) in features.iter().zip(labels) {
        x.for_each_entry(|j, v| {
            means[y as usize][j] += v;
            all_mean[j] += v;
        });
    }
    for c in 0..2 {
        means[c].iter_mut().for_each(|m| *m /= counts[c] as f64);
    }
    all_mean.iter_mut().for_each(|m| *m /= n);
    let mut vars = [vec![0.0; dim], vec![0.0; dim]];
    let mut all_var = vec![0.0; dim];
    for (x, &y) in features.iter().zip(labels) {
        let c = y as usize;
        for j in 0..dim {
            let v = x.get(j);
            vars[c][j] += (v - means[c][j]).powi(2);
            all_var[j] += (v - all_mean[j]).powi(2);
        }
    }
    let max_var = all_var.iter().map(|v| v / n).fold(0.0, f64::max);
    // all features constant: fall back to an absolute epsilon
    let eps = if max_var > 0.0 { var_smoothing * max_var } else { var_smoothing };
    for c in 0..2 {
        vars[c].iter_mut().for_each(|v| *v = *v / counts[c] as f64 + eps);
    }
    GaussianNb {
        log_prior: [(counts[0] as f64 / n).ln(), (counts[1] as f64 / n).ln()],
        means,
        vars,
    }
}

fn fit_bernoulli(features: &[FeatureVector], labels: &[u8], dim: usize, counts: [usize; 2]) -> BernoulliNb {
    let n = labels.len() as f64;
    let mut present = [vec![0usize; dim], vec![0usize; dim]];
    for (x, &y) in features.iter().zip(labels) {
        x.for_each_entry(|j, v| {
            if v > 0.0 {
                present[y as usize][j] += 1;
            }
        });
    }
    let mut log_odds = [vec![0.0; dim], vec![0.0; dim]];
    let mut absent_total = [0.0; 2];
    for c in 0..2 {
        let denom = counts[c] as f64 + 2.0;
        for j in 0..dim {
            let p = (present[c][j] as f64 + 1.0) / denom;
            let log_absent = (1.0 - p).ln();
            absent_total[c] += log_absent;
            log_odds[c][j] = p.ln() - log_absent;
        }
    }
    BernoulliNb {
        log_prior: [(counts[0] as f64 / n).ln(), (counts[1] as f64 / n).ln()],
        log_odds,
        absent_total,
    }
}

impl LogReg {
    pub fn probability(&self, x: &FeatureVector) -> f64 {
        sigmoid(x.dot(&self.weights) + self.bias)
    }

    fn predict_one(&self, x: &FeatureVector) -> u8 {
        u8::from(self.probability(x) >= 0.5)
    }
}

impl Knn {
    fn predict_one(&self, x: &FeatureVector) -> u8 {
        let mut dists: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (squared_euclidean(x, p).sqrt(), i))
            .collect();
        let k = self.k.min(dists.len());
        dists.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let neighbours = &dists[..k];
        let mut votes = [0usize; 2];
        for &(_, i) in neighbours {
            votes[self.labels[i] as usize] += 1;
        }
        if votes[0] != votes[1] {
            return u8::from(votes[1] > votes[0]);
        }
        // Tie: exact matches dominate, then inverse-distance weights.
        let mut exact = [0usize; 2];
        let mut weight = [0.0f64; 2];
        for &(d, i) in neighbours {
            let c = self.labels[i] as usize;
            if d == 0.0 {
                exact[c] += 1;
            } else {
                weight[c] += 1.0 / d;
            }
        }
        if exact[0] != exact[1] {
            return u8::from(exact[1] > exact[0]);
        }
        if weight[0] != weight[1] {
            return u8::from(weight[1] > weight[0]);
        }
        let lowest = neighbours.iter().map(|&(_, i)| i).min().expect("k >= 1");
        self.labels[lowest]
    }
}

fn squared_euclidean(x: &FeatureVector, y: &FeatureVector) -> f64 {
    match (x, y) {
        (FeatureVector::Dense(a), FeatureVector::Dense(b)) => a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum(),
        _ => {
            let (a, b) = (x.to_dense(), y.to_dense());
            a.iter().zip(&b).map(|(u, v)| (u - v).powi(2)).sum()
        }
    }
}

impl GaussianNb {
    fn log_joint(&self, x: &FeatureVector) -> [f64; 2] {
        let mut out = self.log_prior;
        for (c, o) in out.iter_mut().enumerate() {
            for (j, (&m, &v)) in self.means[c].iter().zip(&self.vars[c]).enumerate() {
                let d = x.get(j) - m;
                *o -= 0.5 * ((2.0 * std::f64::consts::PI * v).ln() + d * d / v);
            }
        }
        out
    }

    fn predict_one(&self, x: &FeatureVector) -> u8 {
        let lj = self.log_joint(x);
        u8::from(lj[1] >= lj[0])
    }
}

impl BernoulliNb {
    fn predict_one(&self, x: &FeatureVector) -> u8 {
        let mut lj = [0.0; 2];
        for (c, o) in lj.iter_mut().enumerate() {
            *o = self.log_prior[c] + self.absent_total[c];
            x.for_each_entry(|j, v| {
                if v > 0.0 {
                    *o += self.log_odds[c][j];
                }
            });
        }
        u8::from(lj[1] >= lj[0])
    }
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::LogReg(m) => m.weights.len(),
            Model::Knn(m) => m.points[0].dim(),
            Model::GaussianNb(m) => m.means[0].len(),
            Model::BernoulliNb(m) => m.log_odds[0].len(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::LogReg(_) => "logreg",
            Model::Knn(_) => "knn",
            Model::GaussianNb(_) => "gaussian_nb",
            Model::BernoulliNb(_) => "bernoulli_nb",
        }
    }

    fn predict_one(&self, x: &FeatureVector) -> u8 {
        match self {
            Model::LogReg(m) => m.predict_one(x),
            Model::Knn(m) => m.predict_one(x),
            Model::GaussianNb(m) => m.predict_one(x),
            Model::BernoulliNb(m) => m.predict_one(x),
        }
    }
}

pub fn predict(model: &Model, features: &[FeatureVector]) -> Result<Vec<u8>> {
    let dim = model.dim();
    if let Some(bad) = features.iter().find(|f| f.dim() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            got: bad.dim(),
        });
    }
    Ok(features.par_iter().map(|x| model.predict_one(x)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Metrics {
    /// Class 1 is the positive class; empty denominators give 0.
    pub fn from_confusion(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            accuracy: ratio(tp + tn, tp + fp + fn_ + tn),
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
            tn,
        }
    }

    /// Field-wise mean, confusion counts summed.
    pub fn mean(all: &[Metrics]) -> Option<Metrics> {
        if all.is_empty() {
            return None;
        }
        let n = all.len() as f64;
        let avg = |f: fn(&Metrics) -> f64| all.iter().map(f).sum::<f64>() / n;
        Some(Metrics {
            accuracy: avg(|m| m.accuracy),
            precision: avg(|m| m.precision),
            recall: avg(|m| m.recall),
            f1: avg(|m| m.f1),
            tp: all.iter().map(|m| m.tp).sum(),
            fp: all.iter().map(|m| m.fp).sum(),
            fn_: all.iter().map(|m| m.fn_).sum(),
            tn: all.iter().map(|m| m.tn).sum(),
        })
    }
}

pub fn evaluate(predictions: &[u8], truth: &[u8]) -> Result<Metrics> {
    if predictions.len() != truth.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            got: predictions.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Input("nothing to evaluate".into()));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&p, &t) in predictions.iter().zip(truth) {
        match (p == 1, t == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(Metrics::from_confusion(tp, fp, fn_, tn))
}
