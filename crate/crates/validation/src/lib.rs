//! Naive reference implementation of the augmentation step, written
//! independently of the `labelaug` crate and used as a test oracle.
//! Dense vectors only; every quantity is recomputed from scratch.

pub struct Metric {
    pub kind: &'static str,
    pub p: f64,
    pub inv: Vec<Vec<f64>>,
}

pub fn dist(m: &Metric, x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    match m.kind {
        "euclidean" => (0..n).map(|i| (x[i] - y[i]).powi(2)).sum::<f64>().sqrt(),
        "minkowski" => (0..n).map(|i| (x[i] - y[i]).abs().powf(m.p)).sum::<f64>().powf(1.0 / m.p),
        "chebyshev" => (0..n).map(|i| (x[i] - y[i]).abs()).fold(0.0, f64::max),
        "hamming" => (0..n).filter(|&i| x[i] != y[i]).count() as f64 / n as f64,
        "jaccard" => {
            let both = (0..n).filter(|&i| x[i] != 0.0 && y[i] != 0.0).count();
            let any = (0..n).filter(|&i| x[i] != 0.0 || y[i] != 0.0).count();
            if any == 0 {
                0.0
            } else {
                1.0 - both as f64 / any as f64
            }
        }
        "cosine" => {
            let dot: f64 = (0..n).map(|i| x[i] * y[i]).sum();
            let nx: f64 = x.iter().map(|v| v * v).sum();
            let ny: f64 = y.iter().map(|v| v * v).sum();
            if nx == 0.0 && ny == 0.0 {
                0.0
            } else if nx == 0.0 || ny == 0.0 {
                1.0
            } else {
                let d = (1.0 - dot / (nx.sqrt() * ny.sqrt())).clamp(0.0, 2.0);
                // parallel directions are at distance zero up to rounding
                if d <= 16.0 * f64::EPSILON {
                    0.0
                } else {
                    d
                }
            }
        }
        "mahalanobis" => {
            let d: Vec<f64> = (0..n).map(|i| x[i] - y[i]).collect();
            let mut q = 0.0;
            for i in 0..n {
                for j in 0..n {
                    q += d[i] * m.inv[i][j] * d[j];
                }
            }
            q.max(0.0).sqrt()
        }
        other => panic!("unknown metric {other}"),
    }
}

/// Sample covariance plus ridge, inverted by Gauss-Jordan elimination.
pub fn inverse_covariance(rows: &[Vec<f64>], ridge: f64) -> Vec<Vec<f64>> {
    let (k, n) = (rows.len(), rows[0].len());
    let mean: Vec<f64> = (0..n).map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / k as f64).collect();
    let mut a = vec![vec![0.0; 2 * n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = rows.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (k - 1) as f64;
        }
        a[i][i] += ridge;
        a[i][n + i] = 1.0;
    }
    for c in 0..n {
        let piv = (c..n).max_by(|&p, &q| a[p][c].abs().total_cmp(&a[q][c].abs())).unwrap();
        a.swap(c, piv);
        let d = a[c][c];
        a[c].iter_mut().for_each(|v| *v /= d);
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                for j in 0..2 * n {
                    a[r][j] -= f * a[c][j];
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub struct Instance {
    pub rows: Vec<Vec<f64>>,
    pub mat: Vec<Vec<i8>>,
    pub alpha: f64,
    pub beta: f64,
    pub eps_d: f64,
    pub metric: Metric,
    /// `Some(eps)` for fixed bounds, otherwise the IQR factor (or `None` for automatic).
    pub fixed: Option<f64>,
    pub h: Option<f64>,
    pub per_lf: bool,
    pub all_cells: bool,
    pub xi: f64,
}

pub struct Output {
    pub effects: Vec<Vec<f64>>,
    /// Sum of absolute terms per cell, the scale for relative comparison.
    pub scale: Vec<Vec<f64>>,
    pub bounds: Vec<(f64, f64)>,
    pub matrix: Vec<Vec<i8>>,
}

pub fn run(x: &Instance) -> Output {
    let (k, m) = (x.mat.len(), x.mat[0].len());
    let mut d_min = f64::INFINITY;
    for l in 0..m {
        for i in 0..k {
            if x.mat[i][l] != -1 {
                continue;
            }
            for j in 0..k {
                if x.mat[j][l] != -1 {
                    let d = dist(&x.metric, &x.rows[i], &x.rows[j]);
                    if d > 0.0 {
                        d_min = d_min.min(d);
                    }
                }
            }
        }
    }
    let floor = if d_min.is_finite() { d_min } else { 1.0 };
    let mut effects = vec![vec![0.0; m]; k];
    let mut scale = vec![vec![0.0; m]; k];
    for l in 0..m {
        for i in 0..k {
            if x.mat[i][l] != -1 {
                continue;
            }
            for j in 0..k {
                let lab = x.mat[j][l];
                if lab == -1 {
                    continue;
                }
                let d = dist(&x.metric, &x.rows[i], &x.rows[j]);
                if d < x.eps_d {
                    let dd = if d == 0.0 { floor } else { d };
                    let t = x.beta / dd.powf(x.alpha);
                    effects[i][l] += if lab == 1 { t } else { -t };
                    scale[i][l] += t;
                }
            }
        }
    }

    let bounds: Vec<(f64, f64)> = match x.fixed {
        Some(eps) => vec![(-eps, eps); m],
        None => {
            let h = x.h.unwrap_or_else(|| {
                let (mut cov, mut ovl, mut con) = (0.0, 0.0, 0.0);
                for l in 0..m {
                    let (mut c, mut o, mut f) = (0, 0, 0);
                    for r in &x.mat {
                        if r[l] == -1 {
                            continue;
                        }
                        c += 1;
                        if (0..m).any(|j| j != l && r[j] != -1) {
                            o += 1;
                        }
                        if (0..m).any(|j| j != l && r[j] != -1 && r[j] != r[l]) {
                            f += 1;
                        }
                    }
                    cov += c as f64 / k as f64;
                    ovl += o as f64 / k as f64;
                    con += f as f64 / k as f64;
                }
                x.xi * cov * ovl * con
            });
            let pop = |cols: &[usize]| -> (f64, f64) {
                let mut v: Vec<f64> = Vec::new();
                for i in 0..k {
                    for &l in cols {
                        if x.all_cells || x.mat[i][l] == -1 {
                            v.push(effects[i][l]);
                        }
                    }
                }
                if v.is_empty() {
                    return (0.0, 0.0);
                }
                v.sort_by(f64::total_cmp);
                let (q1, q3) = (percentile(&v, 0.25), percentile(&v, 0.75));
                (q1 - (q3 - q1) * h, q3 + (q3 - q1) * h)
            };
            if x.per_lf {
                (0..m).map(|l| pop(&[l])).collect()
            } else {
                vec![pop(&(0..m).collect::<Vec<_>>()); m]
            }
        }
    };

    let mut matrix = x.mat.clone();
    for i in 0..k {
        for l in 0..m {
            if x.mat[i][l] == -1 {
                if effects[i][l] < bounds[l].0 {
                    matrix[i][l] = 0;
                } else if effects[i][l] > bounds[l].1 {
                    matrix[i][l] = 1;
                }
            }
        }
    }
    Output {
        effects,
        scale,
        bounds,
        matrix,
    }
}
