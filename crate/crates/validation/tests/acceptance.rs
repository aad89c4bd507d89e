//! One line per acceptance criterion. Runs without the libtest harness so the
//! report reads top to bottom; exits nonzero if any criterion fails.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::Value;

use labelaug::dataset::SparseVector;
use labelaug::distance::{mahalanobis_precompute, MetricKind, MetricSpec};
use labelaug::models::{logreg_gradient, logreg_objective};
use labelaug::pipeline::{self, Arm, PipelineConfig, RunReport};
use labelaug::reinforce::{augment, iqr_boundaries, AugmentMode, EffectMatrix, IqrPopulation, IqrScope};
use labelaug::{distance, reinforce, Dataset, FeatureVector, LabelMatrix, ReinforceParams};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .unwrap()
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle equivalence", c1_oracle),
        ("hand-trace golden file", c2_golden),
        ("labeled-count monotonicity on fixtures", c3_monotone),
        ("label counts on full datasets", c4_counts),
        ("performance gains", c5_gains),
        ("metric robustness", c6_metrics),
        ("IQR behavior", c7_iqr),
        ("numerical checks", c8_numeric),
        ("determinism", c9_determinism),
    ];
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        failed += usize::from(!o.pass);
        println!(
            "criterion {}: {} {name} ({:.1}s) - {}",
            n + 1,
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- criterion 1

fn random_instance(rng: &mut ChaCha8Rng) -> (labelaug_validation::Instance, ReinforceParams) {
    let kinds = MetricKind::ALL;
    let kind = *kinds.choose(rng).unwrap();
    let n = rng.random_range(1..=5usize);
    let kmin = if kind == MetricKind::Mahalanobis { n + 2 } else { 2 };
    let k = rng.random_range(kmin..=30usize);
    let m = rng.random_range(1..=4usize);
    // coarse grids make equal coordinates and duplicate rows common
    let coarse = rng.random_bool(0.4);
    let mut rows: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            (0..n)
                .map(|_| {
                    if coarse {
                        rng.random_range(0..3) as f64 / 2.0
                    } else {
                        rng.random::<f64>()
                    }
                })
                .collect()
        })
        .collect();
    for i in 1..k {
        if rng.random_bool(0.1) {
            rows[i] = rows[rng.random_range(0..i)].clone();
        }
    }
    let p_abstain = rng.random_range(0.3..0.9);
    let mat: Vec<Vec<i8>> = (0..k)
        .map(|_| {
            (0..m)
                .map(|_| if rng.random_bool(p_abstain) { -1 } else { rng.random_range(0..2) })
                .collect()
        })
        .collect();
    let alpha = rng.random_range(0.5..3.0);
    let beta = rng.random_range(0.5..5.0);
    let eps_d = if rng.random_bool(0.5) { f64::INFINITY } else { rng.random_range(0.1..2.0) };
    let mp = rng.random_range(1.0..5.0);
    let inv = if kind == MetricKind::Mahalanobis {
        labelaug_validation::inverse_covariance(&rows, 1e-6)
    } else {
        Vec::new()
    };
    let (fixed, h, mode) = match rng.random_range(0..3) {
        0 => {
            let e = rng.random_range(0.0..5.0);
            (Some(e), None, AugmentMode::FixedEpsilon { epsilon: e })
        }
        1 => {
            let h = rng.random_range(0.0..2.0);
            (None, Some(h), AugmentMode::IqrFactor { h })
        }
        _ => (None, None, AugmentMode::AutoIqr),
    };
    let per_lf = rng.random_bool(0.5);
    let all_cells = rng.random_bool(0.3);
    let mut metric = MetricSpec::new(kind);
    metric.p = mp;
    let params = ReinforceParams {
        alpha,
        beta,
        epsilon_d: eps_d,
        mode,
        iqr_scope: if per_lf { IqrScope::PerLf } else { IqrScope::Global },
        iqr_population: if all_cells { IqrPopulation::AllCells } else { IqrPopulation::AbstainOnly },
        metric,
        ..Default::default()
    };
    let inst = labelaug_validation::Instance {
        rows,
        mat,
        alpha,
        beta,
        eps_d,
        metric: labelaug_validation::Metric {
            kind: kind.name(),
            p: mp,
            inv,
        },
        fixed,
        h,
        per_lf,
        all_cells,
        xi: params.xi,
    };
    (inst, params)
}

fn c1_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut cells, mut skipped, mut worst) = (0usize, 0usize, 0.0f64);
    let mut problems = Vec::new();
    for case in 0..200 {
        let (x, params) = random_instance(&mut rng);
        let n = x.rows[0].len();
        let names: Vec<String> = (0..n).map(|c| format!("f{c}")).collect();
        let d = Dataset::numeric(names, x.rows.clone(), None).unwrap();
        let mat = LabelMatrix::from_rows((0..x.mat[0].len()).map(|l| format!("lf{l}")).collect(), &x.mat).unwrap();
        let want = labelaug_validation::run(&x);
        let got = match reinforce(&mat, &d, &params) {
            Ok(o) => o,
            Err(e) => {
                problems.push(format!("case {case}: {e}"));
                continue;
            }
        };
        for i in 0..mat.rows() {
            for l in 0..mat.cols() {
                cells += 1;
                let (a, b) = (got.effects.get(i, l), want.effects[i][l]);
                let rel = (a - b).abs() / want.scale[i][l].max(f64::MIN_POSITIVE);
                if a != b {
                    worst = worst.max(rel);
                }
                if rel > 1e-10 {
                    problems.push(format!("case {case} effect ({i},{l}): {a} vs {b}"));
                }
            }
        }
        // boundaries inherit the effects' rounding; scale by the largest effect
        let emax = want.effects.iter().flatten().fold(1e-300f64, |s, v| s.max(v.abs()));
        for (l, (bn, bp)) in want.bounds.iter().enumerate() {
            let g = got.boundaries[l];
            for (a, b) in [(g.b_neg, *bn), (g.b_pos, *bp)] {
                if (a - b).abs() > 1e-10 * emax.max(b.abs()) {
                    problems.push(format!("case {case} bound lf {l}: {a} vs {b}"));
                }
            }
        }
        for i in 0..mat.rows() {
            for l in 0..mat.cols() {
                let e = want.effects[i][l];
                let (bn, bp) = want.bounds[l];
                let near = |b: f64| (e - b).abs() <= 1e-9 * emax.max(b.abs());
                let g = got.boundaries[l];
                let exact = got.effects.get(i, l) == e && g.b_neg == bn && g.b_pos == bp;
                if x.mat[i][l] == -1 && !exact && (near(bn) || near(bp)) {
                    skipped += 1;
                    continue;
                }
                if got.matrix.get(i, l) != want.matrix[i][l] {
                    problems.push(format!("case {case} cell ({i},{l}): {} vs {}", got.matrix.get(i, l), want.matrix[i][l]));
                }
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let detail = format!(
        "200 instances, {cells} cells, max relative effect error {worst:.1e}, {skipped} near-boundary cells skipped, {secs:.2}s{}",
        problems.first().map(|p| format!("; first mismatch {p}")).unwrap_or_default()
    );
    Outcome::new(problems.is_empty() && secs < 10.0, detail)
}

// ---------------------------------------------------------------- criterion 2

fn c2_golden() -> Outcome {
    let dir = root().join("fixtures/trace");
    let golden: Value = serde_json::from_str(&fs::read_to_string(dir.join("toy6_trace.json")).unwrap()).unwrap();
    let frac = |v: &Value| v[0].as_f64().unwrap() / v[1].as_f64().unwrap();
    let rows = |v: &Value| -> Vec<Vec<i8>> {
        v.as_array()
            .unwrap()
            .iter()
            .map(|r| r.as_array().unwrap().iter().map(|x| x.as_i64().unwrap() as i8).collect())
            .collect()
    };
    let d = labelaug::load_tabular(dir.join("toy6.csv"), &Default::default()).unwrap();
    let lfs = labelaug::lf::load_lf_set(dir.join("toy6.lf"), &d).unwrap();
    let mat = labelaug::apply_all(&lfs, &d).unwrap();
    let mut bad = Vec::new();
    let same = |m: &LabelMatrix, want: &[Vec<i8>]| want.iter().enumerate().all(|(i, r)| m.row(i) == &r[..]);
    if !same(&mat, &rows(&golden["matrix_pre"])) {
        bad.push("labeling matrix".to_string());
    }
    let mut checked = 0;
    for (mode, params) in [
        ("h=0.1", ReinforceParams::iqr(0.1)),
        ("automatic", ReinforceParams { mode: AugmentMode::AutoIqr, ..Default::default() }),
    ] {
        let out = reinforce(&mat, &d, &params).unwrap();
        for e in golden["effects"].as_array().unwrap() {
            let (i, l) = (e["point"].as_u64().unwrap() as usize, e["lf"].as_u64().unwrap() as usize);
            checked += 1;
            if (out.effects.get(i, l) - frac(&e["value"])).abs() > 1e-12 {
                bad.push(format!("{mode} effect ({i},{l})"));
            }
        }
        let (q1, q3) = (frac(&golden["q1"]), frac(&golden["q3"]));
        let (bn, bp) = if mode == "h=0.1" {
            (frac(&golden["boundaries"]["b_neg"]), frac(&golden["boundaries"]["b_pos"]))
        } else {
            (q1, q3)
        };
        for b in &out.boundaries {
            if (b.b_neg - bn).abs() > 1e-12 || (b.b_pos - bp).abs() > 1e-12 {
                bad.push(format!("{mode} boundaries {b:?}"));
            }
        }
        if !same(&out.matrix, &rows(&golden["matrix_post"])) {
            bad.push(format!("{mode} augmented matrix"));
        }
    }
    Outcome::new(
        bad.is_empty(),
        if bad.is_empty() {
            format!("{checked} effects, quartiles, boundaries and augmented cells match the hand trace to 1e-12")
        } else {
            format!("mismatch: {}", bad.join(", "))
        },
    )
}

// ---------------------------------------------------------------- criterion 3

const FIXTURES: [&str; 4] = [
    "redwine_small.toml",
    "whitewine_synthetic.toml",
    "weather_synthetic.toml",
    "youtube_synthetic.toml",
];

fn fixture_config(name: &str) -> PipelineConfig {
    PipelineConfig::from_file(root().join("fixtures/configs").join(name)).unwrap()
}

fn random_params(rng: &mut ChaCha8Rng, text: bool) -> ReinforceParams {
    let kinds: Vec<MetricKind> = MetricKind::ALL
        .into_iter()
        .filter(|k| !(text && *k == MetricKind::Mahalanobis))
        .collect();
    let mut metric = MetricSpec::new(*kinds.choose(rng).unwrap());
    metric.p = rng.random_range(1.0..4.0);
    ReinforceParams {
        alpha: rng.random_range(0.5..2.5),
        beta: rng.random_range(0.5..2.0),
        epsilon_d: if rng.random_bool(0.3) { f64::INFINITY } else { 10f64.powf(rng.random_range(-1.0..0.8)) },
        mode: match rng.random_range(0..3) {
            0 => AugmentMode::FixedEpsilon {
                epsilon: 10f64.powf(rng.random_range(-1.0..3.0)),
            },
            1 => AugmentMode::IqrFactor {
                h: rng.random_range(0.0..2.0),
            },
            _ => AugmentMode::AutoIqr,
        },
        iqr_scope: if rng.random_bool(0.5) { IqrScope::Global } else { IqrScope::PerLf },
        metric,
        ..Default::default()
    }
}

fn c3_monotone() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let (mut draws, mut fired, mut violations) = (0, 0, Vec::new());
    let mut covered_ok = true;
    for name in FIXTURES {
        let cfg = fixture_config(name);
        let d = pipeline::load_dataset(&cfg).unwrap();
        let text = d.kind() == labelaug::dataset::DataKind::Text;
        for draw in 0..50u64 {
            let parts = pipeline::split_for(&cfg, &d, draw, Arm::Reinforced).unwrap();
            let mat = pipeline::apply_lfs(&cfg, &parts.unlabeled).unwrap();
            let params = random_params(&mut rng, text);
            let out = match reinforce(&mat, &parts.unlabeled, &params) {
                Ok(o) => o,
                Err(e) => {
                    violations.push(format!("{name} draw {draw}: error {e}"));
                    continue;
                }
            };
            draws += 1;
            let g = &out.diagnostics;
            let any = g.labeled_cells_post > g.labeled_cells_pre;
            fired += usize::from(any);
            covered_ok &= g.covered_rows_post >= g.covered_rows_pre;
            if g.labeled_post < g.labeled_pre || (any && g.labeled_post == g.labeled_pre) {
                violations.push(format!(
                    "{name} draw {draw}: majority-vote labeled {} -> {} with {} cells augmented",
                    g.labeled_pre,
                    g.labeled_post,
                    g.labeled_cells_post - g.labeled_cells_pre
                ));
            }
        }
    }
    let detail = format!(
        "{draws} draws, {fired} with augmentation, {} violations{}; rows with any LF label never decrease: {covered_ok}",
        violations.len(),
        violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default()
    );
    Outcome::new(violations.is_empty(), detail)
}

// ------------------------------------------------------------ criteria 4 to 6

fn full_config(name: &str) -> Result<PipelineConfig, String> {
    let cfg = PipelineConfig::from_file(root().join("configs").join(name)).map_err(|e| e.to_string())?;
    let path = cfg.resolve(&cfg.dataset.path);
    if !path.exists() {
        let shown = path
            .parent()
            .and_then(|d| d.canonicalize().ok())
            .and_then(|d| d.strip_prefix(root()).ok().map(|d| d.join(path.file_name().unwrap())))
            .unwrap_or(path);
        return Err(format!("{} not present (run scripts/fetch_datasets.sh)", shown.display()));
    }
    Ok(cfg)
}

fn run_arm(cfg: &PipelineConfig, d: &Dataset, arm: Arm) -> RunReport {
    let mut c = cfg.clone();
    c.run.arm = arm;
    pipeline::run_loaded(&c, d).unwrap()
}

struct ArmPair {
    base: RunReport,
    rl: RunReport,
    secs: f64,
}

fn arm_pair(name: &str) -> Result<ArmPair, String> {
    let cfg = full_config(name)?;
    let t = Instant::now();
    let d = pipeline::load_dataset(&cfg).map_err(|e| e.to_string())?;
    let base = run_arm(&cfg, &d, Arm::Baseline);
    let rl = run_arm(&cfg, &d, Arm::Reinforced);
    Ok(ArmPair {
        base,
        rl,
        secs: t.elapsed().as_secs_f64(),
    })
}

fn within(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol * want
}

fn c4_counts() -> Outcome {
    let targets = [
        ("red wine", "redwine.toml", 247.0, 375.0, 0.10, 0.20),
        ("white wine", "whitewine.toml", 1995.0, 3269.0, 0.10, 0.20),
        ("weather", "weather.toml", 2384.0, 3415.0, 0.30, 0.30),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, file, sn, rl, tol_sn, tol_rl) in targets {
        match arm_pair(file) {
            Err(e) => {
                pass = false;
                parts.push(format!("{label}: not evaluated, {e}"));
            }
            Ok(p) => {
                let pre = p.base.mean_labeled_post.unwrap_or(f64::NAN);
                let post = p.rl.mean_labeled_post.unwrap_or(f64::NAN);
                let ok_pre = within(pre, sn, tol_sn);
                let ok_post = within(post, rl, tol_rl) && post > pre;
                let ok_time = p.secs < 300.0;
                pass &= ok_pre && ok_post && ok_time;
                parts.push(format!(
                    "{label}: baseline {pre:.1} vs {sn} [{}], RL {post:.1} vs {rl} [{}], {:.1}s",
                    if ok_pre { "ok" } else { "off" },
                    if ok_post { "ok" } else { "off" },
                    p.secs
                ));
            }
        }
    }
    Outcome::new(pass, parts.join("; "))
}

fn c5_gains() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let checks: [(&str, &str, &str, f64); 3] = [
        ("white wine", "whitewine.toml", "f1", 0.20),
        ("red wine", "redwine.toml", "accuracy", 0.0),
        ("weather", "weather.toml", "f1", 0.15),
    ];
    for (label, file, metric, floor) in checks {
        match arm_pair(file) {
            Err(e) => {
                pass = false;
                parts.push(format!("{label}: not evaluated, {e}"));
            }
            Ok(p) => {
                let pick = |r: &RunReport| {
                    r.mean
                        .map(|m| if metric == "f1" { m.f1 } else { m.accuracy })
                        .unwrap_or(f64::NAN)
                };
                let (b, r) = (pick(&p.base), pick(&p.rl));
                let ok = r >= b + floor && p.rl.ok_runs == 5 && p.base.ok_runs == 5;
                pass &= ok;
                parts.push(format!(
                    "{label}: {metric} {b:.4} -> {r:.4} (need gain >= {floor}) [{}]",
                    if ok { "ok" } else { "off" }
                ));
            }
        }
    }
    Outcome::new(pass, parts.join("; "))
}

fn c6_metrics() -> Outcome {
    let cfg = match full_config("whitewine_metrics.toml") {
        Ok(c) => c,
        Err(e) => return Outcome::new(false, format!("white wine: not evaluated, {e}")),
    };
    let rep = pipeline::sweep(&cfg).unwrap();
    let pts = rep.points();
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in MetricKind::ALL {
        let f1 = |arm: Arm| {
            pts.iter()
                .find(|p| p.value == kind.name() && p.arm == arm)
                .and_then(|p| p.f1)
                .unwrap_or(f64::NAN)
        };
        let (b, r) = (f1(Arm::Baseline), f1(Arm::Reinforced));
        pass &= r > b;
        parts.push(format!("{kind} {b:.3}->{r:.3}"));
    }
    Outcome::new(pass, parts.join(", "))
}

// ---------------------------------------------------------------- criterion 7

fn c7_iqr() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let k = 100_000;
    let mut effects = EffectMatrix::zeros(k, 1);
    for i in 0..k {
        effects.set(i, 0, StandardNormal.sample(&mut rng));
    }
    let mat = LabelMatrix::abstaining(k, vec!["lf".into()]);
    let b = iqr_boundaries(&effects, &mat, 1.5, IqrScope::Global, IqrPopulation::AbstainOnly).unwrap();
    let post = augment(&mat, &effects, &b).unwrap();
    let frac = post.labeled_cells() as f64 / k as f64;
    let normal_ok = frac <= 0.02;

    let counts = |lf_file: &str| -> Vec<usize> {
        let mut cfg = fixture_config("youtube_synthetic.toml");
        cfg.lfs.as_mut().unwrap().path = root().join("fixtures/lfs").join(lf_file);
        let d = pipeline::load_dataset(&cfg).unwrap();
        let parts = pipeline::split_for(&cfg, &d, cfg.run.seed, Arm::Reinforced).unwrap();
        let mat = pipeline::apply_lfs(&cfg, &parts.unlabeled).unwrap();
        [0.5, 1.0, 1.5, 2.0]
            .iter()
            .map(|&h| reinforce(&mat, &parts.unlabeled, &ReinforceParams::iqr(h)).unwrap().diagnostics.labeled_post)
            .collect()
    };
    let five = counts("youtube.lf");
    let twelve = counts("youtube_sweep.lf");
    let monotone = five.windows(2).all(|w| w[1] <= w[0]);
    Outcome::new(
        normal_ok && monotone,
        format!(
            "normal sample: {:.3}% of cells augmented at h=1.5; labeled counts over h=0.5,1,1.5,2: {five:?} (12 LFs: {twelve:?})",
            100.0 * frac
        ),
    )
}

// ---------------------------------------------------------------- criterion 8

fn c8_numeric() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut problems = Vec::new();

    // gradient against central differences
    let mut worst_grad = 0.0f64;
    for trial in 0..20 {
        let dim = rng.random_range(1..6);
        let n = rng.random_range(5..40);
        let sparse = trial % 2 == 1;
        let feats: Vec<FeatureVector> = (0..n)
            .map(|_| {
                if sparse {
                    let e: Vec<(u32, f64)> = (0..dim as u32)
                        .filter_map(|i| rng.random_bool(0.4).then(|| (i, rng.random_range(1..4) as f64)))
                        .collect();
                    FeatureVector::Sparse(SparseVector::new(dim, e).unwrap())
                } else {
                    FeatureVector::Dense((0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
                }
            })
            .collect();
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let c = if trial % 4 < 2 { 1.0 } else { 1000.0 };
        let theta: Vec<f64> = (0..=dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = logreg_gradient(&feats, &labels, c, &theta);
        for i in 0..theta.len() {
            let h = 1e-6 * theta[i].abs().max(1.0);
            let (mut a, mut b) = (theta.clone(), theta.clone());
            a[i] += h;
            b[i] -= h;
            let fd = (logreg_objective(&feats, &labels, c, &a) - logreg_objective(&feats, &labels, c, &b)) / (2.0 * h);
            let rel = (g[i] - fd).abs() / g[i].abs().max(fd.abs()).max(1.0);
            worst_grad = worst_grad.max(rel);
        }
    }
    if worst_grad > 1e-5 {
        problems.push(format!("gradient error {worst_grad:.1e}"));
    }

    let pairs = 10_000;
    let rand_vec = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> {
        (0..n)
            .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random_range(-1.0..1.0) })
            .collect()
    };

    let mut worst_mink = 0.0f64;
    let e = MetricSpec::euclidean();
    let m2 = MetricSpec::minkowski(2.0);
    for _ in 0..pairs {
        let n = rng.random_range(1..12);
        let (x, y) = (FeatureVector::Dense(rand_vec(&mut rng, n)), FeatureVector::Dense(rand_vec(&mut rng, n)));
        let (a, b) = (distance(&e, &x, &y).unwrap(), distance(&m2, &x, &y).unwrap());
        worst_mink = worst_mink.max((a - b).abs() / a.max(f64::MIN_POSITIVE));
    }
    if worst_mink > 1e-12 {
        problems.push(format!("minkowski(2) vs euclidean {worst_mink:.1e}"));
    }

    // a fixed-dimension sample backs the Mahalanobis inverse
    let n = 6;
    let rows: Vec<Vec<f64>> = (0..50).map(|_| rand_vec(&mut rng, n)).collect();
    let names: Vec<String> = (0..n).map(|i| format!("f{i}")).collect();
    let inv = mahalanobis_precompute(&Dataset::numeric(names, rows, None).unwrap(), 1e-6).unwrap();
    let mut asym = 0usize;
    let mut worst_self = 0.0f64;
    for kind in MetricKind::ALL {
        let spec = match kind {
            MetricKind::Mahalanobis => MetricSpec::mahalanobis(inv.clone()),
            MetricKind::Minkowski => MetricSpec::minkowski(rng.random_range(1.0..8.0)),
            k => MetricSpec::new(k),
        };
        for p in 0..pairs {
            let (x, y) = if p % 4 == 3 && kind != MetricKind::Mahalanobis {
                let mk = |rng: &mut ChaCha8Rng| {
                    let e: Vec<(u32, f64)> = (0..n as u32)
                        .filter_map(|i| rng.random_bool(0.3).then(|| (i, rng.random_range(1..3) as f64)))
                        .collect();
                    FeatureVector::Sparse(SparseVector::new(n, e).unwrap())
                };
                (mk(&mut rng), mk(&mut rng))
            } else {
                (FeatureVector::Dense(rand_vec(&mut rng, n)), FeatureVector::Dense(rand_vec(&mut rng, n)))
            };
            let (a, b) = (distance(&spec, &x, &y).unwrap(), distance(&spec, &y, &x).unwrap());
            asym += usize::from(a != b || !(a >= 0.0));
            worst_self = worst_self.max(distance(&spec, &x, &x).unwrap().abs());
        }
    }
    if asym > 0 {
        problems.push(format!("{asym} asymmetric or negative pairs"));
    }
    if worst_self > 1e-12 {
        problems.push(format!("self distance up to {worst_self:.1e}"));
    }
    Outcome::new(
        problems.is_empty(),
        format!(
            "gradient rel error {worst_grad:.1e}, minkowski(2)/euclidean {worst_mink:.1e}, 7 metrics x {pairs} pairs: {asym} asymmetric, max self distance {worst_self:.1e}{}",
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join(", ")) }
        ),
    )
}

// ---------------------------------------------------------------- criterion 9

fn c9_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for name in ["redwine_small.toml", "youtube_synthetic.toml"] {
        let cfg = root().join("fixtures/configs").join(name);
        let mut reports = Vec::new();
        for rep in ["a", "b"] {
            let out = tmp.path().join(format!("{name}-{rep}"));
            let args = [
                "labelaug".into(),
                "run".into(),
                "--sequential".into(),
                "--repeats".into(),
                "3".into(),
                "--config".into(),
                cfg.clone().into_os_string(),
                "--out".into(),
                out.clone().into_os_string(),
            ];
            labelaug_cli::run_args::<_, std::ffi::OsString>(args).unwrap();
            let mut v: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
            v.as_object_mut().unwrap().remove("timings");
            reports.push(serde_json::to_vec(&v).unwrap());
        }
        let same = reports[0] == reports[1];
        pass &= same;
        parts.push(format!("{name}: {}", if same { "identical" } else { "differ" }));
    }
    Outcome::new(pass, parts.join(", "))
}
