use std::path::PathBuf;

use labelaug::dataset::{
    load_tabular, load_text_csv, minmax_normalize, split, tokenize, DataKind, TabularOptions, TruthTransform,
};
use labelaug::lf::{apply_all, lf_stats, load_lf_set, ABSTAIN};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn wine_opts() -> TabularOptions {
    TabularOptions {
        truth_column: Some("quality".into()),
        truth_transform: TruthTransform::WineQuality,
        ..Default::default()
    }
}

#[test]
fn red_wine_loads_scales_and_splits() {
    let d = load_tabular(root().join("data/winequality-red.csv"), &wine_opts()).unwrap();
    assert_eq!((d.len(), d.dim()), (1599, 11));
    assert_eq!(d.truth().unwrap().iter().filter(|&&y| y == 1).count(), 855);
    let n = minmax_normalize(&d).unwrap();
    let alcohol = n.feature_index("alcohol").unwrap();
    let col: Vec<f64> = n.points().iter().map(|p| p.get(alcohol)).collect();
    assert_eq!(col.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
    assert_eq!(col.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1.0);
    let (a, b) = split(&n, 0.3, 7).unwrap();
    assert_eq!((a.len(), b.len()), (479, 1120));
}

#[test]
fn semicolon_wine_fixture_loads() {
    let d = load_tabular(root().join("fixtures/data/whitewine_synthetic.csv"), &wine_opts()).unwrap();
    assert_eq!((d.len(), d.dim()), (300, 11));
    assert!(d.feature_index("citric acid").is_some());
}

#[test]
fn weather_fixture_tracks_missing_cells() {
    let opts = TabularOptions {
        truth_column: Some("RainTomorrow".into()),
        ..Default::default()
    };
    let d = load_tabular(root().join("fixtures/data/weather_synthetic.csv"), &opts).unwrap();
    assert_eq!(d.dim(), 20);
    let gaps: usize = d.missing().iter().map(Vec::len).sum();
    assert!(gaps > 0);
    let d = minmax_normalize(&d).unwrap();
    let lfs = load_lf_set(root().join("fixtures/lfs/weather.lf"), &d).unwrap();
    let mat = apply_all(&lfs, &d).unwrap();
    let h3 = d.feature_index("Humidity3pm").unwrap();
    for i in 0..d.len() {
        if d.is_missing(i, h3) {
            assert_eq!(mat.get(i, 0), ABSTAIN, "row {i}");
        }
    }
}

#[test]
fn shipped_lf_files_bind_to_their_schemas() {
    let red = minmax_normalize(&load_tabular(root().join("data/winequality-red.csv"), &wine_opts()).unwrap()).unwrap();
    for f in ["redwine.lf", "whitewine.lf"] {
        assert_eq!(load_lf_set(root().join("fixtures/lfs").join(f), &red).unwrap().len(), 3);
    }
    let yt = load_text_csv(
        root().join("fixtures/data/youtube_synthetic.csv"),
        "CONTENT",
        Some("CLASS"),
        TruthTransform::Binary,
    )
    .unwrap();
    assert_eq!(yt.kind(), DataKind::Text);
    assert_eq!(load_lf_set(root().join("fixtures/lfs/youtube.lf"), &yt).unwrap().len(), 5);
    assert_eq!(load_lf_set(root().join("fixtures/lfs/youtube_sweep.lf"), &yt).unwrap().len(), 12);
    // numeric rules cannot bind to text
    assert!(load_lf_set(root().join("fixtures/lfs/redwine.lf"), &yt).is_err());
}

#[test]
fn red_wine_mean_coverage_near_0_08() {
    let red = minmax_normalize(&load_tabular(root().join("data/winequality-red.csv"), &wine_opts()).unwrap()).unwrap();
    let (_, unlabeled) = split(&red, 0.3, 0).unwrap();
    let lfs = load_lf_set(root().join("fixtures/lfs/redwine.lf"), &unlabeled).unwrap();
    let stats = lf_stats(&apply_all(&lfs, &unlabeled).unwrap());
    assert!((stats.mean_coverage() - 0.08).abs() <= 0.01, "{}", stats.mean_coverage());
}

/// Splits on runs of characters that are not ASCII letters or digits, written
/// without the library's helpers.
fn reference_tokens(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in s.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

#[test]
fn tokenizer_matches_reference_on_fixture_comments() {
    let yt = load_text_csv(
        root().join("fixtures/data/youtube_synthetic.csv"),
        "CONTENT",
        None,
        TruthTransform::Binary,
    )
    .unwrap();
    for t in yt.texts().unwrap().iter().take(20) {
        let mut a = tokenize(t);
        let mut b = reference_tokens(t);
        a.sort();
        b.sort();
        assert_eq!(a, b, "{t}");
    }
}
