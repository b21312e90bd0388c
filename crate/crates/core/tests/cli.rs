use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use multiq::classify::NbModel;
use multiq::pipeline::{extract_all, PipelineConfig};
use multiq::profile::load_dataset;
use multiq::{predict_nb, FeatureVector, Label};

fn multiq(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multiq"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("run multiq")
}

fn ok(output: Output) -> Output {
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    output
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn synth_then_features_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    ok(multiq(&["synth", "--seed", "3", "--out", "data"], dir.path()));
    let manifest = dir.path().join("data/manifest.csv");
    let profiles = load_dataset(&manifest).unwrap();
    assert_eq!(profiles.len(), 48);
    assert!(profiles.iter().all(|p| p.len() == 800));

    ok(multiq(&["features", "--manifest", "data/manifest.csv", "--out", "multi"], dir.path()));
    let rows = csv_rows(&dir.path().join("multi/features.csv"));
    assert_eq!(rows.len(), 49);
    assert_eq!(rows[0][..3], ["profile_id", "label", "q=0.1"]);
    assert!(rows[1..].iter().all(|r| r.len() == 22));
    assert_eq!(rows[1][0], "304_00");
    assert_eq!(rows[1][1], "304");

    ok(multiq(&["features", "--manifest", "data/manifest.csv", "--raw", "--range", "high", "--out", "raw"], dir.path()));
    let rows = csv_rows(&dir.path().join("raw/features.csv"));
    assert!(rows[1..].iter().all(|r| r.len() == 2 + 400));

    // file values match the library on the same profiles
    let expected = extract_all(&profiles, &PipelineConfig::default()).unwrap();
    let rows = csv_rows(&dir.path().join("multi/features.csv"));
    for (row, fv) in rows[1..].iter().zip(&expected) {
        let parsed: Vec<f64> = row[2..].iter().map(|x| x.parse().unwrap()).collect();
        assert_eq!(parsed, fv.values);
    }
}

#[test]
fn score_writes_report_scatter_and_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(multiq(
        &["score", "--seed", "1", "--pca", "2", "--out", "run", "--model-out", "model.txt"],
        dir.path(),
    ));
    let report = fs::read_to_string(dir.path().join("run/report.txt")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), report);
    assert!(report.contains("pooled rate: "));
    assert!(report.contains("fold-mean rate: "));
    assert!(report.contains("pca components: 2"));

    let scatter = csv_rows(&dir.path().join("run/scatter.csv"));
    assert_eq!(scatter[0], ["profile_id", "label", "pc1", "pc2"]);
    assert_eq!(scatter.len(), 49);

    let model = NbModel::from_text(&fs::read_to_string(dir.path().join("model.txt")).unwrap()).unwrap();
    assert_eq!(model.classes().len(), 2);
    assert_eq!(model.feature_count(), 20);
    let rows = csv_rows(&dir.path().join("run/features.csv"));
    let first: Vec<f64> = rows[1][2..].iter().map(|x| x.parse().unwrap()).collect();
    let fv = FeatureVector::new(&rows[1][0], Label::new(&rows[1][1]).ok(), first).unwrap();
    assert!(predict_nb(&model, &fv).is_ok());
}

#[test]
fn scatter_subcommand_on_raw_profiles() {
    let dir = tempfile::tempdir().unwrap();
    ok(multiq(&["scatter", "--raw", "--n-per-class", "8", "--out", "s"], dir.path()));
    let rows = csv_rows(&dir.path().join("s/scatter.csv"));
    assert_eq!(rows.len(), 17);
    assert!(rows[1..].iter().all(|r| r.len() == 4 && r[2].parse::<f64>().is_ok()));
}

#[test]
fn sequential_flag_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    ok(multiq(&["table", "--seed", "2", "--n-per-class", "12", "--out", "par"], dir.path()));
    ok(multiq(&["table", "--seed", "2", "--n-per-class", "12", "--sequential", "--out", "seq"], dir.path()));
    let a = fs::read(dir.path().join("par/report.txt")).unwrap();
    let b = fs::read(dir.path().join("seq/report.txt")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    for method in ["Tsallis q = 1", "Tsallis q = 0.1", "Multi-q, q = 0.1..1.0", "Multi-q, q = 0.1..2.0", "Naive Bayes on raw points"] {
        assert_eq!(text.matches(method).count(), 2, "{method}");
    }
}

#[test]
fn errors_carry_file_and_row_context() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.csv"), "potential,amplitude\n-0.6,1\n-0.7,2\n").unwrap();
    fs::write(dir.path().join("b.csv"), "-0.6,1\n-0.5,2\n").unwrap();
    fs::write(dir.path().join("m.csv"), "a.csv,304\nb.csv,316\n").unwrap();
    let out = multiq(&["features", "--manifest", "m.csv", "--out", "o"], dir.path());
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("a.csv"), "{stderr}");
    assert!(stderr.contains("row 3"), "{stderr}");

    let out = multiq(&["features", "--manifest", "missing.csv", "--out", "o"], dir.path());
    assert!(!out.status.success());

    let out = multiq(&["score", "--bins", "1", "--out", "o"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn log_current_transform_on_signed_currents() {
    let dir = tempfile::tempdir().unwrap();
    let mut manifest = String::new();
    for i in 0..6 {
        let label = if i < 3 { "A" } else { "B" };
        let mut text = String::from("potential,amplitude\n");
        for k in 0..50 {
            let e = -0.6 + 0.016 * k as f64;
            let current = (e + 0.25) * 1e-6 * (1.0 + 0.1 * i as f64) * if label == "A" { 1.0 } else { 5.0 };
            text.push_str(&format!("{e},{current}\n"));
        }
        fs::write(dir.path().join(format!("c{i}.csv")), text).unwrap();
        manifest.push_str(&format!("c{i}.csv,{label}\n"));
    }
    fs::write(dir.path().join("m.csv"), manifest).unwrap();
    ok(multiq(&["score", "--manifest", "m.csv", "--log-current", "--folds", "3", "--out", "o"], dir.path()));
    let report = fs::read_to_string(dir.path().join("o/report.txt")).unwrap();
    assert!(report.contains("log transform: true"));
}
