//! End-to-end tests of the `seamtrace` binary and the command functions.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use seamtrace_cli::commands::{cmd_eval, cmd_extract, cmd_overlay, cmd_synth, ContourFile};
use seamtrace_core::{Config, ImageGrid, Point};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seamtrace"))
}

fn write_spec(dir: &Path, seed: u64, noise: f64) -> PathBuf {
    let path = dir.join("spec.json");
    fs::write(
        &path,
        format!(
            r#"{{"width": 180, "height": 180, "contour": {{"family": "parabola"}},
                "contrast": 0.7, "softness": 1.0, "noise": {noise}, "seed": {seed}}}"#
        ),
    )
    .unwrap();
    path
}

fn synth_corpus(dir: &Path, count: usize, seed: u64, noise: f64) -> PathBuf {
    let spec = write_spec(dir, seed, noise);
    let corpus = dir.join("corpus");
    let status = bin()
        .args(["synth", "--count", &count.to_string()])
        .arg("--spec")
        .arg(&spec)
        .arg("--out")
        .arg(&corpus)
        .status()
        .unwrap();
    assert!(status.success());
    corpus
}

#[test]
fn full_pipeline_through_binary() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(tmp.path(), 2, 11, 0.02);
    for i in 0..2 {
        assert!(corpus.join(format!("{i:03}.pgm")).exists());
        assert!(corpus.join(format!("{i:03}.json")).exists());
    }
    assert!(corpus.join("manifest.json").exists());

    let out = tmp.path().join("contour.json");
    let seams = tmp.path().join("seams.json");
    let status = bin()
        .args(["extract", "--squares", "25"])
        .arg("--image")
        .arg(corpus.join("000.pgm"))
        .arg("--annotation")
        .arg(corpus.join("000.json"))
        .arg("--out")
        .arg(&out)
        .arg("--seams-out")
        .arg(&seams)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.exists());
    assert!(seams.exists());
    assert!(tmp.path().join("contour.report.json").exists());

    let parsed: ContourFile = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(parsed.contour.len() > 50);
    assert_eq!(parsed.config.square_count, 25);

    let overlay = tmp.path().join("overlay.ppm");
    let status = bin()
        .arg("overlay")
        .arg("--image")
        .arg(corpus.join("000.pgm"))
        .arg("--contour")
        .arg(&out)
        .arg("--seams")
        .arg(&seams)
        .arg("--out")
        .arg(&overlay)
        .status()
        .unwrap();
    assert!(status.success());
    let img = ImageGrid::load(&overlay).unwrap();
    assert_eq!(img.width(), 180);
}

#[test]
fn eval_summary_is_mean_of_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(tmp.path(), 3, 21, 0.03);
    let preds = tmp.path().join("preds");
    fs::create_dir(&preds).unwrap();
    for i in 0..3 {
        cmd_extract(
            &corpus.join(format!("{i:03}.pgm")),
            &corpus.join(format!("{i:03}.json")),
            &Config {
                square_count: 20,
                ..Config::default()
            },
            &preds.join(format!("{i:03}.json")),
            None,
            Some(&tmp.path().join(format!("{i:03}.report.json"))),
        )
        .unwrap();
    }
    let csv_path = tmp.path().join("eval.csv");
    cmd_eval(&preds, &corpus, &Config::default(), &csv_path, None).unwrap();
    let text = fs::read_to_string(&csv_path).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    for col in 0..2 {
        let mean = (rows[0][col] + rows[1][col] + rows[2][col]) / 3.0;
        assert!(
            (mean - rows[3][col]).abs() <= 1e-12 * mean.abs().max(1.0),
            "column {col}: {mean} vs {}",
            rows[3][col]
        );
    }
}

#[test]
fn eval_of_truth_as_prediction_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(tmp.path(), 2, 31, 0.0);
    let preds = tmp.path().join("preds");
    fs::create_dir(&preds).unwrap();
    // Use each truth contour itself as the prediction, with landmark
    // sampling matched by sampling the same number of points.
    for i in 0..2 {
        let ann = seamtrace_core::parse_annotation(corpus.join(format!("{i:03}.json"))).unwrap();
        let contour = ann.contour.clone().unwrap();
        let file = ContourFile {
            contour,
            config: Config::default(),
        };
        fs::write(
            preds.join(format!("{i:03}.json")),
            serde_json::to_string(&file).unwrap(),
        )
        .unwrap();
    }
    let csv_path = tmp.path().join("eval.csv");
    cmd_eval(&preds, &corpus, &Config::default(), &csv_path, None).unwrap();
    let text = fs::read_to_string(&csv_path).unwrap();
    for line in text.lines().skip(2) {
        let dme: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(dme < 1e-12, "dme {dme} in {line}");
    }
}

#[test]
fn eval_accepts_landmark_text_files() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(tmp.path(), 1, 41, 0.0);
    let ann = seamtrace_core::parse_annotation(corpus.join("000.json")).unwrap();
    let preds = tmp.path().join("preds");
    fs::create_dir(&preds).unwrap();
    let mut text = String::from("# third-party landmarks\n");
    for p in &ann.landmarks {
        text.push_str(&format!("{} {}\n", p.x, p.y));
    }
    fs::write(preds.join("000.txt"), text).unwrap();
    let csv_path = tmp.path().join("eval.csv");
    cmd_eval(&preds, &corpus, &Config::default(), &csv_path, None).unwrap();
    let content = fs::read_to_string(&csv_path).unwrap();
    let row = content.lines().nth(2).unwrap();
    let sme: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!(sme < 1e-12, "landmarks equal truth, sme {sme}");
}

#[test]
fn eval_rejects_malformed_landmark_line() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(tmp.path(), 1, 51, 0.0);
    let preds = tmp.path().join("preds");
    fs::create_dir(&preds).unwrap();
    fs::write(preds.join("000.txt"), "10 20\nnot numbers\n30 40\n").unwrap();
    let err = cmd_eval(
        &preds,
        &corpus,
        &Config::default(),
        &tmp.path().join("eval.csv"),
        None,
    )
    .unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
}

#[test]
fn overlay_with_no_contours_is_plain_p6_conversion() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(tmp.path(), 1, 61, 0.04);
    let out = tmp.path().join("plain.ppm");
    cmd_overlay(&corpus.join("000.pgm"), &[], None, &out).unwrap();
    let src = ImageGrid::load(corpus.join("000.pgm")).unwrap();
    let bytes = fs::read(&out).unwrap();
    let rgb = ImageGrid::from_pnm_bytes(&bytes).unwrap();
    // Identical gray values once the triplicated channels collapse back.
    assert_eq!(src.to_bytes(), rgb.to_bytes());
    // Raw payload is the exact triplication of the source bytes.
    let payload = &bytes[bytes.len() - 180 * 180 * 3..];
    for (i, &b) in src.to_bytes().iter().enumerate() {
        assert_eq!(payload[3 * i], b);
        assert_eq!(payload[3 * i + 1], b);
        assert_eq!(payload[3 * i + 2], b);
    }
}

#[test]
fn synth_zero_count_writes_valid_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), 71, 0.0);
    let out = tmp.path().join("empty");
    cmd_synth(&spec, 0, None, &out).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["count"], 0);
    assert_eq!(manifest["images"].as_array().unwrap().len(), 0);
}

#[test]
fn same_spec_and_seed_give_identical_manifests() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), 81, 0.05);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    cmd_synth(&spec, 3, None, &a).unwrap();
    cmd_synth(&spec, 3, None, &b).unwrap();
    assert_eq!(
        fs::read(a.join("manifest.json")).unwrap(),
        fs::read(b.join("manifest.json")).unwrap()
    );
    for i in 0..3 {
        assert_eq!(
            fs::read(a.join(format!("{i:03}.pgm"))).unwrap(),
            fs::read(b.join(format!("{i:03}.pgm"))).unwrap()
        );
    }
}

#[test]
fn extract_without_landmarks_fails_with_stage_and_code() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(tmp.path(), 1, 91, 0.0);
    fs::write(tmp.path().join("bad.json"), r#"{"landmarks": []}"#).unwrap();
    let output = bin()
        .arg("extract")
        .arg("--image")
        .arg(corpus.join("000.pgm"))
        .arg("--annotation")
        .arg(tmp.path().join("bad.json"))
        .arg("--out")
        .arg(tmp.path().join("c.json"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("annotation"), "{stderr}");
    assert!(stderr.contains("no initial curve source"), "{stderr}");
}

#[test]
fn sweep_produces_one_row_per_grid_value() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(tmp.path(), 1, 101, 0.02);
    let out = tmp.path().join("sweep.csv");
    let status = bin()
        .args([
            "sweep",
            "--param",
            "square_size_factor",
            "--values",
            "0.15,0.2,0.25,0.3,0.35",
            "--squares",
            "15",
        ])
        .arg("--corpus")
        .arg(&corpus)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 5);
    for (row, v) in rows.iter().zip(["0.15", "0.2", "0.25", "0.3", "0.35"]) {
        assert!(
            row.starts_with(&format!("square_size_factor,{v},")),
            "{row}"
        );
    }
}

#[test]
fn degenerate_sweep_matches_eval_of_single_extract() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(tmp.path(), 1, 111, 0.02);
    let cfg = Config {
        square_count: 20,
        ..Config::default()
    };

    // One extract + eval.
    let preds = tmp.path().join("preds");
    fs::create_dir(&preds).unwrap();
    cmd_extract(
        &corpus.join("000.pgm"),
        &corpus.join("000.json"),
        &cfg,
        &preds.join("000.json"),
        None,
        None,
    )
    .unwrap();
    let eval_csv = tmp.path().join("eval.csv");
    cmd_eval(&preds, &corpus, &cfg, &eval_csv, None).unwrap();
    let eval_text = fs::read_to_string(&eval_csv).unwrap();
    let eval_dme: f64 = eval_text
        .lines()
        .nth(2)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();

    // Sweep with a single grid value equal to the config default.
    let sweep_csv = tmp.path().join("sweep.csv");
    seamtrace_cli::commands::cmd_sweep(&corpus, "alpha", "0.7", &cfg, &sweep_csv).unwrap();
    let sweep_text = fs::read_to_string(&sweep_csv).unwrap();
    let sweep_dme: f64 = sweep_text
        .lines()
        .nth(2)
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert!(
        (eval_dme - sweep_dme).abs() < 1e-12,
        "eval {eval_dme} vs sweep {sweep_dme}"
    );
}

#[test]
fn eval_reports_unmatched_predictions() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(tmp.path(), 1, 121, 0.0);
    let preds = tmp.path().join("preds");
    fs::create_dir(&preds).unwrap();
    let file = ContourFile {
        contour: vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0)],
        config: Config::default(),
    };
    fs::write(
        preds.join("999.json"),
        serde_json::to_string(&file).unwrap(),
    )
    .unwrap();
    let err = cmd_eval(
        &preds,
        &corpus,
        &Config::default(),
        &tmp.path().join("eval.csv"),
        None,
    )
    .unwrap_err();
    assert!(err.to_string().contains("no matching truth"), "{err}");
}

#[test]
fn single_point_and_diagonal_overlay_pixels() {
    let tmp = tempfile::tempdir().unwrap();
    let img = ImageGrid::from_fn(16, 16, |_, _| 0.0);
    let img_path = tmp.path().join("black.pgm");
    img.save_pgm(&img_path).unwrap();
    let contour = ContourFile {
        contour: vec![Point::new(2.0, 3.0)],
        config: Config::default(),
    };
    let cpath = tmp.path().join("single.json");
    fs::write(&cpath, serde_json::to_string(&contour).unwrap()).unwrap();
    let out = tmp.path().join("single.ppm");
    cmd_overlay(&img_path, &[cpath], None, &out).unwrap();
    let bytes = fs::read(&out).unwrap();
    let payload = &bytes[bytes.len() - 16 * 16 * 3..];
    let colored: Vec<usize> = (0..256)
        .filter(|i| payload[3 * i] != 0 || payload[3 * i + 1] != 0 || payload[3 * i + 2] != 0)
        .collect();
    assert_eq!(colored, vec![3 * 16 + 2]);
}
