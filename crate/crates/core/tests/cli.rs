use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn calscan(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_calscan"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    calscan(args).status.code().expect("exit code")
}

fn synth(dir: &Path, count: usize, seed: u64, extra: &[&str]) {
    let count = count.to_string();
    let seed = seed.to_string();
    let mut args = vec![
        "synth",
        "--count",
        &count,
        "--seed",
        &seed,
        "--side",
        "200",
        "--out",
        dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let out = calscan(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_2_and_help_exits_0() {
    assert_eq!(code(&[]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["synth"]), 2);
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["detect", "--help"]), 0);
    assert_eq!(
        code(&[
            "synth",
            "--count",
            "2",
            "--fracture-rate",
            "1.5",
            "--out",
            "/nonexistent/never"
        ]),
        2
    );
}

#[test]
fn missing_inputs_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("absent.model");
    let image = dir.path().join("absent.png");
    let out = dir.path().join("r.json");
    assert_eq!(
        code(&[
            "detect",
            "--model",
            model.to_str().unwrap(),
            "--image",
            image.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ]),
        1
    );
    std::fs::write(&model, b"not a model").unwrap();
    assert_eq!(
        code(&[
            "detect",
            "--model",
            model.to_str().unwrap(),
            "--image",
            image.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ]),
        1
    );
    assert!(!out.exists());
}

#[test]
fn synth_is_deterministic_and_annotated() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    synth(a.path(), 3, 7, &["--fracture-rate", "1.0"]);
    synth(b.path(), 3, 7, &["--fracture-rate", "1.0"]);
    let ann = read_json(&a.path().join("annotations.json"));
    let records = ann.as_array().unwrap();
    assert_eq!(records.len(), 3);
    for rec in records {
        let img = rec["image"].as_str().unwrap();
        assert_eq!(
            std::fs::read(a.path().join(img)).unwrap(),
            std::fs::read(b.path().join(img)).unwrap(),
            "{img} differs between runs"
        );
        assert_eq!(rec["landmarks"].as_array().unwrap().len(), 4);
        assert_eq!(rec["fractured"], Value::Bool(true));
        assert!(!rec["fracture_polygons"].as_array().unwrap().is_empty());
    }
    assert_eq!(
        std::fs::read(a.path().join("annotations.json")).unwrap(),
        std::fs::read(b.path().join("annotations.json")).unwrap()
    );
}

#[test]
fn start_offset_gives_disjoint_cases() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    synth(a.path(), 2, 3, &[]);
    synth(b.path(), 1, 3, &["--start", "1"]);
    assert_eq!(
        std::fs::read(a.path().join("images/case_00001.png")).unwrap(),
        std::fs::read(b.path().join("images/case_00001.png")).unwrap()
    );
    assert!(!b.path().join("images/case_00000.png").exists());
}

#[test]
fn roi_writes_image_mask_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 2, 5, &["--fracture-rate", "1.0"]);
    let out = dir.path().join("roi");
    let ann = dir.path().join("annotations.json");
    assert_eq!(
        code(&[
            "roi",
            "--annotations",
            ann.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ]),
        0
    );
    for stem in ["case_00000", "case_00001"] {
        assert!(out.join(format!("{stem}_roi.png")).exists());
        assert!(out.join(format!("{stem}_mask.png")).exists());
        let side = read_json(&out.join(format!("{stem}_roi.json")));
        assert_eq!(side["landmarks_source"], "annotation");
        assert_eq!(side["fractured"], Value::Bool(true));
        let roi = image::open(out.join(format!("{stem}_roi.png"))).unwrap();
        assert_eq!((roi.width(), roi.height()), (512, 512));
    }
}

#[test]
fn train_detect_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 3, 11, &[]);
    let ann = dir.path().join("annotations.json");
    let model = dir.path().join("m.model");
    assert_eq!(
        code(&[
            "train",
            "--annotations",
            ann.to_str().unwrap(),
            "--out",
            model.to_str().unwrap(),
            "--seed",
            "1"
        ]),
        0
    );
    assert!(model.exists());

    let image = dir.path().join("images/case_00000.png");
    let report = dir.path().join("detect.json");
    let overlay = dir.path().join("overlay.png");
    let args = [
        "detect",
        "--model",
        model.to_str().unwrap(),
        "--image",
        image.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
        "--overlay",
        overlay.to_str().unwrap(),
    ];
    assert_eq!(code(&args), 0);
    let r = read_json(&report);
    assert_eq!(r["landmarks"].as_array().unwrap().len(), 4);
    assert!(r["angles"]["ba"].is_number(), "{}", r["angles"]);
    assert_eq!(r["diagnostics"]["stages"].as_array().unwrap().len(), 4);
    assert!(overlay.exists());
    let first = std::fs::read(&report).unwrap();
    assert_eq!(code(&args), 0);
    let again: Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    let before: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(before["landmarks"], again["landmarks"], "same seed, same landmarks");

    let metrics = dir.path().join("metrics.json");
    let csv = dir.path().join("metrics.csv");
    assert_eq!(
        code(&[
            "evaluate",
            "--model",
            model.to_str().unwrap(),
            "--annotations",
            ann.to_str().unwrap(),
            "--out",
            metrics.to_str().unwrap(),
            "--csv",
            csv.to_str().unwrap(),
            "--rotate-test",
        ]),
        0
    );
    let m = read_json(&metrics);
    assert_eq!(m["summaries"].as_array().unwrap().len(), 2);
    assert_eq!(m["cases"].as_array().unwrap().len(), 6);
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.lines().count() >= 3, "{table}");

    // Records without landmarks are detected when a model is supplied.
    let mut records = read_json(&ann);
    records[0]["landmarks"] = Value::Null;
    let partial = dir.path().join("partial.json");
    std::fs::write(&partial, serde_json::to_vec(&records).unwrap()).unwrap();
    let roi_out = dir.path().join("roi");
    assert_eq!(
        code(&[
            "roi",
            "--annotations",
            partial.to_str().unwrap(),
            "--out",
            roi_out.to_str().unwrap()
        ]),
        1
    );
    assert_eq!(
        code(&[
            "roi",
            "--annotations",
            partial.to_str().unwrap(),
            "--out",
            roi_out.to_str().unwrap(),
            "--model",
            model.to_str().unwrap(),
        ]),
        0
    );
    assert_eq!(
        read_json(&roi_out.join("case_00000_roi.json"))["landmarks_source"],
        "detected"
    );
}
