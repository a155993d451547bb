use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn schematik(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schematik"))
        .args(args)
        .env_remove("SCHEMATIK_OCR_CMD")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = schematik(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn zero_pages_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = schematik(&["generate", "-n", "0", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("manifest.jsonl").exists());
}

#[test]
fn generate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(&["generate", "-n", "10", "--seed", "1", "--out", p(a.path())]);
    ok(&["generate", "-n", "10", "--seed", "1", "--out", p(b.path())]);
    assert_eq!(tree(a.path()), tree(b.path()));
}

#[test]
fn detect_oracle_matches_annotations_and_external_passes_through() {
    let data = tempfile::tempdir().unwrap();
    let work = tempfile::tempdir().unwrap();
    ok(&[
        "generate",
        "-n",
        "2",
        "--seed",
        "3",
        "--out",
        p(data.path()),
    ]);
    let dets = work.path().join("dets.json");
    ok(&[
        "detect",
        "--dataset",
        p(data.path()),
        "--detector",
        "oracle",
        "--out",
        p(&dets),
    ]);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&dets).unwrap()).unwrap();
    let records = v.as_array().unwrap();
    let mut expected = 0;
    for name in fs::read_dir(data.path().join("annotations")).unwrap() {
        expected += fs::read_to_string(name.unwrap().path())
            .unwrap()
            .matches("<object>")
            .count();
    }
    assert_eq!(records.len(), expected);
    assert!(records.iter().all(|r| r["confidence"] == 1.0));

    let spec = format!("external:{}", p(&dets));
    let again = ok(&["detect", "--dataset", p(data.path()), "--detector", &spec]);
    let w: serde_json::Value = serde_json::from_str(&again).unwrap();
    assert_eq!(v, w);

    fs::write(
        &dets,
        r#"[{"page_id": "page_00000", "label": "Nonsense", "confidence": 1, "box": [1, 1, 5, 5]}]"#,
    )
    .unwrap();
    let out = schematik(&["detect", "--dataset", p(data.path()), "--detector", &spec]);
    assert!(!out.status.success());
}

#[test]
fn rlsa_on_blank_page_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("blank.png");
    schematik::raster::PageImage::blank(300, 400)
        .save_png(&img)
        .unwrap();
    let out = ok(&["detect", "--images", p(&img), "--detector", "rlsa"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v, serde_json::json!([]));
}

#[test]
fn pipeline_sweep_and_report() {
    let data = tempfile::tempdir().unwrap();
    let work = tempfile::tempdir().unwrap();
    ok(&[
        "generate",
        "-n",
        "2",
        "--seed",
        "11",
        "--columns",
        "3",
        "--out",
        p(data.path()),
    ]);

    let clean = work.path().join("clean");
    let stdout = ok(&[
        "pipeline",
        "--dataset",
        p(data.path()),
        "--out",
        p(&clean),
        "--seed",
        "4",
    ]);
    assert!(
        stdout.contains("segmented cer 0.0000 wer 0.0000"),
        "{stdout}"
    );
    let run: serde_json::Value =
        serde_json::from_slice(&fs::read(clean.join("run.json")).unwrap()).unwrap();
    assert_eq!(run["params"]["padding"], 4.0);
    assert_eq!(run["params"]["scale"], 1.6);
    assert_eq!(run["seed"], 4);

    let noisy = work.path().join("noisy");
    ok(&[
        "pipeline",
        "--dataset",
        p(data.path()),
        "--out",
        p(&noisy),
        "--sub-rate",
        "0.02",
        "--padding",
        "2",
        "--scale",
        "1.2",
    ]);
    let run: serde_json::Value =
        serde_json::from_slice(&fs::read(noisy.join("run.json")).unwrap()).unwrap();
    assert_eq!(run["params"]["padding"], 2.0);
    assert_eq!(run["corruption"]["substitution_rate"], 0.02);

    let table = ok(&["report", p(&noisy), "--out", p(&work.path().join("cmp"))]);
    assert!(table.contains("mock full page"));
    assert!(table.contains("oracle+mock segmented"));
    assert!(work.path().join("cmp/comparison.csv").is_file());

    let sw = work.path().join("sweep");
    let stdout = ok(&[
        "sweep",
        "--dataset",
        p(data.path()),
        "--out",
        p(&sw),
        "--paddings",
        "0,4",
        "--scales",
        "1.0,1.6,2.0",
    ]);
    assert!(
        stdout.starts_with("CER\npadding\\scale,1,1.6,2\n"),
        "{stdout}"
    );
    assert!(sw.join("cer_heatmap.png").is_file());
}

#[test]
fn report_replays_scenario_rows() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("rows.json");
    fs::write(
        &f,
        r#"[{"name": "a", "cer": 0.2, "wer": 0.5}, {"name": "b", "cer": 0.1, "wer": 0.4}]"#,
    )
    .unwrap();
    let table = ok(&["report", p(&f)]);
    assert!(table.contains("| a | b | 50.00% | 20.00% |"), "{table}");

    let g = dir.path().join("other.json");
    fs::write(
        &g,
        r#"{"name": "c", "pages": [{"page_id": "x", "cer": 0.1, "wer": 0.1}]}"#,
    )
    .unwrap();
    let out = schematik(&["report", p(&f), p(&g)]);
    assert!(!out.status.success());
}

#[test]
fn split_and_stats() {
    let data = tempfile::tempdir().unwrap();
    ok(&[
        "generate",
        "-n",
        "10",
        "--seed",
        "2",
        "--out",
        p(data.path()),
    ]);
    let line = ok(&["split", "--dataset", p(data.path()), "--fraction", "0.8"]);
    assert_eq!(line.trim(), "train 8, val 2");
    let manifest = fs::read_to_string(data.path().join("manifest.jsonl")).unwrap();
    assert_eq!(manifest.matches("\"train\"").count(), 8);

    let stats = ok(&["stats", "--dataset", p(data.path()), "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stats).unwrap();
    assert!(v["count"].as_u64().unwrap() > 10);
    assert!(v["ratio"]["min"].as_f64().unwrap() <= v["ratio"]["mean"].as_f64().unwrap());
}

#[test]
fn augment_writes_a_dataset() {
    let data = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    ok(&[
        "generate",
        "-n",
        "2",
        "--seed",
        "6",
        "--out",
        p(data.path()),
    ]);
    ok(&[
        "augment",
        "--dataset",
        p(data.path()),
        "--out",
        p(out.path()),
        "--seed",
        "1",
    ]);
    ok(&["stats", "--dataset", p(out.path())]);
    assert_ne!(
        fs::read(data.path().join("images/page_00000.png")).unwrap(),
        fs::read(out.path().join("images/page_00000.png")).unwrap()
    );
}

#[test]
fn missing_external_engine_command_fails() {
    let data = tempfile::tempdir().unwrap();
    let work = tempfile::tempdir().unwrap();
    ok(&["generate", "-n", "1", "--out", p(data.path())]);
    let out = schematik(&[
        "pipeline",
        "--dataset",
        p(data.path()),
        "--out",
        p(work.path()),
        "--engine",
        "external",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("SCHEMATIK_OCR_CMD"));
}
