use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = "[glyphs]
writers = 3
sessions = 2

[train]
epochs = 300

[corpus]
pages = 1
lines_per_page = 2

[evaluate]
epochs = 10, 20
seeds = 1
";

fn glyphseg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glyphseg"))
        .args(args)
        .current_dir(dir)
        .env_remove("GLYPHSEG_SEED")
        .output()
        .unwrap()
}

fn setup() -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.ini");
    std::fs::write(&cfg, SMALL).unwrap();
    (dir, cfg)
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn corpus_train_and_segment_round_trip() {
    let (dir, cfg) = setup();
    let cfg = cfg.to_str().unwrap();
    let o = glyphseg(
        &["--config", cfg, "--out", "gc", "generate-corpus"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let gc = dir.path().join("gc");
    assert!(gc.join("page_000.pbm").is_file());
    let truth: serde_json::Value =
        serde_json::from_slice(&std::fs::read(gc.join("truth.json")).unwrap()).unwrap();
    assert_eq!(truth["pages"][0]["lines"].as_array().unwrap().len(), 2);

    let o = glyphseg(
        &[
            "--config",
            cfg,
            "--out",
            "tr",
            "train",
            "--glyphs",
            "gc/glyphs",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let model = std::fs::read_to_string(dir.path().join("tr/model.txt")).unwrap();
    assert!(model.starts_with("glyphseg-mlp v1"));
    let report = std::fs::read_to_string(dir.path().join("tr/train_report.csv")).unwrap();
    assert_eq!(report.lines().next(), Some("epoch,mse"));
    assert_eq!(report.lines().count(), 301);

    let o = glyphseg(
        &[
            "--config",
            cfg,
            "--out",
            "ss",
            "segment-static",
            "gc/page_000.pbm",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let manifest = std::fs::read_to_string(dir.path().join("ss/manifest_static.jsonl")).unwrap();
    let chars: Vec<serde_json::Value> = manifest
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .filter(|r| r["kind"] == "char")
        .collect();
    assert!(!chars.is_empty());
    for c in &chars {
        assert!(dir
            .path()
            .join("ss/static_chars")
            .join(c["file"].as_str().unwrap())
            .is_file());
    }
    assert!(dir.path().join("ss/overlay_static.pgm").is_file());

    let o = glyphseg(
        &[
            "--config",
            cfg,
            "--out",
            "sd",
            "segment-dynamic",
            "gc/page_000.pbm",
            "--model",
            "tr/model.txt",
            "--glyphs",
            "gc/glyphs",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = std::fs::read_to_string(dir.path().join("sd/manifest_dynamic.jsonl")).unwrap();
    let first_char = manifest
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .find(|r| r["kind"] == "char")
        .expect("at least one recognized character");
    assert!(first_char["label"].is_string());
    assert!(first_char["confidence"].as_f64().unwrap() > 0.0);
}

#[test]
fn preprocess_writes_every_stage() {
    let (dir, cfg) = setup();
    let page = dir.path().join("page.pgm");
    let mut bytes = b"P5\n12 10\n255\n".to_vec();
    bytes.extend((0..120).map(|i| {
        if (i % 12) > 3 && (i % 12) < 8 {
            20u8
        } else {
            230
        }
    }));
    std::fs::write(&page, bytes).unwrap();
    let o = glyphseg(
        &[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "pp",
            "preprocess",
            "page.pgm",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "1_denoised.pgm",
        "2_enhanced.pgm",
        "3_binarized.pbm",
        "4_deskewed.pbm",
        "5_normalized.pbm",
    ] {
        assert!(dir.path().join("pp").join(f).is_file(), "{f}");
    }
    let bin = std::fs::read(dir.path().join("pp/3_binarized.pbm")).unwrap();
    assert!(bin.starts_with(b"P4\n12 10\n"));
}

#[test]
fn evaluate_writes_four_tables_and_asserts_trends() {
    let (dir, cfg) = setup();
    let cfg = cfg.to_str().unwrap();
    let o = glyphseg(
        &["--config", cfg, "--seed", "3", "--out", "ev", "evaluate"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for stem in [
        "table1_static",
        "table2_mse",
        "table3_classification",
        "table4_dynamic",
    ] {
        assert!(dir.path().join(format!("ev/{stem}.csv")).is_file());
        assert!(dir.path().join(format!("ev/{stem}.txt")).is_file());
    }
    // Ten and twenty epochs are far too few for every trend to show.
    let o = glyphseg(
        &[
            "--config",
            cfg,
            "--out",
            "ev2",
            "--assert-trends",
            "evaluate",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 3);
}

#[test]
fn seed_flag_and_environment_agree() {
    let (dir, cfg) = setup();
    let cfg = cfg.to_str().unwrap();
    let o = glyphseg(
        &[
            "--config",
            cfg,
            "--seed",
            "9",
            "--out",
            "a",
            "generate-corpus",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_glyphseg"))
        .args(["--config", cfg, "--out", "b", "generate-corpus"])
        .current_dir(dir.path())
        .env("GLYPHSEG_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let o = glyphseg(
        &[
            "--config",
            cfg,
            "--seed",
            "10",
            "--out",
            "c",
            "generate-corpus",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let read = |d: &str| std::fs::read(dir.path().join(d).join("page_000.pbm")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn exit_codes() {
    let (dir, cfg) = setup();
    let cfg = cfg.to_str().unwrap();
    assert_eq!(code(&glyphseg(&[], dir.path())), 1);
    assert_eq!(code(&glyphseg(&["frobnicate"], dir.path())), 1);
    assert_eq!(code(&glyphseg(&["--help"], dir.path())), 0);
    assert_eq!(
        code(&glyphseg(&["--jobs", "0", "generate-corpus"], dir.path())),
        1
    );

    std::fs::write(dir.path().join("bad.ini"), "[train]\nepochs = lots\n").unwrap();
    assert_eq!(
        code(&glyphseg(
            &["--config", "bad.ini", "generate-corpus"],
            dir.path()
        )),
        1
    );
    assert_eq!(
        code(&glyphseg(
            &["--config", "missing.ini", "generate-corpus"],
            dir.path()
        )),
        1
    );

    std::fs::write(dir.path().join("page.pbm"), b"P4\n8 8\n\x00").unwrap();
    assert_eq!(
        code(&glyphseg(
            &["--out", "x", "segment-static", "page.pbm"],
            dir.path()
        )),
        2
    );
    assert_eq!(
        code(&glyphseg(
            &["--out", "x", "segment-static", "absent.pbm"],
            dir.path()
        )),
        2
    );

    let o = glyphseg(
        &["--config", cfg, "--out", "x", "segment-dynamic", "page.pbm"],
        dir.path(),
    );
    assert_eq!(code(&o), 1, "a missing model is a usage error");

    std::fs::write(dir.path().join("model.txt"), "glyphseg-mlp v1\nnonsense\n").unwrap();
    std::fs::write(dir.path().join("ok.pbm"), b"P4\n8 1\n\x00").unwrap();
    let o = glyphseg(
        &[
            "--out",
            "x",
            "segment-dynamic",
            "ok.pbm",
            "--model",
            "model.txt",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
}
