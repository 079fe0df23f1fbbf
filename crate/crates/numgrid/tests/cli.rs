//! End-to-end tests of the `numgrid` binary: exit codes, stream
//! separation, and the train/classify/evaluate round trip.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn numgrid(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_numgrid"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("failed to spawn numgrid")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn extract_prints_header_and_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pixels = common::render_glyph(4, &mut rng);
    let img = dir.path().join("plus.pgm");
    common::write_pgm(&img, common::CANVAS, common::CANVAS, &pixels);

    let out = numgrid(&["extract", "plus.pgm"], dir.path());
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "header plus one value row");
    assert!(
        lines[0].starts_with("n_horiz_lines,"),
        "header: {}",
        lines[0]
    );
    assert_eq!(lines[0].split(',').count(), 17);
    assert_eq!(lines[1].split(',').count(), 17);
    for v in lines[1].split(',') {
        v.parse::<f64>().unwrap_or_else(|_| panic!("not numeric: {v}"));
    }
}

#[test]
fn blank_image_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    // a lone speckle: binarizes to one tiny component that denoising
    // removes, leaving no ink at all
    let mut pixels = vec![common::BG; common::CANVAS * common::CANVAS];
    pixels[32 * common::CANVAS + 32] = common::INK;
    let img = dir.path().join("blank.pgm");
    common::write_pgm(&img, common::CANVAS, common::CANVAS, &pixels);

    let out = numgrid(&["extract", "blank.pgm"], dir.path());
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    assert!(stdout(&out).is_empty(), "nothing should reach stdout");
    assert!(
        stderr(&out).to_lowercase().contains("blank"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn missing_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = numgrid(&["extract", "no-such-file.pgm"], dir.path());
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
}

#[test]
fn bad_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = numgrid(&["extract", "x.pgm", "--min-run", "0"], dir.path());
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));

    let out = numgrid(
        &[
            "train",
            "--data",
            "d",
            "--type",
            "cubic",
            "--out",
            "m.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("cubic"), "stderr: {}", stderr(&out));
}

#[test]
fn train_classify_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    common::make_dataset(&dir.path().join("data"), 20, &mut rng);

    let out = numgrid(
        &["train", "--data", "data", "--type", "Q", "--out", "model.json"],
        dir.path(),
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(dir.path().join("model.json").exists());

    // classify a fresh instance of a distinctive class and check the
    // answer is a bare label on stdout
    let pixels = common::render_glyph(0, &mut rng);
    let img = dir.path().join("probe.pgm");
    common::write_pgm(&img, common::CANVAS, common::CANVAS, &pixels);
    let out = numgrid(
        &["classify", "--model", "model.json", "probe.pgm"],
        dir.path(),
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let label: usize = stdout(&out).trim().parse().unwrap();
    assert!(label < 10);

    let out = numgrid(
        &[
            "evaluate",
            "--train",
            "data",
            "--resubstitution",
            "--combine",
            "majority3,majority5",
            "--report",
            "report.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let report = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(report.as_bytes());
    assert_eq!(rdr.records().count(), 7, "5 classifiers + 2 combiners");

    // one confusion matrix per report row, written next to the report
    let confusions = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with("confusion_")
        })
        .count();
    assert_eq!(confusions, 7);
}

#[test]
fn evaluate_rejects_test_with_resubstitution() {
    let dir = tempfile::tempdir().unwrap();
    let out = numgrid(
        &[
            "evaluate",
            "--train",
            "a",
            "--test",
            "b",
            "--resubstitution",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
}

#[test]
fn evaluate_markdown_goes_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    common::make_dataset(&dir.path().join("data"), 20, &mut rng);

    let out = numgrid(
        &[
            "evaluate",
            "--train",
            "data",
            "--resubstitution",
            "--types",
            "L,M",
            "--format",
            "markdown",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("| Linear (L) |"), "got: {text}");
    assert!(text.contains("| Mahalanobis (M) |"), "got: {text}");
}

#[test]
fn preprocess_writes_both_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pixels = common::render_glyph(8, &mut rng);
    common::write_pgm(
        &dir.path().join("eight.pgm"),
        common::CANVAS,
        common::CANVAS,
        &pixels,
    );

    let out = numgrid(
        &[
            "preprocess",
            "eight.pgm",
            "--out-filled",
            "filled.png",
            "--out-skeleton",
            "skeleton.png",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    for name in ["filled.png", "skeleton.png"] {
        let img = image::open(dir.path().join(name)).unwrap();
        assert_eq!((img.width(), img.height()), (30, 40), "{name}");
    }
}
