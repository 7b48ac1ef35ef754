//! Black-box CLI tests: exit codes, output files, and the documented
//! synth → train → eval flow.

use std::path::Path;
use std::process::{Command, Output};

fn tatr(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tatr"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn tatr")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn unknown_flag_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = tatr(dir.path(), &["train", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));

    let out = tatr(dir.path(), &["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = tatr(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("gradcheck"));
}

#[test]
fn missing_input_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = tatr(
        dir.path(),
        &[
            "train",
            "--schema",
            "nope.txt",
            "--train-manifest",
            "x",
            "--annotations",
            "y",
            "--out",
            "out",
        ],
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn gradcheck_passes_and_prints_error_magnitude() {
    let dir = tempfile::tempdir().unwrap();
    let out = tatr(dir.path(), &["gradcheck", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    for variant in ["pool", "pool-sep", "shared", "proposed"] {
        assert!(text.contains(variant), "missing {variant} line:\n{text}");
    }
    assert!(text.contains("passed"));
}

#[test]
fn synth_train_eval_flow_reaches_high_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let synth = tatr(
        dir.path(),
        &[
            "synth", "--out", "data", "--seed", "2", "--train-tracklets", "150",
            "--test-tracklets", "50", "--frames", "6",
        ],
    );
    assert_eq!(synth.status.code(), Some(0), "{}", stderr(&synth));

    let train = tatr(
        dir.path(),
        &[
            "train", "--schema", "data/schema.txt", "--train-manifest", "data/train.manifest",
            "--annotations", "data/annotations.tsv", "--out", "run", "--steps", "400",
            "--K", "16", "--n", "3", "--d-a", "16", "--seed", "2",
        ],
    );
    assert_eq!(train.status.code(), Some(0), "{}", stderr(&train));
    assert!(dir.path().join("run/checkpoint_final.tatr").exists());
    assert!(dir.path().join("run/train_log.txt").exists());
    assert!(dir.path().join("run/run.json").exists());

    let eval = tatr(
        dir.path(),
        &[
            "eval", "--schema", "data/schema.txt", "--test-manifest", "data/test.manifest",
            "--annotations", "data/annotations.tsv", "--checkpoint", "run/checkpoint_final.tatr",
            "--out", "report", "--n", "3", "--seed", "2",
        ],
    );
    assert_eq!(eval.status.code(), Some(0), "{}", stderr(&eval));
    let metrics = std::fs::read_to_string(dir.path().join("report/metrics.txt")).unwrap();
    let average_line = metrics
        .lines()
        .find(|l| l.starts_with("average"))
        .expect("average row");
    let acc: f64 = average_line.split('\t').nth(1).unwrap().parse().unwrap();
    assert!(acc > 90.0, "macro accuracy {acc}% too low:\n{metrics}");
}

#[test]
fn eval_with_wrong_schema_is_digest_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        tatr(
            dir.path(),
            &[
                "synth", "--out", "data", "--seed", "4", "--train-tracklets", "8",
                "--test-tracklets", "4", "--frames", "4",
            ],
        )
        .status
        .code(),
        Some(0)
    );
    assert_eq!(
        tatr(
            dir.path(),
            &[
                "train", "--schema", "data/schema.txt", "--train-manifest",
                "data/train.manifest", "--annotations", "data/annotations.tsv", "--out", "run",
                "--steps", "2", "--K", "4", "--n", "2", "--d-a", "8", "--seed", "4",
            ],
        )
        .status
        .code(),
        Some(0)
    );

    // A different schema: same shape, one class renamed.
    let schema_text = std::fs::read_to_string(dir.path().join("data/schema.txt")).unwrap();
    std::fs::write(
        dir.path().join("other_schema.txt"),
        schema_text.replace("still", "idle"),
    )
    .unwrap();
    let ann = std::fs::read_to_string(dir.path().join("data/annotations.tsv")).unwrap();
    std::fs::write(
        dir.path().join("other_annotations.tsv"),
        ann.replace("still", "idle"),
    )
    .unwrap();

    let eval = tatr(
        dir.path(),
        &[
            "eval", "--schema", "other_schema.txt", "--test-manifest", "data/test.manifest",
            "--annotations", "other_annotations.tsv", "--checkpoint",
            "run/checkpoint_final.tatr", "--out", "report", "--n", "2", "--seed", "4",
        ],
    );
    assert_eq!(eval.status.code(), Some(2), "{}", stderr(&eval));
    assert!(
        stderr(&eval).contains("digest") || stderr(&eval).contains("schema"),
        "{}",
        stderr(&eval)
    );
}

#[test]
fn ablate_writes_summary_and_per_variant_reports() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        tatr(
            dir.path(),
            &[
                "synth", "--out", "data", "--seed", "6", "--train-tracklets", "30",
                "--test-tracklets", "10", "--frames", "6",
            ],
        )
        .status
        .code(),
        Some(0)
    );
    let ablate = tatr(
        dir.path(),
        &[
            "ablate", "--schema", "data/schema.txt", "--train-manifest", "data/train.manifest",
            "--test-manifest", "data/test.manifest", "--annotations", "data/annotations.tsv",
            "--out", "ab", "--steps", "20", "--K", "8", "--n", "3", "--d-a", "8", "--seed", "6",
        ],
    );
    assert_eq!(ablate.status.code(), Some(0), "{}", stderr(&ablate));

    let summary = std::fs::read_to_string(dir.path().join("ab/summary.txt")).unwrap();
    let rows: Vec<&str> = summary
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    assert_eq!(rows, vec!["pool", "pool-sep", "shared", "proposed"]);
    for variant in &rows {
        assert!(dir.path().join("ab").join(variant).join("metrics.txt").exists());
        assert!(dir
            .path()
            .join("ab")
            .join(variant)
            .join("checkpoint_final.tatr")
            .exists());
    }
    assert_eq!(stdout(&ablate), summary);
}
