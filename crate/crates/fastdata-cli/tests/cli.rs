//! End-to-end checks of the CLI: subcommands, file outputs, exit codes.

use std::fs;
use std::path::Path;
use std::process::Command;

fn fastdata() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fastdata"))
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("experiment.toml");
    let body = r#"
seed = 77

[stream]
num_classes = 4
dimension = 8
zipf_exponent = 1.2
cluster_noise_sigma = 0.08
length = 1200
relevant_classes = [0, 1]

[target]
max_dataset_size = 80
target_accept_rate = 0.066
sketch_capacity = 32
relevance = { has = "relevant" }
weights = { balance = 1.0, novelty = 0.5, relevance = 1.0, redundancy = 0.25 }

[[strategy]]
name = "closed_loop"
kind = "closed_loop"

[[strategy]]
name = "random"
kind = "random_p"
p = 0.066

[[strategy]]
name = "frozen"
kind = "frozen_novelty"
warmup = 20
novelty_threshold = 0.3
"#;
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn generate_run_score_compare_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dir.path().join("out");

    // generate a replayable stream file
    let status = fastdata()
        .args(["generate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let stream_path = out.join("stream.txt");
    assert!(stream_path.exists());

    // run the experiment on the generated stream file
    let output = fastdata()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .arg("--stream")
        .arg(&stream_path)
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.starts_with("#fastdata-summary v1"));
    assert!(stdout.contains("closed_loop"));
    for name in ["closed_loop", "random", "frozen"] {
        for suffix in ["dataset.txt", "log.txt", "report.txt"] {
            assert!(out.join(format!("{name}.{suffix}")).exists());
        }
    }
    assert!(out.join("summary.tsv").exists());

    // running from the stream file must equal running from generation
    let out2 = dir.path().join("out2");
    let rerun = fastdata()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out2)
        .output()
        .unwrap();
    assert!(rerun.status.success());
    assert_eq!(
        fs::read(out.join("summary.tsv")).unwrap(),
        fs::read(out2.join("summary.tsv")).unwrap(),
        "file replay and in-memory generation must agree byte for byte"
    );

    // score one of the produced datasets
    let score = fastdata()
        .args(["score"])
        .arg(out.join("closed_loop.dataset.txt"))
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    assert!(score.status.success());
    let score_out = String::from_utf8(score.stdout).unwrap();
    assert!(score_out.starts_with("#fastdata-report v1"));
    assert!(score_out.contains("strategy = \"closed_loop\""));

    // compare the produced reports
    let compare = fastdata()
        .arg("compare")
        .arg(out.join("closed_loop.report.txt"))
        .arg(out.join("random.report.txt"))
        .arg(out.join("frozen.report.txt"))
        .output()
        .unwrap();
    assert!(compare.status.success());
    let cmp_out = String::from_utf8(compare.stdout).unwrap();
    assert!(cmp_out.starts_with("#fastdata-summary v1"));
    assert_eq!(cmp_out.lines().count(), 5);
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "seed = \"not a number\"\n").unwrap();
    let output = fastdata()
        .args(["run", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("error:"), "{stderr}");

    // structurally valid TOML, semantically invalid config
    let invalid = dir.path().join("invalid.toml");
    fs::write(
        &invalid,
        r#"
seed = 1
[target]
max_dataset_size = 10
target_accept_rate = 0.5
sketch_capacity = 4
"#,
    )
    .unwrap();
    let output = fastdata()
        .args(["run", "--config"])
        .arg(&invalid)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn parse_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dir.path().join("out");
    // point run at a corrupt stream file
    let stream_path = dir.path().join("stream.txt");
    fs::write(&stream_path, "#not-a-stream\n").unwrap();
    let output = fastdata()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .arg("--stream")
        .arg(&stream_path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn compare_mismatched_streams_fails() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for (out, seed) in [(&out_a, "77"), (&out_b, "78")] {
        let status = fastdata()
            .args(["run", "--config"])
            .arg(&config)
            .arg("--seed")
            .arg(seed)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let output = fastdata()
        .arg("compare")
        .arg(out_a.join("closed_loop.report.txt"))
        .arg(out_b.join("random.report.txt"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("comparison error"), "{stderr}");
}

#[test]
fn seed_override_changes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for (out, seed) in [(&out_a, "100"), (&out_b, "101")] {
        let status = fastdata()
            .args(["run", "--config"])
            .arg(&config)
            .arg("--seed")
            .arg(seed)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_ne!(
        fs::read(out_a.join("summary.tsv")).unwrap(),
        fs::read(out_b.join("summary.tsv")).unwrap()
    );
}
