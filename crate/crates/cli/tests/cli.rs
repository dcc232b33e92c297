use std::path::Path;
use std::process::{Command, Output};

fn quatprop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quatprop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn gen_small(dir: &Path) {
    let out = dir.to_str().unwrap();
    let o = quatprop(&[
        "gen-data",
        "--train-size",
        "100",
        "--val-size",
        "20",
        "--out",
        out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

fn record_count(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn gen_data_writes_requested_sizes() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path());
    assert_eq!(record_count(&dir.path().join("train.qds")), 100);
    assert_eq!(record_count(&dir.path().join("val.qds")), 20);
    let header = std::fs::read_to_string(dir.path().join("train.qds")).unwrap();
    assert!(header.starts_with("qds v1 n=100 in=3 out=2 seed=3\n"));
    assert!(dir.path().join("teacher.qnn").exists());
}

#[test]
fn gen_data_is_byte_identical_for_equal_seeds() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    gen_small(a.path());
    gen_small(b.path());
    for f in ["train.qds", "val.qds", "teacher.qnn"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn train_writes_metrics_and_model_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path());
    let data = dir.path().to_str().unwrap();
    let mut csvs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = quatprop(&[
            "train",
            "--data",
            data,
            "--out",
            out.to_str().unwrap(),
            "--epochs",
            "4",
            "--quiet",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("final validation loss"));
        assert!(out.join("student.qnn").exists());
        csvs.push(std::fs::read(out.join("metrics.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    let text = String::from_utf8(csvs.remove(0)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "epoch,train_loss,val_loss,wdiff_mean,wdiff_min,wdiff_max"
    );
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("4,"));
}

#[test]
fn student_starting_at_teacher_has_zero_loss() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path());
    let data = dir.path().to_str().unwrap();
    let teacher = dir.path().join("teacher.qnn");
    let out = dir.path().join("run");
    let o = quatprop(&[
        "train",
        "--data",
        data,
        "--out",
        out.to_str().unwrap(),
        "--epochs",
        "1",
        "--init",
        teacher.to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["final_val_loss"].as_f64(), Some(0.0));
    assert_eq!(v["final_wdiff"]["max"].as_f64(), Some(0.0));
}

#[test]
fn train_rejects_zero_epochs_and_mismatched_shapes() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path());
    let data = dir.path().to_str().unwrap();
    let out = dir.path().join("run");
    let o = quatprop(&[
        "train",
        "--data",
        data,
        "--out",
        out.to_str().unwrap(),
        "--epochs",
        "0",
    ]);
    assert_eq!(code(&o), 2);

    let o = quatprop(&[
        "train",
        "--data",
        data,
        "--out",
        out.to_str().unwrap(),
        "--shape",
        "2,2,1",
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("shape"));
    assert!(!out.join("metrics.csv").exists());
}

#[test]
fn usage_and_runtime_errors_have_distinct_codes() {
    assert_eq!(code(&quatprop(&["train", "--shape", "3"])), 2);
    assert_eq!(code(&quatprop(&["no-such-command"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing");
    let o = quatprop(&[
        "train",
        "--data",
        missing.to_str().unwrap(),
        "--out",
        missing.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn verify_calculus_reports_expected_outcomes() {
    let o = quatprop(&["verify-calculus"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(text.matches("  [FAILED-AS-EXPECTED] ").count(), 3);
    assert_eq!(text.matches("  [PASSED] ").count(), 1);
}

#[test]
fn verify_calculus_json() {
    let o = quatprop(&["verify-calculus", "--json", "--seed", "11"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["rules"]["seed"], 11);
    let routes = v["rules"]["routes"].as_array().unwrap();
    assert_eq!(routes.len(), 4);
    for r in routes {
        let m = r["mismatch"].as_f64().unwrap();
        match r["verdict"].as_str().unwrap() {
            "FAILED-AS-EXPECTED" => assert!(m > 0.1),
            "PASSED" => assert!(m <= 1e-12),
            other => panic!("unexpected verdict {other}"),
        }
    }
}

#[test]
fn grad_check_passes_and_honours_step() {
    let o = quatprop(&["grad-check"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("PASS"));

    let o = quatprop(&[
        "grad-check",
        "--activation",
        "identity",
        "--h",
        "2e-5",
        "--json",
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"]["step"].as_f64(), Some(2e-5));
    assert!(v["report"]["max_rel_error"].as_f64().unwrap() < 1e-8);
}

#[test]
fn grad_check_fails_with_a_useless_step() {
    let o = quatprop(&["grad-check", "--h", "10"]);
    assert_eq!(code(&o), 1);
}
