use std::path::Path;
use std::process::Command;

fn sr1nmf(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_sr1nmf")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn factorize_synthetic_writes_trace_and_factors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _) = sr1nmf(&[
        "factorize", "--format", "synthetic-lowrank", "--rows", "40", "--cols", "20", "--rank", "3",
        "--maxiter", "10", "--out", out,
    ]);
    assert_eq!(code, 0);
    for f in ["sr1_seed0.csv", "sr1_seed0_W.csv", "sr1_seed0_H.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn exit_codes_follow_error_classes() {
    assert_eq!(sr1nmf(&["factorize", "--rank", "2"]).0, 1);
    assert_eq!(sr1nmf(&["factorize", "--rank", "2", "--input", "/nonexistent/v.csv"]).0, 3);
    assert_eq!(sr1nmf(&["factorize", "--rank", "0", "--format", "synthetic-uniform"]).0, 1);
    assert_eq!(sr1nmf(&["no-such-command"]).0, 1);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("neg.csv");
    std::fs::write(&bad, "1,-2\n3,4\n").unwrap();
    assert_eq!(sr1nmf(&["factorize", "--rank", "1", "--input", bad.to_str().unwrap()]).0, 1);
}

#[test]
fn verify_reports_success() {
    let (code, stdout) = sr1nmf(&["verify", "--count", "40"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("0 over tolerance"));
}

#[test]
fn bench_runs_bundled_text_config() {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/bench_text.conf");
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = sr1nmf(&["bench", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(dir.path().join("sr1_mean.csv").exists());
}
