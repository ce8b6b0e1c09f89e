use std::path::Path;
use std::process::{Command, Output};

fn corrsh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrsh"))
        .args(args)
        .output()
        .unwrap()
}

fn gen(path: &Path, n: usize, format: &str) {
    let out = corrsh(&[
        "gen",
        "--n",
        &n.to_string(),
        "--d",
        "3",
        "--clusters",
        "2",
        "--seed",
        "4",
        "--data",
        path.to_str().unwrap(),
        "--format",
        format,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn gen_then_bench_and_medoid() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("g.bin");
    gen(&data, 80, "bin");
    let d = data.to_str().unwrap();

    let out = corrsh(&[
        "bench",
        "--data",
        d,
        "--format",
        "bin",
        "--algo",
        "corrsh",
        "--budget-x",
        "4",
        "--budget-x",
        "80",
        "--seeds",
        "0..20",
    ]);
    assert!(out.status.success());
    let bench: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(bench["curves"].as_array().unwrap().len(), 2);
    assert_eq!(bench["curves"][1]["failures"], 0);

    let csv = corrsh(&[
        "bench",
        "--data",
        d,
        "--format",
        "bin",
        "--algo",
        "rand",
        "--budget-x",
        "80",
        "--out-format",
        "csv",
    ]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(
        text.starts_with("budget_x,trials,failures,error_prob,mean_pulls_per_arm,mean_wall_ms\n")
    );

    let single = corrsh(&["medoid", "--data", d, "--format", "bin", "--algo", "exact"]);
    let v: serde_json::Value = serde_json::from_slice(&single.stdout).unwrap();
    assert_eq!(v["fresh_pulls"], 80 * 80);
    assert_eq!(v["chosen"], bench["ground_truth"]);
}

#[test]
fn analyze_reports_and_gates_large_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let small = dir.path().join("s.csv");
    gen(&small, 30, "csv");
    let out = corrsh(&[
        "analyze",
        "--data",
        small.to_str().unwrap(),
        "--metric",
        "l1",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["report"]["theta"].as_array().unwrap().len(), 30);

    let big = dir.path().join("b.bin");
    gen(&big, 30_001, "bin");
    let out = corrsh(&[
        "analyze",
        "--data",
        big.to_str().unwrap(),
        "--format",
        "bin",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--yes"));
}

#[test]
fn errors_exit_nonzero() {
    for args in [
        &["bench", "--data", "/no/such/file.csv"][..],
        &["medoid"][..],
        &[
            "gen",
            "--n",
            "5",
            "--kind",
            "spiral",
            "--data",
            "/tmp/x.csv",
        ][..],
        &[
            "bench",
            "--data",
            "/no/such/file.csv",
            "--metric",
            "hamming",
        ][..],
    ] {
        let out = corrsh(args);
        assert!(!out.status.success(), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}
