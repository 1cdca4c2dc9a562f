use std::path::Path;
use std::process::{Command, Output};

fn eed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eed"))
        .args(args)
        .output()
        .expect("spawn eed")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn inertia_of_generator() {
    let o = eed(&["inertia", "--gen", "example51:500", "--shift", "1e-4"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["negatives"], 65);
    assert_eq!(v["zeros"], 0);
    assert_eq!(v["positives"], 435);
}

#[test]
fn solve_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = eed(&[
        "solve",
        "--gen",
        "laplacian:12",
        "--lo",
        "0",
        "--hi",
        "0.6",
        "--tol",
        "1e-9",
        "--validate-inertia",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("count=6"));
    assert!(stdout(&o).contains("inertia count 6"));
    for f in ["summary.json", "trace.csv", "pairs.csv", "eigvecs.mtx"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let v = eed(&["verify", "--results", path(&out)]);
    assert!(v.status.success());
    assert!(stdout(&v).contains("0 mismatches, 0 bound violations"));
}

#[test]
fn matrix_market_input() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = dir.path().join("a.mtx");
    std::fs::write(
        &mtx,
        "%%MatrixMarket matrix coordinate real symmetric\n4 4 5\n1 1 1\n2 2 2\n3 3 3\n4 4 4\n2 1 0.5\n",
    )
    .unwrap();
    let out = dir.path().join("run");
    let o = eed(&[
        "solve",
        "--matrix",
        path(&mtx),
        "--lo",
        "0",
        "--hi",
        "2.5",
        "--m",
        "3",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("count=2"));
}

#[test]
fn parse_error_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = dir.path().join("bad.mtx");
    std::fs::write(
        &mtx,
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n3 1 1.0\n",
    )
    .unwrap();
    let o = eed(&[
        "solve",
        "--matrix",
        path(&mtx),
        "--lo",
        "0",
        "--hi",
        "1",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn rejected_shift_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = eed(&[
        "solve",
        "--gen",
        "example51:100",
        "--lo",
        "0",
        "--hi",
        "1e-4",
        "--mu",
        "1e-9",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("shift rejected"));
}

#[test]
fn tampered_results_fail_verification() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert!(eed(&[
        "solve",
        "--gen",
        "example51:100",
        "--lo",
        "0",
        "--hi",
        "1e-4",
        "--out",
        path(&out)
    ])
    .status
    .success());
    let trace = out.join("trace.csv");
    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    // Line 0 is the schema comment, line 1 the header.
    let header: Vec<&str> = lines[1].split(',').collect();
    let col = header.iter().position(|h| *h == "omega").unwrap();
    let mut cells: Vec<String> = lines[3].split(',').map(str::to_owned).collect();
    cells[col] = "0.5".into();
    lines[3] = cells.join(",");
    std::fs::write(&trace, lines.join("\n") + "\n").unwrap();
    let v = eed(&["verify", "--results", path(&out)]);
    assert!(!v.status.success());
    assert!(stdout(&v).contains("mismatch"));
}

#[test]
fn experiment_with_tolerance_override() {
    let dir = tempfile::tempdir().unwrap();
    let o = eed(&[
        "experiment",
        "--name",
        "example2-flipped",
        "--tol",
        "1e-6",
        "--out",
        path(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("mu-0.5-tol1e-6: n=200 count=74"), "{s}");
    assert!(s.contains("mu-auto-tol1e-6: n=200 count=74"), "{s}");
    assert!(dir.path().join("experiment.json").exists());
    let v = eed(&["verify", "--results", path(dir.path())]);
    assert!(
        stdout(&v).starts_with("2 runs, 0 mismatches"),
        "{}",
        stdout(&v)
    );
}

#[test]
fn unknown_experiment_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = eed(&["experiment", "--name", "table9", "--out", path(dir.path())]);
    assert!(!o.status.success());
}
