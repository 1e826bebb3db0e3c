use std::process::Command;

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gcnmtr-bench"))
}

#[test]
fn writes_csv_with_exact_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let status = bench()
        .args([
            "--problems",
            "trid,rosenbrock",
            "--m",
            "10",
            "--n",
            "100",
            "--solver",
            "gcnmtr",
            "-q",
            "--out",
        ])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "problem,m,n,solver,nj,iterations,time_s,final_res_inf,status"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("trid,10,100,gcnmtr,"));
    assert!(text.ends_with('\n'));
}

#[test]
fn failed_runs_still_exit_zero() {
    let out = bench()
        .args([
            "--problems",
            "rosenbrock",
            "--m",
            "10",
            "--n",
            "100",
            "--solver",
            "gcnmtr",
            "--maxit",
            "2",
            "-q",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().nth(1).unwrap().ends_with(",failed"));
}

#[test]
fn markdown_format() {
    let out = bench()
        .args([
            "--problems",
            "trid",
            "--m",
            "n",
            "--n",
            "20",
            "--solver",
            "both",
            "--format",
            "markdown",
            "-q",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 4);
    assert!(stdout.starts_with("| problem | m | n |"));
}

#[test]
fn config_errors_exit_nonzero() {
    let unknown = bench()
        .args(["--problems", "nope", "--n", "20", "-q"])
        .output()
        .unwrap();
    assert!(!unknown.status.success());
    let tall = bench()
        .args(["--problems", "trid", "--m", "30", "--n", "20", "-q"])
        .output()
        .unwrap();
    assert!(!tall.status.success());
    assert!(String::from_utf8(tall.stderr)
        .unwrap()
        .contains("configuration error"));
}

#[test]
fn unwritable_output_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("out.csv");
    let out = bench()
        .args(["--problems", "trid", "--m", "2", "--n", "4", "-q", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(!out.status.success());
}
