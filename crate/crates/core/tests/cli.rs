use std::process::Command;

fn ellipsar() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ellipsar"))
}

#[test]
fn simulate_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("series.csv");
    let status = ellipsar()
        .args(["simulate", "--phi-bar", "0.75", "--k0", "10", "--n", "300", "--lags", "12", "--seed", "3"])
        .arg("--out")
        .arg(&csv)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,value\n-11,"));
    assert_eq!(text.lines().count(), 1 + 312);

    let out = ellipsar().arg("fit").arg(&csv).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("# B grid"));
    assert!(stdout.contains("K = 12"));
    assert!(stdout.contains("df = "));

    let out = ellipsar().arg("fit").arg(&csv).args(["--radius", "0.01"]).output().unwrap();
    assert!(String::from_utf8(out.stdout).unwrap().contains("binding = true"));
}

#[test]
fn run_small_grid_csv() {
    let out = ellipsar()
        .args([
            "run", "--design", "short_memory", "--phi-bar", "0.75", "--k0", "20", "--sample-size", "300",
            "--warmup", "100", "--test-size", "100", "--replications", "2", "--parallelism", "1", "--strict",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "design,phi_bar,K0,multiplier,mean_ratio,stderr,reps");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("short_memory,0.75,20,2,"));
    assert!(String::from_utf8(out.stderr).unwrap().contains("replications = 2"));
}

#[test]
fn usage_errors_exit_one() {
    let out = ellipsar().args(["run", "--phi-bar", "1.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("phi_bar"));
    let out = ellipsar().args(["run", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
