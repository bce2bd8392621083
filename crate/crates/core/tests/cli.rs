use std::process::{Command, Output};

use dcs_rjmin::cli::{read_csv, CSV_HEADER};
use dcs_rjmin::ddm::Method;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcs-sweep"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn single_run_writes_history() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("history.csv");
    let out = bin(&["--p", "5", "--q", "5", "--layout", "2", "--cells", "4", "--iters", "7", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("method=dcs-rjmin p=5 q=5 iterations=7"), "{stdout}");
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1 + 8);
}

#[test]
fn sweep_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "[problem]\neta = 0.0\n\n[sweep]\np = [2.0, 3.0]\nq = [4.0]\nlayouts = 2\ncells = 4\niterations = 5\nseeds = 2\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = bin(&["--config", config.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let table = read_csv(&out_dir.join("sweep.csv")).unwrap();
    // per seed: 2 OSM rows and 2 two-level rows
    assert_eq!(table.rows.len(), 8);
    assert!(table.rows.iter().all(|r| r.iters == 5));
    assert_eq!(table.rows.iter().filter(|r| r.method == Method::Osm).count(), 4);
    let header = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert!(header.starts_with(&CSV_HEADER.join(",")));
    assert!(out_dir.join("plot").join("osm_2x2.dat").exists());
    assert!(out_dir.join("plot").join("dcs-rjmin_2x2_q4.dat").exists());
}

#[test]
fn flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "[sweep]\np = [2.0, 3.0]\nlayouts = 2\ncells = 3\niterations = 3\n").unwrap();
    let out = bin(&["--config", config.to_str().unwrap(), "--p", "4", "--q", "4", "--method", "osm"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("method=osm p=4"));
}

#[test]
fn configuration_errors_exit_with_1() {
    let out = bin(&["--p", "-1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("p must be > 0"), "{}", stderr(&out));

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "[sweep]\npp = 3\n").unwrap();
    let out = bin(&["--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("pp"), "{}", stderr(&out));

    let out = bin(&["--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solver_failure_exits_with_2() {
    // the jump normal matrix overflows
    let out = bin(&["--p", "1e300", "--layout", "2", "--cells", "3", "--iters", "2"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("solver failure"));
}
