use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bfl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bfl")).args(args).output().expect("binary runs")
}

fn config(t_end: f64, extra_run: &str) -> String {
    format!(
        r#"[domain]
a = 8.0
lambda = 1.0

[grid]
nx = 33
nz = 9

[physics]
rho = 0.2
sigma = 1.0
theta0 = 0.2
reaction_kind = "quad_ignition"
amplitude = 1.0
e1 = 1.0
e2 = 1.0

[run]
t_end = {t_end:?}
dt = "auto"
cfl_safety = 0.5
recenter = true
{extra_run}
"#
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn laminar_prints_closed_form_speed() {
    let out = bfl(&["laminar", "--theta0", "0.25", "--kind", "step_linear"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let first = text.lines().next().unwrap();
    assert_eq!(first, "c0 = 1.500000 ± 1e-4");
    let c0: f64 = first[5..].split_whitespace().next().unwrap().parse().unwrap();
    assert!((c0 - 0.75 / 0.5).abs() <= 1e-4);
    assert_eq!(text.lines().nth(1), Some("x,T"));
    assert!(text.lines().count() > 10);
}

#[test]
fn unknown_flag_is_a_config_error_with_no_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", &config(1.0, ""));
    let csv = dir.path().join("out.csv");
    let out = bfl(&["evolve", "--config", &cfg, "--out", csv.to_str().unwrap(), "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!csv.exists());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: "));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn bad_config_exits_2_on_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", &config(1.0, "colour = \"red\""));
    let csv = dir.path().join("out.csv");
    let out = bfl(&["evolve", "--config", &cfg, "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!csv.exists());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("colour"));
}

#[test]
fn evolve_zero_horizon_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", &config(0.0, ""));
    let csv = dir.path().join("out.csv");
    let out = bfl(&["evolve", "--config", &cfg, "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(text.lines().next().unwrap(), bfl::io::csv::HEADER);
}

#[test]
fn evolve_is_deterministic_and_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", &config(1.0, "seed = 11"));
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let ck = dir.path().join("end.bfl");
    for (p, extra) in [(&a, vec!["--checkpoint", ck.to_str().unwrap()]), (&b, vec!["--sequential"])] {
        let mut args = vec!["evolve", "--config", &cfg, "--out", p.to_str().unwrap()];
        args.extend(extra);
        let out = bfl(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let series = bfl::io::csv::read_timeseries_csv(&a).unwrap();
    let state = bfl::io::checkpoint::read_checkpoint(&ck).unwrap();
    assert_eq!(state.t, series.last().unwrap().t);
    assert_eq!(state.grid().nx(), 33);
}

#[test]
fn numerical_failure_exits_3_and_keeps_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", &config(5.0, "seed = 2\nomega0_energy = 100.0"));
    let csv = dir.path().join("out.csv");
    let out = bfl(&["evolve", "--config", &cfg, "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(fs::read_to_string(&csv).unwrap().lines().count() >= 2);
}

#[test]
fn verify_reports_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // λ = 1 grid, few fields: cheap but a real run
    let cfg = write(dir.path(), "run.toml", &config(1.0, ""));
    let rep_dir = dir.path().join("rep");
    let out = bfl(&["verify", "nash", "--config", &cfg, "--count", "20", "--out", rep_dir.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("report: nash\n"));
    let verdict = text.lines().last().unwrap();
    assert_eq!(out.status.code(), Some(if verdict == "verdict: pass" { 0 } else { 1 }));
    assert_eq!(fs::read_to_string(rep_dir.join("nash.txt")).unwrap(), text);

    let out = bfl(&["verify", "thm12", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn front_writes_checkpoint_and_identity() {
    let dir = tempfile::tempdir().unwrap();
    let text = config(1.0, "").replace("nx = 33", "nx = 65").replace("nz = 9", "nz = 5").replace("rho = 0.2", "rho = 0.0");
    let cfg = write(dir.path(), "run.toml", &text);
    let ck = dir.path().join("front.bfl");
    let out = bfl(&["front", "--config", &cfg, "--out", ck.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let resid: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("identity.relative_residual = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(resid < 1e-2);
    let back = bfl::io::checkpoint::read_checkpoint(&ck).unwrap();
    assert_eq!(back.omega.max_abs(), 0.0);
}

#[test]
fn selftest_passes() {
    let out = bfl(&["selftest"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().ends_with("verdict: pass\n"));
}
