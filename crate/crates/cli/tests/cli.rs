use std::path::Path;
use std::process::{Command, Output};

use rmsprop_iss_cli::{check_report, cmd_verify, ExperimentConfig, ReportFile, RunSummary};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rmsprop-iss"))
}

fn write_config(dir: &Path, name: &str, json: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path
}

fn invoke(args: &[&str], config: &Path, out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

const SMALL: &str = r#"{
  "objective": {"kind": "quadratic", "dim": 3, "condition": 10, "seed": 5},
  "params": {"beta": 0.5, "epsilon": 1.0, "eta0": 0.1, "eta1": 0.1},
  "steps": 2000,
  "seed": 9,
  "sampler": {"n": 300, "trajectories": 1, "trajectory_steps": 20}
}"#;

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn run_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let out = dir.path().join("o");
    let res = invoke(&["run", "--quiet"], &cfg, &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("# {"));
    let header = trace.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "t,u,f_gap,grad_inf,resid_inf,x0,x1,x2,s0,s1,s2");
    assert_eq!(data_rows(&trace).len(), 2001);
    let summary: RunSummary = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.final_record.t, 2000);
    assert_eq!(summary.config.seed, Some(9));
    assert!(summary.final_resid_inf <= 1e-6);
    assert!(summary.steps_to_tolerance.is_some());
    assert!(summary.max_resid_inf >= summary.final_resid_inf);
    assert!(summary.diverged.is_none());
}

#[test]
fn trace_values_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let out = dir.path().join("o");
    assert!(invoke(&["run", "--quiet"], &cfg, &out).status.success());
    let summary: RunSummary = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    let last: Vec<f64> = data_rows(&trace)
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(&last[5..8], summary.final_record.x.as_slice());
    assert_eq!(&last[8..11], summary.final_record.s.as_slice());
}

#[test]
fn equilibrium_init_gives_zero_gap_column() {
    let dir = tempfile::tempdir().unwrap();
    let json = SMALL.replace(
        r#""steps": 2000,"#,
        r#""steps": 300, "init": {"kind": "equilibrium"}, "schedule": {"kind": "sinusoid", "amplitude": 3.0, "period": 40.0},"#,
    );
    let cfg = write_config(dir.path(), "c.json", &json);
    let out = dir.path().join("o");
    assert!(invoke(&["run", "--quiet"], &cfg, &out).status.success());
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    for row in data_rows(&trace) {
        let gap: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(gap, 0.0);
    }
}

#[test]
fn verify_reference_passes_and_embeds_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let out = dir.path().join("o");
    let res = invoke(&["verify"], &cfg, &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("iss_decrease"));
    assert!(!stdout.contains("FAIL"));
    let file: ReportFile = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(file.report.samples, 300);
    assert_eq!(file.config.sampler.seed, 9);
    assert_eq!(file.report.seed, 9);
    assert!(file.report.all_passed());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let out = dir.path().join("o");
    assert!(invoke(&["verify", "--quiet", "--seed", "77"], &cfg, &out).status.success());
    let file: ReportFile = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(file.report.seed, 77);
    assert_eq!(file.config.seed, Some(77));
}

#[test]
fn precondition_violation_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    // eta0 = 3 epsilon / L
    let json = SMALL.replace(r#""eta0": 0.1"#, r#""eta0": 3.0"#);
    let cfg = write_config(dir.path(), "c.json", &json);
    let out = dir.path().join("o");
    for cmd in ["verify", "run", "sweep"] {
        let res = invoke(&[cmd, "--quiet"], &cfg, &out);
        assert_eq!(res.status.code(), Some(3), "{cmd}");
    }
    assert!(!out.join("report.json").exists());
}

#[test]
fn config_errors_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let zero = write_config(dir.path(), "n0.json", &SMALL.replace(r#""n": 300"#, r#""n": 0"#));
    assert_eq!(invoke(&["verify", "--quiet"], &zero, &out).status.code(), Some(2));
    let unknown = write_config(dir.path(), "u.json", &SMALL.replace(r#""steps""#, r#""stepz""#));
    assert_eq!(invoke(&["run", "--quiet"], &unknown, &out).status.code(), Some(2));
    let missing = dir.path().join("absent.json");
    assert_eq!(invoke(&["run", "--quiet"], &missing, &out).status.code(), Some(2));
    let no_seed = write_config(dir.path(), "s.json", &SMALL.replace(r#""seed": 9,"#, ""));
    assert_eq!(invoke(&["run", "--quiet"], &no_seed, &out).status.code(), Some(2));
    let bad_q = write_config(dir.path(), "q.json", &SMALL.replace(r#""seed": 9,"#, r#""seed": 9, "q": 0.3,"#));
    assert_eq!(invoke(&["run", "--quiet"], &bad_q, &out).status.code(), Some(2));
}

#[test]
fn divergence_exit_code_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let json = SMALL.replace(r#""steps": 2000,"#, r#""steps": 2000, "schedule": {"kind": "constant", "c": 1e9},"#);
    let cfg = write_config(dir.path(), "c.json", &json);
    let out = dir.path().join("o");
    let res = invoke(&["run", "--quiet"], &cfg, &out);
    assert_eq!(res.status.code(), Some(4));
    let summary: RunSummary = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let d = summary.diverged.expect("divergence recorded");
    assert!(d.t >= 1 && d.t < 2000);
    assert_eq!(summary.final_record.t, d.t - 1);
}

#[test]
fn negative_tolerance_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let json = SMALL.replace(r#""seed": 9,"#, r#""seed": 9, "tolerance": {"rel": 0.0, "abs": -1.0},"#);
    let cfg = write_config(dir.path(), "c.json", &json);
    let res = invoke(&["verify", "--quiet"], &cfg, &dir.path().join("o"));
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn failed_inequality_maps_to_verification_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: ExperimentConfig = serde_json::from_str(SMALL).unwrap();
    cfg.out = dir.path().join("o");
    let mut report = cmd_verify(&cfg).unwrap();
    assert!(check_report(&report).is_ok());
    report.inequalities[3].passed -= 1;
    let err = check_report(&report).unwrap_err();
    assert_eq!(err.exit_code(), 5);
    assert!(err.to_string().contains("intermediate_bound"));
}

#[test]
fn sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let out = dir.path().join("o");
    let res = invoke(&["sweep", "--u-levels", "0,0.5,5"], &cfg, &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let table = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let header = table.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "u,steps,floor");
    let rows = data_rows(&table);
    assert_eq!(rows.len(), 3);
    let floor0: f64 = rows[0].split(',').nth(2).unwrap().parse().unwrap();
    assert!(floor0 <= 1e-6);
    assert!(String::from_utf8_lossy(&res.stdout).contains("spearman"));
}

#[test]
fn empty_sweep_is_an_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let json = SMALL.replace(r#""steps": 2000,"#, r#""steps": 2000, "sweep": {"u_levels": []},"#);
    let cfg = write_config(dir.path(), "c.json", &json);
    let out = dir.path().join("o");
    assert!(invoke(&["sweep", "--quiet"], &cfg, &out).status.success());
    let table = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(data_rows(&table).is_empty());
}

#[test]
fn config_json_round_trip_is_idempotent() {
    let parsed: ExperimentConfig = serde_json::from_str(SMALL).unwrap();
    let once = serde_json::to_string(&parsed).unwrap();
    let reparsed: ExperimentConfig = serde_json::from_str(&once).unwrap();
    assert_eq!(parsed, reparsed);
    assert_eq!(once, serde_json::to_string(&reparsed).unwrap());
    let defaults: Value = serde_json::to_value(ExperimentConfig::default()).unwrap();
    let back: ExperimentConfig = serde_json::from_value(defaults).unwrap();
    assert_eq!(back, ExperimentConfig::default());
}

#[test]
fn tol_flag_meaning_depends_on_command() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let out = dir.path().join("o");
    assert!(invoke(&["run", "--quiet", "--tol", "1e-8"], &cfg, &out).status.success());
    let summary: RunSummary = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.config.gap_tol, 1e-8);
    assert!(invoke(&["verify", "--quiet", "--tol", "1e-7"], &cfg, &out).status.success());
    let file: ReportFile = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(file.report.tolerance.rel, 1e-7);
    assert_eq!(invoke(&["run", "--quiet", "--tol", "-1"], &cfg, &out).status.code(), Some(2));
}
