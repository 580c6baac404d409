mod common;

use std::path::Path;
use std::process::{Command, Output};

use chks::output::Status;
use chks::run::monitors;
use chks_core::state::InvariantReport;
use chks_core::FluxScheme;
use common::{configs_dir, tree};

fn chks(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chks")).args(args).output().unwrap()
}

fn desk() -> String {
    configs_dir().join("desk.toml").display().to_string()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn read_csv(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

const HOMOGENEOUS: &str = r#"
seed = 1
[grid]
nx = 4
ny = 4
[model]
proliferation = "constant"
h0 = 0.8
m = 2.0
[initial]
phi0 = { kind = "constant", value = 0.1 }
a0 = { kind = "constant", value = 0.5 }
n0 = { kind = "constant", value = 0.2 }
sigma0 = { kind = "constant", value = 0.6 }
[time]
t_final = 0.4
nt = 20
"#;

#[test]
fn simulate_writes_trajectory_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = write_config(dir.path(), "h.toml", HOMOGENEOUS);
    let o = chks(&["simulate", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let header = csv::Reader::from_path(out.join("series.csv")).unwrap().headers().unwrap().clone();
    assert_eq!(
        header.iter().collect::<Vec<_>>(),
        ["step", "time", "energy", "mean_phi", "sigma_min", "sigma_max", "a_min", "clamp_events"]
    );
    let rows = read_csv(&out.join("series.csv"));
    assert_eq!(rows.len(), 21);
    // implicit Euler for mean' = -m mean + h0
    let (m, h0, tau) = (2.0, 0.8, 0.02);
    let mut expected = 0.1;
    for (k, row) in rows.iter().enumerate() {
        let mean: f64 = row[3].parse().unwrap();
        assert!((mean - expected).abs() < 1e-13, "step {k}: {mean} vs {expected}");
        assert_eq!(row[0].parse::<usize>().unwrap(), k);
        expected = (expected + tau * h0) / (1.0 + tau * m);
    }
    for name in ["phi", "mu", "a", "n", "sigma"] {
        for k in [0, 20] {
            let f = chks::snapshot::read_field(&out.join(format!("{name}_{k:06}.fld"))).unwrap();
            assert_eq!(f.grid().nx(), 4);
        }
    }
    assert!(out.join("invariants.csv").exists());
}

#[test]
fn repeated_runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<_> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            assert!(chks(&["simulate", &desk(), "--out", out.to_str().unwrap()]).status.success());
            tree(&out)
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert!(runs[0].len() > 100);

    let other = dir.path().join("c");
    assert!(chks(&["simulate", &desk(), "--seed", "99", "--out", other.to_str().unwrap()]).status.success());
    assert_ne!(tree(&other), runs[0]);
}

#[test]
fn inadmissible_config_fails_before_solving() {
    let dir = tempfile::tempdir().unwrap();
    let text = HOMOGENEOUS
        .replace("sigma0 = { kind = \"constant\", value = 0.6 }", "sigma0 = { kind = \"constant\", value = 1.5 }");
    let cfg = write_config(dir.path(), "bad.toml", &text);
    let out = dir.path().join("never");
    let o = chks(&["simulate", &cfg, "--strict", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().position(|l| l.starts_with("sigma0")).unwrap() + 1;
    assert!(err.contains(&format!("bad.toml:{line}:")) && err.contains("[concentration-unit-interval]"), "{err}");
    assert!(!out.exists());
}

#[test]
fn optimize_with_zero_budget_returns_the_initial_control() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs_dir().join("desk.toml")).unwrap() + "\n[optimize]\nmax_iters = 0\n";
    let cfg = write_config(dir.path(), "zero.toml", &text);
    let out = dir.path().join("opt");
    let o = chks(&["optimize", &cfg, "--out", out.to_str().unwrap()]);
    // not converged, so the run is reported as a failed check
    assert_eq!(o.status.code(), Some(1));
    let rows = read_csv(&out.join("optimize.csv"));
    assert_eq!(rows.len(), 1);
    assert!(rows[0][2].parse::<f64>().unwrap() > 0.0);
    let u = chks::snapshot::read_field(&out.join("control/u_000000.fld")).unwrap();
    assert!(u.data().iter().all(|v| *v == 0.5));
    assert!(out.join("adjoint/adj_p3_000000.fld").exists());
    assert!(out.join("state/series.csv").exists());
}

#[test]
fn optimize_trivial_problem_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("trivial.toml");
    let o = chks(&["optimize", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let rows = read_csv(&dir.path().join("optimize.csv"));
    assert_eq!(rows.last().unwrap()[2].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn verify_writes_report_and_sets_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let o = chks(&["verify", &desk(), "--suite", "duality", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_csv(&dir.path().join("verify_report.csv"));
    assert!(report.iter().all(|r| &r[0] == "duality" && &r[4] != "FAIL"));
    let duality = read_csv(&dir.path().join("duality.csv"));
    assert_eq!(duality.len(), 2);
    assert_eq!((&duality[0][0], &duality[1][0]), ("32", "64"));

    // a failing suite exits with 1 and names the metric
    let text = std::fs::read_to_string(configs_dir().join("desk.toml"))
        .unwrap()
        .replace("flux = \"centered\"", "flux = \"upwind\"");
    let cfg = write_config(dir.path(), "upwind.toml", &text);
    let o = chks(&["verify", &cfg, "--suite", "duality", "--out", dir.path().join("u").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("duality/refinement_ratio"));
}

#[test]
fn derivative_suites_need_an_interior_control() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs_dir().join("desk.toml")).unwrap().replace("value = 0.5", "value = 0.0");
    let cfg = write_config(dir.path(), "boundary.toml", &text);
    let o = chks(&["verify", &cfg, "--suite", "gradcheck", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("interior"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(chks(&["verify", &desk(), "--suite", "everything"]).status.code(), Some(2));
    assert_eq!(chks(&["simulate"]).status.code(), Some(2));
    assert_eq!(chks(&["simulate", "/nonexistent/cfg.toml"]).status.code(), Some(2));
}

#[test]
fn strict_mode_turns_clamp_events_into_failures() {
    let report = InvariantReport {
        sigma_min: 0.1,
        sigma_max: 0.9,
        a_min: 0.2,
        phi_min: 0.0,
        phi_max: 1.0,
        mean_ode_residual: 0.0,
        energy_series: vec![1.0, 0.5],
        clamp_events: 3,
        levels: Vec::new(),
    };
    let status = |strict| {
        monitors(&report, FluxScheme::Upwind, strict).into_iter().find(|m| m.metric == "clamp_events").unwrap().status
    };
    assert_eq!(status(false), Status::Info);
    assert_eq!(status(true), Status::Fail);

    let broken = InvariantReport { sigma_max: 1.1, energy_series: vec![f64::NAN], clamp_events: 0, ..report };
    let failed: Vec<String> =
        monitors(&broken, FluxScheme::Centered, true).into_iter().filter(|m| m.failed()).map(|m| m.metric).collect();
    assert_eq!(failed, ["finite", "sigma_max"]);
}
