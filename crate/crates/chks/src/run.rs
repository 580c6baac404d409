//! The `simulate`, `optimize` and `verify` commands.
//!
//! Each command writes its artifacts under an output directory and returns
//! an [`Outcome`]: the monitors it checked and whether all of them passed.

use std::fs;
use std::path::Path;

use chks_core::control::{optimize, stationarity_residual, Control, OptimizeResult};
use chks_core::state::{solve_forward, InvariantReport};
use chks_core::FluxScheme;

use crate::config::RunConfig;
use crate::error::{AppError, AppResult};
use crate::output::{
    optimize_rows, write_adjoint, write_control, write_csv, write_csv_with_header, write_state, Metric,
};
use crate::verify::{run_suite, Suite};

/// Process exit status for a completed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    CheckFailed = 1,
    Error = 2,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub metrics: Vec<Metric>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        !self.metrics.iter().any(Metric::failed)
    }

    pub fn status(&self) -> ExitStatus {
        if self.passed() {
            ExitStatus::Ok
        } else {
            ExitStatus::CheckFailed
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Metric> {
        self.metrics.iter().filter(|m| m.failed())
    }
}

/// Run-time monitors of a forward solve.
pub fn monitors(report: &InvariantReport, flux: FluxScheme, strict: bool) -> Vec<Metric> {
    const SUITE: &str = "simulate";
    let finite = [report.sigma_min, report.sigma_max, report.a_min, report.phi_min, report.phi_max]
        .iter()
        .chain(&report.energy_series)
        .all(|v| v.is_finite());
    let mut m = vec![
        Metric::at_least(SUITE, "finite", if finite { 1.0 } else { 0.0 }, 1.0),
        Metric::at_least(SUITE, "sigma_min", report.sigma_min, -1e-8),
        Metric::at_most(SUITE, "sigma_max", report.sigma_max, 1.0 + 1e-8),
    ];
    m.push(if flux == FluxScheme::Upwind {
        Metric::at_least(SUITE, "a_min", report.a_min, -1e-10)
    } else {
        Metric::info(SUITE, "a_min", report.a_min)
    });
    m.push(Metric::info(SUITE, "phi_min", report.phi_min));
    m.push(Metric::info(SUITE, "phi_max", report.phi_max));
    m.push(Metric::info(SUITE, "mean_ode_residual", report.mean_ode_residual));
    let clamps = report.clamp_events as f64;
    m.push(if strict {
        Metric::at_most(SUITE, "clamp_events", clamps, 0.0)
    } else {
        Metric::info(SUITE, "clamp_events", clamps)
    });
    m
}

fn create_dir(dir: &Path) -> AppResult<()> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))
}

/// Forward solve from `u0`. Writes the trajectory snapshots, `series.csv`
/// and `invariants.csv` into `out`.
pub fn run_simulate(cfg: &RunConfig, out: &Path, strict: bool) -> AppResult<Outcome> {
    create_dir(out)?;
    let (traj, report) = solve_forward(&cfg.model, &cfg.init, &cfg.u0, &cfg.time)?;
    write_state(out, &traj, &report)?;
    let metrics = monitors(&report, cfg.time.flux, strict);
    write_csv(&out.join("invariants.csv"), &metrics)?;
    Ok(Outcome { metrics })
}

/// Projected-gradient optimization from `u0`. Writes `optimize.csv` and the
/// final control, state and adjoint under `out/control`, `out/state` and
/// `out/adjoint`.
pub fn run_optimize(cfg: &RunConfig, out: &Path, strict: bool) -> AppResult<(Outcome, OptimizeResult)> {
    const SUITE: &str = "optimize";
    create_dir(out)?;
    let res = optimize(&cfg.model, &cfg.init, &cfg.problem, &cfg.u0, &cfg.time, &cfg.optimize)?;
    write_csv(&out.join("optimize.csv"), &optimize_rows(&res.records))?;
    write_control(&out.join("control"), &res.u_star)?;
    write_adjoint(&out.join("adjoint"), &res.adjoint)?;
    // the optimizer keeps only the trajectory, so re-run once for the monitors
    let (traj, report) = solve_forward(&cfg.model, &cfg.init, &res.u_star, &cfg.time)?;
    write_state(&out.join("state"), &traj, &report)?;

    let tau = cfg.time.tau();
    let unorm = res.u_star.norm(tau);
    let stationarity = stationarity_residual(&res.u_star, &res.adjoint, &cfg.problem)?;
    let mut metrics = monitors(&report, cfg.time.flux, strict);
    metrics.push(Metric::at_least(SUITE, "converged", if res.converged { 1.0 } else { 0.0 }, 1.0));
    metrics.push(Metric::info(SUITE, "iterations", res.iterations as f64));
    metrics.push(Metric::info(SUITE, "initial_cost", res.cost_history[0]));
    metrics.push(Metric::info(SUITE, "final_cost", *res.cost_history.last().unwrap()));
    metrics.push(Metric::at_most(SUITE, "stationarity", stationarity, cfg.optimize.tol_stat * (1.0 + unorm)));
    metrics.push(Metric::at_least(SUITE, "vi_min_violation", variational_violation(cfg, &res)?, -1e-8));
    write_csv(&out.join("invariants.csv"), &metrics)?;
    Ok((Outcome { metrics }, res))
}

/// Sampled variational inequality `<p3 + b3 u*, v - u*> >= 0` over 20 random
/// admissible `v`, scaled by `‖v - u*‖`; returns the smallest value.
pub fn variational_violation(cfg: &RunConfig, res: &OptimizeResult) -> AppResult<f64> {
    use crate::config::streams;
    use crate::fields::FieldGen;
    let tau = cfg.time.tau();
    let grad = chks_core::control::reduced_gradient(&res.adjoint, &res.u_star, cfg.problem.b3)?;
    let mut worst = f64::INFINITY;
    for i in 0..20u64 {
        let mut v: Control = FieldGen::Random { min: 0.0, max: 1.0, modes: 3 }
            .build_control(cfg.grid, cfg.time.nt, cfg.seed, streams::SUITES + 400 + i, Path::new(""))
            .map_err(AppError::Verify)?;
        for slice in v.slices_mut() {
            for (cell, x) in slice.data_mut().iter_mut().enumerate() {
                *x *= cfg.problem.u_max.at(cell);
            }
        }
        let d = v.zip_map(&res.u_star, |a, b| a - b);
        let norm = d.norm(tau);
        if norm > 0.0 {
            worst = worst.min(grad.inner(&d, tau) / norm);
        }
    }
    Ok(worst)
}

/// Runs one suite (or all) and writes `verify_report.csv`, plus
/// `duality.csv` when the duality sweep ran.
pub fn run_verify(cfg: &RunConfig, suite: Suite, out: &Path) -> AppResult<Outcome> {
    create_dir(out)?;
    let report = run_suite(cfg, suite)?;
    write_csv_with_header(
        &out.join("verify_report.csv"),
        &["suite", "metric", "value", "threshold", "status"],
        &report.metrics,
    )?;
    if !report.duality.is_empty() {
        write_csv(&out.join("duality.csv"), &report.duality)?;
    }
    Ok(Outcome { metrics: report.metrics })
}
