//! CSV tables and snapshot directories written by the commands.

use std::fs;
use std::path::Path;

use chks_core::adjoint::AdjointTrajectory;
use chks_core::control::{Control, IterationRecord};
use chks_core::linearized::LinearizedTrajectory;
use chks_core::state::{InvariantReport, StateTrajectory};
use serde::Serialize;

use crate::error::{AppError, AppResult};
use crate::snapshot::write_levels;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeriesRow {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub mean_phi: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub a_min: f64,
    pub clamp_events: u64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DualityRow {
    pub nt: usize,
    pub tau: f64,
    pub residual: f64,
}

/// One line of `verify_report.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub suite: String,
    pub metric: String,
    pub value: f64,
    pub threshold: f64,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    /// Reported for information, never fails.
    Info,
}

impl Metric {
    /// Passes when `value <= threshold`.
    pub fn at_most(suite: &str, metric: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(suite, metric, value, threshold, value <= threshold)
    }

    /// Passes when `value >= threshold`.
    pub fn at_least(suite: &str, metric: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(suite, metric, value, threshold, value >= threshold)
    }

    pub fn info(suite: &str, metric: impl Into<String>, value: f64) -> Self {
        Metric { suite: suite.into(), metric: metric.into(), value, threshold: f64::NAN, status: Status::Info }
    }

    fn new(suite: &str, metric: impl Into<String>, value: f64, threshold: f64, ok: bool) -> Self {
        // NaN compares false and therefore fails
        let status = if ok { Status::Pass } else { Status::Fail };
        Metric { suite: suite.into(), metric: metric.into(), value, threshold, status }
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> AppResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

/// Writes a header-only file when there are no rows, so consumers always
/// find the columns.
pub fn write_csv_with_header<R: Serialize>(path: &Path, header: &[&str], rows: &[R]) -> AppResult<()> {
    if rows.is_empty() {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(header)?;
        return w.flush().map_err(|e| AppError::io(path, e));
    }
    write_csv(path, rows)
}

pub fn series_rows(traj: &StateTrajectory, report: &InvariantReport) -> Vec<SeriesRow> {
    traj.times()
        .zip(&report.levels)
        .enumerate()
        .map(|(step, (time, l))| SeriesRow {
            step,
            time,
            energy: l.energy,
            mean_phi: l.mean_phi,
            sigma_min: l.sigma_min,
            sigma_max: l.sigma_max,
            a_min: l.a_min,
            clamp_events: l.clamp_events,
        })
        .collect()
}

/// Snapshots of every state field plus `series.csv`.
pub fn write_state(dir: &Path, traj: &StateTrajectory, report: &InvariantReport) -> AppResult<()> {
    for (name, levels) in [("phi", &traj.phi), ("mu", &traj.mu), ("a", &traj.a), ("n", &traj.n), ("sigma", &traj.sigma)]
    {
        write_levels(dir, "", name, levels)?;
    }
    write_csv(&dir.join("series.csv"), &series_rows(traj, report))
}

pub fn write_adjoint(dir: &Path, adj: &AdjointTrajectory) -> AppResult<()> {
    for (name, levels) in [("p1", &adj.p1), ("p2", &adj.p2), ("p3", &adj.p3), ("p4", &adj.p4), ("p5", &adj.p5)] {
        write_levels(dir, "adj_", name, levels)?;
    }
    Ok(())
}

pub fn write_linearized(dir: &Path, lin: &LinearizedTrajectory) -> AppResult<()> {
    for (name, levels) in
        [("psi", &lin.psi), ("eta", &lin.eta), ("alpha", &lin.alpha), ("xi", &lin.xi), ("omega", &lin.omega)]
    {
        write_levels(dir, "lin_", name, levels)?;
    }
    Ok(())
}

/// One snapshot per control slice, `u_{k:06}.fld`.
pub fn write_control(dir: &Path, u: &Control) -> AppResult<()> {
    write_levels(dir, "", "u", u.slices()).map(|_| ())
}

pub fn optimize_rows(records: &[IterationRecord]) -> Vec<OptimizeRow> {
    records
        .iter()
        .map(|r| OptimizeRow {
            iteration: r.iteration,
            cost: r.cost,
            stationarity: r.stationarity,
            step_size: r.step_size,
            backtracks: r.backtracks,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OptimizeRow {
    pub iteration: usize,
    pub cost: f64,
    pub stationarity: f64,
    pub step_size: f64,
    pub backtracks: usize,
}
