//! Tracking cost, admissible set and projected-gradient optimization.

use alloc::format;
use alloc::vec::Vec;

use crate::adjoint::{solve_adjoint, AdjointMode, AdjointTrajectory};
use crate::error::{Assumption, Error, Result};
use crate::grid::{inner, Field};
use crate::model::ModelSpec;
use crate::state::{solve_forward, InitialData, StateTrajectory, TimeSettings};

pub use crate::state::{Control, UpperBound};

/// Weights, targets and box bound of the control problem.
///
/// `phi_q` holds one target per time level `0..=nt`; level 0 does not enter
/// the cost.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSpec {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub phi_q: Vec<Field>,
    pub phi_omega: Field,
    pub u_max: UpperBound,
}

impl ControlSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.b1 >= 0.0 && self.b2 >= 0.0 && self.b3 > 0.0) || !(self.b1.is_finite() && self.b2.is_finite()) {
            return Err(Error::inadmissible(
                Assumption::CostWeights,
                format!("need b1, b2 >= 0 and b3 > 0 (b1={}, b2={}, b3={})", self.b1, self.b2, self.b3),
            ));
        }
        self.u_max.validate(self.phi_omega.grid())
    }

    pub(crate) fn check_against(&self, base: &StateTrajectory) -> Result<()> {
        if self.phi_q.len() != base.nt() + 1
            || *self.phi_omega.grid() != base.grid
            || self.phi_q.iter().any(|f| *f.grid() != base.grid)
        {
            return Err(Error::ShapeMismatch { context: "ControlSpec targets" });
        }
        Ok(())
    }
}

/// `(b1/2) ∫_Q |phi - phi_Q|^2 + (b2/2) ∫ |phi(T) - phi_Omega|^2 + (b3/2) ∫_Q |u|^2`
/// with the rectangle rule in time (levels `1..=nt` for the running term,
/// slices `0..nt` for the control).
pub fn cost(traj: &StateTrajectory, u: &Control, cs: &ControlSpec) -> Result<f64> {
    cs.check_against(traj)?;
    let nt = traj.nt();
    if u.nt() != nt || *u.grid() != traj.grid {
        return Err(Error::ShapeMismatch { context: "cost: control" });
    }
    let tau = traj.tau;
    let sq = |a: &Field, b: &Field| {
        let d = a - b;
        inner(&d, &d)
    };
    let running: f64 = (1..=nt).map(|k| sq(&traj.phi[k], &cs.phi_q[k])).sum();
    let terminal = sq(&traj.phi[nt], &cs.phi_omega);
    Ok(0.5 * cs.b1 * tau * running + 0.5 * cs.b2 * terminal + 0.5 * cs.b3 * u.inner(u, tau))
}

/// Pointwise clamp to `[0, u_max]`.
pub fn project_admissible(v: &Control, u_max: &UpperBound) -> Control {
    let mut out = v.clone();
    for s in out.slices_mut() {
        for (cell, x) in s.data_mut().iter_mut().enumerate() {
            *x = x.max(0.0).min(u_max.at(cell));
        }
    }
    out
}

/// `p3 + b3 u` on each control interval.
pub fn reduced_gradient(adj: &AdjointTrajectory, u: &Control, b3: f64) -> Result<Control> {
    if adj.nt() != u.nt() {
        return Err(Error::ShapeMismatch { context: "reduced_gradient" });
    }
    let slices = (0..u.nt())
        .map(|k| {
            let mut g = adj.p3[k].clone();
            g.axpy(b3, u.slice(k));
            g
        })
        .collect();
    Control::from_slices(*u.grid(), slices)
}

/// `‖u - P(-p3 / b3)‖` in `L2(Q)`.
pub fn stationarity_residual(u: &Control, adj: &AdjointTrajectory, cs: &ControlSpec) -> Result<f64> {
    if adj.nt() != u.nt() {
        return Err(Error::ShapeMismatch { context: "stationarity_residual" });
    }
    let target = Control::from_slices(*u.grid(), (0..u.nt()).map(|k| adj.p3[k].scaled(-1.0 / cs.b3)).collect())?;
    let proj = project_admissible(&target, &cs.u_max);
    Ok(u.zip_map(&proj, |a, b| a - b).norm(adj.tau))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    /// Stop once the stationarity residual is below `tol_stat (1 + ‖u‖)`.
    pub tol_stat: f64,
    pub max_iters: usize,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    /// Initial trial step; `None` means `1 / b3`.
    pub initial_step: Option<f64>,
    pub adjoint: AdjointMode,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            tol_stat: 1e-6,
            max_iters: 200,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            max_backtracks: 40,
            initial_step: None,
            adjoint: AdjointMode::Discrete,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    LineSearchFailure,
}

/// One row per evaluated iterate; row 0 is the initial control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub cost: f64,
    pub stationarity: f64,
    /// Accepted step length (0 for the initial row).
    pub step_size: f64,
    pub backtracks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub u_star: Control,
    pub cost_history: Vec<f64>,
    pub stationarity_history: Vec<f64>,
    pub records: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    pub state: StateTrajectory,
    pub adjoint: AdjointTrajectory,
}

struct Evaluation {
    traj: StateTrajectory,
    adj: AdjointTrajectory,
    cost: f64,
    grad: Control,
    stationarity: f64,
}

fn evaluate(
    spec: &ModelSpec,
    init: &InitialData,
    cs: &ControlSpec,
    u: &Control,
    time: &TimeSettings,
    mode: AdjointMode,
) -> Result<Evaluation> {
    let (traj, _) = solve_forward(spec, init, u, time)?;
    let cost = cost(&traj, u, cs)?;
    let adj = solve_adjoint(spec, &traj, cs, mode)?;
    let grad = reduced_gradient(&adj, u, cs.b3)?;
    let stationarity = stationarity_residual(u, &adj, cs)?;
    Ok(Evaluation { traj, adj, cost, grad, stationarity })
}

/// Projected gradient descent with Armijo backtracking on the reduced cost.
///
/// A trial point whose forward solve fails counts as a rejected step.
pub fn optimize(
    spec: &ModelSpec,
    init: &InitialData,
    cs: &ControlSpec,
    u0: &Control,
    time: &TimeSettings,
    opts: &OptimizeOptions,
) -> Result<OptimizeResult> {
    cs.validate()?;
    u0.check_admissible(&cs.u_max)?;
    let tau = time.tau();
    let mut u = u0.clone();
    let mut cur = evaluate(spec, init, cs, &u, time, opts.adjoint)?;
    let mut records = alloc::vec![IterationRecord {
        iteration: 0,
        cost: cur.cost,
        stationarity: cur.stationarity,
        step_size: 0.0,
        backtracks: 0,
    }];
    let initial_step = opts.initial_step.unwrap_or(1.0 / cs.b3);
    let mut termination = Termination::MaxIterations;

    for it in 1..=opts.max_iters + 1 {
        if cur.stationarity <= opts.tol_stat * (1.0 + u.norm(tau)) {
            termination = Termination::Converged;
            break;
        }
        if it > opts.max_iters {
            break;
        }
        let mut step = initial_step;
        let mut accepted = None;
        for bt in 0..=opts.max_backtracks {
            let mut trial = u.clone();
            trial.axpy(-step, &cur.grad);
            let trial = project_admissible(&trial, &cs.u_max);
            let decrease = cur.grad.inner(&trial.zip_map(&u, |a, b| a - b), tau);
            if let Ok(eval) = evaluate(spec, init, cs, &trial, time, opts.adjoint) {
                if eval.cost <= cur.cost + opts.armijo_c * decrease {
                    accepted = Some((trial, eval, bt));
                    break;
                }
            }
            step *= opts.backtrack_factor;
        }
        match accepted {
            Some((trial, eval, bt)) => {
                u = trial;
                cur = eval;
                records.push(IterationRecord {
                    iteration: it,
                    cost: cur.cost,
                    stationarity: cur.stationarity,
                    step_size: step,
                    backtracks: bt,
                });
            }
            None => {
                termination = Termination::LineSearchFailure;
                break;
            }
        }
    }

    Ok(OptimizeResult {
        cost_history: records.iter().map(|r| r.cost).collect(),
        stationarity_history: records.iter().map(|r| r.stationarity).collect(),
        iterations: records.len() - 1,
        converged: termination == Termination::Converged,
        termination,
        records,
        u_star: u,
        state: cur.traj,
        adjoint: cur.adj,
    })
}
