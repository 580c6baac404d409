//! Verification suites run by `chks verify`.
//!
//! Every suite returns its measurements as [`Metric`] rows. Random
//! directions and controls come from the configuration's seed on streams
//! starting at [`streams::SUITES`], so a suite is as reproducible as a
//! simulation.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chks_core::adjoint::{duality_residual, solve_adjoint, AdjointMode};
use chks_core::control::{cost, reduced_gradient, Control, UpperBound};
use chks_core::grid::mean;
use chks_core::linearized::solve_linearized;
use chks_core::model::ModelSpec;
use chks_core::potentials::{PotentialKind, PotentialSpec, ProliferationSpec, DEFAULT_EPS_CLAMP};
use chks_core::state::{dependence_norm, phase_energy, solve_forward, InitialData, StateTrajectory, TimeSettings};
use chks_core::{Field, FluxScheme, Grid};

use crate::config::{streams, RunConfig};
use crate::error::{AppError, AppResult};
use crate::fields::FieldGen;
use crate::output::{DualityRow, Metric};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Gradcheck,
    Taylor,
    Duality,
    Invariants,
    Lipschitz,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [Suite::Gradcheck, Suite::Taylor, Suite::Duality, Suite::Invariants, Suite::Lipschitz];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Gradcheck => "gradcheck",
            Suite::Taylor => "taylor",
            Suite::Duality => "duality",
            Suite::Invariants => "invariants",
            Suite::Lipschitz => "lipschitz",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Suite::EACH.into_iter().chain([Suite::All]).find(|x| x.name() == s).ok_or_else(|| {
            format!("unknown suite `{s}` (expected gradcheck, taylor, duality, invariants, lipschitz or all)")
        })
    }
}

/// Measurements of one verify run. `duality` holds the sweep table when the
/// duality suite ran.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub metrics: Vec<Metric>,
    pub duality: Vec<DualityRow>,
}

impl Report {
    pub fn passed(&self) -> bool {
        !self.metrics.iter().any(Metric::failed)
    }
}

pub fn run_suite(cfg: &RunConfig, suite: Suite) -> AppResult<Report> {
    let mut report = Report::default();
    let suites: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    for s in suites {
        match s {
            Suite::Gradcheck => report.metrics.extend(gradcheck(cfg)?),
            Suite::Taylor => report.metrics.extend(taylor(cfg)?),
            Suite::Duality => {
                let (m, rows) = duality(cfg)?;
                report.metrics.extend(m);
                report.duality = rows;
            }
            Suite::Invariants => report.metrics.extend(invariants(cfg)?),
            Suite::Lipschitz => report.metrics.extend(lipschitz(cfg)?),
            Suite::All => unreachable!(),
        }
    }
    Ok(report)
}

/// Seeded smooth control with values in `[lo, hi]`.
fn random_control(grid: Grid, nt: usize, seed: u64, stream: u64, lo: f64, hi: f64) -> Control {
    FieldGen::Random { min: lo, max: hi, modes: 3 }
        .build_control(grid, nt, seed, stream, Path::new(""))
        .expect("random generators do not read files")
}

/// Largest admissible constant, used as the upper end of random controls.
fn cap(bound: &UpperBound) -> f64 {
    match bound {
        UpperBound::Scalar(v) => *v,
        UpperBound::Field(f) => f.min(),
    }
}

/// Zeroes `h` wherever `u ± eps h` would leave the admissible box.
fn masked(u: &Control, h: &Control, eps: f64, bound: &UpperBound) -> Control {
    let mut out = h.clone();
    for (k, s) in out.slices_mut().iter_mut().enumerate() {
        let base = u.slice(k).data();
        for (cell, v) in s.data_mut().iter_mut().enumerate() {
            let reach = eps * v.abs();
            if base[cell] - reach < 0.0 || base[cell] + reach > bound.at(cell) {
                *v = 0.0;
            }
        }
    }
    out
}

fn direction(cfg: &RunConfig, index: u64, eps: f64) -> AppResult<Control> {
    let raw = random_control(cfg.grid, cfg.time.nt, cfg.seed, streams::SUITES + index, -1.0, 1.0);
    let h = masked(&cfg.u0, &raw, eps, &cfg.problem.u_max);
    if h.norm(cfg.time.tau()) == 0.0 {
        return Err(AppError::Verify(
            "the initial control u0 has no cells strictly inside the admissible box; \
             derivative checks need an interior base point"
                .into(),
        ));
    }
    Ok(h)
}

/// `a - b - eps c` in the dependence norm, level by level.
fn state_distance(
    a: &StateTrajectory,
    b: &StateTrajectory,
    lin: Option<(&chks_core::linearized::LinearizedTrajectory, f64)>,
) -> f64 {
    let diff = |x: &[Field], y: &[Field], l: Option<&[Field]>| -> Vec<Field> {
        x.iter()
            .zip(y)
            .enumerate()
            .map(|(k, (p, q))| {
                let mut d = p - q;
                if let (Some(l), Some((_, eps))) = (l, lin) {
                    d.axpy(-eps, &l[k]);
                }
                d
            })
            .collect()
    };
    let pick = |f: fn(&chks_core::linearized::LinearizedTrajectory) -> &Vec<Field>| lin.map(|(l, _)| f(l).as_slice());
    let d = [
        diff(&a.phi, &b.phi, pick(|l| &l.psi)),
        diff(&a.mu, &b.mu, pick(|l| &l.eta)),
        diff(&a.a, &b.a, pick(|l| &l.alpha)),
        diff(&a.n, &b.n, pick(|l| &l.xi)),
        diff(&a.sigma, &b.sigma, pick(|l| &l.omega)),
    ];
    dependence_norm([&d[0], &d[1], &d[2], &d[3], &d[4]], a.tau)
}

/// Central finite differences of the reduced cost against the adjoint
/// gradient along seeded admissible directions.
pub fn gradcheck(cfg: &RunConfig) -> AppResult<Vec<Metric>> {
    const SUITE: &str = "gradcheck";
    let (spec, init, time, cs, u) = (&cfg.model, &cfg.init, &cfg.time, &cfg.problem, &cfg.u0);
    let eps = cfg.verify.fd_eps;
    let (traj, _) = solve_forward(spec, init, u, time)?;
    let adj = solve_adjoint(spec, &traj, cs, cfg.adjoint)?;
    let grad = reduced_gradient(&adj, u, cs.b3)?;
    let j = |v: &Control| -> AppResult<f64> { Ok(cost(&solve_forward(spec, init, v, time)?.0, v, cs)?) };

    let mut metrics = Vec::new();
    let mut worst: f64 = 0.0;
    for d in 0..cfg.verify.directions {
        let h = direction(cfg, d as u64, eps)?;
        let mut up = u.clone();
        up.axpy(eps, &h);
        let mut down = u.clone();
        down.axpy(-eps, &h);
        let fd = (j(&up)? - j(&down)?) / (2.0 * eps);
        let ad = grad.inner(&h, time.tau());
        let err = if fd == ad { 0.0 } else { (fd - ad).abs() / fd.abs() };
        worst = worst.max(err);
        metrics.push(Metric::at_most(SUITE, format!("rel_error_direction_{d}"), err, 1e-3));
    }
    metrics.push(Metric::at_most(SUITE, "max_rel_error", worst, 1e-3));
    Ok(metrics)
}

/// Remainder of the linearization under a shrinking perturbation.
pub fn taylor(cfg: &RunConfig) -> AppResult<Vec<Metric>> {
    const SUITE: &str = "taylor";
    let (spec, init, time, u) = (&cfg.model, &cfg.init, &cfg.time, &cfg.u0);
    let eps_list = &cfg.verify.taylor_eps;
    let largest = eps_list.iter().copied().fold(0.0, f64::max);
    let h = direction(cfg, 50, largest)?;
    let (base, _) = solve_forward(spec, init, u, time)?;
    let lin = solve_linearized(spec, &base, &h)?;
    let mut metrics = Vec::new();
    let mut remainders = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let mut up = u.clone();
        up.axpy(eps, &h);
        let (s, _) = solve_forward(spec, init, &up, time)?;
        let r = state_distance(&s, &base, Some((&lin, eps)));
        metrics.push(Metric::info(SUITE, format!("remainder_eps_{eps:e}"), r));
        remainders.push(r);
    }
    let min_order = remainders
        .windows(2)
        .zip(eps_list.windows(2))
        .map(|(r, e)| (r[0] / r[1]).ln() / (e[0] / e[1]).ln())
        .fold(f64::INFINITY, |a, b| if b.is_nan() { f64::NAN } else { a.min(b) });
    metrics.push(Metric::at_least(SUITE, "min_observed_order", min_order, 1.5));
    Ok(metrics)
}

/// Duality gap of the continuous-coefficient adjoint at `nt` and `2 nt`.
pub fn duality(cfg: &RunConfig) -> AppResult<(Vec<Metric>, Vec<DualityRow>)> {
    const SUITE: &str = "duality";
    let spec = &cfg.model;
    let mut rows = Vec::new();
    let mut discrete_worst: f64 = 0.0;
    for nt in [cfg.time.nt, 2 * cfg.time.nt] {
        let c = if nt == cfg.time.nt { cfg.clone() } else { cfg.resampled(cfg.grid, nt, cfg.seed)? };
        let h = random_control(c.grid, nt, c.seed, streams::SUITES + 60, -1.0, 1.0);
        let (base, _) = solve_forward(spec, &c.init, &c.u0, &c.time)?;
        let lin = solve_linearized(spec, &base, &h)?;
        let adj = solve_adjoint(spec, &base, &c.problem, AdjointMode::Continuous)?;
        let residual = duality_residual(&base, &adj, &h, &lin, &c.problem)?;
        rows.push(DualityRow { nt, tau: c.time.tau(), residual });
        let exact = solve_adjoint(spec, &base, &c.problem, AdjointMode::Discrete)?;
        discrete_worst = discrete_worst.max(duality_residual(&base, &exact, &h, &lin, &c.problem)?);
    }
    let metrics = vec![
        Metric::at_most(SUITE, format!("residual_nt_{}", rows[0].nt), rows[0].residual, 1e-3),
        Metric::info(SUITE, format!("residual_nt_{}", rows[1].nt), rows[1].residual),
        Metric::at_least(SUITE, "refinement_ratio", rows[0].residual / rows[1].residual, 1.5),
        Metric::at_most(SUITE, "discrete_transpose_residual", discrete_worst, 1e-10),
    ];
    Ok((metrics, rows))
}

fn potential_matrix(cfg: &RunConfig) -> [PotentialSpec; 2] {
    let c1 = match cfg.model.pot.kind {
        PotentialKind::Regular { c1 } => c1,
        PotentialKind::Logarithmic { .. } => 1.0,
    };
    let (c2, eps_clamp) = match cfg.model.pot.kind {
        PotentialKind::Logarithmic { c2, eps_clamp } => (c2, eps_clamp),
        PotentialKind::Regular { .. } => (cfg.verify.log_c2, DEFAULT_EPS_CLAMP),
    };
    [PotentialSpec::regular(c1), PotentialSpec { kind: PotentialKind::Logarithmic { c2, eps_clamp } }]
}

/// Maximum principle, positivity, mean-value balance and energy decay.
pub fn invariants(cfg: &RunConfig) -> AppResult<Vec<Metric>> {
    const SUITE: &str = "invariants";
    let mut metrics = Vec::new();

    // both potentials x both fluxes x seeds
    let (mut sigma_min, mut sigma_max, mut a_min_upwind) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    let (mut clamp_events, mut failures) = (0u64, 0usize);
    for s in 0..cfg.verify.matrix_seeds as u64 {
        let c = cfg.resampled(cfg.grid, cfg.time.nt, cfg.seed.wrapping_add(s))?;
        for pot in potential_matrix(cfg) {
            let spec = ModelSpec { pot, ..cfg.model };
            for flux in [FluxScheme::Centered, FluxScheme::Upwind] {
                let time = TimeSettings::new(c.time.t_final, c.time.nt, pot.default_stabilization(), flux);
                match solve_forward(&spec, &c.init, &c.u0, &time) {
                    Ok((_, rep)) => {
                        sigma_min = sigma_min.min(rep.sigma_min);
                        sigma_max = sigma_max.max(rep.sigma_max);
                        if flux == FluxScheme::Upwind {
                            a_min_upwind = a_min_upwind.min(rep.a_min);
                        }
                        clamp_events += rep.clamp_events;
                    }
                    Err(_) => failures += 1,
                }
            }
        }
    }
    metrics.push(Metric::at_most(SUITE, "matrix_failed_solves", failures as f64, 0.0));
    metrics.push(Metric::at_least(SUITE, "sigma_min", sigma_min, -1e-8));
    metrics.push(Metric::at_most(SUITE, "sigma_max", sigma_max, 1.0 + 1e-8));
    metrics.push(Metric::at_least(SUITE, "a_min_upwind", a_min_upwind, -1e-10));
    metrics.push(Metric::info(SUITE, "clamp_events", clamp_events as f64));

    // a0 = 0 with u = 0 keeps a identically zero
    let zero_a = InitialData { a0: Field::zeros(cfg.grid), ..cfg.init.clone() };
    let mut a_abs: f64 = 0.0;
    for flux in [FluxScheme::Centered, FluxScheme::Upwind] {
        let time = TimeSettings { flux, ..cfg.time };
        let (traj, _) = solve_forward(&cfg.model, &zero_a, &Control::zeros(cfg.grid, cfg.time.nt), &time)?;
        a_abs = traj.a.iter().map(Field::max_abs).fold(a_abs, f64::max);
    }
    metrics.push(Metric::at_most(SUITE, "zero_a_max_abs", a_abs, 0.0));

    // closed-form means
    let decay = ModelSpec { prolif: ProliferationSpec::Zero, ..cfg.model };
    let (_, rep) = solve_forward(&decay, &cfg.init, &cfg.u0, &cfg.time)?;
    metrics.push(Metric::at_most(SUITE, "mean_residual_decay", rep.mean_ode_residual, 1e-12));
    let r0 = cfg.model.pot.r0();
    let stationary = ModelSpec { prolif: ProliferationSpec::Constant { h0: cfg.model.m * r0 }, ..cfg.model };
    let shift = r0 - mean(&cfg.init.phi0);
    let centred = InitialData { phi0: cfg.init.phi0.map(|p| p + shift), ..cfg.init.clone() };
    let (_, rep) = solve_forward(&stationary, &centred, &cfg.u0, &cfg.time)?;
    metrics.push(Metric::at_most(SUITE, "mean_residual_stationary", rep.mean_ode_residual, 1e-12));

    // generic runs: the residual is first order in tau
    let mut residuals = Vec::new();
    for factor in [1, 2, 4] {
        let nt = factor * cfg.time.nt;
        let c = if factor == 1 { cfg.clone() } else { cfg.resampled(cfg.grid, nt, cfg.seed)? };
        residuals.push(solve_forward(&c.model, &c.init, &c.u0, &c.time)?.1.mean_ode_residual);
    }
    for (i, w) in residuals.windows(2).enumerate() {
        let ratio = w[0] / w[1];
        metrics.push(Metric::info(SUITE, format!("mean_residual_nt_{}", (1 << i) * cfg.time.nt), w[0]));
        let name = format!("mean_residual_halving_{}", i + 1);
        metrics.push(Metric::at_least(SUITE, name.clone() + "_low", ratio, 1.6));
        metrics.push(Metric::at_most(SUITE, name + "_high", ratio, 2.4));
    }

    // decoupled Cahn-Hilliard: phase energy never increases
    let pot = cfg.model.pot;
    let ch = ModelSpec { chi_phi: 0.0, m: 0.0, prolif: ProliferationSpec::Zero, ..cfg.model };
    let time = TimeSettings { s_stab: pot.default_stabilization(), ..cfg.time };
    let mut worst_increase = f64::NEG_INFINITY;
    for s in 0..cfg.verify.matrix_seeds as u64 {
        let c = cfg.resampled(cfg.grid, cfg.time.nt, cfg.seed.wrapping_add(s))?;
        let (traj, _) = solve_forward(&ch, &c.init, &Control::zeros(cfg.grid, cfg.time.nt), &time)?;
        let e: Vec<f64> = traj.phi.iter().map(|p| phase_energy(p, &pot)).collect();
        for w in e.windows(2) {
            worst_increase = worst_increase.max((w[1] - w[0]) / w[0].abs().max(1.0));
        }
    }
    // increments at the round-off level are not resolved
    metrics.push(Metric::at_most(SUITE, "energy_max_relative_increase", worst_increase, 1e-14));
    Ok(metrics)
}

/// Ratio of state distance to control distance over random admissible
/// pairs, on the configured grid and on one refined twice in each direction.
pub fn lipschitz(cfg: &RunConfig) -> AppResult<Vec<Metric>> {
    const SUITE: &str = "lipschitz";
    let hi = cap(&cfg.problem.u_max);
    let fine_grid = Grid::new(2 * cfg.grid.nx(), 2 * cfg.grid.ny(), cfg.grid.lx(), cfg.grid.ly())?;
    let mut maxima = Vec::new();
    for grid in [cfg.grid, fine_grid] {
        let c = if grid == cfg.grid { cfg.clone() } else { cfg.resampled(grid, cfg.time.nt, cfg.seed)? };
        let nt = c.time.nt;
        let mut worst: f64 = 0.0;
        for pair in 0..cfg.verify.lipschitz_pairs as u64 {
            let stream = streams::SUITES + 200 + 2 * pair;
            let u1 = random_control(grid, nt, c.seed, stream, 0.0, hi);
            let u2 = random_control(grid, nt, c.seed, stream + 1, 0.0, hi);
            let s1 = solve_forward(&c.model, &c.init, &u1, &c.time)?.0;
            let s2 = solve_forward(&c.model, &c.init, &u2, &c.time)?.0;
            let ratio = state_distance(&s1, &s2, None) / u1.zip_map(&u2, |a, b| a - b).norm(c.time.tau());
            worst = if ratio.is_finite() { worst.max(ratio) } else { f64::INFINITY };
        }
        maxima.push(worst);
    }
    let factor = (maxima[0] / maxima[1]).max(maxima[1] / maxima[0]);
    Ok(vec![
        Metric::at_most(SUITE, format!("max_ratio_{}x{}", cfg.grid.nx(), cfg.grid.ny()), maxima[0], f64::MAX),
        Metric::at_most(SUITE, format!("max_ratio_{}x{}", fine_grid.nx(), fine_grid.ny()), maxima[1], f64::MAX),
        Metric::at_most(SUITE, "refinement_factor", factor, 3.0),
    ])
}
