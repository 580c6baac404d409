//! Forward solver for the state system.
//!
//! One time step updates the unknowns in the order `(phi, mu) -> n -> sigma
//! -> a`, each sub-step implicit in its own diffusion:
//!
//! 1. `(phi+ - phi)/tau - Δmu+ + m phi+ = -chi_phi Δn + h(phi)`,
//!    `mu+ = -Δphi+ + s (phi+ - phi) + F'(phi)`;
//! 2. `(n+ - n)/tau - Δn+ = (chi_phi + c_phi) phi+ + c_n n + c_sigma sigma + c0`;
//! 3. `(sigma+ - sigma)/tau - Δsigma+ + (1 + a) sigma+ = 1 + chi_a a`;
//! 4. `(a+ - a)/tau - Δa+ = -chi_a div(a ∇sigma+) + a - a^2 + u`.
//!
//! The linearized and adjoint solvers mirror exactly this ordering and these
//! time levels, so any change here has to be carried over to them.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Assumption, Error, Result};
use crate::grid::{
    self, chemotaxis_flux, div, gradient_faces, inner, inner_faces, lap, mean, Field, FluxScheme, Grid,
    ReactionDiffusion,
};
use crate::model::ModelSpec;
use crate::potentials::{derive_constants, ClampTally, PotentialSpec};

/// Piecewise-constant-in-time distributed control, one slice per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct Control {
    grid: Grid,
    slices: Vec<Field>,
}

/// Pointwise upper bound of the admissible box.
#[derive(Debug, Clone, PartialEq)]
pub enum UpperBound {
    Scalar(f64),
    Field(Field),
}

impl UpperBound {
    #[inline]
    pub fn at(&self, cell: usize) -> f64 {
        match self {
            UpperBound::Scalar(v) => *v,
            UpperBound::Field(f) => f.data()[cell],
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let ok = match self {
            UpperBound::Scalar(v) => v.is_finite() && *v >= 0.0,
            UpperBound::Field(f) => f.grid() == grid && f.data().iter().all(|v| v.is_finite() && *v >= 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::inadmissible(Assumption::ControlBound, "u_max must be finite and nonnegative on the grid"))
        }
    }
}

impl Control {
    pub fn zeros(grid: Grid, nt: usize) -> Self {
        Control { grid, slices: (0..nt).map(|_| Field::zeros(grid)).collect() }
    }

    pub fn constant(grid: Grid, nt: usize, value: f64) -> Self {
        Control { grid, slices: (0..nt).map(|_| Field::constant(grid, value)).collect() }
    }

    pub fn from_slices(grid: Grid, slices: Vec<Field>) -> Result<Self> {
        if slices.iter().any(|s| *s.grid() != grid) {
            return Err(Error::ShapeMismatch { context: "Control::from_slices" });
        }
        Ok(Control { grid, slices })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn nt(&self) -> usize {
        self.slices.len()
    }

    pub fn slice(&self, k: usize) -> &Field {
        &self.slices[k]
    }

    pub fn slices(&self) -> &[Field] {
        &self.slices
    }

    pub fn slices_mut(&mut self) -> &mut [Field] {
        &mut self.slices
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Control {
        Control { grid: self.grid, slices: self.slices.iter().map(|s| s.map(&mut f)).collect() }
    }

    pub fn zip_map(&self, other: &Control, mut f: impl FnMut(f64, f64) -> f64) -> Control {
        debug_assert_eq!(self.nt(), other.nt());
        Control {
            grid: self.grid,
            slices: self.slices.iter().zip(&other.slices).map(|(a, b)| a.zip_map(b, &mut f)).collect(),
        }
    }

    pub fn axpy(&mut self, alpha: f64, x: &Control) {
        for (s, v) in self.slices.iter_mut().zip(&x.slices) {
            s.axpy(alpha, v);
        }
    }

    pub fn scaled(&self, alpha: f64) -> Control {
        self.map(|v| alpha * v)
    }

    /// `∫_Q u v` with the rectangle rule in time.
    pub fn inner(&self, other: &Control, tau: f64) -> f64 {
        tau * self.slices.iter().zip(&other.slices).map(|(a, b)| inner(a, b)).sum::<f64>()
    }

    pub fn norm(&self, tau: f64) -> f64 {
        libm::sqrt(self.inner(self, tau))
    }

    pub fn is_finite(&self) -> bool {
        self.slices.iter().all(Field::is_finite)
    }

    pub fn min(&self) -> f64 {
        self.slices.iter().map(Field::min).fold(f64::INFINITY, f64::min)
    }

    /// Checks `0 <= u <= u_max` everywhere.
    pub fn check_admissible(&self, bound: &UpperBound) -> Result<()> {
        bound.validate(&self.grid)?;
        for (k, s) in self.slices.iter().enumerate() {
            for (cell, &v) in s.data().iter().enumerate() {
                if !(v >= 0.0 && v <= bound.at(cell)) {
                    return Err(Error::inadmissible(
                        Assumption::ControlBox,
                        format!("control value {v} at step {k}, cell {cell} outside [0, {}]", bound.at(cell)),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub phi0: Field,
    pub a0: Field,
    pub n0: Field,
    pub sigma0: Field,
}

impl InitialData {
    /// Full admissibility: phase range, strictly positive `a0`, `sigma0` in
    /// `[0, 1]` and the mean-value endpoint check.
    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        self.check_basic(&spec.pot)?;
        if let Some(v) = self.a0.data().iter().find(|v| **v <= 0.0) {
            return Err(Error::inadmissible(
                Assumption::AngiogenesisPositive,
                format!("a0 must be positive everywhere, found {v}"),
            ));
        }
        derive_constants(spec.m, &spec.pot, &spec.prolif, mean(&self.phi0))?;
        Ok(())
    }

    /// The checks the solver itself relies on. `a0 = 0` is allowed here
    /// because zero is an invariant state of the angiogenesis equation.
    pub fn check_basic(&self, pot: &PotentialSpec) -> Result<()> {
        for f in [&self.a0, &self.n0, &self.sigma0] {
            f.check_same_grid(&self.phi0, "InitialData")?;
        }
        for f in [&self.phi0, &self.a0, &self.n0, &self.sigma0] {
            f.check_finite("initial data")?;
        }
        if let Some(v) = self.phi0.data().iter().find(|v| !pot.in_domain(**v)) {
            return Err(Error::inadmissible(
                Assumption::PhaseRange,
                format!("phi0 takes the value {v} outside the potential's domain"),
            ));
        }
        if let Some(v) = self.a0.data().iter().find(|v| **v < 0.0) {
            return Err(Error::inadmissible(
                Assumption::AngiogenesisPositive,
                format!("a0 takes the negative value {v}"),
            ));
        }
        if let Some(v) = self.sigma0.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::inadmissible(
                Assumption::ConcentrationRange,
                format!("sigma0 takes the value {v} outside [0, 1]"),
            ));
        }
        Ok(())
    }
}

/// Time discretization and scheme options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSettings {
    pub t_final: f64,
    pub nt: usize,
    pub s_stab: f64,
    pub flux: FluxScheme,
}

impl TimeSettings {
    pub fn new(t_final: f64, nt: usize, s_stab: f64, flux: FluxScheme) -> Self {
        TimeSettings { t_final, nt, s_stab, flux }
    }

    pub fn tau(&self) -> f64 {
        self.t_final / self.nt as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final.is_finite() && self.t_final > 0.0) || self.nt == 0 || !(self.s_stab >= 0.0) {
            return Err(Error::inadmissible(
                Assumption::Discretization,
                format!(
                    "need T > 0, Nt >= 1 and s_stab >= 0 (T={}, Nt={}, s_stab={})",
                    self.t_final, self.nt, self.s_stab
                ),
            ));
        }
        Ok(())
    }
}

/// Values of all five unknowns at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub phi: Field,
    pub mu: Field,
    pub a: Field,
    pub n: Field,
    pub sigma: Field,
}

impl State {
    fn is_finite(&self) -> bool {
        [&self.phi, &self.mu, &self.a, &self.n, &self.sigma].iter().all(|f| f.is_finite())
    }
}

/// All stored time levels `0..=nt` of a forward solve.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    pub grid: Grid,
    pub tau: f64,
    pub s_stab: f64,
    pub flux: FluxScheme,
    pub phi: Vec<Field>,
    pub mu: Vec<Field>,
    pub a: Vec<Field>,
    pub n: Vec<Field>,
    pub sigma: Vec<Field>,
}

impl StateTrajectory {
    pub fn nt(&self) -> usize {
        self.phi.len() - 1
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.nt()).map(move |k| k as f64 * self.tau)
    }

    pub fn state(&self, k: usize) -> State {
        State {
            phi: self.phi[k].clone(),
            mu: self.mu[k].clone(),
            a: self.a[k].clone(),
            n: self.n[k].clone(),
            sigma: self.sigma[k].clone(),
        }
    }

    fn push(&mut self, s: State) {
        self.phi.push(s.phi);
        self.mu.push(s.mu);
        self.a.push(s.a);
        self.n.push(s.n);
        self.sigma.push(s.sigma);
    }
}

/// Per-level diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelStats {
    pub energy: f64,
    pub mean_phi: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub a_min: f64,
    /// Cumulative clamp events up to and including this level.
    pub clamp_events: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub a_min: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub mean_ode_residual: f64,
    pub energy_series: Vec<f64>,
    pub clamp_events: u64,
    pub levels: Vec<LevelStats>,
}

impl InvariantReport {
    /// Distance of the phase field from the endpoints of `(0, 1)`; only
    /// meaningful for the logarithmic potential.
    pub fn separation(&self) -> f64 {
        self.phi_min.min(1.0 - self.phi_max)
    }
}

/// Reusable forward stepper for one grid, model and time step.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    pub(crate) spec: &'a ModelSpec,
    pub(crate) rd: ReactionDiffusion,
    pub(crate) tau: f64,
    pub(crate) s_stab: f64,
    pub(crate) flux: FluxScheme,
}

impl<'a> Stepper<'a> {
    pub fn new(spec: &'a ModelSpec, grid: &Grid, tau: f64, s_stab: f64, flux: FluxScheme) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) || !(s_stab >= 0.0) {
            return Err(Error::InvalidArgument(format!("need tau > 0 and s_stab >= 0 (tau={tau}, s_stab={s_stab})")));
        }
        Ok(Stepper { spec, rd: ReactionDiffusion::new(grid), tau, s_stab, flux })
    }

    pub fn step(&self, s: &State, u: &Field, tally: &ClampTally) -> Result<State> {
        let spec = self.spec;
        let (tau, inv_tau) = (self.tau, 1.0 / self.tau);
        let pot = &spec.pot;

        let lap_n = lap(&s.n);
        let mut rhs_phi = s.phi.map(|p| p * inv_tau + spec.prolif.h_value(p));
        rhs_phi.axpy(-spec.chi_phi, &lap_n);
        let rhs_mu = s.phi.map(|p| self.s_stab * p - pot.f_prime(p));
        tally.record(s.phi.data().iter().filter(|p| pot.is_clamped(**p)).count() as u64);
        let (phi, mu) = self.rd.ch_block(&rhs_phi, &rhs_mu, tau, self.s_stab, spec.m)?;

        let mut rhs_n = s.n.map(|v| (inv_tau + spec.c_n) * v + spec.c0);
        rhs_n.axpy(spec.chi_phi + spec.c_phi, &phi);
        rhs_n.axpy(spec.c_sigma, &s.sigma);
        let n = self.rd.helmholtz(&rhs_n, inv_tau, 1.0)?;

        let rhs_sigma = s.sigma.zip_map(&s.a, |sg, a| sg * inv_tau + 1.0 + spec.chi_a * a);
        let reaction = s.a.map(|a| 1.0 + a);
        let (sigma, _) = self.rd.variable(&rhs_sigma, inv_tau, &reaction, 1.0)?;

        let transport = div(&chemotaxis_flux(&s.a, &sigma, self.flux));
        let mut rhs_a = s.a.zip_map(u, |a, uv| (inv_tau + 1.0) * a - a * a + uv);
        rhs_a.axpy(-spec.chi_a, &transport);
        let a = self.rd.helmholtz(&rhs_a, inv_tau, 1.0)?;

        let next = State { phi, mu, a, n, sigma };
        if !next.is_finite() {
            return Err(Error::NonFinite { context: "forward step" });
        }
        Ok(next)
    }
}

/// One forward step from `state` with control slice `u`.
pub fn step(state: &State, u: &Field, spec: &ModelSpec, tau: f64, s_stab: f64, flux: FluxScheme) -> Result<State> {
    let stepper = Stepper::new(spec, state.phi.grid(), tau, s_stab, flux)?;
    stepper.step(state, u, &ClampTally::new())
}

/// Initial chemical potential `-Δphi0 + F'(phi0)`.
pub fn initial_mu(phi0: &Field, pot: &PotentialSpec) -> Field {
    let mut mu = phi0.map(|p| pot.f_prime(p));
    mu.axpy(-1.0, &lap(phi0));
    mu
}

/// Integrates the state system over `[0, T]` and collects the monitors.
pub fn solve_forward(
    spec: &ModelSpec,
    init: &InitialData,
    u: &Control,
    time: &TimeSettings,
) -> Result<(StateTrajectory, InvariantReport)> {
    time.validate()?;
    init.check_basic(&spec.pot)?;
    let grid = *init.phi0.grid();
    if *u.grid() != grid || u.nt() != time.nt {
        return Err(Error::ShapeMismatch { context: "solve_forward: control" });
    }
    if !u.is_finite() {
        return Err(Error::NonFinite { context: "control" });
    }
    if u.min() < 0.0 {
        return Err(Error::inadmissible(Assumption::ControlBox, "control takes negative values"));
    }
    let tau = time.tau();
    let stepper = Stepper::new(spec, &grid, tau, time.s_stab, time.flux)?;
    let tally = ClampTally::new();

    let mut traj = StateTrajectory {
        grid,
        tau,
        s_stab: time.s_stab,
        flux: time.flux,
        phi: Vec::with_capacity(time.nt + 1),
        mu: Vec::with_capacity(time.nt + 1),
        a: Vec::with_capacity(time.nt + 1),
        n: Vec::with_capacity(time.nt + 1),
        sigma: Vec::with_capacity(time.nt + 1),
    };
    let mut current = State {
        mu: initial_mu(&init.phi0, &spec.pot),
        phi: init.phi0.clone(),
        a: init.a0.clone(),
        n: init.n0.clone(),
        sigma: init.sigma0.clone(),
    };
    tally.record(init.phi0.data().iter().filter(|p| spec.pot.is_clamped(**p)).count() as u64);
    let mut levels = Vec::with_capacity(time.nt + 1);
    levels.push(level_stats(&current, spec, tally.get()));
    for k in 0..time.nt {
        let next = stepper.step(&current, u.slice(k), &tally).map_err(|e| e.at_step(k))?;
        traj.push(core::mem::replace(&mut current, next));
        levels.push(level_stats(&current, spec, tally.get()));
    }
    traj.push(current);

    let fold = |f: fn(&LevelStats) -> f64, init: f64, op: fn(f64, f64) -> f64| levels.iter().map(f).fold(init, op);
    let report = InvariantReport {
        sigma_min: fold(|l| l.sigma_min, f64::INFINITY, f64::min),
        sigma_max: fold(|l| l.sigma_max, f64::NEG_INFINITY, f64::max),
        a_min: fold(|l| l.a_min, f64::INFINITY, f64::min),
        phi_min: fold(|l| l.phi_min, f64::INFINITY, f64::min),
        phi_max: fold(|l| l.phi_max, f64::NEG_INFINITY, f64::max),
        mean_ode_residual: check_mean_ode(&traj, spec),
        energy_series: levels.iter().map(|l| l.energy).collect(),
        clamp_events: tally.get(),
        levels,
    };
    Ok((traj, report))
}

fn level_stats(s: &State, spec: &ModelSpec, clamp_events: u64) -> LevelStats {
    LevelStats {
        energy: energy(s, spec),
        mean_phi: mean(&s.phi),
        phi_min: s.phi.min(),
        phi_max: s.phi.max(),
        sigma_min: s.sigma.min(),
        sigma_max: s.sigma.max(),
        a_min: s.a.min(),
        clamp_events,
    }
}

/// Free energy: `∫ a(ln a - 1) - chi_phi ∫ n phi - chi_a ∫ a sigma
/// + 1/2 ∫ (|∇phi|^2 + |∇n|^2 + |∇sigma|^2) + ∫ F(phi)`.
///
/// `a` is clamped below at `1e-14` inside the entropy term.
pub fn energy(s: &State, spec: &ModelSpec) -> f64 {
    let entropy = s.a.map(|a| {
        let a = a.max(1e-14);
        a * (libm::log(a) - 1.0)
    });
    let ones = Field::constant(*s.a.grid(), 1.0);
    inner(&entropy, &ones) - spec.chi_phi * inner(&s.n, &s.phi) - spec.chi_a * inner(&s.a, &s.sigma)
        + 0.5 * (dirichlet(&s.n) + dirichlet(&s.sigma))
        + phase_energy(&s.phi, &spec.pot)
}

/// The phase-field part `1/2 ∫ |∇phi|^2 + ∫ F(phi)`.
pub fn phase_energy(phi: &Field, pot: &PotentialSpec) -> f64 {
    let f = phi.map(|p| pot.f_value(p));
    0.5 * dirichlet(phi) + grid::inner(&f, &Field::constant(*phi.grid(), 1.0))
}

fn dirichlet(f: &Field) -> f64 {
    let g = gradient_faces(f);
    inner_faces(&g, &g)
}

/// Largest residual of the mean-value balance
/// `(mean_{k+1} - mean_k)/tau + m mean_{k+1} - mean(h(phi_{k+1}))`.
///
/// The scheme treats `h` explicitly, so the residual is `O(tau)` in general
/// and vanishes to round-off when `h` is constant.
pub fn check_mean_ode(traj: &StateTrajectory, spec: &ModelSpec) -> f64 {
    let means: Vec<f64> = traj.phi.iter().map(mean).collect();
    (0..traj.nt())
        .map(|k| {
            let h_mean = mean(&traj.phi[k + 1].map(|p| spec.prolif.h_value(p)));
            ((means[k + 1] - means[k]) / traj.tau + spec.m * means[k + 1] - h_mean).abs()
        })
        .fold(0.0, f64::max)
}

/// Discrete counterpart of the norm used for continuous dependence, applied
/// to a difference of trajectories given as `(phi, mu, a, n, sigma)` level
/// sequences:
///
/// `sup ‖phi‖_H1 + ‖phi‖_L2(H2) + ‖mu‖_L2(H1) + sup ‖a‖ + ‖a‖_L2(H1)
///  + sup ‖n‖_H1 + ‖n‖_L2(H2) + sup ‖sigma‖_H1 + ‖sigma‖_L2(H2)`.
///
/// Time integrals use the right-endpoint rule over levels `1..`; time
/// derivative terms are not included.
pub fn dependence_norm(d: [&[Field]; 5], tau: f64) -> f64 {
    let l2 = |f: &Field| inner(f, f);
    let h1 = |f: &Field| l2(f) + dirichlet(f);
    let h2 = |f: &Field| l2(f) + l2(&lap(f));
    let sup = |v: &[Field], n: &dyn Fn(&Field) -> f64| libm::sqrt(v.iter().map(n).fold(0.0, f64::max));
    let int = |v: &[Field], n: &dyn Fn(&Field) -> f64| libm::sqrt(tau * v.iter().skip(1).map(n).sum::<f64>());
    let [phi, mu, a, n, sigma] = d;
    sup(phi, &h1)
        + int(phi, &h2)
        + int(mu, &h1)
        + sup(a, &l2)
        + int(a, &h1)
        + sup(n, &h1)
        + int(n, &h2)
        + sup(sigma, &h1)
        + int(sigma, &h2)
}
