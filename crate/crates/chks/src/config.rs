//! Run configuration files.
//!
//! A configuration is a TOML document with the sections `[grid]`, `[model]`,
//! `[initial]`, `[time]`, `[control]`, `[optimize]` and `[verify]` plus an
//! optional top-level `seed`. Only `[grid]`, `[initial]` and `[time]` are
//! required; see the README for every key and its default. Loading checks
//! every admissibility condition the solvers rely on and reports the first
//! violation together with its line.

use std::ops::Range;
use std::path::{Path, PathBuf};

use chks_core::adjoint::AdjointMode;
use chks_core::control::{ControlSpec, OptimizeOptions, UpperBound};
use chks_core::model::ModelSpec;
use chks_core::potentials::{derive_constants, PotentialSpec, ProliferationSpec, DEFAULT_EPS_CLAMP};
use chks_core::state::{solve_forward, Control, InitialData, TimeSettings};
use chks_core::{Assumption, Error, FluxScheme, Grid};
use serde::Deserialize;
use toml::Spanned;

use crate::error::ConfigError;
use crate::fields::FieldGen;

type S<T> = Spanned<T>;

/// Random-stream identifiers, one per generated quantity.
pub mod streams {
    pub const PHI0: u64 = 1;
    pub const A0: u64 = 2;
    pub const N0: u64 = 3;
    pub const SIGMA0: u64 = 4;
    pub const U0: u64 = 5;
    pub const PHI_Q: u64 = 6;
    pub const PHI_OMEGA: u64 = 7;
    pub const TARGET_CONTROL: u64 = 8;
    pub const U_MAX: u64 = 9;
    /// First stream available to the verification suites.
    pub const SUITES: u64 = 100;
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    grid: RawGrid,
    #[serde(default)]
    model: RawModel,
    initial: RawInitial,
    time: RawTime,
    #[serde(default)]
    control: RawControl,
    #[serde(default)]
    optimize: RawOptimize,
    #[serde(default)]
    verify: RawVerify,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    nx: S<usize>,
    ny: S<usize>,
    lx: Option<S<f64>>,
    ly: Option<S<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum PotentialName {
    Regular,
    Logarithmic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ProliferationName {
    Zero,
    Constant,
    Logistic,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    m: Option<S<f64>>,
    chi_phi: Option<S<f64>>,
    chi_a: Option<S<f64>>,
    c_phi: Option<S<f64>>,
    c_n: Option<S<f64>>,
    c_sigma: Option<S<f64>>,
    c0: Option<S<f64>>,
    potential: Option<S<PotentialName>>,
    c1: Option<S<f64>>,
    c2: Option<S<f64>>,
    eps_clamp: Option<S<f64>>,
    proliferation: Option<S<ProliferationName>>,
    h0: Option<S<f64>>,
    k: Option<S<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    phi0: S<FieldGen>,
    a0: S<FieldGen>,
    n0: S<FieldGen>,
    sigma0: S<FieldGen>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum FluxName {
    Centered,
    Upwind,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    t_final: S<f64>,
    nt: S<usize>,
    s_stab: Option<S<f64>>,
    flux: Option<S<FluxName>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum BoundGen {
    Scalar(f64),
    Field(FieldGen),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum AdjointName {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawControl {
    b1: Option<S<f64>>,
    b2: Option<S<f64>>,
    b3: Option<S<f64>>,
    u_max: Option<S<BoundGen>>,
    u0: Option<S<FieldGen>>,
    phi_q: Option<S<FieldGen>>,
    phi_omega: Option<S<FieldGen>>,
    target_control: Option<S<FieldGen>>,
    adjoint: Option<S<AdjointName>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptimize {
    tol_stat: Option<S<f64>>,
    max_iters: Option<usize>,
    armijo_c: Option<S<f64>>,
    backtrack_factor: Option<S<f64>>,
    max_backtracks: Option<usize>,
    initial_step: Option<S<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    directions: Option<usize>,
    fd_eps: Option<S<f64>>,
    taylor_eps: Option<S<Vec<f64>>>,
    lipschitz_pairs: Option<usize>,
    matrix_seeds: Option<usize>,
    log_c2: Option<S<f64>>,
}

/// Parameters of the verification suites.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifySettings {
    pub directions: usize,
    pub fd_eps: f64,
    pub taylor_eps: Vec<f64>,
    pub lipschitz_pairs: usize,
    pub matrix_seeds: usize,
    /// `c2` of the logarithmic potential used in the invariant matrix.
    pub log_c2: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            directions: 5,
            fd_eps: 1e-4,
            taylor_eps: vec![1e-2, 5e-3, 2.5e-3],
            lipschitz_pairs: 10,
            matrix_seeds: 3,
            log_c2: 3.0,
        }
    }
}

/// A loaded and validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub path: PathBuf,
    pub seed: u64,
    pub grid: Grid,
    pub model: ModelSpec,
    pub time: TimeSettings,
    pub init: InitialData,
    pub u0: Control,
    pub problem: ControlSpec,
    pub adjoint: AdjointMode,
    /// Control that generated the tracking targets, if they were simulated.
    pub target_control: Option<Control>,
    pub optimize: OptimizeOptions,
    pub verify: VerifySettings,
    raw: RawConfig,
    source: String,
}

/// Maps byte offsets of the source to 1-based line numbers.
struct Lines<'a> {
    path: &'a Path,
    source: &'a str,
}

impl Lines<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        self.source[..span.start.min(self.source.len())].matches('\n').count() + 1
    }

    fn err<T>(
        &self,
        span: Option<Range<usize>>,
        assumption: Option<Assumption>,
        message: impl Into<String>,
    ) -> Result<T, ConfigError> {
        Err(ConfigError {
            path: self.path.to_path_buf(),
            line: span.map(|s| self.line(s)),
            assumption,
            message: message.into(),
        })
    }

    fn reject<T>(&self, at: Option<Range<usize>>, e: Error) -> Result<T, ConfigError> {
        match e {
            Error::Inadmissible { assumption, detail } => self.err(at, Some(assumption), detail),
            other => self.err(at, None, other.to_string()),
        }
    }
}

fn value<T: Copy>(v: &Option<S<T>>, default: T) -> (T, Option<Range<usize>>) {
    match v {
        Some(s) => (*s.get_ref(), Some(s.span())),
        None => (default, None),
    }
}

pub fn load_config(path: &Path, seed_override: Option<u64>) -> Result<RunConfig, ConfigError> {
    let source = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: path.to_path_buf(),
        line: None,
        assumption: None,
        message: format!("cannot read configuration: {e}"),
    })?;
    parse_config(&source, path, seed_override)
}

/// Parses configuration text; `path` locates relative snapshot files and
/// labels error messages.
pub fn parse_config(source: &str, path: &Path, seed_override: Option<u64>) -> Result<RunConfig, ConfigError> {
    let lines = Lines { path, source };
    let raw: RawConfig = match toml::from_str(source) {
        Ok(raw) => raw,
        Err(e) => return lines.err(e.span(), None, e.message().trim().to_string()),
    };
    let seed = seed_override.or(raw.seed).unwrap_or(0);
    let g = &raw.grid;
    let (lx, lx_at) = value(&g.lx, 1.0);
    let (ly, ly_at) = value(&g.ly, 1.0);
    let grid = match Grid::new(*g.nx.get_ref(), *g.ny.get_ref(), lx, ly) {
        Ok(grid) => grid,
        Err(e) => return lines.reject(Some(g.nx.span()).or(lx_at).or(ly_at), e),
    };
    build(raw, source.to_string(), path, grid, seed)
}

impl RunConfig {
    /// The same configuration on another grid and seed, with every generated
    /// field rebuilt and revalidated.
    pub fn rebuilt(&self, grid: Grid, seed: u64) -> Result<RunConfig, ConfigError> {
        build(self.raw.clone(), self.source.clone(), &self.path, grid, seed)
    }

    /// The same configuration with `nt` time steps on `grid`, rebuilt and
    /// revalidated. Time-dependent controls and targets are resampled on the
    /// new levels.
    pub fn resampled(&self, grid: Grid, nt: usize, seed: u64) -> Result<RunConfig, ConfigError> {
        let mut raw = self.raw.clone();
        *raw.time.nt.get_mut() = nt;
        build(raw, self.source.clone(), &self.path, grid, seed)
    }

    pub fn base_dir(&self) -> PathBuf {
        self.path.parent().map(Path::to_path_buf).unwrap_or_default()
    }
}

fn build(raw: RawConfig, source: String, path: &Path, grid: Grid, seed: u64) -> Result<RunConfig, ConfigError> {
    let lines = Lines { path, source: &source };
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let model = build_model(&lines, &raw.model)?;

    let t = &raw.time;
    let flux = match t.flux.as_ref().map(|f| *f.get_ref()) {
        Some(FluxName::Upwind) => FluxScheme::Upwind,
        _ => FluxScheme::Centered,
    };
    let (s_stab, s_at) = value(&t.s_stab, model.pot.default_stabilization());
    let time = TimeSettings::new(*t.t_final.get_ref(), *t.nt.get_ref(), s_stab, flux);
    if let Err(e) = time.validate() {
        let at = if !(time.t_final > 0.0) {
            Some(t.t_final.span())
        } else if time.nt == 0 {
            Some(t.nt.span())
        } else {
            s_at
        };
        return lines.reject(at, e);
    }

    let gen = |spec: &S<FieldGen>, stream: u64| {
        spec.get_ref().build(grid, seed, stream, &base_dir).or_else(|m| lines.err(Some(spec.span()), None, m))
    };
    let ri = &raw.initial;
    let init = InitialData {
        phi0: gen(&ri.phi0, streams::PHI0)?,
        a0: gen(&ri.a0, streams::A0)?,
        n0: gen(&ri.n0, streams::N0)?,
        sigma0: gen(&ri.sigma0, streams::SIGMA0)?,
    };
    check_initial(&lines, ri, &init, &model)?;

    let rc = &raw.control;
    let nt = time.nt;
    let control_gen = |spec: &S<FieldGen>, stream: u64| {
        spec.get_ref()
            .build_control(grid, nt, seed, stream, &base_dir)
            .or_else(|m| lines.err(Some(spec.span()), None, m))
    };
    let (u_max, u_max_at) = match &rc.u_max {
        None => (UpperBound::Scalar(1.0), None),
        Some(s) => match s.get_ref() {
            BoundGen::Scalar(v) => (UpperBound::Scalar(*v), Some(s.span())),
            BoundGen::Field(f) => (
                UpperBound::Field(
                    f.build(grid, seed, streams::U_MAX, &base_dir).or_else(|m| lines.err(Some(s.span()), None, m))?,
                ),
                Some(s.span()),
            ),
        },
    };
    if let Err(e) = u_max.validate(&grid) {
        return lines.reject(u_max_at, e);
    }
    let u0 = match &rc.u0 {
        Some(s) => control_gen(s, streams::U0)?,
        None => Control::zeros(grid, nt),
    };
    if let Err(e) = u0.check_admissible(&u_max) {
        return lines.reject(rc.u0.as_ref().map(|s| s.span()), e);
    }

    let (b1, b1_at) = value(&rc.b1, 0.0);
    let (b2, b2_at) = value(&rc.b2, 0.0);
    let (b3, b3_at) = value(&rc.b3, 1.0);
    let mut target_control = None;
    let (phi_q, phi_omega) = match &rc.target_control {
        Some(tc) => {
            if let Some(s) = rc.phi_q.as_ref().or(rc.phi_omega.as_ref()) {
                return lines.err(Some(s.span()), None, "targets cannot be given together with target_control");
            }
            let u_true = control_gen(tc, streams::TARGET_CONTROL)?;
            if let Err(e) = u_true.check_admissible(&u_max) {
                return lines.reject(Some(tc.span()), e);
            }
            let (traj, _) =
                solve_forward(&model, &init, &u_true, &time).or_else(|e| lines.reject(Some(tc.span()), e))?;
            target_control = Some(u_true);
            (traj.phi.clone(), traj.phi[nt].clone())
        }
        None => {
            let q = match &rc.phi_q {
                Some(s) => gen(s, streams::PHI_Q)?,
                None => chks_core::Field::zeros(grid),
            };
            let w = match &rc.phi_omega {
                Some(s) => gen(s, streams::PHI_OMEGA)?,
                None => chks_core::Field::zeros(grid),
            };
            (vec![q; nt + 1], w)
        }
    };
    let problem = ControlSpec { b1, b2, b3, phi_q, phi_omega, u_max };
    if let Err(e) = problem.validate() {
        let at = if !(b1 >= 0.0 && b1.is_finite()) {
            b1_at
        } else if !(b2 >= 0.0 && b2.is_finite()) {
            b2_at
        } else {
            b3_at
        };
        return lines.reject(at, e);
    }
    let adjoint = match rc.adjoint.as_ref().map(|a| *a.get_ref()) {
        Some(AdjointName::Continuous) => AdjointMode::Continuous,
        _ => AdjointMode::Discrete,
    };

    let optimize = OptimizeOptions { adjoint, ..build_optimize(&lines, &raw.optimize)? };
    let verify = build_verify(&lines, &raw.verify)?;

    Ok(RunConfig {
        path: path.to_path_buf(),
        seed,
        grid,
        model,
        time,
        init,
        u0,
        problem,
        adjoint,
        target_control,
        optimize,
        verify,
        raw,
        source: source.clone(),
    })
}

fn build_model(lines: &Lines, r: &RawModel) -> Result<ModelSpec, ConfigError> {
    let d = ModelSpec::default();
    let pot_name = r.potential.as_ref().map(|p| *p.get_ref()).unwrap_or(PotentialName::Regular);
    let (c1, _) = value(&r.c1, 1.0);
    let (c2, _) = value(&r.c2, 3.0);
    let (eps, _) = value(&r.eps_clamp, DEFAULT_EPS_CLAMP);
    let pot = match pot_name {
        PotentialName::Regular => PotentialSpec::regular(c1),
        PotentialName::Logarithmic => {
            PotentialSpec { kind: chks_core::potentials::PotentialKind::Logarithmic { c2, eps_clamp: eps } }
        }
    };
    let (h0, _) = value(&r.h0, 0.5);
    let (k, _) = value(&r.k, 2.0);
    let prolif = match r.proliferation.as_ref().map(|p| *p.get_ref()).unwrap_or(ProliferationName::Logistic) {
        ProliferationName::Zero => ProliferationSpec::Zero,
        ProliferationName::Constant => ProliferationSpec::Constant { h0 },
        ProliferationName::Logistic => ProliferationSpec::Logistic { h0, k },
    };
    let model = ModelSpec {
        m: value(&r.m, d.m).0,
        chi_phi: value(&r.chi_phi, d.chi_phi).0,
        chi_a: value(&r.chi_a, d.chi_a).0,
        c_phi: value(&r.c_phi, d.c_phi).0,
        c_n: value(&r.c_n, d.c_n).0,
        c_sigma: value(&r.c_sigma, d.c_sigma).0,
        c0: value(&r.c0, d.c0).0,
        pot,
        prolif,
    };
    check_model(lines, &model, Some(r))?;
    Ok(model)
}

/// Runs the model checks one key at a time so the error can point at the
/// offending line.
fn check_model(lines: &Lines, model: &ModelSpec, raw: Option<&RawModel>) -> Result<(), ConfigError> {
    let span = |pick: fn(&RawModel) -> &Option<S<f64>>| raw.and_then(|r| pick(r).as_ref().map(|s| s.span()));
    let single = |m: ModelSpec| m.validate();
    let base = ModelSpec::default();
    let checks: [(Option<Range<usize>>, ModelSpec); 7] = [
        (span(|r| &r.m), ModelSpec { m: model.m, ..base }),
        (span(|r| &r.chi_phi), ModelSpec { chi_phi: model.chi_phi, ..base }),
        (span(|r| &r.chi_a), ModelSpec { chi_a: model.chi_a, ..base }),
        (span(|r| &r.c_phi), ModelSpec { c_phi: model.c_phi, ..base }),
        (span(|r| &r.c_n), ModelSpec { c_n: model.c_n, ..base }),
        (span(|r| &r.c_sigma), ModelSpec { c_sigma: model.c_sigma, ..base }),
        (span(|r| &r.c0), ModelSpec { c0: model.c0, ..base }),
    ];
    for (at, m) in checks {
        if let Err(e) = single(m) {
            return lines.reject(at, e);
        }
    }
    if let Err(e) = model.pot.validate() {
        let at = raw.and_then(|r| r.c1.as_ref().or(r.c2.as_ref()).or(r.eps_clamp.as_ref()).map(|s| s.span()));
        return lines.reject(at.or_else(|| raw.and_then(|r| r.potential.as_ref().map(|s| s.span()))), e);
    }
    if let Err(e) = model.prolif.validate() {
        let at = raw.and_then(|r| r.h0.as_ref().or(r.k.as_ref()).map(|s| s.span()));
        return lines.reject(at.or_else(|| raw.and_then(|r| r.proliferation.as_ref().map(|s| s.span()))), e);
    }
    model.validate().or_else(|e| lines.reject(None, e))
}

fn check_initial(lines: &Lines, raw: &RawInitial, init: &InitialData, model: &ModelSpec) -> Result<(), ConfigError> {
    for (f, s) in [(&init.phi0, &raw.phi0), (&init.a0, &raw.a0), (&init.n0, &raw.n0), (&init.sigma0, &raw.sigma0)] {
        if !f.is_finite() {
            return lines.err(Some(s.span()), None, "generated field is not finite");
        }
    }
    if let Some(v) = init.phi0.data().iter().find(|v| !model.pot.in_domain(**v)) {
        return lines.err(
            Some(raw.phi0.span()),
            Some(Assumption::PhaseRange),
            format!("phi0 takes the value {v} outside the potential's domain"),
        );
    }
    if let Some(v) = init.a0.data().iter().find(|v| **v <= 0.0) {
        return lines.err(
            Some(raw.a0.span()),
            Some(Assumption::AngiogenesisPositive),
            format!("a0 must be positive, found {v}"),
        );
    }
    if let Some(v) = init.sigma0.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return lines.err(
            Some(raw.sigma0.span()),
            Some(Assumption::ConcentrationRange),
            format!("sigma0 must lie in [0, 1], found {v}"),
        );
    }
    if let Err(e) = derive_constants(model.m, &model.pot, &model.prolif, chks_core::grid::mean(&init.phi0)) {
        return lines.reject(Some(raw.phi0.span()), e);
    }
    init.validate(model).or_else(|e| lines.reject(None, e))
}

fn positive(
    lines: &Lines,
    v: &Option<S<f64>>,
    default: f64,
    name: &str,
    upper: Option<f64>,
) -> Result<f64, ConfigError> {
    let (x, at) = value(v, default);
    let ok = x.is_finite() && x > 0.0 && upper.is_none_or(|u| x < u);
    if !ok {
        return lines.err(
            at,
            None,
            format!("{name} must be positive{}, got {x}", upper.map(|u| format!(" and below {u}")).unwrap_or_default()),
        );
    }
    Ok(x)
}

fn build_optimize(lines: &Lines, r: &RawOptimize) -> Result<OptimizeOptions, ConfigError> {
    let d = OptimizeOptions::default();
    Ok(OptimizeOptions {
        tol_stat: positive(lines, &r.tol_stat, d.tol_stat, "tol_stat", None)?,
        max_iters: r.max_iters.unwrap_or(d.max_iters),
        armijo_c: positive(lines, &r.armijo_c, d.armijo_c, "armijo_c", Some(1.0))?,
        backtrack_factor: positive(lines, &r.backtrack_factor, d.backtrack_factor, "backtrack_factor", Some(1.0))?,
        max_backtracks: r.max_backtracks.unwrap_or(d.max_backtracks),
        initial_step: match &r.initial_step {
            Some(_) => Some(positive(lines, &r.initial_step, 1.0, "initial_step", None)?),
            None => None,
        },
        adjoint: d.adjoint,
    })
}

fn build_verify(lines: &Lines, r: &RawVerify) -> Result<VerifySettings, ConfigError> {
    let d = VerifySettings::default();
    let taylor_eps = match &r.taylor_eps {
        Some(s) => {
            let v = s.get_ref().clone();
            if v.len() < 2 || v.iter().any(|e| !(*e > 0.0)) {
                return lines.err(Some(s.span()), None, "taylor_eps needs at least two positive step sizes");
            }
            v
        }
        None => d.taylor_eps,
    };
    Ok(VerifySettings {
        directions: r.directions.unwrap_or(d.directions),
        fd_eps: positive(lines, &r.fd_eps, d.fd_eps, "fd_eps", None)?,
        taylor_eps,
        lipschitz_pairs: r.lipschitz_pairs.unwrap_or(d.lipschitz_pairs),
        matrix_seeds: r.matrix_seeds.unwrap_or(d.matrix_seeds),
        log_c2: positive(lines, &r.log_c2, d.log_c2, "log_c2", None)?,
    })
}
