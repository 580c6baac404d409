//! Backward adjoint sweep and the duality identity.
//!
//! The sweep walks the forward sub-steps in reverse, `a -> sigma -> n ->
//! (phi, mu)`, solving with the transposed operator of each and scattering
//! the result into the adjoint sources of the earlier unknowns. Adjoint
//! variables are reported in the scaling of the continuous system, so
//! `p3` is the `L2(Q)` gradient density of the state part of the cost.
//!
//! Two coefficient choices are offered. [`AdjointMode::Discrete`] freezes
//! every coefficient at the level the forward step used, which makes the
//! sweep the exact transpose of the linearized scheme. [`AdjointMode::Continuous`]
//! discretizes the transport term `chi_a ∇sigma · ∇p3` of the continuous
//! adjoint directly: `sigma` is taken at the adjoint's own level `t_k` and the
//! face products are always averaged back to centers, whatever flux the
//! forward run used. The reaction couplings keep the forward's levels. Its
//! duality gap is `O(tau)`.

use alloc::vec::Vec;

use crate::control::ControlSpec;
use crate::error::{Error, Result};
use crate::grid::{
    div, face_values, face_values_transpose, gradient_faces, inner, lap, Field, FluxScheme, ReactionDiffusion,
};
use crate::linearized::LinearizedTrajectory;
use crate::model::ModelSpec;
use crate::state::{Control, StateTrajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdjointMode {
    /// Exact transpose of the discrete forward scheme.
    #[default]
    Discrete,
    /// Discretized continuous adjoint with the transport coefficient at `t_k`.
    Continuous,
}

/// Adjoint quintuple at levels `0..=nt`. Level `k < nt` pairs with the
/// control interval `[t_k, t_{k+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointTrajectory {
    pub mode: AdjointMode,
    pub tau: f64,
    pub p1: Vec<Field>,
    pub p2: Vec<Field>,
    pub p3: Vec<Field>,
    pub p4: Vec<Field>,
    pub p5: Vec<Field>,
}

impl AdjointTrajectory {
    pub fn nt(&self) -> usize {
        self.p1.len() - 1
    }
}

/// Coefficients of the adjoint system along a base trajectory.
///
/// Per-level fields are indexed like the base trajectory; `f35` has one entry
/// per step, taken at `t_{k+1}` where the forward step reads `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointCoefficients {
    /// `b1 (phi - phi_Q)`.
    pub f10: Vec<Field>,
    /// `m - h'(phi)`.
    pub f11: Vec<Field>,
    /// `F''(phi)`.
    pub f12: Vec<Field>,
    /// `-chi_phi - c_phi`.
    pub f14: f64,
    pub f33: f64,
    /// `sigma - chi_a`, one entry per step.
    pub f35: Vec<Field>,
    /// `-c_sigma`.
    pub f54: f64,
    pub f55: f64,
}

impl AdjointCoefficients {
    pub fn new(spec: &ModelSpec, base: &StateTrajectory, cs: &ControlSpec) -> Self {
        let nt = base.nt();
        AdjointCoefficients {
            f10: (0..=nt).map(|k| base.phi[k].zip_map(&cs.phi_q[k], |p, q| cs.b1 * (p - q))).collect(),
            f11: base.phi.iter().map(|p| p.map(|v| spec.m - spec.prolif.h_prime(v))).collect(),
            f12: base.phi.iter().map(|p| p.map(|v| spec.pot.f_second(v))).collect(),
            f14: -spec.chi_phi - spec.c_phi,
            f33: -1.0,
            f35: (1..=nt).map(|k| base.sigma[k].map(|s| s - spec.chi_a)).collect(),
            f54: -spec.c_sigma,
            f55: 1.0,
        }
    }
}

/// Level of `sigma` in the transport term of step `k`.
fn transport_level(base: &StateTrajectory, k: usize, mode: AdjointMode) -> &Field {
    match mode {
        AdjointMode::Discrete => &base.sigma[k + 1],
        AdjointMode::Continuous => &base.sigma[k],
    }
}

/// Solves the adjoint system backward from `T` along `base`.
pub fn solve_adjoint(
    spec: &ModelSpec,
    base: &StateTrajectory,
    cs: &ControlSpec,
    mode: AdjointMode,
) -> Result<AdjointTrajectory> {
    cs.check_against(base)?;
    let grid = base.grid;
    let nt = base.nt();
    let rd = ReactionDiffusion::new(&grid);
    let (tau, s) = (base.tau, base.s_stab);
    let inv_tau = 1.0 / tau;
    let coef = AdjointCoefficients::new(spec, base, cs);
    let scheme = match mode {
        AdjointMode::Discrete => base.flux,
        AdjointMode::Continuous => FluxScheme::Centered,
    };

    let zero = Field::zeros(grid);
    let mut p = AdjointTrajectory {
        mode,
        tau,
        p1: alloc::vec![zero.clone(); nt + 1],
        p2: alloc::vec![zero.clone(); nt + 1],
        p3: alloc::vec![zero.clone(); nt + 1],
        p4: alloc::vec![zero.clone(); nt + 1],
        p5: alloc::vec![zero.clone(); nt + 1],
    };
    let final_p1 = base.phi[nt].zip_map(&cs.phi_omega, |v, w| cs.b2 * (v - w));
    p.p2[nt] = lap(&final_p1).scaled(-1.0);
    p.p1[nt] = final_p1.clone();

    // sensitivities of the cost with respect to each unknown at the current level
    let mut bar_phi = final_p1;
    bar_phi.axpy(tau, &coef.f10[nt]);
    let mut bar_n = zero.clone();
    let mut bar_sigma = zero.clone();
    let mut bar_a = zero;

    for k in (0..nt).rev() {
        let a_k = &base.a[k];
        let grad_sigma = gradient_faces(transport_level(base, k, mode));

        let rho_a = rd.helmholtz(&bar_a, inv_tau, 1.0).map_err(|e| e.at_step(k))?;
        let grad_rho = gradient_faces(&rho_a);
        let mut next_bar_a = rho_a.zip_map(a_k, |r, a| (inv_tau - coef.f33 - 2.0 * a) * r);
        next_bar_a.axpy(spec.chi_a, &face_values_transpose(&grad_rho.mul(&grad_sigma), &grad_sigma, scheme));
        let mut sigma_src = bar_sigma;
        sigma_src.axpy(-spec.chi_a, &div(&face_values(a_k, &grad_sigma, scheme).mul(&grad_rho)));

        let reaction = a_k.map(|a| coef.f55 + a);
        let (rho_sigma, _) = rd.variable(&sigma_src, inv_tau, &reaction, 1.0).map_err(|e| e.at_step(k))?;
        next_bar_a.axpy(1.0, &rho_sigma.zip_map(&coef.f35[k], |r, c| -c * r));
        let mut next_bar_sigma = rho_sigma.scaled(inv_tau);

        let rho_n = rd.helmholtz(&bar_n, inv_tau, 1.0).map_err(|e| e.at_step(k))?;
        let mut next_bar_n = rho_n.scaled(inv_tau + spec.c_n);
        next_bar_sigma.axpy(-coef.f54, &rho_n);
        bar_phi.axpy(-coef.f14, &rho_n);

        let (rho_phi, _) = rd.ch_block(&bar_phi, &Field::zeros(grid), tau, s, spec.m).map_err(|e| e.at_step(k))?;
        let lap_rho = lap(&rho_phi);
        next_bar_n.axpy(-spec.chi_phi, &lap_rho);
        let mut next_bar_phi = Field::zeros(grid);
        for (i, out) in next_bar_phi.data_mut().iter_mut().enumerate() {
            let r = rho_phi.data()[i];
            let hp = spec.m - coef.f11[k].data()[i];
            *out = r * inv_tau + hp * r + (coef.f12[k].data()[i] - s) * lap_rho.data()[i];
        }
        if k >= 1 {
            next_bar_phi.axpy(tau, &coef.f10[k]);
        }

        p.p1[k] = rho_phi.scaled(inv_tau);
        p.p2[k] = lap(&p.p1[k]).scaled(-1.0);
        p.p3[k] = rho_a.scaled(inv_tau);
        p.p4[k] = rho_n.scaled(inv_tau);
        p.p5[k] = rho_sigma.scaled(inv_tau);

        bar_phi = next_bar_phi;
        bar_n = next_bar_n;
        bar_sigma = next_bar_sigma;
        bar_a = next_bar_a;
        if ![&bar_phi, &bar_n, &bar_sigma, &bar_a].iter().all(|f| f.is_finite()) {
            return Err(Error::NonFinite { context: "adjoint sweep" }.at_step(k));
        }
    }
    Ok(p)
}

/// Relative mismatch `|L - R| / (|L| + |R| + 1e-30)` between
/// `L = ∫_Q h p3` and `R = b1 ∫_Q (phi - phi_Q) psi + b2 ∫ (phi(T) - phi_Omega) psi(T)`.
pub fn duality_residual(
    base: &StateTrajectory,
    adj: &AdjointTrajectory,
    h: &Control,
    lin: &LinearizedTrajectory,
    cs: &ControlSpec,
) -> Result<f64> {
    let nt = base.nt();
    if adj.nt() != nt || lin.psi.len() != nt + 1 || h.nt() != nt || *h.grid() != base.grid {
        return Err(Error::ShapeMismatch { context: "duality_residual" });
    }
    cs.check_against(base)?;
    let tau = base.tau;
    let lhs: f64 = tau * (0..nt).map(|k| inner(h.slice(k), &adj.p3[k])).sum::<f64>();
    let running: f64 = (1..=nt).map(|k| inner(&(&base.phi[k] - &cs.phi_q[k]), &lin.psi[k])).sum();
    let rhs = cs.b1 * tau * running + cs.b2 * inner(&(&base.phi[nt] - &cs.phi_omega), &lin.psi[nt]);
    Ok((lhs - rhs).abs() / (lhs.abs() + rhs.abs() + 1e-30))
}
