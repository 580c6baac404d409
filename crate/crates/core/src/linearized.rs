//! Derivative of the discrete control-to-state map.
//!
//! The linearized step differentiates the forward step exactly, including
//! its time levels. With the upwind flux the donor cells are frozen at the
//! choice made by the reference trajectory, which is the derivative wherever
//! no face gradient of `sigma` vanishes.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{div, face_values, gradient_faces, lap, Field, ReactionDiffusion};
use crate::model::ModelSpec;
use crate::state::{Control, StateTrajectory};

/// Directional derivatives `(psi, eta, alpha, xi, omega)` of
/// `(phi, mu, a, n, sigma)`, stored at levels `0..=nt`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedTrajectory {
    pub psi: Vec<Field>,
    pub eta: Vec<Field>,
    pub alpha: Vec<Field>,
    pub xi: Vec<Field>,
    pub omega: Vec<Field>,
}

pub fn solve_linearized(spec: &ModelSpec, traj: &StateTrajectory, h: &Control) -> Result<LinearizedTrajectory> {
    let grid = traj.grid;
    let nt = traj.nt();
    if *h.grid() != grid || h.nt() != nt {
        return Err(Error::ShapeMismatch { context: "solve_linearized: direction" });
    }
    if !h.is_finite() {
        return Err(Error::NonFinite { context: "linearized direction" });
    }
    let rd = ReactionDiffusion::new(&grid);
    let (tau, s) = (traj.tau, traj.s_stab);
    let inv_tau = 1.0 / tau;
    let pot = &spec.pot;

    let zero = Field::zeros(grid);
    let mut out = LinearizedTrajectory {
        psi: Vec::with_capacity(nt + 1),
        eta: Vec::with_capacity(nt + 1),
        alpha: Vec::with_capacity(nt + 1),
        xi: Vec::with_capacity(nt + 1),
        omega: Vec::with_capacity(nt + 1),
    };
    for v in [&mut out.psi, &mut out.eta, &mut out.alpha, &mut out.xi, &mut out.omega] {
        v.push(zero.clone());
    }

    for k in 0..nt {
        let (phi_k, a_k, sigma_next) = (&traj.phi[k], &traj.a[k], &traj.sigma[k + 1]);
        let (psi, alpha, xi, omega) = (&out.psi[k], &out.alpha[k], &out.xi[k], &out.omega[k]);

        let mut rhs_psi = psi.zip_map(phi_k, |p, f| p * inv_tau + spec.prolif.h_prime(f) * p);
        rhs_psi.axpy(-spec.chi_phi, &lap(xi));
        let rhs_eta = psi.zip_map(phi_k, |p, f| (s - pot.f_second(f)) * p);
        let (psi1, eta1) = rd.ch_block(&rhs_psi, &rhs_eta, tau, s, spec.m).map_err(|e| e.at_step(k))?;

        let mut rhs_xi = xi.scaled(inv_tau + spec.c_n);
        rhs_xi.axpy(spec.chi_phi + spec.c_phi, &psi1);
        rhs_xi.axpy(spec.c_sigma, omega);
        let xi1 = rd.helmholtz(&rhs_xi, inv_tau, 1.0).map_err(|e| e.at_step(k))?;

        let mut rhs_omega = omega.scaled(inv_tau);
        rhs_omega.axpy(1.0, &alpha.zip_map(sigma_next, |al, sg| (spec.chi_a - sg) * al));
        let reaction = a_k.map(|a| 1.0 + a);
        let (omega1, _) = rd.variable(&rhs_omega, inv_tau, &reaction, 1.0).map_err(|e| e.at_step(k))?;

        let grad_sigma = gradient_faces(sigma_next);
        let mut dflux = face_values(alpha, &grad_sigma, traj.flux).mul(&grad_sigma);
        dflux.axpy(1.0, &face_values(a_k, &grad_sigma, traj.flux).mul(&gradient_faces(&omega1)));
        let mut rhs_alpha = alpha.zip_map(a_k, |al, a| (inv_tau + 1.0 - 2.0 * a) * al);
        rhs_alpha.axpy(-spec.chi_a, &div(&dflux));
        rhs_alpha.axpy(1.0, h.slice(k));
        let alpha1 = rd.helmholtz(&rhs_alpha, inv_tau, 1.0).map_err(|e| e.at_step(k))?;

        out.psi.push(psi1);
        out.eta.push(eta1);
        out.alpha.push(alpha1);
        out.xi.push(xi1);
        out.omega.push(omega1);
    }
    Ok(out)
}
