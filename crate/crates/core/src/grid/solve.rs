use alloc::format;
use alloc::vec::Vec;

use super::dct::CosineBasis;
use super::{inner, lap, Field, Grid};
use crate::error::{Error, Result};

/// Relative residual targeted by the conjugate-gradient solves.
pub const CG_TOL: f64 = 1e-12;

/// Cached cosine basis with the direct solves built on it.
#[derive(Debug, Clone)]
pub struct ReactionDiffusion {
    basis: CosineBasis,
    eig: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

impl ReactionDiffusion {
    pub fn new(grid: &Grid) -> Self {
        let basis = CosineBasis::new(grid);
        let eig = basis.eigenvalues();
        ReactionDiffusion { basis, eig }
    }

    pub fn grid(&self) -> &Grid {
        self.basis.grid()
    }

    /// Solves `(alpha I - beta Δ) x = b` exactly in cosine space.
    pub fn helmholtz(&self, b: &Field, alpha: f64, beta: f64) -> Result<Field> {
        if !(alpha > 0.0) || !(beta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "helmholtz needs alpha > 0 and beta >= 0, got alpha={alpha}, beta={beta}"
            )));
        }
        b.check_finite("helmholtz_solve")?;
        let mut coeffs = self.basis.forward(b.data());
        for (c, &lam) in coeffs.iter_mut().zip(&self.eig) {
            *c /= alpha - beta * lam;
        }
        Field::from_vec(*b.grid(), self.basis.inverse(&coeffs))
    }

    /// Solves the coupled Cahn–Hilliard step
    ///
    /// ```text
    /// (1/tau + decay) phi - Δ mu        = rhs_phi
    /// -Δ phi + s_stab phi - mu          = rhs_mu
    /// ```
    ///
    /// mode by mode. `decay` carries the implicit linear mass-relaxation term.
    pub fn ch_block(
        &self,
        rhs_phi: &Field,
        rhs_mu: &Field,
        tau: f64,
        s_stab: f64,
        decay: f64,
    ) -> Result<(Field, Field)> {
        if !(tau > 0.0) || !(s_stab >= 0.0) || !(decay >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ch block needs tau > 0, s_stab >= 0, decay >= 0 (tau={tau}, s_stab={s_stab}, decay={decay})"
            )));
        }
        rhs_phi.check_finite("ch_block_solve")?;
        rhs_mu.check_finite("ch_block_solve")?;
        let c = 1.0 / tau + decay;
        let rp = self.basis.forward(rhs_phi.data());
        let rm = self.basis.forward(rhs_mu.data());
        let mut phi = Vec::with_capacity(rp.len());
        let mut mu = Vec::with_capacity(rp.len());
        for ((&lam, &fp), &fm) in self.eig.iter().zip(&rp).zip(&rm) {
            // [[c, -lam], [s - lam, -1]]
            let det = -c + lam * s_stab - lam * lam;
            if det.abs() < 1e-14 {
                return Err(Error::SingularMode { determinant: det });
            }
            phi.push((-fp + lam * fm) / det);
            mu.push((c * fm - (s_stab - lam) * fp) / det);
        }
        let grid = *rhs_phi.grid();
        Ok((Field::from_vec(grid, self.basis.inverse(&phi))?, Field::from_vec(grid, self.basis.inverse(&mu))?))
    }

    /// Solves `(alpha + c(x)) x - beta Δ x = b` by conjugate gradients,
    /// preconditioned with the constant-coefficient Helmholtz inverse at the
    /// mean of `c`. Requires `alpha + c > 0` pointwise.
    pub fn variable(&self, b: &Field, alpha: f64, coeff: &Field, beta: f64) -> Result<(Field, CgReport)> {
        b.check_finite("variable-coefficient solve")?;
        coeff.check_finite("variable-coefficient solve")?;
        let cmin = coeff.min();
        if !(alpha + cmin > 0.0) || !(beta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "operator not positive definite: alpha + min(c) = {}",
                alpha + cmin
            )));
        }
        let shift = alpha + super::mean(coeff);
        let apply = |x: &Field| -> Field {
            let mut y = lap(x);
            y.scale(-beta);
            for ((yv, &xv), &cv) in y.data_mut().iter_mut().zip(x.data()).zip(coeff.data()) {
                *yv += (alpha + cv) * xv;
            }
            y
        };
        let precond = |r: &Field| self.helmholtz(r, shift, beta);

        let bnorm = libm::sqrt(inner(b, b));
        let grid = *b.grid();
        if bnorm == 0.0 {
            return Ok((Field::zeros(grid), CgReport { iterations: 0, relative_residual: 0.0 }));
        }
        let mut x = precond(b)?;
        let mut r = b - &apply(&x);
        let mut z = precond(&r)?;
        let mut p = z.clone();
        let mut rz = inner(&r, &z);
        let max_iter = 10 * grid.len();
        let mut rel = libm::sqrt(inner(&r, &r)) / bnorm;
        let mut it = 0;
        while rel > CG_TOL {
            if it >= max_iter {
                return Err(Error::SolverFailure {
                    step: 0,
                    detail: format!("CG stalled at relative residual {rel:e} after {it} iterations"),
                });
            }
            let ap = apply(&p);
            let pap = inner(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::SolverFailure { step: 0, detail: format!("CG breakdown (p.Ap = {pap:e})") });
            }
            let alpha_k = rz / pap;
            x.axpy(alpha_k, &p);
            r.axpy(-alpha_k, &ap);
            rel = libm::sqrt(inner(&r, &r)) / bnorm;
            it += 1;
            if rel <= CG_TOL {
                break;
            }
            z = precond(&r)?;
            let rz_new = inner(&r, &z);
            let beta_k = rz_new / rz;
            rz = rz_new;
            for (pv, &zv) in p.data_mut().iter_mut().zip(z.data()) {
                *pv = zv + beta_k * *pv;
            }
        }
        Ok((x, CgReport { iterations: it, relative_residual: rel }))
    }
}

/// Solves `(alpha I - beta Δ) x = b` with homogeneous Neumann conditions.
pub fn helmholtz_solve(b: &Field, alpha: f64, beta: f64) -> Result<Field> {
    ReactionDiffusion::new(b.grid()).helmholtz(b, alpha, beta)
}

/// Solves `{ phi/tau - Δ mu = rhs_phi ; -Δ phi + s_stab phi - mu = rhs_mu }`.
pub fn ch_block_solve(rhs_phi: &Field, rhs_mu: &Field, tau: f64, s_stab: f64) -> Result<(Field, Field)> {
    rhs_phi.check_same_grid(rhs_mu, "ch_block_solve")?;
    ReactionDiffusion::new(rhs_phi.grid()).ch_block(rhs_phi, rhs_mu, tau, s_stab, 0.0)
}

/// Solves `(alpha + c(x)) x - beta Δ x = b` by preconditioned CG.
pub fn cg_solve(b: &Field, alpha: f64, coeff: &Field, beta: f64) -> Result<(Field, CgReport)> {
    b.check_same_grid(coeff, "cg_solve")?;
    ReactionDiffusion::new(b.grid()).variable(b, alpha, coeff, beta)
}
