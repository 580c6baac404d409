use alloc::format;

use crate::error::{Assumption, Error, Result};
use crate::potentials::{PotentialSpec, ProliferationSpec};

/// Parameters of the state system.
///
/// The nutrient source is `c_phi phi + c_n n + c_sigma sigma + c0`; the
/// concentration source is `(1 - sigma) + a (chi_a - sigma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    /// Mass relaxation rate.
    pub m: f64,
    pub chi_phi: f64,
    pub chi_a: f64,
    pub c_phi: f64,
    pub c_n: f64,
    pub c_sigma: f64,
    pub c0: f64,
    pub pot: PotentialSpec,
    pub prolif: ProliferationSpec,
}

impl ModelSpec {
    /// Checks the structural requirements on the coefficients. Solvers do not
    /// call this themselves, so degenerate settings (for example `m = 0` for
    /// a pure Cahn–Hilliard run) remain available to tests.
    pub fn validate(&self) -> Result<()> {
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(Error::inadmissible(Assumption::Coefficients, format!("m must be positive, got {}", self.m)));
        }
        for (name, chi) in [("chi_phi", self.chi_phi), ("chi_a", self.chi_a)] {
            if !(chi > 0.0 && chi < 1.0) {
                return Err(Error::inadmissible(
                    Assumption::Coefficients,
                    format!("{name} must lie in (0, 1), got {chi}"),
                ));
            }
        }
        for (name, c) in [("c_phi", self.c_phi), ("c_n", self.c_n), ("c_sigma", self.c_sigma), ("c0", self.c0)] {
            if !c.is_finite() {
                return Err(Error::inadmissible(Assumption::Coefficients, format!("{name} must be finite, got {c}")));
            }
        }
        self.pot.validate()?;
        self.prolif.validate()
    }
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            m: 1.0,
            chi_phi: 0.2,
            chi_a: 0.3,
            c_phi: 0.1,
            c_n: -0.5,
            c_sigma: 0.2,
            c0: 0.0,
            pot: PotentialSpec::regular(1.0),
            prolif: ProliferationSpec::Logistic { h0: 0.5, k: 2.0 },
        }
    }
}
