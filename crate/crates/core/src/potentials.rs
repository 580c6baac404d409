//! Double-well potentials and the proliferation function.
//!
//! Each potential is split as `F = F1 + F2` with `F1` convex and `F2'`
//! Lipschitz. The regular quartic uses
//! `F1 = (c1/4)(r^4 - 2r^3 + 3r^2/2)`, `F2 = -(c1/8) r^2`, which makes
//! `F1'' = (3 c1 / 4)(2r - 1)^2` a perfect square. The logarithmic potential
//! uses the entropy part as `F1` and `c2 r (1 - r)` as `F2`.
//!
//! The logarithmic `F1` is evaluated on `[eps, 1 - eps]` and continued by its
//! second-order Taylor polynomial outside, so every derivative up to the
//! second stays continuous and finite. Evaluations outside the interval can
//! be tallied with a [`ClampTally`].

use core::cell::Cell;

use alloc::format;

use crate::error::{Assumption, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialKind {
    /// `(c1/4) r^2 (r - 1)^2` on the whole real line.
    Regular { c1: f64 },
    /// `r ln r + (1 - r) ln(1 - r) + c2 r (1 - r)` on `(0, 1)`.
    Logarithmic { c2: f64, eps_clamp: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
}

/// Counts evaluations that fell outside the clamp interval.
#[derive(Debug, Default)]
pub struct ClampTally(Cell<u64>);

impl ClampTally {
    pub fn new() -> Self {
        ClampTally(Cell::new(0))
    }

    pub fn record(&self, n: u64) {
        self.0.set(self.0.get() + n);
    }

    pub fn get(&self) -> u64 {
        self.0.get()
    }
}

pub const DEFAULT_EPS_CLAMP: f64 = 1e-8;

impl PotentialSpec {
    pub fn regular(c1: f64) -> Self {
        PotentialSpec { kind: PotentialKind::Regular { c1 } }
    }

    pub fn logarithmic(c2: f64) -> Self {
        PotentialSpec { kind: PotentialKind::Logarithmic { c2, eps_clamp: DEFAULT_EPS_CLAMP } }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PotentialKind::Regular { c1 } if c1.is_finite() && c1 > 0.0 => Ok(()),
            PotentialKind::Regular { c1 } => {
                Err(Error::inadmissible(Assumption::Potential, format!("c1 must be positive, got {c1}")))
            }
            PotentialKind::Logarithmic { c2, eps_clamp } => {
                if !(c2.is_finite() && c2 > 0.0) {
                    return Err(Error::inadmissible(Assumption::Potential, format!("c2 must be positive, got {c2}")));
                }
                if !(eps_clamp > 0.0 && eps_clamp < 0.25) {
                    return Err(Error::inadmissible(
                        Assumption::Potential,
                        format!("eps_clamp must lie in (0, 1/4), got {eps_clamp}"),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn is_bounded_domain(&self) -> bool {
        matches!(self.kind, PotentialKind::Logarithmic { .. })
    }

    /// Whether `r` lies in the (open) domain of the potential.
    pub fn in_domain(&self, r: f64) -> bool {
        match self.kind {
            PotentialKind::Regular { .. } => r.is_finite(),
            PotentialKind::Logarithmic { .. } => r > 0.0 && r < 1.0,
        }
    }

    /// Whether evaluation at `r` uses the quadratic continuation.
    pub fn is_clamped(&self, r: f64) -> bool {
        match self.kind {
            PotentialKind::Regular { .. } => false,
            PotentialKind::Logarithmic { eps_clamp, .. } => r < eps_clamp || r > 1.0 - eps_clamp,
        }
    }

    /// Default linear stabilization for the semi-implicit step.
    pub fn default_stabilization(&self) -> f64 {
        match self.kind {
            PotentialKind::Regular { c1 } => 0.5 * c1,
            PotentialKind::Logarithmic { .. } => 2.0,
        }
    }

    /// The root of `F1'` in the domain.
    pub fn r0(&self) -> f64 {
        match self.kind {
            // F1' = (c1/4) r (4r^2 - 6r + 3) and the quadratic has no real root
            PotentialKind::Regular { .. } => 0.0,
            PotentialKind::Logarithmic { .. } => 0.5,
        }
    }

    /// Value and first three derivatives of the logarithmic convex part,
    /// with the quadratic continuation outside `[eps, 1 - eps]`.
    fn log_f1(r: f64, eps: f64) -> [f64; 4] {
        let exact = |x: f64| {
            let l1 = libm::log(x);
            let l2 = libm::log(1.0 - x);
            let q = x * (1.0 - x);
            [x * l1 + (1.0 - x) * l2, l1 - l2, 1.0 / q, (2.0 * x - 1.0) / (q * q)]
        };
        let anchor = if r < eps {
            eps
        } else if r > 1.0 - eps {
            1.0 - eps
        } else {
            return exact(r);
        };
        let [f0, f1, f2, _] = exact(anchor);
        let d = r - anchor;
        [f0 + f1 * d + 0.5 * f2 * d * d, f1 + f2 * d, f2, 0.0]
    }

    pub fn f_value(&self, r: f64) -> f64 {
        self.f1(r) + self.f2(r)
    }

    pub fn f1(&self, r: f64) -> f64 {
        match self.kind {
            PotentialKind::Regular { c1 } => 0.25 * c1 * r * r * (r * r - 2.0 * r + 1.5),
            PotentialKind::Logarithmic { eps_clamp, .. } => Self::log_f1(r, eps_clamp)[0],
        }
    }

    pub fn f2(&self, r: f64) -> f64 {
        match self.kind {
            PotentialKind::Regular { c1 } => -0.125 * c1 * r * r,
            PotentialKind::Logarithmic { c2, .. } => c2 * r * (1.0 - r),
        }
    }

    pub fn f1_prime(&self, r: f64) -> f64 {
        match self.kind {
            PotentialKind::Regular { c1 } => 0.25 * c1 * r * (4.0 * r * r - 6.0 * r + 3.0),
            PotentialKind::Logarithmic { eps_clamp, .. } => Self::log_f1(r, eps_clamp)[1],
        }
    }

    pub fn f2_prime(&self, r: f64) -> f64 {
        match self.kind {
            PotentialKind::Regular { c1 } => -0.25 * c1 * r,
            PotentialKind::Logarithmic { c2, .. } => c2 * (1.0 - 2.0 * r),
        }
    }

    pub fn f_prime(&self, r: f64) -> f64 {
        self.f1_prime(r) + self.f2_prime(r)
    }

    pub fn f1_second(&self, r: f64) -> f64 {
        match self.kind {
            PotentialKind::Regular { c1 } => {
                let t = 2.0 * r - 1.0;
                0.75 * c1 * t * t
            }
            PotentialKind::Logarithmic { eps_clamp, .. } => Self::log_f1(r, eps_clamp)[2],
        }
    }

    pub fn f2_second(&self) -> f64 {
        match self.kind {
            PotentialKind::Regular { c1 } => -0.25 * c1,
            PotentialKind::Logarithmic { c2, .. } => -2.0 * c2,
        }
    }

    pub fn f_second(&self, r: f64) -> f64 {
        self.f1_second(r) + self.f2_second()
    }

    pub fn f_third(&self, r: f64) -> f64 {
        match self.kind {
            PotentialKind::Regular { c1 } => 3.0 * c1 * (2.0 * r - 1.0),
            PotentialKind::Logarithmic { eps_clamp, .. } => Self::log_f1(r, eps_clamp)[3],
        }
    }
}

/// Bounded proliferation function `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProliferationSpec {
    Zero,
    Constant {
        h0: f64,
    },
    /// `h0 / (1 + exp(-k r))`
    Logistic {
        h0: f64,
        k: f64,
    },
}

impl ProliferationSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ProliferationSpec::Zero => true,
            ProliferationSpec::Constant { h0 } => h0.is_finite(),
            ProliferationSpec::Logistic { h0, k } => h0.is_finite() && k.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::inadmissible(Assumption::Proliferation, "proliferation parameters must be finite"))
        }
    }

    fn logistic(x: f64) -> f64 {
        if x >= 0.0 {
            1.0 / (1.0 + libm::exp(-x))
        } else {
            let e = libm::exp(x);
            e / (1.0 + e)
        }
    }

    pub fn h_value(&self, r: f64) -> f64 {
        match *self {
            ProliferationSpec::Zero => 0.0,
            ProliferationSpec::Constant { h0 } => h0,
            ProliferationSpec::Logistic { h0, k } => h0 * Self::logistic(k * r),
        }
    }

    pub fn h_prime(&self, r: f64) -> f64 {
        match *self {
            ProliferationSpec::Logistic { h0, k } => {
                let s = Self::logistic(k * r);
                h0 * k * s * (1.0 - s)
            }
            _ => 0.0,
        }
    }

    pub fn h_second(&self, r: f64) -> f64 {
        match *self {
            ProliferationSpec::Logistic { h0, k } => {
                let s = Self::logistic(k * r);
                h0 * k * k * s * (1.0 - s) * (1.0 - 2.0 * s)
            }
            _ => 0.0,
        }
    }

    /// Closed-form `(sup |h|, sup |h'|, sup |h''|)` over the real line.
    pub fn bounds(&self) -> (f64, f64, f64) {
        match *self {
            ProliferationSpec::Zero => (0.0, 0.0, 0.0),
            ProliferationSpec::Constant { h0 } => (h0.abs(), 0.0, 0.0),
            ProliferationSpec::Logistic { h0, k: 0.0 } => (0.5 * h0.abs(), 0.0, 0.0),
            ProliferationSpec::Logistic { h0, k } => {
                // max |s(1-s)(1-2s)| over s in (0,1) is sqrt(3)/18
                (h0.abs(), 0.25 * (h0 * k).abs(), (h0 * k * k).abs() * libm::sqrt(3.0) / 18.0)
            }
        }
    }

    /// `sup_r |h(r) - c|`, taken over the closure of the range of `h`.
    pub fn sup_deviation(&self, c: f64) -> f64 {
        match *self {
            ProliferationSpec::Zero => c.abs(),
            ProliferationSpec::Constant { h0 } => (h0 - c).abs(),
            ProliferationSpec::Logistic { h0, k: 0.0 } => (0.5 * h0 - c).abs(),
            // monotone with range between 0 and h0
            ProliferationSpec::Logistic { h0, .. } => c.abs().max((h0 - c).abs()),
        }
    }
}

/// Constants attached to the double well and the mean-value bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellConstants {
    pub r0: f64,
    /// `(1/m) sup_r |h(r) - m r0|`
    pub r_bound: f64,
    /// `r0 - (mean0 - r0)^- - R`
    pub lower_endpoint: f64,
    /// `r0 + (mean0 - r0)^+ + R`
    pub upper_endpoint: f64,
    /// Whether both endpoints lie in the potential's domain.
    pub admissible: bool,
}

/// Computes `r0`, `R` and the two endpoints that bound the mean of the phase
/// field, and checks them against the potential's domain.
///
/// Returns an error for a bounded-domain potential whose endpoints leave
/// `(0, 1)`; for the regular potential the check always passes.
pub fn derive_constants(
    m: f64,
    pot: &PotentialSpec,
    prolif: &ProliferationSpec,
    phi0_mean: f64,
) -> Result<WellConstants> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::inadmissible(Assumption::Coefficients, format!("m must be positive, got {m}")));
    }
    let r0 = pot.r0();
    let r_bound = prolif.sup_deviation(m * r0) / m;
    let d = phi0_mean - r0;
    let lower_endpoint = r0 - (-d).max(0.0) - r_bound;
    let upper_endpoint = r0 + d.max(0.0) + r_bound;
    let admissible = pot.in_domain(lower_endpoint) && pot.in_domain(upper_endpoint);
    let wc = WellConstants { r0, r_bound, lower_endpoint, upper_endpoint, admissible };
    if !admissible {
        return Err(Error::inadmissible(
            Assumption::MeanInterior,
            format!(
                "mean-value endpoints [{lower_endpoint}, {upper_endpoint}] (r0 = {r0}, R = {r_bound}) \
                 are not inside the potential's domain"
            ),
        ));
    }
    Ok(wc)
}
