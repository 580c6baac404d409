use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Structural assumption on the model data that a configuration must satisfy.
///
/// Every rejection names exactly one of these so that callers can report
/// which modelling requirement was violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Assumption {
    /// `m > 0`, `0 < chi_phi < 1`, `0 < chi_a < 1`, finite source coefficients.
    Coefficients,
    /// The proliferation function and its first two derivatives are bounded.
    Proliferation,
    /// Potential coefficients and the log-domain clamp are admissible.
    Potential,
    /// The initial phase field takes values in the potential's domain.
    PhaseRange,
    /// The mean-value endpoints `r0 ∓ (mean - r0)^∓ ∓ R` lie in the domain.
    MeanInterior,
    /// The initial angiogenetic fraction is strictly positive.
    AngiogenesisPositive,
    /// The initial concentration lies in `[0, 1]`.
    ConcentrationRange,
    /// The upper control bound is nonnegative.
    ControlBound,
    /// Controls satisfy `0 <= u <= u_max`.
    ControlBox,
    /// Cost weights are nonnegative with a strictly positive control weight.
    CostWeights,
    /// Grid and time discretization parameters.
    Discretization,
}

impl Assumption {
    /// Stable short tag used in rejection messages.
    pub fn tag(self) -> &'static str {
        match self {
            Assumption::Coefficients => "model-coefficients",
            Assumption::Proliferation => "proliferation-bounded",
            Assumption::Potential => "potential-split",
            Assumption::PhaseRange => "phase-in-domain",
            Assumption::MeanInterior => "mean-interior",
            Assumption::AngiogenesisPositive => "angiogenesis-positive",
            Assumption::ConcentrationRange => "concentration-unit-interval",
            Assumption::ControlBound => "control-bound-nonnegative",
            Assumption::ControlBox => "control-box",
            Assumption::CostWeights => "cost-weights",
            Assumption::Discretization => "discretization",
        }
    }
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A NaN or infinity was passed in or produced.
    NonFinite {
        context: &'static str,
    },
    InvalidArgument(String),
    ShapeMismatch {
        context: &'static str,
    },
    /// Divergence of a flux whose boundary faces are not zero.
    BoundaryFlux,
    SingularMode {
        determinant: f64,
    },
    SolverFailure {
        step: usize,
        detail: String,
    },
    Inadmissible {
        assumption: Assumption,
        detail: String,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonFinite { context } => write!(f, "non-finite value in {context}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::ShapeMismatch { context } => write!(f, "shape mismatch in {context}"),
            Error::BoundaryFlux => f.write_str("flux has nonzero normal component on the boundary"),
            Error::SingularMode { determinant } => {
                write!(f, "singular block mode (determinant {determinant:e})")
            }
            Error::SolverFailure { step, detail } => write!(f, "solver failure at step {step}: {detail}"),
            Error::Inadmissible { assumption, detail } => write!(f, "[{assumption}] {detail}"),
        }
    }
}

impl Error {
    pub(crate) fn inadmissible(assumption: Assumption, detail: impl Into<String>) -> Self {
        Error::Inadmissible { assumption, detail: detail.into() }
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            Error::SolverFailure { .. } => self,
            other => Error::SolverFailure { step, detail: alloc::format!("{other}") },
        }
    }
}

impl core::error::Error for Error {}
