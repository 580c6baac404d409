//! Numerical core for the multi-species Cahn–Hilliard–Keller–Segel tumor
//! growth model and its distributed optimal control problem.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! function of its inputs; file formats, configuration and the command line
//! live in the `chks` companion crate.
//!
//! Layout:
//!
//! * [`grid`] : cell-centered fields on a rectangle, Neumann finite-difference
//!   operators and cosine-transform direct solves.
//! * [`potentials`] : double-well potentials with a convex/Lipschitz split and
//!   the proliferation function.
//! * [`model`] : model parameters and their admissibility checks.
//! * [`state`] : the forward IMEX solver, energy and structural monitors.
//! * [`linearized`] : directional derivative of the control-to-state map.
//! * [`adjoint`] : backward adjoint sweep and the duality check.
//! * [`control`] : tracking cost, box projection, reduced gradient and
//!   projected gradient descent.

#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod adjoint;
pub mod control;
pub mod error;
pub mod grid;
pub mod linearized;
pub mod model;
pub mod potentials;
pub mod state;

pub use error::{Assumption, Error, Result};
pub use grid::{FaceFlux, Field, FluxScheme, Grid};
