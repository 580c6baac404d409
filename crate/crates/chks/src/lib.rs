//! Configuration, snapshot IO and command drivers for the tumor-growth
//! solver in `chks_core`.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod error;
pub mod fields;
pub mod output;
pub mod run;
pub mod snapshot;
pub mod verify;

pub use config::{load_config, parse_config, RunConfig, VerifySettings};
pub use error::{AppError, AppResult, ConfigError};
