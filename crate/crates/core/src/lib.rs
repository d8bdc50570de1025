//! Nonstationary quantum oscillator bilinearly coupled to a bosonic bath.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod langevin;
pub mod perturb;
pub mod profiles;
pub mod propagate;
pub mod quad;
pub mod reduce;
pub mod scenarios;
pub mod system;

pub use error::{Error, Result};

/// Version of this library.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
