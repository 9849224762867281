//! Conditional density estimation for right-censored, serially dependent
//! data.
//!
//! The crate provides Kaplan–Meier censoring weights ([`survival`]),
//! local constant and local linear double-kernel estimators of `f(y|x)`
//! ([`estimators`]), plug-in confidence intervals and bias expansions
//! ([`inference`]), a calibrated AR(1)/lognormal simulator ([`simulate`]) and
//! a Monte Carlo GMSE harness ([`bench`]).

pub mod bench;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod inference;
pub mod kernel;
pub mod normal;
pub mod simulate;
pub mod survival;

pub use error::{Error, Result};
pub use estimators::{Bandwidths, FittedSample, LocalFit, Method};
pub use kernel::Kernel;
pub use survival::CensoredObservation;
