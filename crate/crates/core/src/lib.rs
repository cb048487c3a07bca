//! Classical simulation of quantum affinity, Tsallis relative entropy and
//! Hellinger-distance estimators for low-rank mixed states.
//!
//! The crate is organised bottom-up:
//!
//! * [`densityops`]: dense complex matrices, density operators and exact divergences.
//! * [`polyapprox`]: certified Chebyshev approximations of power functions.
//! * [`blockenc`]: block-encodings as explicit unitaries.
//! * [`estimators`]: amplitude estimation and the query-model estimator.
//! * [`samplizer`]: query-to-sample conversion and the sample-model estimator.
//! * [`harness`]: configuration, experiment runs, sweeps and verification suites.

pub mod blockenc;
pub mod densityops;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod polyapprox;
pub mod samplizer;

pub use error::{LabError, Result};
