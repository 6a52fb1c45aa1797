//! Random fields built by integrating a Lévy basis over translated
//! hypograph sets: simulation, covariance and tail-dependence theory,
//! and pairwise-likelihood fitting.

pub mod error;
pub mod gof;
pub mod hypograph;
pub mod inference;
pub mod io;
pub mod levy;
pub mod numeric;
pub mod simulate;
pub mod tail;

pub use error::{Error, Result};
pub use levy::{set_distribution, LevySeed, SetDistribution};
