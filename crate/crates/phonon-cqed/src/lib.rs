//! Cavity-QED emitter coupled to a phonon continuum.
//!
//! The crate combines a numerically exact, non-Markovian process-tensor
//! engine ([`ptensor`]) with variational polaron analytics ([`varpol`],
//! [`rates`]) and turns two-time photon correlations into emission spectra,
//! indistinguishability and efficiency ([`observables`]). [`run`] wires it
//! all to declarative TOML run files.

pub mod bath;
pub mod error;
pub mod observables;
pub mod ptensor;
pub mod quadrature;
pub mod rates;
pub mod run;
pub mod simulate;
pub mod system;
pub mod units;
pub mod varpol;

pub use error::{Error, Result};
pub use num_complex::Complex64;
