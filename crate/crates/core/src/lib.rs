//! Light scattering from a thermal atom array in an incommensurate lattice
//! into a strongly coupled cavity mode.
//!
//! The crate is organized bottom-up:
//!
//! - [`params`]: cavity, atom, trap and drive constants.
//! - [`ensemble`]: seeded samplers for atomic configurations.
//! - [`scattering`]: collective intracavity amplitude and its statistics.
//! - [`multilevel`]: Zeeman structure, optical pumping and the Raman channel.
//! - [`detection`]: count rates, shot noise and rate estimators.
//! - [`analysis`]: Lorentzian, parabola and power-law fits.
//! - [`config`] and [`scenario`]: the JSON-driven experiment runner behind
//!   the `subrad` binary.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod detection;
pub mod ensemble;
pub mod error;
pub mod multilevel;
pub mod params;
pub mod scattering;
pub mod scenario;

pub use error::{Error, Result};
