//! Polarization-resolved photoluminescence of a single emitter whose
//! excited state is split into two orbital branches with orthogonal
//! transition dipoles.
//!
//! A thermal bath flips population between the branches before the photon
//! is emitted, which mixes the two orthogonal polarizations and lowers the
//! contrast seen through a rotating polarizer. The crate
//!
//! * solves the two-branch rate equations ([`dynamics`]),
//! * propagates the resulting partially polarized light through wave plates
//!   and polarizers ([`optics`]),
//! * synthesizes excitation spectra under a rotating laser polarization
//!   ([`spectra`]),
//! * provides a seeded jump-process Monte Carlo as an independent check
//!   ([`montecarlo`]),
//! * and fits polarizer sweeps and inverts the contrast back to the
//!   relaxation rate ([`inference`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod csvio;
pub mod dynamics;
pub mod error;
pub mod inference;
pub mod model;
pub mod montecarlo;
pub mod optics;
pub mod rng;
pub mod spectra;

pub use error::{Error, Result};
pub use model::{Branch, LevelModel, RateSet, ThermalBath};
