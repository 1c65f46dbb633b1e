//! Two-photon polarization Bell experiment, from mode algebra to CHSH thresholds.
//!
//! A type-I down-conversion pair (one photon rotated to `y`) meets a 50-50
//! beamsplitter; each exit beam is analyzed by a polarizing beamsplitter with
//! two detectors. This crate builds the exact final Fock state, classifies it
//! into six per-station outcome classes, folds in double-click confusion (`α`)
//! and detector efficiency (`η`), and evaluates the value-assigned CHSH
//! statistic. It also maximizes that statistic and bisects for the critical
//! efficiency.
//!
//! The crate is `no_std` and only needs `alloc`. IO, file formats and parallel
//! drivers live in the companion `twophoton` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bell;
pub mod detection;
pub mod error;
pub mod fock;
pub mod montecarlo;
pub mod optics;
pub mod optimize;

pub use error::{Error, Result};
