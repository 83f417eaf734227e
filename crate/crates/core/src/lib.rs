//! Many-body Stückelberg interference in periodically driven Rydberg arrays.
//!
//! The crate is `no_std` (with `alloc`) and contains every numerical piece:
//! array geometry and van der Waals couplings, blockade-constrained bases,
//! drive waveforms, a second-order Trotter integrator with an independent
//! dense-exponential oracle, Floquet perturbation analytics built on an
//! in-house Bessel evaluator, and fringe analysis of frequency sweeps.
//!
//! IO, the command line and threaded sweeps live in `rydberg-tools`.

#![no_std]
#![warn(clippy::std_instead_of_alloc)]
#![warn(clippy::std_instead_of_core)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;

pub mod analysis;
pub mod basis;
pub mod dense;
pub mod drive;
pub mod evolve;
pub mod floquet;
pub mod geometry;

pub use self::error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Van der Waals coefficient of the |70S_1/2> state, in μm⁶·rad/μs.
pub const C6_70S: f64 = 5_420_503.0;

/// Side length of the square active region of the device, in μm.
pub const DEVICE_EXTENT_UM: f64 = 75.0;

/// Maximum Rabi frequency of the device, in rad/μs.
pub const OMEGA_MAX: f64 = 15.6;
