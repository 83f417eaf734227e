//! Command-line front end, file formats and threaded sweeps for
//! `rydberg-core`.

pub mod acceptance;
pub mod config;
pub mod io;
pub mod sweep;

pub use config::RunConfig;
pub use sweep::sweep_parallel;
