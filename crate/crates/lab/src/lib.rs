//! Configuration, file formats and experiment drivers for `griffith-core`.

pub mod commands;
pub mod config;
pub mod io;
pub mod parallel;
