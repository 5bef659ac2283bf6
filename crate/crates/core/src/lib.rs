//! Discrete-to-continuum brittle fracture on a rotated triangular lattice.
//!
//! The crate evaluates nearest-neighbour mass-spring energies on the scaled
//! lattice `εL`, extracts crack geometry from broken cells, evaluates the
//! limiting Griffith functional on piecewise-affine candidates with polyline
//! cracks, and solves the uniaxial cleavage problem in closed form and
//! numerically.
//!
//! Everything here is pure computation and builds without `std`; file
//! formats, configuration and the command-line driver live in the companion
//! `griffith` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod continuum;
pub mod crack_extraction;
pub mod discrete_energy;
mod error;
pub mod geometry;
pub mod lattice;
pub mod material;
pub mod math;
pub mod solver;

pub use error::{Error, Result};
pub use math::{Mat2, Vec2};
