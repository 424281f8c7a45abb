//! Pathwise control of rough differential equations driven by fractional controls.
//!
//! Layers, bottom up: [`gridpath`] (grids, sampled paths, p-variation),
//! [`fraccalc`] (Riemann–Liouville integrals and memory extensions),
//! [`roughlift`] (truncated signatures), [`controlled`] (controlled paths and
//! rough integration), [`rde`] (Davie/Picard solver), [`control`] (cost and
//! lattice value function) and [`hjb`] (Hamiltonian and residual checks).

pub mod cli;
pub mod control;
pub mod controlled;
pub mod error;
pub mod example;
pub mod fixtures;
pub mod fraccalc;
pub mod gridpath;
pub mod hjb;
pub mod rde;
pub mod roughlift;
pub mod suite;

pub use error::{Error, Result};
