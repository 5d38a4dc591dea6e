//! Numerical laboratory for the Ohta-Kawasaki energy in the droplet regime on
//! the flat 3-torus: diffuse and sharp-interface energies, screened Green's
//! functions, mass-constrained gradient flow, droplet statistics, the limit
//! energy on measures and the whole-space liquid-drop problem.

pub mod cli;
pub mod construct;
pub mod droplets;
pub mod energy;
pub mod error;
pub mod flow;
pub mod gamow;
pub mod greens;
pub mod grid;
pub mod limit;
pub mod quadrature;

pub use energy::{EnergyReport, ModelParams, WellPotential};
pub use error::{Error, Result};
pub use grid::{Field3, Multiplier};
