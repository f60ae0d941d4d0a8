//! Ground states of the pseudo-relativistic Hartree equation
//!
//! ```text
//! √(−Δ + m²) u + V u = (W ∗ F(u)) f(u)   in ℝ^N
//! ```
//!
//! computed on a periodic pseudospectral grid by minimizing the energy over
//! the Nehari manifold, together with numerical checks of the variational
//! structure (mountain-pass geometry, level comparison with the limit problem,
//! the half-space extension, and exponential decay of the solution).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod energy;
pub mod extension;
pub mod model;
pub mod nehari;
mod rootfind;
pub mod spectral;
pub mod witness;

pub use energy::{EnergyBreakdown, Functional};
pub use model::ModelSpec;
pub use spectral::{Field, Grid};
pub use witness::InequalityWitness;
