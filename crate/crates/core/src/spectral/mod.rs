//! Periodic pseudospectral discretization of `ℝ^N`.
//!
//! The torus `[−L/2, L/2)^N` stands in for the whole space; computed ground
//! states are expected to have decayed to `< 10⁻⁶` of their peak at the box
//! faces. Norms and integrals use the `h^N`-weighted left Riemann sum.

mod field;
mod grid;
mod inequalities;
mod ops;
pub mod snapshot;
mod transform;

use thiserror::Error;

pub use field::{pairwise_sum, Field, SpectralField};
pub use grid::Grid;
pub use inequalities::{
    check_hausdorff_young, check_weak_hls, hls_constant, unit_ball_volume, HlsWitness, PowerLawKernel,
};
pub use ops::{
    apply_sqrt_op, convolve, convolve_sampled, delta_kernel, half_form, laplacian_symbol, sample_kernel, sqrt_symbol,
    Convolver,
};
pub use transform::{from_spectral, to_spectral, Transform};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("expected {expected} samples, got {actual}")]
    Length { expected: usize, actual: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("exponent mismatch: {0}")]
    Exponents(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}
