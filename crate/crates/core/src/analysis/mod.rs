//! Post-processing of computed fields: decay fits, positivity and smoothness
//! descriptors, and randomized inequality suites.

mod decay;
mod smoothness;
mod suites;

use thiserror::Error;

pub use decay::{fit_decay, verify_decay_theorem, DecayFit, DecayTheoremWitness, WindowPolicy};
pub use smoothness::{positivity_check, smoothness_descriptor, PositivityReport, SpectralDecayProfile};
pub use suites::{bundled_nonlinearities, run_property_suites, SuiteReport, SuiteSummary};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("profile has no positive values")]
    NonPositive,
    #[error("profile does not decay (fitted exponent {0})")]
    NoDecay(f64),
    #[error("fit window [{r_lo}, {r_hi}] holds {points} usable points")]
    InsufficientWindow { r_lo: f64, r_hi: f64, points: usize },
    #[error("{suite} check {index} failed (seed {seed}): {context}")]
    SuiteFailure {
        suite: String,
        seed: u64,
        index: u64,
        context: String,
    },
    #[error("{0}")]
    Numerics(String),
}
