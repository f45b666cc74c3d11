//! Simulation and analysis of qubit-qumode circuits built from echoed
//! conditional displacements (ECD) and qubit rotations.
//!
//! The crate is `no_std` + `alloc` when built without the default `std`
//! feature. The `parallel` feature spreads Monte Carlo loops over a rayon
//! pool; results do not depend on the number of threads.
#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

extern crate alloc;

pub mod circuit;
pub mod correlators;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod linalg;
pub mod math;
pub mod rng;
pub mod stats;
pub mod targets;
pub mod trainer;
pub mod variance;

pub use num_complex::Complex64 as C64;

pub use circuit::{BranchState, CircuitParams, EnsembleSpec};
pub use error::{Error, Result};
pub use fock::{DisplacementMatrix, FockVector};
pub use gaussian::{GaussianState, OneModeGaussianParams};
pub use targets::{FockExpansion, TargetSpec};

/// Numerical limits shared by the simulators.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimConfig {
    /// Maximum number of sign patterns `2^(ML-1)` the branch simulator accepts.
    pub branch_budget: u64,
    /// Maximum number of complex amplitudes in a Fock-space state.
    pub fock_budget: u64,
    /// Largest tolerated norm loss of a simulated Fock state.
    pub fock_leak_bound: f64,
    /// Largest tolerated norm deficit of a truncated target expansion.
    pub target_leak_bound: f64,
    /// Hard ceiling for automatically chosen target cutoffs.
    pub max_target_cutoff: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            branch_budget: 1 << 22,
            fock_budget: 1 << 26,
            fock_leak_bound: 1e-6,
            target_leak_bound: 1e-12,
            max_target_cutoff: 6000,
        }
    }
}
