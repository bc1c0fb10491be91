#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

//! Numerical core for estimating the integrated density of states (IDS) of
//! lattice Anderson Hamiltonians `H = H0 + lambda * V_omega`.
//!
//! Everything here is allocation-only (`alloc`, no `std`): matrix assembly,
//! eigenvalue counting by inertia, the dense rotation oracle, banded complex
//! resolvent solves, free-lattice reference IDS values, Monte Carlo
//! estimators, power-law fits and the weak-disorder Neumann series.
//! IO, configuration and threading live in the `idslab` crate; parallel
//! execution is injected through [`runner::RealizationMap`].

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod band;
pub mod dos_series;
pub mod error;
pub mod estimator;
pub mod free_ids;
pub mod lattice;
pub mod rng;
pub mod runner;
pub mod spectral;

pub use error::{Error, Result};
pub use lattice::{
    Boundary, DisorderLaw, DisorderSpec, HamiltonianSample, LatticeSpec, ModelSpec,
    PeriodicPotential,
};
pub use runner::{RealizationMap, Sequential};
