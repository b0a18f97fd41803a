//! Numerical simulator for measuring finite-temperature out-of-time-ordered
//! correlators (OTOCs) on a pair of coupled XX spin chains.
//!
//! The library covers the full pipeline:
//!
//! - [`hilbert`]: bit-string bases (optionally restricted to a total-S^z
//!   sector), sparse operators, Pauli strings and state vectors.
//! - [`model`]: the long-range XX chain, the two-leg parent Hamiltonian,
//!   the particle-hole operator `R` and the spin rotation `U0`.
//! - [`spectral`]: dense full diagonalization and a Lanczos ground-state
//!   solver with full reorthogonalization.
//! - [`tfd`]: thermofield-double construction, fidelity maximization and
//!   the 1/n extrapolation of the effective temperature.
//! - [`dynamics`]: Krylov time propagation, the R-conjugation realization
//!   of backward conjugate evolution, noise channels and readout errors.
//! - [`otoc`]: exact thermal OTOCs, the two-leg circuit estimator, the
//!   corrected ratio `O_corr = O_g/N_g`, shot sampling and slope extraction.
//! - [`config`] / [`runner`]: declarative experiment specs, CSV/SVG output,
//!   figure-reproduction presets and parameter sweeps.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod model;
pub mod otoc;
pub mod output;
pub mod runner;
pub mod spectral;
pub mod tfd;
pub mod verify;

pub use error::{Error, Result};
