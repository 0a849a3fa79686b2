//! Quantum stochastic resonance of a driven spin-boson system in the
//! stochastic (weak-coupling, van Hove) limit.
//!
//! All frequencies, rates and temperatures are measured in units of the
//! bare tunnel splitting `ω0` (so `ω0 = 1`, `k_B = 1`), and time is the
//! rescaled time `τ` in units of `1/ω0`.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: bath spectral densities `J(ω)` and the thermal `J^β(ω)`.
//! * [`dispersion`]: damping `γ`, `γ^β` and the principal-value Lamb shift `σ^β`.
//! * [`response`]: stationary linear response: amplitude, phase lag, SNR.
//! * [`dynamics`]: relaxation and RK4 integration of the driven Bloch equations.
//! * [`scan`]: SNR maps over `(η, T)` and resonance classification.
//! * [`oracle`]: independent brute-force reference routines used for validation.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dispersion;
pub mod dynamics;
mod error;
pub mod format;
pub mod oracle;
pub mod quadrature;
pub mod response;
pub mod scan;
pub mod spectral;

pub use dispersion::{KineticCoefficients, SpinSystem};
pub use dynamics::{BlochState, Trajectory};
pub use error::{Error, Result};
pub use response::{Drive, ResponsePoint};
pub use scan::{ResonanceKind, ResonanceReport, ScanResult, ScanSpec};
pub use spectral::{Environment, SpectralModel};
