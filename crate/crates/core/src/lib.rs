//! Simulation of polarization-entangled photon pairs distributed through
//! birefringent fibers whose dephasing noise is correlated through the
//! joint frequency spectrum of the pair.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`] and [`state`]: complex matrices and two-qubit density matrices.
//! * [`spectra`]: joint frequency distributions and their decoherence function.
//! * [`channel`]: the bipartite polarization-mode-dispersion channel.
//! * [`measures`]: concurrence, Bell fidelity, CHSH and the enhancement factor.
//! * [`tomography`]: simulated coincidence counting and state reconstruction.
//! * [`experiment`]: scenario presets, reference report and parameter sweeps.

pub mod channel;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod measures;
pub mod spectra;
pub mod state;
pub mod tomography;

pub use error::{Error, Result};

/// Complex double used throughout the crate.
pub type C64 = num_complex::Complex<f64>;

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
