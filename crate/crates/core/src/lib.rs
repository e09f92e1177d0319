//! Higher-order interference with many-particle states in a five-slit setup.
//!
//! The crate covers the full chain from ideal theory to a simulated
//! measurement campaign:
//!
//! - [`optics`]: mask geometry, far-field amplitudes and `G^(M)` functions.
//! - [`hierarchy`]: inclusion-exclusion interference orders and the Sorkin
//!   parameter `κ^(M)`.
//! - [`spad`]: photon-counting chain (Poisson streams, splitter, SPADs).
//! - [`ccd`]: intensity chain (expected images, shot/read noise, 14-bit frames).
//! - [`analysis`]: coincidences, line-pair autocorrelation, background and
//!   count corrections, error propagation.
//! - [`campaign`]: randomized 33-entry measurement sets, drift and
//!   misalignment, aggregation and result files.

pub mod analysis;
pub mod campaign;
pub mod ccd;
pub mod error;
pub mod gtable;
pub mod hierarchy;
pub mod optics;
pub mod seed;
pub mod slits;
pub mod spad;
pub mod stats;

pub use error::{Error, Result};
pub use gtable::{GRow, GTable};
pub use hierarchy::{InterferenceOrderResult, Regime, SorkinEstimate};
pub use optics::{Interferometer, MaskGeometry, PhaseGrid, SourceState};
pub use slits::{Entry, SlitConfiguration};
