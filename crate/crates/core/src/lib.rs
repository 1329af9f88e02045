//! Simulation and analysis toolkit for whispering-gallery maser solitons.
//!
//! - [`params`]: physical parameters, the rescaling chain to the normalized
//!   Maxwell-Bloch system and the ring-equation coefficients, occupation
//!   numbers and the pump-delivery model.
//! - [`lle`]: split-step Fourier solver for the damped, detuned ring equation.
//! - [`mbe`]: dual-mode Maxwell-Bloch ring solver with a shared spin ensemble.
//! - [`analysis`]: pulse detection, sech fits, comb spectra, regime labels.
//! - [`sweep`]: parallel parameter sweeps producing regime maps.
//! - [`io`]: trajectory and time-series file formats.

pub mod analysis;
pub mod error;
pub mod io;
pub mod lle;
pub mod mbe;
pub mod params;
pub mod presets;
pub mod spectral;
pub mod sweep;

pub use error::{Aborted, Error, Result};
