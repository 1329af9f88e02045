//! Measurement pipeline for maser output records: pulse detection, sech
//! envelope fits, comb spectra and regime classification.

mod fit;
mod pulses;
mod regime;
mod series;
mod spectrum;

pub use fit::{fit_sech, fit_sech_traced, initial_guess, PulseFit, ARCCOSH_2};
pub use pulses::{
    detect_pulses, detect_pulses_in_envelope, detect_pulses_with, intersoliton_periods,
    pulse_centers, PeriodStats, PulseDetectConfig, PulseWindow,
};
pub use regime::{classify_regime, Regime, RegimeReport, RegimeThresholds};
pub use series::{Samples, TimeSeries, MIN_SERIES_LEN};
pub use spectrum::{
    comb_spectrum, comb_spectrum_with, CombSpectrum, SpectralLine, SpectrumConfig, WindowFn,
};
