//! Three-regime classification of maser output.
//!
//! Rule, applied to the envelope `e` of the series:
//! 1. sub-threshold if `mean(e^2) < floor_frac * full_scale^2`;
//! 2. III (CW) if `std(e) / mean(e) < cw_ratio`;
//! 3. II (dense) if the duty cycle exceeds `duty_split` or more than
//!    `dense_count` pulses are found;
//! 4. I (sparse) otherwise.
//!
//! The duty cycle is the fraction of samples whose envelope exceeds
//! `threshold_frac` times the envelope maximum.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::pulses::{
    detect_pulses_in_envelope, intersoliton_periods, PeriodStats, PulseDetectConfig,
};
use super::spectrum::{comb_spectrum_with, to_db, SpectrumConfig};
use super::{fit_sech, PulseFit, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "sub_threshold")]
    SubThreshold,
    /// Sparse soliton pulses.
    #[serde(rename = "I")]
    Sparse,
    /// Dense soliton pulses.
    #[serde(rename = "II")]
    Dense,
    /// Continuous-wave masing.
    #[serde(rename = "III")]
    Cw,
}

impl Regime {
    pub fn is_pulsing(self) -> bool {
        matches!(self, Regime::Sparse | Regime::Dense)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::SubThreshold => "sub_threshold",
            Regime::Sparse => "I",
            Regime::Dense => "II",
            Regime::Cw => "III",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct RegimeThresholds {
    pub full_scale: f64,
    pub floor_frac: f64,
    pub cw_ratio: f64,
    pub duty_split: f64,
    pub dense_count: usize,
    pub pulses: PulseDetectConfig,
    /// Number of leading pulses to fit with a sech envelope.
    pub max_fits: usize,
    pub spectrum: SpectrumConfig,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        RegimeThresholds {
            full_scale: 1.0,
            floor_frac: 1e-6,
            cw_ratio: 0.05,
            duty_split: 0.2,
            dense_count: 100,
            pulses: PulseDetectConfig::default(),
            max_fits: 4,
            spectrum: SpectrumConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub label: Regime,
    pub mean: f64,
    pub std_dev: f64,
    pub mean_power: f64,
    pub pulse_count: usize,
    pub duty_cycle: f64,
    pub periods: Option<PeriodStats>,
    /// Power of the dominant spectral line (`P_peak`), linear and in dB.
    pub p_peak: Option<f64>,
    pub p_peak_db: Option<f64>,
    pub line_spacing: Option<f64>,
    pub pulse_fits: Vec<PulseFit>,
}

pub fn classify_regime(ts: &TimeSeries, th: &RegimeThresholds) -> RegimeReport {
    let env = ts.envelope();
    let n = env.len() as f64;
    let mean = env.iter().sum::<f64>() / n;
    let var = env.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
    let std_dev = var.sqrt();
    let mean_power = env.iter().map(|e| e * e).sum::<f64>() / n;

    let windows = detect_pulses_in_envelope(&env, &th.pulses);
    let emax = env.iter().copied().fold(0.0, f64::max);
    let thr = th.pulses.threshold_frac * emax;
    let duty_cycle = if windows.is_empty() {
        0.0
    } else {
        env.iter().filter(|&&e| e > thr).count() as f64 / n
    };
    let pulse_count = windows.len();

    let label = if mean_power < th.floor_frac * th.full_scale * th.full_scale {
        Regime::SubThreshold
    } else if mean > 0.0 && std_dev / mean < th.cw_ratio {
        Regime::Cw
    } else if duty_cycle > th.duty_split || pulse_count > th.dense_count {
        Regime::Dense
    } else {
        Regime::Sparse
    };

    let centers: Vec<f64> = windows.iter().map(|w| ts.time(w.peak)).collect();
    let periods = intersoliton_periods(&centers);

    let pulse_fits = if label.is_pulsing() {
        windows
            .iter()
            .filter(|w| w.len() >= 8)
            .take(th.max_fits)
            .filter_map(|w| fit_sech(ts, w).ok())
            .collect()
    } else {
        Vec::new()
    };

    let spectrum = comb_spectrum_with(ts, &th.spectrum).ok();
    let dominant = spectrum.as_ref().and_then(|s| s.dominant().copied());

    RegimeReport {
        label,
        mean,
        std_dev,
        mean_power,
        pulse_count,
        duty_cycle,
        periods,
        p_peak: dominant.map(|l| l.power),
        p_peak_db: dominant.map(|l| to_db(l.power)),
        line_spacing: spectrum.and_then(|s| s.line_spacing),
        pulse_fits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sech_train(n: usize, centers: &[f64], width: f64, base: f64) -> TimeSeries {
        let v = (0..n)
            .map(|j| {
                (base
                    + centers
                        .iter()
                        .map(|&c| 1.0 / ((j as f64 - c) / width).cosh())
                        .sum::<f64>())
                .into()
            })
            .collect();
        TimeSeries::complex(v, 1.0).unwrap()
    }

    #[test]
    fn constant_is_cw() {
        let ts = TimeSeries::complex(vec![0.7.into(); 256], 1.0).unwrap();
        let r = classify_regime(&ts, &RegimeThresholds::default());
        assert_eq!(r.label, Regime::Cw);
        assert_eq!(r.pulse_count, 0);
    }

    #[test]
    fn tiny_signal_is_sub_threshold() {
        let ts = TimeSeries::complex(vec![1e-4.into(); 256], 1.0).unwrap();
        assert_eq!(
            classify_regime(&ts, &RegimeThresholds::default()).label,
            Regime::SubThreshold
        );
    }

    #[test]
    fn isolated_pulses_are_sparse() {
        // Three pulses of width 2 over 1000 samples: duty cycle ~ 2 %.
        let ts = sech_train(1000, &[200.0, 500.0, 800.0], 2.0, 0.01);
        let r = classify_regime(&ts, &RegimeThresholds::default());
        assert_eq!(r.label, Regime::Sparse, "{r:?}");
        assert_eq!(r.pulse_count, 3);
        assert!(r.duty_cycle < 0.05);
        assert_eq!(r.periods.unwrap().mean, 300.0);
        assert!(!r.pulse_fits.is_empty());
    }

    #[test]
    fn overlapping_bursts_are_dense() {
        let centers: Vec<f64> = (0..40).map(|i| 12.5 + 25.0 * i as f64).collect();
        let ts = sech_train(1000, &centers, 4.0, 0.0);
        let r = classify_regime(&ts, &RegimeThresholds::default());
        assert_eq!(r.label, Regime::Dense, "{r:?}");
        assert!(r.duty_cycle > 0.3 && r.duty_cycle < 0.5, "{}", r.duty_cycle);
    }
}
