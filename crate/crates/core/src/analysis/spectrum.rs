//! Windowed power spectra with median/MAD noise-floor peak picking.

use std::f64::consts::PI;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::{Samples, TimeSeries};
use crate::error::{Error, Result};
use crate::spectral::FftPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum WindowFn {
    Rectangular,
    #[default]
    Hann,
}

impl WindowFn {
    fn weights(self, n: usize) -> Vec<f64> {
        match self {
            WindowFn::Rectangular => vec![1.0; n],
            // Periodic Hann: exact for integer-period records.
            WindowFn::Hann => (0..n)
                .map(|j| 0.5 - 0.5 * (2.0 * PI * j as f64 / n as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub window: WindowFn,
    /// Noise floor is `median + floor_k * MAD` of the bin powers.
    pub floor_k: f64,
    /// Lines weaker than this fraction of the strongest bin are ignored.
    pub min_relative_power: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            window: WindowFn::Hann,
            floor_k: 10.0,
            min_relative_power: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    pub frequency: f64,
    pub power: f64,
    pub power_db: f64,
}

/// Power spectrum on ascending frequency bins.
///
/// Complex series give a two-sided spectrum; real series a one-sided one with
/// the negative-frequency power folded onto the positive bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombSpectrum {
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    pub power_db: Vec<f64>,
    pub bin_width: f64,
    pub noise_floor: f64,
    /// Sorted by frequency.
    pub lines: Vec<SpectralLine>,
    /// Median gap between adjacent detected lines.
    pub line_spacing: Option<f64>,
    /// `|sum(power) - sum(|w x|^2)| / sum(|w x|^2)`.
    pub parseval_residual: f64,
}

impl CombSpectrum {
    /// Strongest detected line.
    pub fn dominant(&self) -> Option<&SpectralLine> {
        self.lines.iter().max_by(|a, b| a.power.total_cmp(&b.power))
    }
}

pub(crate) fn to_db(p: f64) -> f64 {
    10.0 * p.max(1e-300).log10()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn comb_spectrum(ts: &TimeSeries, window: WindowFn) -> Result<CombSpectrum> {
    comb_spectrum_with(
        ts,
        &SpectrumConfig {
            window,
            ..Default::default()
        },
    )
}

pub fn comb_spectrum_with(ts: &TimeSeries, cfg: &SpectrumConfig) -> Result<CombSpectrum> {
    let n = ts.len();
    if n < 64 {
        return Err(Error::domain(format!(
            "spectrum needs at least 64 samples, got {n}"
        )));
    }
    let w = cfg.window.weights(n);
    let mut buf: Vec<_> = ts.to_complex().iter().zip(&w).map(|(x, w)| x * w).collect();
    let energy: f64 = buf.iter().map(|x| x.norm_sqr()).sum();
    FftPair::new(n).forward(&mut buf);
    let raw: Vec<f64> = buf.iter().map(|x| x.norm_sqr() / n as f64).collect();
    let bin_width = 1.0 / (n as f64 * ts.dt());

    let (frequencies, power): (Vec<f64>, Vec<f64>) = match ts.samples() {
        Samples::Complex(_) => {
            let half = n / 2;
            (0..n)
                .map(|i| {
                    let k = (i + n - half) % n;
                    let signed = if k >= n.div_ceil(2) {
                        k as f64 - n as f64
                    } else {
                        k as f64
                    };
                    (signed * bin_width, raw[k])
                })
                .unzip()
        }
        Samples::Real(_) => (0..=n / 2)
            .map(|k| {
                let mirrored = k != 0 && !(n % 2 == 0 && k == n / 2);
                let p = if mirrored {
                    raw[k] + raw[n - k]
                } else {
                    raw[k]
                };
                (k as f64 * bin_width, p)
            })
            .unzip(),
    };

    let total: f64 = power.iter().sum();
    let parseval_residual = if energy > 0.0 {
        (total - energy).abs() / energy
    } else {
        total.abs()
    };

    let med = median(power.clone());
    let mad = median(power.iter().map(|p| (p - med).abs()).collect());
    let noise_floor = med + cfg.floor_k * mad;
    let pmax = power.iter().copied().fold(0.0, f64::max);
    let min_power = cfg.min_relative_power * pmax;

    let m = power.len();
    let mut lines = Vec::new();
    for i in 0..m {
        let p = power[i];
        let left_ok = i == 0 || p > power[i - 1];
        let right_ok = i + 1 == m || p >= power[i + 1];
        if left_ok && right_ok && p > noise_floor && p >= min_power && p > 0.0 {
            lines.push(SpectralLine {
                frequency: frequencies[i],
                power: p,
                power_db: to_db(p),
            });
        }
    }
    let line_spacing = (lines.len() >= 2).then(|| {
        median(
            lines
                .windows(2)
                .map(|w| w[1].frequency - w[0].frequency)
                .collect(),
        )
    });

    Ok(CombSpectrum {
        power_db: power.iter().copied().map(to_db).collect(),
        frequencies,
        power,
        bin_width,
        noise_floor,
        lines,
        line_spacing,
        parseval_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn single_tone_single_line() {
        let n = 256;
        let dt = 1e-3;
        let k = 19;
        let x: Vec<Complex64> = (0..n)
            .map(|j| Complex64::from_polar(1.3, 2.0 * PI * k as f64 * j as f64 / n as f64))
            .collect();
        let ts = TimeSeries::complex(x, dt).unwrap();
        for w in [WindowFn::Rectangular, WindowFn::Hann] {
            let s = comb_spectrum(&ts, w).unwrap();
            assert_eq!(s.lines.len(), 1, "{w:?}: {:?}", s.lines);
            assert!((s.lines[0].frequency - k as f64 / (n as f64 * dt)).abs() < 1e-9);
            assert!(s.parseval_residual < 1e-9);
        }
    }

    #[test]
    fn white_noise_has_no_lines_at_high_k() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let cfg = SpectrumConfig {
            window: WindowFn::Rectangular,
            floor_k: 30.0,
            ..Default::default()
        };
        let mut clean = 0;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<Complex64> = (0..1024)
                .map(|_| Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
                .collect();
            let s = comb_spectrum_with(&TimeSeries::complex(x, 1.0).unwrap(), &cfg).unwrap();
            if s.lines.is_empty() {
                clean += 1;
            }
        }
        assert!(clean >= 99, "{clean}/100 seeds line-free");
    }

    #[test]
    fn real_input_is_one_sided() {
        let n = 128;
        let x: Vec<f64> = (0..n)
            .map(|j| (2.0 * PI * 5.0 * j as f64 / n as f64).cos())
            .collect();
        let s = comb_spectrum(&TimeSeries::real(x, 1.0).unwrap(), WindowFn::Rectangular).unwrap();
        assert!(s.frequencies.iter().all(|&f| f >= 0.0));
        assert_eq!(s.lines.len(), 1);
        assert!(s.parseval_residual < 1e-12);
    }

    #[test]
    fn too_short_rejected() {
        let ts = TimeSeries::real(vec![1.0; 32], 1.0).unwrap();
        assert!(comb_spectrum(&ts, WindowFn::Hann).is_err());
    }
}
