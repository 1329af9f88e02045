use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::FftPair;

pub const MIN_SERIES_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Samples {
    pub fn len(&self) -> usize {
        match self {
            Samples::Real(v) => v.len(),
            Samples::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Uniformly sampled output signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Samples,
    dt: f64,
    t0: f64,
    label: String,
}

impl TimeSeries {
    pub fn new(samples: Samples, dt: f64, label: impl Into<String>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::domain(format!(
                "sample interval must be > 0, got {dt}"
            )));
        }
        if samples.len() < MIN_SERIES_LEN {
            return Err(Error::domain(format!(
                "time series needs at least {MIN_SERIES_LEN} samples, got {}",
                samples.len()
            )));
        }
        let finite = match &samples {
            Samples::Real(v) => v.iter().all(|x| x.is_finite()),
            Samples::Complex(v) => v.iter().all(|x| x.re.is_finite() && x.im.is_finite()),
        };
        if !finite {
            return Err(Error::domain("time series contains non-finite samples"));
        }
        Ok(TimeSeries {
            samples,
            dt,
            t0: 0.0,
            label: label.into(),
        })
    }

    pub fn real(samples: Vec<f64>, dt: f64) -> Result<Self> {
        Self::new(Samples::Real(samples), dt, "")
    }

    pub fn complex(samples: Vec<Complex64>, dt: f64) -> Result<Self> {
        Self::new(Samples::Complex(samples), dt, "")
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_start(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn samples(&self) -> &Samples {
        &self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn start(&self) -> f64 {
        self.t0
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_complex(&self) -> bool {
        matches!(self.samples, Samples::Complex(_))
    }

    pub fn time(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.dt
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        match &self.samples {
            Samples::Real(v) => v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            Samples::Complex(v) => v.clone(),
        }
    }

    /// Instantaneous amplitude. Complex samples use `|x|`; real samples use
    /// the magnitude of the analytic signal.
    pub fn envelope(&self) -> Vec<f64> {
        match &self.samples {
            Samples::Complex(v) => v.iter().map(|x| x.norm()).collect(),
            Samples::Real(v) => analytic_envelope(v),
        }
    }

    /// Multiply every sample by `k`.
    pub fn scaled(&self, k: f64) -> TimeSeries {
        let samples = match &self.samples {
            Samples::Real(v) => Samples::Real(v.iter().map(|x| x * k).collect()),
            Samples::Complex(v) => Samples::Complex(v.iter().map(|x| x * k).collect()),
        };
        TimeSeries {
            samples,
            ..self.clone()
        }
    }

    /// Drop the leading `fraction` of samples (transient removal).
    pub fn tail(&self, fraction: f64) -> Result<TimeSeries> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::domain(format!(
                "discard fraction must lie in [0, 1), got {fraction}"
            )));
        }
        let skip = (self.len() as f64 * fraction).floor() as usize;
        let samples = match &self.samples {
            Samples::Real(v) => Samples::Real(v[skip..].to_vec()),
            Samples::Complex(v) => Samples::Complex(v[skip..].to_vec()),
        };
        Ok(TimeSeries::new(samples, self.dt, self.label.clone())?.with_start(self.time(skip)))
    }
}

fn analytic_envelope(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut fft = FftPair::new(n);
    fft.forward(&mut buf);
    let half = n / 2;
    for (k, b) in buf.iter_mut().enumerate() {
        let gain = if k == 0 || (n % 2 == 0 && k == half) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *b *= gain;
    }
    fft.inverse(&mut buf);
    buf.iter().map(|z| z.norm()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_or_bad_dt() {
        assert!(TimeSeries::real(vec![0.0; 15], 1.0).is_err());
        assert!(TimeSeries::real(vec![0.0; 16], 0.0).is_err());
        assert!(TimeSeries::real(vec![f64::NAN; 16], 1.0).is_err());
    }

    #[test]
    fn analytic_envelope_of_carrier() {
        let n = 256;
        let x: Vec<f64> = (0..n)
            .map(|j| 2.5 * (std::f64::consts::TAU * 17.0 * j as f64 / n as f64).cos())
            .collect();
        let ts = TimeSeries::real(x, 1.0).unwrap();
        for e in ts.envelope() {
            assert!((e - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn tail_keeps_time_axis() {
        let ts = TimeSeries::real((0..100).map(|j| j as f64).collect(), 0.5).unwrap();
        let t = ts.tail(0.25).unwrap();
        assert_eq!(t.len(), 75);
        assert_eq!(t.start(), 12.5);
    }
}
