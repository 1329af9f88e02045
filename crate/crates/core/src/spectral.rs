//! Thin wrapper around `rustfft` plans with scratch buffers and the integer
//! wavenumber layout used by the ring solvers.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct FftPair {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl FftPair {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        FftPair {
            len,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unnormalized forward transform, `X_k = sum_j x_j exp(-2 pi i j k / N)`.
    pub fn forward(&mut self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    /// Inverse transform including the `1/N` factor.
    pub fn inverse(&mut self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.inverse.process_with_scratch(buf, &mut self.scratch);
        let s = 1.0 / self.len as f64;
        for x in buf.iter_mut() {
            *x *= s;
        }
    }
}

impl std::fmt::Debug for FftPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPair").field("len", &self.len).finish()
    }
}

/// Signed integer mode numbers in FFT order: `0, 1, .., N/2 - 1, -N/2, .., -1`.
pub fn mode_numbers(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            if j < n.div_ceil(2) {
                j as f64
            } else {
                j as f64 - n as f64
            }
        })
        .collect()
}

/// Copy the spectrum of an `n`-point signal into an `m`-point buffer (`m > n`),
/// zero-filling the new high modes. The Nyquist bin of even `n` is split evenly.
pub fn pad_spectrum(src: &[Complex64], dst: &mut [Complex64]) {
    let n = src.len();
    let m = dst.len();
    debug_assert!(m >= n);
    dst.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
    let half = n / 2;
    for k in 0..n.div_ceil(2) {
        dst[k] = src[k];
    }
    for k in 1..half {
        dst[m - k] = src[n - k];
    }
    if n % 2 == 0 && n > 1 {
        let nyq = src[half] * 0.5;
        dst[half] += nyq;
        dst[m - half] += nyq;
    }
}

/// Inverse of [`pad_spectrum`]: keep the `n` lowest modes of an `m`-point spectrum.
pub fn truncate_spectrum(src: &[Complex64], dst: &mut [Complex64]) {
    let m = src.len();
    let n = dst.len();
    debug_assert!(m >= n);
    let half = n / 2;
    for k in 0..n.div_ceil(2) {
        dst[k] = src[k];
    }
    for k in 1..half {
        dst[n - k] = src[m - k];
    }
    if n % 2 == 0 && n > 1 {
        dst[half] = src[half] + src[m - half];
    }
}
