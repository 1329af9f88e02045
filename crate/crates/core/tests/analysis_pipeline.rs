//! Measurement pipeline on constructed fixtures: fits under noise, comb
//! spectra against a naive DFT, invariances of detection and labelling.

use maser_soliton::analysis::{
    classify_regime, comb_spectrum, comb_spectrum_with, detect_pulses, fit_sech, fit_sech_traced,
    PulseWindow, Regime, RegimeThresholds, SpectrumConfig, TimeSeries, WindowFn,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

/// Sum of unit sech pulses of width `tau` (in samples) at `centers`.
fn train(n: usize, centers: &[f64], tau: f64) -> Vec<f64> {
    (0..n)
        .map(|i| centers.iter().map(|c| sech((i as f64 - c) / tau)).sum())
        .collect()
}

fn complex_series(v: &[f64], dt: f64) -> TimeSeries {
    TimeSeries::complex(v.iter().map(|&x| Complex64::new(x, 0.0)).collect(), dt).unwrap()
}

#[test]
fn noisy_fit_width_median_error_below_two_percent() {
    let (n, tau, dt) = (200, 8.0, 0.5);
    let clean: Vec<f64> = (0..n)
        .map(|i| sech((i as f64 - 97.3) / tau) + 0.1)
        .collect();
    let window = PulseWindow {
        start: 0,
        end: n,
        peak: 97,
    };
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut errors: Vec<f64> = (0..100u64)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y: Vec<f64> = clean.iter().map(|c| c + noise.sample(&mut rng)).collect();
            let fit = fit_sech(&complex_series(&y, dt), &window).unwrap();
            (fit.width / (tau * dt) - 1.0).abs()
        })
        .collect();
    errors.sort_by(f64::total_cmp);
    let median = 0.5 * (errors[49] + errors[50]);
    assert!(median < 0.02, "median width error {median}");
}

#[test]
fn fit_cost_never_increases() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let y: Vec<f64> = (0..64)
        .map(|i| 2.0 * sech((i as f64 - 30.0) / 5.0) + noise.sample(&mut rng))
        .collect();
    let (_, history) = fit_sech_traced(
        &complex_series(&y, 1.0),
        &PulseWindow {
            start: 0,
            end: 64,
            peak: 30,
        },
    )
    .unwrap();
    assert!(history.len() > 1);
    for w in history.windows(2) {
        assert!(w[1] <= w[0]);
    }
}

/// Bins of a direct O(n^2) DFT holding more than `rel` of the peak power.
fn naive_lines(x: &[f64], rel: f64) -> Vec<i64> {
    let n = x.len();
    let power: Vec<f64> = (0..n)
        .map(|k| {
            let s: Complex64 = x
                .iter()
                .enumerate()
                .map(|(j, &v)| {
                    v * Complex64::from_polar(
                        1.0,
                        -std::f64::consts::TAU * (k * j) as f64 / n as f64,
                    )
                })
                .sum();
            s.norm_sqr()
        })
        .collect();
    let max = power.iter().copied().fold(0.0, f64::max);
    let mut bins: Vec<i64> = (0..n)
        .filter(|&k| power[k] > rel * max)
        .map(|k| {
            if k >= n / 2 {
                k as i64 - n as i64
            } else {
                k as i64
            }
        })
        .collect();
    bins.sort();
    bins
}

#[test]
fn pulse_train_comb_matches_direct_dft() {
    let (n, period, dt) = (1024, 64.0, 1e-3);
    let centers: Vec<f64> = (0..16).map(|k| 10.0 + period * k as f64).collect();
    // periodic images keep the train exactly periodic on the window
    let mut x = train(n, &centers, 3.0);
    let wrap = train(n, &[10.0 - period, 10.0 + 16.0 * period], 3.0);
    x.iter_mut().zip(&wrap).for_each(|(a, b)| *a += b);

    let spec = comb_spectrum(&complex_series(&x, dt), WindowFn::Rectangular).unwrap();
    assert!(spec.parseval_residual < 1e-9);
    let expected_spacing = 1.0 / (period * dt);
    let spacing = spec.line_spacing.unwrap();
    assert!(
        (spacing - expected_spacing).abs() <= spec.bin_width,
        "{spacing} vs {expected_spacing}"
    );

    let oracle = naive_lines(&x, 1e-6);
    let strong: Vec<i64> = spec
        .lines
        .iter()
        .filter(|l| l.power > 1e-6 * spec.dominant().unwrap().power)
        .map(|l| (l.frequency / spec.bin_width).round() as i64)
        .collect();
    assert_eq!(strong, oracle);
    assert!(oracle.iter().all(|b| b % 16 == 0));
}

#[test]
fn circular_shift_keeps_spectrum_magnitudes() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let x: Vec<Complex64> = (0..256)
        .map(|_| Complex64::new(noise.sample(&mut rng), noise.sample(&mut rng)))
        .collect();
    let mut shifted = x.clone();
    shifted.rotate_right(37);
    let a = comb_spectrum(&TimeSeries::complex(x, 0.1).unwrap(), WindowFn::Rectangular).unwrap();
    let b = comb_spectrum(
        &TimeSeries::complex(shifted, 0.1).unwrap(),
        WindowFn::Rectangular,
    )
    .unwrap();
    let scale = a.power.iter().copied().fold(0.0, f64::max);
    for (p, q) in a.power.iter().zip(&b.power) {
        assert!((p - q).abs() <= 1e-9 * scale);
    }
}

#[test]
fn white_noise_rarely_shows_lines() {
    let noise = Normal::new(0.0, 1.0).unwrap();
    let high_floor = SpectrumConfig {
        window: WindowFn::Hann,
        floor_k: 30.0,
        ..Default::default()
    };
    let mut with_lines = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Complex64> = (0..512)
            .map(|_| Complex64::new(noise.sample(&mut rng), noise.sample(&mut rng)))
            .collect();
        let spec = comb_spectrum_with(&TimeSeries::complex(x, 1.0).unwrap(), &high_floor).unwrap();
        if !spec.lines.is_empty() {
            with_lines += 1;
        }
    }
    assert!(
        with_lines <= 2,
        "{with_lines} of 200 noise records produced lines"
    );
}

#[test]
fn intersoliton_period_of_regular_train() {
    let centers: Vec<f64> = (0..6).map(|k| 40.0 + 100.0 * k as f64).collect();
    let x = train(640, &centers, 3.0);
    let ts = complex_series(&x, 0.01);
    let report = classify_regime(&ts, &RegimeThresholds::default());
    assert_eq!(report.pulse_count, 6);
    let periods = report.periods.unwrap();
    assert!((periods.mean - 1.0).abs() < 1e-6);
    assert!(periods.cv < 1e-6);
    assert_eq!(report.label, Regime::Sparse);
}

proptest! {
    #[test]
    fn detection_ignores_positive_scale(
        centers in prop::collection::btree_set(20u32..480, 1..6),
        k in 0.01f64..100.0,
    ) {
        let c: Vec<f64> = centers.iter().map(|&c| c as f64).collect();
        let ts = complex_series(&train(500, &c, 2.0), 1.0);
        prop_assert_eq!(detect_pulses(&ts, 0.5), detect_pulses(&ts.scaled(k), 0.5));
    }

    #[test]
    fn label_scale_invariant_above_floor(
        centers in prop::collection::btree_set(0u32..40, 1..12),
        k in 0.5f64..100.0,
    ) {
        let c: Vec<f64> = centers.iter().map(|&c| 25.0 + 50.0 * c as f64).collect();
        let ts = complex_series(&train(2000, &c, 3.0), 1.0);
        let th = RegimeThresholds::default();
        prop_assert_eq!(classify_regime(&ts, &th).label, classify_regime(&ts.scaled(k), &th).label);
    }

    #[test]
    fn adding_pulses_never_returns_to_sparse(order in Just((0..40u32).collect::<Vec<_>>()).prop_shuffle()) {
        let th = RegimeThresholds::default();
        let mut centers = Vec::new();
        let mut dense_seen = false;
        for slot in order {
            centers.push(25.0 + 50.0 * slot as f64);
            let label = classify_regime(&complex_series(&train(2000, &centers, 3.0), 1.0), &th).label;
            if dense_seen {
                prop_assert_ne!(label, Regime::Sparse);
            }
            dense_seen |= label == Regime::Dense;
        }
    }
}
