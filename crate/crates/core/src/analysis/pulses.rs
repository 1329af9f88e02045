use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::TimeSeries;

/// Half-open sample range `[start, end)` around one pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PulseWindow {
    pub start: usize,
    pub end: usize,
    /// Index of the envelope maximum inside the window.
    pub peak: usize,
}

impl PulseWindow {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct PulseDetectConfig {
    /// Threshold as a fraction of the envelope maximum.
    pub threshold_frac: f64,
    /// Runs separated by fewer than this many sub-threshold samples are merged.
    pub min_gap: usize,
}

impl Default for PulseDetectConfig {
    fn default() -> Self {
        PulseDetectConfig {
            threshold_frac: 0.5,
            min_gap: 2,
        }
    }
}

pub fn detect_pulses(ts: &TimeSeries, threshold_frac: f64) -> Vec<PulseWindow> {
    detect_pulses_with(
        ts,
        &PulseDetectConfig {
            threshold_frac,
            ..Default::default()
        },
    )
}

pub fn detect_pulses_with(ts: &TimeSeries, cfg: &PulseDetectConfig) -> Vec<PulseWindow> {
    detect_pulses_in_envelope(&ts.envelope(), cfg)
}

/// Threshold the envelope, merge close runs, then widen each run out to the
/// neighbouring local minima.
pub fn detect_pulses_in_envelope(env: &[f64], cfg: &PulseDetectConfig) -> Vec<PulseWindow> {
    let Some(max) = env.iter().copied().reduce(f64::max) else {
        return Vec::new();
    };
    let min = env.iter().copied().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || max - min <= 1e-12 * max {
        return Vec::new();
    }
    let thr = cfg.threshold_frac.clamp(0.0, 1.0) * max;

    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < env.len() {
        if env[i] > thr {
            let s = i;
            while i < env.len() && env[i] > thr {
                i += 1;
            }
            match runs.last_mut() {
                Some(last) if s - last.1 < cfg.min_gap => last.1 = i,
                _ => runs.push((s, i)),
            }
        } else {
            i += 1;
        }
    }

    let mut windows: Vec<PulseWindow> = Vec::with_capacity(runs.len());
    for (s, e) in runs {
        let peak = (s..e)
            .max_by(|&a, &b| env[a].total_cmp(&env[b]).then(b.cmp(&a)))
            .unwrap_or(s);
        // descents smaller than `eps` count as flat, so rounding noise in
        // the tails cannot move a window edge
        let eps = 1e-12 * max;
        let mut start = s;
        while start > 0 && env[start - 1] < env[start] - eps {
            start -= 1;
        }
        let mut end = e;
        while end < env.len() && env[end] < env[end - 1] - eps {
            end += 1;
        }
        // Include the trailing minimum itself.
        end = (end + 1).min(env.len());
        if let Some(prev) = windows.last() {
            start = start.max(prev.end);
        }
        windows.push(PulseWindow { start, end, peak });
    }
    windows
}

/// Peak times of the windows on the series time axis.
pub fn pulse_centers(ts: &TimeSeries, windows: &[PulseWindow]) -> Vec<f64> {
    windows.iter().map(|w| ts.time(w.peak)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodStats {
    pub count: usize,
    pub mean: f64,
    pub std_dev: f64,
    /// Coefficient of variation `std_dev / mean` (population standard deviation).
    pub cv: f64,
}

/// Statistics of consecutive center differences; `None` for fewer than two pulses.
pub fn intersoliton_periods(centers: &[f64]) -> Option<PeriodStats> {
    if centers.len() < 2 {
        return None;
    }
    let diffs: Vec<f64> = centers.windows(2).map(|w| w[1] - w[0]).collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    let std_dev = var.sqrt();
    Some(PeriodStats {
        count: diffs.len(),
        mean,
        std_dev,
        cv: if mean != 0.0 {
            std_dev / mean.abs()
        } else {
            0.0
        },
    })
}
