//! Levenberg-Marquardt fit of `A sech((t - t0) / tau) + c` to one pulse.

use serde::{Deserialize, Serialize};

use super::{PulseWindow, TimeSeries};
use crate::error::{Error, Result};

/// Half-maximum point of `sech`: `sech(x) = 1/2` at `x = arccosh(2)`.
pub const ARCCOSH_2: f64 = 1.316_957_896_924_816_6;

const MAX_ITER: usize = 200;
const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseFit {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    pub offset: f64,
    pub rms_residual: f64,
    pub iterations: usize,
}

pub fn fit_sech(ts: &TimeSeries, window: &PulseWindow) -> Result<PulseFit> {
    fit_sech_traced(ts, window).map(|(fit, _)| fit)
}

/// Sample-unit parameters `[A, t0, tau, c]`, with `t0` relative to the window start.
type Params = [f64; 4];

struct Problem<'a> {
    y: &'a [f64],
}

impl Problem<'_> {
    fn cost(&self, p: &Params) -> f64 {
        self.y
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let r = y - model(p, i as f64);
                r * r
            })
            .sum()
    }

    /// Normal equations `J^T J` and `J^T r` at `p`.
    fn normal_equations(&self, p: &Params) -> ([[f64; 4]; 4], [f64; 4]) {
        let mut a = [[0.0; 4]; 4];
        let mut g = [0.0; 4];
        for (i, &y) in self.y.iter().enumerate() {
            let (val, jac) = model_and_jacobian(p, i as f64);
            let r = y - val;
            for row in 0..4 {
                g[row] += jac[row] * r;
                for col in 0..4 {
                    a[row][col] += jac[row] * jac[col];
                }
            }
        }
        (a, g)
    }
}

fn sech(x: f64) -> f64 {
    // cosh overflows near |x| = 710; sech is zero to double precision there.
    if x.abs() > 700.0 {
        0.0
    } else {
        1.0 / x.cosh()
    }
}

fn model(p: &Params, t: f64) -> f64 {
    p[0] * sech((t - p[1]) / p[2]) + p[3]
}

fn model_and_jacobian(p: &Params, t: f64) -> (f64, [f64; 4]) {
    let u = (t - p[1]) / p[2];
    let s = sech(u);
    let th = u.tanh();
    let d_t0 = p[0] * s * th / p[2];
    (p[0] * s + p[3], [s, d_t0, d_t0 * u, 1.0])
}

/// Gaussian elimination with partial pivoting; `None` when a pivot vanishes
/// relative to the matrix scale.
fn solve4(mut m: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    let scale = m.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    for col in 0..4 {
        let piv = (col..4).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() <= 1e-13 * scale {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..4 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let mut acc = b[row];
        for k in row + 1..4 {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn initial_params(y: &[f64]) -> Params {
    let n = y.len();
    let edge = (n / 8).max(2).min(n / 2);
    let mut edges: Vec<f64> = y[..edge].iter().chain(&y[n - edge..]).copied().collect();
    let c = median(&mut edges);
    let (imax, &peak) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("window is non-empty");
    let a = peak - c;
    let half = c + 0.5 * a;
    let crossing = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = imax;
        for i in range {
            if y[i] <= half {
                let (y0, y1) = (y[prev], y[i]);
                let frac = if y0 != y1 {
                    (y0 - half) / (y0 - y1)
                } else {
                    0.0
                };
                return Some(prev as f64 + frac * (i as f64 - prev as f64));
            }
            prev = i;
        }
        None
    };
    let left = crossing(&mut (0..imax).rev());
    let right = crossing(&mut (imax + 1..n));
    let hwhm = match (left, right) {
        (Some(l), Some(r)) => 0.5 * (r - l),
        (Some(l), None) => imax as f64 - l,
        (None, Some(r)) => r - imax as f64,
        (None, None) => n as f64 / 4.0,
    };
    [a, imax as f64, (hwhm / ARCCOSH_2).max(0.5), c]
}

fn to_fit(
    p: &Params,
    ts: &TimeSeries,
    window: &PulseWindow,
    cost: f64,
    n: usize,
    iterations: usize,
) -> PulseFit {
    PulseFit {
        amplitude: p[0],
        center: ts.time(window.start) + p[1] * ts.dt(),
        width: p[2].abs() * ts.dt(),
        offset: p[3],
        rms_residual: (cost / n as f64).sqrt(),
        iterations,
    }
}

/// Starting point used by the fitter, in time units of the series.
pub fn initial_guess(ts: &TimeSeries, window: &PulseWindow) -> Result<PulseFit> {
    let y = window_data(ts, window)?;
    let p = initial_params(&y);
    let cost = Problem { y: &y }.cost(&p);
    Ok(to_fit(&p, ts, window, cost, y.len(), 0))
}

fn window_data(ts: &TimeSeries, window: &PulseWindow) -> Result<Vec<f64>> {
    if window.end > ts.len() || window.start >= window.end {
        return Err(Error::domain(format!(
            "window [{}, {}) outside series of length {}",
            window.start,
            window.end,
            ts.len()
        )));
    }
    if window.len() < 8 {
        return Err(Error::domain(format!(
            "fit window needs at least 8 samples, got {}",
            window.len()
        )));
    }
    Ok(ts.envelope()[window.start..window.end].to_vec())
}

/// Fit and also return the cost after every accepted iteration (first entry
/// is the cost of the initial guess).
pub fn fit_sech_traced(ts: &TimeSeries, window: &PulseWindow) -> Result<(PulseFit, Vec<f64>)> {
    let y = window_data(ts, window)?;
    let problem = Problem { y: &y };
    let mut p = initial_params(&y);
    let mut cost = problem.cost(&p);
    let initial = to_fit(&p, ts, window, cost, y.len(), 0);
    let mut history = vec![cost];
    let mut lambda = LAMBDA_INIT;
    let mut iterations = 0;

    'outer: for _ in 0..MAX_ITER {
        let (a, g) = problem.normal_equations(&p);
        loop {
            let mut m = a;
            for (k, row) in m.iter_mut().enumerate() {
                row[k] += lambda * a[k][k];
            }
            let Some(step) = solve4(m, g) else {
                lambda *= 10.0;
                if lambda > LAMBDA_MAX {
                    if iterations == 0 {
                        return Err(Error::FitFailure {
                            reason: "singular normal equations".into(),
                            initial: Box::new(initial),
                        });
                    }
                    break 'outer;
                }
                continue;
            };
            // Exact data: the system is solvable and nothing is left to reduce.
            if cost == 0.0 {
                break 'outer;
            }
            let trial = [
                p[0] + step[0],
                p[1] + step[1],
                p[2] + step[2],
                p[3] + step[3],
            ];
            let trial_cost = problem.cost(&trial);
            if trial_cost.is_finite() && trial_cost < cost {
                let rel = (cost - trial_cost) / cost;
                let small_step = step
                    .iter()
                    .zip(&p)
                    .all(|(s, v)| s.abs() <= 1e-13 * (v.abs() + 1e-13));
                p = trial;
                cost = trial_cost;
                history.push(cost);
                iterations += 1;
                lambda = (lambda / 10.0).max(1e-12);
                if rel < 1e-15 || small_step {
                    break 'outer;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > LAMBDA_MAX {
                break 'outer;
            }
        }
    }

    if !p.iter().all(|v| v.is_finite()) || p[2] == 0.0 {
        return Err(Error::FitFailure {
            reason: "degenerate width".into(),
            initial: Box::new(initial),
        });
    }
    Ok((to_fit(&p, ts, window, cost, y.len(), iterations), history))
}
