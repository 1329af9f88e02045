//! Split-step Fourier integrator for the damped, detuned ring equation
//!
//! ```text
//! dF/dt = -F - i theta0 F + i eta (beta/2) d2F/dphi2 + i eta |F|^2 F  [+ drive]
//! ```
//!
//! on `phi in [0, 2 pi)`. One step is Strang-split: half a nonlinear phase
//! rotation, a full exact linear step in Fourier space, another half
//! nonlinear rotation. The drive term is an optional extension (off by
//! default) entering the linear substep as a constant source on mode 0.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::analysis::TimeSeries;
use crate::error::{Aborted, Error, Result};
use crate::params::{NormalizedParams, Sign};
use crate::spectral::{mode_numbers, pad_spectrum, truncate_spectrum, FftPair};

/// Any field amplitude above this aborts the run.
pub const BLOW_UP_LIMIT: f64 = 1e6;

fn default_true() -> bool {
    true
}

fn default_one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LleConfig {
    pub theta0: f64,
    pub eta: Sign,
    pub beta: f64,
    pub grid_points: usize,
    pub dt_bar: f64,
    pub t_bar_end: f64,
    /// Constant drive `[re, im]`; zero disables the extension.
    #[serde(default)]
    pub drive_amplitude: [f64; 2],
    #[serde(default = "default_true")]
    pub loss_enabled: bool,
    /// Test hook: switch the Kerr term off.
    #[serde(default = "default_true")]
    pub nonlinearity_enabled: bool,
    /// Compute the intensity for the Kerr rotation alias-free (3/2 zero padding).
    #[serde(default = "default_true")]
    pub dealias: bool,
    #[serde(default)]
    pub noise_seed: u64,
    /// Record the output functional every this many steps.
    #[serde(default = "default_one")]
    pub sample_stride: usize,
    /// Keep a field snapshot every this many steps; 0 keeps none.
    #[serde(default)]
    pub snapshot_stride: usize,
}

impl LleConfig {
    pub fn new(
        theta0: f64,
        eta: Sign,
        beta: f64,
        grid_points: usize,
        dt_bar: f64,
        t_bar_end: f64,
    ) -> Self {
        LleConfig {
            theta0,
            eta,
            beta,
            grid_points,
            dt_bar,
            t_bar_end,
            drive_amplitude: [0.0, 0.0],
            loss_enabled: true,
            nonlinearity_enabled: true,
            dealias: true,
            noise_seed: 0,
            sample_stride: 1,
            snapshot_stride: 0,
        }
    }

    pub fn from_normalized(
        p: &NormalizedParams,
        grid_points: usize,
        dt_bar: f64,
        t_bar_end: f64,
    ) -> Self {
        Self::new(p.theta0, p.eta, p.beta, grid_points, dt_bar, t_bar_end)
    }

    pub fn drive(&self) -> Complex64 {
        Complex64::new(self.drive_amplitude[0], self.drive_amplitude[1])
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 16 || !self.grid_points.is_power_of_two() {
            return Err(Error::config(format!(
                "grid_points must be a power of two >= 16, got {}",
                self.grid_points
            )));
        }
        if !(self.dt_bar > 0.0 && self.dt_bar.is_finite()) {
            return Err(Error::config(format!(
                "dt_bar must be > 0, got {}",
                self.dt_bar
            )));
        }
        if !(self.t_bar_end >= 0.0 && self.t_bar_end.is_finite()) {
            return Err(Error::config(format!(
                "t_bar_end must be >= 0, got {}",
                self.t_bar_end
            )));
        }
        if !self.theta0.is_finite() || !self.beta.is_finite() {
            return Err(Error::config("theta0 and beta must be finite"));
        }
        if !self.drive_amplitude.iter().all(|x| x.is_finite()) {
            return Err(Error::config("drive_amplitude must be finite"));
        }
        if self.sample_stride == 0 {
            return Err(Error::config("sample_stride must be >= 1"));
        }
        Ok(())
    }

    pub fn step_count(&self) -> u64 {
        (self.t_bar_end / self.dt_bar).round() as u64
    }

    fn loss(&self) -> f64 {
        if self.loss_enabled {
            1.0
        } else {
            0.0
        }
    }
}

/// Field on the uniform ring grid `phi_j = 2 pi j / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RingField {
    pub samples: Vec<Complex64>,
    pub t_bar: f64,
}

impl RingField {
    pub fn zeros(n: usize) -> Self {
        RingField {
            samples: vec![Complex64::new(0.0, 0.0); n],
            t_bar: 0.0,
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> Complex64) -> Self {
        RingField {
            samples: (0..n).map(|j| f(TAU * j as f64 / n as f64)).collect(),
            t_bar: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Discrete squared L2 norm `(2 pi / N) sum |F_j|^2`.
    pub fn norm_sqr(&self) -> f64 {
        TAU / self.len() as f64 * self.samples.iter().map(|x| x.norm_sqr()).sum::<f64>()
    }

    /// Spatial mean, the single-antenna readout.
    pub fn mean(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() / self.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Shift the field by `cells` grid cells (periodically).
    pub fn rotated(&self, cells: usize) -> RingField {
        let mut s = self.samples.clone();
        s.rotate_right(cells % self.len().max(1));
        RingField {
            samples: s,
            t_bar: self.t_bar,
        }
    }
}

/// Shortest signed distance between two angles on the ring.
pub fn wrapped_distance(phi: f64, center: f64) -> f64 {
    let d = (phi - center).rem_euclid(TAU);
    if d > TAU / 2.0 {
        d - TAU
    } else {
        d
    }
}

/// Initial-condition generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LleInit {
    Zero,
    /// Homogeneous field plus complex Gaussian noise of standard deviation `noise`.
    CwNoise {
        amplitude: [f64; 2],
        #[serde(default)]
        noise: f64,
    },
    /// `A sech(d / w) exp(i phase)` with `d` the wrapped distance to `center`;
    /// `w` defaults to `sqrt(beta) / A`.
    Sech {
        amplitude: f64,
        #[serde(default)]
        center: f64,
        #[serde(default)]
        width: Option<f64>,
        #[serde(default)]
        phase: f64,
    },
    /// Single Fourier mode `A exp(i k phi)`.
    Mode {
        k: i64,
        amplitude: f64,
    },
}

impl LleInit {
    pub fn generate(&self, cfg: &LleConfig) -> Result<RingField> {
        let n = cfg.grid_points;
        match *self {
            LleInit::Zero => Ok(RingField::zeros(n)),
            LleInit::CwNoise { amplitude, noise } => {
                let base = Complex64::new(amplitude[0], amplitude[1]);
                let mut field = RingField::from_fn(n, |_| base);
                if noise > 0.0 {
                    let normal =
                        Normal::new(0.0, noise).map_err(|e| Error::config(e.to_string()))?;
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.noise_seed);
                    for x in &mut field.samples {
                        *x += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
                    }
                }
                Ok(field)
            }
            LleInit::Sech {
                amplitude,
                center,
                width,
                phase,
            } => {
                let w = width.unwrap_or_else(|| cfg.beta.abs().sqrt() / amplitude.abs());
                if !(w > 0.0 && w.is_finite()) {
                    return Err(Error::config("sech width must be > 0"));
                }
                let rot = Complex64::from_polar(1.0, phase);
                Ok(RingField::from_fn(n, |phi| {
                    rot * (amplitude / (wrapped_distance(phi, center) / w).cosh())
                }))
            }
            LleInit::Mode { k, amplitude } => Ok(RingField::from_fn(n, |phi| {
                Complex64::from_polar(amplitude, k as f64 * phi)
            })),
        }
    }
}

struct Dealiaser {
    fine: FftPair,
    buf: Vec<Complex64>,
    coarse_spec: Vec<Complex64>,
}

/// Reusable solver state: FFT plans and the precomputed linear propagator.
pub struct LleSolver {
    cfg: LleConfig,
    eta: f64,
    /// `exp(L_k dt)` per mode in FFT order.
    propagator: Vec<Complex64>,
    /// Mode-0 source increment over one step, already scaled by `N`.
    drive_increment: Complex64,
    fft: FftPair,
    dealias: Option<Dealiaser>,
    spec: Vec<Complex64>,
    intensity: Vec<f64>,
    step_index: u64,
}

impl LleSolver {
    pub fn new(cfg: &LleConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.grid_points;
        let eta = cfg.eta.value();
        let dt = cfg.dt_bar;
        let propagator = mode_numbers(n)
            .into_iter()
            .map(|k| linear_rate(cfg, k) * dt)
            .map(Complex64::exp)
            .collect();
        let l0 = linear_rate(cfg, 0.0);
        let drive = cfg.drive();
        let drive_increment = if drive == Complex64::new(0.0, 0.0) {
            Complex64::new(0.0, 0.0)
        } else if l0.norm() == 0.0 {
            drive * dt * n as f64
        } else {
            drive * n as f64 * ((l0 * dt).exp() - 1.0) / l0
        };
        let dealias = cfg.dealias.then(|| {
            let m = 3 * n / 2;
            Dealiaser {
                fine: FftPair::new(m),
                buf: vec![Complex64::new(0.0, 0.0); m],
                coarse_spec: vec![Complex64::new(0.0, 0.0); n],
            }
        });
        Ok(LleSolver {
            cfg: cfg.clone(),
            eta,
            propagator,
            drive_increment,
            fft: FftPair::new(n),
            dealias,
            spec: vec![Complex64::new(0.0, 0.0); n],
            intensity: vec![0.0; n],
            step_index: 0,
        })
    }

    pub fn config(&self) -> &LleConfig {
        &self.cfg
    }

    pub fn steps_taken(&self) -> u64 {
        self.step_index
    }

    fn compute_intensity(&mut self, field: &[Complex64]) {
        let n = field.len();
        match self.dealias.as_mut() {
            None => {
                for (i, x) in self.intensity.iter_mut().zip(field) {
                    *i = x.norm_sqr();
                }
            }
            Some(d) => {
                let m = d.buf.len();
                d.coarse_spec.copy_from_slice(field);
                self.fft.forward(&mut d.coarse_spec);
                pad_spectrum(&d.coarse_spec, &mut d.buf);
                let up = m as f64 / n as f64;
                for x in d.buf.iter_mut() {
                    *x *= up;
                }
                d.fine.inverse(&mut d.buf);
                for x in d.buf.iter_mut() {
                    *x = Complex64::new(x.norm_sqr(), 0.0);
                }
                d.fine.forward(&mut d.buf);
                truncate_spectrum(&d.buf, &mut d.coarse_spec);
                // the fine -n/2 mode carries the alias of mode n
                d.coarse_spec[n / 2] = Complex64::new(0.0, 0.0);
                let down = n as f64 / m as f64;
                for x in d.coarse_spec.iter_mut() {
                    *x *= down;
                }
                self.fft.inverse(&mut d.coarse_spec);
                for (i, x) in self.intensity.iter_mut().zip(&d.coarse_spec) {
                    *i = x.re;
                }
            }
        }
    }

    fn nonlinear_half(&mut self, field: &mut [Complex64]) {
        if !self.cfg.nonlinearity_enabled {
            return;
        }
        self.compute_intensity(field);
        let h = 0.5 * self.cfg.dt_bar * self.eta;
        for (x, &i) in field.iter_mut().zip(&self.intensity) {
            *x *= Complex64::from_polar(1.0, h * i);
        }
    }

    fn linear_full(&mut self, field: &mut [Complex64]) {
        self.spec.copy_from_slice(field);
        self.fft.forward(&mut self.spec);
        for (s, p) in self.spec.iter_mut().zip(&self.propagator) {
            *s *= p;
        }
        self.spec[0] += self.drive_increment;
        self.fft.inverse(&mut self.spec);
        field.copy_from_slice(&self.spec);
    }

    /// Advance `field` by one step of `dt_bar`.
    pub fn step(&mut self, field: &mut RingField) -> Result<()> {
        if field.len() != self.cfg.grid_points {
            return Err(Error::config(format!(
                "field has {} samples, config expects {}",
                field.len(),
                self.cfg.grid_points
            )));
        }
        self.nonlinear_half(&mut field.samples);
        self.linear_full(&mut field.samples);
        self.nonlinear_half(&mut field.samples);
        self.step_index += 1;
        field.t_bar += self.cfg.dt_bar;
        check_field(&field.samples, self.step_index)
    }
}

fn linear_rate(cfg: &LleConfig, k: f64) -> Complex64 {
    Complex64::new(
        -cfg.loss(),
        -cfg.theta0 - cfg.eta.value() * cfg.beta * k * k / 2.0,
    )
}

pub(crate) fn check_field(samples: &[Complex64], step: u64) -> Result<()> {
    let mut max = 0.0f64;
    for x in samples {
        if !(x.re.is_finite() && x.im.is_finite()) {
            return Err(Error::NonFinite { step });
        }
        max = max.max(x.norm());
    }
    if max > BLOW_UP_LIMIT {
        return Err(Error::BlowUp { step, max_abs: max });
    }
    Ok(())
}

/// One step from `state`, returning the new field.
pub fn lle_step(state: &RingField, cfg: &LleConfig) -> Result<RingField> {
    if !state
        .samples
        .iter()
        .all(|x| x.re.is_finite() && x.im.is_finite())
    {
        return Err(Error::NonFinite { step: 0 });
    }
    let mut solver = LleSolver::new(cfg)?;
    let mut next = state.clone();
    solver.step(&mut next)?;
    Ok(next)
}

#[derive(Debug, Clone)]
pub struct LleRun {
    pub snapshots: Vec<RingField>,
    /// Spatial mean of the field every `sample_stride` steps, starting at `t = 0`.
    pub output: Vec<Complex64>,
    pub output_dt: f64,
    pub final_field: RingField,
    pub steps: u64,
}

impl LleRun {
    pub fn output_series(&self) -> Result<TimeSeries> {
        TimeSeries::complex(self.output.clone(), self.output_dt).map(|t| t.with_label("F"))
    }
}

/// Integrate from `init` to `t_bar_end`.
pub fn run_lle(cfg: &LleConfig, init: RingField) -> std::result::Result<LleRun, Aborted<LleRun>> {
    let mut run = LleRun {
        snapshots: Vec::new(),
        output: Vec::new(),
        output_dt: cfg.dt_bar * cfg.sample_stride.max(1) as f64,
        final_field: init.clone(),
        steps: 0,
    };
    let mut solver = match LleSolver::new(cfg) {
        Ok(s) => s,
        Err(error) => {
            return Err(Aborted {
                error,
                partial: run,
            })
        }
    };
    if let Err(error) = check_field(&init.samples, 0) {
        return Err(Aborted {
            error,
            partial: run,
        });
    }
    let mut field = init;
    if cfg.snapshot_stride > 0 {
        run.snapshots.push(field.clone());
    }
    run.output.push(field.mean());
    let total = cfg.step_count();
    for step in 1..=total {
        if let Err(error) = solver.step(&mut field) {
            run.steps = step - 1;
            run.final_field = field;
            return Err(Aborted {
                error,
                partial: run,
            });
        }
        if step % cfg.sample_stride as u64 == 0 {
            run.output.push(field.mean());
        }
        if cfg.snapshot_stride > 0 && step % cfg.snapshot_stride as u64 == 0 {
            run.snapshots.push(field.clone());
        }
    }
    run.steps = total;
    run.final_field = field;
    Ok(run)
}

/// Residual of the homogeneous right-hand side at a constant field value.
pub fn cw_residual(cfg: &LleConfig, f: Complex64) -> f64 {
    let i = Complex64::i();
    let rhs =
        -(cfg.loss() + i * cfg.theta0) * f + i * cfg.eta.value() * f.norm_sqr() * f + cfg.drive();
    rhs.norm()
}

/// Homogeneous steady states.
///
/// With drive `d`, a state `F` has intensity `I = |F|^2` solving
/// `I ((l)^2 + (theta0 - eta I)^2) = |d|^2` (`l` = 1 with loss, 0 without) and
/// `F = d / (l + i theta0 - i eta I)`.
pub fn lle_cw_states(cfg: &LleConfig) -> Vec<Complex64> {
    let d = cfg.drive();
    let l = cfg.loss();
    let eta = cfg.eta.value();
    let theta0 = cfg.theta0;
    if d.norm() == 0.0 {
        let mut states = vec![Complex64::new(0.0, 0.0)];
        if l == 0.0 && eta * theta0 > 0.0 {
            states.push(Complex64::new((eta * theta0).sqrt(), 0.0));
        }
        return states;
    }
    let d2 = d.norm_sqr();
    // I^3 - 2 eta theta0 I^2 + (l^2 + theta0^2) I - |d|^2 = 0
    let b = -2.0 * eta * theta0;
    let c = l * l + theta0 * theta0;
    let mut states: Vec<Complex64> = Vec::new();
    for root in real_cubic_roots(b, c, -d2) {
        if root <= 0.0 {
            continue;
        }
        let mut intensity = root;
        // Newton polish on the cubic.
        for _ in 0..4 {
            let p = ((intensity + b) * intensity + c) * intensity - d2;
            let dp = (3.0 * intensity + 2.0 * b) * intensity + c;
            if dp == 0.0 {
                break;
            }
            intensity -= p / dp;
        }
        let mut f = d / Complex64::new(l, theta0 - eta * intensity);
        // Polish the field itself with complex Newton steps on the residual.
        for _ in 0..3 {
            f = polish_cw(cfg, f);
        }
        if !states
            .iter()
            .any(|s| (s - f).norm() <= 1e-9 * (1.0 + f.norm()))
        {
            states.push(f);
        }
    }
    states.sort_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()));
    states
}

/// One Newton step on `G(F) = -(l + i theta0) F + i eta |F|^2 F + d` treated as
/// a map on `(Re F, Im F)`.
fn polish_cw(cfg: &LleConfig, f: Complex64) -> Complex64 {
    let i = Complex64::i();
    let eta = cfg.eta.value();
    let a = Complex64::new(cfg.loss(), cfg.theta0);
    let g = -a * f + i * eta * f.norm_sqr() * f + cfg.drive();
    // dG = -a dF + i eta (2 |F|^2 dF + F^2 conj(dF))
    let p = -a + i * eta * 2.0 * f.norm_sqr();
    let q = i * eta * f * f;
    // G(F + dF) ~ G + p dF + q conj(dF) = 0; solve the 2x2 real system.
    let (m11, m12) = (p.re + q.re, -p.im + q.im);
    let (m21, m22) = (p.im + q.im, p.re - q.re);
    let det = m11 * m22 - m12 * m21;
    if det.abs() < 1e-300 {
        return f;
    }
    let dx = (-g.re * m22 + g.im * m12) / det;
    let dy = (-m11 * g.im + m21 * g.re) / det;
    f + Complex64::new(dx, dy)
}

/// Real roots of `x^3 + b x^2 + c x + d`.
fn real_cubic_roots(b: f64, c: f64, d: f64) -> Vec<f64> {
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let mut roots = if disc > 0.0 {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt()]
    } else if p == 0.0 {
        vec![0.0]
    } else {
        let r = (-p / 3.0).sqrt();
        let arg = (3.0 * q / (2.0 * p) / r).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| 2.0 * r * (phi - TAU * k as f64 / 3.0).cos())
            .collect()
    };
    for x in roots.iter_mut() {
        *x -= shift;
    }
    roots.sort_by(f64::total_cmp);
    roots
}
