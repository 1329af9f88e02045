//! Dual-mode Maxwell-Bloch ring solver.
//!
//! Works in the rotating frame of the reference frequency with the scaled
//! variables, so for mode `m` and spin packet `p`:
//!
//! ```text
//! dF_m/dt + c dF_m/dz = -(gamma_m/2) [ (1 + i theta_m) F_m + 2 C_m sum_p w_mp J_p ]
//! dJ_p/dt             = -(gamma_a/2) [ (1 + i (Delta + delta_p)) J_p - S_p D_p ]
//! dD_p/dt             = -gamma_i     [ D_p - D0/chi + sum_m k_m a_mp Re(F_m^* J_p) ]
//! ```
//!
//! with `S_p = sum_m k_m a_mp F_m`, `k_m = g_m / g_1` and
//! `C_m = C k_m gamma_1 / gamma_m`. For one mode and one packet this is the
//! normalized single-mode system exactly. The modes share the polarization
//! and inversion and have no direct coupling.
//!
//! The laboratory-frame equations carry `omega_m`, `omega_a` in their linear
//! terms; moving to the reference frame turns these into the detunings
//! `theta_m`, `Delta`, and the substitution `J -> iJ` makes the coupling
//! coefficients real.
//!
//! Time stepping: advection is integrated exactly in Fourier space through
//! the integrating factor `exp(-i c k dt / R)`, everything else with
//! classical RK4 (Lawson scheme).

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::analysis::TimeSeries;
use crate::error::{Aborted, Error, Result};
use crate::lle::BLOW_UP_LIMIT;
use crate::params::MbeCoefficients;
use crate::spectral::{mode_numbers, FftPair};

fn default_coupling_ratio() -> f64 {
    1.0
}

fn default_one() -> usize {
    1
}

fn default_margin() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ModeParams {
    pub gamma: f64,
    pub theta: f64,
    #[serde(default = "default_coupling_ratio")]
    pub coupling_ratio: f64,
}

/// Ring discretization. `c_eff = 0` switches advection off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RingGeometry {
    pub grid_points: usize,
    #[serde(default)]
    pub c_eff: f64,
    #[serde(default = "unit_radius")]
    pub radius: f64,
}

fn unit_radius() -> f64 {
    1.0 / TAU
}

impl RingGeometry {
    /// Ring of unit circumference.
    pub fn unit(grid_points: usize, c_eff: f64) -> Self {
        RingGeometry {
            grid_points,
            c_eff,
            radius: unit_radius(),
        }
    }

    pub fn cell(&self) -> f64 {
        TAU * self.radius / self.grid_points as f64
    }

    pub fn round_trip_time(&self) -> f64 {
        TAU * self.radius / self.c_eff
    }
}

/// Which spin packets each signal mode couples to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum SpinSharing {
    #[default]
    Shared,
    /// Packets alternate between the modes (packet `p` belongs to mode `p mod 2`).
    Disjoint,
}

/// Inhomogeneous broadening: `count` packets at the Lorentzian quantiles
/// `width * tan(pi ((p + 1/2)/count - 1/2))`, equal weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct SpinPackets {
    pub count: usize,
    /// Half width of the detuning distribution in units of `Delta`.
    pub width: f64,
    pub sharing: SpinSharing,
}

impl Default for SpinPackets {
    fn default() -> Self {
        SpinPackets {
            count: 1,
            width: 0.0,
            sharing: SpinSharing::Shared,
        }
    }
}

impl SpinPackets {
    pub fn detunings(&self) -> Vec<f64> {
        let m = self.count as f64;
        (0..self.count)
            .map(|p| self.width * (PI * ((p as f64 + 0.5) / m - 0.5)).tan())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MbeConfig {
    pub modes: Vec<ModeParams>,
    pub gamma_a: f64,
    pub gamma_i: f64,
    pub delta: f64,
    #[serde(rename = "C")]
    pub cooperativity: f64,
    pub d0_over_chi: f64,
    pub ring: RingGeometry,
    /// Defaults to `min(0.1 / gamma_max, 0.1 dz / c_eff)`.
    #[serde(default)]
    pub dt: Option<f64>,
    pub t_end: f64,
    #[serde(default)]
    pub spin_packets: SpinPackets,
    #[serde(default)]
    pub noise_seed: u64,
    #[serde(default = "default_one")]
    pub sample_stride: usize,
    #[serde(default)]
    pub snapshot_stride: usize,
    /// Inversion values beyond `|D0/chi| + margin` are reported as warnings.
    #[serde(default = "default_margin")]
    pub inversion_margin: f64,
}

impl MbeConfig {
    /// Single-mode, single-packet homogeneous configuration.
    pub fn single_mode(
        gamma: f64,
        theta: f64,
        gamma_a: f64,
        gamma_i: f64,
        delta: f64,
        cooperativity: f64,
        d0_over_chi: f64,
    ) -> Self {
        MbeConfig {
            modes: vec![ModeParams {
                gamma,
                theta,
                coupling_ratio: 1.0,
            }],
            gamma_a,
            gamma_i,
            delta,
            cooperativity,
            d0_over_chi,
            ring: RingGeometry::unit(1, 0.0),
            dt: None,
            t_end: 1.0,
            spin_packets: SpinPackets::default(),
            noise_seed: 0,
            sample_stride: 1,
            snapshot_stride: 0,
            inversion_margin: 1.0,
        }
    }

    /// Both signal modes from dimensional parameters.
    pub fn from_coefficients(c: &MbeCoefficients, ring: RingGeometry, t_end: f64) -> Self {
        MbeConfig {
            modes: c
                .modes
                .iter()
                .map(|m| ModeParams {
                    gamma: m.gamma,
                    theta: m.theta,
                    coupling_ratio: m.coupling_ratio,
                })
                .collect(),
            gamma_a: c.gamma_a,
            gamma_i: c.gamma_i,
            delta: c.delta,
            cooperativity: c.cooperativity,
            d0_over_chi: c.d0_over_chi,
            ring,
            dt: None,
            t_end,
            spin_packets: SpinPackets::default(),
            noise_seed: 0,
            sample_stride: 1,
            snapshot_stride: 0,
            inversion_margin: 1.0,
        }
    }

    pub fn gamma_max(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| m.gamma)
            .fold(self.gamma_a.max(self.gamma_i), f64::max)
    }

    pub fn time_step(&self) -> f64 {
        if let Some(dt) = self.dt {
            return dt;
        }
        let mut dt = 0.1 / self.gamma_max();
        if self.ring.c_eff > 0.0 {
            dt = dt.min(0.1 * self.ring.cell() / self.ring.c_eff);
        }
        dt
    }

    pub fn step_count(&self) -> u64 {
        (self.t_end / self.time_step()).round() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() || self.modes.len() > 2 {
            return Err(Error::config(format!(
                "mode count must be 1 or 2, got {}",
                self.modes.len()
            )));
        }
        if !self.ring.grid_points.is_power_of_two() {
            return Err(Error::config(format!(
                "grid_points must be a power of two, got {}",
                self.ring.grid_points
            )));
        }
        if self.spin_packets.count == 0 {
            return Err(Error::config("spin_packets.count must be >= 1"));
        }
        if self.spin_packets.sharing == SpinSharing::Disjoint
            && self.modes.len() == 2
            && self.spin_packets.count < 2
        {
            return Err(Error::config(
                "disjoint spin sharing needs at least 2 packets",
            ));
        }
        let dt = self.time_step();
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::config(format!("dt must be > 0, got {dt}")));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::config(format!(
                "t_end must be >= 0, got {}",
                self.t_end
            )));
        }
        for (name, v) in [
            ("gamma_a", self.gamma_a),
            ("gamma_i", self.gamma_i),
            ("delta", self.delta),
            ("C", self.cooperativity),
            ("d0_over_chi", self.d0_over_chi),
            ("ring.c_eff", self.ring.c_eff),
            ("spin_packets.width", self.spin_packets.width),
        ] {
            if !v.is_finite() {
                return Err(Error::config(format!("{name} must be finite")));
            }
        }
        if self.gamma_a < 0.0
            || self.gamma_i < 0.0
            || self.ring.c_eff < 0.0
            || self.cooperativity < 0.0
        {
            return Err(Error::config("rates, cooperativity and c_eff must be >= 0"));
        }
        if !(self.ring.radius > 0.0) {
            return Err(Error::config("ring.radius must be > 0"));
        }
        for (i, m) in self.modes.iter().enumerate() {
            if !(m.gamma >= 0.0 && m.theta.is_finite() && m.coupling_ratio.is_finite()) {
                return Err(Error::config(format!(
                    "mode {i}: gamma must be >= 0, theta and coupling finite"
                )));
            }
        }
        if self.sample_stride == 0 {
            return Err(Error::config("sample_stride must be >= 1"));
        }
        Ok(())
    }
}

/// Field, polarization and inversion on the ring grid, stored row-major
/// (`f[m * n + x]`, `j[p * n + x]`, `d[p * n + x]`).
#[derive(Debug, Clone, PartialEq)]
pub struct MbeState {
    pub grid_points: usize,
    pub f: Vec<Complex64>,
    pub j: Vec<Complex64>,
    pub d: Vec<f64>,
    pub t: f64,
}

impl MbeState {
    pub fn mode_count(&self) -> usize {
        self.f.len() / self.grid_points
    }

    pub fn packet_count(&self) -> usize {
        self.j.len() / self.grid_points
    }

    pub fn field(&self, m: usize) -> &[Complex64] {
        &self.f[m * self.grid_points..(m + 1) * self.grid_points]
    }

    pub fn polarization(&self, p: usize) -> &[Complex64] {
        &self.j[p * self.grid_points..(p + 1) * self.grid_points]
    }

    pub fn inversion(&self, p: usize) -> &[f64] {
        &self.d[p * self.grid_points..(p + 1) * self.grid_points]
    }

    /// Spatial mean of mode `m`.
    pub fn output(&self, m: usize) -> Complex64 {
        self.field(m).iter().sum::<Complex64>() / self.grid_points as f64
    }

    pub fn max_field(&self) -> f64 {
        self.f.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Trivial non-lasing equilibrium `F = J = 0`, `D = D0/chi`.
    pub fn trivial(cfg: &MbeConfig) -> Self {
        let n = cfg.ring.grid_points;
        let packets = cfg.spin_packets.count;
        MbeState {
            grid_points: n,
            f: vec![Complex64::new(0.0, 0.0); cfg.modes.len() * n],
            j: vec![Complex64::new(0.0, 0.0); packets * n],
            d: vec![cfg.d0_over_chi; packets * n],
            t: 0.0,
        }
    }

    /// Spatially uniform state with one value per mode and per packet.
    pub fn uniform(cfg: &MbeConfig, f: &[Complex64], j: Complex64, d: f64) -> Result<Self> {
        if f.len() != cfg.modes.len() {
            return Err(Error::config(format!(
                "expected {} field values, got {}",
                cfg.modes.len(),
                f.len()
            )));
        }
        let n = cfg.ring.grid_points;
        let mut s = Self::trivial(cfg);
        for (m, &v) in f.iter().enumerate() {
            s.f[m * n..(m + 1) * n].iter_mut().for_each(|x| *x = v);
        }
        s.j.iter_mut().for_each(|x| *x = j);
        s.d.iter_mut().for_each(|x| *x = d);
        Ok(s)
    }

    /// Add complex Gaussian noise of standard deviation `amplitude` to every
    /// field sample, or one draw per mode when `homogeneous`.
    pub fn add_field_noise(&mut self, amplitude: f64, seed: u64, homogeneous: bool) -> Result<()> {
        if amplitude <= 0.0 {
            return Ok(());
        }
        let normal = Normal::new(0.0, amplitude).map_err(|e| Error::config(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.grid_points;
        for m in 0..self.mode_count() {
            let row = &mut self.f[m * n..(m + 1) * n];
            if homogeneous {
                let z = Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
                row.iter_mut().for_each(|x| *x += z);
            } else {
                for x in row.iter_mut() {
                    *x += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
                }
            }
        }
        Ok(())
    }

    /// Multiply every field and polarization sample by `exp(i phase)`.
    pub fn rotate_phase(&mut self, phase: f64) {
        let r = Complex64::from_polar(1.0, phase);
        self.f
            .iter_mut()
            .chain(self.j.iter_mut())
            .for_each(|x| *x *= r);
    }

    pub fn check_shape(&self, cfg: &MbeConfig) -> Result<()> {
        let n = cfg.ring.grid_points;
        let packets = cfg.spin_packets.count;
        if self.grid_points != n
            || self.f.len() != cfg.modes.len() * n
            || self.j.len() != packets * n
            || self.d.len() != packets * n
        {
            return Err(Error::config("state shape does not match config"));
        }
        Ok(())
    }

    fn is_finite(&self) -> bool {
        self.f
            .iter()
            .chain(&self.j)
            .all(|x| x.re.is_finite() && x.im.is_finite())
            && self.d.iter().all(|x| x.is_finite())
    }
}

/// Initial-condition generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MbeInit {
    /// Trivial equilibrium plus field noise seeded by `noise_seed`.
    Noise {
        amplitude: f64,
        #[serde(default)]
        homogeneous: bool,
    },
    /// Closed-form CW state (single mode) scaled by `1 + perturbation`.
    FixedPoint {
        #[serde(default)]
        perturbation: f64,
    },
    Uniform {
        field: Vec<[f64; 2]>,
        #[serde(default)]
        polarization: [f64; 2],
        inversion: f64,
    },
}

impl MbeInit {
    pub fn generate(&self, cfg: &MbeConfig) -> Result<MbeState> {
        cfg.validate()?;
        match self {
            MbeInit::Noise {
                amplitude,
                homogeneous,
            } => {
                let mut s = MbeState::trivial(cfg);
                s.add_field_noise(*amplitude, cfg.noise_seed, *homogeneous)?;
                Ok(s)
            }
            MbeInit::FixedPoint { perturbation } => {
                let fp = mbe_cw_fixed_point(cfg)?;
                let k = 1.0 + perturbation;
                MbeState::uniform(cfg, &[fp.field * k], fp.polarization * k, fp.inversion * k)
            }
            MbeInit::Uniform {
                field,
                polarization,
                inversion,
            } => {
                let f: Vec<Complex64> = field.iter().map(|v| Complex64::new(v[0], v[1])).collect();
                MbeState::uniform(
                    cfg,
                    &f,
                    Complex64::new(polarization[0], polarization[1]),
                    *inversion,
                )
            }
        }
    }
}

/// Homogeneous single-mode CW solution `F ~ exp(-i omega t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CwFixedPoint {
    pub intensity: f64,
    /// Real, non-negative field amplitude.
    pub field: Complex64,
    pub polarization: Complex64,
    pub inversion: f64,
    pub lasing: bool,
    /// Carrier angular frequency in the solver frame; zero when `theta = -Delta`.
    pub carrier_frequency: f64,
    /// True when `theta != -Delta`, i.e. the solution oscillates at the
    /// pulled frequency instead of being stationary.
    pub pulled: bool,
}

/// Closed-form CW state of the single-mode homogeneous system.
///
/// Stationarity in a frame rotating at `omega` requires
/// `(1 + i(theta - 2 omega/gamma)) (1 + i(Delta - 2 omega/gamma_a)) = -2 C D`,
/// which fixes `omega = (theta + Delta) / (2/gamma + 2/gamma_a)` and, with
/// `b = theta - 2 omega / gamma`, `D = -(1 + b^2)/(2C)` and
/// `|F|^2 = (1 + b^2) (D0/chi / D - 1)`. For `theta = -Delta` this is the
/// stationary state with `omega = 0`.
pub fn mbe_cw_fixed_point(cfg: &MbeConfig) -> Result<CwFixedPoint> {
    if cfg.modes.len() != 1 || cfg.spin_packets.count != 1 {
        return Err(Error::config(
            "CW fixed point needs a single mode and a single spin packet",
        ));
    }
    let mode = cfg.modes[0];
    let (gamma, gamma_a) = (mode.gamma, cfg.gamma_a);
    let kappa = mode.coupling_ratio;
    let c = cfg.cooperativity * kappa * kappa;
    if !(gamma > 0.0 && gamma_a > 0.0 && c > 0.0 && kappa > 0.0) {
        return Err(Error::domain("fixed point needs gamma, gamma_a, C > 0"));
    }
    let omega = (mode.theta + cfg.delta) / (2.0 / gamma + 2.0 / gamma_a);
    let b = mode.theta - 2.0 * omega / gamma;
    let pulled = mode.theta != -cfg.delta;
    let p = cfg.d0_over_chi;
    // With coupling ratio k: F couples through 2 C k J, J through k F D and
    // D through k Re(F* J), so C enters as C k^2.
    let d_star = -(1.0 + b * b) / (2.0 * c);
    let intensity = (1.0 + b * b) * (p / d_star - 1.0) / (kappa * kappa);
    if !(intensity > 0.0) {
        return Ok(CwFixedPoint {
            intensity: 0.0,
            field: Complex64::new(0.0, 0.0),
            polarization: Complex64::new(0.0, 0.0),
            inversion: p,
            lasing: false,
            carrier_frequency: omega,
            pulled,
        });
    }
    let f = Complex64::new(intensity.sqrt(), 0.0);
    let j = kappa * f * d_star / Complex64::new(1.0, -b);
    Ok(CwFixedPoint {
        intensity,
        field: f,
        polarization: j,
        inversion: d_star,
        lasing: true,
        carrier_frequency: omega,
        pulled,
    })
}

/// Max-norm residual of the homogeneous right-hand side at a CW state, in
/// the frame rotating with its carrier.
pub fn stationary_residual(cfg: &MbeConfig, fp: &CwFixedPoint) -> Result<f64> {
    let state = MbeState::uniform(cfg, &[fp.field], fp.polarization, fp.inversion)?;
    let model = LocalModel::new(cfg);
    let mut out = Derivative::zeros_like(&state);
    model.eval(&state.f, &state.j, &state.d, &mut out);
    let w = Complex64::new(0.0, fp.carrier_frequency);
    let rf = (out.f[0] + w * fp.field).norm();
    let rj = (out.j[0] + w * fp.polarization).norm();
    Ok(rf.max(rj).max(out.d[0].abs()))
}

/// Pointwise (non-advective) part of the right-hand side.
struct LocalModel {
    n: usize,
    /// Per mode: `-(gamma_m/2)(1 + i theta_m)` and `-gamma_m C_m`.
    mode_linear: Vec<Complex64>,
    mode_coupling: Vec<f64>,
    /// `[mode][packet]` field-source weights `w_mp` and packet couplings `k_m a_mp`.
    source_weight: Vec<Vec<f64>>,
    packet_coupling: Vec<Vec<f64>>,
    /// Per packet `-(gamma_a/2)(1 + i(Delta + delta_p))`.
    packet_linear: Vec<Complex64>,
    half_gamma_a: f64,
    gamma_i: f64,
    pump: f64,
}

impl LocalModel {
    fn new(cfg: &MbeConfig) -> Self {
        let modes = cfg.modes.len();
        let packets = cfg.spin_packets.count;
        let gamma_ref = cfg.modes[0].gamma;
        let member = |m: usize, p: usize| -> bool {
            match cfg.spin_packets.sharing {
                SpinSharing::Shared => true,
                SpinSharing::Disjoint => modes == 1 || p % 2 == m,
            }
        };
        let mut source_weight = vec![vec![0.0; packets]; modes];
        let mut packet_coupling = vec![vec![0.0; packets]; modes];
        for m in 0..modes {
            let members = (0..packets).filter(|&p| member(m, p)).count().max(1) as f64;
            for p in 0..packets {
                if member(m, p) {
                    source_weight[m][p] = 1.0 / members;
                    packet_coupling[m][p] = cfg.modes[m].coupling_ratio;
                }
            }
        }
        let mode_coupling = cfg
            .modes
            .iter()
            .map(|md| {
                // gamma_m C_m with C_m = C k_m gamma_1 / gamma_m.
                cfg.cooperativity * md.coupling_ratio * gamma_ref
            })
            .collect();
        LocalModel {
            n: cfg.ring.grid_points,
            mode_linear: cfg
                .modes
                .iter()
                .map(|md| -0.5 * md.gamma * Complex64::new(1.0, md.theta))
                .collect(),
            mode_coupling,
            source_weight,
            packet_coupling,
            packet_linear: cfg
                .spin_packets
                .detunings()
                .iter()
                .map(|dp| -0.5 * cfg.gamma_a * Complex64::new(1.0, cfg.delta + dp))
                .collect(),
            half_gamma_a: 0.5 * cfg.gamma_a,
            gamma_i: cfg.gamma_i,
            pump: cfg.d0_over_chi,
        }
    }

    fn eval(&self, f: &[Complex64], j: &[Complex64], d: &[f64], out: &mut Derivative) {
        let n = self.n;
        let modes = self.mode_linear.len();
        let packets = self.packet_linear.len();
        for x in 0..n {
            for m in 0..modes {
                let mut src = Complex64::new(0.0, 0.0);
                for p in 0..packets {
                    src += self.source_weight[m][p] * j[p * n + x];
                }
                out.f[m * n + x] = self.mode_linear[m] * f[m * n + x] - self.mode_coupling[m] * src;
            }
            for p in 0..packets {
                let jp = j[p * n + x];
                let dp = d[p * n + x];
                let mut drive = Complex64::new(0.0, 0.0);
                let mut exchange = 0.0;
                for m in 0..modes {
                    let k = self.packet_coupling[m][p];
                    if k != 0.0 {
                        let fm = f[m * n + x];
                        drive += k * fm;
                        exchange += k * (fm.conj() * jp).re;
                    }
                }
                out.j[p * n + x] = self.packet_linear[p] * jp + self.half_gamma_a * drive * dp;
                out.d[p * n + x] = -self.gamma_i * (dp - self.pump + exchange);
            }
        }
    }
}

#[derive(Clone)]
struct Derivative {
    f: Vec<Complex64>,
    j: Vec<Complex64>,
    d: Vec<f64>,
}

impl Derivative {
    fn zeros_like(s: &MbeState) -> Self {
        Derivative {
            f: vec![Complex64::new(0.0, 0.0); s.f.len()],
            j: vec![Complex64::new(0.0, 0.0); s.j.len()],
            d: vec![0.0; s.d.len()],
        }
    }
}

/// Reusable stepper.
pub struct MbeSolver {
    cfg: MbeConfig,
    dt: f64,
    model: LocalModel,
    /// `exp(-i c k (dt/2) / R)` per Fourier mode, `None` without advection.
    half_advect: Option<Vec<Complex64>>,
    fft: FftPair,
    k: [Derivative; 4],
    stage: Derivative,
    spec: Vec<Complex64>,
    step_index: u64,
}

impl MbeSolver {
    pub fn new(cfg: &MbeConfig) -> Result<Self> {
        cfg.validate()?;
        let dt = cfg.time_step();
        let n = cfg.ring.grid_points;
        let half_advect = (cfg.ring.c_eff > 0.0 && n > 1).then(|| {
            mode_numbers(n)
                .into_iter()
                .map(|k| {
                    Complex64::from_polar(1.0, -cfg.ring.c_eff * k * 0.5 * dt / cfg.ring.radius)
                })
                .collect()
        });
        let proto = Derivative::zeros_like(&MbeState::trivial(cfg));
        Ok(MbeSolver {
            cfg: cfg.clone(),
            dt,
            model: LocalModel::new(cfg),
            half_advect,
            fft: FftPair::new(n),
            k: [proto.clone(), proto.clone(), proto.clone(), proto.clone()],
            stage: proto,
            spec: vec![Complex64::new(0.0, 0.0); n],
            step_index: 0,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Apply the half-step advection propagator to every field row of `f`.
    fn advect_half(&mut self, f: &mut [Complex64]) {
        let Some(prop) = self.half_advect.as_ref() else {
            return;
        };
        let n = self.cfg.ring.grid_points;
        for row in f.chunks_mut(n) {
            self.spec.copy_from_slice(row);
            self.fft.forward(&mut self.spec);
            for (s, p) in self.spec.iter_mut().zip(prop) {
                *s *= p;
            }
            self.fft.inverse(&mut self.spec);
            row.copy_from_slice(&self.spec);
        }
    }

    /// One Lawson-RK4 step.
    pub fn step(&mut self, s: &mut MbeState) -> Result<()> {
        let dt = self.dt;
        let h = 0.5 * dt;

        // k1 = N(u)
        self.model.eval(&s.f, &s.j, &s.d, &mut self.k[0]);

        // u2 = E_h (u + h k1); k2 = N(u2)
        combine(&mut self.stage, s, &self.k[0], h);
        let mut fbuf = std::mem::take(&mut self.stage.f);
        self.advect_half(&mut fbuf);
        self.stage.f = fbuf;
        self.model
            .eval(&self.stage.f, &self.stage.j, &self.stage.d, &mut self.k[1]);

        // eu = E_h u (field only); u3 = eu + h k2; k3 = N(u3)
        let mut eu = s.f.clone();
        self.advect_half(&mut eu);
        for (o, (a, b)) in self.stage.f.iter_mut().zip(eu.iter().zip(&self.k[1].f)) {
            *o = a + h * b;
        }
        axpy_state(&mut self.stage, s, &self.k[1], h);
        self.model
            .eval(&self.stage.f, &self.stage.j, &self.stage.d, &mut self.k[2]);

        // u4 = E_h (eu + dt k3); k4 = N(u4)
        for (o, (a, b)) in self.stage.f.iter_mut().zip(eu.iter().zip(&self.k[2].f)) {
            *o = a + dt * b;
        }
        let mut fbuf = std::mem::take(&mut self.stage.f);
        self.advect_half(&mut fbuf);
        self.stage.f = fbuf;
        axpy_state(&mut self.stage, s, &self.k[2], dt);
        self.model
            .eval(&self.stage.f, &self.stage.j, &self.stage.d, &mut self.k[3]);

        // u' = E_h [ E_h (u + dt/6 k1) + dt/3 (k2 + k3) ] + dt/6 k4
        let sixth = dt / 6.0;
        let third = dt / 3.0;
        let mut fnew: Vec<Complex64> =
            s.f.iter()
                .zip(&self.k[0].f)
                .map(|(u, k)| u + sixth * k)
                .collect();
        self.advect_half(&mut fnew);
        for (o, (k2, k3)) in fnew.iter_mut().zip(self.k[1].f.iter().zip(&self.k[2].f)) {
            *o += third * (k2 + k3);
        }
        self.advect_half(&mut fnew);
        for (o, k4) in fnew.iter_mut().zip(&self.k[3].f) {
            *o += sixth * k4;
        }
        s.f = fnew;
        let [k1, k2, k3, k4] = &self.k;
        for i in 0..s.j.len() {
            s.j[i] += sixth * (k1.j[i] + 2.0 * (k2.j[i] + k3.j[i]) + k4.j[i]);
            s.d[i] += sixth * (k1.d[i] + 2.0 * (k2.d[i] + k3.d[i]) + k4.d[i]);
        }
        self.step_index += 1;
        s.t += dt;

        if !s.is_finite() {
            return Err(Error::NonFinite {
                step: self.step_index,
            });
        }
        let max = s.max_field();
        if max > BLOW_UP_LIMIT {
            return Err(Error::BlowUp {
                step: self.step_index,
                max_abs: max,
            });
        }
        Ok(())
    }
}

/// `out = u + h k` for all components.
fn combine(out: &mut Derivative, u: &MbeState, k: &Derivative, h: f64) {
    for (o, (a, b)) in out.f.iter_mut().zip(u.f.iter().zip(&k.f)) {
        *o = a + h * b;
    }
    axpy_state(out, u, k, h);
}

/// `out.{j,d} = u.{j,d} + h k.{j,d}`.
fn axpy_state(out: &mut Derivative, u: &MbeState, k: &Derivative, h: f64) {
    for (o, (a, b)) in out.j.iter_mut().zip(u.j.iter().zip(&k.j)) {
        *o = a + h * b;
    }
    for (o, (a, b)) in out.d.iter_mut().zip(u.d.iter().zip(&k.d)) {
        *o = a + h * b;
    }
}

/// One step from `state`.
pub fn mbe_step(state: &MbeState, cfg: &MbeConfig) -> Result<MbeState> {
    state.check_shape(cfg)?;
    if !state.is_finite() {
        return Err(Error::NonFinite { step: 0 });
    }
    let mut next = state.clone();
    MbeSolver::new(cfg)?.step(&mut next)?;
    Ok(next)
}

#[derive(Debug, Clone)]
pub struct MbeRun {
    /// Per-mode spatial-mean amplitude every `sample_stride` steps from `t = 0`.
    pub outputs: Vec<Vec<Complex64>>,
    pub output_dt: f64,
    pub snapshots: Vec<MbeState>,
    pub final_state: MbeState,
    pub steps: u64,
    /// Steps at which some inversion sample left `|D0/chi| + margin`.
    pub inversion_warnings: u64,
}

impl MbeRun {
    pub fn output_series(&self, mode: usize) -> Result<TimeSeries> {
        let data = self
            .outputs
            .get(mode)
            .ok_or_else(|| Error::config(format!("no output channel {mode}")))?;
        TimeSeries::complex(data.clone(), self.output_dt).map(|t| t.with_label(channel_label(mode)))
    }
}

pub fn channel_label(mode: usize) -> &'static str {
    match mode {
        0 => "A",
        1 => "B",
        _ => "?",
    }
}

pub fn run_mbe(cfg: &MbeConfig, init: MbeState) -> std::result::Result<MbeRun, Aborted<MbeRun>> {
    let modes = cfg.modes.len();
    let mut run = MbeRun {
        outputs: vec![Vec::new(); modes],
        output_dt: cfg.time_step() * cfg.sample_stride.max(1) as f64,
        snapshots: Vec::new(),
        final_state: init.clone(),
        steps: 0,
        inversion_warnings: 0,
    };
    let mut solver = match MbeSolver::new(cfg).and_then(|s| init.check_shape(cfg).map(|_| s)) {
        Ok(s) => s,
        Err(error) => {
            return Err(Aborted {
                error,
                partial: run,
            })
        }
    };
    if !init.is_finite() {
        return Err(Aborted {
            error: Error::NonFinite { step: 0 },
            partial: run,
        });
    }
    let bound = cfg.d0_over_chi.abs() + cfg.inversion_margin;
    let mut state = init;
    let record = |run: &mut MbeRun, s: &MbeState| {
        for (m, out) in run.outputs.iter_mut().enumerate() {
            out.push(s.output(m));
        }
    };
    record(&mut run, &state);
    if cfg.snapshot_stride > 0 {
        run.snapshots.push(state.clone());
    }
    let total = cfg.step_count();
    for step in 1..=total {
        if let Err(error) = solver.step(&mut state) {
            run.steps = step - 1;
            run.final_state = state;
            return Err(Aborted {
                error,
                partial: run,
            });
        }
        if state.d.iter().any(|d| d.abs() > bound) {
            if run.inversion_warnings == 0 {
                log::warn!("inversion left |D0/chi| + margin at step {step}");
            }
            run.inversion_warnings += 1;
        }
        if step % cfg.sample_stride as u64 == 0 {
            record(&mut run, &state);
        }
        if cfg.snapshot_stride > 0 && step % cfg.snapshot_stride as u64 == 0 {
            run.snapshots.push(state.clone());
        }
    }
    run.steps = total;
    run.final_state = state;
    Ok(run)
}
