//! Maser parameters and the rescaling chain from dimensional Maxwell-Bloch
//! rates to the normalized system and the Lugiato-Lefever coefficients.
//!
//! Conventions: every rate and angular frequency is in rad/s, frequencies
//! passed to [`thermal_occupation`] and the pump helpers are in Hz, powers in W.
//! Detunings are measured against the reference frame `omega_0`:
//! `Omega = omega_0 - omega_m` and `Omega_a = omega_0 - omega_a`.

use std::f64::consts::PI;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Whispering-gallery modes of the sapphire resonator (Hz).
///
/// The readout mode A frequency appears once elsewhere as 12.03813 GHz; the
/// tabulated 12.03812 GHz is used here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ModeTable {
    pub version: u32,
    pub pump_1_hz: f64,
    pub pump_2_hz: f64,
    pub readout_a_hz: f64,
    pub readout_b_hz: f64,
}

pub const MODE_TABLE_VERSION: u32 = 1;

pub const MODE_TABLE: ModeTable = ModeTable {
    version: MODE_TABLE_VERSION,
    pump_1_hz: 31.337_71e9,
    pump_2_hz: 31.339_74e9,
    readout_a_hz: 12.038_12e9,
    readout_b_hz: 12.029_79e9,
};

/// Dimensional parameters of the dual-mode maser.
///
/// The derived rates `gamma_i`, `gamma_a` and the pump parameter `d0` are
/// computed on demand from the three TLS rates and are never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Spin transition angular frequency.
    pub omega_a: f64,
    /// Signal-mode angular frequencies (modes A and B).
    pub omega_m: [f64; 2],
    /// Spin-photon couplings.
    pub g_m: [f64; 2],
    /// Photonic loss rates.
    pub gamma_m: [f64; 2],
    /// TLS emission rate.
    pub gamma_e: f64,
    /// TLS decoherence rate.
    pub gamma_d: f64,
    /// TLS pump rate.
    pub gamma_p: f64,
    /// Effective light velocity in the resonator (m/s).
    pub c_eff: f64,
    /// Ring radius (m).
    pub radius: f64,
    /// Reference frame angular frequency; defaults to `omega_a`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_0: Option<f64>,
}

impl PhysicalParams {
    /// Illustrative parameter set, above the lasing threshold with
    /// `gamma_m << gamma_a`. Not fitted to any measurement.
    ///
    /// The spin-transition frequency sits 1 MHz above readout mode A and the
    /// reference frame is the mode-A frame, so both detunings are nonzero.
    pub fn illustrative() -> Self {
        let two_pi = 2.0 * PI;
        let omega_a_mode = two_pi * MODE_TABLE.readout_a_hz;
        PhysicalParams {
            omega_a: omega_a_mode + two_pi * 1.0e6,
            omega_m: [omega_a_mode, two_pi * MODE_TABLE.readout_b_hz],
            g_m: [two_pi * 2.0e4, two_pi * 1.8e4],
            gamma_m: [two_pi * 120.0, two_pi * 120.0],
            gamma_e: two_pi * 6.0e5,
            gamma_d: two_pi * 1.0e5,
            gamma_p: two_pi * 3.0e5,
            c_eff: 1.0e8,
            radius: 0.025,
            omega_0: Some(omega_a_mode),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega_a", self.omega_a),
            ("omega_m[0]", self.omega_m[0]),
            ("omega_m[1]", self.omega_m[1]),
            ("g_m[0]", self.g_m[0]),
            ("g_m[1]", self.g_m[1]),
            ("gamma_m[0]", self.gamma_m[0]),
            ("gamma_m[1]", self.gamma_m[1]),
            ("gamma_e", self.gamma_e),
            ("gamma_d", self.gamma_d),
            ("gamma_p", self.gamma_p),
            ("c_eff", self.c_eff),
            ("radius", self.radius),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if let Some(w0) = self.omega_0 {
            if !w0.is_finite() {
                return Err(Error::domain("omega_0 must be finite"));
            }
        }
        Ok(())
    }

    pub fn gamma_i(&self) -> f64 {
        self.gamma_p + self.gamma_d
    }

    pub fn gamma_a(&self) -> f64 {
        self.gamma_p + self.gamma_d + self.gamma_e
    }

    /// Pump parameter `(gamma_p - gamma_d) / (gamma_p + gamma_d)`.
    pub fn d0(&self) -> f64 {
        (self.gamma_p - self.gamma_d) / (self.gamma_p + self.gamma_d)
    }

    pub fn omega_0(&self) -> f64 {
        self.omega_0.unwrap_or(self.omega_a)
    }

    /// Mode detuning `omega_0 - omega_m` for `mode_index` 1 or 2.
    pub fn mode_detuning(&self, mode_index: usize) -> Result<f64> {
        let m = mode_slot(mode_index)?;
        Ok(self.omega_0() - self.omega_m[m])
    }

    pub fn atomic_detuning(&self) -> f64 {
        self.omega_0() - self.omega_a
    }
}

fn mode_slot(mode_index: usize) -> Result<usize> {
    match mode_index {
        1 | 2 => Ok(mode_index - 1),
        _ => Err(Error::domain(format!(
            "mode index must be 1 or 2, got {mode_index}"
        ))),
    }
}

/// Field, polarization and inversion scalings `F -> F zeta`, `J -> J xi`,
/// `D -> D chi` together with the cooperativity they were derived for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ScalingConstants {
    pub zeta: f64,
    pub xi: f64,
    pub chi: f64,
    #[serde(rename = "C")]
    pub cooperativity: f64,
}

/// Coefficients multiplying the coupling terms after rescaling.
///
/// With the derived constants these are `-2C`, `1` and `1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct RescaledCoefficients {
    /// `2 g xi / (gamma zeta)`
    pub field: f64,
    /// `2 g chi zeta / (gamma_a xi)`
    pub polarization: f64,
    /// `2 g xi zeta / (gamma_i chi)`
    pub inversion: f64,
}

/// Relative residuals of the three constraint identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ConstraintResiduals {
    pub field: f64,
    pub polarization: f64,
    pub inversion: f64,
}

impl ConstraintResiduals {
    pub fn max(&self) -> f64 {
        self.field.max(self.polarization).max(self.inversion)
    }
}

impl ScalingConstants {
    pub fn coefficients(
        &self,
        g: f64,
        gamma: f64,
        gamma_a: f64,
        gamma_i: f64,
    ) -> RescaledCoefficients {
        RescaledCoefficients {
            field: 2.0 * g * self.xi / (gamma * self.zeta),
            polarization: 2.0 * g * self.chi * self.zeta / (gamma_a * self.xi),
            inversion: 2.0 * g * self.xi * self.zeta / (gamma_i * self.chi),
        }
    }

    pub fn residuals(&self, g: f64, gamma: f64, gamma_a: f64, gamma_i: f64) -> ConstraintResiduals {
        let c = self.coefficients(g, gamma, gamma_a, gamma_i);
        let target_field = -2.0 * self.cooperativity;
        ConstraintResiduals {
            field: ((c.field - target_field) / target_field).abs(),
            polarization: (c.polarization - 1.0).abs(),
            inversion: ((c.inversion - 0.5) / 0.5).abs(),
        }
    }
}

/// Solve the three constraint identities for `zeta`, `xi`, `chi`.
pub fn derive_scalings(
    g: f64,
    gamma: f64,
    gamma_a: f64,
    gamma_i: f64,
    cooperativity: f64,
) -> Result<ScalingConstants> {
    for (name, v) in [
        ("g", g),
        ("gamma", gamma),
        ("gamma_a", gamma_a),
        ("gamma_i", gamma_i),
        ("C", cooperativity),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::domain(format!(
                "{name} must be finite and > 0, got {v}"
            )));
        }
    }
    let root = (gamma_i * gamma_a / 2.0).sqrt();
    Ok(ScalingConstants {
        zeta: -root / (2.0 * g),
        xi: cooperativity * gamma / (2.0 * g * g) * root,
        chi: -cooperativity * gamma * gamma_a / (2.0 * g * g),
        cooperativity,
    })
}

/// Sign `-|x|/x` of the nonlinear and dispersive terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(into = "i8", try_from = "i8")]
#[schemars(with = "i8")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// `eta = -|delta| / delta`.
    pub fn from_detuning(delta: f64) -> Result<Self> {
        if delta == 0.0 || !delta.is_finite() {
            return Err(Error::SingularDetuning);
        }
        Ok(if delta > 0.0 { Sign::Minus } else { Sign::Plus })
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(format!("sign must be +1 or -1, got {v}")),
        }
    }
}

/// Dimensionless parameters of the normalized system and the LLE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct NormalizedParams {
    /// `2 Omega / gamma`
    pub theta: f64,
    /// `2 Omega_a / gamma_a`
    pub delta: f64,
    #[serde(rename = "C")]
    pub cooperativity: f64,
    pub d0_over_chi: f64,
    pub eta: Sign,
    /// `theta - 2C / delta`
    pub theta0: f64,
    pub beta: f64,
    pub scalings: ScalingConstants,
}

/// Convert physical parameters for one signal mode into normalized form.
pub fn to_normalized(
    phys: &PhysicalParams,
    mode_index: usize,
    cooperativity: f64,
) -> Result<NormalizedParams> {
    phys.validate()?;
    let m = mode_slot(mode_index)?;
    let gamma = phys.gamma_m[m];
    let gamma_a = phys.gamma_a();
    let omega = phys.omega_0() - phys.omega_m[m];
    let omega_a = phys.atomic_detuning();
    if omega_a == 0.0 {
        return Err(Error::SingularDetuning);
    }
    let scalings = derive_scalings(phys.g_m[m], gamma, gamma_a, phys.gamma_i(), cooperativity)?;
    let theta = 2.0 * omega / gamma;
    let delta = 2.0 * omega_a / gamma_a;
    let eta = Sign::from_detuning(delta)?;
    Ok(NormalizedParams {
        theta,
        delta,
        cooperativity,
        d0_over_chi: phys.d0() / scalings.chi,
        eta,
        theta0: theta - 2.0 * cooperativity / delta,
        beta: dispersion_coefficient(cooperativity, gamma_a, phys.c_eff, omega_a, phys.radius)?,
        scalings,
    })
}

/// Per-mode coefficients of the normalized dual-mode system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ModeCoefficients {
    pub gamma: f64,
    /// `2 Omega_m / gamma_m`
    pub theta: f64,
    /// `g_m / g_1`
    pub coupling_ratio: f64,
}

/// Coefficients of the normalized Maxwell-Bloch system for both signal
/// modes, with mode 1 as the scaling reference. Unlike [`to_normalized`] this
/// accepts a vanishing atomic detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct MbeCoefficients {
    pub modes: [ModeCoefficients; 2],
    pub gamma_a: f64,
    pub gamma_i: f64,
    /// `2 Omega_a / gamma_a`
    pub delta: f64,
    #[serde(rename = "C")]
    pub cooperativity: f64,
    pub d0_over_chi: f64,
    pub scalings: ScalingConstants,
}

pub fn mbe_coefficients(phys: &PhysicalParams, cooperativity: f64) -> Result<MbeCoefficients> {
    phys.validate()?;
    let gamma_a = phys.gamma_a();
    let scalings = derive_scalings(
        phys.g_m[0],
        phys.gamma_m[0],
        gamma_a,
        phys.gamma_i(),
        cooperativity,
    )?;
    let mode = |m: usize| ModeCoefficients {
        gamma: phys.gamma_m[m],
        theta: 2.0 * (phys.omega_0() - phys.omega_m[m]) / phys.gamma_m[m],
        coupling_ratio: phys.g_m[m] / phys.g_m[0],
    };
    Ok(MbeCoefficients {
        modes: [mode(0), mode(1)],
        gamma_a,
        gamma_i: phys.gamma_i(),
        delta: 2.0 * phys.atomic_detuning() / gamma_a,
        cooperativity,
        d0_over_chi: phys.d0() / scalings.chi,
        scalings,
    })
}

/// `beta = 2 C gamma_a c^2 / (|Omega_a|^3 R^2)`.
pub fn dispersion_coefficient(
    cooperativity: f64,
    gamma_a: f64,
    c_eff: f64,
    omega_a: f64,
    radius: f64,
) -> Result<f64> {
    if radius <= 0.0 {
        return Err(Error::domain(format!("radius must be > 0, got {radius}")));
    }
    if omega_a == 0.0 {
        return Err(Error::SingularDetuning);
    }
    Ok(2.0 * cooperativity * gamma_a * c_eff * c_eff / (omega_a.abs().powi(3) * radius * radius))
}

/// Excited-state occupation `1 / (exp(h nu / k_B T) + 1)`.
pub fn thermal_occupation(nu_hz: f64, temperature_k: f64) -> Result<f64> {
    if !(temperature_k > 0.0) {
        return Err(Error::domain(format!(
            "temperature must be > 0 K, got {temperature_k}"
        )));
    }
    if !(nu_hz > 0.0) {
        return Err(Error::domain(format!(
            "frequency must be > 0 Hz, got {nu_hz}"
        )));
    }
    let x = PLANCK * nu_hz / (BOLTZMANN * temperature_k);
    let e = (-x).exp();
    Ok(e / (1.0 + e))
}

/// Shape of the pump-mode response versus pump detuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum PumpLineshape {
    #[default]
    Lorentzian,
    Gaussian,
}

/// Map from incident pump power and detuning to the pump parameter `D0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PumpModel {
    #[serde(default)]
    pub lineshape: PumpLineshape,
    /// Pump-mode linewidth (Hz).
    pub fwhm_hz: f64,
    /// Delivered power at which `D0` reaches half of `d0_max` (W).
    pub sat_power_w: f64,
    pub d0_max: f64,
}

impl PumpModel {
    pub fn delivered(&self, p_pump: f64, detuning_hz: f64) -> Result<f64> {
        match self.lineshape {
            PumpLineshape::Lorentzian => pump_delivery(p_pump, detuning_hz, self.fwhm_hz),
            PumpLineshape::Gaussian => {
                check_delivery_args(p_pump, self.fwhm_hz)?;
                let x = detuning_hz / self.fwhm_hz;
                Ok(p_pump * (-4.0 * std::f64::consts::LN_2 * x * x).exp())
            }
        }
    }

    pub fn d0(&self, p_pump: f64, detuning_hz: f64) -> Result<f64> {
        pump_to_d0(
            self.delivered(p_pump, detuning_hz)?,
            self.sat_power_w,
            self.d0_max,
        )
    }
}

fn check_delivery_args(p_pump: f64, fwhm: f64) -> Result<()> {
    if !(fwhm > 0.0) {
        return Err(Error::domain(format!(
            "pump linewidth must be > 0, got {fwhm}"
        )));
    }
    if !(p_pump >= 0.0) {
        return Err(Error::domain(format!(
            "pump power must be >= 0, got {p_pump}"
        )));
    }
    Ok(())
}

/// Power delivered to the pump transition through a Lorentzian pump mode:
/// `p / (1 + (2 df / fwhm)^2)`.
pub fn pump_delivery(p_pump: f64, detuning_hz: f64, fwhm_hz: f64) -> Result<f64> {
    check_delivery_args(p_pump, fwhm_hz)?;
    let x = 2.0 * detuning_hz / fwhm_hz;
    Ok(p_pump / (1.0 + x * x))
}

/// Saturating map `d0_max p / (p + p_sat)`.
pub fn pump_to_d0(delivered_w: f64, sat_power_w: f64, d0_max: f64) -> Result<f64> {
    if !(sat_power_w > 0.0) {
        return Err(Error::domain(format!(
            "saturation power must be > 0, got {sat_power_w}"
        )));
    }
    if !(delivered_w >= 0.0) {
        return Err(Error::domain(format!(
            "delivered power must be >= 0, got {delivered_w}"
        )));
    }
    if !(d0_max.abs() < 1.0) {
        return Err(Error::domain(format!("|d0_max| must be < 1, got {d0_max}")));
    }
    if delivered_w.is_infinite() {
        return Ok(d0_max);
    }
    Ok(d0_max * delivered_w / (delivered_w + sat_power_w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn derive_scalings_worked_examples() {
        let s = derive_scalings(1.0, 5.0, 4.0, 2.0, 3.0).unwrap();
        assert!(close(s.zeta, -1.0, 1e-15));
        assert!(close(s.xi, 15.0, 1e-15));
        assert!(close(s.chi, -30.0, 1e-15));
        let c = s.coefficients(1.0, 5.0, 4.0, 2.0);
        assert!(close(c.field, -6.0, 1e-15));
        assert!(close(c.polarization, 1.0, 1e-15));
        assert!(close(c.inversion, 0.5, 1e-15));

        let s = derive_scalings(1.0, 2.0, 2.0, 1.0, 1.0).unwrap();
        assert!(close(s.zeta, -0.5, 1e-15));
        assert!(close(s.xi, 1.0, 1e-15));
        assert!(close(s.chi, -2.0, 1e-15));
    }

    #[test]
    fn derive_scalings_rejects_non_positive() {
        assert!(matches!(
            derive_scalings(0.0, 1.0, 1.0, 1.0, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            derive_scalings(1.0, -1.0, 1.0, 1.0, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            derive_scalings(1.0, 1.0, 1.0, 1.0, 0.0),
            Err(Error::Domain(_))
        ));
    }

    fn unit_params() -> PhysicalParams {
        PhysicalParams {
            omega_a: 10.0,
            omega_m: [10.0, 12.0],
            g_m: [1.0, 1.0],
            gamma_m: [2.0, 2.0],
            gamma_e: 0.5,
            gamma_d: 0.5,
            gamma_p: 1.0,
            c_eff: 1.0,
            radius: 2.0,
            omega_0: None,
        }
    }

    #[test]
    fn to_normalized_substitutions() {
        // gamma_a = 2; Omega_a = gamma_a / 2 gives delta = 1.
        let mut p = unit_params();
        p.omega_0 = Some(11.0);
        p.omega_m = [11.0, 12.0];
        let n = to_normalized(&p, 1, 1.0).unwrap();
        assert_eq!(n.theta, 0.0);
        assert!(close(n.delta, 1.0, 1e-15));
        assert_eq!(n.eta, Sign::Minus);
        assert!(close(n.theta0, n.theta - 2.0, 1e-15));
        // C = 1, gamma_a = 2, c = 1, |Omega_a| = 1, R = 2.
        assert!(close(n.beta, 1.0, 1e-15));
        assert!(n.beta > 0.0);
        assert!(close(n.d0_over_chi, p.d0() / n.scalings.chi, 1e-15));
    }

    #[test]
    fn to_normalized_negative_detuning_sign() {
        let mut p = unit_params();
        p.omega_0 = Some(9.0);
        let n = to_normalized(&p, 2, 0.5).unwrap();
        assert!(n.delta < 0.0);
        assert_eq!(n.eta, Sign::Plus);
    }

    #[test]
    fn default_frame_is_singular() {
        let p = unit_params();
        assert!(matches!(
            to_normalized(&p, 1, 1.0),
            Err(Error::SingularDetuning)
        ));
    }

    #[test]
    fn bad_mode_index_and_radius() {
        let mut p = unit_params();
        p.omega_0 = Some(11.0);
        assert!(matches!(to_normalized(&p, 3, 1.0), Err(Error::Domain(_))));
        p.radius = 0.0;
        assert!(matches!(to_normalized(&p, 1, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn illustrative_set_is_valid_and_above_threshold() {
        let p = PhysicalParams::illustrative();
        p.validate().unwrap();
        assert!(p.d0() > -1.0 && p.d0() < 1.0);
        assert!(p.gamma_m[0] < 1e-3 * p.gamma_a());
        // Threshold: 2 C |D0/chi| > 1 reduces to 4 g^2 D0 / (gamma gamma_a) > 1.
        let n = to_normalized(&p, 1, 1.0).unwrap();
        assert!(-2.0 * n.cooperativity * n.d0_over_chi > 1.0);
    }

    #[test]
    fn occupation_reported_values() {
        let n4 = thermal_occupation(31.34e9, 4.0).unwrap();
        assert!((n4 - 0.41).abs() < 0.01, "{n4}");
        let n50 = thermal_occupation(31.34e9, 0.05).unwrap();
        assert!(((n50 - 8.643e-14) / 8.643e-14).abs() < 0.02, "{n50:e}");
        let hot = thermal_occupation(31.34e9, 1e9).unwrap();
        assert!((hot - 0.5).abs() < 1e-9);
        assert!(thermal_occupation(31.34e9, 0.0).is_err());
        assert!(thermal_occupation(31.34e9, -1.0).is_err());
    }

    #[test]
    fn pump_delivery_examples() {
        let p = 2.5e-3;
        assert_eq!(pump_delivery(p, 0.0, 1e6).unwrap(), p);
        assert!(close(pump_delivery(p, 0.5e6, 1e6).unwrap(), p / 2.0, 1e-15));
        assert!(close(pump_delivery(p, 3e6, 1e6).unwrap(), p / 37.0, 1e-15));
        assert!(pump_delivery(p, 0.0, 0.0).is_err());
    }

    #[test]
    fn pump_to_d0_examples() {
        assert_eq!(pump_to_d0(0.0, 1.0, 0.3).unwrap(), 0.0);
        assert!(close(pump_to_d0(1e-3, 1e-3, 0.8).unwrap(), 0.4, 1e-15));
        assert!(close(pump_to_d0(1e12, 1e-3, 0.8).unwrap(), 0.8, 1e-12));
        assert_eq!(pump_to_d0(f64::INFINITY, 1e-3, 0.8).unwrap(), 0.8);
        assert!(pump_to_d0(1.0, 0.0, 0.8).is_err());
        assert!(pump_to_d0(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn mode_table_values() {
        assert_eq!(MODE_TABLE.pump_1_hz, 31.33771e9);
        assert_eq!(MODE_TABLE.pump_2_hz, 31.33974e9);
        assert_eq!(MODE_TABLE.readout_a_hz, 12.03812e9);
        assert_eq!(MODE_TABLE.readout_b_hz, 12.02979e9);
    }

    #[test]
    fn physical_params_json_rejects_unknown_keys() {
        let p = PhysicalParams::illustrative();
        let mut v = serde_json::to_value(&p).unwrap();
        let back: PhysicalParams = serde_json::from_value(v.clone()).unwrap();
        assert_eq!(back, p);
        v["gamma_x"] = serde_json::json!(1.0);
        assert!(serde_json::from_value::<PhysicalParams>(v).is_err());
    }

    /// Right-hand sides of the single-mode system after the `J -> iJ` frame
    /// change, with dimensional coupling `g`.
    fn frame_rhs(
        g: f64,
        gamma: f64,
        gamma_a: f64,
        gamma_i: f64,
        (om, om_a, d0): (f64, f64, f64),
        (f, j, d): (num_complex::Complex64, num_complex::Complex64, f64),
    ) -> (num_complex::Complex64, num_complex::Complex64, f64) {
        use num_complex::Complex64 as C;
        let i = C::i();
        let df = -gamma / 2.0 * ((1.0 + i * 2.0 * om / gamma) * f - 2.0 * g / gamma * j);
        let dj =
            -gamma_a / 2.0 * ((1.0 + i * 2.0 * om_a / gamma_a) * j - 2.0 * g / gamma_a * f * d);
        let dd = -gamma_i * (d - d0 + 2.0 * g / gamma_i * (f.conj() * j + j.conj() * f).re);
        (df, dj, dd)
    }

    fn positive() -> impl Strategy<Value = f64> {
        (-3.0f64..3.0).prop_map(|e| 10f64.powf(e))
    }

    proptest! {
        #[test]
        fn constraint_identities_hold(g in positive(), gamma in positive(), ga in positive(), gi in positive(), c in positive()) {
            let s = derive_scalings(g, gamma, ga, gi, c).unwrap();
            prop_assert!(s.residuals(g, gamma, ga, gi).max() < 1e-12);
        }

        #[test]
        fn rescaling_reproduces_normalized_system(
            g in positive(), gamma in positive(), ga in positive(), gi in positive(), c in positive(),
            om in -5.0f64..5.0, om_a in -5.0f64..5.0, d0 in -0.99f64..0.99,
            fr in -2.0f64..2.0, fi in -2.0f64..2.0, jr in -2.0f64..2.0, ji in -2.0f64..2.0, d in -2.0f64..2.0,
        ) {
            use num_complex::Complex64 as C;
            let s = derive_scalings(g, gamma, ga, gi, c).unwrap();
            let f = C::new(fr, fi);
            let j = C::new(jr, ji);
            // Dimensional variables are the scaled ones times (zeta, xi, chi).
            let (df, dj, dd) = frame_rhs(g, gamma, ga, gi, (om, om_a, d0), (f * s.zeta, j * s.xi, d * s.chi));
            let (df, dj, dd) = (df / s.zeta, dj / s.xi, dd / s.chi);
            let theta = 2.0 * om / gamma;
            let delta = 2.0 * om_a / ga;
            let i = C::i();
            let ef = -gamma / 2.0 * ((1.0 + i * theta) * f + 2.0 * c * j);
            let ej = -ga / 2.0 * ((1.0 + i * delta) * j - f * d);
            let ed = -gi * (d - d0 / s.chi + 0.5 * (f.conj() * j + j.conj() * f).re);
            let scale = |x: f64| 1e-9 * (1.0 + x.abs());
            prop_assert!((df - ef).norm() <= scale(ef.norm() + gamma * (f.norm() + c * j.norm())));
            prop_assert!((dj - ej).norm() <= scale(ej.norm() + ga * (j.norm() + f.norm() * d.abs())));
            prop_assert!((dd - ed).abs() <= scale(ed.abs() + gi * (d.abs() + d0.abs() / s.chi.abs() + f.norm() * j.norm())));
        }

        #[test]
        fn occupation_monotone(nu in 1e8f64..1e12, t1 in 0.01f64..100.0, t2 in 0.01f64..100.0) {
            prop_assume!((t1 - t2).abs() > 1e-9 * t1.max(t2));
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            let a = thermal_occupation(nu, lo).unwrap();
            let b = thermal_occupation(nu, hi).unwrap();
            prop_assert!(a < 0.5 && b < 0.5);
            // Strict increase, unless both underflow to zero.
            prop_assert!(a < b || (a == 0.0 && b == 0.0));
            let c = thermal_occupation(nu * 1.5, hi).unwrap();
            prop_assert!(c < b || (c == 0.0 && b == 0.0));
        }

        #[test]
        fn pump_chain_monotone_and_even(p1 in 0.0f64..1.0, p2 in 0.0f64..1.0, df in -5e6f64..5e6) {
            let m = PumpModel { lineshape: PumpLineshape::Lorentzian, fwhm_hz: 1e6, sat_power_w: 0.1, d0_max: 0.8 };
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            prop_assert!(m.d0(lo, df).unwrap() <= m.d0(hi, df).unwrap());
            prop_assert_eq!(m.d0(hi, df).unwrap(), m.d0(hi, -df).unwrap());
            let d = m.delivered(hi, df).unwrap();
            prop_assert!(d >= 0.0 && d <= hi);
            prop_assert!(m.delivered(hi, df.abs() + 1e3).unwrap() <= d);
            prop_assert!(m.d0(hi, df).unwrap().abs() < 0.8);
        }
    }
}
