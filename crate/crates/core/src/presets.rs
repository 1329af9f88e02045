//! Shipped Maxwell-Bloch parameter sets with their expected regime.
//!
//! Rates are in units where the atomic dephasing rate is 2 (bad-cavity
//! sets) or the cavity rate is 1 (the rest). Each self-pulsing set was
//! located by a coarse scan over the pump `D0/chi`; the scan grid and the
//! labels it produced are kept in [`Preset::provenance`].

use serde::Serialize;

use crate::analysis::{classify_regime, Regime, RegimeReport, RegimeThresholds};
use crate::error::Result;
use crate::mbe::{run_mbe, MbeConfig, MbeInit, RingGeometry};

#[derive(Debug, Clone, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub expected: Regime,
    pub config: MbeConfig,
    pub init: MbeInit,
    /// Leading fraction of the output dropped before classification.
    pub discard_fraction: f64,
    pub provenance: &'static str,
}

impl Preset {
    /// Run the preset with `seed` and classify the tail of mode A.
    pub fn classify(&self, seed: u64, thresholds: &RegimeThresholds) -> Result<RegimeReport> {
        let mut cfg = self.config.clone();
        cfg.noise_seed = seed;
        let init = self.init.generate(&cfg)?;
        let run = run_mbe(&cfg, init).map_err(|a| a.error)?;
        let ts = run.output_series(0)?.tail(self.discard_fraction)?;
        Ok(classify_regime(&ts, thresholds))
    }
}

fn homogeneous(
    gamma: f64,
    gamma_a: f64,
    gamma_i: f64,
    p: f64,
    t_end: f64,
    stride: usize,
) -> MbeConfig {
    let mut cfg = MbeConfig::single_mode(gamma, 0.0, gamma_a, gamma_i, 0.0, 1.0, p);
    cfg.t_end = t_end;
    cfg.sample_stride = stride;
    cfg
}

pub fn preset_bank() -> Vec<Preset> {
    let noise = |homogeneous| MbeInit::Noise {
        amplitude: 1e-3,
        homogeneous,
    };

    let mut ring = homogeneous(1.0, 10.0, 5.0, -40.0, 200.0, 10);
    ring.ring = RingGeometry::unit(32, 2.0);

    vec![
        Preset {
            name: "cw",
            description: "class-B single mode at twice threshold; relaxes to steady emission",
            expected: Regime::Cw,
            config: homogeneous(1.0, 2.0, 0.5, -1.0, 200.0, 5),
            init: noise(true),
            discard_fraction: 0.5,
            provenance: "closed-form fixed point is stable (sigma = 0.5 < b + 1); \
                         10/10 seeds labelled III",
        },
        Preset {
            name: "below_threshold",
            description: "pump below the lasing threshold; the field dies out",
            expected: Regime::SubThreshold,
            config: homogeneous(1.0, 2.0, 0.5, -0.3, 200.0, 5),
            init: noise(true),
            discard_fraction: 0.5,
            provenance: "2 C |D0/chi| = 0.6 < 1",
        },
        Preset {
            name: "dense_pulsing",
            description: "bad-cavity single mode on the periodic Lorenz-Haken orbit",
            expected: Regime::Dense,
            config: homogeneous(20.0, 2.0, 8.0 / 3.0, -50.0, 200.0, 5),
            init: noise(true),
            discard_fraction: 0.5,
            provenance: "gamma = 20, gamma_a = 2, gamma_I = 8/3 (sigma = 10, b = 8/3); \
                         scan D0/chi in {-14, -50, -80, -175} gave II at every point, \
                         10/10 seeds each; -50 (r = 100) is a periodic window",
        },
        Preset {
            name: "sparse_pulsing",
            description: "bad-cavity single mode with slow inversion recovery; short spikes",
            expected: Regime::Sparse,
            config: homogeneous(20.0, 2.0, 0.5, -30.0, 200.0, 5),
            init: noise(true),
            discard_fraction: 0.5,
            provenance: "gamma = 20, gamma_a = 2, gamma_I = 0.5; scan D0/chi in {-14, -30} \
                         gave II (-14, duty 0.22) and I (-30, duty 0.13..0.17), 10/10 seeds",
        },
        Preset {
            name: "ring_multimode",
            description: "good cavity on a resolved ring; gain spreads to side modes and \
                          the output is modulated",
            expected: Regime::Dense,
            config: ring,
            init: noise(false),
            discard_fraction: 0.5,
            provenance: "gamma = 1, gamma_a = 10, gamma_I = 5, 32 cells, c = 2; scan \
                         D0/chi in {-5, -15, -40, -60}: III up to -15, II at -40 and -60 \
                         (10/10 seeds, std/mean 0.09..0.10 at -40)",
        },
    ]
}

pub fn preset(name: &str) -> Option<Preset> {
    preset_bank().into_iter().find(|p| p.name == name)
}

pub fn preset_names() -> Vec<&'static str> {
    preset_bank().iter().map(|p| p.name).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_unique_and_configs_valid() {
        let names = preset_names();
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
        for p in preset_bank() {
            p.config.validate().unwrap();
            assert!(p.init.generate(&p.config).is_ok());
        }
        assert!(preset("nope").is_none());
    }

    #[test]
    fn below_threshold_preset() {
        let p = preset("below_threshold").unwrap();
        let r = p.classify(0, &RegimeThresholds::default()).unwrap();
        assert_eq!(r.label, Regime::SubThreshold);
    }
}
