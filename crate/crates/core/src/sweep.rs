//! Parameter sweeps over either solver with per-point regime analysis.
//!
//! Axes name a dotted path into the solver config (`d0_over_chi`,
//! `modes.0.theta`, `drive_amplitude.0`, ...). Two pseudo-paths,
//! `pump.power_w` and `pump.detuning_hz`, drive `d0_over_chi` through the
//! plan's [`PumpMapping`].

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{classify_regime, Regime, RegimeReport, RegimeThresholds, TimeSeries};
use crate::error::{Error, Result};
use crate::io::{sha256_hex, write_json, write_series_csv};
use crate::lle::{run_lle, LleConfig, LleInit, RingField};
use crate::mbe::{run_mbe, MbeConfig, MbeInit, MbeState};
use crate::params::PumpModel;

pub const PUMP_POWER_PATH: &str = "pump.power_w";
pub const PUMP_DETUNING_PATH: &str = "pump.detuning_hz";
pub const SUMMARY_FILE: &str = "sweep.json";
pub const SERIES_DIR: &str = "series";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolverSetup {
    Mbe { config: MbeConfig, init: MbeInit },
    Lle { config: LleConfig, init: LleInit },
}

impl SolverSetup {
    fn config_value(&self) -> Value {
        match self {
            SolverSetup::Mbe { config, .. } => serde_json::to_value(config),
            SolverSetup::Lle { config, .. } => serde_json::to_value(config),
        }
        .expect("solver configs serialize")
    }

    fn channels(&self) -> usize {
        match self {
            SolverSetup::Mbe { config, .. } => config.modes.len(),
            SolverSetup::Lle { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub path: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    /// Every point gets its own seed derived from the plan seed and its index.
    #[default]
    PerPoint,
    /// All points use the plan seed.
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    #[default]
    Fresh,
    /// Start each point from the final state of its predecessor along the
    /// last axis.
    Continuation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSettings {
    pub thresholds: RegimeThresholds,
    pub discard_fraction: f64,
    /// Output channel (signal mode) to analyze.
    pub channel: usize,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            thresholds: RegimeThresholds::default(),
            discard_fraction: 0.5,
            channel: 0,
        }
    }
}

/// Pump power and detuning to `d0_over_chi` through the delivery model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PumpMapping {
    pub model: PumpModel,
    /// Inversion scale; `d0_over_chi = d0 / chi`.
    pub chi: f64,
    #[serde(default)]
    pub power_w: f64,
    #[serde(default)]
    pub detuning_hz: f64,
}

impl PumpMapping {
    pub fn d0_over_chi(&self, power_w: f64, detuning_hz: f64) -> Result<f64> {
        if !(self.chi != 0.0 && self.chi.is_finite()) {
            return Err(Error::config("pump.chi must be finite and nonzero"));
        }
        Ok(self.model.d0(power_w, detuning_hz)? / self.chi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesOutput {
    pub write: bool,
    /// Series longer than this are decimated before writing.
    pub max_points: usize,
}

impl Default for SeriesOutput {
    fn default() -> Self {
        SeriesOutput {
            write: false,
            max_points: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub solver: SolverSetup,
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub seed_mode: SeedMode,
    #[serde(default)]
    pub init_mode: InitMode,
    #[serde(default)]
    pub analysis: AnalysisSettings,
    #[serde(default)]
    pub pump: Option<PumpMapping>,
    #[serde(default)]
    pub series: SeriesOutput,
}

impl SweepPlan {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.values.len()).collect()
    }

    pub fn point_count(&self) -> usize {
        self.shape().iter().product()
    }

    /// Multi-index of flat (row-major) point `flat`.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut idx = vec![0; shape.len()];
        for d in (0..shape.len()).rev() {
            idx[d] = flat % shape[d];
            flat /= shape[d];
        }
        idx
    }

    pub fn seed_for(&self, flat: usize) -> u64 {
        match self.seed_mode {
            SeedMode::Shared => self.seed,
            SeedMode::PerPoint => splitmix64(self.seed ^ splitmix64(flat as u64 + 1)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::config(format!(
                "a sweep needs 1 or 2 axes, got {}",
                self.axes.len()
            )));
        }
        for (i, a) in self.axes.iter().enumerate() {
            if a.values.is_empty() {
                return Err(Error::config(format!(
                    "axes[{i}] ({}) has no values",
                    a.path
                )));
            }
            if a.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::config(format!(
                    "axes[{i}] ({}) has non-finite values",
                    a.path
                )));
            }
        }
        if self.axes.len() == 2 && self.axes[0].path == self.axes[1].path {
            return Err(Error::config("both axes use the same path"));
        }
        let a = &self.analysis;
        if !(0.0..1.0).contains(&a.discard_fraction) {
            return Err(Error::config(
                "analysis.discard_fraction must lie in [0, 1)",
            ));
        }
        if a.channel >= self.solver.channels() {
            return Err(Error::config(format!(
                "analysis.channel {} does not exist",
                a.channel
            )));
        }
        if self.series.max_points < 16 {
            return Err(Error::config("series.max_points must be >= 16"));
        }
        let uses_pump = self.axes.iter().any(|a| is_pump_path(&a.path));
        if uses_pump || self.pump.is_some() {
            if !matches!(self.solver, SolverSetup::Mbe { .. }) {
                return Err(Error::config("pump mapping applies to the mbe solver only"));
            }
            if self.pump.is_none() {
                return Err(Error::config("pump.* axes need a `pump` mapping"));
            }
        }
        // every path must resolve; probe with the first value of each axis
        let probe: Vec<f64> = self.axes.iter().map(|a| a.values[0]).collect();
        self.point_setup(&probe, 0).map(|_| ())
    }

    /// Solver setup at the given axis values.
    pub fn point_setup(&self, values: &[f64], seed: u64) -> Result<SolverSetup> {
        let mut cfg = self.solver.config_value();
        let mut pump = self.pump;
        for (axis, &v) in self.axes.iter().zip(values) {
            match axis.path.as_str() {
                PUMP_POWER_PATH => pump.as_mut().expect("validated").power_w = v,
                PUMP_DETUNING_PATH => pump.as_mut().expect("validated").detuning_hz = v,
                path => set_path(&mut cfg, path, v)?,
            }
        }
        if let Some(p) = pump {
            let d = p.d0_over_chi(p.power_w, p.detuning_hz)?;
            set_path(&mut cfg, "d0_over_chi", d)?;
        }
        let rebuild =
            |e: serde_json::Error| Error::config(format!("config after substitution: {e}"));
        let setup = match &self.solver {
            SolverSetup::Mbe { init, .. } => {
                let mut config: MbeConfig = serde_json::from_value(cfg).map_err(rebuild)?;
                config.noise_seed = seed;
                config.validate()?;
                SolverSetup::Mbe {
                    config,
                    init: init.clone(),
                }
            }
            SolverSetup::Lle { init, .. } => {
                let mut config: LleConfig = serde_json::from_value(cfg).map_err(rebuild)?;
                config.noise_seed = seed;
                config.validate()?;
                SolverSetup::Lle {
                    config,
                    init: init.clone(),
                }
            }
        };
        Ok(setup)
    }

    /// SHA-256 of the plan's canonical JSON.
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("plan serializes"))
    }
}

fn is_pump_path(p: &str) -> bool {
    p == PUMP_POWER_PATH || p == PUMP_DETUNING_PATH
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Overwrite the numeric (or null) leaf at dotted `path`.
fn set_path(root: &mut Value, path: &str, v: f64) -> Result<()> {
    let missing = || Error::config(format!("parameter path `{path}` does not resolve"));
    let mut node = root;
    for seg in path.split('.') {
        node = match node {
            Value::Object(map) => map.get_mut(seg).ok_or_else(missing)?,
            Value::Array(items) => {
                let i: usize = seg.parse().map_err(|_| missing())?;
                items.get_mut(i).ok_or_else(missing)?
            }
            _ => return Err(missing()),
        };
    }
    let integral = v.fract() == 0.0 && v.abs() < 2f64.powi(53);
    *node = match node {
        Value::Number(n) if (n.is_u64() || n.is_i64()) => {
            if !integral {
                return Err(Error::config(format!("`{path}` takes an integer, got {v}")));
            }
            if v >= 0.0 {
                Value::from(v as u64)
            } else {
                Value::from(v as i64)
            }
        }
        Value::Number(_) | Value::Null => Value::from(v),
        _ => {
            return Err(Error::config(format!(
                "`{path}` is not a numeric parameter"
            )))
        }
    };
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub index: Vec<usize>,
    pub values: Vec<f64>,
    pub seed: u64,
    pub status: PointStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<RegimeReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_file: Option<String>,
}

impl PointResult {
    pub fn label(&self) -> Option<Regime> {
        self.report.as_ref().map(|r| r.label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub code_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axes: Vec<Axis>,
    pub shape: Vec<usize>,
    /// Row-major over `shape`.
    pub points: Vec<PointResult>,
    pub provenance: Provenance,
}

impl SweepResult {
    pub fn point(&self, index: &[usize]) -> Option<&PointResult> {
        if index.len() != self.shape.len() || index.iter().zip(&self.shape).any(|(i, s)| i >= s) {
            return None;
        }
        let flat = index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (i, s)| acc * s + i);
        self.points.get(flat)
    }

    pub fn failed(&self) -> usize {
        self.points
            .iter()
            .filter(|p| p.status == PointStatus::Failed)
            .count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Where to write the summary and optional series.
    pub output_dir: Option<PathBuf>,
}

enum FinalState {
    Mbe(MbeState),
    Lle(RingField),
}

/// Run and analyze one point. Returns the report, the analyzed series and
/// the final state for continuation.
fn simulate_point(
    setup: &SolverSetup,
    analysis: &AnalysisSettings,
    start: Option<&FinalState>,
) -> Result<(RegimeReport, TimeSeries, FinalState)> {
    let (series, last) = match setup {
        SolverSetup::Mbe { config, init } => {
            let state = match start {
                Some(FinalState::Mbe(s)) if s.check_shape(config).is_ok() => {
                    let mut s = s.clone();
                    s.t = 0.0;
                    s
                }
                _ => init.generate(config)?,
            };
            let run = run_mbe(config, state).map_err(|a| a.error)?;
            (
                run.output_series(analysis.channel)?,
                FinalState::Mbe(run.final_state),
            )
        }
        SolverSetup::Lle { config, init } => {
            let field = match start {
                Some(FinalState::Lle(f)) if f.len() == config.grid_points => RingField {
                    samples: f.samples.clone(),
                    t_bar: 0.0,
                },
                _ => init.generate(config)?,
            };
            let run = run_lle(config, field).map_err(|a| a.error)?;
            (run.output_series()?, FinalState::Lle(run.final_field))
        }
    };
    let tail = series.tail(analysis.discard_fraction)?;
    let report = classify_regime(&tail, &analysis.thresholds);
    Ok((report, series, last))
}

/// Analysis of a single configuration, identical to what a sweep records.
pub fn analyze_setup(setup: &SolverSetup, analysis: &AnalysisSettings) -> Result<RegimeReport> {
    simulate_point(setup, analysis, None).map(|r| r.0)
}

fn decimate(ts: &TimeSeries, max_points: usize) -> Result<TimeSeries> {
    let stride = ts.len().div_ceil(max_points).max(1);
    if stride == 1 {
        return Ok(ts.clone());
    }
    let data: Vec<_> = ts.to_complex().into_iter().step_by(stride).collect();
    Ok(TimeSeries::complex(data, ts.dt() * stride as f64)?.with_start(ts.start()))
}

fn check_writable(dir: &Path) -> Result<()> {
    let setup =
        |e: std::io::Error| Error::Setup(format!("output directory {}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(setup)?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(setup)?;
    fs::remove_file(&probe).map_err(setup)?;
    Ok(())
}

struct Task {
    flats: Vec<usize>,
}

/// Run every grid point of `plan`. Only plan validation and output
/// directory setup produce an `Err`; per-point failures are recorded.
pub fn run_sweep(plan: &SweepPlan, opts: &SweepOptions) -> Result<SweepResult> {
    plan.validate()?;
    if let Some(dir) = &opts.output_dir {
        check_writable(dir)?;
        if plan.series.write {
            check_writable(&dir.join(SERIES_DIR))?;
        }
    }

    let total = plan.point_count();
    let row = *plan.shape().last().expect("validated");
    let tasks: Vec<Task> = match plan.init_mode {
        InitMode::Fresh => (0..total).map(|f| Task { flats: vec![f] }).collect(),
        InitMode::Continuation => (0..total / row)
            .map(|r| Task {
                flats: (r * row..(r + 1) * row).collect(),
            })
            .collect(),
    };

    let run_task = |task: &Task| -> Vec<PointResult> {
        let mut prev: Option<FinalState> = None;
        task.flats
            .iter()
            .map(|&flat| {
                let index = plan.unravel(flat);
                let values: Vec<f64> = index
                    .iter()
                    .zip(&plan.axes)
                    .map(|(&i, a)| a.values[i])
                    .collect();
                let seed = plan.seed_for(flat);
                let outcome = plan.point_setup(&values, seed).and_then(|setup| {
                    let start = match plan.init_mode {
                        InitMode::Continuation => prev.as_ref(),
                        InitMode::Fresh => None,
                    };
                    simulate_point(&setup, &plan.analysis, start)
                });
                let mut point = PointResult {
                    index,
                    values,
                    seed,
                    status: PointStatus::Ok,
                    error: None,
                    report: None,
                    series_file: None,
                };
                match outcome {
                    Ok((report, series, last)) => {
                        if let (Some(dir), true) = (&opts.output_dir, plan.series.write) {
                            let name = format!("{SERIES_DIR}/point_{flat:05}.csv");
                            let written =
                                decimate(&series, plan.series.max_points).and_then(|ts| {
                                    let file = fs::File::create(dir.join(&name))?;
                                    write_series_csv(std::io::BufWriter::new(file), &ts)
                                });
                            match written {
                                Ok(()) => point.series_file = Some(name),
                                Err(e) => log::warn!("point {flat}: series not written: {e}"),
                            }
                        }
                        point.report = Some(report);
                        prev = Some(last);
                    }
                    Err(e) => {
                        log::warn!("point {flat} failed: {e}");
                        point.status = PointStatus::Failed;
                        point.error = Some(e.to_string());
                        prev = None;
                    }
                }
                point
            })
            .collect()
    };

    let collect = || -> Vec<PointResult> { tasks.par_iter().flat_map_iter(run_task).collect() };
    let mut points = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Setup(format!("thread pool: {e}")))?
            .install(collect),
        None => collect(),
    };
    points.sort_by_key(|p| p.index.clone());

    let result = SweepResult {
        axes: plan.axes.clone(),
        shape: plan.shape(),
        points,
        provenance: Provenance {
            config_hash: plan.hash(),
            seed: plan.seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        },
    };
    if let Some(dir) = &opts.output_dir {
        write_json(&dir.join(SUMMARY_FILE), &result).map_err(|e| Error::Setup(e.to_string()))?;
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    /// Index of the first point of the adjacent pair along the axis.
    pub position: usize,
    pub from_value: f64,
    pub to_value: f64,
    pub from_label: Regime,
    pub to_label: Regime,
    pub from_pulses: usize,
    pub to_pulses: usize,
}

impl Transition {
    pub fn label_changed(&self) -> bool {
        self.from_label != self.to_label
    }

    pub fn pulse_delta(&self) -> i64 {
        self.to_pulses as i64 - self.from_pulses as i64
    }
}

/// Adjacent pairs whose label or pulse count differ. `None` entries
/// (failed points) break adjacency.
pub fn transitions(values: &[f64], states: &[Option<(Regime, usize)>]) -> Vec<Transition> {
    let mut out = Vec::new();
    for i in 0..states.len().saturating_sub(1) {
        if let (Some((la, ca)), Some((lb, cb))) = (states[i], states[i + 1]) {
            if la != lb || ca != cb {
                out.push(Transition {
                    position: i,
                    from_value: values[i],
                    to_value: values[i + 1],
                    from_label: la,
                    to_label: lb,
                    from_pulses: ca,
                    to_pulses: cb,
                });
            }
        }
    }
    out
}

/// Regime transitions along `axis` with the other indices held at `fixed`
/// (the entry for `axis` itself is ignored).
pub fn boundary_scan(
    result: &SweepResult,
    axis: usize,
    fixed: &[usize],
) -> Result<Vec<Transition>> {
    if axis >= result.shape.len() {
        return Err(Error::config(format!("axis {axis} out of range")));
    }
    if fixed.len() != result.shape.len() {
        return Err(Error::config(format!(
            "fixed index has {} entries, sweep has {} axes",
            fixed.len(),
            result.shape.len()
        )));
    }
    let mut index = fixed.to_vec();
    let mut states = Vec::with_capacity(result.shape[axis]);
    for i in 0..result.shape[axis] {
        index[axis] = i;
        let p = result
            .point(&index)
            .ok_or_else(|| Error::config(format!("index {index:?} outside the sweep grid")))?;
        states.push(p.report.as_ref().map(|r| (r.label, r.pulse_count)));
    }
    Ok(transitions(&result.axes[axis].values, &states))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mbe::MbeConfig;

    fn mbe_plan(axes: Vec<Axis>) -> SweepPlan {
        let mut cfg = MbeConfig::single_mode(1.0, 0.0, 2.0, 0.5, 0.0, 1.0, -1.0);
        cfg.t_end = 20.0;
        SweepPlan {
            solver: SolverSetup::Mbe {
                config: cfg,
                init: MbeInit::Noise {
                    amplitude: 1e-3,
                    homogeneous: true,
                },
            },
            axes,
            seed: 1,
            seed_mode: SeedMode::PerPoint,
            init_mode: InitMode::Fresh,
            analysis: AnalysisSettings::default(),
            pump: None,
            series: SeriesOutput::default(),
        }
    }

    #[test]
    fn transitions_by_definition() {
        use Regime::*;
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        let labels = [SubThreshold, Sparse, Sparse, Dense, Cw];
        let s: Vec<_> = labels.iter().map(|&l| Some((l, 1))).collect();
        assert_eq!(transitions(&v, &s).len(), 3);

        let s: Vec<_> = [5, 4, 3, 3].iter().map(|&c| Some((Sparse, c))).collect();
        let t = transitions(&v[..4], &s);
        assert_eq!(t.len(), 2);
        assert!(t
            .iter()
            .all(|t| t.pulse_delta() == -1 && !t.label_changed()));

        let s = vec![Some((Cw, 1)); 4];
        assert!(transitions(&v[..4], &s).is_empty());

        let s = vec![Some((Cw, 1)), None, Some((Dense, 1))];
        assert!(transitions(&v[..3], &s).is_empty());
    }

    #[test]
    fn paths_resolve_or_fail() {
        let plan = mbe_plan(vec![Axis {
            path: "modes.0.theta".into(),
            values: vec![0.5],
        }]);
        match plan.point_setup(&[0.5], 3).unwrap() {
            SolverSetup::Mbe { config, .. } => {
                assert_eq!(config.modes[0].theta, 0.5);
                assert_eq!(config.noise_seed, 3);
            }
            _ => unreachable!(),
        }
        for bad in ["modes.3.theta", "nope", "ring", "modes.x.gamma"] {
            let plan = mbe_plan(vec![Axis {
                path: bad.into(),
                values: vec![1.0],
            }]);
            assert!(matches!(plan.validate(), Err(Error::Config(_))), "{bad}");
        }
        let plan = mbe_plan(vec![Axis {
            path: "ring.grid_points".into(),
            values: vec![2.5],
        }]);
        assert!(plan.validate().is_err());
        let plan = mbe_plan(vec![Axis {
            path: "dt".into(),
            values: vec![0.01],
        }]);
        plan.validate().unwrap();
    }

    #[test]
    fn plan_shape_checks() {
        assert!(mbe_plan(vec![]).validate().is_err());
        assert!(mbe_plan(vec![Axis {
            path: "delta".into(),
            values: vec![]
        }])
        .validate()
        .is_err());
        assert!(mbe_plan(vec![Axis {
            path: "delta".into(),
            values: vec![f64::NAN]
        }])
        .validate()
        .is_err());
        let plan = mbe_plan(vec![Axis {
            path: PUMP_POWER_PATH.into(),
            values: vec![1.0],
        }]);
        assert!(plan.validate().is_err());
        let three = (0..3).map(|i| Axis {
            path: format!("modes.0.{}", ["gamma", "theta", "coupling_ratio"][i]),
            values: vec![1.0],
        });
        assert!(mbe_plan(three.collect()).validate().is_err());
    }

    #[test]
    fn unravel_is_row_major() {
        let plan = mbe_plan(vec![
            Axis {
                path: "delta".into(),
                values: vec![0.0, 1.0],
            },
            Axis {
                path: "d0_over_chi".into(),
                values: vec![-1.0, -2.0, -3.0],
            },
        ]);
        assert_eq!(plan.point_count(), 6);
        assert_eq!(plan.unravel(4), vec![1, 1]);
        assert_ne!(plan.seed_for(0), plan.seed_for(1));
        let shared = SweepPlan {
            seed_mode: SeedMode::Shared,
            ..plan
        };
        assert_eq!(shared.seed_for(0), shared.seed_for(5));
    }

    #[test]
    fn unknown_plan_keys_rejected() {
        let plan = mbe_plan(vec![Axis {
            path: "delta".into(),
            values: vec![0.0],
        }]);
        let mut v = serde_json::to_value(&plan).unwrap();
        v["sed"] = Value::from(3);
        assert!(serde_json::from_value::<SweepPlan>(v).is_err());
        let back: SweepPlan = serde_json::from_value(serde_json::to_value(&plan).unwrap()).unwrap();
        assert_eq!(back, plan);
    }
}
