use std::path::{Path, PathBuf};

use maser_soliton::analysis::{
    classify_regime, comb_spectrum_with, detect_pulses_with, fit_sech, RegimeReport, TimeSeries,
};
use maser_soliton::io::{
    parse_series_csv, parse_trajectory, sha256_hex, write_samples_csv, write_spectrum_csv,
    write_trajectory, Trajectory, BINARY_MAGIC,
};
use maser_soliton::lle::{run_lle, RingField};
use maser_soliton::mbe::{channel_label, mbe_cw_fixed_point, run_mbe};
use maser_soliton::params::{mbe_coefficients, thermal_occupation, to_normalized};
use maser_soliton::sweep::{run_sweep, AnalysisSettings, SweepOptions, SweepPlan, SUMMARY_FILE};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    load_config, AnalyzeConfig, NormalizeConfig, OutputSettings, SimulateLleConfig,
    SimulateMbeConfig,
};
use crate::error::{kind_of, CliError, CliResult};
use crate::rundir::{check, json_bytes, RunDir, ERROR_FILE};

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Global {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub check: bool,
}

impl Global {
    fn config_path(&self, command: &str) -> CliResult<&Path> {
        self.config
            .as_deref()
            .ok_or_else(|| CliError::config(format!("{command} needs --config PATH")))
    }

    /// `--out`, or `runs/<command>-<hash prefix>` for commands that always write.
    fn run_root<T: Serialize>(&self, command: &str, resolved: &T) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            let hash = sha256_hex(&json_bytes(resolved));
            PathBuf::from("runs").join(format!("{command}-{}", &hash[..12]))
        })
    }
}

/// Run `body` inside a fresh run directory, or verify an existing one under
/// `--check`. A failing body still leaves `error.json` and provenance behind.
fn in_run_dir<T: Serialize>(
    g: &Global,
    root: &Path,
    command: &str,
    seed: Option<u64>,
    resolved: &T,
    body: impl FnOnce(&mut RunDir) -> CliResult<Value>,
) -> CliResult<Value> {
    if g.check {
        let report = check(root, command, Some(&json_bytes(resolved)))?;
        if !report.ok {
            return Err(CliError::failure(format!(
                "integrity check of {} failed: {}",
                root.display(),
                report.mismatches.join("; ")
            )));
        }
        return Ok(json!({ "run": root, "check": report }));
    }
    let mut run = RunDir::create(root, command, seed, resolved)?;
    let outcome = body(&mut run);
    if let Err(e) = &outcome {
        if !run.has(ERROR_FILE) {
            run.write_json(ERROR_FILE, &error_doc(e, None))?;
        }
    }
    run.finish()?;
    log::info!("run directory {}", root.display());
    outcome
}

/// `progress` is the number of completed steps and the time of the retained
/// (possibly offending) state.
fn error_doc(e: &CliError, progress: Option<(u64, f64)>) -> Value {
    let mut doc = json!({
        "status": "failed",
        "kind": e.kind.as_str(),
        "exit_code": e.kind.code(),
        "error": e.message,
    });
    if let Some((steps, t)) = progress {
        doc["completed_steps"] = json!(steps);
        doc["t_retained"] = json!(t);
    }
    doc
}

fn regime_of(
    series: maser_soliton::Result<TimeSeries>,
    analysis: &AnalysisSettings,
) -> Option<RegimeReport> {
    let tail = series
        .and_then(|s| s.tail(analysis.discard_fraction))
        .ok()?;
    Some(classify_regime(&tail, &analysis.thresholds))
}

fn write_trajectory_file(
    run: &mut RunDir,
    output: &OutputSettings,
    tr: &Trajectory,
) -> CliResult<String> {
    let name = format!("trajectory.{}", output.trajectory.extension());
    write_trajectory(&run.path(&name), output.trajectory, tr)?;
    run.track(name.clone());
    Ok(name)
}

pub fn normalize(g: &Global) -> CliResult<Value> {
    let cfg: NormalizeConfig = load_config(g.config_path("normalize")?)?;
    let p = &cfg.physical;
    let normalized = to_normalized(p, cfg.mode_index, cfg.cooperativity)?;
    let m = cfg.mode_index - 1;
    let residuals = normalized
        .scalings
        .residuals(p.g_m[m], p.gamma_m[m], p.gamma_a(), p.gamma_i());
    let result = json!({
        "normalized": normalized,
        "constraint_residuals": residuals,
        "max_constraint_residual": residuals.max(),
        "mbe": mbe_coefficients(p, cfg.cooperativity)?,
        "derived": {
            "gamma_a": p.gamma_a(),
            "gamma_i": p.gamma_i(),
            "d0": p.d0(),
            "omega_0": p.omega_0(),
        },
    });
    match &g.out {
        Some(root) => in_run_dir(g, root, "normalize", None, &cfg, |run| {
            run.write_json("normalized.json", &result)?;
            Ok(result.clone())
        }),
        None => Ok(result),
    }
}

pub fn occupation(g: &Global, nu_hz: f64, temperature_k: f64) -> CliResult<Value> {
    let n = thermal_occupation(nu_hz, temperature_k)?;
    let result = json!({ "nu_hz": nu_hz, "temperature_k": temperature_k, "occupation": n });
    match &g.out {
        Some(root) => {
            let args = json!({ "nu_hz": nu_hz, "temperature_k": temperature_k });
            in_run_dir(g, root, "occupation", None, &args, |run| {
                run.write_json("occupation.json", &result)?;
                Ok(result.clone())
            })
        }
        None => Ok(result),
    }
}

pub fn simulate_lle(g: &Global) -> CliResult<Value> {
    let mut cfg: SimulateLleConfig = load_config(g.config_path("simulate-lle")?)?;
    if let Some(seed) = g.seed {
        cfg.config.noise_seed = seed;
    }
    cfg.config.validate()?;
    let init = cfg.init.generate(&cfg.config)?;
    let root = g.run_root("simulate-lle", &cfg);
    let seed = cfg.config.noise_seed;
    in_run_dir(g, &root, "simulate-lle", Some(seed), &cfg, |run| {
        let initial_norm_sqr = init.norm_sqr();
        let (lle, error) = match run_lle(&cfg.config, init) {
            Ok(r) => (r, None),
            Err(a) => (a.partial, Some(a.error)),
        };
        run.write_with("series.csv", |f| {
            write_samples_csv(f, &lle.output, lle.output_dt, 0.0)
        })?;
        let mut frames: Vec<RingField> = lle.snapshots.clone();
        // the last state joins the snapshots only when it is the sole frame or the offending one
        if frames.is_empty()
            || (error.is_some() && frames.last().map(|s| s.t_bar) != Some(lle.final_field.t_bar))
        {
            frames.push(lle.final_field.clone());
        }
        let trajectory = write_trajectory_file(run, &cfg.output, &Trajectory::from_lle(&frames))?;

        if let Some(e) = error {
            let err = CliError::new(kind_of(&e), e.to_string());
            run.write_json(
                ERROR_FILE,
                &error_doc(&err, Some((lle.steps, lle.final_field.t_bar))),
            )?;
            return Err(err);
        }
        let final_norm_sqr = lle.final_field.norm_sqr();
        let analysis = json!({
            "status": "ok",
            "steps": lle.steps,
            "t_end": lle.final_field.t_bar,
            "initial_norm_sqr": initial_norm_sqr,
            "final_norm_sqr": final_norm_sqr,
            "norm_ratio": final_norm_sqr / initial_norm_sqr,
            "final_max_abs": lle.final_field.max_abs(),
            "regime": regime_of(lle.output_series(), &cfg.analysis),
        });
        run.write_json("analysis.json", &analysis)?;
        Ok(json!({ "run": root, "trajectory": trajectory, "analysis": analysis }))
    })
}

pub fn simulate_mbe(g: &Global) -> CliResult<Value> {
    let mut cfg: SimulateMbeConfig = load_config(g.config_path("simulate-mbe")?)?;
    if let Some(seed) = g.seed {
        cfg.config.noise_seed = seed;
    }
    let init = cfg.init.generate(&cfg.config)?;
    let root = g.run_root("simulate-mbe", &cfg);
    let seed = cfg.config.noise_seed;
    in_run_dir(g, &root, "simulate-mbe", Some(seed), &cfg, |run| {
        let (mbe, error) = match run_mbe(&cfg.config, init) {
            Ok(r) => (r, None),
            Err(a) => (a.partial, Some(a.error)),
        };
        for (m, out) in mbe.outputs.iter().enumerate() {
            let name = format!("series_{}.csv", channel_label(m));
            run.write_with(&name, |f| write_samples_csv(f, out, mbe.output_dt, 0.0))?;
        }
        let mut frames = mbe.snapshots.clone();
        if frames.is_empty()
            || (error.is_some() && frames.last().map(|s| s.t) != Some(mbe.final_state.t))
        {
            frames.push(mbe.final_state.clone());
        }
        let trajectory = write_trajectory_file(run, &cfg.output, &Trajectory::from_mbe(&frames))?;

        if let Some(e) = error {
            let err = CliError::new(kind_of(&e), e.to_string());
            run.write_json(
                ERROR_FILE,
                &error_doc(&err, Some((mbe.steps, mbe.final_state.t))),
            )?;
            return Err(err);
        }
        let channels: Vec<Value> = (0..mbe.outputs.len())
            .map(|m| {
                let analysis = AnalysisSettings { channel: m, ..cfg.analysis };
                json!({ "channel": channel_label(m), "regime": regime_of(mbe.output_series(m), &analysis) })
            })
            .collect();
        let analysis = json!({
            "status": "ok",
            "steps": mbe.steps,
            "t_end": mbe.final_state.t,
            "dt": cfg.config.time_step(),
            "final_max_field": mbe.final_state.max_field(),
            "inversion_warnings": mbe.inversion_warnings,
            "channels": channels,
            "fixed_point": mbe_cw_fixed_point(&cfg.config).ok(),
        });
        run.write_json("analysis.json", &analysis)?;
        Ok(json!({ "run": root, "trajectory": trajectory, "analysis": analysis }))
    })
}

pub fn sweep(g: &Global) -> CliResult<Value> {
    let mut plan: SweepPlan = load_config(g.config_path("sweep")?)?;
    if let Some(seed) = g.seed {
        plan.seed = seed;
    }
    plan.validate()?;
    let root = g.run_root("sweep", &plan);
    in_run_dir(g, &root, "sweep", Some(plan.seed), &plan, |run| {
        let opts = SweepOptions {
            threads: g.threads,
            output_dir: Some(root.clone()),
        };
        let result = run_sweep(&plan, &opts)?;
        run.track(SUMMARY_FILE);
        for file in result.points.iter().filter_map(|p| p.series_file.clone()) {
            run.track(file);
        }
        let mut labels = std::collections::BTreeMap::<String, usize>::new();
        for p in &result.points {
            let key = p.label().map_or("failed", |l| l.as_str());
            *labels.entry(key.to_string()).or_default() += 1;
        }
        Ok(json!({
            "run": root,
            "summary": root.join(SUMMARY_FILE),
            "shape": result.shape,
            "points": result.points.len(),
            "failed": result.failed(),
            "labels": labels,
            "config_hash": result.provenance.config_hash,
        }))
    })
}

/// Series CSV, or the spatial mean of one channel of a trajectory file.
fn load_series(bytes: &[u8], channel: usize) -> CliResult<TimeSeries> {
    let is_trajectory =
        bytes.starts_with(BINARY_MAGIC) || bytes.starts_with(b"# maser-soliton trajectory");
    if is_trajectory {
        Ok(parse_trajectory(bytes)?.mean_series(channel)?)
    } else {
        Ok(parse_series_csv(bytes)?)
    }
}

pub fn analyze(g: &Global, input: &Path) -> CliResult<Value> {
    let cfg: AnalyzeConfig = match &g.config {
        Some(p) => load_config(p)?,
        None => AnalyzeConfig::default(),
    };
    let bytes = std::fs::read(input)
        .map_err(|e| CliError::config(format!("cannot read input {}: {e}", input.display())))?;
    let full = load_series(&bytes, cfg.channel)?;
    let ts = if cfg.discard_fraction > 0.0 {
        full.tail(cfg.discard_fraction)?
    } else {
        full
    };

    let regime = classify_regime(&ts, &cfg.thresholds);
    let pulses: Vec<Value> = detect_pulses_with(&ts, &cfg.thresholds.pulses)
        .iter()
        .map(|w| match fit_sech(&ts, w) {
            Ok(fit) => json!({ "window": w, "fit": fit }),
            Err(e) => json!({ "window": w, "fit": null, "error": e.to_string() }),
        })
        .collect();
    let spectrum = comb_spectrum_with(&ts, &cfg.thresholds.spectrum)?;
    let result = json!({
        "input": input,
        "input_sha256": sha256_hex(&bytes),
        "samples": ts.len(),
        "dt": ts.dt(),
        "regime": regime,
        "pulses": pulses,
        "spectrum": {
            "bin_width": spectrum.bin_width,
            "noise_floor": spectrum.noise_floor,
            "line_spacing": spectrum.line_spacing,
            "parseval_residual": spectrum.parseval_residual,
            "lines": spectrum.lines,
        },
    });
    match &g.out {
        Some(root) => {
            let resolved = json!({ "input_sha256": sha256_hex(&bytes), "analysis": cfg });
            in_run_dir(g, root, "analyze", None, &resolved, |run| {
                run.write_json("analysis.json", &result)?;
                run.write_with("spectrum.csv", |f| write_spectrum_csv(f, &spectrum))?;
                Ok(result.clone())
            })
        }
        None => Ok(result),
    }
}
