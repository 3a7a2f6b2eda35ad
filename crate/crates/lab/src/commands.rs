//! The five subcommands. Each writes its files, returns a JSON summary and
//! reports divergence so the caller can map it to an exit code.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use semiquantum_core::analysis::{
    conic_fit_residual, largest_lyapunov, poincare, PoincareSection,
};
use semiquantum_core::integrator::{
    integrate, CrossingDirection, DirectionFilter, Status, Trajectory,
};
use semiquantum_core::linear_oracle::{
    bogoliubov_uv, classify, evolve_classical, evolve_critical, evolve_linear, QuantumTriple,
    DEFAULT_CLASSIFY_TOL,
};
use semiquantum_core::model::invariants;
use semiquantum_core::{Error as CoreError, ModelParams, SystemState};

use crate::config::RunConfig;
use crate::error::{LabError, Result};
use crate::svg::{Plot, Series};
use crate::sweep::{create_output, run_sweep, SweepSpec};
use crate::table::{section_rows, trajectory_rows, write_section, write_trajectory};

/// Comparisons against the unstable closed form stop once it reaches this `n1`.
pub const ORACLE_N1_CUTOFF: f64 = 1e6;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// File name prefix.
    pub stem: String,
    pub plot: bool,
    pub expect_divergence: bool,
    pub families: Option<usize>,
    /// `None` records both directions and plots upward crossings only.
    pub direction: Option<DirectionFilter>,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>, stem: impl Into<String>) -> Self {
        RunOptions {
            out_dir: out_dir.into(),
            stem: stem.into(),
            plot: false,
            expect_divergence: false,
            families: None,
            direction: None,
        }
    }

    fn path(&self, suffix: &str) -> PathBuf {
        self.out_dir.join(format!("{}.{suffix}", self.stem))
    }

    fn prepare(&self) -> Result<()> {
        fs::create_dir_all(&self.out_dir).map_err(|e| {
            LabError::io(format!("cannot create output directory {}", self.out_dir.display()), e)
        })
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Value,
    pub files: Vec<PathBuf>,
    pub divergence_time: Option<f64>,
    pub budget_exhausted: Option<f64>,
}

impl Outcome {
    /// Applies the divergence and step-budget rules after all files are written.
    pub fn into_result(self, expect_divergence: bool) -> Result<Outcome> {
        if let Some(t) = self.budget_exhausted {
            return Err(LabError::Numerical(format!("step budget exhausted at t = {t}")));
        }
        match self.divergence_time {
            Some(t_div) if !expect_divergence => Err(LabError::Divergence { t_div }),
            _ => Ok(self),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| LabError::io(format!("cannot create {}", path.display()), e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| LabError::io(format!("cannot write {}", path.display()), e))
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).expect("json values always serialize");
    write_text(path, &(text + "\n"))
}

fn status_name(s: &Status) -> &'static str {
    match s {
        Status::Completed => "Completed",
        Status::Diverged { .. } => "Diverged",
        Status::StepBudgetExhausted { .. } => "StepBudgetExhausted",
    }
}

fn budget_time(s: &Status) -> Option<f64> {
    match s {
        Status::StepBudgetExhausted { t_reached } => Some(*t_reached),
        _ => None,
    }
}

fn header(command: &str, cfg: &RunConfig, s0: &SystemState, opts: &RunOptions) -> Value {
    json!({
        "command": command,
        "run": opts.stem,
        "params": { "eps": cfg.eps, "gamma": cfg.gamma, "delta": cfg.delta, "alpha": cfg.alpha, "omega": cfg.omega },
        "initial": s0,
        "integrator": cfg.integrator,
    })
}

fn finish(mut summary: Value, started: Instant, warnings: Vec<String>) -> Value {
    summary["wall_time_s"] = json!(started.elapsed().as_secs_f64());
    summary["warnings"] = json!(warnings);
    summary
}

fn max_drift(traj: &Trajectory, p: &ModelParams) -> (f64, f64) {
    let Some(first) = traj.samples.first() else {
        return (0.0, 0.0);
    };
    let inv0 = invariants(&first.state, p);
    traj.samples.iter().fold((0.0, 0.0), |(de, di), s| {
        let inv = invariants(&s.state, p);
        (
            f64::max(de, (inv.e_eff - inv0.e_eff).abs()),
            f64::max(di, (inv.i_inv - inv0.i_inv).abs()),
        )
    })
}

pub fn simulate(cfg: &RunConfig, opts: &RunOptions) -> Result<Outcome> {
    let started = Instant::now();
    opts.prepare()?;
    let p = cfg.params()?;
    let s0 = cfg.initial_state()?;
    let traj = integrate(&s0, &p, cfg.t_end, &cfg.integrator, cfg.sample_interval)?;
    let rows = trajectory_rows(&traj, &p);

    let mut files = vec![opts.path("trajectory.csv")];
    write_trajectory(create(&files[0])?, &rows)?;
    if opts.plot {
        let path = opts.path("trajectory.svg");
        let col = |f: fn(&crate::table::TrajectoryRow) -> f64| -> Vec<(f64, f64)> {
            rows.iter().map(|r| (r.t, f(r))).collect()
        };
        let svg = Plot::new(&format!("{}: <N> and invariants", opts.stem), "t", "value")
            .with(Series::line("<N>", col(|r| r.n1 - 1.0)))
            .with(Series::line("E_eff", col(|r| r.e_eff)))
            .with(Series::line("I", col(|r| r.i_inv)))
            .render();
        write_text(&path, &svg)?;
        files.push(path);
    }

    let (de, di) = max_drift(&traj, &p);
    let mut summary = header("simulate", cfg, &s0, opts);
    summary["t_end"] = json!(cfg.t_end);
    summary["sample_interval"] = json!(cfg.sample_interval);
    summary["status"] = json!(status_name(&traj.status));
    summary["divergence_time"] = json!(traj.status.divergence_time());
    summary["t_final"] = json!(traj.t_final);
    summary["samples"] = json!(rows.len());
    summary["steps"] = json!(traj.stats);
    summary["max_invariant_drift"] = json!({ "e_eff": de, "i_inv": di });
    let mut warnings = Vec::new();
    if let Some(t) = traj.status.divergence_time() {
        warnings.push(format!("trajectory diverged at t = {t}"));
    }
    let summary = finish(summary, started, warnings);
    let json_path = opts.path("summary.json");
    write_json(&json_path, &summary)?;
    files.push(json_path);

    Ok(Outcome {
        summary,
        files,
        divergence_time: traj.status.divergence_time(),
        budget_exhausted: budget_time(&traj.status),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OracleMode {
    Linear,
    Critical,
    Classify,
}

/// Largest deviations between the integrated decoupled system and the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct Deviation {
    pub max_abs: f64,
    /// Per sample `max_k |num_k - exact_k| / max_k |exact_k|`, maximized over samples.
    pub max_rel: f64,
    pub compared_samples: usize,
    pub t_compared: f64,
}

/// Compares an `alpha = 0` integration with the closed-form evolution.
pub fn oracle_deviation(
    s0: &SystemState,
    p: &ModelParams,
    t_end: f64,
    settings: &semiquantum_core::integrator::IntegratorSettings,
    sample_interval: f64,
    critical: bool,
) -> Result<(Deviation, Trajectory)> {
    if p.alpha != 0.0 {
        return Err(LabError::config(
            "oracle evolution modes need alpha = 0 (the closed forms are for the decoupled system)",
        ));
    }
    if critical && p.delta.abs() != p.eps {
        return Err(LabError::config("critical mode needs |delta| = eps"));
    }
    let traj = integrate(s0, p, t_end, settings, sample_interval)?;
    let q0 = QuantumTriple::new(s0.n1, s0.om, s0.op);
    let mut dev = Deviation::default();
    for sample in &traj.samples {
        let t = sample.t;
        let q = if critical && p.delta == -p.eps {
            evolve_critical(&q0.parity(), p.eps, t)?.parity()
        } else if critical {
            evolve_critical(&q0, p.eps, t)?
        } else {
            evolve_linear(&q0, p.eps, p.delta, t)?
        };
        if q.n1 >= ORACLE_N1_CUTOFF {
            break;
        }
        let (x, px) = evolve_classical(s0.x, s0.p, p.omega, t);
        let exact = [q.n1, q.om, q.op, x, px];
        let num = sample.state.to_array();
        let abs = (0..5).map(|k| (num[k] - exact[k]).abs()).fold(0.0, f64::max);
        let scale = exact.iter().map(|v| v.abs()).fold(0.0, f64::max);
        dev.max_abs = dev.max_abs.max(abs);
        dev.max_rel = dev.max_rel.max(if scale > 0.0 { abs / scale } else { abs });
        dev.compared_samples += 1;
        dev.t_compared = t;
    }
    Ok((dev, traj))
}

pub fn oracle(cfg: &RunConfig, mode: OracleMode, opts: &RunOptions) -> Result<Outcome> {
    let started = Instant::now();
    let p = cfg.params()?;
    if mode != OracleMode::Classify && p.alpha != 0.0 {
        return Err(LabError::config(format!(
            "oracle mode {mode:?} needs alpha = 0, got {}",
            p.alpha
        )));
    }
    opts.prepare()?;
    let s0 = cfg.initial_state()?;
    let regime = classify(&p, DEFAULT_CLASSIFY_TOL);
    let uv = match bogoliubov_uv(&p) {
        Ok((u, v)) => json!({ "u": u, "v": v }),
        Err(CoreError::Critical) => Value::Null,
        Err(e) => return Err(e.into()),
    };
    let mut summary = header("oracle", cfg, &s0, opts);
    summary["mode"] = json!(format!("{mode:?}").to_lowercase());
    summary["regime"] = json!(regime);
    summary["bogoliubov"] = uv;

    let mut budget = None;
    if mode != OracleMode::Classify {
        let (dev, traj) = oracle_deviation(
            &s0,
            &p,
            cfg.t_end,
            &cfg.integrator,
            cfg.sample_interval,
            mode == OracleMode::Critical,
        )?;
        summary["max_abs_deviation"] = json!(dev.max_abs);
        summary["max_rel_deviation"] = json!(dev.max_rel);
        summary["compared_samples"] = json!(dev.compared_samples);
        summary["t_compared"] = json!(dev.t_compared);
        // Growth past the comparison cutoff is the closed form's own
        // prediction, so a diverged status is reported but not an error.
        summary["status"] = json!(status_name(&traj.status));
        budget = budget_time(&traj.status);
    }
    let summary = finish(summary, started, Vec::new());
    let path = opts.path("oracle.json");
    write_json(&path, &summary)?;
    Ok(Outcome {
        summary,
        files: vec![path],
        divergence_time: None,
        budget_exhausted: budget,
    })
}

fn section_record(section: &PoincareSection, plot_filter: DirectionFilter) -> (Value, Vec<(f64, f64)>) {
    let pts: Vec<(f64, f64)> = section
        .points
        .iter()
        .filter(|pt| plot_filter.accepts(pt.direction))
        .map(|pt| (pt.om, pt.op))
        .collect();
    let record = json!({
        "initial": section.initial,
        "crossings": section.len(),
        "up": section.points.iter().filter(|pt| pt.direction == CrossingDirection::Up).count(),
        "status": status_name(&section.status),
        "divergence_time": section.status.divergence_time(),
        "conic_residual": conic_fit_residual(&pts),
    });
    (record, pts)
}

pub fn poincare_cmd(cfg: &RunConfig, opts: &RunOptions) -> Result<Outcome> {
    let started = Instant::now();
    let p = cfg.params()?;
    let members: Vec<SystemState> = match opts.families {
        Some(n) => cfg.family_recipe()?.members(n, &p)?,
        None => vec![cfg.initial_state()?],
    };
    opts.prepare()?;
    let record_filter = opts.direction.unwrap_or(DirectionFilter::Both);
    let plot_filter = opts.direction.unwrap_or(DirectionFilter::Up);

    let mut files = Vec::new();
    let mut records = Vec::new();
    let mut plot = Plot::new(&format!("{}: section X = 0", opts.stem), "<O->", "<O+>");
    let mut warnings = Vec::new();
    let mut divergence_time: Option<f64> = None;
    let mut budget = None;
    for (k, s0) in members.iter().enumerate() {
        let section = poincare(s0, &p, cfg.t_end, &cfg.integrator, record_filter)?;
        let path = match opts.families {
            Some(_) => opts.path(&format!("family{k:02}.section.csv")),
            None => opts.path("section.csv"),
        };
        write_section(create(&path)?, &section_rows(&section))?;
        files.push(path);
        let (record, pts) = section_record(&section, plot_filter);
        if section.is_empty() {
            warnings.push(format!("member {k}: no crossings of X = 0 before t = {}", cfg.t_end));
        }
        if let Some(t) = section.status.divergence_time() {
            warnings.push(format!("member {k}: diverged at t = {t}"));
            divergence_time = Some(divergence_time.map_or(t, |d: f64| d.min(t)));
        }
        budget = budget.or(budget_time(&section.status));
        plot = plot.with(Series::dots(format!("om0 = {:.3}", s0.om), pts));
        records.push(record);
    }
    if opts.plot {
        let path = opts.path("section.svg");
        write_text(&path, &plot.render())?;
        files.push(path);
    }

    let mut summary = header("poincare", cfg, &members[0], opts);
    summary["t_end"] = json!(cfg.t_end);
    summary["direction"] = json!(record_filter);
    summary["members"] = json!(records);
    summary["status"] = json!(if divergence_time.is_some() {
        "Diverged"
    } else if budget.is_some() {
        "StepBudgetExhausted"
    } else {
        "Completed"
    });
    let summary = finish(summary, started, warnings);
    let json_path = opts.path("summary.json");
    write_json(&json_path, &summary)?;
    files.push(json_path);
    Ok(Outcome {
        summary,
        files,
        divergence_time,
        budget_exhausted: budget,
    })
}

pub fn lyapunov_cmd(cfg: &RunConfig, opts: &RunOptions) -> Result<Outcome> {
    let started = Instant::now();
    opts.prepare()?;
    let p = cfg.params()?;
    let s0 = cfg.initial_state()?;
    let path = opts.path("lyapunov.json");
    let mut summary = header("lyapunov", cfg, &s0, opts);
    summary["budget"] = json!(cfg.lyapunov);
    match largest_lyapunov(&s0, &p, &cfg.integrator, &cfg.lyapunov) {
        Ok(est) => {
            summary["lambda_max"] = json!(est.lambda_max);
            summary["standard_error"] = json!(est.standard_error);
            summary["transient"] = json!(est.transient_discarded);
            summary["total"] = json!(est.total_time);
            summary["renorm_count"] = json!(est.renorm_count);
            summary["divergence_time"] = json!(est.divergence_time);
            summary["status"] = json!(if est.divergence_time.is_some() { "Diverged" } else { "Completed" });
            let summary = finish(summary, started, Vec::new());
            write_json(&path, &summary)?;
            Ok(Outcome {
                summary,
                files: vec![path],
                divergence_time: est.divergence_time,
                budget_exhausted: None,
            })
        }
        Err(e @ CoreError::DivergedBeforeTransient { t_div, transient }) => {
            summary["status"] = json!("DivergedBeforeTransient");
            summary["divergence_time"] = json!(t_div);
            summary["transient"] = json!(transient);
            let summary = finish(summary, started, vec![e.to_string()]);
            write_json(&path, &summary)?;
            Err(e.into())
        }
        Err(e) => Err(e.into()),
    }
}

/// Resolves the output path of a sweep against `out_dir` when it is relative.
pub fn sweep_output(spec: &SweepSpec, out_dir: &Path) -> PathBuf {
    if spec.output.is_absolute() {
        spec.output.clone()
    } else {
        out_dir.join(&spec.output)
    }
}

pub fn sweep_cmd(spec: &SweepSpec, out_dir: &Path) -> Result<Outcome> {
    let started = Instant::now();
    spec.validate()?;
    let path = sweep_output(spec, out_dir);
    let file = create_output(&path)?;
    let map = run_sweep(spec)?;
    map.write_csv(BufWriter::new(file))?;
    let counts = |f: fn(&crate::sweep::CellOutcome) -> bool| map.cells.iter().filter(|c| f(&c.outcome)).count();
    let summary = json!({
        "command": "sweep",
        "output": path,
        "shape": map.shape,
        "cells": map.cells.len(),
        "skipped": counts(|o| matches!(o, crate::sweep::CellOutcome::Skipped(_))),
        "failed": counts(|o| matches!(o, crate::sweep::CellOutcome::Failed(_))),
        "criteria": spec.criteria,
        "integrator": spec.integrator,
        "status": "Completed",
    });
    let summary = finish(summary, started, Vec::new());
    let mut json_path = path.clone().into_os_string();
    json_path.push(".summary.json");
    let json_path = PathBuf::from(json_path);
    write_json(&json_path, &summary)?;
    Ok(Outcome {
        summary,
        files: vec![path, json_path],
        divergence_time: None,
        budget_exhausted: None,
    })
}
