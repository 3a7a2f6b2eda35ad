//! Regime maps over a grid in two parameters.
//!
//! Cells run on a bounded rayon pool and are assembled in grid order, so the
//! map does not depend on the worker count or on scheduling.

use std::fs::{self, File};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use semiquantum_core::analysis::{classify_regime, RegimeCriteria, RegimeLabel};
use semiquantum_core::integrator::IntegratorSettings;
use semiquantum_core::ModelParams;

use crate::config::InitialSpec;
use crate::error::{LabError, Result};
use crate::table::{flush, fmt_f64};

pub const REGIME_HEADER: [&str; 9] = [
    "axis1_name",
    "axis1_value",
    "axis2_name",
    "axis2_value",
    "regime",
    "lambda_max",
    "stderr",
    "divergence_time",
    "status",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamName {
    Eps,
    Gamma,
    Delta,
    Alpha,
    Omega,
}

impl ParamName {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::Eps => "eps",
            ParamName::Gamma => "gamma",
            ParamName::Delta => "delta",
            ParamName::Alpha => "alpha",
            ParamName::Omega => "omega",
        }
    }
}

/// One grid axis: either `values` or `min`/`max`/`steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: ParamName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl Axis {
    pub fn values(name: ParamName, values: Vec<f64>) -> Self {
        Axis {
            name,
            values: Some(values),
            min: None,
            max: None,
            steps: None,
        }
    }

    pub fn range(name: ParamName, min: f64, max: f64, steps: usize) -> Self {
        Axis {
            name,
            values: None,
            min: Some(min),
            max: Some(max),
            steps: Some(steps),
        }
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        let pts = match (&self.values, self.min, self.max, self.steps) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(lo), Some(hi), Some(n)) => match n {
                0 => return Err(LabError::config("axis steps must be at least 1")),
                1 if lo == hi => vec![lo],
                1 => return Err(LabError::config("a one-step axis needs min == max")),
                _ => (0..n)
                    .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
                    .collect(),
            },
            _ => {
                return Err(LabError::config(format!(
                    "axis `{}` needs either `values` or all of `min`, `max`, `steps`",
                    self.name.as_str()
                )))
            }
        };
        if pts.is_empty() || pts.iter().any(|v| !v.is_finite()) {
            return Err(LabError::config(format!(
                "axis `{}` needs at least one finite value",
                self.name.as_str()
            )));
        }
        Ok(pts)
    }
}

/// Parameters held fixed across the map; the axis parameters may be omitted.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedParams {
    pub eps: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    pub omega: Option<f64>,
}

impl FixedParams {
    fn slot(&mut self, name: ParamName) -> &mut Option<f64> {
        match name {
            ParamName::Eps => &mut self.eps,
            ParamName::Gamma => &mut self.gamma,
            ParamName::Delta => &mut self.delta,
            ParamName::Alpha => &mut self.alpha,
            ParamName::Omega => &mut self.omega,
        }
    }

    /// Parameters at one cell. Validity is checked by the cell itself.
    fn at(mut self, a1: (ParamName, f64), a2: (ParamName, f64)) -> Result<ModelParams> {
        *self.slot(a1.0) = Some(a1.1);
        *self.slot(a2.0) = Some(a2.1);
        let need = |v: Option<f64>, n: &str| {
            v.ok_or_else(|| LabError::config(format!("parameter `{n}` is neither fixed nor an axis")))
        };
        Ok(ModelParams {
            eps: need(self.eps, "eps")?,
            gamma: self.gamma.unwrap_or(0.0),
            delta: need(self.delta, "delta")?,
            alpha: need(self.alpha, "alpha")?,
            omega: need(self.omega, "omega")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis1: Axis,
    pub axis2: Axis,
    #[serde(default)]
    pub fixed: FixedParams,
    /// A constrained block is re-solved on every cell; a direct state is reused as is.
    pub initial: InitialSpec,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub criteria: RegimeCriteria,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub output: PathBuf,
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| LabError::io(format!("cannot read sweep spec {}", path.display()), e))?;
        let spec: SweepSpec = serde_json::from_str(&text).map_err(|source| LabError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.axis1.name == self.axis2.name {
            return Err(LabError::config("sweep axes must name distinct parameters"));
        }
        let (v1, v2) = (self.axis1.points()?, self.axis2.points()?);
        self.fixed
            .at((self.axis1.name, v1[0]), (self.axis2.name, v2[0]))?;
        self.integrator.validate()?;
        let b = &self.criteria.budget;
        if !(b.transient >= 0.0 && b.total > b.transient && b.total.is_finite())
            || !(b.renorm_interval > 0.0 && b.renorm_interval.is_finite())
        {
            return Err(LabError::config(
                "budget needs 0 <= transient < total and renorm_interval > 0",
            ));
        }
        if self.workers == Some(0) {
            return Err(LabError::config("workers must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CellOutcome {
    Classified(RegimeLabel),
    Skipped(String),
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub i: usize,
    pub j: usize,
    pub axis1_value: f64,
    pub axis2_value: f64,
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeMap {
    pub axis1: ParamName,
    pub axis2: ParamName,
    pub shape: (usize, usize),
    /// Ordered by `(i, j)`.
    pub cells: Vec<Cell>,
}

fn run_cell(spec: &SweepSpec, v1: f64, v2: f64) -> CellOutcome {
    let params = match spec
        .fixed
        .at((spec.axis1.name, v1), (spec.axis2.name, v2))
        .and_then(|p| p.validate().map(|_| p).map_err(LabError::from))
    {
        Ok(p) => p,
        Err(e) => return CellOutcome::Skipped(e.to_string()),
    };
    let s0 = match spec.initial.resolve(&params) {
        Ok(s) => s,
        Err(e) => return CellOutcome::Skipped(e.to_string()),
    };
    match classify_regime(&s0, &params, &spec.integrator, &spec.criteria) {
        Ok(label) => CellOutcome::Classified(label),
        Err(e) => CellOutcome::Failed(e.to_string()),
    }
}

/// Classifies every cell of the grid.
pub fn run_sweep(spec: &SweepSpec) -> Result<RegimeMap> {
    spec.validate()?;
    let v1 = spec.axis1.points()?;
    let v2 = spec.axis2.points()?;
    let jobs: Vec<(usize, usize)> = (0..v1.len())
        .flat_map(|i| (0..v2.len()).map(move |j| (i, j)))
        .collect();
    let work = || {
        jobs.par_iter()
            .map(|&(i, j)| Cell {
                i,
                j,
                axis1_value: v1[i],
                axis2_value: v2[j],
                outcome: run_cell(spec, v1[i], v2[j]),
            })
            .collect::<Vec<_>>()
    };
    let cells = match spec.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| LabError::config(format!("cannot start worker pool: {e}")))?
            .install(work),
        None => work(),
    };
    Ok(RegimeMap {
        axis1: spec.axis1.name,
        axis2: spec.axis2.name,
        shape: (v1.len(), v2.len()),
        cells,
    })
}

/// Opens the output file, failing before any computation if it is not writable.
pub fn create_output(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .map_err(|e| LabError::io(format!("cannot create {}", dir.display()), e))?;
    }
    File::create(path).map_err(|e| LabError::io(format!("cannot create {}", path.display()), e))
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct RegimeRow {
    pub axis1_name: String,
    pub axis1_value: f64,
    pub axis2_name: String,
    pub axis2_value: f64,
    pub regime: String,
    pub lambda_max: Option<f64>,
    pub stderr: Option<f64>,
    pub divergence_time: Option<f64>,
    pub status: String,
}

impl RegimeMap {
    pub fn rows(&self) -> Vec<RegimeRow> {
        self.cells
            .iter()
            .map(|c| {
                let (regime, lyap, t_div, status) = match &c.outcome {
                    CellOutcome::Classified(l) => (
                        l.regime.as_str().to_owned(),
                        l.evidence.lyapunov,
                        l.evidence.divergence_time,
                        "ok".to_owned(),
                    ),
                    CellOutcome::Skipped(why) => (String::new(), None, None, format!("skipped: {why}")),
                    CellOutcome::Failed(why) => (String::new(), None, None, format!("failed: {why}")),
                };
                RegimeRow {
                    axis1_name: self.axis1.as_str().to_owned(),
                    axis1_value: c.axis1_value,
                    axis2_name: self.axis2.as_str().to_owned(),
                    axis2_value: c.axis2_value,
                    regime,
                    lambda_max: lyap.map(|l| l.lambda_max),
                    stderr: lyap.map(|l| l.standard_error),
                    divergence_time: t_div,
                    status,
                }
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_regimes(out, &self.rows())
    }
}

pub fn write_regimes<W: Write>(out: W, rows: &[RegimeRow]) -> Result<()> {
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REGIME_HEADER)?;
    for r in rows {
        w.write_record([
            r.axis1_name.clone(),
            fmt_f64(r.axis1_value),
            r.axis2_name.clone(),
            fmt_f64(r.axis2_value),
            r.regime.clone(),
            opt(r.lambda_max),
            opt(r.stderr),
            opt(r.divergence_time),
            r.status.clone(),
        ])?;
    }
    flush(w)
}

pub fn read_regimes<R: Read>(input: R) -> Result<Vec<RegimeRow>> {
    let mut r = csv::Reader::from_reader(input);
    let found: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if found != REGIME_HEADER {
        return Err(LabError::config(format!("unexpected regimes header {found:?}")));
    }
    r.deserialize().map(|row| Ok(row?)).collect()
}
