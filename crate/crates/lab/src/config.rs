//! JSON run configuration.
//!
//! ```json
//! {
//!   "eps": 1.05, "delta": 1.0, "alpha": 0.015, "omega": 1.0,
//!   "initial": { "n0": 2.0, "ominus0": 0.0, "oplus0": 0.0, "x0": 1.0, "p0": -2.54950976 },
//!   "t_end": 1000.0
//! }
//! ```
//!
//! `initial` may instead be a constraint block
//! `{ "e_eff": 4.8, "i_inv": 4.0, "x0": 1.0 }` solved by `make_initial`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use semiquantum_core::analysis::LyapunovBudget;
use semiquantum_core::integrator::IntegratorSettings;
use semiquantum_core::model::{make_initial, InitialConstraints, MomentumSign};
use semiquantum_core::{ModelParams, SystemState};

use crate::error::{LabError, Result};

fn default_t_end() -> f64 {
    100.0
}

fn default_sample_interval() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub eps: f64,
    #[serde(default)]
    pub gamma: f64,
    pub delta: f64,
    pub alpha: f64,
    pub omega: f64,
    pub initial: InitialSpec,
    /// Recipe for `--families`; falls back to a constrained `initial`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyRecipe>,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_sample_interval")]
    pub sample_interval: f64,
    #[serde(default)]
    pub lyapunov: LyapunovBudget,
    /// Output directory, overridden by `--out`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub plot: bool,
}

/// `<N+1>` is `n0 + 1`: the number itself is given, as in the figure captions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectInitial {
    pub n0: f64,
    pub ominus0: f64,
    pub oplus0: f64,
    pub x0: f64,
    pub p0: f64,
    #[serde(default)]
    pub dn0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstrainedInitial {
    pub e_eff: f64,
    pub i_inv: f64,
    #[serde(default)]
    pub ominus0: f64,
    #[serde(default)]
    pub oplus0: f64,
    pub x0: f64,
    #[serde(default)]
    pub dn0: f64,
    #[serde(default)]
    pub momentum_sign: MomentumSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Direct(DirectInitial),
    Constrained(ConstrainedInitial),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyRecipe {
    pub e_eff: f64,
    pub i_inv: f64,
    #[serde(default)]
    pub oplus0: f64,
    pub x0: f64,
    #[serde(default)]
    pub dn0: f64,
    #[serde(default)]
    pub momentum_sign: MomentumSign,
    /// Explicit `<O->_0` values; otherwise an even grid over the feasible range.
    #[serde(default, rename = "ominus0_grid", skip_serializing_if = "Option::is_none")]
    pub ominus0_grid: Option<Vec<f64>>,
}

impl ConstrainedInitial {
    pub fn constraints(&self) -> InitialConstraints {
        InitialConstraints {
            e_eff: self.e_eff,
            i_inv: self.i_inv,
            om0: self.ominus0,
            op0: self.oplus0,
            x0: self.x0,
            dn0: self.dn0,
            momentum_sign: self.momentum_sign,
        }
    }
}

impl InitialSpec {
    pub fn resolve(&self, p: &ModelParams) -> Result<SystemState> {
        match self {
            InitialSpec::Direct(d) => {
                let s = SystemState::new(d.n0 + 1.0, d.ominus0, d.oplus0, d.x0, d.p0).with_dn(d.dn0);
                if !s.is_finite() {
                    return Err(LabError::config("initial state must be finite"));
                }
                Ok(s)
            }
            InitialSpec::Constrained(c) => Ok(make_initial(&c.constraints(), p)?),
        }
    }
}

impl FamilyRecipe {
    fn base(&self, om0: f64) -> InitialConstraints {
        InitialConstraints {
            e_eff: self.e_eff,
            i_inv: self.i_inv,
            om0,
            op0: self.oplus0,
            x0: self.x0,
            dn0: self.dn0,
            momentum_sign: self.momentum_sign,
        }
    }

    /// Largest `|<O->_0|` for which both constraints are solvable.
    pub fn ominus0_limit(&self, p: &ModelParams) -> Option<f64> {
        let n1_max = 1.0
            + (self.e_eff - p.coupling_at(self.x0) * self.oplus0 - 0.5 * p.omega * self.x0 * self.x0)
                / p.eps;
        let r = n1_max * n1_max - self.i_inv - self.oplus0 * self.oplus0;
        (n1_max >= 1.0 && r >= 0.0).then(|| r.sqrt())
    }

    /// The `<O->_0` values of an `n`-member family.
    ///
    /// Without an explicit grid the members are evenly spaced over
    /// `[-0.99 L, 0.99 L]`, `L` the feasibility limit, so no member sits at a
    /// turning point of the field.
    pub fn ominus0_values(&self, n: usize, p: &ModelParams) -> Result<Vec<f64>> {
        if let Some(grid) = &self.ominus0_grid {
            if grid.len() != n {
                return Err(LabError::config(format!(
                    "family requests {n} members but ominus0_grid has {}",
                    grid.len()
                )));
            }
            return Ok(grid.clone());
        }
        if n == 0 {
            return Err(LabError::config("--families needs at least one member"));
        }
        let limit = self
            .ominus0_limit(p)
            .ok_or_else(|| LabError::config("family constraints admit no initial state"))?;
        if n == 1 {
            return Ok(vec![0.0]);
        }
        let edge = 0.99 * limit;
        Ok((0..n)
            .map(|k| -edge + 2.0 * edge * k as f64 / (n - 1) as f64)
            .collect())
    }

    pub fn members(&self, n: usize, p: &ModelParams) -> Result<Vec<SystemState>> {
        self.ominus0_values(n, p)?
            .into_iter()
            .map(|om0| Ok(make_initial(&self.base(om0), p)?))
            .collect()
    }
}

impl From<&ConstrainedInitial> for FamilyRecipe {
    fn from(c: &ConstrainedInitial) -> Self {
        FamilyRecipe {
            e_eff: c.e_eff,
            i_inv: c.i_inv,
            oplus0: c.oplus0,
            x0: c.x0,
            dn0: c.dn0,
            momentum_sign: c.momentum_sign,
            ominus0_grid: None,
        }
    }
}

impl RunConfig {
    pub fn params(&self) -> Result<ModelParams> {
        Ok(ModelParams::new(
            self.eps,
            self.gamma,
            self.delta,
            self.alpha,
            self.omega,
        )?)
    }

    pub fn initial_state(&self) -> Result<SystemState> {
        self.initial.resolve(&self.params()?)
    }

    pub fn family_recipe(&self) -> Result<FamilyRecipe> {
        match (&self.family, &self.initial) {
            (Some(f), _) => Ok(f.clone()),
            (None, InitialSpec::Constrained(c)) => Ok(c.into()),
            (None, InitialSpec::Direct(_)) => Err(LabError::config(
                "--families needs a `family` block or a constrained `initial`",
            )),
        }
    }

    /// Checks everything a command needs before it starts computing.
    pub fn validate(&self) -> Result<()> {
        let p = self.params()?;
        self.integrator.validate()?;
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(LabError::config("t_end must be positive and finite"));
        }
        if !(self.sample_interval.is_finite() && self.sample_interval > 0.0) {
            return Err(LabError::config("sample_interval must be positive and finite"));
        }
        let b = &self.lyapunov;
        if !(b.transient >= 0.0 && b.total > b.transient && b.total.is_finite())
            || !(b.renorm_interval > 0.0 && b.renorm_interval.is_finite())
        {
            return Err(LabError::config(
                "lyapunov budget needs 0 <= transient < total and renorm_interval > 0",
            ));
        }
        self.initial.resolve(&p)?;
        Ok(())
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|source| LabError::Parse {
            path: origin.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| LabError::io(format!("cannot read config {}", path.display()), e))?;
        Self::from_json(&text, path)
    }
}
