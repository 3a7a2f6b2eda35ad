//! Scenario presets for the published figures.
//!
//! All presets use `Delta = 1`, `omega = 1`, `gamma = 0` and the caption
//! initial state `<N> = 1`, `<O+-> = 0`, `X = 1`, `P = -2.54950976`. The
//! family block fixes `E_eff = 4.8`, `I = 4`.

use std::fmt;
use std::str::FromStr;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use semiquantum_core::analysis::LyapunovBudget;
use semiquantum_core::integrator::IntegratorSettings;
use semiquantum_core::model::MomentumSign;

use crate::config::{DirectInitial, FamilyRecipe, InitialSpec, RunConfig};

pub const CAPTION_P0: f64 = -2.549_509_76;
pub const FAMILY_E_EFF: f64 = 4.8;
pub const FAMILY_I_INV: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetId {
    Fig1a,
    Fig1b,
    Fig1c,
    Fig2a,
    Fig2b,
    Fig2c,
    Fig2d,
    Fig3a,
    Fig3b,
    Fig4,
}

impl PresetId {
    pub const ALL: [PresetId; 10] = [
        PresetId::Fig1a,
        PresetId::Fig1b,
        PresetId::Fig1c,
        PresetId::Fig2a,
        PresetId::Fig2b,
        PresetId::Fig2c,
        PresetId::Fig2d,
        PresetId::Fig3a,
        PresetId::Fig3b,
        PresetId::Fig4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PresetId::Fig1a => "fig1a",
            PresetId::Fig1b => "fig1b",
            PresetId::Fig1c => "fig1c",
            PresetId::Fig2a => "fig2a",
            PresetId::Fig2b => "fig2b",
            PresetId::Fig2c => "fig2c",
            PresetId::Fig2d => "fig2d",
            PresetId::Fig3a => "fig3a",
            PresetId::Fig3b => "fig3b",
            PresetId::Fig4 => "fig4",
        }
    }

    /// `(eps/Delta, alpha/Delta, t_end, sample_interval)`.
    fn table(self) -> (f64, f64, f64, f64) {
        match self {
            PresetId::Fig1a => (1.05, 1e-4, 1000.0, 0.1),
            PresetId::Fig1b => (1.05, 0.015, 1000.0, 0.1),
            PresetId::Fig1c => (2.0, 1.1, 200.0, 0.1),
            PresetId::Fig2a => (1.5, 0.015, 5000.0, 0.1),
            PresetId::Fig2b => (1.075, 0.015, 5000.0, 0.1),
            PresetId::Fig2c => (1.065, 0.015, 5000.0, 0.1),
            PresetId::Fig2d => (1.05, 0.015, 5000.0, 0.1),
            PresetId::Fig3a => (1.05, 1e-4, 5000.0, 0.1),
            PresetId::Fig3b => (1.05, 0.01, 5000.0, 0.1),
            PresetId::Fig4 => (1.0, 1e-6, 20.0, 0.01),
        }
    }

    pub fn expand(self) -> RunConfig {
        let (eps, alpha, t_end, sample_interval) = self.table();
        RunConfig {
            eps,
            gamma: 0.0,
            delta: 1.0,
            alpha,
            omega: 1.0,
            initial: InitialSpec::Direct(DirectInitial {
                n0: 1.0,
                ominus0: 0.0,
                oplus0: 0.0,
                x0: 1.0,
                p0: CAPTION_P0,
                dn0: 0.0,
            }),
            family: Some(FamilyRecipe {
                e_eff: FAMILY_E_EFF,
                i_inv: FAMILY_I_INV,
                oplus0: 0.0,
                x0: 1.0,
                dn0: 0.0,
                momentum_sign: MomentumSign::Negative,
                ominus0_grid: None,
            }),
            integrator: IntegratorSettings::default(),
            t_end,
            sample_interval,
            lyapunov: LyapunovBudget::default(),
            out_dir: None,
            plot: false,
        }
    }
}

impl fmt::Display for PresetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PresetId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PresetId::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset `{s}`"))
    }
}
