//! Adaptive integration of the mean-value equations.
//!
//! All runs share one Dormand-Prince 5(4) stepper. Output is taken from the
//! continuous extension of accepted steps, so sampling, crossing detection and
//! renormalization never shorten the controller's natural step.

mod dopri5;
mod events;
mod tangent;

pub use events::{
    integrate_with_events, Coordinate, CrossingDirection, CrossingEvent, DirectionFilter,
    SectionPlane,
};
pub use tangent::{integrate_augmented, GrowthLog, RenormRecord};

use crate::error::{Error, Result};
use crate::model::{rhs, ModelParams, SystemState, DIM};
use alloc::vec::Vec;
use dopri5::{Dopri5, StepOutcome};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct IntegratorSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub h_init: f64,
    pub h_max: f64,
    /// Max-norm of the state beyond which a run is declared divergent.
    pub divergence_norm: f64,
    /// Budget on attempted (accepted + rejected) steps.
    pub max_steps: u64,
}

/// Tolerances of 1e-14 keep the invariant drift over 1000 time units of a
/// bounded run near 1e-11.
impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            abs_tol: 1e-14,
            rel_tol: 1e-14,
            h_init: 1e-3,
            h_max: 0.5,
            divergence_norm: 1e8,
            max_steps: 200_000_000,
        }
    }
}

impl IntegratorSettings {
    pub fn with_tolerances(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.abs_tol) || !positive(self.rel_tol) {
            return Err(Error::Config("tolerances must be positive and finite"));
        }
        if !positive(self.h_init) || !positive(self.h_max) {
            return Err(Error::Config("h_init and h_max must be positive and finite"));
        }
        if !positive(self.divergence_norm) {
            return Err(Error::Config("divergence_norm must be positive"));
        }
        if self.max_steps < 1 {
            return Err(Error::Config("max_steps must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Status {
    Completed,
    /// The state max-norm exceeded the divergence threshold at `t_div`.
    Diverged { t_div: f64 },
    StepBudgetExhausted { t_reached: f64 },
}

impl Status {
    pub fn divergence_time(&self) -> Option<f64> {
        match *self {
            Status::Diverged { t_div } => Some(t_div),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    pub h_min: f64,
    pub h_max: f64,
}

impl Default for StepStats {
    fn default() -> Self {
        StepStats {
            accepted: 0,
            rejected: 0,
            h_min: f64::INFINITY,
            h_max: 0.0,
        }
    }
}

impl StepStats {
    fn record_accepted(&mut self, h: f64) {
        self.accepted += 1;
        self.h_min = self.h_min.min(h);
        self.h_max = self.h_max.max(h);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sample {
    pub t: f64,
    pub state: SystemState,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    /// Samples at `k * sample_interval`, strictly increasing in time.
    pub samples: Vec<Sample>,
    pub status: Status,
    pub stats: StepStats,
    /// Time and state at the end of the last accepted step.
    pub t_final: f64,
    pub final_state: SystemState,
}

fn check_inputs(s0: &SystemState, p: &ModelParams, t_end: f64, settings: &IntegratorSettings) -> Result<()> {
    settings.validate()?;
    p.validate()?;
    if !s0.is_finite() {
        return Err(Error::Domain("initial state has a non-finite component"));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::Config("t_end must be positive and finite"));
    }
    Ok(())
}

/// Emits samples on the grid `k * interval` that fall inside the last step.
struct Sampler {
    interval: f64,
    next: u64,
    last: u64,
}

impl Sampler {
    fn new(interval: f64, t_end: f64) -> Self {
        // tolerate t_end being a multiple of the interval up to rounding
        let last = libm::floor(t_end / interval * (1.0 + 4.0 * f64::EPSILON)) as u64;
        Sampler {
            interval,
            next: 1,
            last,
        }
    }

    fn drain<F: FnMut(&[f64], &mut [f64])>(
        &mut self,
        stepper: &Dopri5<F>,
        t_end: f64,
        dn: f64,
        out: &mut Vec<Sample>,
    ) {
        let mut buf = [0.0; DIM];
        let mut full = alloc::vec![0.0; stepper.y().len()];
        while self.next <= self.last {
            let t = (self.next as f64 * self.interval).min(t_end);
            if t > stepper.t() {
                break;
            }
            if t == stepper.t() {
                buf.copy_from_slice(&stepper.y()[..DIM]);
            } else {
                stepper.interpolate(t, &mut full);
                buf.copy_from_slice(&full[..DIM]);
            }
            out.push(Sample {
                t,
                state: SystemState::from_slice(&buf, dn),
            });
            self.next += 1;
        }
    }
}

fn exceeds(y: &[f64], threshold: f64) -> bool {
    y.iter().any(|v| v.abs() > threshold)
}

fn non_finite(y: &[f64]) -> bool {
    y.iter().any(|v| !v.is_finite())
}

/// Integrates from `t = 0` to `t_end`, sampling every `sample_interval`.
///
/// The first sample is the initial state at `t = 0`.
pub fn integrate(
    s0: &SystemState,
    p: &ModelParams,
    t_end: f64,
    settings: &IntegratorSettings,
    sample_interval: f64,
) -> Result<Trajectory> {
    check_inputs(s0, p, t_end, settings)?;
    if !(sample_interval.is_finite() && sample_interval > 0.0) {
        return Err(Error::Config("sample_interval must be positive and finite"));
    }
    run(s0, p, t_end, settings, Some(sample_interval), |_| Ok(()))
}

/// Shared driver. `on_step` sees the stepper after each accepted step.
pub(crate) fn run<G>(
    s0: &SystemState,
    p: &ModelParams,
    t_end: f64,
    settings: &IntegratorSettings,
    sample_interval: Option<f64>,
    mut on_step: G,
) -> Result<Trajectory>
where
    G: FnMut(&Dopri5<&mut dyn FnMut(&[f64], &mut [f64])>) -> Result<()>,
{
    let params = *p;
    let mut f = move |y: &[f64], dy: &mut [f64]| rhs(y, &params, dy);
    let f: &mut dyn FnMut(&[f64], &mut [f64]) = &mut f;
    let mut stepper = Dopri5::new(f, &s0.to_array(), 0.0, settings, DIM);
    let mut samples = Vec::new();
    let mut sampler = sample_interval.map(|dt| Sampler::new(dt, t_end));
    if sampler.is_some() {
        samples.push(Sample { t: 0.0, state: *s0 });
    }

    let status = loop {
        if stepper.t() >= t_end {
            break Status::Completed;
        }
        match stepper.step(t_end)? {
            StepOutcome::BudgetExhausted => {
                break Status::StepBudgetExhausted {
                    t_reached: stepper.t(),
                }
            }
            StepOutcome::Accepted => {}
        }
        if non_finite(stepper.y()) {
            return Err(Error::NumericalFailure {
                t: stepper.step_start(),
                reason: "non-finite state",
            });
        }
        if let Some(s) = sampler.as_mut() {
            s.drain(&stepper, t_end, s0.dn, &mut samples);
        }
        on_step(&stepper)?;
        if exceeds(stepper.y(), settings.divergence_norm) {
            break Status::Diverged { t_div: stepper.t() };
        }
    };

    Ok(Trajectory {
        samples,
        status,
        stats: stepper.stats().clone(),
        t_final: stepper.t(),
        final_state: SystemState::from_slice(stepper.y(), s0.dn),
    })
}
