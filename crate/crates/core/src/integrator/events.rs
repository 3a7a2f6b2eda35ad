//! Plane-crossing detection on the continuous extension of accepted steps.

use super::dopri5::Dopri5;
use super::{check_inputs, run, IntegratorSettings, Trajectory};
use crate::error::{Error, Result};
use crate::model::{ModelParams, SystemState, DIM};
use alloc::vec::Vec;
use libm::sqrt;

/// Relative tolerance on the crossing coordinate after refinement.
pub const CROSSING_TOL: f64 = 1e-12;
const MAX_REFINE_ITERS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Coordinate {
    N1,
    Om,
    Op,
    X,
    P,
}

impl Coordinate {
    pub fn index(self) -> usize {
        match self {
            Coordinate::N1 => 0,
            Coordinate::Om => 1,
            Coordinate::Op => 2,
            Coordinate::X => 3,
            Coordinate::P => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SectionPlane {
    pub coordinate: Coordinate,
    pub value: f64,
}

impl SectionPlane {
    /// The `X = 0` plane.
    pub const FIELD_NODE: SectionPlane = SectionPlane {
        coordinate: Coordinate::X,
        value: 0.0,
    };
}

impl Default for SectionPlane {
    fn default() -> Self {
        Self::FIELD_NODE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CrossingDirection {
    /// Coordinate increasing through the plane.
    Up,
    Down,
}

impl CrossingDirection {
    pub fn sign(self) -> i8 {
        match self {
            CrossingDirection::Up => 1,
            CrossingDirection::Down => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum DirectionFilter {
    Up,
    Down,
    #[default]
    Both,
}

impl DirectionFilter {
    pub fn accepts(self, d: CrossingDirection) -> bool {
        match self {
            DirectionFilter::Both => true,
            DirectionFilter::Up => d == CrossingDirection::Up,
            DirectionFilter::Down => d == CrossingDirection::Down,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CrossingEvent {
    pub t_cross: f64,
    pub state: SystemState,
    pub direction: CrossingDirection,
}

/// Integrates like [`super::integrate`] and records every crossing of `plane`.
///
/// A crossing needs a sign change of the plane coordinate across an accepted
/// step, so a start point lying on the plane is not reported. Samples are
/// only collected when `sample_interval` is given.
pub fn integrate_with_events(
    s0: &SystemState,
    p: &ModelParams,
    t_end: f64,
    settings: &IntegratorSettings,
    plane: SectionPlane,
    direction_filter: DirectionFilter,
    sample_interval: Option<f64>,
) -> Result<(Trajectory, Vec<CrossingEvent>)> {
    check_inputs(s0, p, t_end, settings)?;
    if let Some(dt) = sample_interval {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config("sample_interval must be positive and finite"));
        }
    }
    if !plane.value.is_finite() {
        return Err(Error::Config("section plane value must be finite"));
    }
    let mut events = Vec::new();
    let dn = s0.dn;
    let traj = run(s0, p, t_end, settings, sample_interval, |stepper| {
        if let Some(ev) = detect(stepper, plane, dn)? {
            if direction_filter.accepts(ev.direction) {
                events.push(ev);
            }
        }
        Ok(())
    })?;
    Ok((traj, events))
}

fn detect<F: FnMut(&[f64], &mut [f64])>(
    stepper: &Dopri5<F>,
    plane: SectionPlane,
    dn: f64,
) -> Result<Option<CrossingEvent>> {
    let c = plane.coordinate.index();
    let g0 = stepper.y_prev()[c] - plane.value;
    let g1 = stepper.y()[c] - plane.value;
    if g0 == 0.0 || (g1 != 0.0 && g0.signum() == g1.signum()) {
        return Ok(None);
    }
    let direction = if g0 < 0.0 {
        CrossingDirection::Up
    } else {
        CrossingDirection::Down
    };
    let t_cross = if g1 == 0.0 {
        stepper.t()
    } else {
        refine(stepper, c, plane.value, g0, g1)?
    };
    let mut full = alloc::vec![0.0; stepper.y().len()];
    stepper.interpolate(t_cross, &mut full);
    Ok(Some(CrossingEvent {
        t_cross,
        state: SystemState::from_slice(&full[..DIM], dn),
        direction,
    }))
}

/// Illinois-modified regula falsi on the interpolant of the last step.
fn refine<F: FnMut(&[f64], &mut [f64])>(
    stepper: &Dopri5<F>,
    c: usize,
    value: f64,
    mut ga: f64,
    mut gb: f64,
) -> Result<f64> {
    let mut a = stepper.step_start();
    let mut b = stepper.t();
    let mut side = 0i8;
    let mut buf = alloc::vec![0.0; stepper.y().len()];
    for _ in 0..MAX_REFINE_ITERS {
        let mut t = (a * gb - b * ga) / (gb - ga);
        if !(t > a && t < b) {
            t = 0.5 * (a + b);
        }
        stepper.interpolate(t, &mut buf);
        let g = buf[c] - value;
        let scale = 1.0 + sqrt(buf[..DIM].iter().map(|v| v * v).sum());
        if g.abs() <= CROSSING_TOL * scale {
            return Ok(t);
        }
        if g.signum() == gb.signum() {
            b = t;
            gb = g;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            a = t;
            ga = g;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        }
        if b - a <= 4.0 * f64::EPSILON * b.abs().max(1.0) {
            return Ok(if ga.abs() < gb.abs() { a } else { b });
        }
    }
    Err(Error::NumericalFailure {
        t: stepper.step_start(),
        reason: "crossing refinement did not converge",
    })
}
