//! Dormand-Prince 5(4) stepper with PI step-size control and continuous
//! output, working on flat `f64` buffers of any dimension.

use super::{IntegratorSettings, StepStats};
use crate::error::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;
use libm::{pow, sqrt};

// autonomous right-hand side, the nodes c_i are not needed
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO: f64 = 0.2 - BETA * 0.75;
/// Largest step shrink factor.
const FAC_SHRINK: f64 = 1.0 / 0.2;
/// Largest step growth factor.
const FAC_GROW: f64 = 10.0;

pub(crate) enum StepOutcome {
    Accepted,
    BudgetExhausted,
}

/// Interpolation data for the last accepted step.
struct Dense {
    t0: f64,
    h: f64,
    r: [Vec<f64>; 5],
}

pub(crate) struct Dopri5<F: FnMut(&[f64], &mut [f64])> {
    f: F,
    n: usize,
    /// Leading components that enter the error norm.
    n_ctrl: usize,
    t: f64,
    y: Vec<f64>,
    y_new: Vec<f64>,
    y_stage: Vec<f64>,
    k: [Vec<f64>; 7],
    h: f64,
    fac_old: f64,
    last_rejected: bool,
    settings: IntegratorSettings,
    stats: StepStats,
    dense: Dense,
}

impl<F: FnMut(&[f64], &mut [f64])> Dopri5<F> {
    pub(crate) fn new(mut f: F, y0: &[f64], t0: f64, settings: &IntegratorSettings, n_ctrl: usize) -> Self {
        let n = y0.len();
        let mut k: [Vec<f64>; 7] = core::array::from_fn(|_| vec![0.0; n]);
        f(y0, &mut k[0]);
        Dopri5 {
            f,
            n,
            n_ctrl: n_ctrl.min(n),
            t: t0,
            y: y0.to_vec(),
            y_new: vec![0.0; n],
            y_stage: vec![0.0; n],
            k,
            h: settings.h_init.min(settings.h_max),
            fac_old: 1e-4,
            last_rejected: false,
            settings: settings.clone(),
            stats: StepStats::default(),
            dense: Dense {
                t0,
                h: 0.0,
                r: core::array::from_fn(|_| y0.to_vec()),
            },
        }
    }

    pub(crate) fn t(&self) -> f64 {
        self.t
    }

    pub(crate) fn y(&self) -> &[f64] {
        &self.y
    }

    /// Mutable access to the current state. Call [`Self::refresh_derivative`]
    /// after modifying it.
    pub(crate) fn y_mut(&mut self) -> &mut [f64] {
        &mut self.y
    }

    pub(crate) fn refresh_derivative(&mut self) {
        (self.f)(&self.y, &mut self.k[0]);
    }

    pub(crate) fn stats(&self) -> &StepStats {
        &self.stats
    }

    /// Start time of the last accepted step.
    pub(crate) fn step_start(&self) -> f64 {
        self.dense.t0
    }

    /// State at the start of the last accepted step.
    pub(crate) fn y_prev(&self) -> &[f64] {
        &self.dense.r[0]
    }

    /// Evaluates the continuous extension of the last accepted step at `t`.
    #[allow(clippy::needless_range_loop)]
    pub(crate) fn interpolate(&self, t: f64, out: &mut [f64]) {
        let d = &self.dense;
        if d.h == 0.0 {
            out.copy_from_slice(&self.y);
            return;
        }
        let theta = (t - d.t0) / d.h;
        let theta1 = 1.0 - theta;
        for i in 0..self.n {
            out[i] = d.r[0][i]
                + theta
                    * (d.r[1][i]
                        + theta1 * (d.r[2][i] + theta * (d.r[3][i] + theta1 * d.r[4][i])));
        }
    }

    fn stage(&mut self, h: f64, coeffs: &[(usize, f64)], target: usize) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for &(j, a) in coeffs {
                acc += a * self.k[j][i];
            }
            self.y_stage[i] = self.y[i] + h * acc;
        }
        (self.f)(&self.y_stage, &mut self.k[target]);
    }

    /// Takes one accepted step that does not pass `t_limit`, retrying rejected
    /// trial steps as needed.
    pub(crate) fn step(&mut self, t_limit: f64) -> Result<StepOutcome> {
        loop {
            if self.stats.accepted + self.stats.rejected >= self.settings.max_steps {
                return Ok(StepOutcome::BudgetExhausted);
            }
            let mut h = self.h.min(self.settings.h_max);
            let mut clipped = false;
            if self.t + h >= t_limit {
                h = t_limit - self.t;
                clipped = true;
            }
            let h_floor = 16.0 * f64::EPSILON * self.t.abs().max(1.0);
            if h < h_floor && !clipped {
                return Err(Error::NumericalFailure {
                    t: self.t,
                    reason: "step size underflow",
                });
            }
            if h <= 0.0 {
                return Err(Error::NumericalFailure {
                    t: self.t,
                    reason: "non-positive step towards the time limit",
                });
            }

            self.stage(h, &[(0, A21)], 1);
            self.stage(h, &[(0, A31), (1, A32)], 2);
            self.stage(h, &[(0, A41), (1, A42), (2, A43)], 3);
            self.stage(h, &[(0, A51), (1, A52), (2, A53), (3, A54)], 4);
            self.stage(h, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], 5);
            for i in 0..self.n {
                let k = &self.k;
                self.y_new[i] = self.y[i]
                    + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
            }
            (self.f)(&self.y_new, &mut self.k[6]);

            let mut sum = 0.0;
            for i in 0..self.n_ctrl {
                let k = &self.k;
                let err_i = h
                    * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let scale = self.settings.abs_tol
                    + self.settings.rel_tol * f64::max(self.y[i].abs(), self.y_new[i].abs());
                let r = err_i / scale;
                sum += r * r;
            }
            let err = sqrt(sum / self.n_ctrl as f64);

            if !err.is_finite() {
                self.stats.rejected += 1;
                self.last_rejected = true;
                self.h = 0.1 * h;
                continue;
            }

            let fac11 = pow(err, EXPO);
            if err <= 1.0 {
                let fac = (fac11 / pow(self.fac_old, BETA) / SAFETY).clamp(1.0 / FAC_GROW, FAC_SHRINK);
                let mut h_new = h / fac;
                self.fac_old = err.max(1e-4);
                if self.last_rejected {
                    h_new = h_new.min(h);
                }
                self.last_rejected = false;
                self.accept(h);
                self.t = if clipped { t_limit } else { self.t + h };
                // a step shortened to hit t_limit says nothing about the
                // natural step size, keep the previous proposal
                if !clipped {
                    self.h = h_new;
                }
                return Ok(StepOutcome::Accepted);
            }
            self.stats.rejected += 1;
            self.last_rejected = true;
            self.h = h / f64::min(FAC_SHRINK, fac11 / SAFETY);
        }
    }

    fn accept(&mut self, h: f64) {
        self.stats.record_accepted(h);
        let d = &mut self.dense;
        d.t0 = self.t;
        d.h = h;
        for i in 0..self.n {
            let k = &self.k;
            let diff = self.y_new[i] - self.y[i];
            let bspl = h * k[0][i] - diff;
            d.r[0][i] = self.y[i];
            d.r[1][i] = diff;
            d.r[2][i] = bspl;
            d.r[3][i] = diff - h * k[6][i] - bspl;
            d.r[4][i] = h
                * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
        }
        core::mem::swap(&mut self.y, &mut self.y_new);
        self.k.swap(0, 6);
    }
}
