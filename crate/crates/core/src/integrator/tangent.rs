//! Variational flow: the base state co-integrated with tangent vectors under
//! the Jacobian, with periodic modified Gram-Schmidt renormalization.

use super::dopri5::{Dopri5, StepOutcome};
use super::{check_inputs, exceeds, non_finite, IntegratorSettings, Status, StepStats};
use crate::error::{Error, Result};
use crate::model::{jacobian_apply, rhs, ModelParams, SystemState, DIM};
use alloc::vec::Vec;
use libm::{log, sqrt};

/// Log-growth of each tangent vector over one renormalization interval.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RenormRecord {
    /// Time of the renormalization.
    pub t: f64,
    /// Length of the interval that ended at `t`.
    pub dt: f64,
    /// `ln |v_j|` before normalization, in Gram-Schmidt order.
    pub log_growth: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrowthLog {
    pub records: Vec<RenormRecord>,
    pub status: Status,
    pub stats: StepStats,
    pub t_final: f64,
    pub final_state: SystemState,
    /// Orthonormal tangent set after the last renormalization.
    pub final_tangents: Vec<[f64; DIM]>,
}

/// Orthonormalizes `vectors` in place and returns the norms found along the way.
fn modified_gram_schmidt(vectors: &mut [f64], k: usize, norms: &mut [f64]) -> Result<()> {
    for i in 0..k {
        for j in 0..i {
            let (done, rest) = vectors.split_at_mut(i * DIM);
            let vj = &done[j * DIM..(j + 1) * DIM];
            let vi = &mut rest[..DIM];
            let dot: f64 = vi.iter().zip(vj).map(|(a, b)| a * b).sum();
            for (a, b) in vi.iter_mut().zip(vj) {
                *a -= dot * b;
            }
        }
        let vi = &mut vectors[i * DIM..(i + 1) * DIM];
        let norm = sqrt(vi.iter().map(|v| v * v).sum());
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NumericalFailure {
                t: f64::NAN,
                reason: "degenerate tangent vector during renormalization",
            });
        }
        vi.iter_mut().for_each(|v| *v /= norm);
        norms[i] = norm;
    }
    Ok(())
}

/// Co-integrates `ds/dt = f(s)` and `dv/dt = J(s) v` for each tangent vector.
///
/// Every `renorm_interval` (and at `t_end`) the tangent set is orthonormalized,
/// the log of each pre-normalization norm is logged and `observer` is called.
/// Step-size control uses the base-state error only.
pub fn integrate_augmented(
    s0: &SystemState,
    tangent0: &[[f64; DIM]],
    p: &ModelParams,
    t_end: f64,
    settings: &IntegratorSettings,
    renorm_interval: f64,
    mut observer: impl FnMut(&RenormRecord, &SystemState),
) -> Result<GrowthLog> {
    check_inputs(s0, p, t_end, settings)?;
    let k = tangent0.len();
    if !(1..=DIM).contains(&k) {
        return Err(Error::Config("between 1 and 5 tangent vectors are required"));
    }
    if !(renorm_interval.is_finite() && renorm_interval > 0.0) {
        return Err(Error::Config("renorm_interval must be positive and finite"));
    }

    let mut y0 = Vec::with_capacity(DIM * (k + 1));
    y0.extend_from_slice(&s0.to_array());
    for v in tangent0 {
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("tangent vector has a non-finite component"));
        }
        y0.extend_from_slice(v);
    }
    let mut scratch = [0.0; DIM];
    modified_gram_schmidt(&mut y0[DIM..], k, &mut scratch)
        .map_err(|_| Error::Config("initial tangent vectors must be linearly independent"))?;

    let params = *p;
    let f = move |y: &[f64], dy: &mut [f64]| {
        let (base, tangents) = y.split_at(DIM);
        let (dbase, dtangents) = dy.split_at_mut(DIM);
        rhs(base, &params, dbase);
        for (v, dv) in tangents.chunks_exact(DIM).zip(dtangents.chunks_exact_mut(DIM)) {
            jacobian_apply(base, &params, v, dv);
        }
    };
    let mut stepper = Dopri5::new(f, &y0, 0.0, settings, DIM);

    let mut records = Vec::new();
    let mut norms = [0.0; DIM];
    let mut n_renorm: u64 = 1;
    let mut t_last = 0.0;

    let status = loop {
        if stepper.t() >= t_end {
            break Status::Completed;
        }
        let t_next = (n_renorm as f64 * renorm_interval).min(t_end);
        match stepper.step(t_next)? {
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
        if exceeds(&stepper.y()[..DIM], settings.divergence_norm) {
            break Status::Diverged { t_div: stepper.t() };
        }
        if stepper.t() == t_next {
            let t = stepper.t();
            modified_gram_schmidt(&mut stepper.y_mut()[DIM..], k, &mut norms).map_err(|_| {
                Error::NumericalFailure {
                    t,
                    reason: "degenerate tangent vector during renormalization",
                }
            })?;
            stepper.refresh_derivative();
            let record = RenormRecord {
                t,
                dt: t - t_last,
                log_growth: norms[..k].iter().map(|&n| log(n)).collect(),
            };
            observer(&record, &SystemState::from_slice(stepper.y(), s0.dn));
            records.push(record);
            t_last = t;
            n_renorm += 1;
        }
    };

    let y = stepper.y();
    Ok(GrowthLog {
        records,
        status,
        stats: stepper.stats().clone(),
        t_final: stepper.t(),
        final_state: SystemState::from_slice(y, s0.dn),
        final_tangents: y[DIM..]
            .chunks_exact(DIM)
            .map(|c| {
                let mut v = [0.0; DIM];
                v.copy_from_slice(c);
                v
            })
            .collect(),
    })
}
