//! Poincare sections, the largest Lyapunov exponent and regime labels.

use crate::error::{Error, Result};
use crate::integrator::{
    integrate_augmented, integrate_with_events, CrossingDirection, DirectionFilter,
    IntegratorSettings, SectionPlane, Status,
};
use crate::model::{ModelParams, SystemState, DIM};
use alloc::vec::Vec;
use libm::sqrt;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SectionPoint {
    pub t_cross: f64,
    pub om: f64,
    pub op: f64,
    pub n1: f64,
    pub p: f64,
    /// Field amplitude at the refined crossing, zero up to the crossing tolerance.
    pub x: f64,
    pub direction: CrossingDirection,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PoincareSection {
    pub points: Vec<SectionPoint>,
    pub plane: SectionPlane,
    pub direction: DirectionFilter,
    pub params: ModelParams,
    pub initial: SystemState,
    /// Status of the underlying run. A diverged run keeps the crossings found
    /// before the divergence.
    pub status: Status,
}

impl PoincareSection {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(om, op)` pairs, the usual projection of the section.
    pub fn projection(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|pt| (pt.om, pt.op)).collect()
    }
}

/// Crossings of the `X = 0` plane matching `direction`.
pub fn poincare(
    s0: &SystemState,
    p: &ModelParams,
    t_end: f64,
    settings: &IntegratorSettings,
    direction: DirectionFilter,
) -> Result<PoincareSection> {
    let plane = SectionPlane::FIELD_NODE;
    let (traj, events) = integrate_with_events(s0, p, t_end, settings, plane, direction, None)?;
    let points = events
        .iter()
        .map(|e| SectionPoint {
            t_cross: e.t_cross,
            om: e.state.om,
            op: e.state.op,
            n1: e.state.n1,
            p: e.state.p,
            x: e.state.x,
            direction: e.direction,
        })
        .collect();
    Ok(PoincareSection {
        points,
        plane,
        direction,
        params: *p,
        initial: *s0,
        status: traj.status,
    })
}

/// Residual of the best algebraic conic through the projected points.
///
/// Points are centred and scaled to unit spread, then the conic
/// `a u^2 + b uv + c v^2 + d u + e v + f = 0` with unit coefficient norm
/// minimizing the squared algebraic residual is found from the smallest
/// eigenvector of the 6x6 scatter matrix. The returned value is the RMS
/// residual, a dimensionless measure of how far the points are from one
/// conic curve. Needs at least 6 points.
pub fn conic_fit_residual(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 6 {
        return None;
    }
    let n = points.len() as f64;
    let (mu, mv) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), &(u, v)| (a + u / n, b + v / n));
    let spread = sqrt(
        points
            .iter()
            .map(|&(u, v)| (u - mu) * (u - mu) + (v - mv) * (v - mv))
            .sum::<f64>()
            / n,
    );
    if spread.is_nan() || spread <= 0.0 {
        return Some(0.0);
    }
    let mut m = [[0.0; 6]; 6];
    for &(u, v) in points {
        let (u, v) = ((u - mu) / spread, (v - mv) / spread);
        let row = [u * u, u * v, v * v, u, v, 1.0];
        for i in 0..6 {
            for j in 0..6 {
                m[i][j] += row[i] * row[j];
            }
        }
    }
    let smallest = symmetric_min_eigenvalue(m);
    Some(sqrt(smallest.max(0.0) / n))
}

/// Smallest eigenvalue of a symmetric 6x6 matrix by cyclic Jacobi rotations.
#[allow(clippy::needless_range_loop)]
fn symmetric_min_eigenvalue(mut a: [[f64; 6]; 6]) -> f64 {
    for _ in 0..100 {
        let off: f64 = (0..6)
            .flat_map(|i| (0..6).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let diag: f64 = (0..6).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-30 * diag {
            break;
        }
        for p in 0..6 {
            for q in (p + 1)..6 {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..6 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..6 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..6).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct LyapunovBudget {
    pub transient: f64,
    pub total: f64,
    pub renorm_interval: f64,
}

impl Default for LyapunovBudget {
    fn default() -> Self {
        LyapunovBudget {
            transient: 200.0,
            total: 5000.0,
            renorm_interval: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LyapunovEstimate {
    pub lambda_max: f64,
    pub standard_error: f64,
    pub transient_discarded: f64,
    pub total_time: f64,
    pub renorm_count: usize,
    /// Set when the run diverged after the transient; the estimate then
    /// covers `[transient, t_div]`.
    pub divergence_time: Option<f64>,
}

/// Fixed, generic initial tangent direction.
const INITIAL_TANGENT: [f64; DIM] = [
    0.447_213_595_499_957_9,
    0.447_213_595_499_957_9,
    0.447_213_595_499_957_9,
    0.447_213_595_499_957_9,
    0.447_213_595_499_957_9,
];

/// Benettin estimate of the largest Lyapunov exponent with one tangent vector.
///
/// Renormalizations inside `[0, transient]` are discarded. The standard error
/// is the dispersion of the per-interval rates divided by the square root of
/// their count.
pub fn largest_lyapunov(
    s0: &SystemState,
    p: &ModelParams,
    settings: &IntegratorSettings,
    budget: &LyapunovBudget,
) -> Result<LyapunovEstimate> {
    lyapunov_with_tangent(s0, &INITIAL_TANGENT, p, settings, budget)
}

/// As [`largest_lyapunov`] with a caller-chosen initial tangent vector.
pub fn lyapunov_with_tangent(
    s0: &SystemState,
    tangent: &[f64; DIM],
    p: &ModelParams,
    settings: &IntegratorSettings,
    budget: &LyapunovBudget,
) -> Result<LyapunovEstimate> {
    let LyapunovBudget {
        transient,
        total,
        renorm_interval,
    } = *budget;
    if !(transient >= 0.0 && total > transient && total.is_finite()) {
        return Err(Error::Config("lyapunov budget needs 0 <= transient < total"));
    }
    if !(renorm_interval > 0.0 && renorm_interval.is_finite()) {
        return Err(Error::Config("renorm_interval must be positive"));
    }
    let log = integrate_augmented(s0, &[*tangent], p, total, settings, renorm_interval, |_, _| {})?;
    let t_end = match log.status {
        Status::Diverged { t_div } if t_div <= transient => {
            return Err(Error::DivergedBeforeTransient { t_div, transient })
        }
        Status::Diverged { t_div } => t_div,
        Status::StepBudgetExhausted { t_reached } if t_reached <= transient => {
            return Err(Error::NumericalFailure {
                t: t_reached,
                reason: "step budget exhausted before the transient ended",
            })
        }
        _ => log.t_final,
    };

    let kept: Vec<_> = log
        .records
        .iter()
        .filter(|r| r.t - r.dt >= transient * (1.0 - 1e-12))
        .collect();
    let count = kept.len();
    if count < 10 {
        return Err(Error::Config("fewer than 10 renormalizations after the transient"));
    }
    let t_start = kept[0].t - kept[0].dt;
    let t_stop = kept[count - 1].t;
    let lambda_max = kept.iter().map(|r| r.log_growth[0]).sum::<f64>() / (t_stop - t_start);

    let rates: Vec<f64> = kept.iter().map(|r| r.log_growth[0] / r.dt).collect();
    let mean = rates.iter().sum::<f64>() / count as f64;
    let var = rates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (count - 1) as f64;
    let standard_error = sqrt(var / count as f64);

    Ok(LyapunovEstimate {
        lambda_max,
        standard_error,
        transient_discarded: t_start,
        total_time: t_stop,
        renorm_count: count,
        divergence_time: log.status.divergence_time().filter(|_| t_end < total),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Regime {
    Periodic,
    Quasiperiodic,
    Chaotic,
    Divergent,
    /// Too few crossings for the section test.
    Inconclusive,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Periodic => "Periodic",
            Regime::Quasiperiodic => "Quasiperiodic",
            Regime::Chaotic => "Chaotic",
            Regime::Divergent => "Divergent",
            Regime::Inconclusive => "Inconclusive",
        }
    }

    pub fn is_regular(self) -> bool {
        matches!(self, Regime::Periodic | Regime::Quasiperiodic)
    }
}

impl core::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "Periodic" => Regime::Periodic,
            "Quasiperiodic" => Regime::Quasiperiodic,
            "Chaotic" => Regime::Chaotic,
            "Divergent" => Regime::Divergent,
            "Inconclusive" => Regime::Inconclusive,
            _ => return Err(Error::Config("unknown regime label")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RegimeCriteria {
    pub budget: LyapunovBudget,
    /// Exponent above which a significant estimate counts as chaos.
    pub chaos_threshold: f64,
    /// Required `lambda_max / standard_error`.
    pub significance: f64,
    /// Cluster radius relative to the section's extent.
    pub cluster_radius: f64,
    pub max_periodic_clusters: usize,
    pub min_crossings: usize,
    pub direction: DirectionFilter,
}

impl Default for RegimeCriteria {
    fn default() -> Self {
        RegimeCriteria {
            budget: LyapunovBudget::default(),
            chaos_threshold: 5e-3,
            significance: 3.0,
            cluster_radius: 1e-3,
            max_periodic_clusters: 64,
            min_crossings: 50,
            direction: DirectionFilter::Up,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegimeEvidence {
    pub lyapunov: Option<LyapunovEstimate>,
    pub divergence_time: Option<f64>,
    pub crossings: usize,
    /// Clusters among the first half of the crossings and among all of them.
    pub clusters_half: usize,
    pub clusters_all: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegimeLabel {
    pub regime: Regime,
    pub evidence: RegimeEvidence,
}

/// Number of greedy clusters of radius `radius` among `points`.
pub fn count_clusters(points: &[(f64, f64)], radius: f64) -> usize {
    let mut centres: Vec<(f64, f64)> = Vec::new();
    let r2 = radius * radius;
    for &(u, v) in points {
        let hit = centres
            .iter()
            .any(|&(cu, cv)| (u - cu) * (u - cu) + (v - cv) * (v - cv) <= r2);
        if !hit {
            centres.push((u, v));
        }
    }
    centres.len()
}

fn extent(points: &[(f64, f64)]) -> f64 {
    let (mut lo_u, mut hi_u, mut lo_v, mut hi_v) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(u, v) in points {
        lo_u = lo_u.min(u);
        hi_u = hi_u.max(u);
        lo_v = lo_v.min(v);
        hi_v = hi_v.max(v);
    }
    f64::max(hi_u - lo_u, hi_v - lo_v)
}

/// Labels the orbit from `s0` over `criteria.budget.total` time units.
///
/// Divergence wins. Otherwise a significant exponent above the threshold is
/// chaos, and the section decides between a finite point set whose cluster
/// count has saturated (periodic) and a filling curve (quasiperiodic).
pub fn classify_regime(
    s0: &SystemState,
    p: &ModelParams,
    settings: &IntegratorSettings,
    criteria: &RegimeCriteria,
) -> Result<RegimeLabel> {
    let budget = &criteria.budget;
    let section = poincare(s0, p, budget.total, settings, criteria.direction)?;
    let mut evidence = RegimeEvidence {
        lyapunov: None,
        divergence_time: section.status.divergence_time(),
        crossings: section.len(),
        clusters_half: 0,
        clusters_all: 0,
    };
    if evidence.divergence_time.is_some() {
        return Ok(RegimeLabel {
            regime: Regime::Divergent,
            evidence,
        });
    }

    let estimate = match largest_lyapunov(s0, p, settings, budget) {
        Ok(e) => e,
        Err(Error::DivergedBeforeTransient { t_div, .. }) => {
            evidence.divergence_time = Some(t_div);
            return Ok(RegimeLabel {
                regime: Regime::Divergent,
                evidence,
            });
        }
        Err(e) => return Err(e),
    };
    evidence.lyapunov = Some(estimate);
    if let Some(t_div) = estimate.divergence_time {
        evidence.divergence_time = Some(t_div);
        return Ok(RegimeLabel {
            regime: Regime::Divergent,
            evidence,
        });
    }
    if estimate.lambda_max > criteria.chaos_threshold
        && estimate.lambda_max > criteria.significance * estimate.standard_error
    {
        return Ok(RegimeLabel {
            regime: Regime::Chaotic,
            evidence,
        });
    }

    let pts = section.projection();
    if pts.len() < criteria.min_crossings {
        return Ok(RegimeLabel {
            regime: Regime::Inconclusive,
            evidence,
        });
    }
    let radius = criteria.cluster_radius * extent(&pts).max(f64::MIN_POSITIVE);
    evidence.clusters_half = count_clusters(&pts[..pts.len() / 2], radius);
    evidence.clusters_all = count_clusters(&pts, radius);
    let regime = if evidence.clusters_all <= criteria.max_periodic_clusters
        && evidence.clusters_all == evidence.clusters_half
    {
        Regime::Periodic
    } else {
        Regime::Quasiperiodic
    };
    Ok(RegimeLabel { regime, evidence })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use libm::{cos, sin};

    #[test]
    fn clusters_of_a_finite_orbit_saturate() {
        let pts: Vec<_> = (0..200)
            .map(|k| {
                let a = 2.0 * PI * (k % 5) as f64 / 5.0;
                (cos(a), sin(a))
            })
            .collect();
        assert_eq!(count_clusters(&pts, 1e-3), 5);
        assert_eq!(count_clusters(&pts[..100], 1e-3), 5);
    }

    #[test]
    fn clusters_of_a_dense_circle_keep_growing() {
        let golden = (sqrt(5.0) - 1.0) / 2.0;
        let pts: Vec<_> = (0..2000)
            .map(|k| {
                let a = 2.0 * PI * (k as f64 * golden);
                (cos(a), sin(a))
            })
            .collect();
        let half = count_clusters(&pts[..1000], 2e-3);
        let all = count_clusters(&pts, 2e-3);
        assert!(all > half && all > 64);
    }

    #[test]
    fn conic_residual_small_on_ellipse_large_on_cloud() {
        let ellipse: Vec<_> = (0..300)
            .map(|k| {
                let a = 0.37 * k as f64;
                (3.0 + 2.0 * cos(a) - 0.5 * sin(a), -1.0 + 0.7 * sin(a))
            })
            .collect();
        assert!(conic_fit_residual(&ellipse).unwrap() < 1e-6);

        // deterministic scatter filling a square
        let cloud: Vec<_> = (0..300)
            .map(|k| {
                let k = k as f64;
                ((k * 0.618_033_988_7) % 1.0, (k * 0.754_877_666_2) % 1.0)
            })
            .collect();
        assert!(conic_fit_residual(&cloud).unwrap() > 1e-2);
        assert!(conic_fit_residual(&cloud[..5]).is_none());
    }

    #[test]
    fn regime_label_round_trip() {
        for r in [
            Regime::Periodic,
            Regime::Quasiperiodic,
            Regime::Chaotic,
            Regime::Divergent,
            Regime::Inconclusive,
        ] {
            assert_eq!(r.as_str().parse::<Regime>().unwrap(), r);
        }
        assert!("chaos".parse::<Regime>().is_err());
    }

    #[test]
    fn lyapunov_budget_validation() {
        let p = ModelParams::symmetric(1.05, 1.0, 0.0, 1.0).unwrap();
        let s0 = SystemState::new(2.0, 0.0, 0.0, 1.0, 0.0);
        let s = IntegratorSettings::default();
        let bad = LyapunovBudget {
            transient: 10.0,
            total: 5.0,
            renorm_interval: 1.0,
        };
        assert!(largest_lyapunov(&s0, &p, &s, &bad).is_err());
        let too_short = LyapunovBudget {
            transient: 0.0,
            total: 5.0,
            renorm_interval: 1.0,
        };
        assert!(largest_lyapunov(&s0, &p, &s, &too_short).is_err());
    }

    #[test]
    fn divergence_before_transient_is_an_error() {
        let p = ModelParams::symmetric(1.0, 2.0, 0.0, 1.0).unwrap();
        let s0 = SystemState::new(2.0, 0.0, 0.0, 1.0, 0.0);
        let budget = LyapunovBudget {
            transient: 50.0,
            total: 100.0,
            renorm_interval: 1.0,
        };
        match largest_lyapunov(&s0, &p, &IntegratorSettings::default(), &budget) {
            Err(Error::DivergedBeforeTransient { t_div, transient }) => {
                assert!(t_div < 50.0);
                assert_eq!(transient, 50.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
