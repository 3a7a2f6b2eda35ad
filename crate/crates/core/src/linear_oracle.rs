//! Exact evolution of the decoupled (`alpha = 0`) system and its normal-mode
//! analysis.
//!
//! With `A = delta n1 + eps op` and the conserved `B = eps n1 + delta op` the
//! quantum triple obeys `om' = 2A`, `A' = -2 eta^2 om`, `eta^2 = eps^2 - delta^2`.
//! Writing the solution through
//!
//! ```text
//! S(t) = sin(2 eta t) / eta,    K(t) = (1 - cos(2 eta t)) / eta^2
//! ```
//!
//! gives a form with no division by `eta^2`:
//!
//! ```text
//! n1(t) = n1 + delta (A K + om S)
//! om(t) = om (1 - eta^2 K) + A S
//! op(t) = op - eps (A K + om S)
//! ```
//!
//! `S` and `K` are even in `eta`, so they are evaluated from `eta^2` alone with
//! trigonometric functions when `eta^2 > 0`, hyperbolic ones when `eta^2 < 0`
//! and a short series near zero. At `eta = 0` they reduce to `2t` and `2t^2`,
//! the polynomial evolution of the critical case.

use crate::error::{Error, Result};
use crate::model::{invariant_i, ModelParams};
use libm::{cos, sin, sinh, sqrt};
use num_complex::Complex64;

/// `|2 eta t|` below which `S` and `K` are taken from their series.
pub const SERIES_THRESHOLD: f64 = 1e-4;

/// Default relative tolerance of [`classify`] on the regime boundaries.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RegimeKind {
    /// `|delta| < sqrt(eps^2 - gamma^2)`: both normal frequencies positive.
    StablePositiveDefinite,
    /// `|delta| = sqrt(eps^2 - gamma^2)`: one normal frequency vanishes.
    StableSemidefinite,
    /// `sqrt(eps^2 - gamma^2) < |delta| < eps`: one normal frequency negative.
    StableNonPositive,
    /// `|delta| = eps`: non-diagonalizable, polynomial growth.
    Critical,
    /// `|delta| > eps`: complex normal modes, exponential growth.
    Unstable,
}

impl RegimeKind {
    pub fn is_stable(self) -> bool {
        matches!(
            self,
            RegimeKind::StablePositiveDefinite
                | RegimeKind::StableSemidefinite
                | RegimeKind::StableNonPositive
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuantumRegime {
    pub kind: RegimeKind,
    pub eta: Complex64,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
}

/// The quantum mean values `(<N+1>, <O->, <O+>)` at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuantumTriple {
    pub n1: f64,
    pub om: f64,
    pub op: f64,
}

impl QuantumTriple {
    pub const fn new(n1: f64, om: f64, op: f64) -> Self {
        QuantumTriple { n1, om, op }
    }

    pub fn invariant_i(&self) -> f64 {
        invariant_i(&crate::model::SystemState::new(self.n1, self.om, self.op, 0.0, 0.0))
    }

    pub fn parity(&self) -> Self {
        QuantumTriple {
            n1: self.n1,
            om: -self.om,
            op: -self.op,
        }
    }

    fn is_finite(&self) -> bool {
        self.n1.is_finite() && self.om.is_finite() && self.op.is_finite()
    }
}

/// Normal-mode analysis of the decoupled quantum Hamiltonian.
///
/// Boundaries are detected with relative tolerance `tol` on `|delta| - eps` and
/// `|delta| - sqrt(eps^2 - gamma^2)`; the boundary label wins ties.
pub fn classify(p: &ModelParams, tol: f64) -> QuantumRegime {
    let eps = p.eps;
    let abs_delta = p.delta.abs();
    let split = sqrt(eps * eps - p.gamma * p.gamma);
    let eta_sq = eps * eps - p.delta * p.delta;

    let (kind, eta) = if (abs_delta - eps).abs() <= tol * eps {
        (RegimeKind::Critical, Complex64::new(0.0, 0.0))
    } else if abs_delta > eps {
        (RegimeKind::Unstable, Complex64::new(0.0, sqrt(-eta_sq)))
    } else {
        let kind = if (abs_delta - split).abs() <= tol * split.max(f64::MIN_POSITIVE) {
            RegimeKind::StableSemidefinite
        } else if abs_delta < split {
            RegimeKind::StablePositiveDefinite
        } else {
            RegimeKind::StableNonPositive
        };
        (kind, Complex64::new(sqrt(eta_sq), 0.0))
    };
    QuantumRegime {
        kind,
        eta,
        lambda_plus: eta + p.gamma,
        lambda_minus: eta - p.gamma,
    }
}

/// Bogoliubov coefficients `u = sqrt((eps + eta) / 2 eta)`, `v = sqrt((eps - eta) / 2 eta)`
/// on the principal branch. Complex in the unstable regime.
pub fn bogoliubov_uv(p: &ModelParams) -> Result<(Complex64, Complex64)> {
    let regime = classify(p, DEFAULT_CLASSIFY_TOL);
    if regime.kind == RegimeKind::Critical {
        return Err(Error::Critical);
    }
    let eta = regime.eta;
    let eps = Complex64::new(p.eps, 0.0);
    let u = ((eps + eta) / (eta * 2.0)).sqrt();
    let v = ((eps - eta) / (eta * 2.0)).sqrt();
    Ok((u, v))
}

/// `(S, K)` as functions of `eta^2` and `t`.
pub(crate) fn propagator_kernels(eta_sq: f64, t: f64) -> (f64, f64) {
    let z = eta_sq * t * t;
    if 4.0 * z.abs() < SERIES_THRESHOLD * SERIES_THRESHOLD {
        // sin(2u)/eta and 2 sin(u)^2/eta^2 in powers of z = (eta t)^2
        let s = 2.0 * t * (1.0 - 2.0 * z / 3.0 + 2.0 * z * z / 15.0);
        let k = 2.0 * t * t * (1.0 - z / 3.0 + 2.0 * z * z / 45.0);
        (s, k)
    } else if eta_sq > 0.0 {
        let eta = sqrt(eta_sq);
        let half = sin(eta * t);
        (sin(2.0 * eta * t) / eta, 2.0 * half * half / eta_sq)
    } else {
        let kappa = sqrt(-eta_sq);
        let half = sinh(kappa * t);
        (sinh(2.0 * kappa * t) / kappa, 2.0 * half * half / -eta_sq)
    }
}

/// Closed-form evolution of the quantum triple at `alpha = 0`.
///
/// Valid on both sides of criticality; at `|delta| = eps` it coincides with
/// [`evolve_critical`].
pub fn evolve_linear(q0: &QuantumTriple, eps: f64, delta: f64, t: f64) -> Result<QuantumTriple> {
    if !t.is_finite() || !eps.is_finite() || !delta.is_finite() || !q0.is_finite() {
        return Err(Error::Domain("evolve_linear inputs must be finite"));
    }
    let eta_sq = eps * eps - delta * delta;
    let (s, k) = propagator_kernels(eta_sq, t);
    let a0 = delta * q0.n1 + eps * q0.op;
    let shift = a0 * k + q0.om * s;
    Ok(QuantumTriple {
        n1: q0.n1 + delta * shift,
        om: q0.om * (1.0 - eta_sq * k) + a0 * s,
        op: q0.op - eps * shift,
    })
}

/// Polynomial evolution at `delta = eps`. Use [`evolve_quantum`] for `delta = -eps`.
pub fn evolve_critical(q0: &QuantumTriple, eps: f64, t: f64) -> Result<QuantumTriple> {
    if !t.is_finite() || !eps.is_finite() || !q0.is_finite() {
        return Err(Error::Domain("evolve_critical inputs must be finite"));
    }
    let sum = q0.n1 + q0.op;
    let et = eps * t;
    let quad = 2.0 * sum * et * et;
    Ok(QuantumTriple {
        n1: q0.n1 + 2.0 * q0.om * et + quad,
        om: q0.om + 2.0 * sum * et,
        op: q0.op - 2.0 * q0.om * et - quad,
    })
}

/// Picks the critical or diagonalizable closed form from `(eps, delta)`.
///
/// Exactly at `delta = -eps` the critical form is applied through the parity map
/// `(delta, om, op) -> (-delta, -om, -op)`.
pub fn evolve_quantum(q0: &QuantumTriple, eps: f64, delta: f64, t: f64) -> Result<QuantumTriple> {
    if delta == eps {
        evolve_critical(q0, eps, t)
    } else if delta == -eps {
        Ok(evolve_critical(&q0.parity(), eps, t)?.parity())
    } else {
        evolve_linear(q0, eps, delta, t)
    }
}

/// Harmonic rotation of the decoupled classical mode.
pub fn evolve_classical(x0: f64, p0: f64, omega: f64, t: f64) -> (f64, f64) {
    let (s, c) = (sin(omega * t), cos(omega * t));
    (x0 * c + p0 * s, p0 * c - x0 * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::FRAC_PI_2;

    fn params(eps: f64, gamma: f64, delta: f64) -> ModelParams {
        ModelParams::new(eps, gamma, delta, 0.0, 1.0).unwrap()
    }

    #[test]
    fn classify_critical() {
        let r = classify(&params(1.0, 0.0, 1.0), DEFAULT_CLASSIFY_TOL);
        assert_eq!(r.kind, RegimeKind::Critical);
        assert_eq!(r.lambda_plus, Complex64::new(0.0, 0.0));
        assert_eq!(r.lambda_minus, Complex64::new(0.0, 0.0));
        let r = classify(&params(1.0, 0.3, -1.0), DEFAULT_CLASSIFY_TOL);
        assert_eq!(r.kind, RegimeKind::Critical);
        assert_eq!(r.lambda_plus.re, 0.3);
        assert_eq!(r.lambda_minus.re, -0.3);
    }

    #[test]
    fn classify_near_critical_stable() {
        let r = classify(&params(1.05, 0.0, 1.0), DEFAULT_CLASSIFY_TOL);
        assert_eq!(r.kind, RegimeKind::StablePositiveDefinite);
        assert_relative_eq!(r.eta.re, 0.320_156_211_871_642_1, epsilon = 1e-15);
        assert_eq!(r.lambda_plus, r.lambda_minus);
    }

    #[test]
    fn classify_subregimes() {
        let r = classify(&params(1.0, 0.5, 0.9), DEFAULT_CLASSIFY_TOL);
        assert_eq!(r.kind, RegimeKind::StableNonPositive);
        assert!(r.lambda_minus.re < 0.0 && r.lambda_plus.re > 0.0);

        let r = classify(&params(1.0, 0.6, 0.8), DEFAULT_CLASSIFY_TOL);
        assert_eq!(r.kind, RegimeKind::StableSemidefinite);
        assert!(r.lambda_minus.re.abs() < 1e-12);

        let r = classify(&params(1.0, 0.5, 0.2), DEFAULT_CLASSIFY_TOL);
        assert_eq!(r.kind, RegimeKind::StablePositiveDefinite);
        assert!(r.lambda_minus.re > 0.0);
    }

    #[test]
    fn classify_unstable_hermiticity_pairing() {
        let r = classify(&params(1.0, 0.4, 2.0), DEFAULT_CLASSIFY_TOL);
        assert_eq!(r.kind, RegimeKind::Unstable);
        assert_relative_eq!(r.eta.im, sqrt(3.0), epsilon = 1e-15);
        assert_eq!(r.lambda_plus.conj(), -r.lambda_minus);
    }

    #[test]
    fn bogoliubov_identity_transformation() {
        let (u, v) = bogoliubov_uv(&params(2.5, 0.0, 0.0)).unwrap();
        assert_eq!(u, Complex64::new(1.0, 0.0));
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn bogoliubov_stable_values() {
        let (u, v) = bogoliubov_uv(&params(1.25, 0.0, 0.75)).unwrap();
        assert_relative_eq!(u.re, sqrt(1.125), epsilon = 1e-15);
        assert_relative_eq!(v.re, sqrt(0.125), epsilon = 1e-15);
        assert_eq!(u.im, 0.0);
        assert_relative_eq!(u.re * u.re - v.re * v.re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn bogoliubov_unstable_is_complex_with_unit_form() {
        let (u, v) = bogoliubov_uv(&params(1.0, 0.0, 2.0)).unwrap();
        assert!(u.im != 0.0 && v.im != 0.0);
        let form = u * u - v * v;
        assert_relative_eq!(form.re, 1.0, epsilon = 1e-14);
        assert!(form.im.abs() < 1e-14);
    }

    #[test]
    fn bogoliubov_critical_error() {
        assert_eq!(bogoliubov_uv(&params(1.0, 0.0, 1.0)), Err(Error::Critical));
    }

    #[test]
    fn identity_at_time_zero() {
        let q0 = QuantumTriple::new(2.3, -0.4, 0.7);
        assert_eq!(evolve_linear(&q0, 1.05, 1.0, 0.0).unwrap(), q0);
        assert_eq!(evolve_linear(&q0, 1.0, 2.0, 0.0).unwrap(), q0);
        assert_eq!(evolve_critical(&q0, 1.0, 0.0).unwrap(), q0);
    }

    #[test]
    fn decoupled_pairing_rotates_at_twice_eps() {
        let q0 = QuantumTriple::new(3.0, 0.5, -1.5);
        let eps = 0.8;
        for &t in &[0.1, 1.0, 7.3] {
            let q = evolve_linear(&q0, eps, 0.0, t).unwrap();
            let (s, c) = (sin(2.0 * eps * t), cos(2.0 * eps * t));
            assert_relative_eq!(q.n1, q0.n1, epsilon = 1e-14);
            assert_relative_eq!(q.om, q0.om * c + q0.op * s, epsilon = 1e-13);
            assert_relative_eq!(q.op, q0.op * c - q0.om * s, epsilon = 1e-13);
        }
    }

    #[test]
    fn critical_polynomial_values() {
        let q = evolve_critical(&QuantumTriple::new(2.0, 0.0, 0.0), 1.0, 1.0).unwrap();
        assert_eq!(q, QuantumTriple::new(6.0, 4.0, -4.0));
        assert_eq!(q.invariant_i(), 4.0);
    }

    #[test]
    fn critical_frozen_direction() {
        let q0 = QuantumTriple::new(3.0, 0.0, -3.0);
        for &t in &[0.5, 10.0, 1e3] {
            assert_eq!(evolve_critical(&q0, 1.3, t).unwrap(), q0);
        }
    }

    #[test]
    fn critical_conserves_sum() {
        let q0 = QuantumTriple::new(2.0, 0.7, 0.4);
        let q = evolve_critical(&q0, 0.9, 3.3).unwrap();
        assert_relative_eq!(q.n1 + q.op, q0.n1 + q0.op, epsilon = 1e-13);
        assert_relative_eq!(q.invariant_i(), q0.invariant_i(), max_relative = 1e-12);
    }

    #[test]
    fn linear_branch_at_exact_criticality_is_polynomial() {
        let q0 = QuantumTriple::new(2.0, 0.3, -0.5);
        let a = evolve_linear(&q0, 1.0, 1.0, 2.5).unwrap();
        let b = evolve_critical(&q0, 1.0, 2.5).unwrap();
        assert_relative_eq!(a.n1, b.n1, max_relative = 1e-15);
        assert_relative_eq!(a.om, b.om, max_relative = 1e-15);
        assert_relative_eq!(a.op, b.op, max_relative = 1e-15);
    }

    #[test]
    fn negative_critical_coupling_via_parity() {
        let q0 = QuantumTriple::new(2.0, 0.3, -0.5);
        let a = evolve_quantum(&q0, 1.0, -1.0, 1.7).unwrap();
        let b = evolve_linear(&q0, 1.0, -1.0, 1.7).unwrap();
        assert_relative_eq!(a.n1, b.n1, max_relative = 1e-14);
        assert_relative_eq!(a.om, b.om, max_relative = 1e-14);
        assert_relative_eq!(a.op, b.op, max_relative = 1e-14);
    }

    #[test]
    fn kernels_series_matches_direct_at_the_switch() {
        // just above and below |2 eta t| = 1e-4
        for &eta_sq in &[2.6e-9, -2.6e-9, 2.4e-9, -2.4e-9] {
            let t = 1.0;
            let (s, k) = propagator_kernels(eta_sq, t);
            let (s_ref, k_ref) = if eta_sq > 0.0 {
                let e = sqrt(eta_sq);
                (sin(2.0 * e) / e, 2.0 * sin(e) * sin(e) / eta_sq)
            } else {
                let e = sqrt(-eta_sq);
                (sinh(2.0 * e) / e, 2.0 * sinh(e) * sinh(e) / -eta_sq)
            };
            assert_relative_eq!(s, s_ref, max_relative = 1e-15);
            assert_relative_eq!(k, k_ref, max_relative = 1e-12);
        }
    }

    #[test]
    fn classical_rotation() {
        assert_eq!(evolve_classical(0.4, -1.1, 2.0, 0.0), (0.4, -1.1));
        let (x, p) = evolve_classical(1.0, 0.0, 1.0, FRAC_PI_2);
        assert!(x.abs() < 1e-15);
        assert_relative_eq!(p, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn non_finite_time_rejected() {
        let q0 = QuantumTriple::new(2.0, 0.0, 0.0);
        assert!(evolve_linear(&q0, 1.0, 0.5, f64::NAN).is_err());
        assert!(evolve_critical(&q0, 1.0, f64::INFINITY).is_err());
    }
}
