//! Physical data types, the mean-value vector field, its Jacobian and the
//! two invariants of motion.
//!
//! The dynamical state is the quantum triple `(<N+1>, <O->, <O+>)` plus the
//! classical field `(X, P_X)`. The population difference `<dN>` is carried
//! along as a constant.

use crate::error::{Constraint, Error, Result};
use libm::sqrt;

/// Number of dynamical components in [`SystemState`].
pub const DIM: usize = 5;

/// The five physical constants of one system instance.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelParams {
    /// Mean single-boson energy.
    pub eps: f64,
    /// Half level splitting. Only enters the regime taxonomy.
    pub gamma: f64,
    /// Quantum pairing coupling.
    pub delta: f64,
    /// Matter-field coupling.
    pub alpha: f64,
    /// Classical oscillator frequency.
    pub omega: f64,
}

impl ModelParams {
    pub fn new(eps: f64, gamma: f64, delta: f64, alpha: f64, omega: f64) -> Result<Self> {
        let p = ModelParams {
            eps,
            gamma,
            delta,
            alpha,
            omega,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with `gamma = 0`, the value used by every bundled scenario.
    pub fn symmetric(eps: f64, delta: f64, alpha: f64, omega: f64) -> Result<Self> {
        Self::new(eps, 0.0, delta, alpha, omega)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.eps, self.gamma, self.delta, self.alpha, self.omega];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("all parameters must be finite"));
        }
        if self.eps <= 0.0 {
            return Err(Error::InvalidParams("eps must be positive"));
        }
        if self.gamma.abs() >= self.eps {
            return Err(Error::InvalidParams("|gamma| must be below eps"));
        }
        if self.omega <= 0.0 {
            return Err(Error::InvalidParams("omega must be positive"));
        }
        Ok(())
    }

    /// Image under the parity map `(delta, alpha) -> (-delta, -alpha)`.
    pub fn parity(&self) -> Self {
        ModelParams {
            delta: -self.delta,
            alpha: -self.alpha,
            ..*self
        }
    }

    /// Effective pairing strength seen by the quantum sector at field amplitude `x`.
    #[inline]
    pub fn coupling_at(&self, x: f64) -> f64 {
        self.delta + self.alpha * x
    }
}

/// One point of the 5-dimensional flow plus the conserved `<dN>`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SystemState {
    /// `<N+1>`
    pub n1: f64,
    /// `<O->`
    pub om: f64,
    /// `<O+>`
    pub op: f64,
    pub x: f64,
    pub p: f64,
    /// `<dN>`, constant along every evolution.
    pub dn: f64,
}

impl SystemState {
    pub const fn new(n1: f64, om: f64, op: f64, x: f64, p: f64) -> Self {
        SystemState {
            n1,
            om,
            op,
            x,
            p,
            dn: 0.0,
        }
    }

    pub const fn with_dn(self, dn: f64) -> Self {
        SystemState { dn, ..self }
    }

    /// Dynamical components in the order `(n1, om, op, x, p)`.
    #[inline]
    pub fn to_array(&self) -> [f64; DIM] {
        [self.n1, self.om, self.op, self.x, self.p]
    }

    #[inline]
    pub fn from_slice(y: &[f64], dn: f64) -> Self {
        SystemState {
            n1: y[0],
            om: y[1],
            op: y[2],
            x: y[3],
            p: y[4],
            dn,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite()) && self.dn.is_finite()
    }

    pub fn max_norm(&self) -> f64 {
        self.to_array().iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    /// Euclidean norm of the dynamical components.
    pub fn norm(&self) -> f64 {
        sqrt(self.to_array().iter().map(|v| v * v).sum())
    }

    /// Image under the parity map `(om, op) -> (-om, -op)`.
    pub fn parity(&self) -> Self {
        SystemState {
            om: -self.om,
            op: -self.op,
            ..*self
        }
    }

    fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain("state has a non-finite component"))
        }
    }
}

/// Time derivative of the dynamical components of a [`SystemState`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Derivative {
    pub n1: f64,
    pub om: f64,
    pub op: f64,
    pub x: f64,
    pub p: f64,
}

impl Derivative {
    pub fn to_array(&self) -> [f64; DIM] {
        [self.n1, self.om, self.op, self.x, self.p]
    }

    fn from_array(a: [f64; DIM]) -> Self {
        Derivative {
            n1: a[0],
            om: a[1],
            op: a[2],
            x: a[3],
            p: a[4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InvariantPair {
    pub e_eff: f64,
    pub i_inv: f64,
}

/// Unchecked right-hand side on raw slices. Hot path for the integrator.
#[inline]
pub(crate) fn rhs(y: &[f64], p: &ModelParams, dy: &mut [f64]) {
    let g = p.coupling_at(y[3]);
    dy[0] = 2.0 * g * y[1];
    dy[1] = 2.0 * g * y[0] + 2.0 * p.eps * y[2];
    dy[2] = -2.0 * p.eps * y[1];
    dy[3] = p.omega * y[4];
    dy[4] = -(p.omega * y[3] + p.alpha * y[2]);
}

/// Unchecked tangent map `J(y) v`.
#[inline]
pub(crate) fn jacobian_apply(y: &[f64], p: &ModelParams, v: &[f64], out: &mut [f64]) {
    let g2 = 2.0 * p.coupling_at(y[3]);
    let a2 = 2.0 * p.alpha;
    let e2 = 2.0 * p.eps;
    out[0] = g2 * v[1] + a2 * y[1] * v[3];
    out[1] = g2 * v[0] + e2 * v[2] + a2 * y[0] * v[3];
    out[2] = -e2 * v[1];
    out[3] = p.omega * v[4];
    out[4] = -p.alpha * v[2] - p.omega * v[3];
}

/// The closed mean-value equations of motion.
///
/// Finiteness of the state is required but physical admissibility is not,
/// so trial points probed by an integrator are accepted.
pub fn vector_field(s: &SystemState, p: &ModelParams) -> Result<Derivative> {
    s.check_finite()?;
    p.validate()?;
    let mut dy = [0.0; DIM];
    rhs(&s.to_array(), p, &mut dy);
    Ok(Derivative::from_array(dy))
}

/// Analytic Jacobian of [`vector_field`], rows and columns ordered `(n1, om, op, x, p)`.
pub fn jacobian(s: &SystemState, p: &ModelParams) -> Result<[[f64; DIM]; DIM]> {
    s.check_finite()?;
    p.validate()?;
    let g2 = 2.0 * p.coupling_at(s.x);
    let e2 = 2.0 * p.eps;
    let a2 = 2.0 * p.alpha;
    Ok([
        [0.0, g2, 0.0, a2 * s.om, 0.0],
        [g2, 0.0, e2, a2 * s.n1, 0.0],
        [0.0, -e2, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, p.omega],
        [0.0, 0.0, -p.alpha, -p.omega, 0.0],
    ])
}

/// Bloch-like invariant `n1^2 - om^2 - op^2`.
#[inline]
pub fn invariant_i(s: &SystemState) -> f64 {
    s.n1 * s.n1 - s.om * s.om - s.op * s.op
}

/// `<H> - gamma <dN> - eps`, conserved for every coupling.
#[inline]
pub fn effective_energy(s: &SystemState, p: &ModelParams) -> f64 {
    p.eps * (s.n1 - 1.0) + p.coupling_at(s.x) * s.op + 0.5 * p.omega * (s.p * s.p + s.x * s.x)
}

pub fn invariants(s: &SystemState, p: &ModelParams) -> InvariantPair {
    InvariantPair {
        e_eff: effective_energy(s, p),
        i_inv: invariant_i(s),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Quantity {
    /// `<N+1>` must be at least 1.
    ShiftedNumber,
    /// `I` must be nonnegative.
    BlochInvariant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Violation {
    pub quantity: Quantity,
    pub value: f64,
    pub bound: f64,
    /// `value - bound`; negative for a violation.
    pub margin: f64,
}

/// Outcome of [`validate_state`]. A failing report is a normal value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValidityReport {
    pub number: Option<Violation>,
    pub invariant: Option<Violation>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.number.is_none() && self.invariant.is_none()
    }

    pub fn violations(&self) -> impl Iterator<Item = &Violation> {
        self.number.iter().chain(self.invariant.iter())
    }
}

/// Checks `n1 >= 1` and `I >= 0`.
pub fn validate_state(s: &SystemState) -> ValidityReport {
    let check = |quantity, value: f64, bound: f64| {
        (value < bound).then_some(Violation {
            quantity,
            value,
            bound,
            margin: value - bound,
        })
    };
    ValidityReport {
        number: check(Quantity::ShiftedNumber, s.n1, 1.0),
        invariant: check(Quantity::BlochInvariant, invariant_i(s), 0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MomentumSign {
    Positive,
    #[default]
    Negative,
}

impl MomentumSign {
    pub fn as_f64(self) -> f64 {
        match self {
            MomentumSign::Positive => 1.0,
            MomentumSign::Negative => -1.0,
        }
    }
}

/// Target invariants and free coordinates for [`make_initial`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InitialConstraints {
    pub e_eff: f64,
    pub i_inv: f64,
    pub om0: f64,
    pub op0: f64,
    pub x0: f64,
    pub dn0: f64,
    pub momentum_sign: MomentumSign,
}

/// Builds a state with prescribed `(E_eff, I)`.
///
/// `n1` is fixed by `I` given `(om0, op0)`, then `p` absorbs the remaining
/// effective energy at `x0`.
pub fn make_initial(c: &InitialConstraints, p: &ModelParams) -> Result<SystemState> {
    p.validate()?;
    let inputs = [c.e_eff, c.i_inv, c.om0, c.op0, c.x0, c.dn0];
    if inputs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("initial-condition constraints must be finite"));
    }
    let n1_sq = c.i_inv + c.om0 * c.om0 + c.op0 * c.op0;
    if n1_sq < 1.0 {
        return Err(Error::Infeasible {
            constraint: Constraint::BlochInvariant,
            radicand: n1_sq,
        });
    }
    let n1 = sqrt(n1_sq);
    let kinetic = (2.0 / p.omega)
        * (c.e_eff - p.eps * (n1 - 1.0) - p.coupling_at(c.x0) * c.op0)
        - c.x0 * c.x0;
    if kinetic < 0.0 {
        return Err(Error::Infeasible {
            constraint: Constraint::EffectiveEnergy,
            radicand: kinetic,
        });
    }
    Ok(SystemState {
        n1,
        om: c.om0,
        op: c.op0,
        x: c.x0,
        p: c.momentum_sign.as_f64() * sqrt(kinetic),
        dn: c.dn0,
    })
}
