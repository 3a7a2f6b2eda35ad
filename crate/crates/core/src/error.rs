use core::fmt;

/// Which square-root constraint of the initial-condition construction failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Constraint {
    /// `n1 = sqrt(I + om^2 + op^2)` needs a nonnegative radicand and `n1 >= 1`.
    BlochInvariant,
    /// The kinetic term left over after fixing the effective energy.
    EffectiveEnergy,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::BlochInvariant => f.write_str("Bloch invariant (n1 >= 1)"),
            Constraint::EffectiveEnergy => f.write_str("effective energy (kinetic term >= 0)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    Domain(&'static str),

    #[error("invalid model parameters: {0}")]
    InvalidParams(&'static str),

    #[error("invalid configuration: {0}")]
    Config(&'static str),

    #[error("infeasible constraint {constraint}: radicand {radicand}")]
    Infeasible { constraint: Constraint, radicand: f64 },

    #[error("critical coupling |delta| = eps: evolution matrix is not diagonalizable")]
    Critical,

    #[error("numerical failure at t = {t}: {reason}")]
    NumericalFailure { t: f64, reason: &'static str },

    #[error("trajectory diverged at t = {t_div} before the transient of length {transient} ended")]
    DivergedBeforeTransient { t_div: f64, transient: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
