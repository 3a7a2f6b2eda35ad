//! Mean-value dynamics of a classical harmonic field mode coupled to a
//! two-boson quadratic quantum system.
//!
//! The crate is `no_std` (it needs `alloc`) and holds the numerical core:
//!
//! - [`model`]: state and parameter types, the vector field, its Jacobian and
//!   the two invariants `E_eff` and `I`;
//! - [`linear_oracle`]: exact decoupled evolution, normal-mode frequencies and
//!   the stable / critical / unstable taxonomy;
//! - [`integrator`]: Dormand-Prince 5(4) with dense output, plane crossings and
//!   the tangent flow;
//! - [`analysis`]: Poincare sections, the largest Lyapunov exponent and regime
//!   labels.

#![no_std]

extern crate alloc;

pub mod analysis;
pub mod error;
pub mod integrator;
pub mod linear_oracle;
pub mod model;

pub use error::{Error, Result};
pub use model::{InvariantPair, ModelParams, SystemState};
