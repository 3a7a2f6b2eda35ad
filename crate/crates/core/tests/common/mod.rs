#![allow(dead_code)]

use proptest::prelude::*;
use semiquantum_core::{ModelParams, SystemState};

/// Caption state of the published runs: `<N> = 1`, `O+- = 0`, `X = 1`.
pub const CAPTION_P0: f64 = -2.549_509_76;

pub fn caption_state() -> SystemState {
    SystemState::new(2.0, 0.0, 0.0, 1.0, CAPTION_P0)
}

pub fn params(eps: f64, alpha: f64) -> ModelParams {
    ModelParams::symmetric(eps, 1.0, alpha, 1.0).unwrap()
}

pub fn any_params() -> impl Strategy<Value = ModelParams> {
    (0.1..3.0f64, -3.0..3.0f64, -1.5..1.5f64, 0.1..3.0f64, 0.0..0.9f64).prop_map(
        |(eps, delta, alpha, omega, g)| ModelParams::new(eps, g * eps, delta, alpha, omega).unwrap(),
    )
}

/// Arbitrary finite states with every component in `[-r, r]`.
pub fn any_state(r: f64) -> impl Strategy<Value = SystemState> {
    (-r..r, -r..r, -r..r, -r..r, -r..r, -r..r)
        .prop_map(|(n1, om, op, x, p, dn)| SystemState::new(n1, om, op, x, p).with_dn(dn))
}

/// Admissible states: `I >= 0` and `n1 >= 1`.
pub fn admissible_state() -> impl Strategy<Value = SystemState> {
    (0.0..5.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(
        |(i, om, op, x, p)| {
            let n1 = (i + om * om + op * op).sqrt().max(1.0);
            SystemState::new(n1, om, op, x, p)
        },
    )
}

/// `max_k |a_k - b_k| / max_k |b_k|`.
pub fn rel_dev(a: &[f64], b: &[f64]) -> f64 {
    let abs = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale > 0.0 {
        abs / scale
    } else {
        abs
    }
}
