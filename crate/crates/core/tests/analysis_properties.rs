mod common;

use common::{caption_state, params};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semiquantum_core::analysis::{
    classify_regime, conic_fit_residual, largest_lyapunov, lyapunov_with_tangent, poincare,
    LyapunovBudget, Regime, RegimeCriteria,
};
use semiquantum_core::integrator::{DirectionFilter, IntegratorSettings};
use semiquantum_core::model::{invariants, vector_field};
use semiquantum_core::{Error, ModelParams, SystemState};

fn budget(transient: f64, total: f64, renorm_interval: f64) -> LyapunovBudget {
    LyapunovBudget {
        transient,
        total,
        renorm_interval,
    }
}

#[test]
fn stable_linear_flow_has_zero_exponent() {
    let est = largest_lyapunov(
        &caption_state(),
        &params(1.05, 0.0),
        &IntegratorSettings::default(),
        &budget(200.0, 2000.0, 1.0),
    )
    .unwrap();
    assert!(est.lambda_max.abs() <= 1e-3, "{est:?}");
}

#[test]
fn unstable_linear_flow_grows_at_twice_eta() {
    let p = ModelParams::symmetric(1.0, 2.0, 0.0, 1.0).unwrap();
    let settings = IntegratorSettings {
        divergence_norm: 1e250,
        ..IntegratorSettings::default()
    };
    let est = largest_lyapunov(&caption_state(), &p, &settings, &budget(5.0, 100.0, 0.5)).unwrap();
    let expected = 2.0 * 3f64.sqrt();
    assert!((est.lambda_max - expected).abs() <= 0.01 * expected, "{est:?}");
}

#[test]
fn flow_direction_has_zero_exponent() {
    let p = params(1.05, 0.015);
    let s0 = caption_state();
    let f = vector_field(&s0, &p).unwrap().to_array();
    let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tangent = f.map(|v| v / norm);
    let est = lyapunov_with_tangent(
        &s0,
        &tangent,
        &p,
        &IntegratorSettings::default(),
        &budget(200.0, 2000.0, 1.0),
    )
    .unwrap();
    assert!(est.lambda_max.abs() <= 1e-3, "{est:?}");
}

#[test]
fn estimate_is_stable_under_budget_changes() {
    let p = params(1.05, 1e-4);
    let settings = IntegratorSettings::default();
    let base = largest_lyapunov(&caption_state(), &p, &settings, &budget(200.0, 5000.0, 1.0)).unwrap();
    let halved = largest_lyapunov(&caption_state(), &p, &settings, &budget(200.0, 5000.0, 0.5)).unwrap();
    let doubled = largest_lyapunov(&caption_state(), &p, &settings, &budget(400.0, 5000.0, 1.0)).unwrap();
    for other in [halved, doubled] {
        let tol = 2.0 * base.standard_error.max(other.standard_error);
        assert!((base.lambda_max - other.lambda_max).abs() <= tol, "{base:?} vs {other:?}");
    }
}

#[test]
fn section_points_keep_the_invariants() {
    let p = params(1.05, 0.015);
    let s0 = caption_state();
    let inv0 = invariants(&s0, &p);
    let section = poincare(&s0, &p, 1000.0, &IntegratorSettings::default(), DirectionFilter::Both).unwrap();
    assert!(section.len() > 300);
    assert!(section.points.windows(2).all(|w| w[1].t_cross > w[0].t_cross));
    for pt in &section.points {
        let s = SystemState::new(pt.n1, pt.om, pt.op, pt.x, pt.p);
        let inv = invariants(&s, &p);
        assert!((inv.e_eff - inv0.e_eff).abs() <= 1e-9 * inv0.e_eff.abs());
        assert!((inv.i_inv - inv0.i_inv).abs() <= 1e-9 * inv0.i_inv.abs());
        assert!(pt.x.abs() <= 1e-12 * (1.0 + s.norm()));
    }
}

#[test]
fn weak_coupling_section_lies_on_a_conic() {
    let section = poincare(
        &caption_state(),
        &params(1.05, 1e-4),
        5000.0,
        &IntegratorSettings::default(),
        DirectionFilter::Up,
    )
    .unwrap();
    let r = conic_fit_residual(&section.projection()).unwrap();
    assert!(r <= 1e-3, "residual {r}");
}

#[test]
fn labels_are_parity_invariant() {
    let criteria = RegimeCriteria {
        budget: budget(200.0, 2000.0, 1.0),
        ..RegimeCriteria::default()
    };
    let settings = IntegratorSettings::default();
    for (eps, alpha) in [(1.5, 0.015), (2.0, 1.1), (1.05, 1e-4)] {
        let p = params(eps, alpha);
        let s0 = caption_state();
        let a = classify_regime(&s0, &p, &settings, &criteria).unwrap();
        let b = classify_regime(&s0.parity(), &p.parity(), &settings, &criteria).unwrap();
        assert_eq!(a.regime, b.regime, "eps {eps}, alpha {alpha}");
    }
}

#[test]
fn strong_coupling_is_divergent() {
    let label = classify_regime(
        &caption_state(),
        &params(2.0, 1.1),
        &IntegratorSettings::default(),
        &RegimeCriteria::default(),
    )
    .unwrap();
    assert_eq!(label.regime, Regime::Divergent);
    assert!(label.evidence.divergence_time.is_some());
}

#[test]
fn lyapunov_reports_early_divergence() {
    let r = largest_lyapunov(
        &caption_state(),
        &params(2.0, 1.1),
        &IntegratorSettings::default(),
        &LyapunovBudget::default(),
    );
    assert!(matches!(r, Err(Error::DivergedBeforeTransient { .. })), "{r:?}");
}

#[test]
fn decoupled_stable_orbits_are_never_chaotic() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let settings = IntegratorSettings::default();
    let criteria = RegimeCriteria::default();
    for _ in 0..50 {
        let p = ModelParams::symmetric(rng.gen_range(1.05..2.0), 1.0, 0.0, 1.0).unwrap();
        let (i, om, op): (f64, f64, f64) = (rng.gen_range(0.0..5.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let n1 = f64::max(1.0, (i + om * om + op * op).sqrt());
        let s0 = SystemState::new(n1, om, op, rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let label = classify_regime(&s0, &p, &settings, &criteria).unwrap();
        assert!(
            matches!(label.regime, Regime::Periodic | Regime::Quasiperiodic),
            "{:?} at {p:?}, {s0:?}",
            label
        );
    }
}
