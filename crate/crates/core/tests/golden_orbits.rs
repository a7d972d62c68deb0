use std::f64::consts::TAU;

use gyrocanon::gyrotransform::gc_from_orbit_average;
use gyrocanon::{
    integrate_full, to_guiding_center, v_d, FieldModel, FieldSetup, FullState, IntegrationSettings, Species, Vec3,
};

fn setup(model: FieldModel<f64>, eps: f64) -> FieldSetup<f64> {
    FieldSetup::new(model, Species::default(), eps).unwrap()
}

#[test]
fn uniform_field_gyroradius() {
    let eps = 0.01;
    let s = setup(FieldModel::UniformB { b0: 1.0 }, eps);
    let (w, u) = (0.8, 0.3);
    let omega = 1.0 / eps;
    let n = 2000;
    let dt = TAU / omega / n as f64;
    let s0 = FullState::new(Vec3::new(0.2, -0.1, 0.0), Vec3::new(w, 0.0, u), 0.0);
    let traj = integrate_full(&s0, &IntegrationSettings::rk4(dt, n as f64 * dt, 1), &s).unwrap();
    let points = &traj.states[..n];
    let centre = points.iter().fold(Vec3::zero(), |acc, p| acc + Vec3::new(p.r.x, p.r.y, 0.0)) / n as f64;
    let radius = points.iter().map(|p| (Vec3::new(p.r.x, p.r.y, 0.0) - centre).norm()).sum::<f64>() / n as f64;
    let expected = w / omega;
    assert!((radius / expected - 1.0).abs() < 1e-6, "{radius} vs {expected}");
    let g = to_guiding_center(&s0, &s).unwrap();
    assert!((g.r_gc.x - centre.x).abs() < 1e-9 && (g.r_gc.y - centre.y).abs() < 1e-9);
}

#[test]
fn crossed_field_drift() {
    let eps = 0.01;
    let (e0, b0) = (0.1, 1.0);
    let s = setup(FieldModel::CrossedEB { e0, b0, e_ramp: 0.0 }, eps);
    let omega = b0 / eps;
    let n = 2000;
    let dt = TAU / omega / n as f64;
    let s0 = FullState::new(Vec3::zero(), Vec3::new(0.3, 0.2, 0.1), 0.0);
    let traj = integrate_full(&s0, &IntegrationSettings::rk4(dt, n as f64 * dt, n), &s).unwrap();
    let end = traj.states.last().unwrap();
    let drift = (end.r - s0.r) / end.t;
    let expected = Vec3::new(0.0, -e0 / b0, 0.0);
    let perp = Vec3::new(drift.x, drift.y, 0.0);
    assert!((perp - expected).norm() < 1e-6 * expected.norm(), "{perp:?}");
}

/// Perpendicular drift of the gyro-averaged orbit by central differences of
/// the averaged positions.
fn averaged_drift(s: &FieldSetup<f64>, s0: FullState<f64>) -> (Vec3<f64>, Vec3<f64>) {
    let omega = s.sample(s0.r, 0.0).unwrap().omega;
    let dt = TAU / omega / 64.0;
    let span = 12.0 * TAU / omega;
    let traj = integrate_full(&s0, &IntegrationSettings::rk4(dt, span, 1), s).unwrap();
    let avg = gc_from_orbit_average(&traj.states, s).unwrap();
    let mid = avg.len() / 2;
    // the GC path bends along the field line, so the chord velocity carries an
    // O(lag²) error; one Richardson step over lags of one and two periods
    let chord = |lag: usize| (avg[mid + lag].r_gc - avg[mid - lag].r_gc) / (avg[mid + lag].t - avg[mid - lag].t);
    let velocity = (chord(64) * 4.0 - chord(128)) / 3.0;
    let b = avg[mid];
    let field = s.sample(b.r_gc, b.t).unwrap();
    let perp = velocity - field.b_hat * field.b_hat.dot(velocity);
    let state_at_mid = traj.states.iter().find(|p| (p.t - b.t).abs() < 0.5 * dt).unwrap();
    let g = to_guiding_center(state_at_mid, s).unwrap();
    let predicted = v_d(&field, g.u(&field), g.mu(&s.species), &s.species) + field.v_e;
    (perp, predicted)
}

#[test]
fn grad_b_drift_matches_orbit_average() {
    for eps in [0.01, 0.005] {
        let s = setup(FieldModel::GradBSlab { b0: 1.0, scale_length: 1.0 }, eps);
        let (measured, predicted) = averaged_drift(&s, FullState::new(Vec3::zero(), Vec3::new(0.7, 0.0, 0.0), 0.0));
        let rel = (measured - predicted).norm() / predicted.norm();
        assert!(rel < 3.0 * eps, "eps {eps}: {measured:?} vs {predicted:?}");
        assert!(predicted.y > 0.0);
    }
}

#[test]
fn curvature_drift_matches_orbit_average_in_screw_pinch() {
    for eps in [0.01, 0.005] {
        let s = setup(FieldModel::ScrewPinch { bz: 1.0, b_theta: 0.5, scale_length: 1.0 }, eps);
        let s0 = FullState::new(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.3, 0.4, 0.6), 0.0);
        let (measured, predicted) = averaged_drift(&s, s0);
        let rel = (measured - predicted).norm() / predicted.norm();
        assert!(rel < 10.0 * eps, "eps {eps}: rel {rel}");
    }
}

#[test]
fn single_precision_pipeline() {
    let s = FieldSetup::<f32>::new(FieldModel::MagneticMirror { b0: 1.0, scale_length: 1.0 }, Species::default(), 0.05)
        .unwrap();
    let p = FullState::new(Vec3::new(0.1f32, 0.0, 0.2), Vec3::new(0.5, 0.1, 0.3), 0.0);
    let g = to_guiding_center(&p, &s).unwrap();
    let back = gyrocanon::from_guiding_center(&g, &s).unwrap();
    assert!((back.r - p.r).norm() < 1e-5);
    let traj = integrate_full(&p, &IntegrationSettings::rk4(0.005f32, 0.5, 10), &s).unwrap();
    assert!(traj.states.iter().all(|q| q.is_finite()));
}
