//! End-to-end acceptance checks, one PASS/FAIL line each.
//!
//! Run with `cargo test -p gyrocanon-cli --test acceptance -- --nocapture`.

use std::f64::consts::TAU;
use std::path::Path;
use std::process::Command;

use gyrocanon::canonchecks::hat_basis;
use gyrocanon::diagnostics::{single_valuedness_probe, DEFAULT_EPS_LADDER};
use gyrocanon::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn mirror_model() -> FieldModel<f64> {
    FieldModel::MagneticMirror { b0: 1.0, scale_length: 1.0 }
}

fn mirror(eps: f64) -> FieldSetup<f64> {
    FieldSetup::new(mirror_model(), Species::default(), eps).unwrap()
}

fn start() -> FullState<f64> {
    FullState::new(Vec3::new(0.1, -0.05, 0.2), Vec3::new(0.5, 0.2, 0.4), 0.0)
}

fn base_scenario() -> Scenario<f64> {
    Scenario {
        model: mirror_model(),
        species: Species::default(),
        initial: start(),
        ensemble: Ensemble::Single,
        t_span: 40.0,
        dt_omega: 0.05,
        gc_dt_omega: 0.2,
        sample_stride: 16,
    }
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn golden_orbits() -> Verdict {
    let eps = 0.01;
    let omega = 1.0 / eps;
    let n = 2000;
    let dt = TAU / omega / n as f64;

    let uniform = FieldSetup::new(FieldModel::UniformB { b0: 1.0 }, Species::default(), eps).unwrap();
    let w = 0.8;
    let s0 = FullState::new(Vec3::new(0.2, -0.1, 0.0), Vec3::new(w, 0.0, 0.3), 0.0);
    let traj = integrate_full(&s0, &IntegrationSettings::rk4(dt, n as f64 * dt, 1), &uniform).unwrap();
    let pts = &traj.states[..n];
    let flat = |p: &FullState<f64>| Vec3::new(p.r.x, p.r.y, 0.0);
    let centre = pts.iter().fold(Vec3::zero(), |acc, p| acc + flat(p)) / n as f64;
    let radius = pts.iter().map(|p| (flat(p) - centre).norm()).sum::<f64>() / n as f64;
    let radius_err = (radius / (w / omega) - 1.0).abs();

    let (e0, b0) = (0.1, 1.0);
    let crossed = FieldSetup::new(FieldModel::CrossedEB { e0, b0, e_ramp: 0.0 }, Species::default(), eps).unwrap();
    let s0 = FullState::new(Vec3::zero(), Vec3::new(0.3, 0.2, 0.1), 0.0);
    let traj = integrate_full(&s0, &IntegrationSettings::rk4(dt, n as f64 * dt, n), &crossed).unwrap();
    let end = traj.states.last().unwrap();
    let drift = (end.r - s0.r) / end.t;
    let expected = Vec3::new(0.0, -e0 / b0, 0.0);
    let drift_err = (Vec3::new(drift.x, drift.y, 0.0) - expected).norm() / expected.norm();
    verdict(
        radius_err < 1e-6 && drift_err < 1e-6,
        format!("gyroradius rel err {radius_err:.2e}, E×B drift rel err {drift_err:.2e} (limit 1e-6)"),
    )
}

fn round_trip() -> Verdict {
    match scan(Metric::RoundTripPosition, &base_scenario(), &DEFAULT_EPS_LADDER, jobs()) {
        Ok(r) => verdict(
            (r.loglog_slope - 2.0).abs() <= 0.2,
            format!("round-trip slope {:.3} ± {:.3} (band 2 ± 0.2)", r.loglog_slope, r.slope_stderr),
        ),
        Err(e) => verdict(false, e.to_string()),
    }
}

fn adiabatic_invariance() -> Verdict {
    let mirror_slope = scan(Metric::MuDrift, &base_scenario(), &DEFAULT_EPS_LADDER, jobs());
    let abc = Scenario {
        model: FieldModel::AbcFlow { a: 1.0, b: 0.5, c: 0.3 },
        initial: FullState::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(0.5, 0.2, 0.4), 0.0),
        ensemble: Ensemble::Random { n: 16, seed: 1 },
        t_span: 150.0,
        ..base_scenario()
    };
    let abc_slope = scan(Metric::MuDrift, &abc, &DEFAULT_EPS_LADDER, jobs());
    let probe_setup = FieldSetup::new(abc.model, Species::default(), 0.02).unwrap();
    let probe = single_valuedness_probe(&probe_setup, 1000, 42);
    match (mirror_slope, abc_slope, probe) {
        (Ok(m), Ok(a), Ok(p)) => verdict(
            m.loglog_slope >= 0.7 && a.loglog_slope >= 0.7 && p.converged == 1000,
            format!(
                "mu slope mirror {:.3}, ABC {:.3} (need ≥ 0.7); ABC probe {}/1000 converged",
                m.loglog_slope, a.loglog_slope, p.converged
            ),
        ),
        (m, a, p) => verdict(false, format!("{:?} {:?} {:?}", m.err(), a.err(), p.err())),
    }
}

fn canonical_integration() -> Verdict {
    let setup = mirror(0.05);
    let g = to_guiding_center(&start(), &setup).unwrap();
    let omega = setup.sample(g.r_gc, 0.0).unwrap().omega;
    let dt = 0.2 / omega;
    let traj = integrate_gc(&g, &IntegrationSettings::rk4(dt, 1e4 * dt, 1), &setup).unwrap();
    let p_phi_exact = traj.states.iter().all(|q| q.p_phi == g.p_phi);
    let k0 = traj.hamiltonian[0];
    let k_drift = traj.hamiltonian.iter().map(|k| ((k - k0) / k0).abs()).fold(0.0, f64::max);
    let field = setup.sample(g.r_gc, 0.0).unwrap();
    let base = canonical_rhs(&g, &field, &setup.species);
    let ignorable = (0..64).all(|k| {
        let rotated = GCState { phi: TAU * k as f64 / 64.0, ..g };
        canonical_rhs(&rotated, &field, &setup.species) == base
    });
    verdict(
        p_phi_exact && k_drift < 1e-8 && ignorable,
        format!(
            "p_phi exact: {p_phi_exact}; K rel drift {k_drift:.2e} over {} steps (limit 1e-8); phase ignorable: {ignorable}",
            traj.states.len() - 1
        ),
    )
}

struct Halving {
    hamilton: [f64; 2],
    constraint: [f64; 2],
    el_gc: [f64; 2],
    el_full: [f64; 2],
    el_line: [f64; 2],
}

fn ratio(x: [f64; 2]) -> f64 {
    x[0] / x[1]
}

/// Residuals at the base step and at half of it, ε = 0.1 in the mirror.
fn halving() -> Halving {
    let (eps, span, width) = (0.1, 2.0, 0.2);
    let setup = mirror(eps);
    let s = start();
    let g = to_guiding_center(&s, &setup).unwrap();
    let omega = setup.sample(s.r, 0.0).unwrap().omega;
    let centres: Vec<f64> = (1..4).map(|k| span * k as f64 / 4.0).collect();
    let sys = GyrokineticSystem::new(setup);
    let (gl, fl) = (GcLagrangian { setup }, FullLagrangian { setup });
    let mut h =
        Halving { hamilton: [0.0; 2], constraint: [0.0; 2], el_gc: [0.0; 2], el_full: [0.0; 2], el_line: [0.0; 2] };
    for k in 0..2 {
        let refine = (1 << k) as f64;
        let traj = integrate_gc(&g, &IntegrationSettings::rk4(0.2 / omega / refine, span, 1), &setup).unwrap();
        let samples = sys.samples(&traj.states, VelocityReading::Kinematic).unwrap();
        let report = verify_generalized_canonical(&sys, &samples, 1e-6).unwrap();
        h.hamilton[k] = report.hamilton_residual_max;
        h.constraint[k] = report.constraint_residual_max;
        let path = gl.path(&traj.states);
        let times: Vec<f64> = path.iter().map(|n| n.t).collect();
        h.el_gc[k] = el_residual(&gl, &path, &hat_basis(&times, &centres, width, 11).unwrap(), 1e-6).unwrap();

        let full = integrate_full(&s, &IntegrationSettings::rk4(0.05 / omega / refine, span, 1), &setup).unwrap();
        let fpath = fl.path(&full.states).unwrap();
        let times: Vec<f64> = fpath.iter().map(|n| n.t).collect();
        let basis = hat_basis(&times, &centres, width, 9).unwrap();
        h.el_full[k] = el_residual(&fl, &fpath, &basis, 1e-6).unwrap();
        let line: Vec<FullState<f64>> = times.iter().map(|&t| FullState::new(s.r + s.v * t, s.v, t)).collect();
        h.el_line[k] = el_residual(&fl, &fl.path(&line).unwrap(), &basis, 1e-6).unwrap();
    }
    h
}

fn generalized_canonical(h: &Halving) -> Verdict {
    let (rh, rc) = (ratio(h.hamilton), ratio(h.constraint));
    let scenario = Scenario { t_span: 10.0, ..base_scenario() };
    match scan(Metric::ConstraintResidual, &scenario, &DEFAULT_EPS_LADDER, jobs()) {
        Ok(r) => verdict(
            (rh - 4.0).abs() <= 1.0 && (rc - 4.0).abs() <= 1.0 && r.loglog_slope >= 1.0,
            format!(
                "dt-halving ratios: Hamilton {rh:.3}, constraint {rc:.3} (band 4 ± 1); constraint eps-slope {:.3} (need ≥ 1)",
                r.loglog_slope
            ),
        ),
        Err(e) => verdict(false, e.to_string()),
    }
}

fn drift_agreement() -> Verdict {
    let scenario = Scenario { t_span: 5.0, ensemble: Ensemble::Gyrophases(8), ..base_scenario() };
    match scan(Metric::TrackingError, &scenario, &DEFAULT_EPS_LADDER, jobs()) {
        Ok(r) => verdict(
            (r.loglog_slope - 1.0).abs() <= 0.3,
            format!("tracking-error slope {:.3} ± {:.3} (band 1 ± 0.3)", r.loglog_slope, r.slope_stderr),
        ),
        Err(e) => verdict(false, e.to_string()),
    }
}

fn variational(h: &Halving) -> Verdict {
    let (rg, rf, rl) = (ratio(h.el_gc), ratio(h.el_full), ratio(h.el_line));
    verdict(
        (rg - 4.0).abs() <= 1.0 && (rf - 4.0).abs() <= 1.0 && rl < 1.5 && h.el_line[1] > 1e-3,
        format!(
            "EL halving ratios: L' {rg:.3}, L-hat {rf:.3} (band 4 ± 1); straight line {rl:.3} at residual {:.2e}",
            h.el_line[1]
        ),
    )
}

fn non_canonical(h: &Halving) -> Verdict {
    let setup = mirror(0.1);
    let s = start();
    let field = setup.sample(s.r, 0.0).unwrap();
    let p = s.canonical_momentum(&field, &setup.species);
    let report = truncated_map_residual(&setup, s.r, p, 0.0, 1e-6).unwrap();
    let superabundant_ok = (ratio(h.hamilton) - 4.0).abs() <= 1.0 && (ratio(h.constraint) - 4.0).abs() <= 1.0;
    verdict(
        report.symplectic_residual > 1e-2 && superabundant_ok,
        format!(
            "truncated map symplectic residual {:.3e} (need > 1e-2); superabundant residuals converge: {superabundant_ok}",
            report.symplectic_residual
        ),
    )
}

const DETERMINISM_CONFIG: &str = r#"
eps = 0.0625
seed = 2024

[field]
model = "abc_flow"
a = 1.0
b = 0.5
c = 0.3

[initial_state]
kind = "full"
r = [1.0, 2.0, 3.0]
v = [0.5, 0.2, 0.4]

[integrator]
dt = 0.003
t_end = 2.0
sample_stride = 5

[scan]
eps_list = [0.125, 0.0625, 0.03125]
metric = "tracking_error"
t_span = 1.0
ensemble = { kind = "random", n = 4 }
"#;

fn run_cli(dir: &Path, command: &str, jobs: &str) -> bool {
    Command::new(env!("CARGO_BIN_EXE_gyrocanon"))
        .args([command, "--config"])
        .arg(dir.join("run.toml"))
        .arg("--out-dir")
        .arg(dir.join(format!("{command}-{jobs}")))
        .args(["--jobs", jobs, "--quiet"])
        .status()
        .is_ok_and(|s| s.success())
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), DETERMINISM_CONFIG).unwrap();
    let mut compared = 0;
    for command in ["orbit", "compare", "scan"] {
        if !(run_cli(dir.path(), command, "1") && run_cli(dir.path(), command, "4")) {
            return verdict(false, format!("{command} run failed"));
        }
        for file in ["trajectory.csv", "diagnostics.csv"] {
            let a = std::fs::read(dir.path().join(format!("{command}-1")).join(file));
            let b = std::fs::read(dir.path().join(format!("{command}-4")).join(file));
            match (a, b) {
                (Ok(a), Ok(b)) if a == b => compared += 1,
                (Ok(_), Ok(_)) => return verdict(false, format!("{command}/{file} differs between runs")),
                _ => {}
            }
        }
    }
    verdict(compared >= 4, format!("{compared} CSV files byte-identical across two runs"))
}

#[test]
fn acceptance() {
    let h = halving();
    let results = [
        ("1 golden orbits", golden_orbits()),
        ("2 round-trip transformation", round_trip()),
        ("3 adiabatic invariance", adiabatic_invariance()),
        ("4 canonical GC integration", canonical_integration()),
        ("5 generalized-canonical verification", generalized_canonical(&h)),
        ("6 drift-formula agreement", drift_agreement()),
        ("7 variational principle", variational(&h)),
        ("8 non-canonical hybrid map", non_canonical(&h)),
        ("9 determinism", determinism()),
    ];
    for (name, v) in &results {
        println!("{} criterion {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    let failed: Vec<_> = results.iter().filter(|(_, v)| !v.pass).map(|(n, _)| *n).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
