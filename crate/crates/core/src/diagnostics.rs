//! Adiabatic-invariance measurements, conservation ledgers, the
//! single-valuedness probe and ε-scans with log-log fits.

use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fields::{FieldModel, FieldSetup, Species};
use crate::fullorbit::{integrate_full, rk4_excursion, FullState, IntegrationSettings};
use crate::gcmotion::{integrate_gc, GcTrajectory};
use crate::gyrotransform::{from_guiding_center, to_guiding_center};
use crate::real::Real;
use crate::vector::Vec3;

/// Smallest initial μ′ accepted by [`mu_drift`].
pub const MIN_MU: f64 = 1e-14;
/// Metric values below this are treated as round-off and refused by the fit.
pub const FIT_FLOOR: f64 = 1e-14;
/// Minimum trajectory span, in gyroperiods, for [`mu_drift`].
pub const MIN_GYROPERIODS: f64 = 50.0;

/// `max_t |μ′(t) − μ′(0)| / μ′(0)` with `μ′` from the transformation at each sample.
pub fn mu_drift<T: Real>(states: &[FullState<T>], setup: &FieldSetup<T>) -> Result<T> {
    let (first, last) = match (states.first(), states.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InvalidInput("empty trajectory".into())),
    };
    let omega = setup.sample(first.r, first.t)?.omega;
    let periods = (last.t - first.t) * omega / T::two_pi();
    if periods < T::lit(MIN_GYROPERIODS) {
        return Err(Error::InvalidInput(format!(
            "trajectory spans {:.1} gyroperiods, need {MIN_GYROPERIODS}",
            periods.as_f64()
        )));
    }
    let sp = &setup.species;
    let mu0 = to_guiding_center(first, setup)?.mu(sp);
    if !(mu0 >= T::lit(MIN_MU)) {
        return Err(Error::ZeroMu { mu: mu0.as_f64() });
    }
    states[1..].iter().try_fold(T::zero(), |worst, s| {
        let mu = to_guiding_center(s, setup)?.mu(sp);
        Ok(worst.max((mu - mu0).abs() / mu0))
    })
}

/// Largest relative excursion of each conserved quantity that applies.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConservationLedger<T> {
    pub energy_drift: Option<T>,
    pub k_drift: Option<T>,
    pub p_phi_drift: Option<T>,
    pub mu_drift: Option<T>,
}

fn max_relative<T: Real>(values: impl IntoIterator<Item = T>) -> T {
    let mut it = values.into_iter();
    let Some(first) = it.next() else {
        return T::zero();
    };
    let scale = first.abs();
    it.fold(T::zero(), |worst, v| {
        let d = (v - first).abs();
        worst.max(if scale > T::zero() { d / scale } else { d })
    })
}

/// Energy (static fields only) and μ′ drifts along a full orbit.
pub fn full_orbit_ledger<T: Real>(states: &[FullState<T>], setup: &FieldSetup<T>) -> Result<ConservationLedger<T>> {
    let sp = &setup.species;
    let energy_drift = if setup.model.is_time_dependent() {
        None
    } else {
        let energies = states.iter().map(|s| Ok(s.energy(&setup.sample(s.r, s.t)?, sp))).collect::<Result<Vec<_>>>()?;
        Some(max_relative(energies))
    };
    let mus = states.iter().map(|s| Ok(to_guiding_center(s, setup)?.mu(sp))).collect::<Result<Vec<_>>>()?;
    Ok(ConservationLedger { energy_drift, k_drift: None, p_phi_drift: None, mu_drift: Some(max_relative(mus)) })
}

/// `K` (static fields only), `p_φ′` and `μ′` drifts along a guiding-center run.
pub fn gc_ledger<T: Real>(traj: &GcTrajectory<T>, setup: &FieldSetup<T>) -> ConservationLedger<T> {
    let sp = &setup.species;
    ConservationLedger {
        energy_drift: None,
        k_drift: (!setup.model.is_time_dependent()).then(|| max_relative(traj.hamiltonian.iter().copied())),
        p_phi_drift: Some(max_relative(traj.states.iter().map(|g| g.p_phi))),
        mu_drift: Some(max_relative(traj.states.iter().map(|g| g.mu(sp)))),
    }
}

/// Outcome of [`single_valuedness_probe`].
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeReport {
    pub n_states: usize,
    pub converged: usize,
    pub no_convergence: usize,
    pub other_failures: usize,
    /// Largest `|μ′₁ − μ′₂|` of two direct evaluations, over `m v²/2B`.
    pub max_repeat_discrepancy: f64,
    /// Same after a forward-then-backward excursion of the exact orbit.
    pub max_excursion_discrepancy: f64,
    /// Largest position mismatch after the excursion, over `L`.
    pub max_return_error: f64,
}

impl ProbeReport {
    pub fn success_rate(&self) -> f64 {
        self.converged as f64 / self.n_states as f64
    }
}

/// Minimum ensemble size of the probe.
pub const MIN_PROBE_STATES: usize = 100;
const EXCURSION_STEPS: usize = 32;
const EXCURSION_DT_OMEGA: f64 = 0.05;

/// Evaluates μ′ at seeded pseudo-random unit-speed states twice directly and
/// once after an exact-orbit excursion that returns to the same state.
pub fn single_valuedness_probe<T: Real>(setup: &FieldSetup<T>, n_states: usize, seed: u64) -> Result<ProbeReport> {
    if n_states < MIN_PROBE_STATES {
        return Err(Error::InvalidInput(format!("probe needs at least {MIN_PROBE_STATES} states")));
    }
    let sp = &setup.species;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = setup.model.sampling_box();
    let mut report = ProbeReport {
        n_states,
        converged: 0,
        no_convergence: 0,
        other_failures: 0,
        max_repeat_discrepancy: 0.0,
        max_excursion_discrepancy: 0.0,
        max_return_error: 0.0,
    };
    for _ in 0..n_states {
        let r = Vec3::new(
            lo.x + (hi.x - lo.x) * T::lit(rng.gen::<f64>()),
            lo.y + (hi.y - lo.y) * T::lit(rng.gen::<f64>()),
            lo.z + (hi.z - lo.z) * T::lit(rng.gen::<f64>()),
        );
        let v = random_direction(&mut rng);
        let s = FullState::new(r, v, T::zero());
        let first = match to_guiding_center(&s, setup) {
            Ok(g) => g,
            Err(Error::NoConvergence { .. }) => {
                report.no_convergence += 1;
                continue;
            }
            Err(_) => {
                report.other_failures += 1;
                continue;
            }
        };
        report.converged += 1;
        let field = setup.sample(r, T::zero())?;
        let scale = sp.m * v.norm_sq() / (T::lit(2.0) * field.b_mag);
        let second = to_guiding_center(&s, setup)?;
        let repeat = ((first.mu(sp) - second.mu(sp)).abs() / scale).as_f64();
        report.max_repeat_discrepancy = report.max_repeat_discrepancy.max(repeat);

        let dt = T::lit(EXCURSION_DT_OMEGA) / field.omega;
        let away = rk4_excursion(&s, dt, EXCURSION_STEPS, setup)?;
        let back = rk4_excursion(&away, -dt, EXCURSION_STEPS, setup)?;
        let returned = to_guiding_center(&FullState { t: s.t, ..back }, setup)?;
        let excursion = ((first.mu(sp) - returned.mu(sp)).abs() / scale).as_f64();
        report.max_excursion_discrepancy = report.max_excursion_discrepancy.max(excursion);
        let miss = ((back.r - s.r).norm() / setup.scale_length()).as_f64();
        report.max_return_error = report.max_return_error.max(miss);
    }
    Ok(report)
}

fn random_direction<T: Real>(rng: &mut ChaCha8Rng) -> Vec3<T> {
    let cos_theta: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let sin_theta = (1.0 - cos_theta * cos_theta).sqrt();
    Vec3::new(T::lit(sin_theta * phi.cos()), T::lit(sin_theta * phi.sin()), T::lit(cos_theta))
}

/// Metric values against ε with a least-squares fit of `ln metric` on `ln ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanResult {
    pub eps_values: Vec<f64>,
    pub metric_values: Vec<f64>,
    pub loglog_slope: f64,
    pub slope_stderr: f64,
}

/// Fits `ln metric = a + slope ln ε`.
pub fn fit_loglog(eps_values: &[f64], metric_values: &[f64]) -> Result<ScanResult> {
    check_eps_ladder(eps_values)?;
    if metric_values.len() != eps_values.len() {
        return Err(Error::InvalidInput("one metric value per ε required".into()));
    }
    if let Some(bad) = metric_values.iter().find(|m| !(**m >= FIT_FLOOR) || !m.is_finite()) {
        return Err(Error::FitDegenerate(format!("metric value {bad:e} below the floor {FIT_FLOOR:e}")));
    }
    let x: Vec<f64> = eps_values.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = metric_values.iter().map(|m| m.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Ok(ScanResult {
        eps_values: eps_values.to_vec(),
        metric_values: metric_values.to_vec(),
        loglog_slope: slope,
        slope_stderr: (ss_res / (n - 2.0) / sxx).sqrt(),
    })
}

/// At least three strictly decreasing positive values.
pub fn check_eps_ladder(eps_values: &[f64]) -> Result<()> {
    if eps_values.len() < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 ε values (got {})", eps_values.len())));
    }
    if eps_values.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidInput("ε values must be positive".into()));
    }
    if eps_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("ε values must be strictly decreasing".into()));
    }
    Ok(())
}

/// The default ε ladder `{1/8, 1/16, 1/32, 1/64}`.
pub const DEFAULT_EPS_LADDER: [f64; 4] = [0.125, 0.0625, 0.03125, 0.015625];

/// Quantity measured at each ε of a scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    /// `|r′ − r″|/L` where `r″` is the guiding center of the particle state
    /// reconstructed from `r′`.
    RoundTripPosition,
    /// Largest drift-form residual along a guiding-center run over the
    /// particle speed; `|v′|` itself is too small near turning points to
    /// normalize by.
    ConstraintResidual,
    /// [`mu_drift`] of the exact orbit.
    MuDrift,
    /// Largest `|r′_GC(t) − r′_orbit(t)|/L` between a guiding-center run and
    /// the transformed exact orbit.
    TrackingError,
}

impl Metric {
    pub const ALL: [Metric; 4] =
        [Metric::RoundTripPosition, Metric::ConstraintResidual, Metric::MuDrift, Metric::TrackingError];

    pub fn name(self) -> &'static str {
        match self {
            Metric::RoundTripPosition => "round_trip_position",
            Metric::ConstraintResidual => "constraint_residual",
            Metric::MuDrift => "mu_drift",
            Metric::TrackingError => "tracking_error",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown metric {s:?}")))
    }
}

/// How the base state is replicated into an ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ensemble {
    Single,
    /// The perpendicular velocity rotated about `b` through `n` equally spaced angles.
    Gyrophases(usize),
    /// Seeded uniform positions in the model's sampling box with the base
    /// speed and pitch angle and a random gyrophase.
    Random {
        n: usize,
        seed: u64,
    },
}

/// A fixed physical experiment repeated at each ε.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario<T> {
    pub model: FieldModel<T>,
    pub species: Species<T>,
    /// Base particle state, held fixed in physical units across ε.
    pub initial: FullState<T>,
    pub ensemble: Ensemble,
    /// Physical integration span.
    pub t_span: T,
    /// Exact-orbit step in units of the initial `1/Ω`.
    pub dt_omega: T,
    /// Guiding-center step in units of the initial `1/Ω`.
    pub gc_dt_omega: T,
    pub sample_stride: usize,
}

impl<T: Real> Scenario<T> {
    /// Ensemble members; identical at every ε.
    pub fn members(&self) -> Result<Vec<FullState<T>>> {
        let reference = FieldSetup::new(self.model, self.species, T::one())?;
        let s0 = self.initial;
        let f0 = reference.sample(s0.r, s0.t)?;
        let u0 = f0.b_hat.dot(s0.v);
        let speed = s0.v.norm();
        let perp = s0.v - f0.b_hat * u0;
        Ok(match self.ensemble {
            Ensemble::Single => vec![s0],
            Ensemble::Gyrophases(n) => (0..n.max(1))
                .map(|k| {
                    let angle = T::two_pi() * T::from_usize(k).unwrap_or_else(T::zero)
                        / T::from_usize(n.max(1)).unwrap_or_else(T::one);
                    let (sin, cos) = angle.sin_cos();
                    let rotated = perp * cos + f0.b_hat.cross(perp) * sin;
                    FullState { v: f0.b_hat * u0 + rotated, ..s0 }
                })
                .collect(),
            Ensemble::Random { n, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let (lo, hi) = self.model.sampling_box();
                let pitch = u0 / speed;
                let w = (T::one() - pitch * pitch).max(T::zero()).sqrt() * speed;
                let mut out = Vec::with_capacity(n);
                for _ in 0..n {
                    let r = Vec3::new(
                        lo.x + (hi.x - lo.x) * T::lit(rng.gen::<f64>()),
                        lo.y + (hi.y - lo.y) * T::lit(rng.gen::<f64>()),
                        lo.z + (hi.z - lo.z) * T::lit(rng.gen::<f64>()),
                    );
                    let (sin, cos) = T::lit(rng.gen_range(0.0..std::f64::consts::TAU)).sin_cos();
                    let f = reference.sample(r, s0.t)?;
                    let v = f.b_hat * (pitch * speed) + (f.e1 * cos + f.e2 * sin) * w;
                    out.push(FullState::new(r, v, s0.t));
                }
                out
            }
        })
    }

    fn setup(&self, eps: T) -> Result<FieldSetup<T>> {
        FieldSetup::new(self.model, self.species, eps)
    }
}

/// Ensemble mean of `metric` at one ε.
pub fn evaluate<T: Real>(metric: Metric, scenario: &Scenario<T>, eps: T) -> Result<T> {
    let setup = scenario.setup(eps)?;
    let members = scenario.members()?;
    let mut total = T::zero();
    for s in &members {
        total = total + evaluate_member(metric, scenario, &setup, s)?;
    }
    Ok(total / T::from_usize(members.len()).unwrap_or_else(T::one))
}

fn evaluate_member<T: Real>(
    metric: Metric,
    scenario: &Scenario<T>,
    setup: &FieldSetup<T>,
    s: &FullState<T>,
) -> Result<T> {
    let omega = setup.sample(s.r, s.t)?.omega;
    let length = setup.scale_length();
    let stride = scenario.sample_stride;
    match metric {
        Metric::RoundTripPosition => {
            let g = to_guiding_center(s, setup)?;
            let again = to_guiding_center(&from_guiding_center(&g, setup)?, setup)?;
            Ok((again.r_gc - g.r_gc).norm() / length)
        }
        Metric::ConstraintResidual => {
            let g = to_guiding_center(s, setup)?;
            let dt = scenario.gc_dt_omega / omega;
            let traj = integrate_gc(&g, &IntegrationSettings::rk4(dt, s.t + scenario.t_span, stride), setup)?;
            let worst = traj.constraint_residual.iter().fold(T::zero(), |m, r| m.max(r.norm()));
            Ok(worst / s.v.norm())
        }
        Metric::MuDrift => {
            let dt = scenario.dt_omega / omega;
            let traj = integrate_full(s, &IntegrationSettings::rk4(dt, s.t + scenario.t_span, stride), setup)?;
            mu_drift(&traj.states, setup)
        }
        Metric::TrackingError => {
            let (gc, full) = paired_runs(scenario, setup, s)?;
            gc.states.iter().zip(&full).try_fold(T::zero(), |worst, (g, p)| {
                let orbit_gc = to_guiding_center(p, setup)?;
                Ok(worst.max((g.r_gc - orbit_gc.r_gc).norm() / length))
            })
        }
    }
}

/// A guiding-center run and an exact orbit from the same particle, sampled at
/// identical times.
pub fn paired_runs<T: Real>(
    scenario: &Scenario<T>,
    setup: &FieldSetup<T>,
    s: &FullState<T>,
) -> Result<(GcTrajectory<T>, Vec<FullState<T>>)> {
    let omega = setup.sample(s.r, s.t)?.omega;
    let gc_dt = scenario.gc_dt_omega / omega;
    let ratio = (scenario.gc_dt_omega / scenario.dt_omega).ceil().max(T::one());
    let substeps = ratio.to_usize().unwrap_or(1);
    let full_dt = gc_dt / ratio;
    let gc_steps = (scenario.t_span / gc_dt).round().max(T::one());
    let t_end = s.t + gc_steps * gc_dt;
    let stride = scenario.sample_stride;
    let gc = integrate_gc(&to_guiding_center(s, setup)?, &IntegrationSettings::rk4(gc_dt, t_end, stride), setup)?;
    let full = integrate_full(s, &IntegrationSettings::rk4(full_dt, t_end, stride * substeps), setup)?;
    if gc.states.len() != full.states.len() {
        return Err(Error::InvalidInput("paired runs produced different sample counts".into()));
    }
    Ok((gc, full.states))
}

/// Runs `metric` at each ε on up to `jobs` threads; results are gathered by ε index.
pub fn scan<T: Real>(metric: Metric, scenario: &Scenario<T>, eps_values: &[f64], jobs: usize) -> Result<ScanResult> {
    check_eps_ladder(eps_values)?;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<T>>>> = Mutex::new(vec![None; eps_values.len()]);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, eps_values.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&eps) = eps_values.get(i) else { break };
                let value = evaluate(metric, scenario, T::lit(eps));
                results.lock().expect("scan results poisoned")[i] = Some(value);
            });
        }
    });
    let metric_values = results
        .into_inner()
        .expect("scan results poisoned")
        .into_iter()
        .map(|r| r.expect("every scan point runs").map(|v| v.as_f64()))
        .collect::<Result<Vec<_>>>()?;
    fit_loglog(eps_values, &metric_values)
}
