//! Subcommand implementations. Each fills an [`Artifacts`] and leaves the
//! writing to the caller.

use gyrocanon::canonchecks::{hat_basis, PathNode};
use gyrocanon::diagnostics::{full_orbit_ledger, gc_ledger, paired_runs, ConservationLedger};
use gyrocanon::fields::verify_model;
use gyrocanon::{
    el_residual, from_guiding_center, integrate_full, integrate_gc, scan, single_valuedness_probe, to_guiding_center,
    truncated_map_residual, verify_generalized_canonical, DiscreteLagrangian, Error, FieldSetup, FullLagrangian,
    FullState, GCState, GcLagrangian, GyrokineticSystem, IntegrationSettings, Result, Scenario, Vec3, VelocityReading,
};
use log::info;

use crate::config::{InitialState, RunConfig};
use crate::output::{gc_rows, Artifacts, Row};

/// Numerical failures; these exit with status 2.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Probe(String),
}

type Outcome = std::result::Result<(), Failure>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    FieldsCheck,
    Orbit,
    Gc,
    Transform,
    Compare,
    Scan,
    ActionCheck,
    CanonCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::FieldsCheck => "fields-check",
            Command::Orbit => "orbit",
            Command::Gc => "gc",
            Command::Transform => "transform",
            Command::Compare => "compare",
            Command::Scan => "scan",
            Command::ActionCheck => "action-check",
            Command::CanonCheck => "canon-check",
        }
    }
}

pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub setup: FieldSetup<f64>,
    pub jobs: usize,
}

impl<'a> Context<'a> {
    pub fn new(config: &'a RunConfig, jobs: usize) -> Result<Self> {
        let setup = FieldSetup::new(config.field.model(), config.species(), config.eps)?;
        Ok(Self { config, setup, jobs: jobs.max(1) })
    }

    fn initial_gc(&self) -> Result<GCState<f64>> {
        match self.config.initial_state {
            InitialState::Full { .. } => to_guiding_center(&self.initial_full()?, &self.setup),
            InitialState::Gc { r_gc, u, mu, phi } => {
                GCState::from_drift_variables(Vec3::from_array(r_gc), u, mu, phi, 0.0, &self.setup)
            }
        }
    }

    /// The configured particle; a guiding-center start is mapped back at the base ε.
    fn initial_full(&self) -> Result<FullState<f64>> {
        match self.config.initial_state {
            InitialState::Full { r, v } => Ok(FullState::new(Vec3::from_array(r), Vec3::from_array(v), 0.0)),
            InitialState::Gc { .. } => from_guiding_center(&self.initial_gc()?, &self.setup),
        }
    }

    fn full_settings(&self, refine: f64, stride: usize) -> IntegrationSettings<f64> {
        let int = &self.config.integrator;
        IntegrationSettings { scheme: int.scheme(), dt: int.dt / refine, t_end: int.t_end, sample_stride: stride }
    }

    fn gc_settings(&self, refine: f64, stride: usize) -> IntegrationSettings<f64> {
        let int = &self.config.integrator;
        IntegrationSettings::rk4(int.gc_dt() / refine, int.t_end, stride)
    }
}

pub fn run(command: Command, ctx: &Context, out: &mut Artifacts) -> Outcome {
    match command {
        Command::FieldsCheck => fields_check(ctx, out),
        Command::Orbit => orbit(ctx, out),
        Command::Gc => gc(ctx, out),
        Command::Transform => transform(ctx, out),
        Command::Compare => compare(ctx, out),
        Command::Scan => run_scan(ctx, out),
        Command::ActionCheck => action_check(ctx, out),
        Command::CanonCheck => canon_check(ctx, out),
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn record_ledger(out: &mut Artifacts, ledger: &ConservationLedger<f64>) {
    let entries = [
        ("energy_drift", ledger.energy_drift),
        ("k_drift", ledger.k_drift),
        ("p_phi_drift", ledger.p_phi_drift),
        ("mu_drift", ledger.mu_drift),
    ];
    for (name, value) in entries {
        if let Some(v) = value {
            out.summary.values.insert(name.into(), v);
        }
    }
}

fn fields_check(ctx: &Context, out: &mut Artifacts) -> Outcome {
    let model = ctx.setup.model;
    let (lo, hi) = model.sampling_box();
    let n = 4;
    let at = |a: f64, b: f64, k: usize| a + (b - a) * (k as f64 + 0.5) / n as f64;
    let mut points = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                points.push(Vec3::new(at(lo.x, hi.x, i), at(lo.y, hi.y, j), at(lo.z, hi.z, k)));
            }
        }
    }
    let l = model.scale_length();
    let mut worst = 0.0f64;
    for h in [1e-2, 1e-3, 1e-4] {
        let report = verify_model(&model, &ctx.setup.species, &points, 0.0, h * l)?;
        out.diagnostics.push("curl_residual", h * l, report.curl_residual);
        out.diagnostics.push("electric_residual", h * l, report.electric_residual);
        worst = report.max_residual();
    }
    out.summary.residual_maxima.insert("consistency".into(), worst);
    out.summary.values.insert("points".into(), points.len() as f64);
    Ok(())
}

fn orbit(ctx: &Context, out: &mut Artifacts) -> Outcome {
    let s0 = ctx.initial_full()?;
    let traj = integrate_full(&s0, &ctx.full_settings(1.0, ctx.config.integrator.sample_stride), &ctx.setup)?;
    info!("orbit: {} samples", traj.len());
    out.trajectory = Some(traj.states.iter().map(|s| Row::full(s, &ctx.setup)).collect::<Result<_>>()?);
    out.summary.values.insert("step_too_large".into(), flag(traj.step_too_large));
    let ledger = full_orbit_ledger(&traj.states, &ctx.setup)?;
    record_ledger(out, &ledger);
    if let Some(rows) = &out.trajectory {
        let e0 = rows[0].energy_or_k.unwrap_or(0.0);
        for row in rows {
            out.diagnostics.push("energy_change", row.t, row.energy_or_k.unwrap_or(0.0) - e0);
        }
    }
    Ok(())
}

fn gc(ctx: &Context, out: &mut Artifacts) -> Outcome {
    let g0 = ctx.initial_gc()?;
    let traj = integrate_gc(&g0, &ctx.gc_settings(1.0, ctx.config.integrator.sample_stride), &ctx.setup)?;
    info!("gc: {} samples", traj.states.len());
    out.trajectory = Some(gc_rows(&traj, &ctx.setup));
    out.summary.values.insert("step_too_large".into(), flag(traj.step_too_large));
    record_ledger(out, &gc_ledger(&traj, &ctx.setup));
    let relative = traj.relative_residuals();
    for (g, r) in traj.states.iter().zip(&relative) {
        out.diagnostics.push("relative_constraint_residual", g.t, *r);
    }
    out.summary
        .residual_maxima
        .insert("relative_constraint_residual".into(), relative.iter().copied().fold(0.0, f64::max));
    Ok(())
}

fn transform(ctx: &Context, out: &mut Artifacts) -> Outcome {
    let setup = &ctx.setup;
    let l = setup.scale_length();
    let (particle, g, back) = match ctx.config.initial_state {
        InitialState::Full { .. } => {
            let s = ctx.initial_full()?;
            let g = to_guiding_center(&s, setup)?;
            let back = from_guiding_center(&g, setup)?;
            out.summary.values.insert("position_error".into(), (back.r - s.r).norm() / l);
            out.summary.values.insert("velocity_error".into(), (back.v - s.v).norm() / s.v.norm());
            (s, g, back)
        }
        InitialState::Gc { .. } => {
            let g = ctx.initial_gc()?;
            let s = from_guiding_center(&g, setup)?;
            let again = to_guiding_center(&s, setup)?;
            out.summary.values.insert("position_error".into(), (again.r_gc - g.r_gc).norm() / l);
            (s, g, s)
        }
    };
    let field = setup.sample(g.r_gc, g.t)?;
    out.summary.values.insert("mu".into(), g.mu(&setup.species));
    out.summary.values.insert("u".into(), g.u(&field));
    out.summary.values.insert("phi".into(), g.phi);
    let k = gyrocanon::hamiltonian_k(&g, &field, &setup.species);
    let mismatch = g.momentum_mismatch(&field, &setup.species).norm();
    out.trajectory =
        Some(vec![Row::full(&particle, setup)?, Row::gc(&g, k, Some(mismatch), setup), Row::full(&back, setup)?]);

    let n = ctx.config.checks.probe_states;
    if n > 0 {
        let report = single_valuedness_probe(setup, n, ctx.config.seed)?;
        out.summary.values.insert("probe_states".into(), n as f64);
        out.summary.values.insert("probe_success_rate".into(), report.success_rate());
        out.summary.residual_maxima.insert("probe_repeat_discrepancy".into(), report.max_repeat_discrepancy);
        out.summary.residual_maxima.insert("probe_excursion_discrepancy".into(), report.max_excursion_discrepancy);
        out.summary.residual_maxima.insert("probe_return_error".into(), report.max_return_error);
        if report.converged < n {
            return Err(Failure::Probe(format!(
                "{} of {n} probe states failed to reach the guiding-center fixed point",
                n - report.converged
            )));
        }
    }
    Ok(())
}

fn compare(ctx: &Context, out: &mut Artifacts) -> Outcome {
    let setup = &ctx.setup;
    let s0 = ctx.initial_full()?;
    let omega = setup.sample(s0.r, s0.t)?.omega;
    let int = &ctx.config.integrator;
    let scenario = Scenario {
        model: setup.model,
        species: setup.species,
        initial: s0,
        ensemble: gyrocanon::Ensemble::Single,
        t_span: int.t_end,
        dt_omega: int.dt * omega,
        gc_dt_omega: int.gc_dt() * omega,
        sample_stride: int.sample_stride,
    };
    let (gc, full) = paired_runs(&scenario, setup, &s0)?;
    let l = setup.scale_length();
    let mut worst = 0.0f64;
    for (g, s) in gc.states.iter().zip(&full) {
        let err = (g.r_gc - to_guiding_center(s, setup)?.r_gc).norm() / l;
        out.diagnostics.push("tracking_error", g.t, err);
        worst = worst.max(err);
    }
    let mut rows = full.iter().map(|s| Row::full(s, setup)).collect::<Result<Vec<_>>>()?;
    rows.extend(gc_rows(&gc, setup));
    out.trajectory = Some(rows);
    out.summary.residual_maxima.insert("tracking_error".into(), worst);
    out.summary
        .residual_maxima
        .insert("relative_constraint_residual".into(), gc.relative_residuals().into_iter().fold(0.0, f64::max));
    Ok(())
}

fn run_scan(ctx: &Context, out: &mut Artifacts) -> Outcome {
    let cfg = ctx.config.scan.as_ref().expect("checked before dispatch");
    let scenario = Scenario {
        model: ctx.setup.model,
        species: ctx.setup.species,
        initial: ctx.initial_full()?,
        ensemble: cfg.ensemble(ctx.config.seed),
        t_span: cfg.t_span.unwrap_or(ctx.config.integrator.t_end),
        dt_omega: cfg.dt_omega,
        gc_dt_omega: cfg.gc_dt_omega,
        sample_stride: ctx.config.integrator.sample_stride,
    };
    let metric = cfg.metric();
    let result = scan(metric, &scenario, &cfg.eps_list, ctx.jobs)?;
    for (e, v) in result.eps_values.iter().zip(&result.metric_values) {
        out.diagnostics.push(metric.name(), *e, *v);
    }
    info!("scan {}: slope {:.3} ± {:.3}", metric.name(), result.loglog_slope, result.slope_stderr);
    out.summary.slopes.insert(metric.name().into(), result.loglog_slope);
    out.summary.loglog_slope = Some(result.loglog_slope);
    out.summary.slope_stderr = Some(result.slope_stderr);
    out.summary.residual_maxima.insert(metric.name().into(), result.metric_values.iter().copied().fold(0.0, f64::max));
    Ok(())
}

fn times<T: Copy>(path: &[PathNode<T>]) -> Vec<T> {
    path.iter().map(|n| n.t).collect()
}

fn action_check(ctx: &Context, out: &mut Artifacts) -> Outcome {
    let setup = ctx.setup;
    let s0 = ctx.initial_full()?;
    let g0 = ctx.initial_gc()?;
    let span = ctx.config.integrator.t_end;
    let width = ctx.config.checks.hat_width.unwrap_or(span / 10.0);
    let centres: Vec<f64> = (1..4).map(|k| span * k as f64 / 4.0).collect();
    let h = ctx.config.checks.fd_step;
    let full_lag = FullLagrangian { setup };
    let gc_lag = GcLagrangian { setup };
    let mut series: Vec<[f64; 3]> = Vec::new();
    for k in 0..2 {
        let refine = (1 << k) as f64;
        let full = integrate_full(&s0, &ctx.full_settings(refine, 1), &setup)?;
        let path = full_lag.path(&full.states)?;
        let basis = hat_basis(&times(&path), &centres, width, full_lag.node_dim())?;
        let el_full = el_residual(&full_lag, &path, &basis, h)?;
        // force-free straight line from the same start is not an extremal
        let line: Vec<FullState<f64>> =
            full.states.iter().map(|s| FullState::new(s0.r + s0.v * (s.t - s0.t), s0.v, s.t)).collect();
        let el_line = el_residual(&full_lag, &full_lag.path(&line)?, &basis, h)?;

        let gc = integrate_gc(&g0, &ctx.gc_settings(refine, 1), &setup)?;
        let gpath = gc_lag.path(&gc.states);
        let gbasis = hat_basis(&times(&gpath), &centres, width, gc_lag.node_dim())?;
        let el_gc = el_residual(&gc_lag, &gpath, &gbasis, h)?;

        let dt = ctx.config.integrator.dt / refine;
        out.diagnostics.push("el_full", dt, el_full);
        out.diagnostics.push("el_gc", ctx.config.integrator.gc_dt() / refine, el_gc);
        out.diagnostics.push("el_straight_line", dt, el_line);
        if k == 0 {
            out.summary.values.insert("action_full".into(), gyrocanon::action_full(&full.states, &setup)?);
            out.summary.values.insert("action_gc".into(), gyrocanon::action_gc(&gc.states, &setup)?);
        }
        series.push([el_full, el_gc, el_line]);
    }
    for (i, name) in ["el_full", "el_gc", "el_straight_line"].into_iter().enumerate() {
        out.summary.residual_maxima.insert(name.into(), series[1][i]);
        out.summary.values.insert(format!("{name}_halving_ratio"), series[0][i] / series[1][i]);
    }
    Ok(())
}

fn canon_check(ctx: &Context, out: &mut Artifacts) -> Outcome {
    let setup = ctx.setup;
    let g0 = ctx.initial_gc()?;
    let sys = GyrokineticSystem::new(setup);
    let h = ctx.config.checks.fd_step;
    let mut series: Vec<[f64; 3]> = Vec::new();
    for k in 0..2 {
        let refine = (1 << k) as f64;
        let traj = integrate_gc(&g0, &ctx.gc_settings(refine, 1), &setup)?;
        let kinematic = verify_generalized_canonical(&sys, &sys.samples(&traj.states, VelocityReading::Kinematic)?, h)?;
        let drift = verify_generalized_canonical(&sys, &sys.samples(&traj.states, VelocityReading::DriftForm)?, h)?;
        let dt = ctx.config.integrator.gc_dt() / refine;
        out.diagnostics.push("hamilton_residual", dt, kinematic.hamilton_residual_max);
        out.diagnostics.push("constraint_residual_kinematic", dt, kinematic.constraint_residual_max);
        out.diagnostics.push("constraint_residual_drift_form", dt, drift.constraint_residual_max);
        series.push([
            kinematic.hamilton_residual_max,
            kinematic.constraint_residual_max,
            drift.constraint_residual_max,
        ]);
    }
    for (i, name) in
        ["hamilton_residual", "constraint_residual_kinematic", "constraint_residual_drift_form"].into_iter().enumerate()
    {
        out.summary.residual_maxima.insert(name.into(), series[1][i]);
        out.summary.values.insert(format!("{name}_halving_ratio"), series[0][i] / series[1][i]);
    }
    let s0 = ctx.initial_full()?;
    let field = setup.sample(s0.r, s0.t)?;
    let map = truncated_map_residual(&setup, s0.r, s0.canonical_momentum(&field, &setup.species), s0.t, h)?;
    out.summary.values.insert("truncated_map_symplectic_residual".into(), map.symplectic_residual);
    Ok(())
}
