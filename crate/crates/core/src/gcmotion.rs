//! Guiding-center motion in the superabundant variables
//! `X′ = (r′, p_r′, φ′, p_φ′, v′)`.
//!
//! The integrator advances the Hamilton equations of
//! `K = −p_φ′ Ω′ + |p_r′ − (q/c) A′|²/2m + q Φ′`; the closed-form drift
//! velocity `u′b′ + v_E′ + v_D′` is only used to initialize states and as a
//! per-sample residual diagnostic.

use crate::error::{Error, Result};
use crate::fields::{FieldSample, FieldSetup, Species};
use crate::fullorbit::{gyration_check, IntegrationSettings, Trajectory};
use crate::gyrotransform::GCState;
use crate::real::{wrap_angle, Real};
use crate::vector::Vec3;

/// Electric drift `c E×b/|B|`.
pub fn v_e<T: Real>(field: &FieldSample<T>) -> Vec3<T> {
    field.v_e
}

/// First-order drift `(b/Ω) × {(μ/m)∇B + (u b + v_E)·(u ∇b + ∇v_E)}`.
///
/// The vector–tensor product is the convective contraction `Vᵢ ∂ᵢWⱼ`.
pub fn v_d<T: Real>(field: &FieldSample<T>, u: T, mu: T, species: &Species<T>) -> Vec3<T> {
    let carrier = field.b_hat * u + field.v_e;
    let inertia = field.grad_b_hat.convective(carrier) * u + field.grad_v_e.convective(carrier);
    let force = field.grad_b_mag * (mu / species.m) + inertia;
    field.b_hat.cross(force) / field.omega
}

/// `u b + v_E + v_D`, the closed-form guiding-center velocity.
pub fn drift_velocity<T: Real>(field: &FieldSample<T>, u: T, mu: T, species: &Species<T>) -> Vec3<T> {
    field.b_hat * u + field.v_e + v_d(field, u, mu, species)
}

/// Guiding-center Hamiltonian with `Φ*` replaced by `Φ′`.
pub fn hamiltonian_k<T: Real>(g: &GCState<T>, field: &FieldSample<T>, species: &Species<T>) -> T {
    let kinetic = g.p_r - field.vector_potential * (species.q / species.c);
    -g.p_phi * field.omega + kinetic.norm_sq() / (T::lit(2.0) * species.m) + species.q * field.potential
}

/// Right-hand side of the generalized canonical equations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GCDerivative<T> {
    pub dr_gc: Vec3<T>,
    pub dp_r: Vec3<T>,
    pub dphi: T,
    /// Identically zero: the gyrophase is ignorable.
    pub dp_phi: T,
    /// `dr′/dt − (u′b′ + v_E′ + v_D′)` with `u′ = b′·dr′/dt`.
    pub constraint_residual: Vec3<T>,
}

/// Hamilton equations of `K` at `g`; `field` must be sampled at `g.r_gc`.
pub fn canonical_rhs<T: Real>(g: &GCState<T>, field: &FieldSample<T>, species: &Species<T>) -> GCDerivative<T> {
    let (dr_gc, dp_r, dphi) = hamilton_flow(g.r_gc, g.p_r, g.p_phi, field, species);
    let mu = g.mu(species);
    let u = field.b_hat.dot(dr_gc);
    GCDerivative {
        dr_gc,
        dp_r,
        dphi,
        dp_phi: T::zero(),
        constraint_residual: dr_gc - drift_velocity(field, u, mu, species),
    }
}

#[inline]
fn hamilton_flow<T: Real>(
    _r: Vec3<T>,
    p_r: Vec3<T>,
    p_phi: T,
    field: &FieldSample<T>,
    species: &Species<T>,
) -> (Vec3<T>, Vec3<T>, T) {
    let q_c = species.q / species.c;
    let velocity = (p_r - field.vector_potential * q_c) / species.m;
    let dp_r = field.grad_vector_potential.gradient_dot(velocity) * q_c + field.grad_omega(species) * p_phi
        - field.grad_potential * species.q;
    (velocity, dp_r, -field.omega)
}

/// GC samples with the Hamiltonian and the drift-form residual at each sample.
#[derive(Clone, Debug, PartialEq)]
pub struct GcTrajectory<T> {
    pub states: Vec<GCState<T>>,
    pub hamiltonian: Vec<T>,
    pub constraint_residual: Vec<Vec3<T>>,
    /// Gyrophase before wrapping into `[0, 2π)`.
    pub unwrapped_phase: Vec<T>,
    pub step_too_large: bool,
}

impl<T: Real> GcTrajectory<T> {
    /// `|residual| / |v′|` at each sample.
    pub fn relative_residuals(&self) -> Vec<T> {
        self.states.iter().zip(&self.constraint_residual).map(|(g, res)| res.norm() / g.v_gc.norm()).collect()
    }

    pub fn as_trajectory(&self) -> Trajectory<GCState<T>> {
        Trajectory { states: self.states.clone(), step_too_large: self.step_too_large }
    }
}

/// Allowed drift-form residual: ten times the first-order band `ε²(|v′| + w′)`.
pub fn residual_limit<T: Real>(g0: &GCState<T>, field0: &FieldSample<T>, setup: &FieldSetup<T>) -> T {
    let speed = g0.v_gc.norm() + g0.w(field0, &setup.species);
    T::lit(10.0) * setup.eps * setup.eps * speed
}

/// Integrates the canonical equations with RK4; `p_φ′` is carried unchanged.
pub fn integrate_gc<T: Real>(
    g0: &GCState<T>,
    settings: &IntegrationSettings<T>,
    setup: &FieldSetup<T>,
) -> Result<GcTrajectory<T>> {
    let steps = settings.step_count(g0.t)?;
    let dt = settings.dt;
    let sp = &setup.species;
    let p_phi = g0.p_phi;

    let mut r = g0.r_gc;
    let mut p = g0.p_r;
    let mut phase = g0.phi;
    let mut t = g0.t;
    let mut field = setup.sample(r, t)?;
    let limit = residual_limit(g0, &field, setup);
    let mut flagged = false;

    let capacity = steps / settings.sample_stride + 2;
    let mut out = GcTrajectory {
        states: Vec::with_capacity(capacity),
        hamiltonian: Vec::with_capacity(capacity),
        constraint_residual: Vec::with_capacity(capacity),
        unwrapped_phase: Vec::with_capacity(capacity),
        step_too_large: false,
    };
    let mut record = |r: Vec3<T>, p: Vec3<T>, phase: T, t: T, field: &FieldSample<T>| -> Result<()> {
        let v_gc = (p - field.vector_potential * (sp.q / sp.c)) / sp.m;
        let g = GCState { r_gc: r, p_r: p, phi: wrap_angle(phase), p_phi, v_gc, t };
        let d = canonical_rhs(&g, field, sp);
        let residual = d.constraint_residual.norm();
        if !(residual <= limit) {
            return Err(Error::ResidualBlowup { time: t.as_f64(), residual: residual.as_f64(), limit: limit.as_f64() });
        }
        out.hamiltonian.push(hamiltonian_k(&g, field, sp));
        out.constraint_residual.push(d.constraint_residual);
        out.unwrapped_phase.push(phase);
        out.states.push(g);
        Ok(())
    };

    record(r, p, phase, t, &field)?;
    let half = dt / T::lit(2.0);
    let two = T::lit(2.0);
    for k in 1..=steps {
        gyration_check(dt, field.omega, &mut flagged, "integrate_gc");
        let (k1r, k1p, k1f) = hamilton_flow(r, p, p_phi, &field, sp);
        let r2 = r + k1r * half;
        let p2 = p + k1p * half;
        let (k2r, k2p, k2f) = hamilton_flow(r2, p2, p_phi, &setup.sample(r2, t + half)?, sp);
        let r3 = r + k2r * half;
        let p3 = p + k2p * half;
        let (k3r, k3p, k3f) = hamilton_flow(r3, p3, p_phi, &setup.sample(r3, t + half)?, sp);
        let r4 = r + k3r * dt;
        let p4 = p + k3p * dt;
        let (k4r, k4p, k4f) = hamilton_flow(r4, p4, p_phi, &setup.sample(r4, t + dt)?, sp);
        let sixth = dt / T::lit(6.0);
        r = r + (k1r + k2r * two + k3r * two + k4r) * sixth;
        p = p + (k1p + k2p * two + k3p * two + k4p) * sixth;
        phase = phase + (k1f + k2f * two + k3f * two + k4f) * sixth;
        t = g0.t + dt * T::from_usize(k).unwrap_or_else(T::zero);
        if !(r.is_finite() && p.is_finite() && phase.is_finite()) {
            return Err(Error::NonFinite("integrate_gc step"));
        }
        field = setup.sample(r, t)?;
        if k % settings.sample_stride == 0 || k == steps {
            record(r, p, phase, t, &field)?;
        }
    }
    out.step_too_large = flagged;
    Ok(out)
}
