//! Leading-order gyrokinetic transformation between particle states and the
//! guiding-center state `X′`.

use crate::error::{Error, Result};
use crate::fields::{FieldSample, FieldSetup, Species};
use crate::fullorbit::FullState;
use crate::gcmotion::drift_velocity;
use crate::real::{wrap_angle, Real};
use crate::vector::Vec3;

/// Iteration cap for the guiding-center fixed point.
pub const MAX_FIXED_POINT_ITERATIONS: usize = 50;
/// Fixed-point tolerance relative to `max(L, |r|)`.
pub const FIXED_POINT_TOLERANCE: f64 = 1e-12;
/// Minimum samples per gyroperiod accepted by [`gc_from_orbit_average`].
pub const MIN_SAMPLES_PER_PERIOD: usize = 32;

/// Guiding-center state `(r′, p_r′, φ′, p_φ′, v′)` at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GCState<T> {
    pub r_gc: Vec3<T>,
    pub p_r: Vec3<T>,
    /// Gyrophase in `[0, 2π)`.
    pub phi: T,
    pub p_phi: T,
    pub v_gc: Vec3<T>,
    pub t: T,
}

impl<T: Real> GCState<T> {
    /// Magnetic moment `μ′ = −(q/mc) p_φ′`.
    pub fn mu(&self, species: &Species<T>) -> T {
        -species.gyro_factor() * self.p_phi
    }

    /// Parallel velocity `b′·v′`.
    pub fn u(&self, field: &FieldSample<T>) -> T {
        field.b_hat.dot(self.v_gc)
    }

    /// Perpendicular speed `√(2 B′ μ′ / m)`.
    pub fn w(&self, field: &FieldSample<T>, species: &Species<T>) -> T {
        (T::lit(2.0) * field.b_mag * self.mu(species).max(T::zero()) / species.m).sqrt()
    }

    /// `(1/m)(p_r′ − (q/c) A′) − v′`.
    pub fn momentum_mismatch(&self, field: &FieldSample<T>, species: &Species<T>) -> Vec3<T> {
        (self.p_r - field.vector_potential * (species.q / species.c)) / species.m - self.v_gc
    }

    /// Builds the state with `v′ = u b′ + v_E′ + v_D′` from drift variables at `r_gc`.
    pub fn from_drift_variables(r_gc: Vec3<T>, u: T, mu: T, phi: T, t: T, setup: &FieldSetup<T>) -> Result<Self> {
        if !(mu >= T::zero()) {
            return Err(Error::InvalidInput(format!("mu must be non-negative (got {mu})")));
        }
        let sp = &setup.species;
        let field = setup.sample(r_gc, t)?;
        let v_gc = drift_velocity(&field, u, mu, sp);
        Ok(Self {
            r_gc,
            p_r: v_gc * sp.m + field.vector_potential * (sp.q / sp.c),
            phi: wrap_angle(phi),
            p_phi: -mu / sp.gyro_factor(),
            v_gc,
            t,
        })
    }
}

/// Larmor vector `ρ = −(w × b)/Ω`.
pub fn larmor_vector<T: Real>(w_vec: Vec3<T>, b: Vec3<T>, omega: T) -> Vec3<T> {
    debug_assert!(omega > T::zero());
    -w_vec.cross(b) / omega
}

/// Frame convention for the gyrophase.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct TransformOptions<T> {
    /// Rotates `(e1, e2)` about `b` by this angle before measuring `φ′`.
    pub frame_rotation: T,
}

impl<T: Real> TransformOptions<T> {
    fn basis(&self, field: &FieldSample<T>) -> (Vec3<T>, Vec3<T>) {
        if self.frame_rotation == T::zero() {
            return (field.e1, field.e2);
        }
        let (s, c) = self.frame_rotation.sin_cos();
        (field.e1 * c + field.e2 * s, field.e2 * c - field.e1 * s)
    }
}

fn perpendicular_velocity<T: Real>(v: Vec3<T>, field: &FieldSample<T>) -> (T, Vec3<T>) {
    let u = field.b_hat.dot(v);
    (u, v - field.v_e - field.b_hat * u)
}

/// Particle state to guiding-center state.
pub fn to_guiding_center<T: Real>(s: &FullState<T>, setup: &FieldSetup<T>) -> Result<GCState<T>> {
    to_guiding_center_with(s, setup, &TransformOptions::default())
}

/// [`to_guiding_center`] with an explicit gyrophase frame convention.
pub fn to_guiding_center_with<T: Real>(
    s: &FullState<T>,
    setup: &FieldSetup<T>,
    options: &TransformOptions<T>,
) -> Result<GCState<T>> {
    if !s.is_finite() {
        return Err(Error::NonFinite("to_guiding_center input"));
    }
    let sp = &setup.species;
    let tolerance = T::lit(FIXED_POINT_TOLERANCE) * setup.scale_length().max(s.r.norm());
    let larmor_at = |r_gc: Vec3<T>| -> Result<(FieldSample<T>, Vec3<T>)> {
        let field = setup.sample(r_gc, s.t)?;
        let (_, w_vec) = perpendicular_velocity(s.v, &field);
        Ok((field, larmor_vector(w_vec, field.b_hat, field.omega)))
    };

    let mut r_gc = s.r;
    let (mut field, mut rho) = larmor_at(r_gc)?;
    let mut update = T::infinity();
    let mut iterations = 0;
    while iterations < MAX_FIXED_POINT_ITERATIONS {
        iterations += 1;
        let next = s.r - rho;
        update = (next - r_gc).norm();
        r_gc = next;
        (field, rho) = larmor_at(r_gc)?;
        if update < tolerance {
            break;
        }
    }
    if !(update < tolerance) {
        return Err(Error::NoConvergence { iterations, last_update: update.as_f64() });
    }

    let (u, w_vec) = perpendicular_velocity(s.v, &field);
    let (e1, e2) = options.basis(&field);
    let relative = s.v - field.v_e;
    let phi = wrap_angle(relative.dot(e2).atan2(relative.dot(e1)));
    let mu = sp.m * w_vec.norm_sq() / (T::lit(2.0) * field.b_mag);
    let v_gc = drift_velocity(&field, u, mu, sp);
    Ok(GCState {
        r_gc,
        p_r: v_gc * sp.m + field.vector_potential * (sp.q / sp.c),
        phi,
        p_phi: -mu / sp.gyro_factor(),
        v_gc,
        t: s.t,
    })
}

/// Guiding-center state to particle state.
pub fn from_guiding_center<T: Real>(g: &GCState<T>, setup: &FieldSetup<T>) -> Result<FullState<T>> {
    from_guiding_center_with(g, setup, &TransformOptions::default())
}

/// [`from_guiding_center`] with an explicit gyrophase frame convention.
pub fn from_guiding_center_with<T: Real>(
    g: &GCState<T>,
    setup: &FieldSetup<T>,
    options: &TransformOptions<T>,
) -> Result<FullState<T>> {
    let sp = &setup.species;
    let mu = g.mu(sp);
    if !(mu >= -T::epsilon() * g.p_phi.abs().max(T::one())) {
        return Err(Error::InvalidInput(format!("negative magnetic moment {mu}")));
    }
    let field = setup.sample(g.r_gc, g.t)?;
    let (e1, e2) = options.basis(&field);
    let (sin, cos) = g.phi.sin_cos();
    let w_vec = (e1 * cos + e2 * sin) * g.w(&field, sp);
    Ok(FullState { r: g.r_gc + larmor_vector(w_vec, field.b_hat, field.omega), v: g.v_gc + w_vec, t: g.t })
}

/// Gyro-averaged guiding-center estimate from an exact orbit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitAverage<T> {
    pub t: T,
    pub r_gc: Vec3<T>,
    pub mu: T,
}

/// Averages a uniformly sampled orbit over one gyroperiod centred on each
/// sample where the window fits.
///
/// Window ends falling between samples are linearly interpolated.
pub fn gc_from_orbit_average<T: Real>(states: &[FullState<T>], setup: &FieldSetup<T>) -> Result<Vec<OrbitAverage<T>>> {
    if states.len() < 2 {
        return Err(Error::InvalidInput("orbit average needs at least two samples".into()));
    }
    let h = states[1].t - states[0].t;
    if !(h > T::zero()) {
        return Err(Error::InvalidInput("orbit samples must advance in time".into()));
    }
    let sp = &setup.species;
    let required = T::from_usize(MIN_SAMPLES_PER_PERIOD).unwrap_or_else(T::one);
    let mut out = Vec::new();
    let last = T::from_usize(states.len() - 1).unwrap_or_else(T::zero);
    'samples: for (i, s) in states.iter().enumerate() {
        let centre = T::from_usize(i).unwrap_or_else(T::zero);
        // the window is refined once with Ω at the first-pass centre, which
        // sits within O(ε²) of the guiding center
        let mut probe = s.r;
        let mut window = (T::zero(), T::zero());
        for _ in 0..2 {
            let per_period = T::two_pi() / setup.sample(probe, s.t)?.omega / h;
            if per_period < required {
                return Err(Error::WindowTooCoarse {
                    samples_per_period: per_period.as_f64(),
                    required: MIN_SAMPLES_PER_PERIOD,
                });
            }
            let half = per_period / T::lit(2.0);
            window = (centre - half, centre + half);
            if window.0 < T::zero() || window.1 > last {
                continue 'samples;
            }
            probe = window_mean(states, window.0, window.1, |s| s.r);
        }
        let (lo, hi) = window;
        let r_mean = probe;
        let v_mean = window_mean(states, lo, hi, |s| s.v);
        let spread = window_mean(states, lo, hi, |s| {
            let dv = s.v - v_mean;
            Vec3::new(dv.norm_sq(), T::zero(), T::zero())
        })
        .x;
        let b_mag = setup.sample(r_mean, s.t)?.b_mag;
        out.push(OrbitAverage { t: s.t, r_gc: r_mean, mu: sp.m * spread / (T::lit(2.0) * b_mag) });
    }
    Ok(out)
}

/// Trapezoid mean of `f` over fractional sample indices `[lo, hi]`.
fn window_mean<T: Real>(states: &[FullState<T>], lo: T, hi: T, f: impl Fn(&FullState<T>) -> Vec3<T>) -> Vec3<T> {
    let at = |x: T| -> Vec3<T> {
        let k = x.floor().to_usize().unwrap_or(0).min(states.len() - 2);
        let frac = x - T::from_usize(k).unwrap_or_else(T::zero);
        f(&states[k]) * (T::one() - frac) + f(&states[k + 1]) * frac
    };
    let first = lo.ceil().to_usize().unwrap_or(0);
    let last = hi.floor().to_usize().unwrap_or(0);
    let half = T::lit(0.5);
    let mut acc = Vec3::zero();
    let mut x_prev = lo;
    let mut f_prev = at(lo);
    for k in first..=last {
        let x = T::from_usize(k).unwrap_or_else(T::zero);
        let fk = f(&states[k]);
        acc += (f_prev + fk) * (half * (x - x_prev));
        x_prev = x;
        f_prev = fk;
    }
    let f_hi = at(hi);
    acc += (f_prev + f_hi) * (half * (hi - x_prev));
    acc / (hi - lo)
}
