//! Exact Newton–Lorentz dynamics: the ground truth the guiding-center
//! description is checked against, plus symplectic-condition diagnostics for
//! phase-space maps.

use log::warn;

use crate::error::{Error, Result};
use crate::fields::{FieldSample, FieldSetup, Species};
use crate::real::Real;
use crate::vector::Vec3;

/// `dt·Ω` above which gyration is under-resolved.
pub const STEP_WARNING_THRESHOLD: f64 = 0.5;

/// Particle position, velocity and time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FullState<T> {
    pub r: Vec3<T>,
    pub v: Vec3<T>,
    pub t: T,
}

impl<T: Real> FullState<T> {
    pub fn new(r: Vec3<T>, v: Vec3<T>, t: T) -> Self {
        Self { r, v, t }
    }

    /// Canonical momentum `p = m v + (q/c) A`.
    pub fn canonical_momentum(&self, field: &FieldSample<T>, species: &Species<T>) -> Vec3<T> {
        self.v * species.m + field.vector_potential * (species.q / species.c)
    }

    /// `½ m |v|² + q Φ`.
    pub fn energy(&self, field: &FieldSample<T>, species: &Species<T>) -> T {
        T::lit(0.5) * species.m * self.v.norm_sq() + species.q * field.potential
    }

    pub fn is_finite(&self) -> bool {
        self.r.is_finite() && self.v.is_finite() && self.t.is_finite()
    }
}

/// `(dr/dt, dv/dt)` with `dv/dt = (q/m)(E + v×B/c)`.
#[inline]
pub fn lorentz_rhs<T: Real>(s: &FullState<T>, field: &FieldSample<T>, species: &Species<T>) -> (Vec3<T>, Vec3<T>) {
    let accel = (field.electric + s.v.cross(field.magnetic) / species.c) * (species.q / species.m);
    (s.v, accel)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Rk4,
    Boris,
}

fn step_rk4_signed<T: Real>(s: &FullState<T>, dt: T, setup: &FieldSetup<T>) -> Result<FullState<T>> {
    let sp = &setup.species;
    let half = dt / T::lit(2.0);
    let at = |r: Vec3<T>, v: Vec3<T>, t: T| -> Result<(Vec3<T>, Vec3<T>)> {
        let st = FullState::new(r, v, t);
        let f = setup.sample(r, t)?;
        Ok(lorentz_rhs(&st, &f, sp))
    };
    let (k1r, k1v) = at(s.r, s.v, s.t)?;
    let (k2r, k2v) = at(s.r + k1r * half, s.v + k1v * half, s.t + half)?;
    let (k3r, k3v) = at(s.r + k2r * half, s.v + k2v * half, s.t + half)?;
    let (k4r, k4v) = at(s.r + k3r * dt, s.v + k3v * dt, s.t + dt)?;
    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let next = FullState::new(
        s.r + (k1r + k2r * two + k3r * two + k4r) * sixth,
        s.v + (k1v + k2v * two + k3v * two + k4v) * sixth,
        s.t + dt,
    );
    if !next.is_finite() {
        return Err(Error::NonFinite("rk4 step"));
    }
    Ok(next)
}

fn check_dt<T: Real>(dt: T) -> Result<()> {
    if !(dt.is_finite() && dt > T::zero()) {
        return Err(Error::InvalidInput(format!("dt must be positive (got {dt})")));
    }
    Ok(())
}

/// Classical fourth-order Runge–Kutta step of the Newton–Lorentz equations.
pub fn step_rk4<T: Real>(s: &FullState<T>, dt: T, setup: &FieldSetup<T>) -> Result<FullState<T>> {
    check_dt(dt)?;
    step_rk4_signed(s, dt, setup)
}

/// Time-symmetric Boris step (drift–kick–drift).
///
/// Position drifts half a step, the velocity gets half an electric kick, an
/// exact-norm magnetic rotation, and another half kick, then the position
/// drifts the remaining half step. In static pure-B fields |v| is preserved
/// to roundoff.
pub fn step_boris<T: Real>(s: &FullState<T>, dt: T, setup: &FieldSetup<T>) -> Result<FullState<T>> {
    check_dt(dt)?;
    let sp = &setup.species;
    let half = dt / T::lit(2.0);
    let r_mid = s.r + s.v * half;
    let f = setup.sample(r_mid, s.t + half)?;
    let qm_half = sp.q / sp.m * half;
    let v_minus = s.v + f.electric * qm_half;
    let tvec = f.magnetic * (qm_half / sp.c);
    let svec = tvec * (T::lit(2.0) / (T::one() + tvec.norm_sq()));
    let v_prime = v_minus + v_minus.cross(tvec);
    let v_plus = v_minus + v_prime.cross(svec);
    let v_new = v_plus + f.electric * qm_half;
    let next = FullState::new(r_mid + v_new * half, v_new, s.t + dt);
    if !next.is_finite() {
        return Err(Error::NonFinite("boris step"));
    }
    Ok(next)
}

/// Fixed-step integration settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationSettings<T> {
    pub scheme: Scheme,
    pub dt: T,
    pub t_end: T,
    pub sample_stride: usize,
}

impl<T: Real> IntegrationSettings<T> {
    pub fn rk4(dt: T, t_end: T, sample_stride: usize) -> Self {
        Self { scheme: Scheme::Rk4, dt, t_end, sample_stride }
    }

    /// Number of fixed steps needed to reach `t_end` from `t0`.
    pub fn step_count(&self, t0: T) -> Result<usize> {
        check_dt(self.dt)?;
        if self.sample_stride == 0 {
            return Err(Error::InvalidInput("sample_stride must be at least 1".into()));
        }
        let span = (self.t_end - t0) / self.dt;
        if !(span.is_finite() && span > T::zero()) {
            return Err(Error::InvalidInput(format!("t_end ({}) must exceed the start time ({t0})", self.t_end)));
        }
        Ok(span.round().to_usize().unwrap_or(0).max(1))
    }
}

/// Time-ordered samples of an integrated orbit.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<S> {
    pub states: Vec<S>,
    /// Set when the step under-resolved the local gyration somewhere.
    pub step_too_large: bool,
}

impl<S> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

pub(crate) fn gyration_check<T: Real>(dt: T, omega: T, flagged: &mut bool, what: &str) {
    if !*flagged && (dt * omega).abs() > T::lit(STEP_WARNING_THRESHOLD) {
        *flagged = true;
        warn!("{what}: dt·Ω = {:.3} exceeds {STEP_WARNING_THRESHOLD}, gyration under-resolved", (dt * omega).as_f64());
    }
}

/// Integrates the exact orbit from `s0` to `settings.t_end`, recording every
/// `sample_stride`-th state plus the final one.
pub fn integrate_full<T: Real>(
    s0: &FullState<T>,
    settings: &IntegrationSettings<T>,
    setup: &FieldSetup<T>,
) -> Result<Trajectory<FullState<T>>> {
    let steps = settings.step_count(s0.t)?;
    let mut states = Vec::with_capacity(steps / settings.sample_stride + 2);
    let mut flagged = false;
    let mut s = *s0;
    states.push(s);
    for k in 1..=steps {
        let omega = setup.sample(s.r, s.t)?.omega;
        gyration_check(settings.dt, omega, &mut flagged, "integrate_full");
        s = match settings.scheme {
            Scheme::Rk4 => step_rk4_signed(&s, settings.dt, setup)?,
            Scheme::Boris => step_boris(&s, settings.dt, setup)?,
        };
        if k % settings.sample_stride == 0 || k == steps {
            states.push(s);
        }
    }
    Ok(Trajectory { states, step_too_large: flagged })
}

/// Integrates `steps` RK4 steps of signed size `dt`; negative `dt` runs backwards.
pub fn rk4_excursion<T: Real>(s0: &FullState<T>, dt: T, steps: usize, setup: &FieldSetup<T>) -> Result<FullState<T>> {
    if !(dt.is_finite() && dt != T::zero()) {
        return Err(Error::InvalidInput(format!("dt must be non-zero (got {dt})")));
    }
    let mut s = *s0;
    for _ in 0..steps {
        s = step_rk4_signed(&s, dt, setup)?;
    }
    Ok(s)
}

/// Numerical Jacobian of a phase-space map and its deviation from the symplectic condition.
#[derive(Clone, Debug, PartialEq)]
pub struct MapJacobianReport<T> {
    /// `jacobian[i][j] = ∂xᵢ'/∂xⱼ`
    pub jacobian: Vec<Vec<T>>,
    /// `max |M J Mᵀ − J|`
    pub symplectic_residual: T,
}

/// Canonical Poisson matrix `J = [[0, I], [−I, 0]]` of size `2g`.
pub fn poisson_matrix<T: Real>(dim: usize) -> Vec<Vec<T>> {
    let g = dim / 2;
    let mut j = vec![vec![T::zero(); dim]; dim];
    for i in 0..g {
        j[i][g + i] = T::one();
        j[g + i][i] = -T::one();
    }
    j
}

/// Central-difference Jacobian of `map` at `x0` and the residual `‖M J Mᵀ − J‖_max`.
///
/// Coordinates are ordered `(q₁…q_g, p₁…p_g)`.
pub fn symplectic_residual<T, F>(map: F, x0: &[T], h: T) -> Result<MapJacobianReport<T>>
where
    T: Real,
    F: Fn(&[T]) -> Result<Vec<T>>,
{
    let n = x0.len();
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidInput(format!("phase-space dimension must be even (got {n})")));
    }
    if !(h > T::zero()) {
        return Err(Error::InvalidInput(format!("jacobian step must be positive (got {h})")));
    }
    let mut jac = vec![vec![T::zero(); n]; n];
    let mut x = x0.to_vec();
    for j in 0..n {
        x[j] = x0[j] + h;
        let plus = map(&x)?;
        x[j] = x0[j] - h;
        let minus = map(&x)?;
        x[j] = x0[j];
        if plus.len() != n || minus.len() != n {
            return Err(Error::InvalidInput(format!("map must preserve dimension {n} (got {})", plus.len())));
        }
        for i in 0..n {
            jac[i][j] = (plus[i] - minus[i]) / (T::lit(2.0) * h);
        }
    }
    if jac.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("map jacobian"));
    }
    let poisson = poisson_matrix::<T>(n);
    let mut residual = T::zero();
    for a in 0..n {
        for b in 0..n {
            let mut acc = T::zero();
            for i in 0..n {
                for k in 0..n {
                    acc = acc + jac[a][i] * poisson[i][k] * jac[b][k];
                }
            }
            residual = residual.max((acc - poisson[a][b]).abs());
        }
    }
    Ok(MapJacobianReport { jacobian: jac, symplectic_residual: residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldModel;
    use std::f64::consts::TAU;

    fn uniform(eps: f64) -> FieldSetup<f64> {
        FieldSetup::new(FieldModel::UniformB { b0: 1.0 }, Species::default(), eps).unwrap()
    }

    #[test]
    fn magnetic_force_direction() {
        let setup = uniform(1.0);
        let s = FullState::new(Vec3::zero(), Vec3::new(1.0, 0.0, 0.0), 0.0);
        let f = setup.sample(s.r, 0.0).unwrap();
        let (dr, dv) = lorentz_rhs(&s, &f, &setup.species);
        assert_eq!(dr, s.v);
        assert_eq!(dv, Vec3::new(0.0, -1.0, 0.0));
    }

    #[test]
    fn pure_electric_force() {
        let setup =
            FieldSetup::new(FieldModel::CrossedEB { e0: 0.1, b0: 1.0, e_ramp: 0.0 }, Species::default(), 1.0).unwrap();
        let s = FullState::new(Vec3::zero(), Vec3::zero(), 0.0);
        let f = setup.sample(s.r, 0.0).unwrap();
        let (_, dv) = lorentz_rhs(&s, &f, &setup.species);
        assert!((dv - Vec3::new(0.1, 0.0, 0.0)).max_abs() < 1e-15);
    }

    #[test]
    fn rk4_closes_circular_orbit() {
        let setup = uniform(1.0);
        let w = 1.0;
        let s0 = FullState::new(Vec3::zero(), Vec3::new(w, 0.0, 0.0), 0.0);
        let period = TAU; // Ω = 1
        let mut s = s0;
        for _ in 0..1000 {
            s = step_rk4(&s, period / 1000.0, &setup).unwrap();
        }
        let r_l = w / 1.0;
        assert!((s.r - s0.r).norm() < 1e-8 * r_l, "closure error {}", (s.r - s0.r).norm());
    }

    #[test]
    fn rk4_is_fourth_order() {
        let setup = uniform(1.0);
        let s0 = FullState::new(Vec3::zero(), Vec3::new(1.0, 0.0, 0.3), 0.0);
        let t_end = 2.0f64;
        // analytic orbit: centre (0, -1, ·), clockwise rotation
        let exact = Vec3::new(t_end.sin(), t_end.cos() - 1.0, 0.3 * t_end);
        let err = |n: usize| {
            let dt = t_end / n as f64;
            let mut s = s0;
            for _ in 0..n {
                s = step_rk4(&s, dt, &setup).unwrap();
            }
            (s.r - exact).norm()
        };
        let ratio = err(20) / err(40);
        assert!((ratio - 16.0).abs() < 1.5, "ratio {ratio}");
    }

    #[test]
    fn boris_preserves_speed_in_static_b() {
        let setup = FieldSetup::new(FieldModel::MagneticMirror { b0: 1.0, scale_length: 1.0 }, Species::default(), 0.1)
            .unwrap();
        let mut s = FullState::new(Vec3::new(0.1f64, 0.0, 0.0), Vec3::new(0.6, 0.1, 0.5), 0.0);
        let v2 = s.v.norm_sq();
        let dt = 0.05 / 10.0;
        for _ in 0..1_000_000 {
            s = step_boris(&s, dt, &setup).unwrap();
        }
        let drift = (s.v.norm_sq() - v2).abs() / v2;
        assert!(drift < 1e-12, "relative |v|² drift {drift:e}");
    }

    #[test]
    fn rk4_energy_decay_matches_amplification_factor() {
        // RK4 on pure gyration has |R(iθ)|² = 1 − θ⁶/72 + θ⁸/576
        let setup = uniform(1.0);
        let s0 = FullState::new(Vec3::zero(), Vec3::new(1.0, 0.0, 0.0), 0.0);
        let theta: f64 = 0.05;
        let n = 100_000;
        let mut s = s0;
        for _ in 0..n {
            s = step_rk4(&s, theta, &setup).unwrap();
        }
        let per_step = 1.0 - theta.powi(6) / 72.0 + theta.powi(8) / 576.0;
        let predicted = 1.0 - per_step.powi(n);
        let measured = 1.0 - s.v.norm_sq();
        assert!((measured / predicted - 1.0).abs() < 1e-3, "{measured:e} vs {predicted:e}");
    }

    #[test]
    fn rk4_energy_conserved_when_resolved() {
        // the decay above fixes dt·Ω ≲ 0.008 for a 1e-9 budget over 1e5 steps;
        // the mirror throat has a larger Ω, so start well below that
        let setup = FieldSetup::new(FieldModel::MagneticMirror { b0: 1.0, scale_length: 1.0 }, Species::default(), 0.1)
            .unwrap();
        let s0 = FullState::new(Vec3::new(0.1f64, 0.0, 0.0), Vec3::new(0.6, 0.0, 0.5), 0.0);
        let omega0 = setup.sample(s0.r, 0.0).unwrap().omega;
        let settings = IntegrationSettings::rk4(0.005 / omega0, 500.0 / omega0, 1000);
        let traj = integrate_full(&s0, &settings, &setup).unwrap();
        let e0 = s0.v.norm_sq();
        let worst = traj.states.iter().map(|s| (s.v.norm_sq() - e0).abs() / e0).fold(0.0, f64::max);
        assert!(worst < 1e-9, "energy drift {worst:e}");
        assert!(!traj.step_too_large);
    }

    #[test]
    fn step_validation_and_warning_flag() {
        let setup = uniform(0.01);
        let s0 = FullState::new(Vec3::zero(), Vec3::new(1.0, 0.0, 0.0), 0.0);
        assert!(step_rk4(&s0, 0.0, &setup).is_err());
        assert!(step_boris(&s0, -1.0, &setup).is_err());
        let coarse = integrate_full(&s0, &IntegrationSettings::rk4(0.01, 0.05, 1), &setup).unwrap();
        assert!(coarse.step_too_large);
        assert_eq!(coarse.len(), 6);
    }

    #[test]
    fn stride_keeps_final_state() {
        let setup = uniform(1.0);
        let s0 = FullState::new(Vec3::zero(), Vec3::new(1.0, 0.0, 0.0), 0.0);
        let traj = integrate_full(&s0, &IntegrationSettings::rk4(0.01, 1.05, 10), &setup).unwrap();
        assert_eq!(traj.len(), 12);
        assert!((traj.states.last().unwrap().t - 1.05).abs() < 1e-12);
    }

    #[test]
    fn identity_map_is_symplectic() {
        let report = symplectic_residual(|x: &[f64]| Ok(x.to_vec()), &[0.3, -1.0], 1e-5).unwrap();
        assert!(report.symplectic_residual < 1e-10);
    }

    #[test]
    fn stretch_map_residual_is_one() {
        // M = diag(2, 1): M J Mᵀ = [[0, 2], [−2, 0]]
        let report = symplectic_residual(|x: &[f64]| Ok(vec![2.0 * x[0], x[1]]), &[0.4, 0.7], 1e-5).unwrap();
        assert!((report.symplectic_residual - 1.0).abs() < 1e-9);
    }

    #[test]
    fn uniform_field_flow_is_symplectic() {
        // exact time-T flow in canonical (r, p) with A = ½(−y, x, 0)
        let setup = uniform(1.0);
        let flow = |x: &[f64]| -> Result<Vec<f64>> {
            let r = Vec3::new(x[0], x[1], x[2]);
            let p = Vec3::new(x[3], x[4], x[5]);
            let f = setup.sample(r, 0.0)?;
            let v = p - f.vector_potential;
            let t: f64 = 0.7;
            let (s, c) = t.sin_cos();
            // v(t) = R(−t) v, r(t) = r + ∫ v
            let v1 = Vec3::new(v.x * c + v.y * s, -v.x * s + v.y * c, v.z);
            let dr = Vec3::new(v.x * s + v.y * (1.0 - c), -v.x * (1.0 - c) + v.y * s, v.z * t);
            let r1 = r + dr;
            let p1 = v1 + setup.sample(r1, t)?.vector_potential;
            Ok(vec![r1.x, r1.y, r1.z, p1.x, p1.y, p1.z])
        };
        let report = symplectic_residual(flow, &[0.2, -0.1, 0.3, 0.5, 0.4, 0.2], 1e-5).unwrap();
        assert!(report.symplectic_residual < 1e-9, "{}", report.symplectic_residual);
    }

    #[test]
    fn nonlinear_symplectic_map_residual_shrinks_quadratically() {
        // composition of two nonlinear shears is exactly symplectic; what
        // remains is the central-difference error
        let map = |x: &[f64]| -> Result<Vec<f64>> {
            let p = x[1] + 1.3 * x[0].sin();
            Ok(vec![x[0] + 0.8 * p.sin(), p])
        };
        let coarse = symplectic_residual(map, &[0.9, 0.4], 1e-2).unwrap().symplectic_residual;
        let fine = symplectic_residual(map, &[0.9, 0.4], 5e-3).unwrap().symplectic_residual;
        let ratio = coarse / fine;
        assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn odd_dimension_rejected() {
        assert!(symplectic_residual(|x: &[f64]| Ok(x.to_vec()), &[1.0, 2.0, 3.0], 1e-5).is_err());
    }
}
