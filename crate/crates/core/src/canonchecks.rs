//! Checks of generalized-canonical structure: Hamilton-equation and
//! finite-term constraint residuals, discrete actions and their first
//! variations.

use crate::error::{Error, Result};
use crate::fields::FieldSetup;
use crate::fullorbit::{poisson_matrix, symplectic_residual, FullState, MapJacobianReport};
use crate::gcmotion::{drift_velocity, hamiltonian_k};
use crate::gyrotransform::{to_guiding_center, GCState};
use crate::real::{unwrap_phase, Real};
use crate::vector::Vec3;

/// Phase-space variables `z` (dimension `2g′`), auxiliary variables `u`
/// (dimension `k`), a Hamiltonian and `k` finite-term constraints.
pub trait GeneralizedSystem<T: Real> {
    fn z_dim(&self) -> usize;
    fn u_dim(&self) -> usize;
    fn hamiltonian(&self, z: &[T], u: &[T], t: T) -> Result<T>;
    fn constraints(&self, z: &[T], u: &[T], t: T) -> Result<Vec<T>>;

    /// `J′ᵢⱼ`, canonical unless overridden.
    fn poisson(&self, _z: &[T], _t: T) -> Vec<Vec<T>> {
        poisson_matrix(self.z_dim())
    }
}

/// One sample `(t, z, u)` of a trajectory in a generalized system.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSample<T> {
    pub t: T,
    pub z: Vec<T>,
    pub u: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport<T> {
    pub hamilton_residual_max: T,
    pub constraint_residual_max: T,
    /// Interior samples only; entry `k` belongs to sample `k + 1`.
    pub hamilton_series: Vec<T>,
    pub constraint_series: Vec<T>,
}

/// Residuals `|żᵢ − Σⱼ J′ᵢⱼ ∂K/∂zⱼ|` and `|f_s|` along a uniformly sampled
/// trajectory; `ż` by central differences in time, `∂K/∂z` with step `h`.
pub fn verify_generalized_canonical<T: Real, S: GeneralizedSystem<T>>(
    sys: &S,
    traj: &[SystemSample<T>],
    h: T,
) -> Result<ResidualReport<T>> {
    let n = sys.z_dim();
    if n % 2 != 0 {
        return Err(Error::InvalidInput(format!("z dimension must be even (got {n})")));
    }
    if !(h > T::zero()) {
        return Err(Error::InvalidInput(format!("finite-difference step must be positive (got {h})")));
    }
    if traj.len() < 3 {
        return Err(Error::InvalidInput("need at least three samples".into()));
    }
    if traj.iter().any(|s| s.z.len() != n || s.u.len() != sys.u_dim()) {
        return Err(Error::InvalidInput("sample dimensions disagree with the system".into()));
    }
    let dt = traj[1].t - traj[0].t;
    let uniform = traj.windows(2).all(|w| ((w[1].t - w[0].t) - dt).abs() <= T::lit(1e-9) * dt.abs());
    if !(dt > T::zero()) || !uniform {
        return Err(Error::InvalidInput("trajectory must be uniformly sampled".into()));
    }

    let two = T::lit(2.0);
    let mut constraint_series = Vec::with_capacity(traj.len());
    for s in traj {
        let f = sys.constraints(&s.z, &s.u, s.t)?;
        constraint_series.push(f.iter().fold(T::zero(), |m, v| m.max(v.abs())));
    }
    let mut hamilton_series = Vec::with_capacity(traj.len() - 2);
    for k in 1..traj.len() - 1 {
        let s = &traj[k];
        let mut grad = vec![T::zero(); n];
        let mut z = s.z.clone();
        for (j, g) in grad.iter_mut().enumerate() {
            z[j] = s.z[j] + h;
            let plus = sys.hamiltonian(&z, &s.u, s.t)?;
            z[j] = s.z[j] - h;
            let minus = sys.hamiltonian(&z, &s.u, s.t)?;
            z[j] = s.z[j];
            *g = (plus - minus) / (two * h);
        }
        let j_mat = sys.poisson(&s.z, s.t);
        let mut worst = T::zero();
        for i in 0..n {
            let z_dot = (traj[k + 1].z[i] - traj[k - 1].z[i]) / (two * dt);
            let flow = (0..n).fold(T::zero(), |acc, j| acc + j_mat[i][j] * grad[j]);
            worst = worst.max((z_dot - flow).abs());
        }
        hamilton_series.push(worst);
    }
    if hamilton_series.iter().chain(&constraint_series).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("generalized canonical residual"));
    }
    let max = |v: &[T]| v.iter().fold(T::zero(), |m, &x| m.max(x));
    Ok(ResidualReport {
        hamilton_residual_max: max(&hamilton_series),
        constraint_residual_max: max(&constraint_series),
        hamilton_series,
        constraint_series,
    })
}

/// Which velocity fills the auxiliary slot `v′` of a guiding-center sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VelocityReading {
    /// `dr′/dt` from uniformly spaced samples by second-order differences.
    Kinematic,
    /// `u′b′ + v_E′ + v_D′` with `u′ = b′·(p_r′ − (q/c)A′)/m`.
    DriftForm,
}

/// Guiding-center dynamics as a generalized system with
/// `z = (r′, φ′, p_r′, p_φ′)`, `u = v′` and `f = (1/m)(p_r′ − (q/c)A′) − v′`.
#[derive(Clone, Copy, Debug)]
pub struct GyrokineticSystem<T> {
    pub setup: FieldSetup<T>,
}

impl<T: Real> GyrokineticSystem<T> {
    pub fn new(setup: FieldSetup<T>) -> Self {
        Self { setup }
    }

    fn split(z: &[T]) -> (Vec3<T>, T, Vec3<T>, T) {
        (Vec3::new(z[0], z[1], z[2]), z[3], Vec3::new(z[4], z[5], z[6]), z[7])
    }

    /// Samples of a guiding-center trajectory with the gyrophase unwrapped.
    pub fn samples(&self, states: &[GCState<T>], reading: VelocityReading) -> Result<Vec<SystemSample<T>>> {
        if states.len() < 3 {
            return Err(Error::InvalidInput("need at least three samples".into()));
        }
        let sp = &self.setup.species;
        let phases = unwrap_phase(&states.iter().map(|g| g.phi).collect::<Vec<_>>());
        let last = states.len() - 1;
        let mut out = Vec::with_capacity(states.len());
        for (k, g) in states.iter().enumerate() {
            let v = match reading {
                VelocityReading::Kinematic => {
                    let r = |i: usize| states[i].r_gc;
                    let three = T::lit(3.0);
                    let four = T::lit(4.0);
                    // second-order one-sided differences at the ends
                    if k == 0 {
                        (r(1) * four - r(0) * three - r(2)) / (states[2].t - states[0].t)
                    } else if k == last {
                        (r(last) * three - r(last - 1) * four + r(last - 2)) / (states[last].t - states[last - 2].t)
                    } else {
                        (r(k + 1) - r(k - 1)) / (states[k + 1].t - states[k - 1].t)
                    }
                }
                VelocityReading::DriftForm => {
                    let field = self.setup.sample(g.r_gc, g.t)?;
                    let kinetic = (g.p_r - field.vector_potential * (sp.q / sp.c)) / sp.m;
                    drift_velocity(&field, field.b_hat.dot(kinetic), g.mu(sp), sp)
                }
            };
            out.push(SystemSample {
                t: g.t,
                z: vec![g.r_gc.x, g.r_gc.y, g.r_gc.z, phases[k], g.p_r.x, g.p_r.y, g.p_r.z, g.p_phi],
                u: v.to_array().to_vec(),
            });
        }
        Ok(out)
    }
}

impl<T: Real> GeneralizedSystem<T> for GyrokineticSystem<T> {
    fn z_dim(&self) -> usize {
        8
    }

    fn u_dim(&self) -> usize {
        3
    }

    fn hamiltonian(&self, z: &[T], _u: &[T], t: T) -> Result<T> {
        let (r_gc, phi, p_r, p_phi) = Self::split(z);
        let field = self.setup.sample(r_gc, t)?;
        let g = GCState { r_gc, p_r, phi, p_phi, v_gc: Vec3::zero(), t };
        Ok(hamiltonian_k(&g, &field, &self.setup.species))
    }

    fn constraints(&self, z: &[T], u: &[T], t: T) -> Result<Vec<T>> {
        let (r_gc, _, p_r, _) = Self::split(z);
        let sp = &self.setup.species;
        let field = self.setup.sample(r_gc, t)?;
        let f = (p_r - field.vector_potential * (sp.q / sp.c)) / sp.m - Vec3::new(u[0], u[1], u[2]);
        Ok(f.to_array().to_vec())
    }
}

/// One node of a discretized path: time and flat coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PathNode<T> {
    pub t: T,
    pub x: Vec<T>,
}

/// Action of one interval of a discretized path.
pub trait DiscreteLagrangian<T: Real> {
    fn node_dim(&self) -> usize;
    fn interval(&self, a: &PathNode<T>, b: &PathNode<T>) -> Result<T>;
}

/// Sum of interval actions.
pub fn action<T: Real, L: DiscreteLagrangian<T>>(lagrangian: &L, path: &[PathNode<T>]) -> Result<T> {
    path.windows(2).try_fold(T::zero(), |acc, w| Ok(acc + lagrangian.interval(&w[0], &w[1])?))
}

/// Trapezoid discretization of
/// `L̂ = ṙ·p − H − (ṙ − v)·(p − m v − (q/c)A)` with node `(r, p, v)`.
#[derive(Clone, Copy, Debug)]
pub struct FullLagrangian<T> {
    pub setup: FieldSetup<T>,
}

impl<T: Real> FullLagrangian<T> {
    /// Nodes `(r, p, v)` with `p = m v + (q/c) A`.
    pub fn path(&self, states: &[FullState<T>]) -> Result<Vec<PathNode<T>>> {
        let sp = &self.setup.species;
        states
            .iter()
            .map(|s| {
                let p = s.canonical_momentum(&self.setup.sample(s.r, s.t)?, sp);
                Ok(PathNode { t: s.t, x: [s.r.to_array(), p.to_array(), s.v.to_array()].concat() })
            })
            .collect()
    }

    /// `(H, p − m v − (q/c)A)` at a node.
    fn node_terms(&self, n: &PathNode<T>) -> Result<(T, Vec3<T>)> {
        let sp = &self.setup.species;
        let (r, p, v) = (vec_at(&n.x, 0), vec_at(&n.x, 3), vec_at(&n.x, 6));
        let field = self.setup.sample(r, n.t)?;
        let kinetic = p - field.vector_potential * (sp.q / sp.c);
        let h = kinetic.norm_sq() / (T::lit(2.0) * sp.m) + sp.q * field.potential;
        Ok((h, kinetic - v * sp.m))
    }
}

impl<T: Real> DiscreteLagrangian<T> for FullLagrangian<T> {
    fn node_dim(&self) -> usize {
        9
    }

    fn interval(&self, a: &PathNode<T>, b: &PathNode<T>) -> Result<T> {
        let dt = b.t - a.t;
        let half = T::lit(0.5);
        let r_dot = (vec_at(&b.x, 0) - vec_at(&a.x, 0)) / dt;
        let (h_a, c_a) = self.node_terms(a)?;
        let (h_b, c_b) = self.node_terms(b)?;
        let symplectic = r_dot.dot(vec_at(&a.x, 3) + vec_at(&b.x, 3)) * half;
        let constraint = ((r_dot - vec_at(&a.x, 6)).dot(c_a) + (r_dot - vec_at(&b.x, 6)).dot(c_b)) * half;
        Ok(dt * (symplectic - (h_a + h_b) * half - constraint))
    }
}

/// Trapezoid discretization of
/// `L′ = ṙ′·p_r′ + φ̇′p_φ′ − K − (ṙ′ − v′)·(p_r′ − m v′ − (q/c)A′)`
/// with node `(r′, φ′, p_r′, p_φ′, v′)`.
#[derive(Clone, Copy, Debug)]
pub struct GcLagrangian<T> {
    pub setup: FieldSetup<T>,
}

impl<T: Real> GcLagrangian<T> {
    /// Nodes from guiding-center states, with the gyrophase unwrapped.
    pub fn path(&self, states: &[GCState<T>]) -> Vec<PathNode<T>> {
        let phases = unwrap_phase(&states.iter().map(|g| g.phi).collect::<Vec<_>>());
        states
            .iter()
            .zip(phases)
            .map(|(g, phi)| PathNode {
                t: g.t,
                x: [g.r_gc.to_array().as_slice(), &[phi], &g.p_r.to_array(), &[g.p_phi], &g.v_gc.to_array()].concat(),
            })
            .collect()
    }

    fn node_terms(&self, n: &PathNode<T>) -> Result<(T, Vec3<T>)> {
        let sp = &self.setup.species;
        let g = GCState {
            r_gc: vec_at(&n.x, 0),
            phi: n.x[3],
            p_r: vec_at(&n.x, 4),
            p_phi: n.x[7],
            v_gc: vec_at(&n.x, 8),
            t: n.t,
        };
        let field = self.setup.sample(g.r_gc, n.t)?;
        let mismatch = g.p_r - g.v_gc * sp.m - field.vector_potential * (sp.q / sp.c);
        Ok((hamiltonian_k(&g, &field, sp), mismatch))
    }
}

impl<T: Real> DiscreteLagrangian<T> for GcLagrangian<T> {
    fn node_dim(&self) -> usize {
        11
    }

    fn interval(&self, a: &PathNode<T>, b: &PathNode<T>) -> Result<T> {
        let dt = b.t - a.t;
        let half = T::lit(0.5);
        let r_dot = (vec_at(&b.x, 0) - vec_at(&a.x, 0)) / dt;
        let phi_dot = (b.x[3] - a.x[3]) / dt;
        let (k_a, c_a) = self.node_terms(a)?;
        let (k_b, c_b) = self.node_terms(b)?;
        let symplectic = (r_dot.dot(vec_at(&a.x, 4) + vec_at(&b.x, 4)) + phi_dot * (a.x[7] + b.x[7])) * half;
        let constraint = ((r_dot - vec_at(&a.x, 8)).dot(c_a) + (r_dot - vec_at(&b.x, 8)).dot(c_b)) * half;
        Ok(dt * (symplectic - (k_a + k_b) * half - constraint))
    }
}

/// Discrete action of a full orbit under `L̂`.
pub fn action_full<T: Real>(states: &[FullState<T>], setup: &FieldSetup<T>) -> Result<T> {
    let lagrangian = FullLagrangian { setup: *setup };
    action(&lagrangian, &lagrangian.path(states)?)
}

/// Discrete action of a guiding-center trajectory under `L′`.
pub fn action_gc<T: Real>(states: &[GCState<T>], setup: &FieldSetup<T>) -> Result<T> {
    let lagrangian = GcLagrangian { setup: *setup };
    action(&lagrangian, &lagrangian.path(states))
}

fn vec_at<T: Real>(x: &[T], offset: usize) -> Vec3<T> {
    Vec3::new(x[offset], x[offset + 1], x[offset + 2])
}

/// Variation of one coordinate, weighted per node; zero at both path ends.
#[derive(Clone, Debug, PartialEq)]
pub struct Perturbation<T> {
    pub component: usize,
    /// `(node index, weight)`, ascending and interior only.
    pub weights: Vec<(usize, T)>,
}

/// Hat functions of physical half-width `width` centred at `centres`, one
/// per centre and component.
pub fn hat_basis<T: Real>(times: &[T], centres: &[T], width: T, components: usize) -> Result<Vec<Perturbation<T>>> {
    if times.len() < 3 {
        return Err(Error::InvalidInput("path needs at least three nodes".into()));
    }
    if !(width > T::zero()) {
        return Err(Error::InvalidInput(format!("hat width must be positive (got {width})")));
    }
    let last = times.len() - 1;
    let mut basis = Vec::with_capacity(centres.len() * components);
    for &centre in centres {
        if centre - width < times[0] || centre + width > times[last] {
            return Err(Error::InvalidInput(format!("hat at {centre} does not fit inside the path")));
        }
        let weights: Vec<(usize, T)> = times
            .iter()
            .enumerate()
            .filter(|&(k, _)| k > 0 && k < last)
            .filter_map(|(k, &t)| {
                let w = T::one() - (t - centre).abs() / width;
                (w > T::lit(1e-12)).then_some((k, w))
            })
            .collect();
        if weights.is_empty() {
            return Err(Error::InvalidInput(format!("hat at {centre} covers no interior node")));
        }
        basis.extend((0..components).map(|component| Perturbation { component, weights: weights.clone() }));
    }
    Ok(basis)
}

/// First-variation residual `max_η |S(x + δη) − S(x − δη)| / 2δ`.
///
/// Only intervals touched by `η` are evaluated, and their differences are
/// summed interval by interval.
pub fn el_residual<T: Real, L: DiscreteLagrangian<T>>(
    lagrangian: &L,
    path: &[PathNode<T>],
    basis: &[Perturbation<T>],
    delta: T,
) -> Result<T> {
    if !(delta > T::zero()) {
        return Err(Error::InvalidInput(format!("delta must be positive (got {delta})")));
    }
    let last = path.len().saturating_sub(1);
    let mut worst = T::zero();
    for eta in basis {
        if eta.component >= lagrangian.node_dim() {
            return Err(Error::InvalidInput(format!("component {} out of range", eta.component)));
        }
        if eta.weights.iter().any(|&(k, _)| k == 0 || k >= last) {
            return Err(Error::InvalidInput("perturbations must vanish at the path ends".into()));
        }
        let (Some(&(first, _)), Some(&(end, _))) = (eta.weights.first(), eta.weights.last()) else {
            continue;
        };
        let shifted = |sign: T| -> Vec<PathNode<T>> {
            let mut local: Vec<PathNode<T>> = path[first - 1..=end + 1].to_vec();
            for &(k, w) in &eta.weights {
                local[k + 1 - first].x[eta.component] = path[k].x[eta.component] + sign * delta * w;
            }
            local
        };
        let plus = shifted(T::one());
        let minus = shifted(-T::one());
        let mut diff = T::zero();
        for i in 0..plus.len() - 1 {
            diff = diff
                + (lagrangian.interval(&plus[i], &plus[i + 1])? - lagrangian.interval(&minus[i], &minus[i + 1])?);
        }
        let residual = (diff / (T::lit(2.0) * delta)).abs();
        if !residual.is_finite() {
            return Err(Error::NonFinite("first variation"));
        }
        worst = worst.max(residual);
    }
    Ok(worst)
}

/// Symplectic residual of the truncated map `(r, p) → (r′, p_r′)` at `(r, p)`.
pub fn truncated_map_residual<T: Real>(
    setup: &FieldSetup<T>,
    r: Vec3<T>,
    p: Vec3<T>,
    t: T,
    h: T,
) -> Result<MapJacobianReport<T>> {
    let sp = setup.species;
    let map = |x: &[T]| -> Result<Vec<T>> {
        let r = vec_at(x, 0);
        let field = setup.sample(r, t)?;
        let v = (vec_at(x, 3) - field.vector_potential * (sp.q / sp.c)) / sp.m;
        let g = to_guiding_center(&FullState::new(r, v, t), setup)?;
        Ok([g.r_gc.to_array(), g.p_r.to_array()].concat())
    };
    symplectic_residual(map, &[r.to_array(), p.to_array()].concat(), h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{FieldModel, Species};
    use crate::fullorbit::{integrate_full, IntegrationSettings};
    use crate::gcmotion::integrate_gc;

    struct Oscillator;

    impl GeneralizedSystem<f64> for Oscillator {
        fn z_dim(&self) -> usize {
            2
        }
        fn u_dim(&self) -> usize {
            0
        }
        fn hamiltonian(&self, z: &[f64], _u: &[f64], _t: f64) -> Result<f64> {
            Ok(0.5 * (z[0] * z[0] + z[1] * z[1]))
        }
        fn constraints(&self, _z: &[f64], _u: &[f64], _t: f64) -> Result<Vec<f64>> {
            Ok(Vec::new())
        }
    }

    fn oscillator_path(dt: f64, n: usize) -> Vec<SystemSample<f64>> {
        (0..=n)
            .map(|k| {
                let t = k as f64 * dt;
                SystemSample { t, z: vec![t.cos(), -t.sin()], u: Vec::new() }
            })
            .collect()
    }

    fn mirror(eps: f64) -> FieldSetup<f64> {
        FieldSetup::new(FieldModel::MagneticMirror { b0: 1.0, scale_length: 1.0 }, Species::default(), eps).unwrap()
    }

    #[test]
    fn oscillator_residual_is_second_order() {
        let coarse = verify_generalized_canonical(&Oscillator, &oscillator_path(0.02, 100), 1e-5).unwrap();
        let fine = verify_generalized_canonical(&Oscillator, &oscillator_path(0.01, 200), 1e-5).unwrap();
        assert!(coarse.hamilton_residual_max < 1e-4);
        let ratio = coarse.hamilton_residual_max / fine.hamilton_residual_max;
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
        assert_eq!(coarse.constraint_residual_max, 0.0);
    }

    #[test]
    fn corrupted_momentum_is_detected() {
        let clean = oscillator_path(0.01, 200);
        let corrupted: Vec<_> =
            clean.iter().map(|s| SystemSample { z: vec![s.z[0], 1.01 * s.z[1]], ..s.clone() }).collect();
        let a = verify_generalized_canonical(&Oscillator, &clean, 1e-5).unwrap().hamilton_residual_max;
        let b = verify_generalized_canonical(&Oscillator, &corrupted, 1e-5).unwrap().hamilton_residual_max;
        assert!(b > 100.0 * a, "{a:e} -> {b:e}");
    }

    #[test]
    fn non_uniform_sampling_rejected() {
        let mut path = oscillator_path(0.01, 10);
        path[4].t += 1e-3;
        assert!(verify_generalized_canonical(&Oscillator, &path, 1e-5).is_err());
    }

    #[test]
    fn drift_form_constraint_matches_recorded_residual() {
        let s = mirror(0.05);
        let g0 = GCState::from_drift_variables(Vec3::new(0.1, 0.0, 0.2), 0.4, 0.01, 0.0, 0.0, &s).unwrap();
        let omega = s.sample(g0.r_gc, 0.0).unwrap().omega;
        let traj = integrate_gc(&g0, &IntegrationSettings::rk4(0.2 / omega, 2.0, 1), &s).unwrap();
        let sys = GyrokineticSystem::new(s);
        let samples = sys.samples(&traj.states, VelocityReading::DriftForm).unwrap();
        let report = verify_generalized_canonical(&sys, &samples, 1e-6).unwrap();
        for (got, recorded) in report.constraint_series.iter().zip(&traj.constraint_residual) {
            assert!((got - recorded.max_abs()).abs() < 1e-12, "{got:e} vs {:e}", recorded.max_abs());
        }
    }

    #[test]
    fn free_particle_line_is_extremal() {
        // motion along a uniform field feels no force
        let s = FieldSetup::new(FieldModel::UniformB { b0: 1.0 }, Species::default(), 1.0).unwrap();
        let dt = 1e-3;
        let states: Vec<_> = (0..=200)
            .map(|k| FullState::new(Vec3::new(0.0, 0.0, 0.7 * k as f64 * dt), Vec3::new(0.0, 0.0, 0.7), k as f64 * dt))
            .collect();
        let lag = FullLagrangian { setup: s };
        let path = lag.path(&states).unwrap();
        let times: Vec<_> = path.iter().map(|n| n.t).collect();
        let basis = hat_basis(&times, &[0.1], 0.05, 9).unwrap();
        let res = el_residual(&lag, &path, &basis, 1e-4).unwrap();
        assert!(res < 1e-10, "{res:e}");
    }

    #[test]
    fn hat_basis_validation() {
        let times: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        assert!(hat_basis(&times, &[0.05], 0.1, 1).is_err());
        let basis = hat_basis(&times, &[0.5], 0.2, 2).unwrap();
        assert_eq!(basis.len(), 2);
        assert_eq!(basis[0].weights.len(), 3);
        assert!((basis[0].weights[1].1 - 1.0).abs() < 1e-12);
    }

    fn full_el(dt: f64) -> f64 {
        let s = mirror(0.1);
        let s0 = FullState::new(Vec3::new(0.1, 0.0, 0.1), Vec3::new(0.5, 0.0, 0.4), 0.0);
        let traj = integrate_full(&s0, &IntegrationSettings::rk4(dt, 1.0, 1), &s).unwrap();
        let lag = FullLagrangian { setup: s };
        let path = lag.path(&traj.states).unwrap();
        let times: Vec<_> = path.iter().map(|n| n.t).collect();
        let basis = hat_basis(&times, &[0.3, 0.5, 0.7], 0.1, 9).unwrap();
        el_residual(&lag, &path, &basis, 1e-5).unwrap()
    }

    #[test]
    fn full_orbit_residual_converges_at_second_order() {
        let ratio = full_el(0.008) / full_el(0.004);
        assert!((ratio - 4.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn truncated_map_is_not_symplectic() {
        let s = mirror(0.1);
        let r = Vec3::new(0.1, 0.05, 0.2);
        let v = Vec3::new(0.4, -0.2, 0.3);
        let p = v + s.sample(r, 0.0).unwrap().vector_potential;
        let report = truncated_map_residual(&s, r, p, 0.0, 1e-6).unwrap();
        assert!(report.symplectic_residual > 1e-2, "{}", report.symplectic_residual);
    }
}
