//! Analytic electromagnetic field models.
//!
//! Every model returns O(1) *reference* fields in units of its scale length.
//! [`sample`] applies the ordering parameter uniformly: physical `B`, `E`,
//! `A` and `Φ` (and all their derivatives) are the reference values divided
//! by `eps`. Downstream dynamics therefore use ε-free expressions in the
//! physical fields.

use crate::error::{Error, Result};
use crate::real::Real;
use crate::vector::{Tensor3, Vec3};

/// Below this reference |B| the gyrokinetic description is undefined.
pub const FIELD_NULL_THRESHOLD: f64 = 1e-10;

/// Mass, charge and speed of light in normalized Gaussian units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Species<T> {
    pub m: T,
    pub q: T,
    pub c: T,
}

impl<T: Real> Default for Species<T> {
    fn default() -> Self {
        Self { m: T::one(), q: T::one(), c: T::one() }
    }
}

impl<T: Real> Species<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("m", self.m), ("q", self.q), ("c", self.c)] {
            if !(value.is_finite() && value > T::zero()) {
                return Err(Error::InvalidInput(format!("species.{name} must be positive and finite (got {value})")));
            }
        }
        Ok(())
    }

    /// `q/(m c)`, the factor turning |B| into a gyrofrequency.
    #[inline]
    pub fn gyro_factor(&self) -> T {
        self.q / (self.m * self.c)
    }
}

/// Analytic field configurations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FieldModel<T> {
    /// `B = b0 ẑ`, `A = ½ b0 (−y, x, 0)`.
    UniformB { b0: T },
    /// `B = b0 (1 + x/L) ẑ`, `A = b0 (x + x²/2L) ŷ`.
    GradBSlab { b0: T, scale_length: T },
    /// Paraxial mirror `B_z = b0 (1 + z²/L²)`, `B_⊥ = −b0 z r_⊥/L²`.
    MagneticMirror { b0: T, scale_length: T },
    /// Axial field plus a poloidal field from uniform axial current,
    /// `B = (−bθ y/L, bθ x/L, bz)`.
    ScrewPinch { bz: T, b_theta: T, scale_length: T },
    /// Arnold–Beltrami–Childress field; Beltrami, so `A = B`.
    AbcFlow { a: T, b: T, c: T },
    /// Uniform `B = b0 ẑ` and `E = (e0 + e_ramp t) x̂` from `Φ = −(e0 + e_ramp t) x`.
    CrossedEB { e0: T, b0: T, e_ramp: T },
}

/// Reference (unscaled) potentials, fields and their first derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceFields<T> {
    pub magnetic: Vec3<T>,
    pub grad_magnetic: Tensor3<T>,
    pub vector_potential: Vec3<T>,
    pub grad_vector_potential: Tensor3<T>,
    pub potential: T,
    pub grad_potential: Vec3<T>,
    pub electric: Vec3<T>,
    pub grad_electric: Tensor3<T>,
    pub vector_potential_rate: Vec3<T>,
}

impl<T: Real> ReferenceFields<T> {
    fn magnetostatic(
        magnetic: Vec3<T>,
        grad_magnetic: Tensor3<T>,
        vector_potential: Vec3<T>,
        grad_vector_potential: Tensor3<T>,
    ) -> Self {
        Self {
            magnetic,
            grad_magnetic,
            vector_potential,
            grad_vector_potential,
            potential: T::zero(),
            grad_potential: Vec3::zero(),
            electric: Vec3::zero(),
            grad_electric: Tensor3::zero(),
            vector_potential_rate: Vec3::zero(),
        }
    }

    fn scaled(&self, s: T) -> Self {
        Self {
            magnetic: self.magnetic * s,
            grad_magnetic: self.grad_magnetic.scale(s),
            vector_potential: self.vector_potential * s,
            grad_vector_potential: self.grad_vector_potential.scale(s),
            potential: self.potential * s,
            grad_potential: self.grad_potential * s,
            electric: self.electric * s,
            grad_electric: self.grad_electric.scale(s),
            vector_potential_rate: self.vector_potential_rate * s,
        }
    }
}

/// Symmetric gauge `A = ½ b0 (−y, x, 0)` of a uniform axial field and its gradient.
fn symmetric_gauge<T: Real>(b0: T, r: Vec3<T>) -> (Vec3<T>, Tensor3<T>) {
    let half = b0 / T::lit(2.0);
    let z = T::zero();
    (Vec3::new(-half * r.y, half * r.x, z), Tensor3::from_rows([[z, half, z], [-half, z, z], [z, z, z]]))
}

impl<T: Real> FieldModel<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Self::UniformB { .. } => "uniform_b",
            Self::GradBSlab { .. } => "grad_b_slab",
            Self::MagneticMirror { .. } => "magnetic_mirror",
            Self::ScrewPinch { .. } => "screw_pinch",
            Self::AbcFlow { .. } => "abc_flow",
            Self::CrossedEB { .. } => "crossed_eb",
        }
    }

    /// Characteristic length `L` of the model.
    pub fn scale_length(&self) -> T {
        match *self {
            Self::GradBSlab { scale_length, .. }
            | Self::MagneticMirror { scale_length, .. }
            | Self::ScrewPinch { scale_length, .. } => scale_length,
            _ => T::one(),
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(*self, Self::CrossedEB { e_ramp, .. } if e_ramp != T::zero())
    }

    pub fn validate(&self) -> Result<()> {
        let params: Vec<(&str, T)> = match *self {
            Self::UniformB { b0 } => vec![("b0", b0)],
            Self::GradBSlab { b0, scale_length } | Self::MagneticMirror { b0, scale_length } => {
                vec![("b0", b0), ("scale_length", scale_length)]
            }
            Self::ScrewPinch { bz, b_theta, scale_length } => {
                vec![("bz", bz), ("b_theta", b_theta), ("scale_length", scale_length)]
            }
            Self::AbcFlow { a, b, c } => vec![("a", a), ("b", b), ("c", c)],
            Self::CrossedEB { e0, b0, e_ramp } => vec![("e0", e0), ("b0", b0), ("e_ramp", e_ramp)],
        };
        if let Some((name, value)) = params.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("field.{name} must be finite (got {value})")));
        }
        if !(self.scale_length() > T::zero()) {
            return Err(Error::InvalidInput(format!(
                "field.scale_length must be positive (got {})",
                self.scale_length()
            )));
        }
        Ok(())
    }

    /// Reference fields at `(r, t)`; no ε scaling and no null check.
    pub fn reference(&self, r: Vec3<T>, t: T) -> ReferenceFields<T> {
        let z0 = T::zero();
        let two = T::lit(2.0);
        match *self {
            Self::UniformB { b0 } => {
                let (a, grad_a) = symmetric_gauge(b0, r);
                ReferenceFields::magnetostatic(Vec3::new(z0, z0, b0), Tensor3::zero(), a, grad_a)
            }
            Self::GradBSlab { b0, scale_length: l } => {
                let bz = b0 * (T::one() + r.x / l);
                let b = Vec3::new(z0, z0, bz);
                let grad_b = Tensor3::from_rows([[z0, z0, b0 / l], [z0; 3], [z0; 3]]);
                let a = Vec3::new(z0, b0 * (r.x + r.x * r.x / (two * l)), z0);
                let grad_a = Tensor3::from_rows([[z0, bz, z0], [z0; 3], [z0; 3]]);
                ReferenceFields::magnetostatic(b, grad_b, a, grad_a)
            }
            Self::MagneticMirror { b0, scale_length: l } => {
                let l2 = l * l;
                let g = T::one() + r.z * r.z / l2;
                let k = b0 / l2;
                let b = Vec3::new(-k * r.x * r.z, -k * r.y * r.z, b0 * g);
                let grad_b =
                    Tensor3::from_rows([[-k * r.z, z0, z0], [z0, -k * r.z, z0], [-k * r.x, -k * r.y, two * k * r.z]]);
                let half = b0 * g / two;
                let a = Vec3::new(-half * r.y, half * r.x, z0);
                let grad_a = Tensor3::from_rows([[z0, half, z0], [-half, z0, z0], [-k * r.y * r.z, k * r.x * r.z, z0]]);
                ReferenceFields::magnetostatic(b, grad_b, a, grad_a)
            }
            Self::ScrewPinch { bz, b_theta, scale_length: l } => {
                let k = b_theta / l;
                let b = Vec3::new(-k * r.y, k * r.x, bz);
                let grad_b = Tensor3::from_rows([[z0, k, z0], [-k, z0, z0], [z0; 3]]);
                let half = bz / two;
                let a = Vec3::new(-half * r.y, half * r.x, -k * (r.x * r.x + r.y * r.y) / two);
                let grad_a = Tensor3::from_rows([[z0, half, -k * r.x], [-half, z0, -k * r.y], [z0; 3]]);
                ReferenceFields::magnetostatic(b, grad_b, a, grad_a)
            }
            Self::AbcFlow { a, b, c } => {
                let (sx, cx) = r.x.sin_cos();
                let (sy, cy) = r.y.sin_cos();
                let (sz, cz) = r.z.sin_cos();
                let field = Vec3::new(a * sz + c * cy, b * sx + a * cz, c * sy + b * cx);
                let grad = Tensor3::from_rows([[z0, b * cx, -b * sx], [-c * sy, z0, c * cy], [a * cz, -a * sz, z0]]);
                ReferenceFields::magnetostatic(field, grad, field, grad)
            }
            Self::CrossedEB { e0, b0, e_ramp } => {
                let (a, grad_a) = symmetric_gauge(b0, r);
                let e = e0 + e_ramp * t;
                ReferenceFields {
                    magnetic: Vec3::new(z0, z0, b0),
                    grad_magnetic: Tensor3::zero(),
                    vector_potential: a,
                    grad_vector_potential: grad_a,
                    potential: -e * r.x,
                    grad_potential: Vec3::new(-e, z0, z0),
                    electric: Vec3::new(e, z0, z0),
                    grad_electric: Tensor3::zero(),
                    vector_potential_rate: Vec3::zero(),
                }
            }
        }
    }

    /// A box `(lo, hi)` of positions representative of the model, used for seeded sampling.
    pub fn sampling_box(&self) -> (Vec3<T>, Vec3<T>) {
        let l = self.scale_length();
        let half = T::lit(0.5) * l;
        match self {
            Self::AbcFlow { .. } => (Vec3::zero(), Vec3::new(T::two_pi(), T::two_pi(), T::two_pi())),
            Self::ScrewPinch { .. } => (Vec3::new(half, -half, -l), Vec3::new(T::lit(1.5) * l, half, l)),
            Self::GradBSlab { .. } => (Vec3::new(-half, -l, -l), Vec3::new(half, l, l)),
            _ => (Vec3::new(-half, -half, -half), Vec3::new(half, half, half)),
        }
    }
}

/// All local field quantities at one point, in physical (ε-scaled) units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample<T> {
    pub magnetic: Vec3<T>,
    pub electric: Vec3<T>,
    pub vector_potential: Vec3<T>,
    pub potential: T,
    pub b_hat: Vec3<T>,
    pub b_mag: T,
    pub grad_b_mag: Vec3<T>,
    /// `∂ᵢBⱼ`
    pub grad_magnetic: Tensor3<T>,
    /// `∂ᵢbⱼ`
    pub grad_b_hat: Tensor3<T>,
    /// `∂ᵢAⱼ`
    pub grad_vector_potential: Tensor3<T>,
    pub grad_potential: Vec3<T>,
    /// E×B drift `c E×B/|B|²`.
    pub v_e: Vec3<T>,
    /// `∂ᵢ(v_E)ⱼ`
    pub grad_v_e: Tensor3<T>,
    pub vector_potential_rate: Vec3<T>,
    pub omega: T,
    pub e1: Vec3<T>,
    pub e2: Vec3<T>,
}

impl<T: Real> FieldSample<T> {
    /// `∇Ω = (q/mc) ∇|B|`.
    pub fn grad_omega(&self, species: &Species<T>) -> Vec3<T> {
        self.grad_b_mag * species.gyro_factor()
    }

    fn is_finite(&self) -> bool {
        self.magnetic.is_finite()
            && self.electric.is_finite()
            && self.vector_potential.is_finite()
            && self.potential.is_finite()
            && self.grad_magnetic.is_finite()
            && self.grad_vector_potential.is_finite()
            && self.grad_potential.is_finite()
            && self.grad_v_e.is_finite()
            && self.omega.is_finite()
            && self.e1.is_finite()
            && self.e2.is_finite()
    }
}

/// Field model, species and ordering parameter bundled for sampling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSetup<T> {
    pub model: FieldModel<T>,
    pub species: Species<T>,
    pub eps: T,
}

impl<T: Real> FieldSetup<T> {
    pub fn new(model: FieldModel<T>, species: Species<T>, eps: T) -> Result<Self> {
        model.validate()?;
        species.validate()?;
        if !(eps.is_finite() && eps > T::zero()) {
            return Err(Error::InvalidInput(format!("eps must be positive (got {eps})")));
        }
        Ok(Self { model, species, eps })
    }

    #[inline]
    pub fn sample(&self, r: Vec3<T>, t: T) -> Result<FieldSample<T>> {
        sample(&self.model, &self.species, r, t, self.eps)
    }

    pub fn with_eps(&self, eps: T) -> Self {
        Self { eps, ..*self }
    }

    pub fn scale_length(&self) -> T {
        self.model.scale_length()
    }
}

/// Samples `model` at `(r, t)` with the physical `1/eps` scaling applied.
pub fn sample<T: Real>(
    model: &FieldModel<T>,
    species: &Species<T>,
    r: Vec3<T>,
    t: T,
    eps: T,
) -> Result<FieldSample<T>> {
    if !r.is_finite() || !t.is_finite() {
        return Err(Error::NonFinite("sample position"));
    }
    let reference = model.reference(r, t);
    let b_ref = reference.magnetic.norm();
    if !b_ref.is_finite() {
        return Err(Error::NonFinite("magnetic field"));
    }
    if b_ref < T::lit(FIELD_NULL_THRESHOLD) {
        return Err(Error::FieldNull {
            b_mag: b_ref.as_f64(),
            threshold: FIELD_NULL_THRESHOLD,
            position: r.to_array().map(Real::as_f64),
        });
    }
    let f = reference.scaled(eps.recip());

    let b_mag = f.magnetic.norm();
    let b_hat = f.magnetic / b_mag;
    let grad_b_mag = f.grad_magnetic.gradient_dot(b_hat);
    let mut grad_b_hat = Tensor3::zero();
    for i in 0..3 {
        let d = (f.grad_magnetic.derivative(i) - b_hat * grad_b_mag[i]) / b_mag;
        grad_b_hat.rows[i] = d.to_array();
    }

    let c = species.c;
    let b_sq = b_mag * b_mag;
    let e_cross_b = f.electric.cross(f.magnetic);
    let v_e = e_cross_b * (c / b_sq);
    let mut grad_v_e = Tensor3::zero();
    for i in 0..3 {
        let de = f.grad_electric.derivative(i);
        let db = f.grad_magnetic.derivative(i);
        let d = (de.cross(f.magnetic) + f.electric.cross(db)) * (c / b_sq)
            - e_cross_b * (T::lit(2.0) * c * f.magnetic.dot(db) / (b_sq * b_sq));
        grad_v_e.rows[i] = d.to_array();
    }

    let (e1, e2) = frame(b_hat);
    let out = FieldSample {
        magnetic: f.magnetic,
        electric: f.electric,
        vector_potential: f.vector_potential,
        potential: f.potential,
        b_hat,
        b_mag,
        grad_b_mag,
        grad_magnetic: f.grad_magnetic,
        grad_b_hat,
        grad_vector_potential: f.grad_vector_potential,
        grad_potential: f.grad_potential,
        v_e,
        grad_v_e,
        vector_potential_rate: f.vector_potential_rate,
        omega: species.gyro_factor() * b_mag,
        e1,
        e2,
    };
    if !out.is_finite() {
        return Err(Error::NonFinite("field sample"));
    }
    Ok(out)
}

/// Perpendicular frame `(e1, e2)` with `e1 × e2 = b`.
///
/// `e1` is the normalized rejection of `ẑ` from `b`; when `b` is within
/// 1e-6 of `±ẑ` the reference axis switches to `x̂`.
pub fn frame<T: Real>(b: Vec3<T>) -> (Vec3<T>, Vec3<T>) {
    debug_assert!((b.norm() - T::one()).abs() < T::lit(1e-6), "frame requires a unit vector");
    let reference = if b.z.abs() > T::one() - T::lit(1e-6) { Vec3::unit_x() } else { Vec3::unit_z() };
    let e1 = (reference - b * reference.dot(b)).normalized();
    let e2 = b.cross(e1);
    (e1, e2)
}

/// Worst finite-difference mismatch of `B = ∇×A` and `E = −∇Φ − (1/c)∂ₜA`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConsistencyReport<T> {
    pub step: T,
    pub curl_residual: T,
    pub electric_residual: T,
}

impl<T: Real> ConsistencyReport<T> {
    pub fn max_residual(&self) -> T {
        self.curl_residual.max(self.electric_residual)
    }
}

/// Residual threshold for [`verify_model`] at the check step `1e-4·L`.
pub const CONSISTENCY_LIMIT: f64 = 1e-4;

fn residuals_at<T: Real>(model: &FieldModel<T>, c: T, points: &[Vec3<T>], t: T, h: T) -> ConsistencyReport<T> {
    let two_h = T::lit(2.0) * h;
    let mut curl_residual = T::zero();
    let mut electric_residual = T::zero();
    for &r in points {
        let exact = model.reference(r, t);
        // d_a[i] = ∂ᵢA, phi_grad[i] = ∂ᵢΦ
        let mut d_a = [Vec3::zero(); 3];
        let mut phi_grad = [T::zero(); 3];
        for (i, d) in d_a.iter_mut().enumerate() {
            let step = Vec3::axis(i) * h;
            let plus = model.reference(r + step, t);
            let minus = model.reference(r - step, t);
            *d = (plus.vector_potential - minus.vector_potential) / two_h;
            phi_grad[i] = (plus.potential - minus.potential) / two_h;
        }
        let d_phi = Vec3::from_array(phi_grad);
        let curl = Vec3::new(d_a[1].z - d_a[2].y, d_a[2].x - d_a[0].z, d_a[0].y - d_a[1].x);
        let da_dt = (model.reference(r, t + h).vector_potential - model.reference(r, t - h).vector_potential) / two_h;
        curl_residual = curl_residual.max((curl - exact.magnetic).max_abs());
        electric_residual = electric_residual.max((exact.electric + d_phi + da_dt / c).max_abs());
    }
    ConsistencyReport { step: h, curl_residual, electric_residual }
}

/// Checks the analytic potentials against the analytic fields by central differences.
///
/// Returns the report at step `h`; fails with `InconsistentModel` when the
/// residual at the reference step `1e-4·L` exceeds [`CONSISTENCY_LIMIT`].
pub fn verify_model<T: Real>(
    model: &FieldModel<T>,
    species: &Species<T>,
    points: &[Vec3<T>],
    t: T,
    h: T,
) -> Result<ConsistencyReport<T>> {
    if !(h > T::zero()) {
        return Err(Error::InvalidInput(format!("finite-difference step must be positive (got {h})")));
    }
    let check = residuals_at(model, species.c, points, t, T::lit(1e-4) * model.scale_length());
    if !(check.max_residual() <= T::lit(CONSISTENCY_LIMIT)) {
        return Err(Error::InconsistentModel {
            model: model.name(),
            residual: check.max_residual().as_f64(),
            limit: CONSISTENCY_LIMIT,
        });
    }
    Ok(residuals_at(model, species.c, points, t, h))
}
