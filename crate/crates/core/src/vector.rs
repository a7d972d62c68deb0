//! Small fixed-size linear algebra: 3-vectors and 3×3 gradient tensors.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use crate::real::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn unit_x() -> Self {
        Self::new(T::one(), T::zero(), T::zero())
    }

    pub fn unit_y() -> Self {
        Self::new(T::zero(), T::one(), T::zero())
    }

    pub fn unit_z() -> Self {
        Self::new(T::zero(), T::zero(), T::one())
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    /// Unit vector along axis `i` (0, 1, 2).
    pub fn axis(i: usize) -> Self {
        let mut a = [T::zero(); 3];
        a[i] = T::one();
        Self::from_array(a)
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(self) -> T {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn normalized(self) -> Self {
        self / self.norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn map(self, f: impl Fn(T) -> T) -> Self {
        Self::new(f(self.x), f(self.y), f(self.z))
    }
}

impl<T: Real> Index<usize> for Vec3<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> SubAssign for Vec3<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Div<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Gradient of a vector field, stored as `rows[i][j] = ∂ᵢ Fⱼ`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Tensor3<T> {
    pub rows: [[T; 3]; 3],
}

impl<T: Real> Tensor3<T> {
    pub fn zero() -> Self {
        Self { rows: [[T::zero(); 3]; 3] }
    }

    pub fn from_rows(rows: [[T; 3]; 3]) -> Self {
        Self { rows }
    }

    /// Builds the tensor from the three directional derivatives `∂ᵢF`.
    pub fn from_derivatives(d: [Vec3<T>; 3]) -> Self {
        Self::from_rows([d[0].to_array(), d[1].to_array(), d[2].to_array()])
    }

    /// `∂ᵢF` as a vector.
    pub fn derivative(&self, i: usize) -> Vec3<T> {
        Vec3::from_array(self.rows[i])
    }

    /// Convective contraction `(v·∇)F`, i.e. `Σᵢ vᵢ ∂ᵢFⱼ`.
    pub fn convective(&self, v: Vec3<T>) -> Vec3<T> {
        let mut out = [T::zero(); 3];
        for (j, o) in out.iter_mut().enumerate() {
            *o = v.x * self.rows[0][j] + v.y * self.rows[1][j] + v.z * self.rows[2][j];
        }
        Vec3::from_array(out)
    }

    /// Gradient-of-projection contraction `∇(F·v)` at fixed `v`, i.e. `Σⱼ ∂ᵢFⱼ vⱼ`.
    pub fn gradient_dot(&self, v: Vec3<T>) -> Vec3<T> {
        Vec3::new(
            Vec3::from_array(self.rows[0]).dot(v),
            Vec3::from_array(self.rows[1]).dot(v),
            Vec3::from_array(self.rows[2]).dot(v),
        )
    }

    pub fn scale(&self, s: T) -> Self {
        let mut rows = self.rows;
        for row in rows.iter_mut() {
            for x in row.iter_mut() {
                *x = *x * s;
            }
        }
        Self { rows }
    }

    pub fn max_abs(&self) -> T {
        self.rows.iter().flatten().fold(T::zero(), |acc, x| acc.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.rows.iter().flatten().all(|x| x.is_finite())
    }
}

impl<T: Real> Add for Tensor3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut rows = self.rows;
        for i in 0..3 {
            for j in 0..3 {
                rows[i][j] = rows[i][j] + o.rows[i][j];
            }
        }
        Self { rows }
    }
}

impl<T: Real> Sub for Tensor3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + o.scale(-T::one())
    }
}
