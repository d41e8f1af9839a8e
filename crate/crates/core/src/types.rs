//! Shared domain types: 3-vectors in the North-East-Down world frame and the
//! 12-component drone state.
//!
//! Altitude is `-pd`. Angles are radians everywhere inside the crate.

use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::real::Real;

/// Three-component vector. Components are `(north, east, down)` for
/// positions and inertial velocities.
/// Serialized as `[x, y, z]`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T> From<[T; 3]> for Vec3<T> {
    fn from([x, y, z]: [T; 3]) -> Self {
        Self { x, y, z }
    }
}

impl<T> From<Vec3<T>> for [T; 3] {
    fn from(v: Vec3<T>) -> Self {
        [v.x, v.y, v.z]
    }
}

impl<T: Serialize> Serialize for Vec3<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (&self.x, &self.y, &self.z).serialize(s)
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Vec3<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y, z] = <[T; 3]>::deserialize(d)?;
        Ok(Self { x, y, z })
    }
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zeros() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn from_f64(x: f64, y: f64, z: f64) -> Self {
        Self::new(T::lit(x), T::lit(y), T::lit(z))
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> T {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn cross(&self, other: &Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    #[inline]
    pub fn norm_squared(&self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction, or zero for a (near-)zero vector.
    pub fn normalize_or_zero(&self) -> Self {
        let n = self.norm();
        if n > T::epsilon() {
            *self / n
        } else {
            Self::zeros()
        }
    }

    /// Rescales the vector so that its norm does not exceed `max`.
    pub fn clamp_norm(&self, max: T) -> Self {
        let n = self.norm();
        if n > max && n > T::zero() {
            *self * (max / n)
        } else {
            *self
        }
    }

    /// Projection on the horizontal (north-east) plane.
    #[inline]
    pub fn horizontal(&self) -> Self {
        Self::new(self.x, self.y, T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::new(f(self.x), f(self.y), f(self.z))
    }

    /// Rotates the vector about the down axis by `yaw` radians.
    pub fn rotate_yaw(&self, yaw: T) -> Self {
        let (s, c) = yaw.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y, self.z)
    }

    pub fn cast<U: Real>(&self) -> Vec3<U> {
        Vec3::new(
            U::lit(self.x.as_f64()),
            U::lit(self.y.as_f64()),
            U::lit(self.z.as_f64()),
        )
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
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

impl<T: Real> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> SubAssign for Vec3<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real> MulAssign<T> for Vec3<T> {
    #[inline]
    fn mul_assign(&mut self, s: T) {
        *self = *self * s;
    }
}

impl<T: Real> Sum for Vec3<T> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zeros(), |a, b| a + b)
    }
}

/// Rotation matrix from body to inertial frame for ZYX Euler angles
/// (roll `phi`, pitch `theta`, yaw `psi`). Row-major.
pub fn body_to_inertial<T: Real>(phi: T, theta: T, psi: T) -> [[T; 3]; 3] {
    let (sf, cf) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = psi.sin_cos();
    [
        [ct * cp, sf * st * cp - cf * sp, cf * st * cp + sf * sp],
        [ct * sp, sf * st * sp + cf * cp, cf * st * sp - sf * cp],
        [-st, sf * ct, cf * ct],
    ]
}

#[inline]
pub(crate) fn mat_vec<T: Real>(m: &[[T; 3]; 3], v: Vec3<T>) -> Vec3<T> {
    Vec3::new(
        m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
        m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
        m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
    )
}

#[inline]
pub(crate) fn mat_t_vec<T: Real>(m: &[[T; 3]; 3], v: Vec3<T>) -> Vec3<T> {
    Vec3::new(
        m[0][0] * v.x + m[1][0] * v.y + m[2][0] * v.z,
        m[0][1] * v.x + m[1][1] * v.y + m[2][1] * v.z,
        m[0][2] * v.x + m[1][2] * v.y + m[2][2] * v.z,
    )
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let pi = T::PI();
    let two_pi = pi + pi;
    if a > -pi && a <= pi {
        return a;
    }
    let mut w = a - two_pi * ((a + pi) / two_pi).floor();
    if w <= -pi {
        w = w + two_pi;
    }
    w
}

/// Full rigid-body state of one drone.
///
/// `u, v, w` are body-frame velocities and `p, q, r_rate` body rates. In
/// point-mass mode the attitude and rates stay at zero, so the body frame
/// coincides with the inertial frame and `u, v, w` hold the inertial
/// velocity.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct AgentState<T> {
    pub pn: T,
    pub pe: T,
    pub pd: T,
    pub u: T,
    pub v: T,
    pub w: T,
    pub phi: T,
    pub theta: T,
    pub psi: T,
    pub p: T,
    pub q: T,
    pub r_rate: T,
}

impl<T: Real> AgentState<T> {
    /// Point-mass state at rest at `position`.
    pub fn at_rest(position: Vec3<T>) -> Self {
        Self::point_mass(position, Vec3::zeros())
    }

    pub fn point_mass(position: Vec3<T>, velocity: Vec3<T>) -> Self {
        Self {
            pn: position.x,
            pe: position.y,
            pd: position.z,
            u: velocity.x,
            v: velocity.y,
            w: velocity.z,
            ..Self::default()
        }
    }

    #[inline]
    pub fn position(&self) -> Vec3<T> {
        Vec3::new(self.pn, self.pe, self.pd)
    }

    pub fn set_position(&mut self, p: Vec3<T>) {
        self.pn = p.x;
        self.pe = p.y;
        self.pd = p.z;
    }

    #[inline]
    pub fn body_velocity(&self) -> Vec3<T> {
        Vec3::new(self.u, self.v, self.w)
    }

    #[inline]
    pub fn body_rates(&self) -> Vec3<T> {
        Vec3::new(self.p, self.q, self.r_rate)
    }

    #[inline]
    pub fn attitude(&self) -> Vec3<T> {
        Vec3::new(self.phi, self.theta, self.psi)
    }

    fn is_level(&self) -> bool {
        self.phi == T::zero() && self.theta == T::zero() && self.psi == T::zero()
    }

    /// Velocity expressed in the inertial (NED) frame.
    pub fn inertial_velocity(&self) -> Vec3<T> {
        if self.is_level() {
            return self.body_velocity();
        }
        mat_vec(
            &body_to_inertial(self.phi, self.theta, self.psi),
            self.body_velocity(),
        )
    }

    /// Altitude above the `pd = 0` plane.
    pub fn altitude(&self) -> T {
        -self.pd
    }

    pub fn as_array(&self) -> [T; 12] {
        [
            self.pn, self.pe, self.pd, self.u, self.v, self.w, self.phi, self.theta, self.psi,
            self.p, self.q, self.r_rate,
        ]
    }

    pub fn from_array(a: [T; 12]) -> Self {
        Self {
            pn: a[0],
            pe: a[1],
            pd: a[2],
            u: a[3],
            v: a[4],
            w: a[5],
            phi: a[6],
            theta: a[7],
            psi: a[8],
            p: a[9],
            q: a[10],
            r_rate: a[11],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|x| x.is_finite())
    }
}

/// Position and inertial velocity of one agent as seen by the flocking layer.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Kinematics<T> {
    pub position: Vec3<T>,
    pub velocity: Vec3<T>,
}

impl<T: Real> Kinematics<T> {
    pub fn new(position: Vec3<T>, velocity: Vec3<T>) -> Self {
        Self { position, velocity }
    }
}

impl<T: Real> From<&AgentState<T>> for Kinematics<T> {
    fn from(s: &AgentState<T>) -> Self {
        Self::new(s.position(), s.inertial_velocity())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_norm_caps_length() {
        let v = Vec3::new(3.0, 4.0, 0.0).clamp_norm(2.5);
        assert!((v.norm() - 2.5f64).abs() < 1e-12);
        let w = Vec3::new(1.0, 0.0, 0.0).clamp_norm(2.5);
        assert_eq!(w, Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn wrap_angle_range() {
        use std::f64::consts::PI;
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(3.0 * PI + 0.1) - (-PI + 0.1)).abs() < 1e-12);
        assert!((wrap_angle(-0.5f64) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn rotation_matrix_is_orthonormal() {
        let m = body_to_inertial(0.3, -0.2, 1.1);
        for i in 0..3 {
            for j in 0..3 {
                let d: f64 = (0..3).map(|k| m[i][k] * m[j][k]).sum();
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((d - e).abs() < 1e-12);
            }
        }
        let v = Vec3::new(1.0, -2.0, 0.5);
        let back = mat_t_vec(&m, mat_vec(&m, v));
        assert!((back - v).norm() < 1e-12);
    }

    #[test]
    fn point_mass_velocity_is_inertial() {
        let s = AgentState::point_mass(Vec3::new(1.0, 2.0, -3.0), Vec3::new(0.5, 0.0, -0.1));
        assert_eq!(s.inertial_velocity(), Vec3::new(0.5, 0.0, -0.1));
        assert_eq!(s.altitude(), 3.0);
    }

    #[test]
    fn vec3_serializes_as_array() {
        let v = Vec3::new(1.0f64, 2.0, 3.0);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, "[1.0,2.0,3.0]");
    }
}
