//! Agent dynamics.
//!
//! Two modes are supported:
//!
//! * **point mass**: semi-implicit Euler on inertial position and velocity,
//!   with the commanded acceleration applied directly;
//! * **quadcopter**: 12-state Newton-Euler rigid body (diagonal inertia,
//!   gravity, thrust along body `-z`, no drag) integrated with classic RK4,
//!   driven by a cascaded velocity → attitude → rate autopilot.
//!
//! In quadcopter mode the flocking acceleration `a` is turned into a velocity
//! setpoint `v + a / k_vel`, so the velocity loop requests exactly `a` while
//! the attitude loops catch up.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ValidationReport;
use crate::real::Real;
use crate::types::{body_to_inertial, mat_t_vec, mat_vec, wrap_angle, AgentState, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("numeric blowup: state component {component} = {value} exceeds sanity bound {bound}")]
    NumericBlowup {
        component: &'static str,
        value: f64,
        bound: f64,
    },
}

/// Physical and autopilot parameters of the quadcopter model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
#[serde(default)]
pub struct QuadParams<T: Real> {
    /// kg
    pub mass: T,
    /// Diagonal of the inertia tensor (kg·m²).
    pub jx: T,
    pub jy: T,
    pub jz: T,
    /// m/s²
    pub gravity: T,
    /// Collective thrust ceiling (N).
    pub max_thrust: T,
    /// Roll/pitch torque ceiling (N·m).
    pub max_torque_xy: T,
    /// Yaw torque ceiling (N·m).
    pub max_torque_z: T,
    /// Velocity loop gain (1/s).
    pub k_vel: T,
    /// Largest commanded tilt from vertical (rad).
    pub max_tilt: T,
    /// Attitude loop gain (1/s), angle error → rate setpoint.
    pub k_att: T,
    /// Rate setpoint ceiling (rad/s).
    pub max_rate: T,
    /// Rate loop gain (1/s), rate error → angular acceleration.
    pub k_rate: T,
    /// Any state component whose magnitude exceeds this aborts the run.
    pub sanity_bound: T,
}

impl<T: Real> Default for QuadParams<T> {
    fn default() -> Self {
        Self {
            mass: T::lit(0.5),
            jx: T::lit(3.8e-3),
            jy: T::lit(3.8e-3),
            jz: T::lit(7.1e-3),
            gravity: T::lit(9.81),
            max_thrust: T::lit(12.0),
            max_torque_xy: T::lit(0.3),
            max_torque_z: T::lit(0.05),
            k_vel: T::lit(2.0),
            max_tilt: T::lit(0.6),
            k_att: T::lit(8.0),
            max_rate: T::lit(6.0),
            k_rate: T::lit(40.0),
            sanity_bound: T::lit(1e6),
        }
    }
}

impl<T: Real> QuadParams<T> {
    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        let positive = [
            ("quad.mass", self.mass),
            ("quad.jx", self.jx),
            ("quad.jy", self.jy),
            ("quad.jz", self.jz),
            ("quad.gravity", self.gravity),
            ("quad.max_thrust", self.max_thrust),
            ("quad.max_torque_xy", self.max_torque_xy),
            ("quad.max_torque_z", self.max_torque_z),
            ("quad.k_vel", self.k_vel),
            ("quad.max_tilt", self.max_tilt),
            ("quad.k_att", self.k_att),
            ("quad.max_rate", self.max_rate),
            ("quad.k_rate", self.k_rate),
            ("quad.sanity_bound", self.sanity_bound),
        ];
        for (field, x) in positive {
            if !(x > T::zero() && x.is_finite()) {
                r.push(field, format!("must be finite and > 0, got {x}"));
            }
        }
        if self.max_tilt >= T::FRAC_PI_2() {
            r.push("quad.max_tilt", "must be below pi/2");
        }
        if self.max_thrust <= self.mass * self.gravity {
            r.push("quad.max_thrust", "must exceed hover thrust m·g");
        }
        r
    }
}

/// Collective thrust (N) and body torques (N·m).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Actuation<T> {
    pub thrust: T,
    pub torques: Vec3<T>,
}

/// One semi-implicit Euler step: `v' = clamp(v + a·dt, v_max)`, `p' = p + v'·dt`.
pub fn step_point_mass<T: Real>(state: &AgentState<T>, accel: Vec3<T>, dt: T, v_max: T) -> AgentState<T> {
    let v = (state.inertial_velocity() + accel * dt).clamp_norm(v_max);
    let p = state.position() + v * dt;
    AgentState::point_mass(p, v)
}

fn clamp_abs<T: Real>(x: T, max: T) -> T {
    x.max(-max).min(max)
}

/// Cascaded velocity autopilot.
///
/// The velocity loop asks for `a = k_vel (v_des - v)`; the thrust vector that
/// realizes `a` against gravity fixes the collective thrust and the desired
/// roll and pitch (yaw is held at zero). The attitude loop maps angle errors to
/// rate setpoints and the rate loop maps rate errors to torques.
pub fn autopilot_velocity<T: Real>(state: &AgentState<T>, v_des: Vec3<T>, qp: &QuadParams<T>) -> Actuation<T> {
    let g = qp.gravity;
    let a_des = (v_des - state.inertial_velocity()) * qp.k_vel;
    // Specific force the rotors must provide, pointing along body +z (down).
    let mut f = Vec3::new(-a_des.x, -a_des.y, g - a_des.z);
    let min_fz = g * T::lit(0.1);
    if f.z < min_fz {
        f.z = min_fz;
    }
    let horiz = f.x.hypot(f.y);
    let max_horiz = f.z * qp.max_tilt.tan();
    if horiz > max_horiz {
        let s = max_horiz / horiz;
        f.x = f.x * s;
        f.y = f.y * s;
    }
    let thrust = (qp.mass * f.norm()).min(qp.max_thrust).max(T::zero());

    let b3 = f / f.norm();
    let (s_psi, c_psi) = state.psi.sin_cos();
    let x_yaw = c_psi * b3.x + s_psi * b3.y;
    let y_yaw = -s_psi * b3.x + c_psi * b3.y;
    let phi_des = (-y_yaw).max(-T::one()).min(T::one()).asin();
    let theta_des = x_yaw.atan2(b3.z);
    let psi_des = T::zero();

    let rates_des = Vec3::new(
        clamp_abs(qp.k_att * (phi_des - state.phi), qp.max_rate),
        clamp_abs(qp.k_att * (theta_des - state.theta), qp.max_rate),
        clamp_abs(qp.k_att * wrap_angle(psi_des - state.psi), qp.max_rate),
    );
    let omega = state.body_rates();
    let j_omega = Vec3::new(qp.jx * omega.x, qp.jy * omega.y, qp.jz * omega.z);
    let err = (rates_des - omega) * qp.k_rate;
    let tau = Vec3::new(qp.jx * err.x, qp.jy * err.y, qp.jz * err.z) + omega.cross(&j_omega);
    Actuation {
        thrust,
        torques: Vec3::new(
            clamp_abs(tau.x, qp.max_torque_xy),
            clamp_abs(tau.y, qp.max_torque_xy),
            clamp_abs(tau.z, qp.max_torque_z),
        ),
    }
}

/// Time derivative of the 12-state rigid body under fixed actuation.
pub fn rigid_body_derivative<T: Real>(s: &AgentState<T>, act: &Actuation<T>, qp: &QuadParams<T>) -> [T; 12] {
    let rot = body_to_inertial(s.phi, s.theta, s.psi);
    let vb = s.body_velocity();
    let pos_dot = mat_vec(&rot, vb);
    let (p, q, r) = (s.p, s.q, s.r_rate);
    let grav_body = mat_t_vec(&rot, Vec3::new(T::zero(), T::zero(), qp.gravity));
    let vel_dot = Vec3::new(r * s.v - q * s.w, p * s.w - r * s.u, q * s.u - p * s.v)
        + grav_body
        + Vec3::new(T::zero(), T::zero(), -act.thrust / qp.mass);
    let (sf, cf) = s.phi.sin_cos();
    let (tt, ct) = (s.theta.tan(), s.theta.cos());
    let phi_dot = p + (q * sf + r * cf) * tt;
    let theta_dot = q * cf - r * sf;
    let psi_dot = (q * sf + r * cf) / ct;
    let tau = act.torques;
    let p_dot = ((qp.jy - qp.jz) * q * r + tau.x) / qp.jx;
    let q_dot = ((qp.jz - qp.jx) * p * r + tau.y) / qp.jy;
    let r_dot = ((qp.jx - qp.jy) * p * q + tau.z) / qp.jz;
    [
        pos_dot.x, pos_dot.y, pos_dot.z, vel_dot.x, vel_dot.y, vel_dot.z, phi_dot, theta_dot,
        psi_dot, p_dot, q_dot, r_dot,
    ]
}

fn axpy<T: Real>(x: &[T; 12], k: &[T; 12], h: T) -> [T; 12] {
    let mut out = *x;
    for (o, d) in out.iter_mut().zip(k) {
        *o = *o + *d * h;
    }
    out
}

/// One classic RK4 step with actuation held constant, followed by angle
/// normalization (roll and yaw wrapped to `(-pi, pi]`, pitch kept off the
/// gimbal-lock singularity).
pub fn integrate_rigid_body<T: Real>(
    state: &AgentState<T>,
    act: &Actuation<T>,
    qp: &QuadParams<T>,
    dt: T,
) -> AgentState<T> {
    let x0 = state.as_array();
    let half = dt / T::lit(2.0);
    let f = |x: &[T; 12]| rigid_body_derivative(&AgentState::from_array(*x), act, qp);
    let k1 = f(&x0);
    let k2 = f(&axpy(&x0, &k1, half));
    let k3 = f(&axpy(&x0, &k2, half));
    let k4 = f(&axpy(&x0, &k3, dt));
    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let mut x1 = x0;
    for i in 0..12 {
        x1[i] = x0[i] + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
    }
    let mut next = AgentState::from_array(x1);
    next.phi = wrap_angle(next.phi);
    next.psi = wrap_angle(next.psi);
    let guard = T::FRAC_PI_2() - T::lit(1e-6);
    next.theta = next.theta.max(-guard).min(guard);
    next
}

const COMPONENTS: [&str; 12] = [
    "pn", "pe", "pd", "u", "v", "w", "phi", "theta", "psi", "p", "q", "r",
];

/// Fails if any component is non-finite or beyond the sanity bound.
pub fn check_sanity<T: Real>(state: &AgentState<T>, bound: T) -> Result<(), DynamicsError> {
    for (x, name) in state.as_array().iter().zip(COMPONENTS) {
        if !x.is_finite() || x.abs() > bound {
            return Err(DynamicsError::NumericBlowup {
                component: name,
                value: x.as_f64(),
                bound: bound.as_f64(),
            });
        }
    }
    Ok(())
}

/// Advances a quadcopter one step under a desired inertial acceleration.
pub fn step_quadcopter<T: Real>(
    state: &AgentState<T>,
    accel: Vec3<T>,
    qp: &QuadParams<T>,
    dt: T,
    v_max: T,
) -> Result<AgentState<T>, DynamicsError> {
    let v_des = (state.inertial_velocity() + accel / qp.k_vel).clamp_norm(v_max);
    let act = autopilot_velocity(state, v_des, qp);
    let next = integrate_rigid_body(state, &act, qp, dt);
    check_sanity(&next, qp.sanity_bound)?;
    Ok(next)
}
