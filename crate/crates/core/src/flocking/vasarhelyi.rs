//! Vasarhelyi self-propelled flocking with friction-style alignment and shill
//! agents on obstacle surfaces.
//!
//! The law produces a desired velocity
//!
//! ```text
//! v_d = v_flock ê + Σ_j v_rep,ij + Σ_j v_frict,ij + Σ_s v_shill,is + c_mig (u_mig − v_i)
//! ```
//!
//! where `ê` is the migration direction (or the current heading when there
//! is no migration), capped at `v_max`. The acceleration command relaxes the
//! velocity toward `v_d` over `response_time` and is capped at `a_max`.

use serde::{Deserialize, Serialize};

use super::virtual_agents::VirtualAgent;
use crate::config::{SwarmParams, ValidationReport};
use crate::real::Real;
use crate::types::{Kinematics, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VasarhelyiGains<T> {
    /// Repulsion range (m).
    pub r0_rep: T,
    /// Repulsion gain (1/s).
    pub p_rep: T,
    /// Alignment: stopping-point offset (m).
    pub r0_frict: T,
    /// Alignment: friction coefficient.
    pub c_frict: T,
    /// Alignment: tolerated velocity difference (m/s).
    pub v_frict: T,
    /// Alignment: braking-curve gain (1/s).
    pub p_frict: T,
    /// Alignment: braking-curve acceleration (m/s²).
    pub a_frict: T,
    /// Shill: stopping-point offset (m).
    pub r0_shill: T,
    /// Shill agent speed (m/s).
    pub v_shill: T,
    /// Shill braking-curve gain (1/s).
    pub p_shill: T,
    /// Shill braking-curve acceleration (m/s²).
    pub a_shill: T,
    /// Migration blending gain.
    pub c_mig: T,
    /// Velocity relaxation time of the acceleration command (s).
    pub response_time: T,
    /// Range within which obstacle surfaces spawn shill agents (m).
    pub obstacle_range: T,
}

impl<T: Real> Default for VasarhelyiGains<T> {
    fn default() -> Self {
        crate::presets::vasarhelyi()
    }
}

impl<T: Real> VasarhelyiGains<T> {
    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        for (field, x) in [
            ("vasarhelyi.r0_rep", self.r0_rep),
            ("vasarhelyi.p_rep", self.p_rep),
            ("vasarhelyi.r0_frict", self.r0_frict),
            ("vasarhelyi.c_frict", self.c_frict),
            ("vasarhelyi.v_frict", self.v_frict),
            ("vasarhelyi.p_frict", self.p_frict),
            ("vasarhelyi.a_frict", self.a_frict),
            ("vasarhelyi.r0_shill", self.r0_shill),
            ("vasarhelyi.v_shill", self.v_shill),
            ("vasarhelyi.p_shill", self.p_shill),
            ("vasarhelyi.a_shill", self.a_shill),
            ("vasarhelyi.c_mig", self.c_mig),
            ("vasarhelyi.obstacle_range", self.obstacle_range),
        ] {
            if !(x >= T::zero() && x.is_finite()) {
                r.push(field, format!("must be finite and >= 0, got {x}"));
            }
        }
        if !(self.response_time > T::zero() && self.response_time.is_finite()) {
            r.push(
                "vasarhelyi.response_time",
                format!("must be finite and > 0, got {}", self.response_time),
            );
        }
        r
    }
}

/// Ideal braking curve `D(r, a, p)`: the largest velocity difference that can
/// still be cancelled within distance `r` given gain `p` and acceleration `a`.
pub fn braking_curve<T: Real>(r: T, a: T, p: T) -> T {
    if r <= T::zero() {
        T::zero()
    } else if r * p < a / p {
        r * p
    } else {
        (T::lit(2.0) * a * r - a * a / (p * p)).sqrt()
    }
}

/// Linear repulsion `p_rep (r0_rep − d) (q_i − q_j)/d` below `r0_rep`.
pub fn repulsion_velocity<T: Real>(me: &Kinematics<T>, other: &Kinematics<T>, g: &VasarhelyiGains<T>) -> Vec3<T> {
    let diff = me.position - other.position;
    let d = diff.norm();
    if d >= g.r0_rep || d <= T::zero() {
        return Vec3::zeros();
    }
    diff * (g.p_rep * (g.r0_rep - d) / d)
}

/// Friction-like alignment: velocity differences above the braking-curve
/// allowance are damped toward the neighbor's velocity.
pub fn friction_velocity<T: Real>(me: &Kinematics<T>, other: &Kinematics<T>, g: &VasarhelyiGains<T>) -> Vec3<T> {
    let d = (me.position - other.position).norm();
    let dv = other.velocity - me.velocity;
    let v_ij = dv.norm();
    let allowed = g.v_frict.max(braking_curve(d - g.r0_frict, g.a_frict, g.p_frict));
    if v_ij > allowed {
        dv * (g.c_frict * (v_ij - allowed) / v_ij)
    } else {
        Vec3::zeros()
    }
}

/// Shill-agent term: the agent is steered toward the outward shill velocity
/// when it closes on the surface faster than the braking curve allows.
pub fn shill_velocity<T: Real>(me: &Kinematics<T>, va: &VirtualAgent<T>, g: &VasarhelyiGains<T>) -> Vec3<T> {
    let d = va.clearance.max(T::zero());
    let dv = va.velocity - me.velocity;
    let v_is = dv.norm();
    let allowed = braking_curve(d - g.r0_shill, g.a_shill, g.p_shill);
    if v_is > allowed {
        dv * ((v_is - allowed) / v_is)
    } else {
        Vec3::zeros()
    }
}

#[derive(Clone, Debug)]
pub struct VasarhelyiLaw<T: Real> {
    pub gains: VasarhelyiGains<T>,
    v_flock: T,
    u_mig: Vec3<T>,
    v_max: T,
    a_max: T,
}

impl<T: Real> VasarhelyiLaw<T> {
    pub fn new(sp: &SwarmParams<T>) -> Self {
        Self {
            gains: sp.vasarhelyi.clone(),
            v_flock: sp.v_ref,
            u_mig: sp.u_mig,
            v_max: sp.v_max,
            a_max: sp.a_max,
        }
    }

    /// Interaction of `other` on `me` (repulsion plus alignment).
    pub fn pair_term(&self, me: &Kinematics<T>, other: &Kinematics<T>) -> Vec3<T> {
        repulsion_velocity(me, other, &self.gains) + friction_velocity(me, other, &self.gains)
    }

    /// Desired velocity, capped at `v_max`.
    pub fn desired_velocity(
        &self,
        i: usize,
        agents: &[Kinematics<T>],
        neighbors: &[usize],
        virtuals: &[VirtualAgent<T>],
    ) -> Vec3<T> {
        let me = &agents[i];
        let heading = if self.u_mig.norm() > T::zero() {
            self.u_mig.normalize_or_zero()
        } else {
            me.velocity.normalize_or_zero()
        };
        let mut v = heading * self.v_flock + (self.u_mig - me.velocity) * self.gains.c_mig;
        for &j in neighbors {
            v += self.pair_term(me, &agents[j]);
        }
        for va in virtuals {
            v += shill_velocity(me, va, &self.gains);
        }
        v.clamp_norm(self.v_max)
    }

    pub fn command(
        &self,
        i: usize,
        agents: &[Kinematics<T>],
        neighbors: &[usize],
        virtuals: &[VirtualAgent<T>],
    ) -> Vec3<T> {
        let v_des = self.desired_velocity(i, agents, neighbors, virtuals);
        ((v_des - agents[i].velocity) / self.gains.response_time).clamp_norm(self.a_max)
    }
}

/// Saturated Vasarhelyi acceleration command for agent `i`.
pub fn vasarhelyi_command<T: Real>(
    i: usize,
    agents: &[Kinematics<T>],
    neighbors: &[usize],
    virtuals: &[VirtualAgent<T>],
    sp: &SwarmParams<T>,
) -> Vec3<T> {
    VasarhelyiLaw::new(sp).command(i, agents, neighbors, virtuals)
}
