//! Olfati-Saber flocking with obstacle β-agents.
//!
//! For agent `i` with neighbors `j` and β-agents `k`:
//!
//! ```text
//! u_i = c1α Σ_j φ_α(‖q_j − q_i‖_σ) n_ij + c2α Σ_j a_ij(q) (p_j − p_i)
//!     + c1β Σ_k φ_β(‖q̂_k − q_i‖_σ) n̂_ik + c2β Σ_k b_ik(q) (p̂_k − p_i)
//!     + c_mig (u_mig − p_i)
//! ```
//!
//! with the σ-norm `‖z‖_σ = (√(1 + ε‖z‖²) − 1)/ε`, its gradient
//! `n = z/√(1 + ε‖z‖²)`, the bump function `ρ_h`, the action function
//! `φ_α(z) = ρ_h(z/r_α) φ(z − d_α)` and the repulsive obstacle action
//! `φ_β(z) = ρ_h(z/d_β) (σ₁(z − d_β) − 1)`. The result is saturated to `a_max`.

use serde::{Deserialize, Serialize};

use super::virtual_agents::VirtualAgent;
use crate::config::{SwarmParams, ValidationReport};
use crate::real::Real;
use crate::types::{Kinematics, Vec3};

/// Olfati-Saber gain block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OlfatiSaberGains<T> {
    /// Inter-agent gradient gain.
    pub c1_alpha: T,
    /// Velocity consensus gain.
    pub c2_alpha: T,
    /// Obstacle gradient gain.
    pub c1_beta: T,
    /// Obstacle velocity-matching gain.
    pub c2_beta: T,
    /// Migration gain.
    pub c_mig: T,
    /// σ-norm parameter ε.
    pub epsilon: T,
    /// Bump cutoff for the inter-agent terms.
    pub h_alpha: T,
    /// Bump cutoff for the obstacle terms.
    pub h_beta: T,
    /// Action function parameters, `0 < a ≤ b`.
    pub a: T,
    pub b: T,
    /// Interaction range between agents (m).
    pub r_alpha: T,
    /// Standoff distance from obstacle surfaces (m).
    pub d_beta: T,
    /// Range within which obstacle surfaces spawn β-agents (m).
    pub r_beta: T,
}

impl<T: Real> Default for OlfatiSaberGains<T> {
    fn default() -> Self {
        crate::presets::olfati_saber()
    }
}

impl<T: Real> OlfatiSaberGains<T> {
    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        for (field, x) in [
            ("olfati_saber.c1_alpha", self.c1_alpha),
            ("olfati_saber.c2_alpha", self.c2_alpha),
            ("olfati_saber.c1_beta", self.c1_beta),
            ("olfati_saber.c2_beta", self.c2_beta),
            ("olfati_saber.c_mig", self.c_mig),
            ("olfati_saber.r_beta", self.r_beta),
        ] {
            if !(x >= T::zero() && x.is_finite()) {
                r.push(field, format!("must be finite and >= 0, got {x}"));
            }
        }
        for (field, x) in [
            ("olfati_saber.epsilon", self.epsilon),
            ("olfati_saber.r_alpha", self.r_alpha),
            ("olfati_saber.d_beta", self.d_beta),
            ("olfati_saber.a", self.a),
        ] {
            if !(x > T::zero() && x.is_finite()) {
                r.push(field, format!("must be finite and > 0, got {x}"));
            }
        }
        if !(self.b >= self.a) || !self.b.is_finite() {
            r.push("olfati_saber.b", format!("must satisfy b >= a, got a = {}, b = {}", self.a, self.b));
        }
        for (field, h) in [("olfati_saber.h_alpha", self.h_alpha), ("olfati_saber.h_beta", self.h_beta)] {
            if !(h > T::zero() && h < T::one()) {
                r.push(field, format!("must lie in (0, 1), got {h}"));
            }
        }
        r
    }
}

/// σ-norm of a vector.
#[inline]
pub fn sigma_norm<T: Real>(z: Vec3<T>, eps: T) -> T {
    sigma_norm_scalar(z.norm(), eps)
}

/// σ-norm of a vector of length `d`.
#[inline]
pub fn sigma_norm_scalar<T: Real>(d: T, eps: T) -> T {
    ((T::one() + eps * d * d).sqrt() - T::one()) / eps
}

/// Gradient of the σ-norm, `z / √(1 + ε‖z‖²)`.
#[inline]
pub fn sigma_grad<T: Real>(z: Vec3<T>, eps: T) -> Vec3<T> {
    z / (T::one() + eps * z.norm_squared()).sqrt()
}

/// Bump function `ρ_h`: 1 on `[0, h)`, a cosine ramp to 0 on `[h, 1]`, 0 beyond.
pub fn bump<T: Real>(z: T, h: T) -> T {
    if z < T::zero() {
        T::zero()
    } else if z < h {
        T::one()
    } else if z <= T::one() {
        T::lit(0.5) * (T::one() + (T::PI() * (z - h) / (T::one() - h)).cos())
    } else {
        T::zero()
    }
}

#[inline]
fn sigma1<T: Real>(z: T) -> T {
    z / (T::one() + z * z).sqrt()
}

/// Uneven sigmoid `φ(z) = ½[(a + b) σ₁(z + c) + (a − b)]`, `c = |a − b|/√(4ab)`.
pub fn action<T: Real>(z: T, a: T, b: T) -> T {
    let c = (a - b).abs() / (T::lit(4.0) * a * b).sqrt();
    T::lit(0.5) * ((a + b) * sigma1(z + c) + (a - b))
}

/// Precomputed form of the law for one parameter set.
#[derive(Clone, Debug)]
pub struct OlfatiSaberLaw<T: Real> {
    pub gains: OlfatiSaberGains<T>,
    r_a: T,
    d_a: T,
    d_b: T,
    u_mig: Vec3<T>,
    a_max: T,
}

impl<T: Real> OlfatiSaberLaw<T> {
    pub fn new(sp: &SwarmParams<T>) -> Self {
        let g = sp.olfati_saber.clone();
        let eps = g.epsilon;
        Self {
            r_a: sigma_norm_scalar(g.r_alpha, eps),
            d_a: sigma_norm_scalar(sp.d_ref, eps),
            d_b: sigma_norm_scalar(g.d_beta, eps),
            u_mig: sp.u_mig,
            a_max: sp.a_max,
            gains: g,
        }
    }

    /// `φ_α` evaluated at a σ-distance.
    pub fn phi_alpha(&self, s: T) -> T {
        bump(s / self.r_a, self.gains.h_alpha) * action(s - self.d_a, self.gains.a, self.gains.b)
    }

    /// `φ_β` evaluated at a σ-distance.
    pub fn phi_beta(&self, s: T) -> T {
        bump(s / self.d_b, self.gains.h_beta) * (sigma1(s - self.d_b) - T::one())
    }

    /// Gradient and consensus contribution of `other` on `me`.
    pub fn pair_term(&self, me: &Kinematics<T>, other: &Kinematics<T>) -> Vec3<T> {
        let g = &self.gains;
        let z = other.position - me.position;
        let s = sigma_norm(z, g.epsilon);
        let gradient = sigma_grad(z, g.epsilon) * (g.c1_alpha * self.phi_alpha(s));
        let adjacency = bump(s / self.r_a, g.h_alpha);
        gradient + (other.velocity - me.velocity) * (g.c2_alpha * adjacency)
    }

    /// Contribution of one β-agent. An agent already inside the obstacle is
    /// pushed back through the nearest surface point.
    pub fn obstacle_term(&self, me: &Kinematics<T>, va: &VirtualAgent<T>) -> Vec3<T> {
        let g = &self.gains;
        let mut z = va.position - me.position;
        if va.clearance < T::zero() {
            z = -z;
        }
        let s = sigma_norm(z, g.epsilon);
        let gradient = sigma_grad(z, g.epsilon) * (g.c1_beta * self.phi_beta(s));
        let b = bump(s / self.d_b, g.h_beta);
        gradient + (va.velocity - me.velocity) * (g.c2_beta * b)
    }

    pub fn migration_term(&self, me: &Kinematics<T>) -> Vec3<T> {
        (self.u_mig - me.velocity) * self.gains.c_mig
    }

    /// Unsaturated command.
    pub fn raw_command(
        &self,
        i: usize,
        agents: &[Kinematics<T>],
        neighbors: &[usize],
        virtuals: &[VirtualAgent<T>],
    ) -> Vec3<T> {
        let me = &agents[i];
        let mut u = self.migration_term(me);
        for &j in neighbors {
            u += self.pair_term(me, &agents[j]);
        }
        for va in virtuals {
            u += self.obstacle_term(me, va);
        }
        u
    }

    pub fn command(
        &self,
        i: usize,
        agents: &[Kinematics<T>],
        neighbors: &[usize],
        virtuals: &[VirtualAgent<T>],
    ) -> Vec3<T> {
        self.raw_command(i, agents, neighbors, virtuals)
            .clamp_norm(self.a_max)
    }
}

/// Saturated Olfati-Saber acceleration command for agent `i`.
pub fn olfati_saber_command<T: Real>(
    i: usize,
    agents: &[Kinematics<T>],
    neighbors: &[usize],
    virtuals: &[VirtualAgent<T>],
    sp: &SwarmParams<T>,
) -> Vec3<T> {
    OlfatiSaberLaw::new(sp).command(i, agents, neighbors, virtuals)
}
