//! Virtual agents placed on obstacle surfaces.
//!
//! For every obstacle near a focal agent one virtual agent sits at the closest
//! surface point, at the focal agent's altitude. Its velocity depends on the
//! algorithm: the agent's own velocity projected on the surface tangent plane
//! (Olfati-Saber β-agents), or a constant outward velocity (Vasarhelyi shill
//! agents).

use crate::environment::{nearest_surface_point, ObstacleMap};
use crate::real::Real;
use crate::types::{Kinematics, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VirtualKind<T> {
    /// Velocity `P v_i` with `P = I - n nᵀ`.
    Beta,
    /// Velocity `speed · n`.
    Shill { speed: T },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VirtualAgent<T> {
    pub position: Vec3<T>,
    pub velocity: Vec3<T>,
    /// Outward unit surface normal at `position`.
    pub normal: Vec3<T>,
    /// Signed horizontal distance from the focal agent to the surface;
    /// negative when the agent is inside the obstacle.
    pub clearance: T,
    pub obstacle: usize,
}

/// One virtual agent for each obstacle whose surface lies within `range` of
/// the focal agent.
pub fn spawn_virtual_agents<T: Real>(
    agent: &Kinematics<T>,
    map: &ObstacleMap<T>,
    range: T,
    kind: VirtualKind<T>,
) -> Vec<VirtualAgent<T>> {
    let mut out = Vec::new();
    for (m, obs) in map.obstacles.iter().enumerate() {
        let (point, clearance) = nearest_surface_point(agent.position, obs);
        if clearance > range {
            continue;
        }
        let normal = obs.outward_normal(agent.position);
        let velocity = match kind {
            VirtualKind::Beta => agent.velocity - normal * normal.dot(&agent.velocity),
            VirtualKind::Shill { speed } => normal * speed,
        };
        out.push(VirtualAgent {
            position: point,
            velocity,
            normal,
            clearance,
            obstacle: m,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::Obstacle;

    fn map() -> ObstacleMap<f64> {
        ObstacleMap::from_obstacles(vec![Obstacle::new(50.0, 0.0, 5.0)])
    }

    #[test]
    fn nothing_in_range() {
        let a = Kinematics::new(Vec3::new(0.0, 0.0, -10.0), Vec3::new(1.0, 0.0, 0.0));
        assert!(spawn_virtual_agents(&a, &map(), 20.0, VirtualKind::Beta).is_empty());
    }

    #[test]
    fn beta_velocity_is_tangential() {
        // approaching radially with a sideways and vertical component
        let v = Vec3::new(4.0, 1.5, -0.5);
        let a = Kinematics::new(Vec3::new(35.0, 0.0, -10.0), v);
        let va = spawn_virtual_agents(&a, &map(), 20.0, VirtualKind::Beta);
        assert_eq!(va.len(), 1);
        let b = va[0];
        assert_eq!(b.position, Vec3::new(45.0, 0.0, -10.0));
        assert!((b.clearance - 10.0).abs() < 1e-12);
        // radial direction is -north here
        assert!(b.velocity.dot(&b.normal).abs() < 1e-12);
        assert!(b.velocity.norm() <= v.norm());
        assert!((b.velocity - Vec3::new(0.0, 1.5, -0.5)).norm() < 1e-12);
    }

    #[test]
    fn shill_velocity_points_outward() {
        let a = Kinematics::new(Vec3::new(52.0, 9.0, -3.0), Vec3::new(1.0, -2.0, 0.0));
        let va = spawn_virtual_agents(&a, &map(), 20.0, VirtualKind::Shill { speed: 13.6 });
        let s = va[0];
        assert!((s.velocity.norm() - 13.6).abs() < 1e-12);
        let out = (a.position - Vec3::new(50.0, 0.0, -3.0)).normalize_or_zero();
        assert!((s.velocity.normalize_or_zero() - out).norm() < 1e-12);
    }
}
