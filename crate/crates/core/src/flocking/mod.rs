//! Per-agent command computation: neighbor selection, the two flocking laws,
//! migration and obstacle virtual agents.

mod neighbors;
mod olfati_saber;
mod vasarhelyi;
mod virtual_agents;

pub use neighbors::{build_graph, build_graph_with, metric_neighbors, topological_neighbors, SensingGraph};
pub use olfati_saber::{
    action, bump, olfati_saber_command, sigma_grad, sigma_norm, sigma_norm_scalar, OlfatiSaberGains,
    OlfatiSaberLaw,
};
pub use vasarhelyi::{
    braking_curve, friction_velocity, repulsion_velocity, shill_velocity, vasarhelyi_command,
    VasarhelyiGains, VasarhelyiLaw,
};
pub use virtual_agents::{spawn_virtual_agents, VirtualAgent, VirtualKind};

use crate::config::{Algorithm, SwarmParams};
use crate::environment::ObstacleMap;
use crate::real::Real;
use crate::types::{Kinematics, Vec3};

/// The selected flocking law, precomputed for one parameter set.
#[derive(Clone, Debug)]
pub enum Controller<T: Real> {
    OlfatiSaber(OlfatiSaberLaw<T>),
    Vasarhelyi(VasarhelyiLaw<T>),
}

impl<T: Real> Controller<T> {
    pub fn new(sp: &SwarmParams<T>) -> Self {
        match sp.algorithm {
            Algorithm::OlfatiSaber => Controller::OlfatiSaber(OlfatiSaberLaw::new(sp)),
            Algorithm::Vasarhelyi => Controller::Vasarhelyi(VasarhelyiLaw::new(sp)),
        }
    }

    pub fn virtual_kind(&self) -> VirtualKind<T> {
        match self {
            Controller::OlfatiSaber(_) => VirtualKind::Beta,
            Controller::Vasarhelyi(l) => VirtualKind::Shill { speed: l.gains.v_shill },
        }
    }

    pub fn virtual_range(&self) -> T {
        match self {
            Controller::OlfatiSaber(l) => l.gains.r_beta,
            Controller::Vasarhelyi(l) => l.gains.obstacle_range,
        }
    }

    pub fn virtual_agents(&self, agent: &Kinematics<T>, map: &ObstacleMap<T>) -> Vec<VirtualAgent<T>> {
        if map.is_empty() {
            return Vec::new();
        }
        spawn_virtual_agents(agent, map, self.virtual_range(), self.virtual_kind())
    }

    /// Inter-agent contribution of `other` on `me`, before saturation.
    pub fn pair_term(&self, me: &Kinematics<T>, other: &Kinematics<T>) -> Vec3<T> {
        match self {
            Controller::OlfatiSaber(l) => l.pair_term(me, other),
            Controller::Vasarhelyi(l) => l.pair_term(me, other),
        }
    }

    pub fn command(
        &self,
        i: usize,
        agents: &[Kinematics<T>],
        neighbors: &[usize],
        virtuals: &[VirtualAgent<T>],
    ) -> Vec3<T> {
        match self {
            Controller::OlfatiSaber(l) => l.command(i, agents, neighbors, virtuals),
            Controller::Vasarhelyi(l) => l.command(i, agents, neighbors, virtuals),
        }
    }

    /// Spawns the virtual agents of agent `i` and computes its command.
    pub fn command_for(
        &self,
        i: usize,
        agents: &[Kinematics<T>],
        graph: &SensingGraph,
        map: &ObstacleMap<T>,
    ) -> Vec3<T> {
        let virtuals = self.virtual_agents(&agents[i], map);
        self.command(i, agents, graph.neighbors(i), &virtuals)
    }
}
