//! Simulation loop: spawn, sense, command, step, measure, patch.
//!
//! One [`Simulation::step`] is a synchronous update. Every command is computed
//! from the same snapshot before any state is committed, so stepping agents
//! serially or on the rayon pool gives identical results.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{DynamicsMode, ParamPatch, Scenario, SimConfig, SwarmParams, ValidationReport};
use crate::dynamics::{check_sanity, step_point_mass, step_quadcopter, DynamicsError};
use crate::environment::{generate_map, MapError, ObstacleMap};
use crate::flocking::{build_graph_with, Controller, SensingGraph};
use crate::metrics::{compute_frame, MetricsFrame};
use crate::real::Real;
use crate::rng;
use crate::types::{AgentState, Kinematics, Vec3};

/// Version of the on-disk run record layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Candidate draws per agent before spawning gives up.
pub const SPAWN_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration:\n{0}")]
    Config(ValidationReport),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("could not place agent {placed} of {requested} after {attempts} draws; enlarge the spawn cube")]
    Spawn {
        placed: usize,
        requested: usize,
        attempts: usize,
    },
    #[error("patch for tick {patch_tick} arrived after tick {current}")]
    LatePatch { patch_tick: u64, current: u64 },
    #[error("agent {agent} at tick {tick}: {source}")]
    Dynamics {
        tick: u64,
        agent: usize,
        source: DynamicsError,
    },
}

/// Places `n_agents` uniformly in the spawn cube with pairwise distances
/// above `2 r_coll`. Agents start at rest (level hover for quadcopters).
pub fn spawn_swarm<T: Real, R: Rng + ?Sized>(
    cfg: &SimConfig<T>,
    sp: &SwarmParams<T>,
    rng: &mut R,
) -> Result<Vec<AgentState<T>>, EngineError> {
    let half = cfg.spawn.edge / T::lit(2.0);
    let c = cfg.spawn.center;
    let min_d = sp.r_coll + sp.r_coll;
    let mut placed: Vec<Vec3<T>> = Vec::with_capacity(sp.n_agents);
    for k in 0..sp.n_agents {
        let mut ok = false;
        for _ in 0..SPAWN_ATTEMPTS {
            let p = Vec3::new(
                rng::uniform(rng, c.x - half, c.x + half),
                rng::uniform(rng, c.y - half, c.y + half),
                rng::uniform(rng, c.z - half, c.z + half),
            );
            if placed.iter().all(|q| (*q - p).norm() > min_d) {
                placed.push(p);
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(EngineError::Spawn {
                placed: k,
                requested: sp.n_agents,
                attempts: SPAWN_ATTEMPTS,
            });
        }
    }
    Ok(placed.into_iter().map(AgentState::at_rest).collect())
}

/// The map a config describes: the hand-authored file if given, otherwise a
/// generated field from the map stream of the seed.
pub fn build_map<T: Real>(cfg: &SimConfig<T>) -> Result<ObstacleMap<T>, MapError> {
    match &cfg.map.file {
        Some(path) => ObstacleMap::load(path),
        None => generate_map(cfg.map.bounds, cfg.map.density, cfg.map.radius_range, cfg.seed),
    }
}

/// States of all agents at one tick.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSample<T> {
    pub tick: u64,
    pub t: T,
    pub agents: Vec<AgentState<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Aborted { tick: u64, reason: String },
}

/// Everything a run produced.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
pub struct RunRecord<T: Real> {
    pub schema_version: u32,
    /// Effective inputs; `patches` holds the stream that was applied.
    pub scenario: Scenario<T>,
    pub map: ObstacleMap<T>,
    pub states: Vec<StateSample<T>>,
    pub metrics: Vec<MetricsFrame<T>>,
    pub ticks: u64,
    pub wall_seconds: f64,
    /// Wall-clock seconds per simulated second.
    pub real_time_factor: f64,
    pub status: RunStatus,
}

/// A live world.
#[derive(Clone, Debug)]
pub struct Simulation<T: Real> {
    scenario: Scenario<T>,
    params: SwarmParams<T>,
    controller: Controller<T>,
    map: ObstacleMap<T>,
    states: Vec<AgentState<T>>,
    accels: Vec<Vec3<T>>,
    tick: u64,
    /// Sensing graph of the current snapshot, if already built.
    graph: Option<SensingGraph>,
    pending: Vec<ParamPatch<T>>,
    applied: Vec<ParamPatch<T>>,
    last_frame: Option<MetricsFrame<T>>,
}

impl<T: Real> Simulation<T> {
    /// Validates the scenario, builds the map, spawns the swarm and applies
    /// the patches scheduled for tick 0.
    pub fn new(scenario: &Scenario<T>) -> Result<Self, EngineError> {
        let report = scenario.validate();
        if !report.is_valid() {
            return Err(EngineError::Config(report));
        }
        let map = build_map(&scenario.sim)?;
        Self::with_map(scenario, map)
    }

    /// As [`Simulation::new`] with an explicit map.
    pub fn with_map(scenario: &Scenario<T>, map: ObstacleMap<T>) -> Result<Self, EngineError> {
        let report = scenario.validate();
        if !report.is_valid() {
            return Err(EngineError::Config(report));
        }
        let mut rng = rng::stream(scenario.sim.seed, rng::SPAWN_STREAM);
        let states = spawn_swarm(&scenario.sim, &scenario.swarm, &mut rng)?;
        let mut pending = scenario.patches.clone();
        pending.sort_by_key(|p| p.tick);
        let mut base = scenario.clone();
        base.patches.clear();
        let mut sim = Self {
            params: scenario.swarm.clone(),
            controller: Controller::new(&scenario.swarm),
            accels: vec![Vec3::zeros(); states.len()],
            scenario: base,
            map,
            states,
            tick: 0,
            graph: None,
            pending,
            applied: Vec::new(),
            last_frame: None,
        };
        sim.apply_due_patches();
        Ok(sim)
    }

    pub fn scenario(&self) -> &Scenario<T> {
        &self.scenario
    }

    /// Current (possibly patched) swarm parameters.
    pub fn params(&self) -> &SwarmParams<T> {
        &self.params
    }

    pub fn map(&self) -> &ObstacleMap<T> {
        &self.map
    }

    pub fn states(&self) -> &[AgentState<T>] {
        &self.states
    }

    /// Inertial accelerations realized over the last tick.
    pub fn accelerations(&self) -> &[Vec3<T>] {
        &self.accels
    }

    /// Number of completed ticks.
    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Simulated time, `tick · dt`.
    pub fn time(&self) -> T {
        T::lit(self.tick as f64) * self.scenario.sim.dt
    }

    pub fn tick_count(&self) -> u64 {
        self.scenario.sim.tick_count()
    }

    pub fn is_finished(&self) -> bool {
        self.tick >= self.tick_count()
    }

    /// Patches applied so far, in application order.
    pub fn applied_patches(&self) -> &[ParamPatch<T>] {
        &self.applied
    }

    /// Most recent metrics frame, if metrics are enabled.
    pub fn last_frame(&self) -> Option<&MetricsFrame<T>> {
        self.last_frame.as_ref()
    }

    pub fn positions(&self) -> Vec<Vec3<T>> {
        self.states.iter().map(AgentState::position).collect()
    }

    pub fn kinematics(&self) -> Vec<Kinematics<T>> {
        self.states.iter().map(Kinematics::from).collect()
    }

    /// Validates a patch against the current parameters and queues it. A
    /// patch for the current tick boundary takes effect immediately.
    pub fn submit_patch(&mut self, patch: ParamPatch<T>) -> Result<(), EngineError> {
        if patch.tick < self.tick {
            return Err(EngineError::LatePatch {
                patch_tick: patch.tick,
                current: self.tick,
            });
        }
        let report = crate::config::validate_params(&patch.apply(&self.params));
        if !report.is_valid() {
            return Err(EngineError::Config(report));
        }
        let at = self.pending.partition_point(|p| p.tick <= patch.tick);
        self.pending.insert(at, patch);
        self.apply_due_patches();
        Ok(())
    }

    fn apply_due_patches(&mut self) {
        let due = self.pending.partition_point(|p| p.tick <= self.tick);
        if due == 0 {
            return;
        }
        for patch in self.pending.drain(..due) {
            self.params = patch.apply(&self.params);
            self.applied.push(patch);
        }
        self.controller = Controller::new(&self.params);
    }

    fn sensing_graph(&self, positions: &[Vec3<T>]) -> SensingGraph {
        build_graph_with(positions, &self.params.neighbors, self.scenario.sim.parallel)
    }

    /// Acceleration commands for the current snapshot.
    pub fn commands(&mut self) -> Vec<Vec3<T>> {
        let kin = self.kinematics();
        let graph = match self.graph.take() {
            Some(g) => g,
            None => self.sensing_graph(&self.positions()),
        };
        let controller = &self.controller;
        let map = &self.map;
        let cmd = |i: usize| controller.command_for(i, &kin, &graph, map);
        let out = if self.scenario.sim.parallel {
            (0..kin.len()).into_par_iter().map(cmd).collect()
        } else {
            (0..kin.len()).map(cmd).collect()
        };
        self.graph = Some(graph);
        out
    }

    /// Advances one tick. On a dynamics failure the world is left at the
    /// last good snapshot.
    pub fn step(&mut self) -> Result<Option<&MetricsFrame<T>>, EngineError> {
        let commands = self.commands();
        let sim = &self.scenario.sim;
        let dt = sim.dt;
        let v_max = self.params.v_max;
        let quad = &self.scenario.quad;
        let advance = |(s, a): (&AgentState<T>, &Vec3<T>)| -> Result<AgentState<T>, DynamicsError> {
            match sim.dynamics {
                DynamicsMode::PointMass => {
                    let next = step_point_mass(s, *a, dt, v_max);
                    check_sanity(&next, quad.sanity_bound).map(|_| next)
                }
                DynamicsMode::Quadcopter => step_quadcopter(s, *a, quad, dt, v_max),
            }
        };
        let results: Vec<Result<AgentState<T>, DynamicsError>> = if sim.parallel {
            self.states.par_iter().zip(commands.par_iter()).map(advance).collect()
        } else {
            self.states.iter().zip(commands.iter()).map(advance).collect()
        };
        let mut next = Vec::with_capacity(results.len());
        for (agent, r) in results.into_iter().enumerate() {
            match r {
                Ok(s) => next.push(s),
                Err(source) => {
                    return Err(EngineError::Dynamics {
                        tick: self.tick + 1,
                        agent,
                        source,
                    })
                }
            }
        }
        for ((a, old), new) in self.accels.iter_mut().zip(&self.states).zip(&next) {
            *a = (new.inertial_velocity() - old.inertial_velocity()) / dt;
        }
        self.states = next;
        self.tick += 1;
        self.graph = None;

        let stride = self.scenario.sim.metrics_stride as u64;
        let measured = stride > 0 && self.tick % stride == 0;
        if measured {
            let positions = self.positions();
            let graph = self.sensing_graph(&positions);
            let velocities: Vec<Vec3<T>> = self.states.iter().map(AgentState::inertial_velocity).collect();
            self.last_frame = Some(compute_frame(
                self.tick,
                self.time(),
                &positions,
                &velocities,
                &self.accels,
                &graph,
                &self.map,
                self.params.r_coll,
            ));
            self.graph = Some(graph);
        }
        self.apply_due_patches();
        Ok(if measured { self.last_frame.as_ref() } else { None })
    }

    /// Runs to the end, recording states and metrics per the config strides.
    pub fn run_to_end(mut self) -> RunRecord<T> {
        let stride = self.scenario.sim.effective_state_stride(self.states.len()) as u64;
        let mut states = vec![self.sample()];
        let mut metrics = Vec::new();
        let start = Instant::now();
        let mut status = RunStatus::Completed;
        while !self.is_finished() {
            match self.step() {
                Ok(frame) => {
                    if let Some(f) = frame {
                        metrics.push(f.clone());
                    }
                }
                Err(e) => {
                    status = RunStatus::Aborted {
                        tick: self.tick + 1,
                        reason: e.to_string(),
                    };
                    break;
                }
            }
            if self.tick % stride == 0 {
                states.push(self.sample());
            }
        }
        let wall_seconds = start.elapsed().as_secs_f64();
        let simulated = match status {
            RunStatus::Completed => self.scenario.sim.t_end.as_f64(),
            RunStatus::Aborted { .. } => self.time().as_f64(),
        };
        let mut scenario = self.scenario.clone();
        scenario.patches = self.applied.clone();
        RunRecord {
            schema_version: SCHEMA_VERSION,
            scenario,
            map: self.map,
            states,
            metrics,
            ticks: self.tick,
            wall_seconds,
            real_time_factor: if simulated > 0.0 { wall_seconds / simulated } else { f64::NAN },
            status,
        }
    }

    pub fn sample(&self) -> StateSample<T> {
        StateSample {
            tick: self.tick,
            t: self.time(),
            agents: self.states.clone(),
        }
    }
}

/// Builds a world from `scenario` and runs it to the end.
pub fn run<T: Real>(scenario: &Scenario<T>) -> Result<RunRecord<T>, EngineError> {
    Ok(Simulation::new(scenario)?.run_to_end())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::NeighborMode;

    fn small() -> Scenario<f64> {
        let mut s = Scenario::default();
        s.swarm.n_agents = 5;
        s.swarm.neighbors = NeighborMode::Topological { count: 3 };
        s.sim.t_end = 0.5;
        s.sim.map.density = 0.0;
        s
    }

    #[test]
    fn spawn_is_deterministic_and_separated() {
        let s = Scenario::<f64>::default();
        let a = spawn_swarm(&s.sim, &s.swarm, &mut rng::stream(3, rng::SPAWN_STREAM)).unwrap();
        let b = spawn_swarm(&s.sim, &s.swarm, &mut rng::stream(3, rng::SPAWN_STREAM)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 25);
    }

    #[test]
    fn spawn_fails_in_tiny_cube() {
        let mut s = Scenario::<f64>::default();
        s.sim.spawn.edge = 0.5;
        s.swarm.n_agents = 3;
        let err = spawn_swarm(&s.sim, &s.swarm, &mut rng::stream(1, rng::SPAWN_STREAM)).unwrap_err();
        assert!(matches!(err, EngineError::Spawn { placed: 1, .. }));
    }

    #[test]
    fn run_records_every_tick() {
        let r = run(&small()).unwrap();
        assert_eq!(r.ticks, 50);
        assert_eq!(r.metrics.len(), 50);
        assert_eq!(r.states.len(), 51);
        assert_eq!(r.status, RunStatus::Completed);
        assert_eq!(r.metrics[9].t, 10.0 * 0.01);
    }

    #[test]
    fn late_patch_rejected() {
        let mut sim = Simulation::new(&small()).unwrap();
        sim.step().unwrap();
        sim.step().unwrap();
        let err = sim.submit_patch(ParamPatch::at(1)).unwrap_err();
        assert!(matches!(err, EngineError::LatePatch { .. }));
    }

    #[test]
    fn invalid_patch_rejected_and_ignored() {
        let mut sim = Simulation::new(&small()).unwrap();
        let mut p = ParamPatch::at(0);
        p.d_ref = Some(0.5);
        assert!(matches!(sim.submit_patch(p), Err(EngineError::Config(_))));
        assert!(sim.applied_patches().is_empty());
        assert_eq!(sim.params().d_ref, 25.0);
    }

    #[test]
    fn patch_applies_at_boundary() {
        let mut s = small();
        let mut p = ParamPatch::at(10);
        p.v_ref = Some(2.0);
        s.patches.push(p);
        let mut sim = Simulation::new(&s).unwrap();
        for _ in 0..9 {
            sim.step().unwrap();
        }
        assert_eq!(sim.params().v_ref, 6.0);
        sim.step().unwrap();
        assert_eq!(sim.params().v_ref, 2.0);
    }
}
