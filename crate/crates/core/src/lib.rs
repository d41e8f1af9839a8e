//! Deterministic headless drone-swarm simulator.
//!
//! Two decentralized flocking laws (Olfati-Saber and Vasarhelyi), point-mass
//! and 12-state quadcopter dynamics, cylindrical obstacle fields and five
//! swarm performance metrics. Every numeric routine is generic over the
//! scalar type through [`Real`]; the `*F64` / `*F32` aliases below pin the
//! common choices.

pub mod config;
pub mod dynamics;
pub mod engine;
pub mod environment;
pub mod flocking;
pub mod metrics;
pub mod presets;
pub mod real;
pub mod record;
pub mod rng;
pub mod types;

pub use config::{
    validate_config, validate_params, Algorithm, ConfigError, DynamicsMode, MapConfig, NeighborMode, ParamPatch,
    merge_partial, Scenario, SimConfig, SpawnCube, SwarmParams, ValidationReport, Violation,
};
pub use dynamics::{autopilot_velocity, step_point_mass, step_quadcopter, Actuation, DynamicsError, QuadParams};
pub use engine::{run, spawn_swarm, EngineError, RunRecord, RunStatus, Simulation, StateSample, SCHEMA_VERSION};
pub use environment::{
    agent_obstacle_distances, generate_map, nearest_surface_point, MapError, Obstacle, ObstacleMap, Rect,
};
pub use flocking::{build_graph, Controller, SensingGraph, VirtualAgent};
pub use metrics::MetricsFrame;
pub use real::Real;
pub use types::{AgentState, Kinematics, Vec3};

pub type Vec3F64 = Vec3<f64>;
pub type AgentStateF64 = AgentState<f64>;
pub type ScenarioF64 = Scenario<f64>;
pub type SwarmParamsF64 = SwarmParams<f64>;
pub type SimConfigF64 = SimConfig<f64>;
pub type ObstacleMapF64 = ObstacleMap<f64>;
pub type MetricsFrameF64 = MetricsFrame<f64>;
pub type ParamPatchF64 = ParamPatch<f64>;
pub type SimulationF64 = Simulation<f64>;
pub type RunRecordF64 = RunRecord<f64>;

pub type Vec3F32 = Vec3<f32>;
pub type AgentStateF32 = AgentState<f32>;
pub type ScenarioF32 = Scenario<f32>;
pub type SimulationF32 = Simulation<f32>;
