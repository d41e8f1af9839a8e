//! Simulation and swarm parameters, the scenario file format, and validation.
//!
//! A scenario is stored as TOML. Every field has a default taken from the
//! obstacle-field comparison scenario, so a file only needs the keys it
//! changes.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{DeserializeOwned, Error as _};
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::dynamics::QuadParams;
use crate::environment::Rect;
use crate::flocking::{OlfatiSaberGains, VasarhelyiGains};
use crate::real::Real;
use crate::types::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    OlfatiSaber,
    Vasarhelyi,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::OlfatiSaber, Algorithm::Vasarhelyi];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::OlfatiSaber => "olfati_saber",
            Algorithm::Vasarhelyi => "vasarhelyi",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "olfati_saber" => Ok(Algorithm::OlfatiSaber),
            "vasarhelyi" => Ok(Algorithm::Vasarhelyi),
            other => Err(format!(
                "unknown algorithm {other:?} (expected olfati_saber or vasarhelyi)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicsMode {
    PointMass,
    Quadcopter,
}

impl DynamicsMode {
    pub fn name(&self) -> &'static str {
        match self {
            DynamicsMode::PointMass => "point_mass",
            DynamicsMode::Quadcopter => "quadcopter",
        }
    }
}

impl fmt::Display for DynamicsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DynamicsMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "point_mass" => Ok(DynamicsMode::PointMass),
            "quadcopter" => Ok(DynamicsMode::Quadcopter),
            other => Err(format!(
                "unknown dynamics mode {other:?} (expected point_mass or quadcopter)"
            )),
        }
    }
}

/// Neighbor selection rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NeighborMode<T> {
    /// Every agent within `radius` meters.
    Metric { radius: T },
    /// The `count` nearest agents.
    Topological { count: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
#[serde(default)]
pub struct SwarmParams<T: Real> {
    pub n_agents: usize,
    pub algorithm: Algorithm,
    pub neighbors: NeighborMode<T>,
    /// Desired inter-agent distance (m).
    pub d_ref: T,
    /// Preferred speed (m/s).
    pub v_ref: T,
    /// Migration velocity (m/s, inertial).
    pub u_mig: Vec3<T>,
    /// Agent collision radius (m).
    pub r_coll: T,
    pub v_max: T,
    pub a_max: T,
    /// May be partial in a config file; missing gains come from the preset.
    #[serde(deserialize_with = "partial_gains")]
    pub olfati_saber: OlfatiSaberGains<T>,
    #[serde(deserialize_with = "partial_gains")]
    pub vasarhelyi: VasarhelyiGains<T>,
}

impl<T: Real> Default for SwarmParams<T> {
    fn default() -> Self {
        Self {
            n_agents: 25,
            algorithm: Algorithm::OlfatiSaber,
            neighbors: NeighborMode::Topological { count: 10 },
            d_ref: T::lit(25.0),
            v_ref: T::lit(6.0),
            u_mig: Vec3::from_f64(6.0, 0.0, 0.0),
            r_coll: T::lit(0.5),
            v_max: T::lit(10.0),
            a_max: T::lit(10.0),
            olfati_saber: OlfatiSaberGains::default(),
            vasarhelyi: VasarhelyiGains::default(),
        }
    }
}

/// Overlays the keys of `update` on `base`. Unknown keys are rejected.
pub fn merge_partial<G: Serialize + DeserializeOwned>(
    base: &G,
    update: &serde_json::Map<String, serde_json::Value>,
) -> Result<G, String> {
    let mut value = serde_json::to_value(base).map_err(|e| e.to_string())?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| "base does not serialize to a table".to_string())?;
    for (k, v) in update {
        if !obj.contains_key(k) {
            return Err(format!("unknown key {k:?}"));
        }
        obj.insert(k.clone(), v.clone());
    }
    serde_json::from_value(value).map_err(|e| e.to_string())
}

fn partial_gains<'de, D, G>(d: D) -> Result<G, D::Error>
where
    D: Deserializer<'de>,
    G: Default + Serialize + DeserializeOwned,
{
    let update = serde_json::Map::deserialize(d)?;
    merge_partial(&G::default(), &update).map_err(D::Error::custom)
}

/// Axis-aligned spawn cube.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpawnCube<T> {
    pub center: Vec3<T>,
    pub edge: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
#[serde(default)]
pub struct MapConfig<T: Real> {
    pub bounds: Rect<T>,
    /// Obstacles per square meter; zero disables generation.
    pub density: T,
    pub radius_range: [T; 2],
    /// Hand-authored map; takes precedence over generation.
    pub file: Option<PathBuf>,
}

impl<T: Real> Default for MapConfig<T> {
    fn default() -> Self {
        Self {
            bounds: Rect::new(T::lit(100.0), T::lit(350.0), T::lit(-100.0), T::lit(100.0)),
            density: T::lit(4e-4),
            radius_range: [T::lit(3.0), T::lit(8.0)],
            file: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
#[serde(default)]
pub struct SimConfig<T: Real> {
    /// Timestep (s).
    pub dt: T,
    /// Simulated duration (s).
    pub t_end: T,
    pub seed: u64,
    pub dynamics: DynamicsMode,
    pub spawn: SpawnCube<T>,
    pub map: MapConfig<T>,
    /// Compute metrics every `metrics_stride` ticks; 0 disables metrics.
    pub metrics_stride: usize,
    /// Record agent states every `state_stride` ticks; `None` picks 1 for
    /// swarms up to 64 agents and 10 above.
    pub state_stride: Option<usize>,
    /// Fan per-agent work out over worker threads.
    pub parallel: bool,
    /// Run record output directory.
    pub out: Option<PathBuf>,
}

impl<T: Real> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            dt: T::lit(0.01),
            t_end: T::lit(100.0),
            seed: 1,
            dynamics: DynamicsMode::PointMass,
            spawn: SpawnCube {
                center: Vec3::from_f64(0.0, 0.0, -50.0),
                edge: T::lit(50.0),
            },
            map: MapConfig::default(),
            metrics_stride: 1,
            state_stride: None,
            parallel: false,
            out: None,
        }
    }
}

impl<T: Real> SimConfig<T> {
    /// Number of ticks in a run, `round(t_end / dt)`.
    pub fn tick_count(&self) -> u64 {
        (self.t_end / self.dt).round().to_u64().unwrap_or(0)
    }

    pub fn effective_state_stride(&self, n_agents: usize) -> usize {
        self.state_stride
            .unwrap_or(if n_agents <= 64 { 1 } else { 10 })
    }
}

/// Mid-run change of the mutable swarm parameters, applied at the boundary
/// before tick `tick` is computed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
pub struct ParamPatch<T: Real> {
    pub tick: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_ref: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_mig: Option<Vec3<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_ref: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub olfati_saber: Option<OlfatiSaberGains<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vasarhelyi: Option<VasarhelyiGains<T>>,
}

impl<T: Real> ParamPatch<T> {
    pub fn at(tick: u64) -> Self {
        Self {
            tick,
            v_ref: None,
            u_mig: None,
            d_ref: None,
            olfati_saber: None,
            vasarhelyi: None,
        }
    }

    pub fn apply(&self, sp: &SwarmParams<T>) -> SwarmParams<T> {
        let mut out = sp.clone();
        if let Some(v) = self.v_ref {
            out.v_ref = v;
        }
        if let Some(u) = self.u_mig {
            out.u_mig = u;
        }
        if let Some(d) = self.d_ref {
            out.d_ref = d;
        }
        if let Some(g) = &self.olfati_saber {
            out.olfati_saber = g.clone();
        }
        if let Some(g) = &self.vasarhelyi {
            out.vasarhelyi = g.clone();
        }
        out
    }
}

/// Complete input of one run: what the config file holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
#[serde(default)]
pub struct Scenario<T: Real> {
    pub sim: SimConfig<T>,
    pub swarm: SwarmParams<T>,
    pub quad: QuadParams<T>,
    #[serde(rename = "patch", skip_serializing_if = "Vec::is_empty")]
    pub patches: Vec<ParamPatch<T>>,
}

impl<T: Real> Default for Scenario<T> {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            swarm: SwarmParams::default(),
            quad: QuadParams::default(),
            patches: Vec::new(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize config: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid configuration:\n{0}")]
    Invalid(ValidationReport),
}

impl<T: Real> Scenario<T> {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = validate_config(&self.sim, &self.swarm);
        report.extend(self.quad.validate());
        for p in &self.patches {
            let patched = p.apply(&self.swarm);
            for v in validate_params(&patched).violations {
                report.push(format!("patch@{}.{}", p.tick, v.field), v.message);
            }
        }
        report
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// List of violated invariants; empty means valid.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            field: field.into(),
            message: message.into(),
        });
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }

    pub fn mentions(&self, field: &str) -> bool {
        self.violations.iter().any(|v| v.field == field)
    }

    pub fn into_result(self) -> Result<(), ConfigError> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

fn finite_nonneg<T: Real>(report: &mut ValidationReport, field: &str, x: T) {
    if !(x.is_finite() && x >= T::zero()) {
        report.push(field, format!("must be finite and >= 0, got {x}"));
    }
}

/// Checks the swarm-parameter invariants alone (used for patches).
pub fn validate_params<T: Real>(sp: &SwarmParams<T>) -> ValidationReport {
    let mut r = ValidationReport::default();
    let n = sp.n_agents;
    if n < 1 {
        r.push("swarm.n_agents", "must be >= 1");
    }
    match sp.neighbors {
        NeighborMode::Metric { radius } => {
            if !(radius > T::zero() && radius.is_finite()) {
                r.push("swarm.neighbors.radius", format!("must be > 0, got {radius}"));
            }
        }
        NeighborMode::Topological { count } => {
            // a lone agent has no neighbors to count
            if n > 1 && !(1..n).contains(&count) {
                r.push(
                    "swarm.neighbors.count",
                    format!("topological count must be ≤ N−1 and ≥ 1 (N = {n}, count = {count})"),
                );
            }
        }
    }
    if !(sp.r_coll > T::zero()) {
        r.push("swarm.r_coll", format!("must be > 0, got {}", sp.r_coll));
    }
    if !(sp.d_ref > sp.r_coll + sp.r_coll) {
        r.push(
            "swarm.d_ref",
            format!(
                "d_ref ≤ 2·r_coll (d_ref = {}, r_coll = {})",
                sp.d_ref, sp.r_coll
            ),
        );
    }
    if !(sp.v_ref > T::zero()) {
        r.push("swarm.v_ref", format!("must be > 0, got {}", sp.v_ref));
    }
    if !(sp.v_max >= sp.v_ref) || !sp.v_max.is_finite() {
        r.push(
            "swarm.v_max",
            format!("must be finite and >= v_ref (v_max = {}, v_ref = {})", sp.v_max, sp.v_ref),
        );
    }
    if !(sp.a_max > T::zero()) || !sp.a_max.is_finite() {
        r.push("swarm.a_max", format!("must be finite and > 0, got {}", sp.a_max));
    }
    if !sp.u_mig.is_finite() {
        r.push("swarm.u_mig", "must be finite");
    }
    r.extend(sp.olfati_saber.validate());
    r.extend(sp.vasarhelyi.validate());
    r
}

/// Checks every invariant of the simulation and swarm configuration. Pure.
pub fn validate_config<T: Real>(cfg: &SimConfig<T>, sp: &SwarmParams<T>) -> ValidationReport {
    let mut r = validate_params(sp);
    if !(cfg.dt > T::zero() && cfg.dt <= T::lit(0.1)) {
        r.push("sim.dt", format!("must satisfy 0 < dt ≤ 0.1 s, got {}", cfg.dt));
    }
    if !(cfg.t_end >= cfg.dt) || !cfg.t_end.is_finite() {
        r.push("sim.t_end", format!("must be finite and >= dt, got {}", cfg.t_end));
    }
    if !cfg.spawn.center.is_finite() {
        r.push("sim.spawn.center", "must be finite");
    }
    if !(cfg.spawn.edge >= T::zero()) || !cfg.spawn.edge.is_finite() {
        r.push("sim.spawn.edge", format!("must be finite and >= 0, got {}", cfg.spawn.edge));
    } else if sp.n_agents > 1 {
        // each agent needs a cube twice the minimum separation on a side
        let cell = T::lit(4.0) * sp.r_coll;
        let needed = T::from_count(sp.n_agents) * cell * cell * cell;
        if cfg.spawn.edge * cfg.spawn.edge * cfg.spawn.edge < needed {
            r.push(
                "sim.spawn.edge",
                format!(
                    "spawn cube too small for {} agents with r_coll = {}",
                    sp.n_agents, sp.r_coll
                ),
            );
        }
    }
    let m = &cfg.map;
    finite_nonneg(&mut r, "sim.map.density", m.density);
    if m.density > T::zero() && m.file.is_none() {
        let [lo, hi] = m.radius_range;
        if !(lo > T::zero() && lo <= hi) {
            r.push(
                "sim.map.radius_range",
                format!("must satisfy 0 < r_min ≤ r_max, got [{lo}, {hi}]"),
            );
        }
        if !(m.bounds.n_max > m.bounds.n_min && m.bounds.e_max > m.bounds.e_min) {
            r.push("sim.map.bounds", "must have positive extent");
        }
    }
    if cfg.state_stride == Some(0) {
        r.push("sim.state_stride", "must be >= 1");
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn usecase() -> (SimConfig<f64>, SwarmParams<f64>) {
        (SimConfig::default(), SwarmParams::default())
    }

    #[test]
    fn usecase_parameters_are_valid() {
        let (mut cfg, sp) = usecase();
        cfg.dt = 0.01;
        cfg.t_end = 100.0;
        assert_eq!(sp.n_agents, 25);
        assert_eq!(sp.neighbors, NeighborMode::Topological { count: 10 });
        assert_eq!(sp.olfati_saber.r_alpha, 150.0);
        let report = validate_config(&cfg, &sp);
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn topological_count_equal_to_n_is_invalid() {
        let (cfg, mut sp) = usecase();
        sp.neighbors = NeighborMode::Topological { count: sp.n_agents };
        let report = validate_config(&cfg, &sp);
        assert!(report.mentions("swarm.neighbors.count"));
        assert!(report.to_string().contains("topological count must be ≤ N−1"));
    }

    #[test]
    fn d_ref_must_exceed_collision_diameter() {
        let (cfg, mut sp) = usecase();
        sp.d_ref = 1.0;
        sp.r_coll = 0.6;
        let report = validate_config(&cfg, &sp);
        assert!(report.mentions("swarm.d_ref"), "{report}");
        assert!(report.to_string().contains("d_ref ≤ 2·r_coll"));
    }

    #[test]
    fn single_agent_topological_is_valid() {
        let (cfg, mut sp) = usecase();
        sp.n_agents = 1;
        assert!(validate_config(&cfg, &sp).is_valid());
    }

    #[test]
    fn timestep_bounds() {
        let (mut cfg, sp) = usecase();
        cfg.dt = 0.2;
        assert!(validate_config(&cfg, &sp).mentions("sim.dt"));
        cfg.dt = 0.0;
        assert!(validate_config(&cfg, &sp).mentions("sim.dt"));
        cfg.dt = 0.01;
        cfg.t_end = 0.001;
        assert!(validate_config(&cfg, &sp).mentions("sim.t_end"));
    }

    #[test]
    fn spawn_cube_capacity() {
        let (mut cfg, mut sp) = usecase();
        cfg.spawn.edge = 2.0;
        sp.n_agents = 25;
        assert!(validate_config(&cfg, &sp).mentions("sim.spawn.edge"));
    }

    #[test]
    fn validation_is_pure() {
        let (cfg, mut sp) = usecase();
        sp.v_max = 1.0;
        let a = validate_config(&cfg, &sp);
        let b = validate_config(&cfg, &sp);
        assert_eq!(a, b);
        assert!(!a.is_valid());
    }

    #[test]
    fn patch_applies_only_set_fields() {
        let sp = SwarmParams::<f64>::default();
        let mut p = ParamPatch::at(10);
        p.v_ref = Some(4.0);
        let out = p.apply(&sp);
        assert_eq!(out.v_ref, 4.0);
        assert_eq!(out.d_ref, sp.d_ref);
    }

    #[test]
    fn partial_toml_takes_defaults() {
        let s: Scenario<f64> = Scenario::from_toml(
            "[sim]\nseed = 7\n[swarm]\nn_agents = 5\nalgorithm = \"vasarhelyi\"\n[swarm.neighbors]\nmode = \"metric\"\nradius = 150.0\n",
        )
        .unwrap();
        assert_eq!(s.sim.seed, 7);
        assert_eq!(s.swarm.n_agents, 5);
        assert_eq!(s.swarm.algorithm, Algorithm::Vasarhelyi);
        assert_eq!(s.swarm.neighbors, NeighborMode::Metric { radius: 150.0 });
        assert_eq!(s.sim.dt, 0.01);
    }

    #[test]
    fn toml_round_trip() {
        let mut s = Scenario::<f64>::default();
        let mut p = ParamPatch::at(100);
        p.u_mig = Some(Vec3::new(0.0, 6.0, 0.0));
        s.patches.push(p);
        let text = s.to_toml().unwrap();
        let back = Scenario::<f64>::from_toml(&text).unwrap();
        assert_eq!(back, s);
    }
}
