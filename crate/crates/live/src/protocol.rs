//! Wire format. Every message is one JSON text frame with a `type` tag.
//!
//! Server to client: `snapshot`, `frame`, `ack`, `error`.
//! Client to server: `param_patch`, `pause`, `resume`, `reset`, `set_rate`.

use serde::{Deserialize, Serialize};
use swarmsim::{MetricsFrameF64, ObstacleMapF64, ScenarioF64, Simulation, Vec3F64, Violation};

/// Bumped whenever a message changes shape.
pub const PROTOCOL_VERSION: u32 = 1;

/// Per-agent position and velocity, NED, in agent-id order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentView {
    pub p: Vec3F64,
    pub v: Vec3F64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapView {
    pub digest: String,
    pub bounds: [f64; 4],
    /// `[center_n, center_e, radius]` per obstacle.
    pub obstacles: Vec<[f64; 3]>,
}

impl MapView {
    pub fn of(map: &ObstacleMapF64) -> Self {
        let b = map.bounds;
        Self {
            digest: map.digest(),
            bounds: [b.n_min, b.n_max, b.e_min, b.e_max],
            obstacles: map
                .obstacles
                .iter()
                .map(|o| [o.center_n, o.center_e, o.radius])
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub version: u32,
    /// Incremented by every `reset`; ticks restart at 0 in a new epoch.
    pub epoch: u64,
    pub tick: u64,
    pub t: f64,
    pub paused: bool,
    pub ticks_per_second: f64,
    /// Effective scenario, including the patches applied so far.
    pub scenario: ScenarioF64,
    pub map: MapView,
    pub agents: Vec<AgentView>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub version: u32,
    pub epoch: u64,
    pub tick: u64,
    pub t: f64,
    pub paused: bool,
    pub finished: bool,
    pub map_digest: String,
    pub agents: Vec<AgentView>,
    /// Metrics of exactly this tick; absent before the first step or when
    /// metrics are disabled.
    pub metrics: Option<MetricsFrameF64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Snapshot(Snapshot),
    Frame(Frame),
    Ack {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<u64>,
        control: String,
        /// Tick boundary at which the control took effect.
        tick: u64,
        epoch: u64,
    },
    Error {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<u64>,
        message: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        violations: Vec<Violation>,
    },
}

/// Parameter change requested by a client. Gain blocks may be partial: the
/// given keys are merged over the current gains.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchRequest {
    /// Tick boundary to apply at; omitted means the next one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tick: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_ref: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_mig: Option<Vec3F64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_ref: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub olfati_saber: Option<serde_json::Map<String, serde_json::Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vasarhelyi: Option<serde_json::Map<String, serde_json::Value>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    ParamPatch {
        #[serde(default)]
        id: Option<u64>,
        patch: PatchRequest,
    },
    Pause {
        #[serde(default)]
        id: Option<u64>,
    },
    Resume {
        #[serde(default)]
        id: Option<u64>,
    },
    Reset {
        #[serde(default)]
        id: Option<u64>,
        /// New RNG seed; omitted keeps the configured one.
        #[serde(default)]
        seed: Option<u64>,
    },
    SetRate {
        #[serde(default)]
        id: Option<u64>,
        ticks_per_second: f64,
    },
}

impl ClientMessage {
    pub fn id(&self) -> Option<u64> {
        match self {
            ClientMessage::ParamPatch { id, .. }
            | ClientMessage::Pause { id }
            | ClientMessage::Resume { id }
            | ClientMessage::Reset { id, .. }
            | ClientMessage::SetRate { id, .. } => *id,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClientMessage::ParamPatch { .. } => "param_patch",
            ClientMessage::Pause { .. } => "pause",
            ClientMessage::Resume { .. } => "resume",
            ClientMessage::Reset { .. } => "reset",
            ClientMessage::SetRate { .. } => "set_rate",
        }
    }
}

pub(crate) fn agents_of(sim: &Simulation<f64>) -> Vec<AgentView> {
    sim.states()
        .iter()
        .map(|s| AgentView {
            p: s.position(),
            v: s.inertial_velocity(),
        })
        .collect()
}
