//! Scenario loading and command-line overrides. Every flag maps onto one
//! config-file key, and flags win over the file.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use swarmsim::{Algorithm, DynamicsMode, NeighborMode, ScenarioF64};

use crate::{CliError, OUT_DIR_ENV};

/// Radius used when switching to metric neighbors without `--radius`.
pub const DEFAULT_METRIC_RADIUS: f64 = 150.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NeighborKind {
    Metric,
    Topological,
}

#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    /// Scenario file (TOML).
    #[arg(long, short = 'c')]
    pub config: Option<PathBuf>,
    /// `swarm.algorithm`: olfati_saber | vasarhelyi.
    #[arg(long)]
    pub algorithm: Option<Algorithm>,
    /// `swarm.n_agents`; an inherited topological count is clamped to N−1.
    #[arg(long)]
    pub agents: Option<usize>,
    /// `sim.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// `sim.dt` (s).
    #[arg(long)]
    pub dt: Option<f64>,
    /// `sim.t_end` (s).
    #[arg(long)]
    pub t_end: Option<f64>,
    /// `sim.dynamics`: point_mass | quadcopter.
    #[arg(long)]
    pub dynamics: Option<DynamicsMode>,
    /// `swarm.neighbors.mode`.
    #[arg(long, value_enum)]
    pub neighbor_mode: Option<NeighborKind>,
    /// `swarm.neighbors.radius` (m), metric mode only.
    #[arg(long)]
    pub radius: Option<f64>,
    /// `swarm.neighbors.count`, topological mode only.
    #[arg(long)]
    pub nn: Option<usize>,
    /// `sim.map.density` (obstacles per m²).
    #[arg(long)]
    pub map_density: Option<f64>,
    /// `sim.parallel`.
    #[arg(long)]
    pub parallel: bool,
    /// `sim.out`: record directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Overrides {
    /// Loads the config (or defaults) and applies the flags. Returns the
    /// scenario, not yet validated, and the record directory, if any was
    /// requested. `sim.out` is cleared so the record does not depend on
    /// where it is written.
    pub fn scenario(&self) -> Result<(ScenarioF64, Option<PathBuf>), CliError> {
        let mut s = match &self.config {
            Some(path) => {
                let mut s = ScenarioF64::load(path)?;
                let base = path.parent().unwrap_or(Path::new("."));
                if let Some(f) = &s.sim.map.file {
                    if f.is_relative() {
                        s.sim.map.file = Some(base.join(f));
                    }
                }
                s
            }
            None => ScenarioF64::default(),
        };
        self.apply(&mut s)?;
        let out = self.out.clone().or_else(|| s.sim.out.take());
        s.sim.out = None;
        Ok((s, out))
    }

    pub fn apply(&self, s: &mut ScenarioF64) -> Result<(), CliError> {
        if let Some(a) = self.algorithm {
            s.swarm.algorithm = a;
        }
        if let Some(n) = self.agents {
            s.swarm.n_agents = n;
        }
        if let Some(seed) = self.seed {
            s.sim.seed = seed;
        }
        if let Some(dt) = self.dt {
            s.sim.dt = dt;
        }
        if let Some(t) = self.t_end {
            s.sim.t_end = t;
        }
        if let Some(d) = self.dynamics {
            s.sim.dynamics = d;
        }
        if let Some(d) = self.map_density {
            s.sim.map.density = d;
        }
        if self.parallel {
            s.sim.parallel = true;
        }
        let kind = self.neighbor_mode.unwrap_or(match s.swarm.neighbors {
            NeighborMode::Metric { .. } => NeighborKind::Metric,
            NeighborMode::Topological { .. } => NeighborKind::Topological,
        });
        s.swarm.neighbors = match (kind, s.swarm.neighbors) {
            (NeighborKind::Metric, _) if self.nn.is_some() => {
                return Err(CliError::Usage("--nn applies to topological neighbors".into()))
            }
            (NeighborKind::Topological, _) if self.radius.is_some() => {
                return Err(CliError::Usage("--radius applies to metric neighbors".into()))
            }
            (NeighborKind::Metric, NeighborMode::Metric { radius }) => NeighborMode::Metric {
                radius: self.radius.unwrap_or(radius),
            },
            (NeighborKind::Metric, _) => NeighborMode::Metric {
                radius: self.radius.unwrap_or(DEFAULT_METRIC_RADIUS),
            },
            (NeighborKind::Topological, NeighborMode::Topological { count }) => NeighborMode::Topological {
                count: self.nn.unwrap_or(count),
            },
            (NeighborKind::Topological, _) => NeighborMode::Topological {
                count: self.nn.unwrap_or(10),
            },
        };
        // shrinking the swarm with --agents also shrinks an inherited count
        if let (Some(n), None, NeighborMode::Topological { count }) = (self.agents, self.nn, &mut s.swarm.neighbors) {
            *count = (*count).min(n.saturating_sub(1)).max(1);
        }
        Ok(())
    }
}

/// Record directory for `s` when none was requested:
/// `$SWARMSIM_OUT_DIR/<algorithm>-n<N>-s<seed>`, with `runs` as the default
/// parent.
pub fn default_out_dir(s: &ScenarioF64) -> PathBuf {
    let parent = std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"));
    parent.join(format!("{}-n{}-s{}", s.swarm.algorithm, s.swarm.n_agents, s.sim.seed))
}
