//! Real-time-factor sweep.
//!
//! Each cell runs one headless simulation of `t_end` simulated seconds and
//! reports RTF = wall seconds / simulated seconds, timed around the tick loop
//! only: world construction, spawning and output are outside the timed scope.
//! Metrics are off unless `--with-metrics` is given, and only the first and
//! last states are kept. Cells run one after another.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use swarmsim::{run, Algorithm, DynamicsMode, NeighborMode, RunStatus, ScenarioF64};

use crate::overrides::Overrides;
use crate::CliError;

pub const DEFAULT_SIZES: [usize; 10] = [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024];
pub const DEFAULT_DURATION: f64 = 20.0;
/// Swarm size the default spawn cube is sized for.
const SPAWN_REFERENCE_N: f64 = 25.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, clap::Args)]
pub struct BenchArgs {
    /// Base scenario; the sweep replaces size, algorithm and dynamics, and
    /// `--t-end` defaults to 20 s.
    #[command(flatten)]
    pub overrides: Overrides,
    /// Swarm sizes (each ≥ 2).
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIZES)]
    pub sizes: Vec<usize>,
    /// Dynamics modes; both by default.
    #[arg(long, value_delimiter = ',')]
    pub modes: Vec<DynamicsMode>,
    /// Algorithms; both by default.
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Vec<Algorithm>,
    /// Compute metrics every tick inside the timed loop.
    #[arg(long)]
    pub with_metrics: bool,
    /// Runs per cell; the fastest is reported.
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub n: usize,
    pub dynamics: DynamicsMode,
    pub algorithm: Algorithm,
    pub ticks: u64,
    pub sim_seconds: f64,
    pub wall_seconds: Option<f64>,
    pub rtf: Option<f64>,
    pub ok: bool,
    pub error: Option<String>,
}

pub const CELL_COLUMNS: [&str; 9] = [
    "n",
    "dynamics",
    "algorithm",
    "ticks",
    "sim_seconds",
    "wall_seconds",
    "rtf",
    "ok",
    "error",
];

impl BenchCell {
    fn row(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        vec![
            self.n.to_string(),
            self.dynamics.to_string(),
            self.algorithm.to_string(),
            self.ticks.to_string(),
            self.sim_seconds.to_string(),
            opt(self.wall_seconds),
            opt(self.rtf),
            self.ok.to_string(),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

/// Scenario of one cell: `base` resized to `n` agents.
pub fn cell_scenario(base: &ScenarioF64, n: usize, dynamics: DynamicsMode, algorithm: Algorithm, with_metrics: bool) -> ScenarioF64 {
    let mut s = base.clone();
    s.swarm.n_agents = n;
    s.swarm.algorithm = algorithm;
    s.sim.dynamics = dynamics;
    if let NeighborMode::Topological { count } = &mut s.swarm.neighbors {
        *count = (*count).min(n.saturating_sub(1)).max(1);
    }
    // keep spawn density constant for large swarms
    let scale = (n as f64 / SPAWN_REFERENCE_N).cbrt().max(1.0);
    s.sim.spawn.edge *= scale;
    s.sim.spawn.center.z = s.sim.spawn.center.z.min(-(s.sim.spawn.edge / 2.0 + 5.0));
    if !with_metrics {
        s.sim.metrics_stride = 0;
    }
    s.sim.state_stride = Some(s.sim.tick_count().max(1) as usize);
    s
}

fn failed(mut cell: BenchCell, error: String) -> BenchCell {
    cell.ok = false;
    cell.error = Some(error);
    cell
}

/// Runs one cell `repeat` times and keeps the fastest. Failures of any kind,
/// panics included, are captured in the cell.
pub fn run_cell(s: &ScenarioF64, repeat: usize) -> BenchCell {
    let cell = BenchCell {
        n: s.swarm.n_agents,
        dynamics: s.sim.dynamics,
        algorithm: s.swarm.algorithm,
        ticks: 0,
        sim_seconds: s.sim.t_end,
        wall_seconds: None,
        rtf: None,
        ok: true,
        error: None,
    };
    if s.swarm.n_agents < 2 {
        return failed(cell, "bench sizes must be ≥ 2".into());
    }
    if let Err(e) = s.validate().into_result() {
        return failed(cell, e.to_string());
    }
    let mut best: Option<BenchCell> = None;
    for _ in 0..repeat.max(1) {
        let outcome = catch_unwind(AssertUnwindSafe(|| run(s)));
        let record = match outcome {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => return failed(cell, e.to_string()),
            Err(panic) => {
                let msg = panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                return failed(cell, format!("panicked: {msg}"));
            }
        };
        if let RunStatus::Aborted { tick, reason } = &record.status {
            let mut c = failed(cell, format!("aborted at tick {tick}: {reason}"));
            c.ticks = record.ticks;
            return c;
        }
        let this = BenchCell {
            ticks: record.ticks,
            wall_seconds: Some(record.wall_seconds),
            rtf: Some(record.real_time_factor),
            ..cell.clone()
        };
        if best.as_ref().map_or(true, |b| this.wall_seconds < b.wall_seconds) {
            best = Some(this);
        }
    }
    best.expect("at least one repeat")
}

/// True when RTF never decreases with N within each (dynamics, algorithm)
/// series; failed cells break monotonicity.
pub fn rtf_monotone(cells: &[BenchCell]) -> bool {
    let mut keys: Vec<(DynamicsMode, Algorithm)> = cells.iter().map(|c| (c.dynamics, c.algorithm)).collect();
    keys.dedup();
    keys.iter().all(|&(d, a)| {
        let mut series: Vec<&BenchCell> = cells.iter().filter(|c| c.dynamics == d && c.algorithm == a).collect();
        series.sort_by_key(|c| c.n);
        series
            .windows(2)
            .all(|w| matches!((w[0].rtf, w[1].rtf), (Some(x), Some(y)) if y >= x))
    })
}

pub fn write_table(cells: &[BenchCell], format: TableFormat, out: &mut dyn Write) -> Result<(), CliError> {
    match format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let err = |e: csv::Error| CliError::Other(format!("bench table: {e}"));
            w.write_record(CELL_COLUMNS).map_err(err)?;
            for c in cells {
                w.write_record(c.row()).map_err(err)?;
            }
            w.flush().map_err(CliError::io("bench table"))
        }
        TableFormat::Json => {
            let text = serde_json::to_string_pretty(cells).expect("cells serialize");
            writeln!(out, "{text}").map_err(CliError::io("bench table"))
        }
    }
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<Vec<BenchCell>, CliError> {
    let (mut base, table_path) = args.overrides.scenario()?;
    if args.overrides.t_end.is_none() {
        base.sim.t_end = DEFAULT_DURATION;
    }
    if let Some(&n) = args.sizes.iter().find(|&&n| n < 2) {
        return Err(CliError::Usage(format!("bench sizes must be ≥ 2, got {n}")));
    }
    let modes = if args.modes.is_empty() {
        vec![DynamicsMode::PointMass, DynamicsMode::Quadcopter]
    } else {
        args.modes.clone()
    };
    let algorithms = if args.algorithms.is_empty() {
        Algorithm::ALL.to_vec()
    } else {
        args.algorithms.clone()
    };
    let mut cells = Vec::new();
    for &mode in &modes {
        for &alg in &algorithms {
            for &n in &args.sizes {
                let s = cell_scenario(&base, n, mode, alg, args.with_metrics);
                let cell = run_cell(&s, args.repeat);
                match (&cell.rtf, &cell.error) {
                    (Some(rtf), _) => eprintln!("{mode} {alg} N={n}: RTF {rtf:.4}"),
                    (_, Some(e)) => eprintln!("{mode} {alg} N={n}: failed: {e}"),
                    _ => {}
                }
                cells.push(cell);
            }
        }
    }
    write_table(&cells, args.format, out)?;
    if let Some(path) = table_path {
        save_table(&cells, args.format, &path)?;
    }
    Ok(cells)
}

pub fn save_table(cells: &[BenchCell], format: TableFormat, path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(CliError::io(parent.display().to_string()))?;
    }
    let mut file = std::fs::File::create(path).map_err(CliError::io(path.display().to_string()))?;
    write_table(cells, format, &mut file)
}
