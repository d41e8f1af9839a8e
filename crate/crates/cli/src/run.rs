use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use swarmsim::record::write_record;
use swarmsim::{run, MetricsFrameF64, RunRecordF64, RunStatus, ScenarioF64};

use crate::overrides::{default_out_dir, Overrides};
use crate::CliError;

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    /// Print the summary as one JSON object.
    #[arg(long)]
    pub json: bool,
}

/// Whole-run aggregates printed after a run. Means skip NaN ticks.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub out: PathBuf,
    pub algorithm: String,
    pub n_agents: usize,
    pub seed: u64,
    pub ticks: u64,
    pub status: RunStatus,
    pub wall_seconds: f64,
    pub real_time_factor: Option<f64>,
    pub min_safety_ag: Option<f64>,
    pub min_safety_obs: Option<f64>,
    pub min_distance: Option<f64>,
    pub min_clearance: Option<f64>,
    pub mean_order: Option<f64>,
    #[serde(rename = "final")]
    pub last: Option<MetricsFrameF64>,
}

fn fold(frames: &[MetricsFrameF64], f: impl Fn(&MetricsFrameF64) -> f64, pick: fn(f64, f64) -> f64) -> Option<f64> {
    frames.iter().map(f).filter(|x| !x.is_nan()).reduce(pick)
}

fn mean(frames: &[MetricsFrameF64], f: impl Fn(&MetricsFrameF64) -> f64) -> Option<f64> {
    let xs: Vec<f64> = frames.iter().map(f).filter(|x| x.is_finite()).collect();
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

impl RunSummary {
    pub fn of(record: &RunRecordF64, out: &Path) -> Self {
        let m = &record.metrics;
        let rtf = record.real_time_factor;
        RunSummary {
            out: out.to_path_buf(),
            algorithm: record.scenario.swarm.algorithm.to_string(),
            n_agents: record.scenario.swarm.n_agents,
            seed: record.scenario.sim.seed,
            ticks: record.ticks,
            status: record.status.clone(),
            wall_seconds: record.wall_seconds,
            real_time_factor: rtf.is_finite().then_some(rtf),
            min_safety_ag: fold(m, |f| f.phi_safety_ag, f64::min),
            min_safety_obs: fold(m, |f| f.phi_safety_obs, f64::min),
            min_distance: fold(m, |f| f.dist_min, f64::min),
            min_clearance: fold(m, |f| f.obstacle_clearance_min, f64::min),
            mean_order: mean(m, |f| f.phi_order),
            last: m.last().cloned(),
        }
    }

    pub fn print(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let opt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.4}"));
        writeln!(out, "record      {}", self.out.display())?;
        writeln!(out, "algorithm   {} (N = {}, seed = {})", self.algorithm, self.n_agents, self.seed)?;
        match &self.status {
            RunStatus::Completed => writeln!(out, "status      completed, {} ticks", self.ticks)?,
            RunStatus::Aborted { tick, reason } => writeln!(out, "status      aborted at tick {tick}: {reason}")?,
        }
        writeln!(out, "wall        {:.3} s, RTF {}", self.wall_seconds, opt(self.real_time_factor))?;
        writeln!(out, "safety_ag   min {}", opt(self.min_safety_ag))?;
        writeln!(out, "safety_obs  min {}", opt(self.min_safety_obs))?;
        writeln!(out, "distance    min {} m, clearance min {} m", opt(self.min_distance), opt(self.min_clearance))?;
        writeln!(out, "order       mean {}", opt(self.mean_order))?;
        if let Some(f) = &self.last {
            writeln!(
                out,
                "final       order {:.4}, union {:.4}, connectivity {:.4}, speed {:.3} m/s",
                f.phi_order, f.phi_union, f.phi_connectivity, f.speed_avg
            )?;
        }
        Ok(())
    }
}

/// Validates, runs and writes one record. An aborted run still writes its
/// record and then reports [`CliError::Aborted`].
pub fn execute(scenario: &ScenarioF64, out: &Path) -> Result<(RunRecordF64, RunSummary), CliError> {
    scenario.validate().into_result()?;
    let record = run(scenario)?;
    write_record(out, &record)?;
    let summary = RunSummary::of(&record, out);
    Ok((record, summary))
}

pub fn check_status(summary: &RunSummary) -> Result<(), CliError> {
    match &summary.status {
        RunStatus::Completed => Ok(()),
        RunStatus::Aborted { tick, reason } => Err(CliError::Aborted {
            tick: *tick,
            reason: reason.clone(),
        }),
    }
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<RunSummary, CliError> {
    let (scenario, dir) = args.overrides.scenario()?;
    let dir = dir.unwrap_or_else(|| default_out_dir(&scenario));
    let (_, summary) = execute(&scenario, &dir)?;
    if args.json {
        let line = serde_json::to_string(&summary).expect("summary serializes");
        writeln!(out, "{line}").map_err(CliError::io("stdout"))?;
    } else {
        summary.print(out).map_err(CliError::io("stdout"))?;
    }
    check_status(&summary)?;
    Ok(summary)
}
