use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use swarmsim::{Algorithm, MetricsFrameF64, RunRecordF64, ScenarioF64};

use crate::overrides::Overrides;
use crate::run::{check_status, execute, RunSummary};
use crate::{CliError, OUT_DIR_ENV};

pub const COMPARISON_FILE: &str = "comparison.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Metric columns carried into the merged table, per run.
pub const SERIES: [&str; 12] = [
    "dist_min",
    "dist_avg",
    "dist_max",
    "obstacle_clearance_min",
    "speed_min",
    "speed_avg",
    "speed_max",
    "phi_order",
    "phi_connectivity",
    "phi_union",
    "phi_safety_ag",
    "phi_safety_obs",
];

fn series(f: &MetricsFrameF64, name: &str) -> f64 {
    match name {
        "dist_min" => f.dist_min,
        "dist_avg" => f.dist_avg,
        "dist_max" => f.dist_max,
        "obstacle_clearance_min" => f.obstacle_clearance_min,
        "speed_min" => f.speed_min,
        "speed_avg" => f.speed_avg,
        "speed_max" => f.speed_max,
        "phi_order" => f.phi_order,
        "phi_connectivity" => f.phi_connectivity,
        "phi_union" => f.phi_union,
        "phi_safety_ag" => f.phi_safety_ag,
        "phi_safety_obs" => f.phi_safety_obs,
        other => unreachable!("unknown series {other}"),
    }
}

#[derive(Debug, clap::Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    /// Debug: run the configured algorithm twice instead of both.
    #[arg(long)]
    pub same_algorithm: bool,
    /// Print the report as one JSON object.
    #[arg(long)]
    pub json: bool,
}

/// Order statistics over the two phases of the obstacle-course scenario.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PhaseOrder {
    /// Ticks whose centroid north coordinate lies inside the obstacle field.
    pub field_ticks: usize,
    pub field_mean: Option<f64>,
    /// Last `final_window` seconds of the run.
    pub final_window: f64,
    pub final_mean: Option<f64>,
    pub final_min: Option<f64>,
}

impl PhaseOrder {
    pub fn of(frames: &[MetricsFrameF64], scenario: &ScenarioF64, final_window: f64) -> Self {
        let b = scenario.sim.map.bounds;
        let field: Vec<f64> = frames
            .iter()
            .filter(|f| f.centroid.x >= b.n_min && f.centroid.x <= b.n_max)
            .map(|f| f.phi_order)
            .filter(|x| x.is_finite())
            .collect();
        let t_end = scenario.sim.t_end;
        let last: Vec<f64> = frames
            .iter()
            .filter(|f| f.t > t_end - final_window)
            .map(|f| f.phi_order)
            .filter(|x| x.is_finite())
            .collect();
        let mean = |xs: &[f64]| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
        PhaseOrder {
            field_ticks: field.len(),
            field_mean: mean(&field),
            final_window,
            final_mean: mean(&last),
            final_min: last.iter().copied().reduce(f64::min),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareEntry {
    pub label: String,
    pub summary: RunSummary,
    pub order: PhaseOrder,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareReport {
    pub out: PathBuf,
    pub runs: Vec<CompareEntry>,
}

/// Seconds of the run treated as its free-space tail.
pub const FINAL_WINDOW: f64 = 10.0;

/// Runs every `(label, scenario)` into `dir/<label>` and writes the merged table.
pub fn compare_scenarios(runs: &[(String, ScenarioF64)], dir: &Path) -> Result<(CompareReport, Vec<RunRecordF64>), CliError> {
    let mut records = Vec::new();
    let mut entries = Vec::new();
    for (label, s) in runs {
        let (record, summary) = execute(s, &dir.join(label))?;
        check_status(&summary)?;
        entries.push(CompareEntry {
            label: label.clone(),
            order: PhaseOrder::of(&record.metrics, s, FINAL_WINDOW),
            summary,
        });
        records.push(record);
    }
    write_table(&dir.join(COMPARISON_FILE), runs, &records)?;
    let report = CompareReport {
        out: dir.to_path_buf(),
        runs: entries,
    };
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    let path = dir.join(SUMMARY_FILE);
    fs::write(&path, json).map_err(CliError::io(path.display().to_string()))?;
    Ok((report, records))
}

fn write_table(path: &Path, runs: &[(String, ScenarioF64)], records: &[RunRecordF64]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Other(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let mut header = vec!["tick".to_string(), "t".to_string()];
    for (label, _) in runs {
        header.extend(SERIES.iter().map(|c| format!("{label}.{c}")));
    }
    w.write_record(&header).map_err(io)?;
    let rows = records.iter().map(|r| r.metrics.len()).min().unwrap_or(0);
    for k in 0..rows {
        let first = &records[0].metrics[k];
        let mut row = vec![first.tick.to_string(), first.t.to_string()];
        for r in records {
            let f = &r.metrics[k];
            debug_assert_eq!(f.tick, first.tick);
            row.extend(SERIES.iter().map(|c| series(f, c).to_string()));
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(CliError::io(path.display().to_string()))
}

pub fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<CompareReport, CliError> {
    let (base, dir) = args.overrides.scenario()?;
    let dir = dir.unwrap_or_else(|| {
        let parent = std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
        parent.join(format!("compare-n{}-s{}", base.swarm.n_agents, base.sim.seed))
    });
    let runs: Vec<(String, ScenarioF64)> = if args.same_algorithm {
        ["a", "b"].iter().map(|l| (l.to_string(), base.clone())).collect()
    } else {
        Algorithm::ALL
            .iter()
            .map(|&a| {
                let mut s = base.clone();
                s.swarm.algorithm = a;
                (a.to_string(), s)
            })
            .collect()
    };
    let (report, _) = compare_scenarios(&runs, &dir)?;
    let opt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    if args.json {
        let line = serde_json::to_string(&report).expect("report serializes");
        writeln!(out, "{line}").map_err(CliError::io("stdout"))?;
    } else {
        let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(CliError::io("stdout"));
        w(out, format!("comparison  {}", dir.join(COMPARISON_FILE).display()))?;
        w(
            out,
            format!(
                "{:<14} {:>9} {:>9} {:>10} {:>10} {:>10} {:>8}",
                "run", "safe_ag", "safe_obs", "field_ord", "final_ord", "d_min", "RTF"
            ),
        )?;
        for e in &report.runs {
            w(
                out,
                format!(
                    "{:<14} {:>9} {:>9} {:>10} {:>10} {:>10} {:>8}",
                    e.label,
                    opt(e.summary.min_safety_ag),
                    opt(e.summary.min_safety_obs),
                    opt(e.order.field_mean),
                    opt(e.order.final_mean),
                    opt(e.summary.min_distance),
                    opt(e.summary.real_time_factor),
                ),
            )?;
        }
    }
    Ok(report)
}
