//! Plot-ready tables from a run record, one file per figure panel.
//!
//! | file | columns |
//! |------|---------|
//! | `distance` | tick, t, dist_min, dist_avg, dist_max, obstacle_clearance_min |
//! | `speed` | tick, t, speed_min, speed_avg, speed_max |
//! | `acceleration` | tick, t, accel_min, accel_avg, accel_max |
//! | `order` | tick, t, phi_order |
//! | `connectivity` | tick, t, phi_connectivity, phi_union, n_components |
//! | `safety` | tick, t, phi_safety_ag, phi_safety_obs, n_ag, n_obs |
//! | `trajectories` | tick, t, agent, pn, pe, pd, vn, ve, vd |
//! | `obstacles` | center_n, center_e, radius |
//!
//! Values are written in the record's own text form, so timestamps of a
//! strided record come out exactly as stored.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde_json::{Map, Value};
use swarmsim::record::{read_map, read_meta, read_metrics, read_states};
use swarmsim::MetricsFrameF64;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Csv,
    /// One object per file mapping column name to an array; NaN becomes null.
    Json,
}

impl ExportFormat {
    fn extension(self) -> &'static str {
        match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Json => "json",
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct ExportArgs {
    /// Run record directory.
    pub record: PathBuf,
    /// Output directory; `<record>/export` by default.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ExportFormat::Csv)]
    pub format: ExportFormat,
}

pub const PANELS: [&str; 8] = [
    "distance",
    "speed",
    "acceleration",
    "order",
    "connectivity",
    "safety",
    "trajectories",
    "obstacles",
];

struct Table {
    name: &'static str,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

fn metric_table(name: &'static str, columns: &[&'static str], frames: &[MetricsFrameF64]) -> Table {
    let rows = frames
        .iter()
        .map(|f| {
            let full = f.to_row();
            columns
                .iter()
                .map(|c| {
                    let i = swarmsim::metrics::FRAME_COLUMNS
                        .iter()
                        .position(|k| k == c)
                        .expect("known column");
                    full[i].clone()
                })
                .collect()
        })
        .collect();
    Table {
        name,
        columns: columns.to_vec(),
        rows,
    }
}

fn write_table(table: &Table, format: ExportFormat, dir: &Path) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{}.{}", table.name, format.extension()));
    match format {
        ExportFormat::Csv => {
            let err = |e: csv::Error| CliError::Other(format!("{}: {e}", path.display()));
            let mut w = csv::Writer::from_path(&path).map_err(err)?;
            w.write_record(&table.columns).map_err(err)?;
            for r in &table.rows {
                w.write_record(r).map_err(err)?;
            }
            w.flush().map_err(CliError::io(path.display().to_string()))?;
        }
        ExportFormat::Json => {
            let mut obj = Map::new();
            for (i, c) in table.columns.iter().enumerate() {
                let col = table
                    .rows
                    .iter()
                    .map(|r| {
                        let text = &r[i];
                        match text.parse::<u64>() {
                            Ok(k) => Value::from(k),
                            Err(_) => text.parse::<f64>().map_or(Value::Null, Value::from),
                        }
                    })
                    .collect();
                obj.insert(c.to_string(), Value::Array(col));
            }
            let mut text = serde_json::to_string(&Value::Object(obj)).expect("table serializes");
            text.push('\n');
            fs::write(&path, text).map_err(CliError::io(path.display().to_string()))?;
        }
    }
    Ok(path)
}

/// Writes every panel of the record at `record` into `dir`.
pub fn export_record(record: &Path, dir: &Path, format: ExportFormat) -> Result<Vec<PathBuf>, CliError> {
    read_meta::<f64>(record)?;
    let frames = read_metrics::<f64>(record)?;
    let states = read_states::<f64>(record)?;
    let map = read_map::<f64>(record)?;

    let mut tables = vec![
        metric_table(
            "distance",
            &["tick", "t", "dist_min", "dist_avg", "dist_max", "obstacle_clearance_min"],
            &frames,
        ),
        metric_table("speed", &["tick", "t", "speed_min", "speed_avg", "speed_max"], &frames),
        metric_table("acceleration", &["tick", "t", "accel_min", "accel_avg", "accel_max"], &frames),
        metric_table("order", &["tick", "t", "phi_order"], &frames),
        metric_table(
            "connectivity",
            &["tick", "t", "phi_connectivity", "phi_union", "n_components"],
            &frames,
        ),
        metric_table(
            "safety",
            &["tick", "t", "phi_safety_ag", "phi_safety_obs", "n_ag", "n_obs"],
            &frames,
        ),
    ];
    let mut traj = Vec::new();
    for s in &states {
        for (i, a) in s.agents.iter().enumerate() {
            let p = a.position();
            let v = a.inertial_velocity();
            traj.push(vec![
                s.tick.to_string(),
                s.t.to_string(),
                i.to_string(),
                p.x.to_string(),
                p.y.to_string(),
                p.z.to_string(),
                v.x.to_string(),
                v.y.to_string(),
                v.z.to_string(),
            ]);
        }
    }
    tables.push(Table {
        name: "trajectories",
        columns: vec!["tick", "t", "agent", "pn", "pe", "pd", "vn", "ve", "vd"],
        rows: traj,
    });
    tables.push(Table {
        name: "obstacles",
        columns: vec!["center_n", "center_e", "radius"],
        rows: map
            .obstacles
            .iter()
            .map(|o| vec![o.center_n.to_string(), o.center_e.to_string(), o.radius.to_string()])
            .collect(),
    });

    fs::create_dir_all(dir).map_err(CliError::io(dir.display().to_string()))?;
    tables.iter().map(|t| write_table(t, format, dir)).collect()
}

pub fn cmd_export(args: &ExportArgs, out: &mut dyn Write) -> Result<Vec<PathBuf>, CliError> {
    let dir = args.out.clone().unwrap_or_else(|| args.record.join("export"));
    let files = export_record(&args.record, &dir, args.format)?;
    for f in &files {
        writeln!(out, "{}", f.display()).map_err(CliError::io("stdout"))?;
    }
    Ok(files)
}
