//! On-disk run records.
//!
//! A record is a directory:
//!
//! ```text
//! meta.json     schema version, effective scenario (with applied patches),
//!               map digest, tick and row counts, run status
//! metrics.csv   one MetricsFrame per measured tick
//! states.csv    one row per (sampled tick, agent), all twelve state fields
//! map.txt       the obstacle map in the plain-text map format
//! timing.json   wall-clock seconds and real-time factor
//! ```
//!
//! Everything except `timing.json` is a pure function of the inputs, so two
//! runs with equal inputs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Scenario;
use crate::engine::{RunRecord, RunStatus, StateSample, SCHEMA_VERSION};
use crate::environment::{MapError, ObstacleMap};
use crate::metrics::{MetricsFrame, FRAME_COLUMNS};
use crate::real::Real;
use crate::types::AgentState;

pub const META_FILE: &str = "meta.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const STATES_FILE: &str = "states.csv";
pub const MAP_FILE: &str = "map.txt";
pub const TIMING_FILE: &str = "timing.json";

pub const STATE_COLUMNS: [&str; 15] = [
    "tick", "t", "agent", "pn", "pe", "pd", "u", "v", "w", "phi", "theta", "psi", "p", "q", "r_rate",
];

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: schema version {found}, this build reads version {expected}")]
    SchemaVersion {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error(transparent)]
    Map(#[from] MapError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RecordError + '_ {
    move |source| RecordError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, message: impl ToString) -> RecordError {
    RecordError::Format {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
pub struct RecordMeta<T: Real> {
    pub schema_version: u32,
    pub scenario: Scenario<T>,
    pub map_digest: String,
    pub obstacles: usize,
    pub ticks: u64,
    pub metrics_rows: usize,
    pub state_rows: usize,
    pub status: RunStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub real_time_factor: Option<f64>,
}

/// Writes `record` into `dir`, creating it if needed.
pub fn write_record<T: Real>(dir: &Path, record: &RunRecord<T>) -> Result<(), RecordError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let meta = RecordMeta {
        schema_version: record.schema_version,
        scenario: record.scenario.clone(),
        map_digest: record.map.digest(),
        obstacles: record.map.len(),
        ticks: record.ticks,
        metrics_rows: record.metrics.len(),
        state_rows: record.states.iter().map(|s| s.agents.len()).sum(),
        status: record.status.clone(),
    };
    write_json(&dir.join(META_FILE), &meta)?;
    let rtf = record.real_time_factor;
    write_json(
        &dir.join(TIMING_FILE),
        &Timing {
            wall_seconds: record.wall_seconds,
            real_time_factor: rtf.is_finite().then_some(rtf),
        },
    )?;
    write_metrics(&dir.join(METRICS_FILE), &record.metrics)?;
    write_states(&dir.join(STATES_FILE), &record.states)?;
    record.map.save(&dir.join(MAP_FILE))?;
    Ok(())
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), RecordError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| format_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_metrics<T: Real>(path: &Path, frames: &[MetricsFrame<T>]) -> Result<(), RecordError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| format_err(path, e))?;
    w.write_record(FRAME_COLUMNS).map_err(|e| format_err(path, e))?;
    for f in frames {
        w.write_record(f.to_row()).map_err(|e| format_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_states<T: Real>(path: &Path, samples: &[StateSample<T>]) -> Result<(), RecordError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| format_err(path, e))?;
    w.write_record(STATE_COLUMNS).map_err(|e| format_err(path, e))?;
    for s in samples {
        for (i, a) in s.agents.iter().enumerate() {
            let mut row = vec![s.tick.to_string(), s.t.to_string(), i.to_string()];
            row.extend(a.as_array().iter().map(|x| x.to_string()));
            w.write_record(&row).map_err(|e| format_err(path, e))?;
        }
    }
    w.flush().map_err(io_err(path))
}

/// Reads and version-checks `meta.json`.
pub fn read_meta<T: Real>(dir: &Path) -> Result<RecordMeta<T>, RecordError> {
    let path = dir.join(META_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(|e| format_err(&path, e))?;
    let found = raw
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| format_err(&path, "missing schema_version"))? as u32;
    if found != SCHEMA_VERSION {
        return Err(RecordError::SchemaVersion {
            path,
            found,
            expected: SCHEMA_VERSION,
        });
    }
    serde_json::from_value(raw).map_err(|e| format_err(&path, e))
}

pub fn read_timing(dir: &Path) -> Result<Timing, RecordError> {
    let path = dir.join(TIMING_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text).map_err(|e| format_err(&path, e))
}

pub fn read_metrics<T: Real>(dir: &Path) -> Result<Vec<MetricsFrame<T>>, RecordError> {
    let path = dir.join(METRICS_FILE);
    let mut r = csv::Reader::from_path(&path).map_err(|e| format_err(&path, e))?;
    let header = r.headers().map_err(|e| format_err(&path, e))?.clone();
    if !header.iter().eq(FRAME_COLUMNS.iter().copied()) {
        return Err(format_err(&path, "unexpected header"));
    }
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| format_err(&path, e))?;
        let fields: Vec<&str> = row.iter().collect();
        out.push(MetricsFrame::from_row(&fields).map_err(|e| format_err(&path, e))?);
    }
    Ok(out)
}

pub fn read_states<T: Real>(dir: &Path) -> Result<Vec<StateSample<T>>, RecordError> {
    let path = dir.join(STATES_FILE);
    let mut r = csv::Reader::from_path(&path).map_err(|e| format_err(&path, e))?;
    let mut out: Vec<StateSample<T>> = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| format_err(&path, e))?;
        if row.len() != STATE_COLUMNS.len() {
            return Err(format_err(&path, format!("expected {} columns", STATE_COLUMNS.len())));
        }
        let tick: u64 = row[0].parse().map_err(|e| format_err(&path, e))?;
        let t: f64 = row[1].parse().map_err(|e| format_err(&path, e))?;
        let mut a = [T::zero(); 12];
        for (k, x) in a.iter_mut().enumerate() {
            *x = T::lit(row[3 + k].parse::<f64>().map_err(|e| format_err(&path, e))?);
        }
        match out.last_mut() {
            Some(s) if s.tick == tick => s.agents.push(AgentState::from_array(a)),
            _ => out.push(StateSample {
                tick,
                t: T::lit(t),
                agents: vec![AgentState::from_array(a)],
            }),
        }
    }
    Ok(out)
}

pub fn read_map<T: Real>(dir: &Path) -> Result<ObstacleMap<T>, RecordError> {
    Ok(ObstacleMap::load(&dir.join(MAP_FILE))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::NeighborMode;
    use crate::engine::run;

    #[test]
    fn round_trip() {
        let mut s = Scenario::<f64>::default();
        s.swarm.n_agents = 4;
        s.swarm.neighbors = NeighborMode::Topological { count: 2 };
        s.sim.t_end = 0.2;
        let record = run(&s).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_record(dir.path(), &record).unwrap();
        let meta = read_meta::<f64>(dir.path()).unwrap();
        assert_eq!(meta.ticks, 20);
        assert_eq!(meta.scenario, record.scenario);
        assert_eq!(read_metrics::<f64>(dir.path()).unwrap(), record.metrics);
        assert_eq!(read_states::<f64>(dir.path()).unwrap(), record.states);
        assert_eq!(read_map::<f64>(dir.path()).unwrap().digest(), record.map.digest());
    }

    #[test]
    fn schema_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(META_FILE), "{\"schema_version\": 99}").unwrap();
        let err = read_meta::<f64>(dir.path()).unwrap_err();
        assert!(matches!(err, RecordError::SchemaVersion { found: 99, .. }));
    }
}
