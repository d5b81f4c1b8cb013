//! Result bundles on disk.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::BoundReport;
use crate::sim::{TrajectoryLog, ValidationSummary, RNG_NAME};

use super::IoError;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const BOUNDS_FILE: &str = "bounds.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PLOT_FILE: &str = "plot_data.csv";

pub const TRAJECTORY_HEADER: &str = "replicate,k,agent,hypothesis,belief,log_belief";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub replicates: usize,
    pub rng: String,
    pub waivers: Vec<String>,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config_bytes: &[u8], seed: u64, replicates: usize, waivers: Vec<String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_sha256: sha256_hex(config_bytes),
            seed,
            replicates,
            rng: RNG_NAME.to_string(),
            waivers,
            files: Vec::new(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Paths of the files written.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultBundle {
    pub dir: PathBuf,
    pub trajectory: Option<PathBuf>,
    pub bounds: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub manifest: PathBuf,
}

/// Writes `contents` to `dir/name` through a temporary file in the same
/// directory and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf, IoError> {
    let path = dir.join(name);
    let io = |e: std::io::Error| IoError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(&path).map_err(|e| io(e.error))?;
    Ok(path)
}

/// Long-format CSV of every logged belief. `log_belief` uses the shortest
/// decimal that round-trips; `belief` is its exponential.
pub fn trajectory_csv(logs: &[TrajectoryLog]) -> String {
    let mut out = String::with_capacity(64 * logs.iter().map(|l| l.snapshots.len()).sum::<usize>());
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for log in logs {
        for snap in &log.snapshots {
            let b = &snap.beliefs;
            for i in 0..b.agents() {
                for t in 0..b.hypotheses() {
                    let l = b.log_belief(i, t);
                    let _ = writeln!(out, "{},{},{},{},{},{}", log.replicate, snap.k, i, t, l.exp(), l);
                }
            }
        }
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Writes whichever parts are present, then the manifest listing them.
pub fn write_results(
    dir: &Path,
    logs: Option<&[TrajectoryLog]>,
    report: Option<&BoundReport>,
    summary: Option<&ValidationSummary>,
    mut manifest: Manifest,
) -> Result<ResultBundle, IoError> {
    let trajectory = logs
        .map(|l| write_atomic(dir, TRAJECTORY_FILE, trajectory_csv(l).as_bytes()))
        .transpose()?;
    let bounds = report
        .map(|r| write_atomic(dir, BOUNDS_FILE, to_json(r).as_bytes()))
        .transpose()?;
    let summary = summary
        .map(|s| write_atomic(dir, SUMMARY_FILE, to_json(s).as_bytes()))
        .transpose()?;
    for (p, name) in [
        (&trajectory, TRAJECTORY_FILE),
        (&bounds, BOUNDS_FILE),
        (&summary, SUMMARY_FILE),
    ] {
        if p.is_some() {
            manifest.files.push(name.to_string());
        }
    }
    let manifest = write_atomic(dir, MANIFEST_FILE, to_json(&manifest).as_bytes())?;
    Ok(ResultBundle {
        dir: dir.to_path_buf(),
        trajectory,
        bounds,
        summary,
        manifest,
    })
}

/// One row of a trajectory CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub replicate: usize,
    pub k: usize,
    pub agent: usize,
    pub hypothesis: usize,
    pub log_belief: f64,
}

pub fn parse_trajectory_csv(text: &str) -> Result<Vec<TrajectoryRow>, IoError> {
    let mut lines = text.lines();
    if lines.next() != Some(TRAJECTORY_HEADER) {
        return Err(IoError::Semantic(format!(
            "trajectory header must be `{TRAJECTORY_HEADER}`"
        )));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, line)| {
            let bad = || IoError::Semantic(format!("trajectory line {}: `{line}`", n + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad());
            }
            Ok(TrajectoryRow {
                replicate: f[0].parse().map_err(|_| bad())?,
                k: f[1].parse().map_err(|_| bad())?,
                agent: f[2].parse().map_err(|_| bad())?,
                hypothesis: f[3].parse().map_err(|_| bad())?,
                log_belief: f[5].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}
