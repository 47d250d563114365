//! CSV, matrix and manifest writers.

use std::fs;
use std::path::{Path, PathBuf};

use qutrit_floquet::observables::TimeSeries;
use qutrit_floquet::phase::{CellStatus, GridObservable, PhaseGrid};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything needed to rerun a command and check its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub engine: String,
    /// Value of `RAYON_NUM_THREADS`, if set.
    pub worker_threads: Option<String>,
    pub wall_seconds: f64,
    pub diagnostics: Diagnostics,
    pub files: Vec<FileEntry>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostics {
    pub max_norm_drift: Option<f64>,
    pub max_chi: Option<usize>,
    pub discarded_weight: Option<f64>,
    pub flagged_cells: Option<usize>,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileEntry {
    pub path: String,
    /// Data rows, header excluded.
    pub rows: usize,
}

impl RunManifest {
    pub fn new(command: &str, config: impl Serialize, engine: &str) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: serde_json::to_value(config).expect("config serializes"),
            engine: engine.into(),
            worker_threads: std::env::var("RAYON_NUM_THREADS").ok(),
            wall_seconds: 0.0,
            diagnostics: Diagnostics::default(),
            files: Vec::new(),
        }
    }

    pub fn record(&mut self, dir: &Path, path: &Path, rows: usize) {
        let rel = path.strip_prefix(dir).unwrap_or(path);
        self.files.push(FileEntry { path: rel.display().to_string(), rows });
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

/// Table of `key columns + values`; returns the number of data rows.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<usize, CliError> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(rows.len())
}

/// `step,<label>…` with one row per recorded step. All series must share
/// their stride and length.
pub fn series_rows(series: &[TimeSeries]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["step".to_string()];
    header.extend(series.iter().map(|s| s.label.clone()));
    let Some(first) = series.first() else {
        return (header, Vec::new());
    };
    let rows = first
        .steps()
        .enumerate()
        .map(|(k, n)| {
            let mut row = vec![n.to_string()];
            row.extend(series.iter().map(|s| num(s.values[k])));
            row
        })
        .collect();
    (header, rows)
}

pub fn write_series(path: &Path, series: &[TimeSeries]) -> Result<usize, CliError> {
    let (header, rows) = series_rows(series);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table(path, &header, &rows)
}

fn status_label(s: &CellStatus) -> String {
    match s {
        CellStatus::Ok => "ok".into(),
        CellStatus::ChiCapExceeded { step } => format!("chi_cap_exceeded@{step}"),
        CellStatus::Failed { message } => format!("failed: {message}"),
    }
}

/// Row-major `theta_x,theta_z,<observable>,status`.
pub fn write_grid(path: &Path, grid: &PhaseGrid, obs: GridObservable) -> Result<usize, CliError> {
    let rows: Vec<Vec<String>> = (0..grid.rows())
        .flat_map(|r| (0..grid.cols()).map(move |c| (r, c)))
        .map(|(r, c)| {
            vec![num(grid.theta_x[r]), num(grid.theta_z[c]), num(grid.value(obs, r, c)), status_label(&grid.cell(r, c).status)]
        })
        .collect();
    write_table(path, &["theta_x", "theta_z", obs.label(), "status"], &rows)
}

/// Gnuplot nonuniform matrix: first row `N θ_z…`, then `θ_x values…`.
pub fn write_matrix(path: &Path, grid: &PhaseGrid, obs: GridObservable) -> Result<usize, CliError> {
    let mut text = String::new();
    text.push_str(&grid.cols().to_string());
    for z in &grid.theta_z {
        text.push(' ');
        text.push_str(&num(*z));
    }
    text.push('\n');
    for r in 0..grid.rows() {
        text.push_str(&num(grid.theta_x[r]));
        for v in grid.row_values(obs, r) {
            text.push(' ');
            text.push_str(&num(v));
        }
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    Ok(grid.rows())
}
