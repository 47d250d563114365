//! Parameter sweeps over `(θ_x, θ_z)`, lifetime fits, dip finding and the
//! perturbative thermalization-time predictor.
//!
//! Grid cells are independent trajectories from `|0⟩^{⊗L}`. Averages use the
//! samples at `n = 0, 3, 6, …` (including `n = 0`). With the `parallel`
//! feature, [`sweep`] distributes cells over rayon workers; results are
//! collected in cell order, so grids are bit-identical to [`sweep_sequential`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{evolve, FloquetParams, Observable};
use crate::mps::{mps_evolve, MpsError, TebdOptions};
use crate::observables::TimeSeries;

/// Recording stride of sweeps: the stroboscopic revival steps.
pub const SWEEP_STRIDE: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("lifetime fit degenerate ({reason}); lifetime reported as {sentinel}")]
    FitDegenerate { reason: String, sentinel: f64 },
    #[error("series too short for a lifetime fit: {0} periods, need at least 4")]
    SeriesTooShort(usize),
    #[error("θ_x = 0 makes log η² vanish; n_t reported as {sentinel}")]
    DivergentLimit { sentinel: f64 },
    #[error("n_t undefined: {0}")]
    Domain(String),
}

/// Evenly spaced axis `start, …, end` with `points` values (endpoints included).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl GridAxis {
    pub fn new(start: f64, end: f64, points: usize) -> Self {
        GridAxis { start, end, points }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n).map(|k| self.start + (self.end - self.start) * k as f64 / (n - 1) as f64).collect(),
        }
    }

    pub fn spacing(&self) -> f64 {
        if self.points < 2 {
            0.0
        } else {
            (self.end - self.start) / (self.points - 1) as f64
        }
    }
}

impl FromStr for GridAxis {
    type Err = PhaseError;

    /// Parses `a:b:n`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || PhaseError::InvalidGrid(format!("`{s}` is not of the form start:end:points"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let end: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let points: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if points == 0 || !start.is_finite() || !end.is_finite() {
            return Err(bad());
        }
        Ok(GridAxis { start, end, points })
    }
}

impl fmt::Display for GridAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.points)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SweepEngine {
    #[default]
    Exact,
    Mps(TebdOptions),
}

/// Which time averages a sweep computes; skipped ones are stored as NaN.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridObservables {
    pub overlap: bool,
    pub entropy: bool,
    pub qfi: bool,
}

impl Default for GridObservables {
    fn default() -> Self {
        GridObservables { overlap: true, entropy: true, qfi: true }
    }
}

impl GridObservables {
    fn list(&self) -> Vec<Observable> {
        let mut v = Vec::new();
        if self.overlap {
            v.push(Observable::Overlap);
        }
        if self.entropy {
            v.push(Observable::EntropyHalf);
        }
        if self.qfi {
            v.push(Observable::Qfi);
        }
        v
    }
}

/// Everything needed to run a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub theta_x: GridAxis,
    pub theta_z: GridAxis,
    pub sites: usize,
    pub cycles: usize,
    pub epsilon: f64,
    pub engine: SweepEngine,
    pub observables: GridObservables,
}

impl SweepSpec {
    pub fn new(theta_x: GridAxis, theta_z: GridAxis, sites: usize, cycles: usize) -> Self {
        SweepSpec {
            theta_x,
            theta_z,
            sites,
            cycles,
            epsilon: 0.0,
            engine: SweepEngine::Exact,
            observables: GridObservables::default(),
        }
    }

    pub fn validate(&self) -> Result<(), PhaseError> {
        if self.theta_x.points == 0 || self.theta_z.points == 0 {
            return Err(PhaseError::InvalidGrid("axes must be nonempty".into()));
        }
        if self.sites < 2 {
            return Err(PhaseError::InvalidGrid(format!("L = {} is too small", self.sites)));
        }
        if self.engine == SweepEngine::Exact && self.sites > crate::state::MAX_DENSE_SITES {
            return Err(PhaseError::InvalidGrid(format!("L = {} is beyond the exact engine", self.sites)));
        }
        Ok(())
    }

    fn params(&self, theta_x: f64, theta_z: f64) -> FloquetParams {
        FloquetParams::new(self.sites, theta_x, theta_z, self.cycles)
            .with_epsilon(self.epsilon)
            .with_stride(SWEEP_STRIDE)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    /// Stopped by the bond-dimension cap; averages cover steps before `step`.
    ChiCapExceeded { step: usize },
    Failed { message: String },
}

/// Time averages of one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub theta_x: f64,
    pub theta_z: f64,
    pub overlap: f64,
    pub entropy: f64,
    pub fq: f64,
    pub max_chi: Option<usize>,
    pub status: CellStatus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridObservable {
    Overlap,
    Entropy,
    Qfi,
}

impl GridObservable {
    pub const ALL: [GridObservable; 3] = [GridObservable::Overlap, GridObservable::Entropy, GridObservable::Qfi];

    pub fn label(self) -> &'static str {
        match self {
            GridObservable::Overlap => "overlap",
            GridObservable::Entropy => "entropy",
            GridObservable::Qfi => "fQ",
        }
    }
}

impl FromStr for GridObservable {
    type Err = PhaseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "overlap" => Ok(GridObservable::Overlap),
            "entropy" => Ok(GridObservable::Entropy),
            "qfi" | "fQ" | "fq" => Ok(GridObservable::Qfi),
            other => Err(PhaseError::InvalidGrid(format!("unknown grid observable `{other}`"))),
        }
    }
}

/// Row-major grid: row `i` is `θ_x = theta_x[i]`, column `j` is `θ_z = theta_z[j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub theta_x: Vec<f64>,
    pub theta_z: Vec<f64>,
    pub sites: usize,
    pub cycles: usize,
    pub stride: usize,
    pub cells: Vec<CellResult>,
}

impl PhaseGrid {
    pub fn rows(&self) -> usize {
        self.theta_x.len()
    }

    pub fn cols(&self) -> usize {
        self.theta_z.len()
    }

    pub fn cell(&self, row: usize, col: usize) -> &CellResult {
        &self.cells[row * self.cols() + col]
    }

    pub fn value(&self, obs: GridObservable, row: usize, col: usize) -> f64 {
        let c = self.cell(row, col);
        match obs {
            GridObservable::Overlap => c.overlap,
            GridObservable::Entropy => c.entropy,
            GridObservable::Qfi => c.fq,
        }
    }

    pub fn row_values(&self, obs: GridObservable, row: usize) -> Vec<f64> {
        (0..self.cols()).map(|c| self.value(obs, row, c)).collect()
    }

    /// Nearest row to a given `θ_x`.
    pub fn row_index(&self, theta_x: f64) -> Option<usize> {
        (0..self.rows()).min_by(|&a, &b| (self.theta_x[a] - theta_x).abs().total_cmp(&(self.theta_x[b] - theta_x).abs()))
    }

    /// Cell with the largest finite value.
    pub fn argmax(&self, obs: GridObservable) -> Option<(usize, usize)> {
        let mut best: Option<((usize, usize), f64)> = None;
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                let v = self.value(obs, r, c);
                if v.is_finite() && best.is_none_or(|(_, b)| v > b) {
                    best = Some(((r, c), v));
                }
            }
        }
        best.map(|(rc, _)| rc)
    }

    /// Cells on either side of a crossing of `level` between horizontal or
    /// vertical neighbours.
    pub fn level_set(&self, obs: GridObservable, level: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let side = |r: usize, c: usize| self.value(obs, r, c) >= level;
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                let crosses = (r + 1 < self.rows() && side(r, c) != side(r + 1, c))
                    || (c + 1 < self.cols() && side(r, c) != side(r, c + 1))
                    || (r > 0 && side(r, c) != side(r - 1, c))
                    || (c > 0 && side(r, c) != side(r, c - 1));
                if crosses {
                    out.push((r, c));
                }
            }
        }
        out
    }

    /// Chebyshev distance in cells from `cell` to the nearest level-set cell.
    pub fn distance_to_level_set(&self, obs: GridObservable, level: f64, cell: (usize, usize)) -> Option<usize> {
        self.level_set(obs, level)
            .into_iter()
            .map(|(r, c)| r.abs_diff(cell.0).max(c.abs_diff(cell.1)))
            .min()
    }

    /// Row-major matrix of one observable.
    pub fn matrix(&self, obs: GridObservable) -> Vec<Vec<f64>> {
        (0..self.rows()).map(|r| self.row_values(obs, r)).collect()
    }

    pub fn flagged(&self) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(|c| c.status != CellStatus::Ok)
    }
}

fn mean_or_nan(s: Option<&TimeSeries>) -> f64 {
    s.map(|s| s.mean()).unwrap_or(f64::NAN)
}

fn run_cell(spec: &SweepSpec, theta_x: f64, theta_z: f64) -> CellResult {
    let params = spec.params(theta_x, theta_z);
    let obs = spec.observables.list();
    let mut cell = CellResult {
        theta_x,
        theta_z,
        overlap: f64::NAN,
        entropy: f64::NAN,
        fq: f64::NAN,
        max_chi: None,
        status: CellStatus::Ok,
    };
    let fill = |cell: &mut CellResult, series: &[TimeSeries]| {
        let find = |label: &str| series.iter().find(|s| s.label == label);
        cell.overlap = mean_or_nan(find("overlap"));
        cell.entropy = mean_or_nan(find("entropy_half"));
        cell.fq = mean_or_nan(find("fQ"));
    };
    match spec.engine {
        SweepEngine::Exact => match evolve(&params, &obs) {
            Ok(t) => fill(&mut cell, &t.series),
            Err(e) => cell.status = CellStatus::Failed { message: e.to_string() },
        },
        SweepEngine::Mps(options) => match mps_evolve(&params, &options, &obs) {
            Ok(t) => {
                fill(&mut cell, &t.series);
                cell.max_chi = t.max_chi.iter().copied().max();
            }
            Err(e) => {
                cell.status = match e.source {
                    MpsError::ChiCapExceeded { .. } => CellStatus::ChiCapExceeded { step: e.step },
                    other => CellStatus::Failed { message: other.to_string() },
                }
            }
        },
    }
    cell
}

fn cell_params(spec: &SweepSpec) -> Vec<(f64, f64)> {
    let zs = spec.theta_z.values();
    spec.theta_x.values().into_iter().flat_map(|x| zs.iter().map(move |&z| (x, z))).collect()
}

fn assemble(spec: &SweepSpec, cells: Vec<CellResult>) -> PhaseGrid {
    PhaseGrid {
        theta_x: spec.theta_x.values(),
        theta_z: spec.theta_z.values(),
        sites: spec.sites,
        cycles: spec.cycles,
        stride: SWEEP_STRIDE,
        cells,
    }
}

/// One trajectory per cell on the current thread, in row-major order.
pub fn sweep_sequential(spec: &SweepSpec) -> Result<PhaseGrid, PhaseError> {
    spec.validate()?;
    let cells = cell_params(spec).into_iter().map(|(x, z)| run_cell(spec, x, z)).collect();
    Ok(assemble(spec, cells))
}

/// `sweep`: cell-parallel when the `parallel` feature is enabled. `progress`
/// is called once per finished cell from worker threads.
pub fn sweep_with_progress(spec: &SweepSpec, progress: &(dyn Fn(usize) + Sync)) -> Result<PhaseGrid, PhaseError> {
    spec.validate()?;
    let params = cell_params(spec);
    #[cfg(feature = "parallel")]
    let cells: Vec<CellResult> = {
        use rayon::prelude::*;
        params
            .par_iter()
            .enumerate()
            .map(|(k, &(x, z))| {
                let c = run_cell(spec, x, z);
                progress(k);
                c
            })
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let cells: Vec<CellResult> = params
        .iter()
        .enumerate()
        .map(|(k, &(x, z))| {
            let c = run_cell(spec, x, z);
            progress(k);
            c
        })
        .collect();
    Ok(assemble(spec, cells))
}

pub fn sweep(spec: &SweepSpec) -> Result<PhaseGrid, PhaseError> {
    sweep_with_progress(spec, &|_| {})
}

/// Exponential fit `A e^{−n/T}` to the envelope of a 3-periodic signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifetimeFit {
    /// Filled in by scans; `None` for a bare series.
    pub theta_z: Option<f64>,
    pub lifetime: f64,
    pub std_error: f64,
    pub amplitude: f64,
    /// First and last step of the envelope samples used.
    pub window: (usize, usize),
    /// Log-envelope residuals, one per period.
    pub residuals: Vec<f64>,
}

/// `(step, max |x|)` per block of three consecutive steps.
pub fn envelope(series: &TimeSeries) -> Vec<(usize, f64)> {
    // (step of max, max, samples) per block n / 3
    let mut blocks: Vec<(usize, f64, usize)> = Vec::new();
    let mut last_period = None;
    for (n, v) in series.steps().zip(&series.values) {
        let a = v.abs();
        if last_period == Some(n / 3) {
            let b = blocks.last_mut().unwrap();
            if a > b.1 {
                (b.0, b.1) = (n, a);
            }
            b.2 += 1;
        } else {
            blocks.push((n, a, 1));
            last_period = Some(n / 3);
        }
    }
    // a trailing partial block would bias the envelope
    let full = blocks.iter().map(|b| b.2).max().unwrap_or(0);
    if blocks.last().is_some_and(|b| b.2 < full) {
        blocks.pop();
    }
    blocks.into_iter().map(|(n, a, _)| (n, a)).collect()
}

/// `fit_lifetime`: least squares on the log-envelope.
pub fn fit_lifetime(series: &TimeSeries) -> Result<LifetimeFit, PhaseError> {
    let env = envelope(series);
    if env.len() < 4 {
        return Err(PhaseError::SeriesTooShort(env.len()));
    }
    if env.iter().any(|&(_, y)| y <= 0.0 || !y.is_finite()) {
        return Err(PhaseError::FitDegenerate { reason: "nonpositive envelope".into(), sentinel: f64::NAN });
    }
    let xs: Vec<f64> = env.iter().map(|&(n, _)| n as f64).collect();
    let ys: Vec<f64> = env.iter().map(|&(_, y)| y.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    let span = xs[xs.len() - 1] - xs[0];
    if slope * span > -1e-9 {
        return Err(PhaseError::FitDegenerate {
            reason: format!("envelope does not decay (slope {slope:.3e})"),
            sentinel: f64::INFINITY,
        });
    }
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let slope_se = if env.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(LifetimeFit {
        theta_z: None,
        lifetime: -1.0 / slope,
        std_error: slope_se / (slope * slope),
        amplitude: intercept.exp(),
        window: (env[0].0, env[env.len() - 1].0),
        residuals,
    })
}

/// Lifetime for display and ranking: the fitted `T`, or the sentinel of a
/// degenerate fit.
pub fn lifetime_value(fit: &Result<LifetimeFit, PhaseError>) -> f64 {
    match fit {
        Ok(f) => f.lifetime,
        Err(PhaseError::FitDegenerate { sentinel, .. }) => *sentinel,
        Err(_) => f64::NAN,
    }
}

/// Mean-magnetization lifetimes over a list of `θ_z` at fixed `θ_x`.
pub fn lifetime_scan(
    sites: usize,
    theta_x: f64,
    theta_z: &[f64],
    steps: usize,
) -> Result<Vec<(f64, Result<LifetimeFit, PhaseError>)>, crate::engine::EngineError> {
    theta_z
        .iter()
        .map(|&tz| {
            let t = evolve(&FloquetParams::new(sites, theta_x, tz, steps), &[Observable::MeanSz])?;
            let fit = fit_lifetime(&t.series[0]).map(|mut f| {
                f.theta_z = Some(tz);
                f
            });
            Ok((tz, fit))
        })
        .collect()
}

/// `predict_nt`: `[ln(1−η²) − ln(1+η²−2η cos χ)] / ln η²` with
/// `η = 1/√(1+2Lδ²)`, `δ = θ_x/2` and `χ = 9θ_z/2`.
pub fn predict_nt(theta_x: f64, theta_z: f64, sites: usize) -> Result<f64, PhaseError> {
    if !theta_x.is_finite() || !theta_z.is_finite() || sites == 0 {
        return Err(PhaseError::Domain(format!("θ_x = {theta_x}, θ_z = {theta_z}, L = {sites}")));
    }
    if theta_x == 0.0 {
        return Err(PhaseError::DivergentLimit { sentinel: f64::INFINITY });
    }
    let delta = theta_x / 2.0;
    let eta2 = 1.0 / (1.0 + 2.0 * sites as f64 * delta * delta);
    let eta = eta2.sqrt();
    let chi = 4.5 * theta_z;
    let a = 1.0 - eta2;
    let b = 1.0 + eta2 - 2.0 * eta * chi.cos();
    if a <= 0.0 || b <= 0.0 {
        return Err(PhaseError::Domain(format!("log argument nonpositive (1−η² = {a:e}, 1+η²−2η cos χ = {b:e})")));
    }
    Ok((a.ln() - b.ln()) / eta2.ln())
}

/// `⌊n_t⌋`.
pub fn thermalization_step(theta_x: f64, theta_z: f64, sites: usize) -> Result<f64, PhaseError> {
    predict_nt(theta_x, theta_z, sites).map(f64::floor)
}

/// First recorded step where the series drops to `level` or below.
pub fn first_crossing(series: &TimeSeries, level: f64) -> Option<usize> {
    series.steps().zip(&series.values).find(|(_, v)| **v <= level).map(|(n, _)| n)
}

/// Interior local minima of `ys(xs)` on a uniform grid, each refined by the
/// vertex of the parabola through it and its neighbours.
pub fn local_minima(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    if xs.len() < 3 || xs.len() != ys.len() {
        return out;
    }
    for k in 1..xs.len() - 1 {
        let (a, b, c) = (ys[k - 1], ys[k], ys[k + 1]);
        if !(b < a && b <= c) {
            continue;
        }
        let h = xs[k + 1] - xs[k];
        let curv = a - 2.0 * b + c;
        let shift = if curv > 0.0 { 0.5 * h * (a - c) / curv } else { 0.0 };
        out.push(xs[k] + shift.clamp(-h / 2.0, h / 2.0));
    }
    out
}

/// `find_dips`: minima of the time-averaged overlap along one `θ_x` row.
/// Rows with fewer than five columns give no dips.
pub fn find_dips(grid: &PhaseGrid, row: usize) -> Vec<f64> {
    if row >= grid.rows() || grid.cols() < 5 {
        return Vec::new();
    }
    local_minima(&grid.theta_z, &grid.row_values(GridObservable::Overlap, row))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn synthetic(t: f64, steps: usize) -> TimeSeries {
        let cycle = [0.0, 1.0, -1.0];
        TimeSeries::from_values("mean_Sz", 1, (0..=steps).map(|n| (-(n as f64) / t).exp() * cycle[n % 3]).collect())
    }

    #[test]
    fn axis_parsing_and_values() {
        let a: GridAxis = "0:3.0:4".parse().unwrap();
        assert_eq!(a.values(), vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(a.to_string().parse::<GridAxis>().unwrap(), a);
        assert!("0:1".parse::<GridAxis>().is_err());
        assert!("0:1:0".parse::<GridAxis>().is_err());
    }

    #[test]
    fn synthetic_lifetime() {
        let fit = fit_lifetime(&synthetic(10.0, 60)).unwrap();
        assert!((fit.lifetime - 10.0).abs() < 0.2, "{}", fit.lifetime);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-9));
    }

    #[test]
    fn flat_envelope_is_degenerate() {
        let flat = synthetic(f64::INFINITY, 30);
        let fit = fit_lifetime(&flat);
        assert!(matches!(fit, Err(PhaseError::FitDegenerate { sentinel, .. }) if sentinel.is_infinite()));
        assert_eq!(lifetime_value(&fit), f64::INFINITY);
        assert!(matches!(fit_lifetime(&synthetic(5.0, 6)), Err(PhaseError::SeriesTooShort(2))));
    }

    #[test]
    fn trivial_drive_has_no_decay() {
        let scan = lifetime_scan(4, 0.0, &[0.7], 30).unwrap();
        assert_eq!(lifetime_value(&scan[0].1), f64::INFINITY);
    }

    #[test]
    fn predictor_limits() {
        assert!(matches!(predict_nt(0.0, 1.0, 8), Err(PhaseError::DivergentLimit { .. })));
        // periodic in θ_z with period 4π/9
        let a = predict_nt(0.3, 0.4, 10).unwrap();
        let b = predict_nt(0.3, 0.4 + 4.0 * PI / 9.0, 10).unwrap();
        assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
        // larger L, smaller η
        let small = predict_nt(0.2, 1.0, 8).unwrap();
        let large = predict_nt(0.2, 1.0, 16).unwrap();
        assert!(large < small);
        assert!(predict_nt(f64::NAN, 0.1, 4).is_err());
    }

    #[test]
    fn minima_of_synthetic_rows() {
        let xs: Vec<f64> = (0..40).map(|k| k as f64 * 0.1).collect();
        let mono: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!(local_minima(&xs, &mono).is_empty());
        let star = 1.234;
        let para: Vec<f64> = xs.iter().map(|x| (x - star).powi(2)).collect();
        let dips = local_minima(&xs, &para);
        assert_eq!(dips.len(), 1);
        assert!((dips[0] - star).abs() < 1e-12);
    }

    #[test]
    fn trivial_row_averages_to_one() {
        let mut spec = SweepSpec::new(GridAxis::new(0.0, 0.0, 1), GridAxis::new(0.0, 2.0, 5), 4, 30);
        spec.observables.entropy = false;
        let grid = sweep(&spec).unwrap();
        assert_eq!(grid.cells.len(), 5);
        for c in &grid.cells {
            assert!((c.overlap - 1.0).abs() < 1e-10);
            assert!((c.fq - 1.0).abs() < 1e-10);
            assert!(c.entropy.is_nan());
        }
        assert!(find_dips(&grid, 0).is_empty());
    }

    #[test]
    fn parallel_and_sequential_grids_agree() {
        let spec = SweepSpec::new(GridAxis::new(0.1, 0.5, 3), GridAxis::new(0.0, PI, 4), 4, 12);
        assert_eq!(sweep(&spec).unwrap(), sweep_sequential(&spec).unwrap());
    }

    #[test]
    fn mps_cells_flag_chi_cap() {
        let mut spec = SweepSpec::new(GridAxis::new(1.0, 1.0, 1), GridAxis::new(1.0, 1.0, 1), 8, 12);
        spec.engine = SweepEngine::Mps(TebdOptions {
            policy: crate::mps::TruncationPolicy { tolerance: 1e-12, chi_cap: 2 },
            trotter_substeps: 1,
        });
        let grid = sweep(&spec).unwrap();
        assert!(matches!(grid.cells[0].status, CellStatus::ChiCapExceeded { .. }));
        assert_eq!(grid.flagged().count(), 1);
    }

    #[test]
    fn level_set_and_argmax() {
        let grid = PhaseGrid {
            theta_x: vec![0.0, 1.0],
            theta_z: vec![0.0, 1.0, 2.0],
            sites: 2,
            cycles: 0,
            stride: 3,
            cells: [0.9, 0.8, 0.2, 0.7, 0.3, 0.1]
                .iter()
                .enumerate()
                .map(|(k, &o)| CellResult {
                    theta_x: 0.0,
                    theta_z: 0.0,
                    overlap: o,
                    entropy: 0.0,
                    fq: k as f64,
                    max_chi: None,
                    status: CellStatus::Ok,
                })
                .collect(),
        };
        assert_eq!(grid.argmax(GridObservable::Qfi), Some((1, 2)));
        let ls = grid.level_set(GridObservable::Overlap, 0.5);
        assert!(ls.contains(&(0, 1)) && ls.contains(&(0, 2)) && !ls.contains(&(0, 0)));
        assert_eq!(grid.distance_to_level_set(GridObservable::Overlap, 0.5, (1, 2)), Some(1));
        assert_eq!(grid.distance_to_level_set(GridObservable::Overlap, 0.5, (0, 2)), Some(0));
    }
}
