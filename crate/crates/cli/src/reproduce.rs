//! Canonical parameter sets behind each figure, at desk scale by default.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qutrit_floquet::engine::{evolve, FloquetParams, Observable};
use qutrit_floquet::mps::{mps_evolve, TebdOptions, TruncationPolicy};
use qutrit_floquet::observables::{dft, TimeSeries};
use qutrit_floquet::phase::{
    self, find_dips, fit_lifetime, lifetime_value, GridAxis, GridObservables, PhaseError,
    SweepSpec,
};
use serde::Serialize;

use crate::cli::Figure;
use crate::commands::run_sweep;
use crate::output::{self, RunManifest};
use crate::{engine_err, CliError};

impl Figure {
    pub fn id(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4a => "fig4a",
            Figure::Fig4c => "fig4c",
            Figure::Fig5a => "fig5a",
            Figure::Fig5b => "fig5b",
            Figure::Fig5c => "fig5c",
            Figure::Dips => "dips",
        }
    }
}

/// θ_z values of the short-chain magnetization runs: `0, 0.1, …, 2.5`.
pub fn fig2_theta_z() -> Vec<f64> {
    (0..=25).map(|k| k as f64 / 10.0).collect()
}

/// Phase-diagram grid. Desk scale: L=8, 150 cycles; full: L=10, 500 cycles.
pub fn phase_grid_spec(full: bool) -> SweepSpec {
    let (sites, cycles) = if full { (10, 500) } else { (8, 150) };
    SweepSpec::new(GridAxis::new(0.0, 0.6, 25), GridAxis::new(0.0, PI, 25), sites, cycles)
}

/// The θ_x = 0.05 row used for dip finding.
pub fn dip_row_spec(full: bool) -> SweepSpec {
    let (sites, cycles) = if full { (10, 500) } else { (8, 150) };
    SweepSpec::new(GridAxis::new(0.05, 0.05, 1), GridAxis::new(0.0, PI, 60), sites, cycles)
}

pub const DIP_TARGETS: [f64; 3] = [4.0 * PI / 9.0, 6.0 * PI / 9.0, 8.0 * PI / 9.0];

#[derive(Serialize)]
struct Plan<'a> {
    figure: &'a str,
    full: bool,
    #[serde(flatten)]
    detail: serde_json::Value,
}

struct Run {
    dir: PathBuf,
    manifest: RunManifest,
    start: Instant,
}

impl Run {
    fn new(out: &Path, figure: Figure, full: bool, detail: serde_json::Value, engine: &str) -> Result<Self, CliError> {
        let dir = out.join(figure.id());
        output::ensure_dir(&dir)?;
        let plan = Plan { figure: figure.id(), full, detail };
        Ok(Run { dir, manifest: RunManifest::new("reproduce", plan, engine), start: Instant::now() })
    }

    fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let n = output::write_table(&path, header, rows)?;
        self.manifest.record(&self.dir, &path, n);
        Ok(())
    }

    fn finish(mut self) -> Result<PathBuf, CliError> {
        self.manifest.wall_seconds = self.start.elapsed().as_secs_f64();
        self.manifest.write(&self.dir)?;
        Ok(self.dir)
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn long_series(key: f64, series: &[TimeSeries]) -> Vec<Vec<String>> {
    let (_, rows) = output::series_rows(series);
    rows.into_iter()
        .map(|r| {
            let mut row = vec![num(key)];
            row.extend(r);
            row
        })
        .collect()
}

fn spectrum_rows(key: f64, series: &[TimeSeries]) -> Result<Vec<Vec<String>>, CliError> {
    let spectra = series.iter().map(|s| dft(s).map_err(engine_err)).collect::<Result<Vec<_>, _>>()?;
    let n = spectra[0].len();
    Ok((0..n)
        .map(|k| {
            let mut row = vec![num(key), k.to_string(), num(spectra[0].frequency(k))];
            row.extend(spectra.iter().map(|s| num(s.magnitudes[k])));
            row
        })
        .collect())
}

fn header_with<'a>(lead: &[&'a str], series: &'a [TimeSeries]) -> Vec<&'a str> {
    let mut h = lead.to_vec();
    h.extend(series.iter().map(|s| s.label.as_str()));
    h
}

fn magnetization_runs(
    run: &mut Run,
    sites: usize,
    theta_x: f64,
    theta_z: &[f64],
    steps: usize,
    zz: (usize, usize),
) -> Result<Vec<(f64, Vec<TimeSeries>)>, CliError> {
    let obs = [Observable::MeanSz, Observable::Zz(zz.0, zz.1)];
    let mut all = Vec::new();
    let mut drift: f64 = 0.0;
    for &tz in theta_z {
        let t = evolve(&FloquetParams::new(sites, theta_x, tz, steps), &obs).map_err(engine_err)?;
        drift = drift.max(t.max_norm_drift);
        all.push((tz, t.series));
    }
    run.manifest.diagnostics.max_norm_drift = Some(drift);
    let labels = &all[0].1;
    let series_rows: Vec<Vec<String>> = all.iter().flat_map(|(tz, s)| long_series(*tz, s)).collect();
    run.table("series.csv", &header_with(&["theta_z", "step"], labels), &series_rows)?;
    let mut spec_rows = Vec::new();
    for (tz, s) in &all {
        spec_rows.extend(spectrum_rows(*tz, s)?);
    }
    run.table("spectrum.csv", &header_with(&["theta_z", "k", "frequency"], labels), &spec_rows)?;
    Ok(all)
}

fn fig2(out: &Path, full: bool) -> Result<PathBuf, CliError> {
    let (sites, theta_x, steps) = (4, 0.2, 20);
    let tz = fig2_theta_z();
    let detail = serde_json::json!({"L": sites, "theta_x": theta_x, "steps": steps, "theta_z": tz, "zz_sites": [2, 3]});
    let mut run = Run::new(out, Figure::Fig2, full, detail, "exact")?;
    let all = magnetization_runs(&mut run, sites, theta_x, &tz, steps, (1, 2))?;
    let rows: Vec<Vec<String>> = all
        .iter()
        .map(|(tz, s)| {
            let fit = fit_lifetime(&s[0]);
            let (err, status) = match &fit {
                Ok(f) => (num(f.std_error), "ok".to_string()),
                Err(PhaseError::FitDegenerate { .. }) => (num(f64::NAN), "no_decay".into()),
                Err(e) => (num(f64::NAN), e.to_string()),
            };
            vec![num(*tz), num(lifetime_value(&fit)), err, status]
        })
        .collect();
    run.table("lifetime.csv", &["theta_z", "lifetime", "std_error", "status"], &rows)?;
    run.finish()
}

fn fig3(out: &Path, full: bool) -> Result<PathBuf, CliError> {
    let sites = if full { 12 } else { 10 };
    let (theta_x, steps) = (0.2, 200);
    let tz = [0.0, 0.5, 1.0, 2.0];
    let mid = sites / 2 - 1;
    let detail = serde_json::json!({"L": sites, "theta_x": theta_x, "steps": steps, "theta_z": tz, "zz_sites": [mid + 1, sites]});
    let mut run = Run::new(out, Figure::Fig3, full, detail, "exact")?;
    magnetization_runs(&mut run, sites, theta_x, &tz, steps, (mid, sites - 1))?;
    run.finish()
}

fn stride3_runs(
    out: &Path,
    figure: Figure,
    full: bool,
    sites: usize,
    steps: usize,
    tz: &[f64],
    obs: Observable,
) -> Result<PathBuf, CliError> {
    let theta_x = 0.2;
    let detail = serde_json::json!({"L": sites, "theta_x": theta_x, "steps": steps, "stride": 3, "theta_z": tz});
    let mut run = Run::new(out, figure, full, detail, "exact")?;
    let mut rows = Vec::new();
    let mut header = Vec::new();
    let mut drift: f64 = 0.0;
    for &z in tz {
        let t = evolve(&FloquetParams::new(sites, theta_x, z, steps).with_stride(3), &[obs]).map_err(engine_err)?;
        drift = drift.max(t.max_norm_drift);
        header = vec!["theta_z".to_string(), "step".into(), t.series[0].label.clone()];
        rows.extend(long_series(z, &t.series));
    }
    run.manifest.diagnostics.max_norm_drift = Some(drift);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    run.table("series.csv", &header, &rows)?;
    run.finish()
}

fn grid_figure(out: &Path, figure: Figure, full: bool, selection: GridObservables) -> Result<PathBuf, CliError> {
    let mut spec = phase_grid_spec(full);
    spec.observables = selection;
    let dir = out.join(figure.id());
    run_sweep(&spec, &dir, true, &format!("reproduce {}", figure.id()))?;
    Ok(dir)
}

fn dips(out: &Path, full: bool) -> Result<PathBuf, CliError> {
    let spec = dip_row_spec(full);
    let detail = serde_json::to_value(&spec).expect("spec serializes");
    let mut run = Run::new(out, Figure::Dips, full, detail, "exact")?;
    let grid = phase::sweep(&spec)?;
    let rows: Vec<Vec<String>> = (0..grid.cols())
        .map(|c| {
            let cell = grid.cell(0, c);
            let nt = phase::predict_nt(cell.theta_x, cell.theta_z, spec.sites).unwrap_or(f64::NAN);
            vec![num(cell.theta_z), num(cell.overlap), num(cell.entropy), num(cell.fq), num(nt)]
        })
        .collect();
    run.table("row.csv", &["theta_z", "overlap", "entropy", "fQ", "n_t"], &rows)?;
    let found = find_dips(&grid, 0);
    let rows: Vec<Vec<String>> = found
        .iter()
        .map(|&d| {
            let nearest = DIP_TARGETS.iter().copied().min_by(|a, b| (a - d).abs().total_cmp(&(b - d).abs())).unwrap();
            vec![num(d), num(nearest), num(d - nearest)]
        })
        .collect();
    run.table("dips.csv", &["theta_z", "nearest_target", "offset"], &rows)?;
    run.finish()
}

/// Peak of `f_Q` over time for one TEBD run.
pub fn qfi_peak(sites: usize, theta_x: f64, theta_z: f64, cycles: usize, options: &TebdOptions) -> Result<(f64, usize, usize), CliError> {
    let t = mps_evolve(&FloquetParams::new(sites, theta_x, theta_z, cycles), options, &[Observable::Qfi])
        .map_err(engine_err)?;
    let s = &t.series[0];
    let (k, v) = s
        .values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, v)| (k, *v))
        .unwrap_or((0, f64::NAN));
    Ok((v, k * s.stride, t.max_chi.iter().copied().max().unwrap_or(1)))
}

/// Least-squares line `y = a + b x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}

/// The f_Q maximum at θ_x = 0.04 sits on a narrow ridge near θ_z ≈ 0.03,
/// so the scan stays within [0, 0.1].
pub fn fig5c_plan(full: bool) -> (Vec<usize>, Vec<f64>) {
    if full {
        (vec![8, 12, 16, 20], (0..=20).map(|k| k as f64 * 0.005).collect())
    } else {
        (vec![8, 12], (0..=8).map(|k| k as f64 * 0.0125).collect())
    }
}

fn fig5c(out: &Path, full: bool) -> Result<PathBuf, CliError> {
    let (sizes, tz) = fig5c_plan(full);
    let (theta_x, cycles) = (0.04, 100);
    let options = TebdOptions { policy: TruncationPolicy { tolerance: 1e-6, chi_cap: 600 }, trotter_substeps: 1 };
    let detail = serde_json::json!({"L": sizes, "theta_x": theta_x, "cycles": cycles, "theta_z": tz, "tebd": options});
    let mut run = Run::new(out, Figure::Fig5c, full, detail, "tebd")?;
    let mut rows = Vec::new();
    let mut peaks = Vec::new();
    let mut max_chi = 0;
    for &l in &sizes {
        let mut best = f64::NEG_INFINITY;
        for &z in &tz {
            let (v, step, chi) = qfi_peak(l, theta_x, z, cycles, &options)?;
            max_chi = max_chi.max(chi);
            best = best.max(v);
            rows.push(vec![l.to_string(), num(z), num(v), step.to_string(), chi.to_string()]);
        }
        peaks.push(best);
    }
    run.manifest.diagnostics.max_chi = Some(max_chi);
    run.table("maxima.csv", &["L", "theta_z", "max_fQ", "step", "max_chi"], &rows)?;
    let inv: Vec<f64> = sizes.iter().map(|&l| 1.0 / l as f64).collect();
    let rows: Vec<Vec<String>> =
        sizes.iter().zip(&inv).zip(&peaks).map(|((l, x), p)| vec![l.to_string(), num(*x), num(*p)]).collect();
    run.table("peaks.csv", &["L", "inv_L", "peak_fQ"], &rows)?;
    if sizes.len() >= 2 {
        let (a, b) = linear_fit(&inv, &peaks);
        run.manifest.diagnostics.notes.push(format!("peak_fQ = {a} + {b} / L; extrapolated {a}"));
    }
    run.finish()
}

pub fn reproduce(figure: Figure, out: &Path, full: bool) -> Result<PathBuf, CliError> {
    match figure {
        Figure::Fig2 => fig2(out, full),
        Figure::Fig3 => fig3(out, full),
        Figure::Fig4a => grid_figure(out, figure, full, GridObservables { overlap: true, entropy: true, qfi: false }),
        Figure::Fig5a => grid_figure(out, figure, full, GridObservables { overlap: false, entropy: false, qfi: true }),
        Figure::Fig4c => {
            let sites = if full { 12 } else { 10 };
            stride3_runs(out, figure, full, sites, 600, &[0.0, 0.5, 1.0, 1.5], Observable::Overlap)
        }
        Figure::Fig5b => {
            let steps = if full { 500 } else { 150 };
            stride3_runs(out, figure, full, 10, steps, &[0.0, 0.5, 1.0], Observable::Qfi)
        }
        Figure::Fig5c => fig5c(out, full),
        Figure::Dips => dips(out, full),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_recovers_line() {
        let xs = [0.125, 1.0 / 12.0, 0.0625];
        let ys: Vec<f64> = xs.iter().map(|x| 2.4 - 3.0 * x).collect();
        let (a, b) = linear_fit(&xs, &ys);
        assert!((a - 2.4).abs() < 1e-12 && (b + 3.0).abs() < 1e-12);
    }

    #[test]
    fn grids_have_desk_and_full_scales() {
        assert_eq!(phase_grid_spec(false).sites, 8);
        assert_eq!(phase_grid_spec(true).cycles, 500);
        assert_eq!(dip_row_spec(false).theta_z.points, 60);
        assert_eq!(fig2_theta_z().len(), 26);
    }
}
