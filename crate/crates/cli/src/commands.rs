//! Subcommand implementations.

use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use qutrit_floquet::compiler::{self, CompileError, NativeGate, LEAKAGE_TOL, SUBSPACE_TOL};
use qutrit_floquet::engine::{evolve, FloquetParams, Observable};
use qutrit_floquet::mps::{itebd_magnetization, mps_evolve};
use qutrit_floquet::observables::TimeSeries;
use qutrit_floquet::ops::{self, Axis, OPERATOR_NAMES};
use qutrit_floquet::phase::{self, GridAxis, GridObservable, GridObservables, SweepEngine, SweepSpec};
use serde::Serialize;

use crate::cli::{CompileArgs, MpsArgs, OpsCommand, PredictArgs, RunArgs, SweepArgs};
use crate::config::{EngineKind, MpsMode, RunConfig};
use crate::output::{self, RunManifest};
use crate::{engine_err, CliError};

/// Merges `--config` with explicit flags.
pub fn run_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => {
            let missing = |what: &str| CliError::Config(format!("--{what} is required without --config"));
            RunConfig::new(
                args.sites.ok_or_else(|| missing("L"))?,
                args.theta_x.ok_or_else(|| missing("theta-x"))?,
                args.theta_z.ok_or_else(|| missing("theta-z"))?,
                args.steps.ok_or_else(|| missing("steps"))?,
            )
        }
    };
    if let Some(v) = args.sites {
        config.sites = v;
    }
    if let Some(v) = args.theta_x {
        config.theta_x = v;
    }
    if let Some(v) = args.theta_z {
        config.theta_z = v;
    }
    if let Some(v) = args.steps {
        config.steps = v;
    }
    if let Some(v) = args.epsilon {
        config.epsilon = v;
    }
    if let Some(v) = args.stride {
        config.measure_every = v;
    }
    if let Some(v) = args.ux_mode {
        config.ux_mode = v;
    }
    if let Some(v) = &args.observables {
        config.observables = v.clone();
    }
    if let Some(v) = &args.out {
        config.out = Some(v.display().to_string());
    }
    Ok(config)
}

fn emit_series(config: &RunConfig, series: &[TimeSeries], manifest: &mut RunManifest) -> Result<(), CliError> {
    match &config.out {
        Some(dir) => {
            let dir = Path::new(dir);
            output::ensure_dir(dir)?;
            let path = dir.join("series.csv");
            let rows = output::write_series(&path, series)?;
            manifest.record(dir, &path, rows);
            manifest.write(dir)?;
        }
        None => {
            let (header, rows) = output::series_rows(series);
            let mut w = csv::Writer::from_writer(std::io::stdout().lock());
            let io = |e: csv::Error| CliError::Io(e.to_string());
            w.write_record(&header).map_err(io)?;
            for r in rows {
                w.write_record(&r).map_err(io)?;
            }
            w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    Ok(())
}

pub fn evolve_cmd(args: &RunArgs) -> Result<(), CliError> {
    let mut config = run_config(args)?;
    config.engine = EngineKind::Exact;
    config.validate()?;
    let start = Instant::now();
    let trajectory = evolve(&config.params(), &config.parsed_observables()?).map_err(engine_err)?;
    let mut manifest = RunManifest::new("evolve", &config, "exact");
    manifest.wall_seconds = start.elapsed().as_secs_f64();
    manifest.diagnostics.max_norm_drift = Some(trajectory.max_norm_drift);
    emit_series(&config, &trajectory.series, &mut manifest)
}

pub fn mps_config(args: &MpsArgs) -> Result<RunConfig, CliError> {
    let mut config = run_config(&args.run)?;
    config.engine = EngineKind::Mps;
    if let Some(v) = args.chi_cap {
        config.chi_cap = v;
    }
    if let Some(v) = args.tebd_tol {
        config.tebd_tol = v;
    }
    if let Some(v) = args.trotter_substeps {
        config.trotter_substeps = v;
    }
    if let Some(v) = args.mode {
        config.mps_mode = v;
    }
    config.validate()?;
    Ok(config)
}

pub fn mps_evolve_cmd(args: &MpsArgs) -> Result<(), CliError> {
    let config = mps_config(args)?;
    let start = Instant::now();
    let options = config.tebd_options();
    match config.mps_mode {
        MpsMode::Finite => {
            let t = mps_evolve(&config.params(), &options, &config.parsed_observables()?).map_err(engine_err)?;
            let mut manifest = RunManifest::new("mps-evolve", &config, "tebd");
            manifest.wall_seconds = start.elapsed().as_secs_f64();
            manifest.diagnostics.max_chi = t.max_chi.iter().copied().max();
            manifest.diagnostics.discarded_weight = t.discarded.last().copied();
            if let Some(dir) = &config.out {
                let dir = Path::new(dir);
                output::ensure_dir(dir)?;
                let path = dir.join("truncation.csv");
                let stride = config.measure_every;
                let rows: Vec<Vec<String>> = t
                    .max_chi
                    .iter()
                    .zip(&t.discarded)
                    .enumerate()
                    .map(|(k, (chi, w))| vec![(k * stride).to_string(), chi.to_string(), format!("{w}")])
                    .collect();
                let n = output::write_table(&path, &["step", "max_chi", "discarded_weight"], &rows)?;
                manifest.record(dir, &path, n);
            }
            emit_series(&config, &t.series, &mut manifest)
        }
        MpsMode::Infinite => {
            let (series, stats) = itebd_magnetization(&config.params(), &options).map_err(engine_err)?;
            let mut manifest = RunManifest::new("mps-evolve", &config, "itebd");
            manifest.wall_seconds = start.elapsed().as_secs_f64();
            manifest.diagnostics.max_chi = Some(stats.max_chi);
            manifest.diagnostics.discarded_weight = Some(stats.discarded);
            let others: Vec<&String> = config.observables.iter().filter(|o| o.as_str() != "mean_Sz").collect();
            if !others.is_empty() {
                let note = format!("infinite mode records mean_Sz only; ignored {others:?}");
                eprintln!("{note}");
                manifest.diagnostics.notes.push(note);
            }
            emit_series(&config, &[series], &mut manifest)
        }
    }
}

fn parse_axis_arg(flag: &str, s: &str) -> Result<GridAxis, CliError> {
    s.parse().map_err(|e| CliError::Config(format!("--{flag}: {e}")))
}

pub fn parse_grid_observables(names: &[String]) -> Result<GridObservables, CliError> {
    let mut sel = GridObservables { overlap: false, entropy: false, qfi: false };
    for n in names {
        match n.parse::<GridObservable>()? {
            GridObservable::Overlap => sel.overlap = true,
            GridObservable::Entropy => sel.entropy = true,
            GridObservable::Qfi => sel.qfi = true,
        }
    }
    Ok(sel)
}

pub fn sweep_spec(args: &SweepArgs) -> Result<SweepSpec, CliError> {
    let base = args.config.as_deref().map(RunConfig::load).transpose()?;
    let section = base.as_ref().and_then(|c| c.sweep.clone());
    let grid_x = match (&args.grid_x, &section) {
        (Some(s), _) => parse_axis_arg("grid-x", s)?,
        (None, Some(sec)) => sec.grid_x,
        (None, None) => return Err(CliError::Config("--grid-x is required".into())),
    };
    let grid_z = match (&args.grid_z, &section) {
        (Some(s), _) => parse_axis_arg("grid-z", s)?,
        (None, Some(sec)) => sec.grid_z,
        (None, None) => return Err(CliError::Config("--grid-z is required".into())),
    };
    let sites = args
        .sites
        .or(base.as_ref().map(|c| c.sites))
        .ok_or_else(|| CliError::Config("--L is required".into()))?;
    let cycles = args
        .cycles
        .or(section.as_ref().map(|s| s.cycles))
        .ok_or_else(|| CliError::Config("--cycles is required".into()))?;
    let mut spec = SweepSpec::new(grid_x, grid_z, sites, cycles);
    spec.epsilon = args.epsilon.or(base.as_ref().map(|c| c.epsilon)).unwrap_or(0.0);
    let engine = args.engine.or(base.as_ref().map(|c| c.engine)).unwrap_or_default();
    if engine == EngineKind::Mps {
        let mut cfg = base.clone().unwrap_or_else(|| RunConfig::new(sites, 0.0, 0.0, cycles));
        cfg.engine = EngineKind::Mps;
        if let Some(v) = args.tebd_tol {
            cfg.tebd_tol = v;
        }
        if let Some(v) = args.chi_cap {
            cfg.chi_cap = v;
        }
        cfg.validate()?;
        spec.engine = SweepEngine::Mps(cfg.tebd_options());
    }
    if let Some(names) = &args.observables {
        spec.observables = parse_grid_observables(names)?;
    }
    spec.validate()?;
    Ok(spec)
}

fn selected(spec: &SweepSpec) -> Vec<GridObservable> {
    GridObservable::ALL
        .into_iter()
        .filter(|o| match o {
            GridObservable::Overlap => spec.observables.overlap,
            GridObservable::Entropy => spec.observables.entropy,
            GridObservable::Qfi => spec.observables.qfi,
        })
        .collect()
}

/// Runs a sweep and writes one CSV per observable plus a manifest.
pub fn run_sweep(spec: &SweepSpec, dir: &Path, matrix: bool, command: &str) -> Result<phase::PhaseGrid, CliError> {
    output::ensure_dir(dir)?;
    let total = spec.theta_x.points * spec.theta_z.points;
    let done = AtomicUsize::new(0);
    let start = Instant::now();
    let progress = |_k: usize| {
        let d = done.fetch_add(1, Ordering::Relaxed) + 1;
        if d == total || d.is_multiple_of((total / 10).max(1)) {
            eprintln!("sweep: {d}/{total} cells");
        }
    };
    let grid = phase::sweep_with_progress(spec, &progress)?;
    let engine = match spec.engine {
        SweepEngine::Exact => "exact",
        SweepEngine::Mps(_) => "tebd",
    };
    let mut manifest = RunManifest::new(command, spec, engine);
    manifest.wall_seconds = start.elapsed().as_secs_f64();
    manifest.diagnostics.flagged_cells = Some(grid.flagged().count());
    manifest.diagnostics.max_chi = grid.cells.iter().filter_map(|c| c.max_chi).max();
    for obs in selected(spec) {
        let path = dir.join(format!("{}.csv", obs.label()));
        let rows = output::write_grid(&path, &grid, obs)?;
        manifest.record(dir, &path, rows);
        if matrix {
            let path = dir.join(format!("{}.dat", obs.label()));
            let rows = output::write_matrix(&path, &grid, obs)?;
            manifest.record(dir, &path, rows);
        }
    }
    manifest.write(dir)?;
    Ok(grid)
}

pub fn sweep_cmd(args: &SweepArgs) -> Result<(), CliError> {
    let spec = sweep_spec(args)?;
    let grid = run_sweep(&spec, &args.out, args.matrix, "sweep")?;
    let flagged = grid.flagged().count();
    if flagged > 0 {
        eprintln!("sweep: {flagged} cells flagged (see status column)");
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct CouplingCheck {
    axis: Axis,
    theta: f64,
    subspace_residual: f64,
    leakage: f64,
    subspace_tolerance: f64,
    leakage_tolerance: f64,
    gate_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    ledger_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ledger_gate_count: Option<usize>,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    gates: Option<Vec<NativeGate>>,
}

#[derive(Debug, Serialize)]
struct CycleCheck {
    params: FloquetParams,
    #[serde(flatten)]
    report: compiler::CycleReport,
    threshold: f64,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    gates: Option<Vec<NativeGate>>,
}

fn compile_err(e: CompileError) -> CliError {
    match e {
        CompileError::UnsupportedAxis(_) | CompileError::TooLarge(_) | CompileError::Engine(_) => {
            CliError::Config(e.to_string())
        }
        CompileError::VerificationFailed { .. } | CompileError::NonDiagonalResidual { .. } => {
            CliError::Verification(e.to_string())
        }
        other => CliError::Engine(other.to_string()),
    }
}

fn print_json(v: &impl Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("report serializes"));
}

pub fn compile_check_cmd(args: &CompileArgs) -> Result<(), CliError> {
    if args.cycle {
        let params = FloquetParams::new(args.sites, args.theta_x, args.theta_z, 1).with_epsilon(args.epsilon);
        let report = compiler::cycle_report(&params).map_err(compile_err)?;
        let passed = report.explicit_residual <= args.threshold
            && report.ledger_residual <= args.threshold
            && report.leakage <= LEAKAGE_TOL;
        let gates = args.emit.then(|| compiler::compile_cycle(&params)).transpose().map_err(compile_err)?;
        print_json(&CycleCheck { params, report, threshold: args.threshold, passed, gates: gates.map(|s| s.gates) });
        return if passed { Ok(()) } else { Err(CliError::Verification("compiled cycle exceeds threshold".into())) };
    }
    let report = compiler::coupling_report(args.axis, args.theta).map_err(compile_err)?;
    let seq = compiler::compile_coupling(args.axis, args.theta).map_err(compile_err)?;
    let (ledger_residual, ledger_gate_count) = if args.ledger {
        let residual = compiler::ledger_residual(&seq).map_err(compile_err)?;
        let (tracked, _) = compiler::ledger_compile(&seq).map_err(compile_err)?;
        (Some(residual), Some(tracked.len()))
    } else {
        (None, None)
    };
    let passed = report.subspace_residual <= SUBSPACE_TOL
        && report.leakage <= LEAKAGE_TOL
        && ledger_residual.is_none_or(|r| r <= SUBSPACE_TOL);
    let check = CouplingCheck {
        axis: args.axis,
        theta: args.theta,
        subspace_residual: report.subspace_residual,
        leakage: report.leakage,
        subspace_tolerance: SUBSPACE_TOL,
        leakage_tolerance: LEAKAGE_TOL,
        gate_count: seq.len(),
        ledger_residual,
        ledger_gate_count,
        passed,
        gates: args.emit.then(|| seq.gates.clone()),
    };
    print_json(&check);
    if passed {
        Ok(())
    } else {
        Err(CliError::Verification(format!("{} coupling at θ = {}", args.axis, args.theta)))
    }
}

#[derive(Debug, Serialize)]
struct Prediction {
    theta_x: f64,
    theta_z: f64,
    sites: usize,
    n_t: f64,
    floor: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

fn prediction(theta_x: f64, theta_z: f64, sites: usize) -> Prediction {
    let (n_t, note) = match phase::predict_nt(theta_x, theta_z, sites) {
        Ok(v) => (v, None),
        Err(phase::PhaseError::DivergentLimit { sentinel }) => (sentinel, Some("θ_x = 0: no thermalization".into())),
        Err(e) => (f64::NAN, Some(e.to_string())),
    };
    Prediction { theta_x, theta_z, sites, n_t, floor: n_t.floor(), note }
}

pub fn predict_nt_cmd(args: &PredictArgs) -> Result<(), CliError> {
    if args.sites == 0 {
        return Err(CliError::Config("--L must be positive".into()));
    }
    match (&args.theta_z, &args.grid_z) {
        (Some(tz), None) => {
            print_json(&prediction(args.theta_x, *tz, args.sites));
            Ok(())
        }
        (None, Some(g)) => {
            let axis = parse_axis_arg("grid-z", g)?;
            let mut out = std::io::stdout().lock();
            writeln!(out, "theta_z,n_t,floor").map_err(|e| CliError::Io(e.to_string()))?;
            for tz in axis.values() {
                let p = prediction(args.theta_x, tz, args.sites);
                writeln!(out, "{},{},{}", tz, p.n_t, p.floor).map_err(|e| CliError::Io(e.to_string()))?;
            }
            Ok(())
        }
        _ => Err(CliError::Config("give exactly one of --theta-z or --grid-z".into())),
    }
}

#[derive(Debug, Serialize)]
struct OperatorDump {
    name: String,
    theta: f64,
    phi: f64,
    rows: usize,
    cols: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

fn dump_one(name: &str, theta: f64, phi: f64) -> Result<OperatorDump, CliError> {
    let m = ops::named_operator(name, theta, phi).map_err(|e| CliError::Config(e.to_string()))?;
    let part = |f: fn(&qutrit_floquet::C64) -> f64| {
        (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| f(&m[(r, c)])).collect()).collect()
    };
    Ok(OperatorDump {
        name: name.into(),
        theta,
        phi,
        rows: m.nrows(),
        cols: m.ncols(),
        re: part(|z| z.re),
        im: part(|z| z.im),
    })
}

pub fn ops_cmd(cmd: &OpsCommand) -> Result<(), CliError> {
    match cmd {
        OpsCommand::Dump { name, theta, phi } => {
            let names: Vec<String> = match name {
                Some(n) => vec![n.clone()],
                None => OPERATOR_NAMES
                    .iter()
                    .flat_map(|n| match *n {
                        "gell-mann-1..8" => (1..=8).map(|k| format!("gell-mann-{k}")).collect::<Vec<_>>(),
                        other => vec![other.to_string()],
                    })
                    .collect(),
            };
            let dumps = names.iter().map(|n| dump_one(n, *theta, *phi)).collect::<Result<Vec<_>, _>>()?;
            if dumps.len() == 1 {
                print_json(&dumps[0]);
            } else {
                print_json(&dumps);
            }
            Ok(())
        }
    }
}

/// Series with default labels for a quick exact run; used by `reproduce`.
pub fn exact_series(params: &FloquetParams, obs: &[Observable]) -> Result<Vec<TimeSeries>, CliError> {
    Ok(evolve(params, obs).map_err(engine_err)?.series)
}
