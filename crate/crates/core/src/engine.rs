//! Exact statevector evolution under the ternary Floquet drive
//! `U_F = P_ε U_z U_x` on an open chain.
//!
//! `U_x = exp(−i θ_x/2 Σ_j S^x_j S^x_{j+1})` is applied exactly in one of two
//! ways. [`UxMode::Exact`] rotates every site into the `S^x` eigenbasis,
//! applies the diagonal phase of the bond sum and rotates back.
//! [`UxMode::Brickwork`] applies the two-site factors bond by bond; the bond
//! terms commute, so this is exact as well and serves as an independent route.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels;
use crate::observables::{self, ObservableError, QfiResult, TimeSeries};
use crate::ops::{self, Axis, Level, TwoSiteOperator};
use crate::state::{self, basis_index, StateError, StateVector, MAX_DENSE_SITES};

/// Norm drift tolerated before a run is aborted.
pub const NORM_DRIFT_LIMIT: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("bond {bond} out of range for a chain of {sites} sites")]
    BondOutOfRange { bond: usize, sites: usize },
    #[error("norm drifted to {norm} at step {step}")]
    NormDrift { step: usize, norm: f64 },
    #[error("two-site operator must be 9×9, got local dimension {0}")]
    GateDimension(usize),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error("hook failed: {0}")]
    Hook(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UxMode {
    #[default]
    Exact,
    Brickwork,
}

impl fmt::Display for UxMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UxMode::Exact => "exact",
            UxMode::Brickwork => "brickwork",
        })
    }
}

impl FromStr for UxMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(UxMode::Exact),
            "brickwork" => Ok(UxMode::Brickwork),
            other => Err(format!("unknown ux mode `{other}` (expected exact or brickwork)")),
        }
    }
}

/// Drive parameters. Boundaries are always open.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloquetParams {
    pub sites: usize,
    pub theta_x: f64,
    pub theta_z: f64,
    pub epsilon: f64,
    pub steps: usize,
    pub measure_every: usize,
    pub ux_mode: UxMode,
}

impl FloquetParams {
    pub fn new(sites: usize, theta_x: f64, theta_z: f64, steps: usize) -> Self {
        FloquetParams { sites, theta_x, theta_z, epsilon: 0.0, steps, measure_every: 1, ux_mode: UxMode::Exact }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.measure_every = stride;
        self
    }

    pub fn with_ux_mode(mut self, mode: UxMode) -> Self {
        self.ux_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.sites < 2 {
            return Err(EngineError::InvalidParams(format!("L = {} but at least 2 sites are required", self.sites)));
        }
        if self.measure_every == 0 {
            return Err(EngineError::InvalidParams("measure_every must be positive".into()));
        }
        for (name, v) in [("theta_x", self.theta_x), ("theta_z", self.theta_z), ("epsilon", self.epsilon)] {
            if !v.is_finite() {
                return Err(EngineError::InvalidParams(format!("{name} is not finite")));
            }
        }
        Ok(())
    }

    fn validate_dense(&self) -> Result<(), EngineError> {
        self.validate()?;
        if self.sites > MAX_DENSE_SITES {
            return Err(StateError::TooLarge(self.sites).into());
        }
        Ok(())
    }
}

/// Applies a 9×9 operator to bond `(bond, bond + 1)`.
pub fn apply_two_site(psi: &mut StateVector, gate: &TwoSiteOperator, bond: usize) -> Result<(), EngineError> {
    if gate.local_dim() != 3 {
        return Err(EngineError::GateDimension(gate.local_dim()));
    }
    if bond + 1 >= psi.num_sites() {
        return Err(EngineError::BondOutOfRange { bond, sites: psi.num_sites() });
    }
    let u = row_major_81(gate);
    kernels::apply_two_site(psi.amplitudes_mut(), bond, &u);
    Ok(())
}

pub(crate) fn row_major_81(gate: &TwoSiteOperator) -> [C64; 81] {
    let m = gate.matrix();
    let mut u = [C64::new(0.0, 0.0); 81];
    for r in 0..9 {
        for c in 0..9 {
            u[9 * r + c] = m[(r, c)];
        }
    }
    u
}

/// Precomputed tables for repeated Floquet steps at fixed parameters.
#[derive(Clone, Debug)]
pub struct FloquetStepper {
    params: FloquetParams,
    kick: [C64; 9],
    to_x: [C64; 9],
    from_x: [C64; 9],
    x_bond: [C64; 81],
    energies: Vec<i8>,
    x_phases: Vec<C64>,
    z_phases: Vec<C64>,
}

impl FloquetStepper {
    pub fn new(params: &FloquetParams) -> Result<Self, EngineError> {
        params.validate_dense()?;
        let w = ops::sx_eigenbasis();
        let n_bonds = params.sites as i32 - 1;
        let phase_table = |theta: f64| -> Vec<C64> {
            (-n_bonds..=n_bonds).map(|e| C64::from_polar(1.0, -theta / 2.0 * e as f64)).collect()
        };
        Ok(FloquetStepper {
            params: params.clone(),
            kick: ops::kick_operator(params.epsilon).row_major(),
            to_x: w.adjoint().row_major(),
            from_x: w.row_major(),
            x_bond: row_major_81(&ops::two_site_coupling(Axis::X, params.theta_x)),
            energies: state::bond_energies(params.sites),
            x_phases: phase_table(params.theta_x),
            z_phases: phase_table(params.theta_z),
        })
    }

    pub fn params(&self) -> &FloquetParams {
        &self.params
    }

    fn check(&self, psi: &StateVector) {
        assert_eq!(psi.num_sites(), self.params.sites, "state and stepper disagree on L");
    }

    /// `U_x`. Skipped when `θ_x = 0`, where it is the identity.
    pub fn apply_ux(&self, psi: &mut StateVector) {
        self.check(psi);
        if self.params.theta_x == 0.0 {
            return;
        }
        let sites = self.params.sites;
        let offset = sites as i32 - 1;
        let amps = psi.amplitudes_mut();
        match self.params.ux_mode {
            UxMode::Exact => {
                for s in 0..sites {
                    kernels::apply_single_site(amps, s, &self.to_x);
                }
                kernels::apply_diagonal(amps, &self.energies, &self.x_phases, offset);
                for s in 0..sites {
                    kernels::apply_single_site(amps, s, &self.from_x);
                }
            }
            UxMode::Brickwork => {
                for bond in (0..sites - 1).step_by(2).chain((1..sites - 1).step_by(2)) {
                    kernels::apply_two_site(amps, bond, &self.x_bond);
                }
            }
        }
    }

    /// `U_z`, diagonal in the product basis.
    pub fn apply_uz(&self, psi: &mut StateVector) {
        self.check(psi);
        if self.params.theta_z == 0.0 {
            return;
        }
        let offset = self.params.sites as i32 - 1;
        kernels::apply_diagonal(psi.amplitudes_mut(), &self.energies, &self.z_phases, offset);
    }

    /// Kick on every site.
    pub fn apply_kick(&self, psi: &mut StateVector) {
        self.check(psi);
        for s in 0..self.params.sites {
            kernels::apply_single_site(psi.amplitudes_mut(), s, &self.kick);
        }
    }

    /// One Floquet cycle: `U_x`, then `U_z`, then the kick.
    pub fn step(&self, psi: &mut StateVector) {
        self.apply_ux(psi);
        self.apply_uz(psi);
        self.apply_kick(psi);
    }
}

/// One Floquet cycle with freshly built tables; prefer [`FloquetStepper`] in loops.
pub fn floquet_step(psi: &mut StateVector, params: &FloquetParams) -> Result<(), EngineError> {
    let stepper = FloquetStepper::new(params)?;
    if psi.num_sites() != params.sites {
        return Err(StateError::DimensionMismatch(psi.num_sites(), params.sites).into());
    }
    stepper.step(psi);
    Ok(())
}

/// Quantities that [`evolve`] can record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observable {
    /// `|⟨Ψ_0|ψ(n)⟩|²` against `|0⟩^{⊗L}`.
    Overlap,
    MeanSz,
    /// `⟨S^z_i S^z_j⟩`, 0-based sites.
    Zz(usize, usize),
    EntropyHalf,
    /// Scaled QFI `f_Q`.
    Qfi,
}

impl Observable {
    pub fn label(&self) -> String {
        match self {
            Observable::Overlap => "overlap".into(),
            Observable::MeanSz => "mean_Sz".into(),
            Observable::Zz(i, j) => format!("zz_{}_{}", i + 1, j + 1),
            Observable::EntropyHalf => "entropy_half".into(),
            Observable::Qfi => "fQ".into(),
        }
    }
}

/// Recorded series plus the final state and run diagnostics.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub series: Vec<TimeSeries>,
    pub qfi: Vec<QfiResult>,
    pub final_state: StateVector,
    pub max_norm_drift: f64,
}

impl Trajectory {
    pub fn series(&self, label: &str) -> Option<&TimeSeries> {
        self.series.iter().find(|s| s.label == label)
    }
}

/// Evaluates one observable on a snapshot.
pub fn measure(psi: &StateVector, obs: Observable, reference: usize) -> Result<f64, EngineError> {
    Ok(match obs {
        Observable::Overlap => observables::overlap_with_basis_state(psi, reference),
        Observable::MeanSz => observables::mean_magnetization(psi),
        Observable::Zz(i, j) => observables::zz_correlation(psi, i, j)?,
        Observable::EntropyHalf => observables::half_chain_entropy(psi),
        Observable::Qfi => observables::qfi(psi).scaled,
    })
}

/// Runs `steps` cycles from `|0⟩^{⊗L}` and calls `hook(step, ψ)` at
/// `n = 0, stride, 2·stride, …`. Aborts on norm drift above
/// [`NORM_DRIFT_LIMIT`].
pub fn evolve_with<F>(params: &FloquetParams, mut hook: F) -> Result<(StateVector, f64), EngineError>
where
    F: FnMut(usize, &StateVector) -> Result<(), EngineError>,
{
    let stepper = FloquetStepper::new(params)?;
    let mut psi = StateVector::all_zero(params.sites)?;
    hook(0, &psi)?;
    let mut max_drift: f64 = 0.0;
    for n in 1..=params.steps {
        stepper.step(&mut psi);
        if n % params.measure_every == 0 || n == params.steps {
            let drift = (psi.norm() - 1.0).abs();
            max_drift = max_drift.max(drift);
            if drift > NORM_DRIFT_LIMIT {
                return Err(EngineError::NormDrift { step: n, norm: psi.norm() });
            }
        }
        if n % params.measure_every == 0 {
            hook(n, &psi)?;
        }
    }
    Ok((psi, max_drift))
}

/// Runs the trajectory recording the requested observables.
pub fn evolve(params: &FloquetParams, observables: &[Observable]) -> Result<Trajectory, EngineError> {
    let reference = basis_index(&vec![Level::Zero; params.sites]);
    let mut series: Vec<TimeSeries> =
        observables.iter().map(|o| TimeSeries::new(o.label(), params.measure_every)).collect();
    let mut qfis = Vec::new();
    let want_qfi = observables.contains(&Observable::Qfi);
    let (final_state, max_norm_drift) = evolve_with(params, |_, psi| {
        let q = want_qfi.then(|| observables::qfi(psi));
        for (obs, s) in observables.iter().zip(series.iter_mut()) {
            let v = match (obs, q) {
                (Observable::Qfi, Some(q)) => q.scaled,
                _ => measure(psi, *obs, reference)?,
            };
            s.values.push(v);
        }
        if let Some(q) = q {
            qfis.push(q);
        }
        Ok(())
    })?;
    Ok(Trajectory { series, qfi: qfis, final_state, max_norm_drift })
}
