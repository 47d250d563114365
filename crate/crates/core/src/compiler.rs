//! Spin-spin couplings compiled from the native `MS(θ, 0)` gate and
//! two-level rotations on four-level sites `(a, +, 0, −)`.
//!
//! The dressing `D = Z_{a+}(−θ) Z_{+0}(−θ/2)` on both sites turns `MS(θ, 0)`
//! into `e^{iθ/2} (A ⊗ A) exp(−iθ/2 λ_1⊗λ_1)` with `A = diag(e^{−iθ/2}, 1, 1, 1)`,
//! so every unwanted local phase sits on the auxiliary level. Local
//! conjugations then rotate `λ_1` into `S^x` (by `V = R_2(π/2, π/2)`) or
//! `S^z` (by `C = R_3(π, 0) R_1(−π/2, π/2)`).
//!
//! Sequences are listed in temporal order: the first gate acts first.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EngineError, FloquetParams, FloquetStepper};
use crate::linalg::{kron, max_abs_diff, phase_insensitive_diff};
use crate::ops::{self, Axis, OpsError, QuditLevel, TwoSiteOperator};
use crate::state::StateVector;

/// Residual allowed when checking that a tracked phase commutes with MS.
const COMMUTE_TOL: f64 = 1e-12;
/// Largest chain simulated densely in the four-level encoding.
pub const MAX_DENSE_QUDITS: usize = 6;

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("{what}: residual {residual:.3e} exceeds {threshold:.1e}")]
    VerificationFailed { what: String, residual: f64, threshold: f64 },
    #[error("gate {index} (MS on site {site}) does not commute with the tracked phases")]
    NonDiagonalResidual { index: usize, site: usize },
    #[error("gate {index} targets site {site} in a {sites}-site register")]
    InvalidTarget { index: usize, site: usize, sites: usize },
    #[error("no native compilation for the {0} axis")]
    UnsupportedAxis(Axis),
    #[error("{0} sites exceed the dense four-level limit")]
    TooLarge(usize),
    #[error(transparent)]
    Ops(#[from] OpsError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum NativeGate {
    /// `MS(θ, 0)` on sites `(site, site + 1)`.
    Ms { site: usize, theta: f64 },
    /// `exp(−iθ/2 (cos φ σ_x + sin φ σ_y))` between two levels.
    Rotation { site: usize, levels: (QuditLevel, QuditLevel), theta: f64, phi: f64 },
    /// `Z_{ij}(θ)`: `e^{iθ/2}` on the first level, `e^{−iθ/2}` on the second.
    Phase { site: usize, levels: (QuditLevel, QuditLevel), theta: f64 },
}

impl NativeGate {
    /// `R_k(θ, φ)` on a site.
    pub fn r(k: usize, site: usize, theta: f64, phi: f64) -> Result<Self, CompileError> {
        Ok(NativeGate::Rotation { site, levels: ops::rotation_qudit_levels(k)?, theta, phi })
    }

    pub fn z(site: usize, i: QuditLevel, j: QuditLevel, theta: f64) -> Self {
        NativeGate::Phase { site, levels: (i, j), theta }
    }

    pub fn site(&self) -> usize {
        match *self {
            NativeGate::Ms { site, .. } | NativeGate::Rotation { site, .. } | NativeGate::Phase { site, .. } => site,
        }
    }

    /// Highest site touched.
    pub fn last_site(&self) -> usize {
        match self {
            NativeGate::Ms { site, .. } => site + 1,
            other => other.site(),
        }
    }

    /// 4×4 for local gates, 16×16 for MS.
    pub fn matrix(&self) -> Result<DMatrix<C64>, CompileError> {
        Ok(match *self {
            NativeGate::Ms { theta, .. } => ops::ms_gate(theta).into_matrix(),
            NativeGate::Rotation { levels: (a, b), theta, phi, .. } => {
                ops::qudit_level_rotation(a, b, theta, phi)?.to_dmatrix()
            }
            NativeGate::Phase { levels: (a, b), theta, .. } => ops::z_rotation(a, b, theta)?.to_dmatrix(),
        })
    }
}

/// Ordered native gates on a register of four-level sites.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GateSequence {
    pub sites: usize,
    pub gates: Vec<NativeGate>,
}

fn apply_local(amps: &mut [C64], site: usize, u: &DMatrix<C64>) {
    let stride = 4usize.pow(site as u32);
    for block in amps.chunks_exact_mut(4 * stride) {
        for off in 0..stride {
            let v: [C64; 4] = std::array::from_fn(|k| block[off + k * stride]);
            for r in 0..4 {
                block[off + r * stride] = (0..4).map(|k| u[(r, k)] * v[k]).sum();
            }
        }
    }
}

fn apply_pair(amps: &mut [C64], site: usize, u: &DMatrix<C64>) {
    let stride = 4usize.pow(site as u32);
    // local index p = 4·m_site + m_{site+1}
    let pos = |p: usize| stride * (p / 4 + 4 * (p % 4));
    for block in amps.chunks_exact_mut(16 * stride) {
        for off in 0..stride {
            let v: [C64; 16] = std::array::from_fn(|p| block[off + pos(p)]);
            for r in 0..16 {
                block[off + pos(r)] = (0..16).map(|k| u[(r, k)] * v[k]).sum();
            }
        }
    }
}

/// Four-level indices of the `3^L` qutrit basis states, in ternary order.
pub fn qutrit_indices(sites: usize) -> Vec<usize> {
    (0..3usize.pow(sites as u32))
        .map(|mut t| {
            let mut q = 0;
            let mut w = 1;
            for _ in 0..sites {
                q += (t % 3 + 1) * w;
                t /= 3;
                w *= 4;
            }
            q
        })
        .collect()
}

impl GateSequence {
    pub fn new(sites: usize) -> Self {
        GateSequence { sites, gates: Vec::new() }
    }

    pub fn push(&mut self, gate: NativeGate) {
        self.gates.push(gate);
    }

    pub fn extend(&mut self, other: &GateSequence) {
        self.gates.extend_from_slice(&other.gates);
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn validate(&self) -> Result<(), CompileError> {
        for (index, g) in self.gates.iter().enumerate() {
            if g.last_site() >= self.sites {
                return Err(CompileError::InvalidTarget { index, site: g.last_site(), sites: self.sites });
            }
        }
        Ok(())
    }

    /// Applies the sequence to a `4^L` amplitude vector.
    pub fn apply(&self, amps: &mut [C64]) -> Result<(), CompileError> {
        self.validate()?;
        assert_eq!(amps.len(), 4usize.pow(self.sites as u32), "register size mismatch");
        for g in &self.gates {
            let m = g.matrix()?;
            match g {
                NativeGate::Ms { site, .. } => apply_pair(amps, *site, &m),
                other => apply_local(amps, other.site(), &m),
            }
        }
        Ok(())
    }

    /// Dense `4^L × 4^L` unitary.
    pub fn unitary(&self) -> Result<DMatrix<C64>, CompileError> {
        if self.sites > MAX_DENSE_QUDITS {
            return Err(CompileError::TooLarge(self.sites));
        }
        let dim = 4usize.pow(self.sites as u32);
        let mut u = DMatrix::zeros(dim, dim);
        let mut col = vec![C64::new(0.0, 0.0); dim];
        for c in 0..dim {
            col.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
            col[c] = C64::new(1.0, 0.0);
            self.apply(&mut col)?;
            u.column_mut(c).copy_from_slice(&col);
        }
        Ok(u)
    }
}

/// Block of a four-level unitary on the qutrit subspace.
pub fn restrict(u: &DMatrix<C64>, sites: usize) -> DMatrix<C64> {
    let idx = qutrit_indices(sites);
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| u[(idx[r], idx[c])])
}

/// Largest matrix element connecting the qutrit subspace with its complement.
pub fn leakage(u: &DMatrix<C64>, sites: usize) -> f64 {
    let mut inside = vec![false; u.nrows()];
    for k in qutrit_indices(sites) {
        inside[k] = true;
    }
    let mut worst: f64 = 0.0;
    for c in 0..u.ncols() {
        for r in 0..u.nrows() {
            if inside[r] != inside[c] {
                worst = worst.max(u[(r, c)].norm());
            }
        }
    }
    worst
}

/// `Z_{a+}(−θ)` and `Z_{+0}(−θ/2)` on one site.
pub fn dressing(site: usize, theta: f64) -> [NativeGate; 2] {
    [
        NativeGate::z(site, QuditLevel::Aux, QuditLevel::Plus, -theta),
        NativeGate::z(site, QuditLevel::Plus, QuditLevel::Zero, -theta / 2.0),
    ]
}

/// `Z_{+0}(θ)` from `R_1` pulses: `R_1(π/2, −π/2)`, `R_1(θ, 0)`, `R_1(π/2, π/2)`.
pub fn z_plus_zero_sequence(site: usize, theta: f64) -> Result<Vec<NativeGate>, CompileError> {
    Ok(vec![
        NativeGate::r(1, site, FRAC_PI_2, -FRAC_PI_2)?,
        NativeGate::r(1, site, theta, 0.0)?,
        NativeGate::r(1, site, FRAC_PI_2, FRAC_PI_2)?,
    ])
}

/// The dressed MS gate with its auxiliary-only residuals.
#[derive(Clone, Debug)]
pub struct AuxIsolation {
    pub sequence: GateSequence,
    /// `A ⊗ 1`.
    pub a1: TwoSiteOperator,
    /// `1 ⊗ A`.
    pub a2: TwoSiteOperator,
    /// Residual of the factorization identity in the 16×16 space.
    pub residual: f64,
}

fn aux_phase(theta: f64) -> DMatrix<C64> {
    let mut a = DMatrix::identity(4, 4);
    a[(0, 0)] = C64::from_polar(1.0, -theta / 2.0);
    a
}

/// `aux_isolation`: MS followed by the dressing on both sites, checked against
/// `e^{iθ/2} A_1 A_2 exp(−iθ/2 λ_1⊗λ_1)` to `1e-10`.
pub fn aux_isolation(theta: f64) -> Result<AuxIsolation, CompileError> {
    let mut sequence = GateSequence::new(2);
    sequence.push(NativeGate::Ms { site: 0, theta });
    for site in 0..2 {
        sequence.gates.extend(dressing(site, theta));
    }
    let id = DMatrix::<C64>::identity(4, 4);
    let a = aux_phase(theta);
    let a1 = TwoSiteOperator::product(&a, &id);
    let a2 = TwoSiteOperator::product(&id, &a);
    let l1 = ops::qudit_lambda1().to_dmatrix();
    let xx = crate::linalg::expm_hermitian(&kron(&l1, &l1), theta / 2.0);
    let expected = a1.matrix() * a2.matrix() * xx * C64::from_polar(1.0, theta / 2.0);
    let residual = max_abs_diff(&sequence.unitary()?, &expected);
    check("aux isolation identity", residual, 1e-10)?;
    Ok(AuxIsolation { sequence, a1, a2, residual })
}

fn check(what: &str, residual: f64, threshold: f64) -> Result<(), CompileError> {
    if residual.is_finite() && residual < threshold {
        Ok(())
    } else {
        Err(CompileError::VerificationFailed { what: what.into(), residual, threshold })
    }
}

/// Local frame change taking `λ_1` to the target spin operator: gates before
/// the dressed MS (the inverse frame) and after it.
fn frame(axis: Axis, site: usize) -> Result<(Vec<NativeGate>, Vec<NativeGate>), CompileError> {
    match axis {
        Axis::X => Ok((vec![NativeGate::r(2, site, -FRAC_PI_2, FRAC_PI_2)?], vec![NativeGate::r(2, site, FRAC_PI_2, FRAC_PI_2)?])),
        Axis::Z => Ok((
            vec![NativeGate::r(3, site, -PI, 0.0)?, NativeGate::r(1, site, FRAC_PI_2, FRAC_PI_2)?],
            vec![NativeGate::r(1, site, -FRAC_PI_2, FRAC_PI_2)?, NativeGate::r(3, site, PI, 0.0)?],
        )),
        Axis::Y => Err(CompileError::UnsupportedAxis(Axis::Y)),
    }
}

/// Native gates realizing `exp(−iθ/2 S^a⊗S^a)` on sites `(site, site + 1)`,
/// up to a global phase. Empty for `θ = 0`.
pub fn coupling_gates(axis: Axis, theta: f64, site: usize) -> Result<Vec<NativeGate>, CompileError> {
    let (pre0, post0) = frame(axis, site)?;
    if theta == 0.0 {
        return Ok(Vec::new());
    }
    let (pre1, post1) = frame(axis, site + 1)?;
    let mut out = Vec::new();
    out.extend(pre0);
    out.extend(pre1);
    out.push(NativeGate::Ms { site, theta });
    out.extend(dressing(site, theta));
    out.extend(dressing(site + 1, theta));
    out.extend(post0);
    out.extend(post1);
    Ok(out)
}

/// `compile_coupling` on a two-site register.
pub fn compile_coupling(axis: Axis, theta: f64) -> Result<GateSequence, CompileError> {
    Ok(GateSequence { sites: 2, gates: coupling_gates(axis, theta, 0)? })
}

/// Residuals of a compiled coupling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    /// Max deviation from the target on the qutrit block after phase alignment.
    pub subspace_residual: f64,
    /// Largest amplitude between the auxiliary and qutrit blocks.
    pub leakage: f64,
}

pub const SUBSPACE_TOL: f64 = 1e-9;
pub const LEAKAGE_TOL: f64 = 1e-12;

/// Residuals of one compiled coupling against `exp(−iθ/2 S^a⊗S^a)`, unchecked.
pub fn coupling_report(axis: Axis, theta: f64) -> Result<CouplingReport, CompileError> {
    let seq = compile_coupling(axis, theta)?;
    let u = seq.unitary()?;
    let target = ops::two_site_coupling(axis, theta).into_matrix();
    Ok(CouplingReport {
        subspace_residual: phase_insensitive_diff(&target, &restrict(&u, 2)),
        leakage: leakage(&u, 2),
    })
}

/// [`coupling_report`] checked against [`SUBSPACE_TOL`] and [`LEAKAGE_TOL`].
pub fn verify_coupling(axis: Axis, theta: f64) -> Result<CouplingReport, CompileError> {
    let report = coupling_report(axis, theta)?;
    check(&format!("{axis} coupling subspace"), report.subspace_residual, SUBSPACE_TOL)?;
    check(&format!("{axis} coupling leakage"), report.leakage, LEAKAGE_TOL)?;
    Ok(report)
}

/// Per-site, per-level phases `α` tracked in software; the tracked operator
/// on a site is `diag(e^{iα_a}, e^{iα_+}, e^{iα_0}, e^{iα_−})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseLedger {
    pub phases: Vec<[f64; 4]>,
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

impl PhaseLedger {
    pub fn new(sites: usize) -> Self {
        PhaseLedger { phases: vec![[0.0; 4]; sites] }
    }

    pub fn is_empty(&self) -> bool {
        self.phases.iter().all(|p| p.iter().all(|&x| x == 0.0))
    }

    pub fn record_phase(&mut self, site: usize, i: QuditLevel, j: QuditLevel, theta: f64) {
        let p = &mut self.phases[site];
        p[i.index()] = wrap(p[i.index()] + theta / 2.0);
        p[j.index()] = wrap(p[j.index()] - theta / 2.0);
    }

    pub fn site_diagonal(&self, site: usize) -> DMatrix<C64> {
        DMatrix::from_fn(4, 4, |r, c| if r == c { C64::from_polar(1.0, self.phases[site][r]) } else { C64::new(0.0, 0.0) })
    }

    /// Dense diagonal over the register, site 0 on the fastest index.
    pub fn diagonal(&self) -> DMatrix<C64> {
        self.phases.iter().enumerate().fold(DMatrix::identity(1, 1), |acc, (s, _)| kron(&self.site_diagonal(s), &acc))
    }

    /// Adds another ledger site by site.
    pub fn compose(&self, other: &PhaseLedger) -> PhaseLedger {
        PhaseLedger {
            phases: self
                .phases
                .iter()
                .zip(&other.phases)
                .map(|(a, b)| std::array::from_fn(|k| wrap(a[k] + b[k])))
                .collect(),
        }
    }
}

/// `ledger_compile`: drops `Z` gates into a [`PhaseLedger`] and shifts the
/// phase of later rotations so that `ledger.diagonal() · U_emitted` equals the
/// input circuit.
pub fn ledger_compile(circuit: &GateSequence) -> Result<(GateSequence, PhaseLedger), CompileError> {
    circuit.validate()?;
    let mut ledger = PhaseLedger::new(circuit.sites);
    let mut out = GateSequence::new(circuit.sites);
    for (index, gate) in circuit.gates.iter().enumerate() {
        match *gate {
            NativeGate::Phase { site, levels: (i, j), theta } => ledger.record_phase(site, i, j, theta),
            NativeGate::Rotation { site, levels: (i, j), theta, phi } => {
                let a = ledger.phases[site];
                let shift = a[i.index()] - a[j.index()];
                let phi = if shift == 0.0 { phi } else { wrap(phi + shift) };
                out.push(NativeGate::Rotation { site, levels: (i, j), theta, phi });
            }
            NativeGate::Ms { site, theta } => {
                let d = kron(&ledger.site_diagonal(site), &ledger.site_diagonal(site + 1));
                let ms = ops::ms_gate(theta).into_matrix();
                let moved = d.adjoint() * &ms * &d;
                if max_abs_diff(&moved, &ms) > COMMUTE_TOL {
                    return Err(CompileError::NonDiagonalResidual { index, site });
                }
                out.push(*gate);
            }
        }
    }
    Ok((out, ledger))
}

/// Deviation between a circuit and its ledger-compiled form with the final
/// ledger applied, on the qutrit block after phase alignment.
pub fn ledger_residual(circuit: &GateSequence) -> Result<f64, CompileError> {
    let (compiled, ledger) = ledger_compile(circuit)?;
    let explicit = restrict(&circuit.unitary()?, circuit.sites);
    let tracked = restrict(&(ledger.diagonal() * compiled.unitary()?), circuit.sites);
    Ok(phase_insensitive_diff(&explicit, &tracked))
}

/// One Floquet cycle in native gates: the `x` couplings on every bond, the
/// `z` couplings, then the kick as `R_1(π−ε, 0)` followed by `R_3(π−ε, 0)`.
pub fn compile_cycle(params: &FloquetParams) -> Result<GateSequence, CompileError> {
    params.validate()?;
    let mut seq = GateSequence::new(params.sites);
    for (axis, theta) in [(Axis::X, params.theta_x), (Axis::Z, params.theta_z)] {
        for bond in 0..params.sites - 1 {
            seq.gates.extend(coupling_gates(axis, theta, bond)?);
        }
    }
    let angle = PI - params.epsilon;
    for site in 0..params.sites {
        seq.push(NativeGate::r(1, site, angle, 0.0)?);
        seq.push(NativeGate::r(3, site, angle, 0.0)?);
    }
    Ok(seq)
}

/// Residuals of a compiled Floquet cycle against the statevector engine.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub explicit_residual: f64,
    pub ledger_residual: f64,
    pub leakage: f64,
    pub gate_count: usize,
    pub ledger_gate_count: usize,
}

/// One-cycle unitary of the statevector engine, column `k` = `U_F |k⟩`.
pub fn engine_unitary(params: &FloquetParams) -> Result<DMatrix<C64>, CompileError> {
    let stepper = FloquetStepper::new(params)?;
    let dim = 3usize.pow(params.sites as u32);
    let mut u = DMatrix::zeros(dim, dim);
    for c in 0..dim {
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[c] = C64::new(1.0, 0.0);
        let mut psi = StateVector::from_amplitudes(params.sites, amps).map_err(EngineError::from)?;
        stepper.step(&mut psi);
        u.column_mut(c).copy_from_slice(psi.amplitudes());
    }
    Ok(u)
}

/// Compiles one cycle, simulates it densely in the four-level encoding and
/// compares with the engine, with and without phase tracking.
pub fn cycle_report(params: &FloquetParams) -> Result<CycleReport, CompileError> {
    if params.sites > MAX_DENSE_QUDITS {
        return Err(CompileError::TooLarge(params.sites));
    }
    let seq = compile_cycle(params)?;
    let (tracked, ledger) = ledger_compile(&seq)?;
    let target = engine_unitary(params)?;
    let u = seq.unitary()?;
    let report = CycleReport {
        explicit_residual: phase_insensitive_diff(&target, &restrict(&u, params.sites)),
        ledger_residual: phase_insensitive_diff(&target, &restrict(&(ledger.diagonal() * tracked.unitary()?), params.sites)),
        leakage: leakage(&u, params.sites),
        gate_count: seq.len(),
        ledger_gate_count: tracked.len(),
    };
    Ok(report)
}

/// [`cycle_report`] checked against `threshold` (and [`LEAKAGE_TOL`] for leakage).
pub fn verify_cycle(params: &FloquetParams, threshold: f64) -> Result<CycleReport, CompileError> {
    let report = cycle_report(params)?;
    check("compiled cycle", report.explicit_residual, threshold)?;
    check("ledger-compiled cycle", report.ledger_residual, threshold)?;
    check("compiled cycle leakage", report.leakage, LEAKAGE_TOL)?;
    Ok(report)
}
