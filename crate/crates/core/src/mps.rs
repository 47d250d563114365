//! Matrix-product-state evolution.
//!
//! [`MpsState`] is an open chain in mixed-canonical form: tensors left of the
//! orthogonality center are left-orthonormal, those right of it are
//! right-orthonormal. Two-site gates are applied by contracting the bond,
//! applying the 9×9 gate and splitting with an SVD, which also refreshes the
//! bond's Schmidt spectrum. [`InfiniteMps`] is the translation-invariant
//! two-site cell updated with Hastings' inverse-free scheme.
//!
//! Site tensors are stored as three `χ_left × χ_right` matrices, one per
//! physical level `(+, 0, −)`.

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{row_major_81, EngineError, FloquetParams, Observable};
use crate::observables::{entropy_from_schmidt, QfiResult, TimeSeries};
use crate::linalg::thin_svd;
use crate::ops::{self, Axis, Level};
use crate::state::{StateError, StateVector, MAX_DENSE_SITES};

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("bond {bond} needs χ = {chi}, above the cap {cap}")]
    ChiCapExceeded { bond: usize, chi: usize, cap: usize },
    #[error("invalid truncation policy: {0}")]
    InvalidPolicy(String),
    #[error("site {site} out of range for {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("SVD did not converge on bond {0}")]
    SvdFailed(usize),
    #[error("observable `{0}` is not available on this state")]
    Unsupported(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Bond truncation rule: keep the fewest Schmidt values whose discarded
/// weight `Σ s_k²` stays within `tolerance`; fail beyond `chi_cap`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub tolerance: f64,
    pub chi_cap: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy { tolerance: 1e-6, chi_cap: 600 }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<(), MpsError> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(MpsError::InvalidPolicy(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.chi_cap == 0 {
            return Err(MpsError::InvalidPolicy("chi_cap must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of values to keep from a nonincreasing spectrum, and the
    /// discarded weight relative to the total.
    fn keep(&self, s: &[f64], bond: usize) -> Result<(usize, f64), MpsError> {
        let total: f64 = s.iter().map(|x| x * x).sum();
        let mut tail = 0.0;
        let mut k = s.len();
        while k > 1 {
            let w = s[k - 1] * s[k - 1];
            if tail + w > self.tolerance * total {
                break;
            }
            tail += w;
            k -= 1;
        }
        if k > self.chi_cap {
            return Err(MpsError::ChiCapExceeded { bond, chi: k, cap: self.chi_cap });
        }
        Ok((k, if total > 0.0 { tail / total } else { 0.0 }))
    }
}

/// Truncation bookkeeping accumulated by gate applications.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TruncationStats {
    pub discarded: f64,
    pub max_chi: usize,
}

impl TruncationStats {
    fn record(&mut self, chi: usize, discarded: f64) {
        self.discarded += discarded;
        self.max_chi = self.max_chi.max(chi);
    }
}

type SiteTensor = [DMatrix<C64>; 3];

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn product_tensor(level: Level) -> SiteTensor {
    let mut t: SiteTensor = std::array::from_fn(|_| DMatrix::zeros(1, 1));
    t[level.index()][(0, 0)] = C64::new(1.0, 0.0);
    t
}

fn apply_local(t: &mut SiteTensor, u: &Matrix3<C64>) {
    let (r, c) = t[0].shape();
    let old = t.clone();
    for (s, out) in t.iter_mut().enumerate() {
        let mut m = DMatrix::zeros(r, c);
        for (k, src) in old.iter().enumerate() {
            let w = u[(s, k)];
            if w != zero() {
                m += src * w;
            }
        }
        *out = m;
    }
}

/// `Σ_{s,s'} O[s,s'] A[s]† E A[s']`.
fn transfer(env: &DMatrix<C64>, a: &SiteTensor, op: Option<&Matrix3<C64>>) -> DMatrix<C64> {
    let dr = a[0].ncols();
    let mut out = DMatrix::zeros(dr, dr);
    match op {
        None => {
            for t in a {
                out += t.adjoint() * (env * t);
            }
        }
        Some(o) => {
            let b: Vec<DMatrix<C64>> = a.iter().map(|t| env * t).collect();
            for s in 0..3 {
                let mut m = DMatrix::zeros(b[0].nrows(), dr);
                for (k, bk) in b.iter().enumerate() {
                    if o[(s, k)] != zero() {
                        m += bk * o[(s, k)];
                    }
                }
                out += a[s].adjoint() * m;
            }
        }
    }
    out
}

/// Contracts `[A_l[0]; A_l[1]; A_l[2]] · [A_r[0] | A_r[1] | A_r[2]]`, giving a
/// `3χ_l × 3χ_r` matrix with row `s_1 χ_l + l` and column `s_2 χ_r + r`.
fn contract_pair(left: &SiteTensor, right: &SiteTensor) -> DMatrix<C64> {
    let (dl, chi) = left[0].shape();
    let dr = right[0].ncols();
    let mut a = DMatrix::zeros(3 * dl, chi);
    let mut b = DMatrix::zeros(chi, 3 * dr);
    for s in 0..3 {
        a.view_mut((s * dl, 0), (dl, chi)).copy_from(&left[s]);
        b.view_mut((0, s * dr), (chi, dr)).copy_from(&right[s]);
    }
    a * b
}

/// Applies a row-major 9×9 gate with local index `3 s_1 + s_2` to a
/// contracted pair.
fn gate_pair(theta: &DMatrix<C64>, gate: &[C64; 81]) -> DMatrix<C64> {
    let dl = theta.nrows() / 3;
    let dr = theta.ncols() / 3;
    let mut out = DMatrix::zeros(3 * dl, 3 * dr);
    for p in 0..9 {
        let mut block = out.view_mut((p / 3 * dl, p % 3 * dr), (dl, dr));
        for q in 0..9 {
            let g = gate[9 * p + q];
            if g != zero() {
                block += theta.view((q / 3 * dl, q % 3 * dr), (dl, dr)) * g;
            }
        }
    }
    out
}

struct Split {
    u: DMatrix<C64>,
    s: Vec<f64>,
    vt: DMatrix<C64>,
    discarded: f64,
}

/// Truncated SVD with the kept singular values renormalized to unit norm.
fn split(theta: DMatrix<C64>, policy: &TruncationPolicy, bond: usize) -> Result<Split, MpsError> {
    let (u, sorted, vt) = thin_svd(&theta).ok_or(MpsError::SvdFailed(bond))?;
    let (k, discarded) = policy.keep(&sorted, bond)?;
    let norm = sorted[..k].iter().map(|x| x * x).sum::<f64>().sqrt();
    let s: Vec<f64> = sorted[..k].iter().map(|x| x / norm).collect();
    let u = u.columns(0, k).into_owned();
    let vt = vt.rows(0, k).into_owned();
    Ok(Split { u, s, vt, discarded })
}

fn rows_to_tensor(m: &DMatrix<C64>) -> SiteTensor {
    let d = m.nrows() / 3;
    std::array::from_fn(|s| m.rows(s * d, d).into_owned())
}

fn cols_to_tensor(m: &DMatrix<C64>) -> SiteTensor {
    let d = m.ncols() / 3;
    std::array::from_fn(|s| m.columns(s * d, d).into_owned())
}

fn scale_columns(m: &mut DMatrix<C64>, s: &[f64]) {
    for (c, &x) in s.iter().enumerate() {
        m.column_mut(c).scale_mut(x);
    }
}

/// Open-chain MPS in mixed-canonical form.
#[derive(Clone, Debug)]
pub struct MpsState {
    tensors: Vec<SiteTensor>,
    spectra: Vec<Vec<f64>>,
    center: usize,
}

impl MpsState {
    pub fn product(pattern: &[Level]) -> Result<Self, MpsError> {
        if pattern.is_empty() {
            return Err(StateError::Empty.into());
        }
        Ok(MpsState {
            tensors: pattern.iter().map(|&l| product_tensor(l)).collect(),
            spectra: vec![vec![1.0]; pattern.len() - 1],
            center: 0,
        })
    }

    pub fn all_zero(sites: usize) -> Result<Self, MpsError> {
        Self::product(&vec![Level::Zero; sites])
    }

    pub fn num_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn center(&self) -> usize {
        self.center
    }

    /// Bond dimensions of bonds `0..L−1`; bond `b` joins sites `b` and `b + 1`.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.num_sites() - 1].iter().map(|t| t[0].ncols()).collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Schmidt values on bond `b`, nonincreasing, unit norm.
    pub fn spectrum(&self, bond: usize) -> Result<&[f64], MpsError> {
        self.spectra
            .get(bond)
            .map(Vec::as_slice)
            .ok_or(MpsError::SiteOutOfRange { site: bond, sites: self.num_sites() })
    }

    pub fn bond_entropy(&self, bond: usize) -> Result<f64, MpsError> {
        Ok(entropy_from_schmidt(self.spectrum(bond)?))
    }

    /// Entropy of the left `⌊L/2⌋` sites.
    pub fn half_chain_entropy(&self) -> f64 {
        let half = self.num_sites() / 2;
        if half == 0 {
            return 0.0;
        }
        entropy_from_schmidt(&self.spectra[half - 1])
    }

    fn check_site(&self, site: usize) -> Result<(), MpsError> {
        if site >= self.num_sites() {
            return Err(MpsError::SiteOutOfRange { site, sites: self.num_sites() });
        }
        Ok(())
    }

    /// Moves the orthogonality center by QR sweeps; the state is unchanged.
    pub fn move_center(&mut self, target: usize) -> Result<(), MpsError> {
        self.check_site(target)?;
        while self.center < target {
            let c = self.center;
            let (dl, dr) = self.tensors[c][0].shape();
            let mut stacked = DMatrix::zeros(3 * dl, dr);
            for s in 0..3 {
                stacked.view_mut((s * dl, 0), (dl, dr)).copy_from(&self.tensors[c][s]);
            }
            let qr = stacked.qr();
            let (q, r) = (qr.q(), qr.r());
            self.tensors[c] = rows_to_tensor(&q);
            for t in self.tensors[c + 1].iter_mut() {
                *t = &r * &*t;
            }
            self.center += 1;
        }
        while self.center > target {
            let c = self.center;
            let (dl, dr) = self.tensors[c][0].shape();
            let mut row = DMatrix::zeros(dl, 3 * dr);
            for s in 0..3 {
                row.view_mut((0, s * dr), (dl, dr)).copy_from(&self.tensors[c][s]);
            }
            // M = R† Q† from the QR of M†
            let qr = row.adjoint().qr();
            let (q, r) = (qr.q(), qr.r());
            self.tensors[c] = cols_to_tensor(&q.adjoint());
            let r_dag = r.adjoint();
            for t in self.tensors[c - 1].iter_mut() {
                *t = &*t * &r_dag;
            }
            self.center -= 1;
        }
        Ok(())
    }

    pub fn apply_single_site(&mut self, site: usize, u: &Matrix3<C64>) -> Result<(), MpsError> {
        self.check_site(site)?;
        apply_local(&mut self.tensors[site], u);
        Ok(())
    }

    /// Applies a row-major 9×9 gate to bond `(bond, bond + 1)`. The center
    /// moves to whichever of the two sites is farther from its old position,
    /// so consecutive bonds in one direction form a sweep.
    pub fn apply_two_site(
        &mut self,
        bond: usize,
        gate: &[C64; 81],
        policy: &TruncationPolicy,
        stats: &mut TruncationStats,
    ) -> Result<(), MpsError> {
        if bond + 1 >= self.num_sites() {
            return Err(MpsError::SiteOutOfRange { site: bond + 1, sites: self.num_sites() });
        }
        let rightward = self.center <= bond;
        self.move_center(if rightward { bond } else { bond + 1 })?;
        let theta = gate_pair(&contract_pair(&self.tensors[bond], &self.tensors[bond + 1]), gate);
        let Split { mut u, s, mut vt, discarded } = split(theta, policy, bond)?;
        if rightward {
            for (r, &x) in s.iter().enumerate() {
                vt.row_mut(r).scale_mut(x);
            }
            self.center = bond + 1;
        } else {
            scale_columns(&mut u, &s);
            self.center = bond;
        }
        self.tensors[bond] = rows_to_tensor(&u);
        self.tensors[bond + 1] = cols_to_tensor(&vt);
        stats.record(s.len(), discarded);
        self.spectra[bond] = s;
        Ok(())
    }

    /// Applies the same gate to every bond, sweeping away from the nearer end.
    pub fn apply_bond_layer(
        &mut self,
        gate: &[C64; 81],
        policy: &TruncationPolicy,
        stats: &mut TruncationStats,
    ) -> Result<(), MpsError> {
        let bonds = self.num_sites() - 1;
        if 2 * self.center < self.num_sites() {
            for b in 0..bonds {
                self.apply_two_site(b, gate, policy, stats)?;
            }
        } else {
            for b in (0..bonds).rev() {
                self.apply_two_site(b, gate, policy, stats)?;
            }
        }
        Ok(())
    }

    /// `⟨ψ|ψ⟩` by transfer contraction.
    pub fn norm_sqr(&self) -> f64 {
        let mut env = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for t in &self.tensors {
            env = transfer(&env, t, None);
        }
        env[(0, 0)].re
    }

    /// `⟨Π_k O_k⟩` for single-site operators on distinct sites.
    pub fn expect_product(&self, ops: &[(usize, Matrix3<C64>)]) -> Result<C64, MpsError> {
        for (site, _) in ops {
            self.check_site(*site)?;
        }
        let mut env = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for (j, t) in self.tensors.iter().enumerate() {
            let op = ops.iter().find(|(s, _)| *s == j).map(|(_, o)| o);
            env = transfer(&env, t, op);
        }
        Ok(env[(0, 0)])
    }

    pub fn expectation(&self, site: usize, op: &Matrix3<C64>) -> Result<C64, MpsError> {
        self.expect_product(&[(site, *op)])
    }

    pub fn site_magnetization(&self) -> Vec<f64> {
        let sz = *ops::spin_matrix(Axis::Z).matrix();
        (0..self.num_sites()).map(|j| self.expectation(j, &sz).map(|v| v.re).unwrap_or(0.0)).collect()
    }

    pub fn mean_magnetization(&self) -> f64 {
        let m = self.site_magnetization();
        m.iter().sum::<f64>() / m.len() as f64
    }

    pub fn zz_correlation(&self, i: usize, j: usize) -> Result<f64, MpsError> {
        let sz = *ops::spin_matrix(Axis::Z).matrix();
        if i == j {
            return Ok(self.expectation(i, &(sz * sz))?.re);
        }
        Ok(self.expect_product(&[(i, sz), (j, sz)])?.re)
    }

    /// `|⟨pattern|ψ⟩|²` for a product basis state.
    pub fn overlap_with_product(&self, pattern: &[Level]) -> Result<f64, MpsError> {
        if pattern.len() != self.num_sites() {
            return Err(StateError::PatternLength { expected: self.num_sites(), got: pattern.len() }.into());
        }
        let mut acc = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for (t, l) in self.tensors.iter().zip(pattern) {
            acc *= &t[l.index()];
        }
        Ok(acc[(0, 0)].norm_sqr())
    }

    /// `⟨Ĵ_l⟩` and `⟨Ĵ_l²⟩` by a three-state transfer accumulation.
    pub fn collective_moments(&self, axis: Axis) -> (f64, f64) {
        let s = *ops::spin_matrix(axis).matrix();
        let s2 = s * s;
        let one = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let (mut e0, mut e1, mut e2) = (one.clone(), DMatrix::zeros(1, 1), DMatrix::zeros(1, 1));
        for t in &self.tensors {
            let n2 = transfer(&e2, t, None) + transfer(&e1, t, Some(&s)) * C64::new(2.0, 0.0) + transfer(&e0, t, Some(&s2));
            let n1 = transfer(&e1, t, None) + transfer(&e0, t, Some(&s));
            let n0 = transfer(&e0, t, None);
            (e0, e1, e2) = (n0, n1, n2);
        }
        (e1[(0, 0)].re, e2[(0, 0)].re)
    }

    pub fn to_statevector(&self) -> Result<StateVector, MpsError> {
        let sites = self.num_sites();
        if sites > MAX_DENSE_SITES {
            return Err(StateError::TooLarge(sites).into());
        }
        let mut v = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for t in &self.tensors {
            let (rows, chi) = (v.nrows(), t[0].ncols());
            let mut next = DMatrix::zeros(3 * rows, chi);
            for s in 0..3 {
                next.view_mut((s * rows, 0), (rows, chi)).copy_from(&(&v * &t[s]));
            }
            v = next;
        }
        Ok(StateVector::from_amplitudes(sites, v.column(0).iter().copied().collect())?)
    }

    /// Largest deviation from left (right) orthonormality of the tensors left
    /// (right) of the center.
    pub fn canonical_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, t) in self.tensors.iter().enumerate() {
            let g = if j < self.center {
                t.iter().map(|a| a.adjoint() * a).fold(DMatrix::zeros(t[0].ncols(), t[0].ncols()), |x, y| x + y)
            } else if j > self.center {
                t.iter().map(|a| a * a.adjoint()).fold(DMatrix::zeros(t[0].nrows(), t[0].nrows()), |x, y| x + y)
            } else {
                continue;
            };
            let id = DMatrix::<C64>::identity(g.nrows(), g.ncols());
            worst = worst.max((g - id).iter().map(|x| x.norm()).fold(0.0, f64::max));
        }
        worst
    }
}

/// `mps_qfi`: QFI of a finite MPS from the collective-spin moments.
pub fn mps_qfi(mps: &MpsState) -> QfiResult {
    let mut var = [0.0; 3];
    for (slot, axis) in [Axis::X, Axis::Y, Axis::Z].into_iter().enumerate() {
        let (m1, m2) = mps.collective_moments(axis);
        var[slot] = m2 - m1 * m1;
    }
    QfiResult::from_variances(var, mps.num_sites())
}

/// Gates of one Floquet cycle in MPS form.
#[derive(Clone, Debug)]
pub struct TebdGates {
    x_bond: [C64; 81],
    z_bond: [C64; 81],
    kick: Matrix3<C64>,
    substeps: usize,
    skip_x: bool,
    skip_z: bool,
}

impl TebdGates {
    /// `substeps` splits `U_x` into that many bond layers of angle
    /// `θ_x / substeps`. The bond terms commute, so every choice is exact; the
    /// knob only redistributes truncations.
    pub fn new(params: &FloquetParams, substeps: usize) -> Result<Self, MpsError> {
        params.validate()?;
        if substeps == 0 {
            return Err(EngineError::InvalidParams("trotter substeps must be positive".into()).into());
        }
        Ok(TebdGates {
            x_bond: row_major_81(&ops::two_site_coupling(Axis::X, params.theta_x / substeps as f64)),
            z_bond: row_major_81(&ops::two_site_coupling(Axis::Z, params.theta_z)),
            kick: *ops::kick_operator(params.epsilon).matrix(),
            substeps,
            skip_x: params.theta_x == 0.0,
            skip_z: params.theta_z == 0.0,
        })
    }
}

/// `tebd_step`: one cycle `P_ε U_z U_x` on a finite chain.
pub fn tebd_step(
    mps: &mut MpsState,
    gates: &TebdGates,
    policy: &TruncationPolicy,
    stats: &mut TruncationStats,
) -> Result<(), MpsError> {
    if !gates.skip_x {
        for _ in 0..gates.substeps {
            mps.apply_bond_layer(&gates.x_bond, policy, stats)?;
        }
    }
    if !gates.skip_z {
        mps.apply_bond_layer(&gates.z_bond, policy, stats)?;
    }
    for j in 0..mps.num_sites() {
        mps.apply_single_site(j, &gates.kick)?;
    }
    stats.max_chi = stats.max_chi.max(mps.max_bond_dim());
    Ok(())
}

/// Options of a TEBD run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TebdOptions {
    pub policy: TruncationPolicy,
    pub trotter_substeps: usize,
}

impl Default for TebdOptions {
    fn default() -> Self {
        TebdOptions { policy: TruncationPolicy::default(), trotter_substeps: 1 }
    }
}

/// Recorded series and per-record truncation diagnostics of a TEBD run.
#[derive(Clone, Debug)]
pub struct MpsTrajectory {
    pub series: Vec<TimeSeries>,
    pub qfi: Vec<QfiResult>,
    /// Largest bond dimension at each recorded step.
    pub max_chi: Vec<usize>,
    /// Cumulative discarded weight at each recorded step.
    pub discarded: Vec<f64>,
    pub final_state: MpsState,
}

impl MpsTrajectory {
    pub fn series(&self, label: &str) -> Option<&TimeSeries> {
        self.series.iter().find(|s| s.label == label)
    }
}

/// An aborted run: the error and the step that raised it.
#[derive(Debug, Error)]
#[error("step {step}: {source}")]
pub struct MpsRunError {
    pub step: usize,
    #[source]
    pub source: MpsError,
}

fn measure_mps(mps: &MpsState, obs: Observable, q: Option<&QfiResult>) -> Result<f64, MpsError> {
    Ok(match obs {
        Observable::Overlap => mps.overlap_with_product(&vec![Level::Zero; mps.num_sites()])?,
        Observable::MeanSz => mps.mean_magnetization(),
        Observable::Zz(i, j) => mps.zz_correlation(i, j)?,
        Observable::EntropyHalf => mps.half_chain_entropy(),
        Observable::Qfi => q.map(|q| q.scaled).unwrap_or_else(|| mps_qfi(mps).scaled),
    })
}

/// Finite TEBD from `|0⟩^{⊗L}`, recording at `n = 0, stride, …` like
/// [`crate::engine::evolve`].
pub fn mps_evolve(
    params: &FloquetParams,
    options: &TebdOptions,
    observables: &[Observable],
) -> Result<MpsTrajectory, MpsRunError> {
    let at = |step| move |source: MpsError| MpsRunError { step, source };
    options.policy.validate().map_err(at(0))?;
    let gates = TebdGates::new(params, options.trotter_substeps).map_err(at(0))?;
    let mut mps = MpsState::all_zero(params.sites).map_err(at(0))?;
    let mut series: Vec<TimeSeries> =
        observables.iter().map(|o| TimeSeries::new(o.label(), params.measure_every)).collect();
    let mut out = MpsTrajectory {
        series: Vec::new(),
        qfi: Vec::new(),
        max_chi: Vec::new(),
        discarded: Vec::new(),
        final_state: mps.clone(),
    };
    let mut stats = TruncationStats { discarded: 0.0, max_chi: 1 };
    let want_qfi = observables.contains(&Observable::Qfi);
    for n in 0..=params.steps {
        if n > 0 {
            tebd_step(&mut mps, &gates, &options.policy, &mut stats).map_err(at(n))?;
        }
        if n % params.measure_every == 0 {
            let q = want_qfi.then(|| mps_qfi(&mps));
            for (obs, s) in observables.iter().zip(series.iter_mut()) {
                s.values.push(measure_mps(&mps, *obs, q.as_ref()).map_err(at(n))?);
            }
            out.qfi.extend(q);
            out.max_chi.push(mps.max_bond_dim());
            out.discarded.push(stats.discarded);
        }
    }
    out.series = series;
    out.final_state = mps;
    Ok(out)
}

/// Translation-invariant MPS with a two-site unit cell `(A, B)` in
/// right-canonical form. `lambda[0]` sits on the bond `A–B`, `lambda[1]` on
/// `B–A`.
#[derive(Clone, Debug)]
pub struct InfiniteMps {
    cell: [SiteTensor; 2],
    lambda: [Vec<f64>; 2],
}

impl InfiniteMps {
    pub fn product(level: Level) -> Self {
        InfiniteMps { cell: [product_tensor(level), product_tensor(level)], lambda: [vec![1.0], vec![1.0]] }
    }

    pub fn bond_dims(&self) -> [usize; 2] {
        [self.lambda[0].len(), self.lambda[1].len()]
    }

    pub fn spectrum(&self, bond: usize) -> &[f64] {
        &self.lambda[bond % 2]
    }

    pub fn bond_entropy(&self, bond: usize) -> f64 {
        entropy_from_schmidt(self.spectrum(bond))
    }

    pub fn apply_single_site(&mut self, u: &Matrix3<C64>) {
        for t in self.cell.iter_mut() {
            apply_local(t, u);
        }
    }

    /// Gate on bond `A–B` (`bond = 0`) or `B–A` (`bond = 1`).
    pub fn apply_bond(
        &mut self,
        bond: usize,
        gate: &[C64; 81],
        policy: &TruncationPolicy,
        stats: &mut TruncationStats,
    ) -> Result<(), MpsError> {
        let (l, r) = if bond.is_multiple_of(2) { (0, 1) } else { (1, 0) };
        let left_lambda = &self.lambda[1 - bond % 2];
        let theta = gate_pair(&contract_pair(&self.cell[l], &self.cell[r]), gate);
        let dl = theta.nrows() / 3;
        let mut weighted = theta.clone();
        for row in 0..theta.nrows() {
            weighted.row_mut(row).scale_mut(left_lambda[row % dl]);
        }
        let (_, sorted, vt) = thin_svd(&weighted).ok_or(MpsError::SvdFailed(bond))?;
        let (k, discarded) = policy.keep(&sorted, bond)?;
        let norm = sorted[..k].iter().map(|x| x * x).sum::<f64>().sqrt();
        let vt = vt.rows(0, k).into_owned();
        // B_l = θ' Y restricted to the kept columns, which is Γ_l λ without an inverse
        let left = (theta * vt.adjoint()) / C64::new(norm, 0.0);
        self.cell[l] = rows_to_tensor(&left);
        self.cell[r] = cols_to_tensor(&vt);
        self.lambda[bond % 2] = sorted[..k].iter().map(|x| x / norm).collect();
        stats.record(k, discarded);
        Ok(())
    }

    /// `⟨O⟩` on cell site `0` (A) or `1` (B).
    pub fn expectation(&self, site: usize, op: &Matrix3<C64>) -> C64 {
        let t = &self.cell[site % 2];
        let lam = &self.lambda[1 - site % 2];
        let env = DMatrix::from_fn(lam.len(), lam.len(), |r, c| if r == c { C64::new(lam[r] * lam[r], 0.0) } else { zero() });
        let e = transfer(&env, t, Some(op));
        e.trace()
    }

    pub fn site_magnetization(&self) -> [f64; 2] {
        let sz = *ops::spin_matrix(Axis::Z).matrix();
        [self.expectation(0, &sz).re, self.expectation(1, &sz).re]
    }

    /// Norm of the cell as seen from bond `B–A`; 1 for a canonical state.
    pub fn norm_sqr(&self) -> f64 {
        self.expectation(0, &Matrix3::identity()).re
    }
}

/// `itebd_step`: one cycle on the infinite chain.
pub fn itebd_step(
    mps: &mut InfiniteMps,
    gates: &TebdGates,
    policy: &TruncationPolicy,
    stats: &mut TruncationStats,
) -> Result<(), MpsError> {
    if !gates.skip_x {
        for _ in 0..gates.substeps {
            mps.apply_bond(0, &gates.x_bond, policy, stats)?;
            mps.apply_bond(1, &gates.x_bond, policy, stats)?;
        }
    }
    if !gates.skip_z {
        mps.apply_bond(0, &gates.z_bond, policy, stats)?;
        mps.apply_bond(1, &gates.z_bond, policy, stats)?;
    }
    mps.apply_single_site(&gates.kick);
    Ok(())
}

/// Per-site `⟨S^z⟩` of the infinite chain at `n = 0, stride, …`, averaged
/// over the cell.
pub fn itebd_magnetization(
    params: &FloquetParams,
    options: &TebdOptions,
) -> Result<(TimeSeries, TruncationStats), MpsRunError> {
    let at = |step| move |source: MpsError| MpsRunError { step, source };
    options.policy.validate().map_err(at(0))?;
    let gates = TebdGates::new(params, options.trotter_substeps).map_err(at(0))?;
    let mut mps = InfiniteMps::product(Level::Zero);
    let mut stats = TruncationStats { discarded: 0.0, max_chi: 1 };
    let mut series = TimeSeries::new("mean_Sz", params.measure_every);
    for n in 0..=params.steps {
        if n > 0 {
            itebd_step(&mut mps, &gates, &options.policy, &mut stats).map_err(at(n))?;
        }
        if n % params.measure_every == 0 {
            let m = mps.site_magnetization();
            series.values.push(0.5 * (m[0] + m[1]));
        }
    }
    Ok((series, stats))
}
