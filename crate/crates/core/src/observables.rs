//! Measured quantities on statevectors: magnetization, `zz` correlations,
//! return probability, half-chain entropy, quantum Fisher information, and
//! discrete Fourier spectra of time series.
//!
//! Sites are 0-based throughout.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels;
use crate::ops::{spin_matrix, Axis};
use crate::state::{StateError, StateVector};

#[derive(Debug, Error, PartialEq)]
pub enum ObservableError {
    #[error("site {site} out of range for a chain of {sites}")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("correlation needs two distinct sites, got ({0}, {1})")]
    SameSite(usize, usize),
    #[error("block size {k} must satisfy 1 <= k <= {sites}")]
    BlockSize { k: usize, sites: usize },
    #[error("series needs at least two samples")]
    ShortSeries,
    #[error(transparent)]
    State(#[from] StateError),
}

/// Schmidt values below this are dropped before taking logarithms.
pub const SCHMIDT_FLOOR: f64 = 1e-12;

/// An observable sampled every `stride` Floquet steps, starting at `n = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub label: String,
    pub stride: usize,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(label: impl Into<String>, stride: usize) -> Self {
        TimeSeries { label: label.into(), stride, values: Vec::new() }
    }

    pub fn from_values(label: impl Into<String>, stride: usize, values: Vec<f64>) -> Self {
        TimeSeries { label: label.into(), stride, values }
    }

    pub fn steps(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.values.len()).map(move |k| k * self.stride)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// DFT magnitudes `|X_k|` at `ω_k = 2πk/N`, normalized by `1/N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub magnitudes: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }

    /// `ω_k / 2π = k / N`.
    pub fn frequency(&self, k: usize) -> f64 {
        k as f64 / self.magnitudes.len() as f64
    }

    /// `(ω/2π, |X|)` pairs.
    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.magnitudes.iter().enumerate().map(|(k, m)| (self.frequency(k), *m))
    }

    /// Bins with `k ≠ 0` sorted by decreasing magnitude.
    pub fn peaks(&self) -> Vec<usize> {
        let mut ks: Vec<usize> = (1..self.magnitudes.len()).collect();
        ks.sort_by(|a, b| self.magnitudes[*b].total_cmp(&self.magnitudes[*a]).then(a.cmp(b)));
        ks
    }
}

/// Quantum Fisher information of a pure state for the collective spins
/// `Ĵ_l = Σ_i S^l_i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QfiResult {
    /// `F_Q^l = 4 Var(Ĵ_l)` for `l = x, y, z`.
    pub per_axis: [f64; 3],
    pub total: f64,
    /// `f_Q = F_Q / 8L`.
    pub scaled: f64,
}

impl QfiResult {
    pub fn from_variances(variances: [f64; 3], sites: usize) -> Self {
        let per_axis = variances.map(|v| 4.0 * v.max(0.0));
        let total: f64 = per_axis.iter().sum();
        QfiResult { per_axis, total, scaled: total / (8.0 * sites as f64) }
    }

    pub fn axis(&self, axis: Axis) -> f64 {
        self.per_axis[axis_slot(axis)]
    }
}

pub(crate) fn axis_slot(axis: Axis) -> usize {
    match axis {
        Axis::X => 0,
        Axis::Y => 1,
        Axis::Z => 2,
    }
}

fn check_site(psi: &StateVector, site: usize) -> Result<(), ObservableError> {
    if site >= psi.num_sites() {
        return Err(ObservableError::SiteOutOfRange { site, sites: psi.num_sites() });
    }
    Ok(())
}

#[inline]
fn digit(idx: usize, site: usize) -> i32 {
    ((idx / 3usize.pow(site as u32)) % 3) as i32
}

#[inline]
fn mag_of_digit(d: i32) -> f64 {
    (1 - d) as f64
}

/// `⟨S^z_j⟩` for every site.
pub fn site_magnetization(psi: &StateVector) -> Vec<f64> {
    let sites = psi.num_sites();
    let amps = psi.amplitudes();
    let mut out = vec![0.0; sites];
    // one pass per site keeps the accumulation order independent of L
    for (j, o) in out.iter_mut().enumerate() {
        *o = kernels::reduce(
            amps.len(),
            |lo, hi| (lo..hi).map(|k| amps[k].norm_sqr() * mag_of_digit(digit(k, j))).sum::<f64>(),
            0.0,
        );
    }
    out
}

/// `(1/L) Σ_j ⟨S^z_j⟩`.
pub fn mean_magnetization(psi: &StateVector) -> f64 {
    let (first, _) = jz_moments(psi);
    first / psi.num_sites() as f64
}

/// `⟨Ĵ_z⟩` and `⟨Ĵ_z²⟩` from the diagonal.
fn jz_moments(psi: &StateVector) -> (f64, f64) {
    let amps = psi.amplitudes();
    let sites = psi.num_sites();
    let pair = kernels::reduce(
        amps.len(),
        |lo, hi| {
            let mut m1 = 0.0;
            let mut m2 = 0.0;
            for (k, a) in amps.iter().enumerate().take(hi).skip(lo) {
                let mut idx = k;
                let mut m = 0i32;
                for _ in 0..sites {
                    m += 1 - (idx % 3) as i32;
                    idx /= 3;
                }
                let p = a.norm_sqr();
                m1 += p * m as f64;
                m2 += p * (m * m) as f64;
            }
            Pair(m1, m2)
        },
        Pair(0.0, 0.0),
    );
    (pair.0, pair.1)
}

#[derive(Clone, Copy)]
struct Pair(f64, f64);

impl std::ops::Add for Pair {
    type Output = Pair;
    fn add(self, o: Pair) -> Pair {
        Pair(self.0 + o.0, self.1 + o.1)
    }
}

/// Bare correlator `⟨S^z_i S^z_j⟩` for `i ≠ j`.
pub fn zz_correlation(psi: &StateVector, i: usize, j: usize) -> Result<f64, ObservableError> {
    check_site(psi, i)?;
    check_site(psi, j)?;
    if i == j {
        return Err(ObservableError::SameSite(i, j));
    }
    let amps = psi.amplitudes();
    Ok(kernels::reduce(
        amps.len(),
        |lo, hi| {
            (lo..hi)
                .map(|k| amps[k].norm_sqr() * mag_of_digit(digit(k, i)) * mag_of_digit(digit(k, j)))
                .sum::<f64>()
        },
        0.0,
    ))
}

/// Fidelity `|⟨φ|ψ⟩|²`.
pub fn overlap(psi: &StateVector, phi: &StateVector) -> Result<f64, ObservableError> {
    Ok(phi.inner(psi)?.norm_sqr())
}

/// `|ψ_k|²` for a product reference state with basis index `k`.
pub fn overlap_with_basis_state(psi: &StateVector, index: usize) -> f64 {
    psi.amplitudes()[index].norm_sqr()
}

/// Schmidt values across the cut between sites `0..cut` and `cut..L`.
pub fn schmidt_values(psi: &StateVector, cut: usize) -> Vec<f64> {
    let sites = psi.num_sites();
    let cut = cut.min(sites);
    let dim_a = 3usize.pow(cut as u32);
    let dim_b = psi.dim() / dim_a;
    // column-major layout puts the low (left) sites on the row index
    let amps = psi.amplitudes();
    let m = faer::MatRef::from_column_major_slice(amps, dim_a, dim_b);
    let mut s: Vec<f64> = m.singular_values().expect("dense SVD did not converge");
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Von Neumann entropy (natural log) of a list of Schmidt values.
pub fn entropy_from_schmidt(values: &[f64]) -> f64 {
    values
        .iter()
        .filter(|s| **s > SCHMIDT_FLOOR)
        .map(|s| {
            let p = s * s;
            -p * p.ln()
        })
        .sum::<f64>()
        .max(0.0)
}

/// Entanglement entropy of sites `0..cut`.
pub fn bipartite_entropy(psi: &StateVector, cut: usize) -> f64 {
    entropy_from_schmidt(&schmidt_values(psi, cut))
}

/// Entropy of the left `⌊L/2⌋` sites, natural logarithm.
pub fn half_chain_entropy(psi: &StateVector) -> f64 {
    bipartite_entropy(psi, psi.num_sites() / 2)
}

/// `dst += u_site src` for a 3×3 row-major `u`.
fn accumulate_single_site(src: &[C64], dst: &mut [C64], site: usize, u: &[C64; 9]) {
    let stride = 3usize.pow(site as u32);
    for (sb, db) in src.chunks_exact(3 * stride).zip(dst.chunks_exact_mut(3 * stride)) {
        for off in 0..stride {
            let (a, b, c) = (sb[off], sb[off + stride], sb[off + 2 * stride]);
            db[off] += u[0] * a + u[1] * b + u[2] * c;
            db[off + stride] += u[3] * a + u[4] * b + u[5] * c;
            db[off + 2 * stride] += u[6] * a + u[7] * b + u[8] * c;
        }
    }
}

/// `Ĵ_l |ψ⟩` for an off-diagonal axis.
pub fn collective_spin_apply(psi: &StateVector, axis: Axis) -> Vec<C64> {
    let u = spin_matrix(axis).row_major();
    let src = psi.amplitudes();
    let mut out = vec![C64::new(0.0, 0.0); src.len()];
    for site in 0..psi.num_sites() {
        accumulate_single_site(src, &mut out, site, &u);
    }
    out
}

/// `Var(Ĵ_l)` for `l = x, y, z`.
pub fn collective_variances(psi: &StateVector) -> [f64; 3] {
    let mut var = [0.0; 3];
    for axis in [Axis::X, Axis::Y] {
        let j_psi = collective_spin_apply(psi, axis);
        let mean = kernels::inner(psi.amplitudes(), &j_psi).re;
        let second = kernels::norm_sqr(&j_psi);
        var[axis_slot(axis)] = second - mean * mean;
    }
    let (m1, m2) = jz_moments(psi);
    var[2] = m2 - m1 * m1;
    var
}

/// Pure-state QFI `F_Q^l = 4 Var(Ĵ_l)`, their sum, and `f_Q = F_Q/8L`.
pub fn qfi(psi: &StateVector) -> QfiResult {
    QfiResult::from_variances(collective_variances(psi), psi.num_sites())
}

/// Ceiling of `f_Q` for `k`-producible spin-1 states, `(k + 1) / 2`.
///
/// Each block of `k` sites contributes `Σ_l Var(J_l) ≤ ⟨J²⟩ ≤ k(k+1)`, so
/// `F_Q ≤ 4L(k+1)`. This is a reconstruction: it gives 1 for separable
/// states and places 2.0 and 2.5 at `k = 3, 4`.
pub fn multipartite_bound(k: usize, sites: usize) -> Result<f64, ObservableError> {
    if k == 0 || k > sites {
        return Err(ObservableError::BlockSize { k, sites });
    }
    Ok((k as f64 + 1.0) / 2.0)
}

/// Reference lower line `f_Q = 0.5` drawn for separable states; not a bound.
pub const SEPARABLE_REFERENCE_LOW: f64 = 0.5;

/// Direct `O(N²)` DFT magnitudes with `1/N` normalization.
pub fn dft(series: &TimeSeries) -> Result<Spectrum, ObservableError> {
    dft_values(&series.values)
}

pub fn dft_values(x: &[f64]) -> Result<Spectrum, ObservableError> {
    let n = x.len();
    if n < 2 {
        return Err(ObservableError::ShortSeries);
    }
    let magnitudes = (0..n)
        .map(|k| {
            let acc: C64 = x
                .iter()
                .enumerate()
                .map(|(t, v)| {
                    // reduce k·t mod n before scaling to keep the phase accurate
                    let w = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                    C64::from_polar(*v, w)
                })
                .sum();
            acc.norm() / n as f64
        })
        .collect();
    Ok(Spectrum { magnitudes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::init_state;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn magnetization_product_states() {
        assert_eq!(mean_magnetization(&StateVector::all_zero(5).unwrap()), 0.0);
        assert_eq!(mean_magnetization(&init_state(4, "++++").unwrap()), 1.0);
        assert_eq!(site_magnetization(&init_state(3, "+0-").unwrap()), vec![1.0, 0.0, -1.0]);
    }

    #[test]
    fn magnetization_after_one_kick() {
        let mut psi = StateVector::all_zero(4).unwrap();
        let k = crate::ops::kick_operator(0.0).row_major();
        for s in 0..4 {
            kernels::apply_single_site(psi.amplitudes_mut(), s, &k);
        }
        assert!((mean_magnetization(&psi) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zz_examples() {
        let psi = StateVector::all_zero(4).unwrap();
        assert_eq!(zz_correlation(&psi, 0, 3).unwrap(), 0.0);
        let pm = init_state(2, "+-").unwrap();
        assert_eq!(zz_correlation(&pm, 0, 1).unwrap(), -1.0);
        assert!(matches!(zz_correlation(&pm, 0, 2), Err(ObservableError::SiteOutOfRange { .. })));
        assert!(matches!(zz_correlation(&pm, 1, 1), Err(ObservableError::SameSite(1, 1))));
    }

    #[test]
    fn overlap_examples() {
        let a = init_state(3, "+0-").unwrap();
        let b = init_state(3, "++-").unwrap();
        assert_eq!(overlap(&a, &a).unwrap(), 1.0);
        assert_eq!(overlap(&a, &b).unwrap(), 0.0);
        let c = init_state(2, "++").unwrap();
        assert!(overlap(&a, &c).is_err());
    }

    #[test]
    fn entropy_product_and_maximal() {
        assert!(half_chain_entropy(&init_state(4, "+0-0").unwrap()).abs() < 1e-14);
        let r = 1.0 / 3f64.sqrt();
        let mut amps = vec![C64::new(0.0, 0.0); 9];
        for l in 0..3 {
            amps[l + 3 * l] = C64::new(r, 0.0);
        }
        let psi = StateVector::from_amplitudes(2, amps).unwrap();
        assert!((half_chain_entropy(&psi) - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn qfi_all_zero_is_one() {
        for l in 1..=8 {
            let q = qfi(&StateVector::all_zero(l).unwrap());
            assert!((q.scaled - 1.0).abs() < 1e-12, "L={l}: {}", q.scaled);
            assert!((q.axis(Axis::X) - 4.0 * l as f64).abs() < 1e-12);
            assert_eq!(q.axis(Axis::Z), 0.0);
        }
        let q = qfi(&init_state(5, "+++++").unwrap());
        assert_eq!(q.axis(Axis::Z), 0.0);
        // Var S^x = Var S^y = 1/2 on |+⟩
        assert!((q.scaled - 0.5).abs() < 1e-12);
    }

    #[test]
    fn qfi_product_additivity() {
        // (|+⟩ + |0⟩)/√2 on two sites ⊗ |0 0⟩
        let r = FRAC_1_SQRT_2;
        let single = StateVector::from_amplitudes(1, vec![C64::new(r, 0.0), C64::new(0.0, r), C64::new(0.0, 0.0)]).unwrap();
        let a = single.tensor(&single).unwrap();
        let b = StateVector::all_zero(2).unwrap();
        let ab = a.tensor(&b).unwrap();
        let (fa, fb) = (qfi(&a).scaled, qfi(&b).scaled);
        assert!((qfi(&ab).scaled - 0.5 * (fa + fb)).abs() < 1e-12);
    }

    #[test]
    fn bounds() {
        assert_eq!(multipartite_bound(1, 10).unwrap(), 1.0);
        assert_eq!(multipartite_bound(3, 10).unwrap(), 2.0);
        assert_eq!(multipartite_bound(4, 10).unwrap(), 2.5);
        assert!(multipartite_bound(0, 4).is_err());
        assert!(multipartite_bound(5, 4).is_err());
        let vals: Vec<f64> = (1..=10).map(|k| multipartite_bound(k, 10).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn dft_constant_and_periodic() {
        let s = dft_values(&[2.0; 8]).unwrap();
        assert!((s.magnitudes[0] - 2.0).abs() < 1e-14);
        assert!(s.magnitudes[1..].iter().all(|m| *m < 1e-14));

        let x: Vec<f64> = (0..21).map(|n| [0.0, 1.0, -1.0][n % 3]).collect();
        let s = dft_values(&x).unwrap();
        for (k, m) in s.magnitudes.iter().enumerate() {
            if k == 7 || k == 14 {
                assert!((m - 1.0 / 3f64.sqrt()).abs() < 1e-12);
            } else {
                assert!(*m < 1e-12, "bin {k} = {m}");
            }
        }
        assert_eq!(s.peaks()[..2], [7, 14]);
        assert!(dft_values(&[1.0]).is_err());
    }

    #[test]
    fn dft_parseval_and_symmetry() {
        let x: Vec<f64> = (0..17).map(|n| (n as f64 * 0.7).sin() + 0.3).collect();
        let s = dft_values(&x).unwrap();
        let lhs: f64 = s.magnitudes.iter().map(|m| m * m).sum();
        let rhs: f64 = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((lhs - rhs).abs() < 1e-9);
        for k in 1..17 {
            assert!((s.magnitudes[k] - s.magnitudes[17 - k]).abs() < 1e-12);
        }
    }
}
