//! Single-site and two-site operators for spin-1 chains.
//!
//! Qutrit operators use the ordered basis `(+, 0, −)` of `S^z` eigenstates.
//! The four-level encoding used by the gate compiler prepends an auxiliary
//! level, giving the order `(a, +, 0, −)`; the qutrit block sits in rows and
//! columns 1..4.
//!
//! Two-site operators act on `A ⊗ B` with the first factor on the lower site
//! of a bond, i.e. the local pair index is `d·m_j + m_{j+1}`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix3, Matrix4};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, kron, I};

#[derive(Debug, Error, PartialEq)]
pub enum OpsError {
    #[error("Gell-Mann index {0} out of range 1..=8")]
    GellMannIndex(usize),
    #[error("rotation index {0} out of range 1..=3")]
    RotationIndex(usize),
    #[error("levels of a phase rotation must differ")]
    SameLevel,
    #[error("unknown operator name `{0}`")]
    UnknownOperator(String),
}

/// Local `S^z` eigenstate of a spin-1 site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    Plus,
    Zero,
    Minus,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Plus, Level::Zero, Level::Minus];

    /// Position in the `(+, 0, −)` basis.
    pub fn index(self) -> usize {
        match self {
            Level::Plus => 0,
            Level::Zero => 1,
            Level::Minus => 2,
        }
    }

    pub fn from_index(idx: usize) -> Option<Level> {
        Level::ALL.get(idx).copied()
    }

    /// `S^z` eigenvalue.
    pub fn magnetization(self) -> i8 {
        match self {
            Level::Plus => 1,
            Level::Zero => 0,
            Level::Minus => -1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Level::Plus => '+',
            Level::Zero => '0',
            Level::Minus => '-',
        }
    }

    pub fn from_symbol(c: char) -> Option<Level> {
        match c {
            '+' | 'p' => Some(Level::Plus),
            '0' | 'z' => Some(Level::Zero),
            '-' | 'm' => Some(Level::Minus),
            _ => None,
        }
    }
}

/// Level of the four-level (auxiliary) encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuditLevel {
    Aux,
    Plus,
    Zero,
    Minus,
}

impl QuditLevel {
    pub fn index(self) -> usize {
        match self {
            QuditLevel::Aux => 0,
            QuditLevel::Plus => 1,
            QuditLevel::Zero => 2,
            QuditLevel::Minus => 3,
        }
    }

    pub fn from_index(idx: usize) -> Option<QuditLevel> {
        [QuditLevel::Aux, QuditLevel::Plus, QuditLevel::Zero, QuditLevel::Minus]
            .get(idx)
            .copied()
    }
}

impl From<Level> for QuditLevel {
    fn from(l: Level) -> Self {
        match l {
            Level::Plus => QuditLevel::Plus,
            Level::Zero => QuditLevel::Zero,
            Level::Minus => QuditLevel::Minus,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(format!("unknown axis `{other}` (expected x, y or z)")),
        }
    }
}

/// Dense 3×3 operator on one spin-1 site.
#[derive(Clone, Debug, PartialEq)]
pub struct QutritOperator(Matrix3<C64>);

impl QutritOperator {
    pub fn new(m: Matrix3<C64>) -> Self {
        QutritOperator(m)
    }

    pub fn identity() -> Self {
        QutritOperator(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<C64> {
        &self.0
    }

    pub fn to_dmatrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(3, 3, |i, j| self.0[(i, j)])
    }

    /// Row-major entries, the layout consumed by the statevector kernels.
    pub fn row_major(&self) -> [C64; 9] {
        let mut out = [C64::new(0.0, 0.0); 9];
        for i in 0..3 {
            for j in 0..3 {
                out[3 * i + j] = self.0[(i, j)];
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        QutritOperator(self.0.adjoint())
    }

    pub fn compose(&self, rhs: &QutritOperator) -> Self {
        QutritOperator(self.0 * rhs.0)
    }

    /// Embeds into the four-level encoding, acting trivially on `|a⟩`.
    pub fn embed(&self) -> QuditOperator {
        let mut m = Matrix4::identity();
        for i in 0..3 {
            for j in 0..3 {
                m[(i + 1, j + 1)] = self.0[(i, j)];
            }
        }
        QuditOperator(m)
    }
}

/// Dense 4×4 operator on one site of the `(a, +, 0, −)` encoding.
#[derive(Clone, Debug, PartialEq)]
pub struct QuditOperator(Matrix4<C64>);

impl QuditOperator {
    pub fn new(m: Matrix4<C64>) -> Self {
        QuditOperator(m)
    }

    pub fn identity() -> Self {
        QuditOperator(Matrix4::identity())
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.0
    }

    pub fn to_dmatrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(4, 4, |i, j| self.0[(i, j)])
    }

    pub fn compose(&self, rhs: &QuditOperator) -> Self {
        QuditOperator(self.0 * rhs.0)
    }

    /// Qutrit block (rows/columns `+, 0, −`).
    pub fn restrict(&self) -> QutritOperator {
        QutritOperator(Matrix3::from_fn(|i, j| self.0[(i + 1, j + 1)]))
    }

    /// Largest coupling between `|a⟩` and the qutrit block.
    pub fn leakage(&self) -> f64 {
        (1..4)
            .map(|k| self.0[(0, k)].norm().max(self.0[(k, 0)].norm()))
            .fold(0.0, f64::max)
    }
}

/// Two-site operator on `d ⊗ d` with `d = 3` (qutrits) or `d = 4` (qudits).
#[derive(Clone, Debug, PartialEq)]
pub struct TwoSiteOperator {
    local_dim: usize,
    mat: DMatrix<C64>,
}

impl TwoSiteOperator {
    pub fn new(local_dim: usize, mat: DMatrix<C64>) -> Self {
        assert_eq!(mat.shape(), (local_dim * local_dim, local_dim * local_dim));
        TwoSiteOperator { local_dim, mat }
    }

    pub fn identity(local_dim: usize) -> Self {
        let n = local_dim * local_dim;
        TwoSiteOperator { local_dim, mat: DMatrix::identity(n, n) }
    }

    pub fn product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Self {
        assert_eq!(a.shape(), b.shape());
        TwoSiteOperator { local_dim: a.nrows(), mat: kron(a, b) }
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn compose(&self, rhs: &TwoSiteOperator) -> Self {
        assert_eq!(self.local_dim, rhs.local_dim);
        TwoSiteOperator { local_dim: self.local_dim, mat: &self.mat * &rhs.mat }
    }

    pub fn unitarity_residual(&self) -> f64 {
        linalg::unitarity_residual(&self.mat)
    }

    /// The 9×9 block acting on qutrit ⊗ qutrit of a 16×16 qudit operator.
    pub fn restrict_to_qutrits(&self) -> TwoSiteOperator {
        if self.local_dim == 3 {
            return self.clone();
        }
        assert_eq!(self.local_dim, 4);
        let embed = |k: usize| 4 * (k / 3 + 1) + (k % 3 + 1);
        TwoSiteOperator {
            local_dim: 3,
            mat: DMatrix::from_fn(9, 9, |r, c| self.mat[(embed(r), embed(c))]),
        }
    }

    /// Largest matrix element connecting the qutrit ⊗ qutrit subspace to any
    /// state with an auxiliary level populated.
    pub fn leakage(&self) -> f64 {
        if self.local_dim == 3 {
            return 0.0;
        }
        let in_block = |k: usize| k / 4 != 0 && !k.is_multiple_of(4);
        let mut worst: f64 = 0.0;
        for r in 0..16 {
            for c in 0..16 {
                if in_block(r) != in_block(c) {
                    worst = worst.max(self.mat[(r, c)].norm());
                }
            }
        }
        worst
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// The Gell-Mann matrix `λ_k`, `k ∈ 1..=8`.
///
/// `λ_1, λ_2` couple `(+, 0)`, `λ_4, λ_5` couple `(+, −)`, and `λ_6, λ_7`
/// couple `(0, −)`.
pub fn gell_mann(k: usize) -> Result<QutritOperator, OpsError> {
    let z = c(0.0);
    let o = c(1.0);
    let m = match k {
        1 => Matrix3::new(z, o, z, o, z, z, z, z, z),
        2 => Matrix3::new(z, -I, z, I, z, z, z, z, z),
        3 => Matrix3::new(o, z, z, z, -o, z, z, z, z),
        4 => Matrix3::new(z, z, o, z, z, z, o, z, z),
        5 => Matrix3::new(z, z, -I, z, z, z, I, z, z),
        6 => Matrix3::new(z, z, z, z, z, o, z, o, z),
        7 => Matrix3::new(z, z, z, z, z, -I, z, I, z),
        8 => {
            let s = 1.0 / 3f64.sqrt();
            Matrix3::new(c(s), z, z, z, c(s), z, z, z, c(-2.0 * s))
        }
        _ => return Err(OpsError::GellMannIndex(k)),
    };
    Ok(QutritOperator(m))
}

/// Spin-1 matrices in the `S^z` eigenbasis.
pub fn spin_matrix(axis: Axis) -> QutritOperator {
    let z = c(0.0);
    let r = c(FRAC_1_SQRT_2);
    let ri = I * FRAC_1_SQRT_2;
    let m = match axis {
        Axis::X => Matrix3::new(z, r, z, r, z, r, z, r, z),
        Axis::Y => Matrix3::new(z, -ri, z, ri, z, -ri, z, ri, z),
        Axis::Z => Matrix3::new(c(1.0), z, z, z, z, z, z, z, c(-1.0)),
    };
    QutritOperator(m)
}

/// Unitary `W` whose columns are the `S^x` eigenvectors for eigenvalues
/// `+1, 0, −1`, so that `W S^z W† = S^x`.
pub fn sx_eigenbasis() -> QutritOperator {
    let h = c(0.5);
    let r = c(FRAC_1_SQRT_2);
    let z = c(0.0);
    QutritOperator(Matrix3::new(h, r, h, r, z, -r, h, -r, h))
}

fn two_level_rotation(dim: usize, a: usize, b: usize, theta: f64, phi: f64) -> DMatrix<C64> {
    // exp(-iθ/2 (cos φ σx + sin φ σy)) on levels (a, b)
    let mut m = DMatrix::identity(dim, dim);
    let (s, co) = (theta / 2.0).sin_cos();
    m[(a, a)] = c(co);
    m[(b, b)] = c(co);
    m[(a, b)] = -I * s * C64::from_polar(1.0, -phi);
    m[(b, a)] = -I * s * C64::from_polar(1.0, phi);
    m
}

fn rotation_levels(k: usize) -> Result<(usize, usize), OpsError> {
    match k {
        1 => Ok((0, 1)),
        2 => Ok((0, 2)),
        3 => Ok((1, 2)),
        _ => Err(OpsError::RotationIndex(k)),
    }
}

/// Native single-qutrit rotation `R_k(θ, φ)`: `R_1 = R_{+0}`, `R_2 = R_{+−}`,
/// `R_3 = R_{0−}`.
pub fn rotation(k: usize, theta: f64, phi: f64) -> Result<QutritOperator, OpsError> {
    let (a, b) = rotation_levels(k)?;
    let m = two_level_rotation(3, a, b, theta, phi);
    Ok(QutritOperator(Matrix3::from_fn(|i, j| m[(i, j)])))
}

/// Levels coupled by `R_k`, in the four-level encoding.
pub fn rotation_qudit_levels(k: usize) -> Result<(QuditLevel, QuditLevel), OpsError> {
    let (a, b) = rotation_levels(k)?;
    Ok((QuditLevel::from_index(a + 1).unwrap(), QuditLevel::from_index(b + 1).unwrap()))
}

/// Single-site factor of the ternary kick,
/// `exp(−i(π−ε)/2 λ_6) · exp(−i(π−ε)/2 λ_1)`; the `λ_1` factor acts first.
pub fn kick_operator(epsilon: f64) -> QutritOperator {
    let angle = PI - epsilon;
    let first = rotation(1, angle, 0.0).unwrap();
    let second = rotation(3, angle, 0.0).unwrap();
    second.compose(&first)
}

fn tripotent_pair(op: &QutritOperator) -> DMatrix<C64> {
    let m = op.to_dmatrix();
    kron(&m, &m)
}

/// `exp(−i(θ/2) S^a ⊗ S^a)`, exact (the generator has spectrum `{−1, 0, 1}`).
pub fn two_site_coupling(axis: Axis, theta: f64) -> TwoSiteOperator {
    let gen = tripotent_pair(&spin_matrix(axis));
    TwoSiteOperator { local_dim: 3, mat: linalg::expm_tripotent(&gen, theta / 2.0) }
}

/// Phase `z` with `z^(m1 m2)` giving the diagonal of the `S^z ⊗ S^z` coupling.
#[cfg(test)]
pub(crate) fn zz_phase_table(theta: f64) -> [C64; 3] {
    // index by m1*m2 + 1
    [C64::from_polar(1.0, theta / 2.0), c(1.0), C64::from_polar(1.0, -theta / 2.0)]
}

/// `λ_1` embedded in the four-level encoding (acts on `+, 0`).
pub fn qudit_lambda1() -> QuditOperator {
    gell_mann(1).unwrap().embed_raw()
}

impl QutritOperator {
    /// Embedding that maps the auxiliary row/column to zero (for generators).
    fn embed_raw(&self) -> QuditOperator {
        let mut m = Matrix4::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m[(i + 1, j + 1)] = self.0[(i, j)];
            }
        }
        QuditOperator(m)
    }
}

/// `R_k(θ, φ)` in the four-level encoding.
pub fn qudit_rotation(k: usize, theta: f64, phi: f64) -> Result<QuditOperator, OpsError> {
    Ok(rotation(k, theta, phi)?.embed())
}

/// Two-level rotation between any pair of qudit levels.
pub fn qudit_level_rotation(a: QuditLevel, b: QuditLevel, theta: f64, phi: f64) -> Result<QuditOperator, OpsError> {
    if a == b {
        return Err(OpsError::SameLevel);
    }
    let m = two_level_rotation(4, a.index(), b.index(), theta, phi);
    Ok(QuditOperator(Matrix4::from_fn(|i, j| m[(i, j)])))
}

/// Phase gate `Z_{ij}(θ)`: `e^{+iθ/2}` on level `i`, `e^{−iθ/2}` on level `j`.
pub fn z_rotation(i: QuditLevel, j: QuditLevel, theta: f64) -> Result<QuditOperator, OpsError> {
    if i == j {
        return Err(OpsError::SameLevel);
    }
    let mut m = Matrix4::identity();
    m[(i.index(), i.index())] = C64::from_polar(1.0, theta / 2.0);
    m[(j.index(), j.index())] = C64::from_polar(1.0, -theta / 2.0);
    Ok(QuditOperator(m))
}

/// The four commuting factors of `MS(θ, 0)` in the order written:
/// global phase (as a scalar), `e^{−iθ/4 λ_1²⊗1}`, `e^{−iθ/4 1⊗λ_1²}`,
/// `e^{−iθ/2 λ_1⊗λ_1}`.
pub fn ms_factors(theta: f64) -> (C64, [TwoSiteOperator; 3]) {
    let l1 = qudit_lambda1().to_dmatrix();
    let proj = &l1 * &l1;
    let id = DMatrix::<C64>::identity(4, 4);
    let local = |m: &DMatrix<C64>| {
        // exp(-iθ/4 P) with P a projector
        let mut e = DMatrix::identity(4, 4);
        for k in 0..4 {
            if m[(k, k)].re > 0.5 {
                e[(k, k)] = C64::from_polar(1.0, -theta / 4.0);
            }
        }
        e
    };
    let loc = local(&proj);
    let first = TwoSiteOperator::product(&loc, &id);
    let second = TwoSiteOperator::product(&id, &loc);
    let xx = kron(&l1, &l1);
    let coupling = TwoSiteOperator { local_dim: 4, mat: linalg::expm_tripotent(&xx, theta / 2.0) };
    (C64::from_polar(1.0, theta / 2.0), [first, second, coupling])
}

/// Native entangling gate `MS(θ, 0)` on two four-level sites.
pub fn ms_gate(theta: f64) -> TwoSiteOperator {
    let (phase, [a, b, xx]) = ms_factors(theta);
    let mut m = a.compose(&b).compose(&xx);
    m.mat *= phase;
    m
}

/// Looks up an operator by its CLI name. Single-site operators come back as
/// 3×3 (or 4×4 for the `z-*` phase gates), couplings as 9×9, `ms` as 16×16.
pub fn named_operator(name: &str, theta: f64, phi: f64) -> Result<DMatrix<C64>, OpsError> {
    let lower = name.to_ascii_lowercase();
    if let Some(k) = lower.strip_prefix("gell-mann-").or_else(|| lower.strip_prefix("lambda")) {
        let k: usize = k.parse().map_err(|_| OpsError::UnknownOperator(name.into()))?;
        return Ok(gell_mann(k)?.to_dmatrix());
    }
    let m = match lower.as_str() {
        "sx" => spin_matrix(Axis::X).to_dmatrix(),
        "sy" => spin_matrix(Axis::Y).to_dmatrix(),
        "sz" => spin_matrix(Axis::Z).to_dmatrix(),
        "r1" => rotation(1, theta, phi)?.to_dmatrix(),
        "r2" => rotation(2, theta, phi)?.to_dmatrix(),
        "r3" => rotation(3, theta, phi)?.to_dmatrix(),
        "kick" => kick_operator(theta).to_dmatrix(),
        "coupling-x" => two_site_coupling(Axis::X, theta).into_matrix(),
        "coupling-z" => two_site_coupling(Axis::Z, theta).into_matrix(),
        "ms" => ms_gate(theta).into_matrix(),
        "z-plus-zero" => z_rotation(QuditLevel::Plus, QuditLevel::Zero, theta)?.to_dmatrix(),
        "z-aux-plus" => z_rotation(QuditLevel::Aux, QuditLevel::Plus, theta)?.to_dmatrix(),
        _ => return Err(OpsError::UnknownOperator(name.into())),
    };
    Ok(m)
}

pub const OPERATOR_NAMES: &[&str] = &[
    "gell-mann-1..8", "sx", "sy", "sz", "r1", "r2", "r3", "kick", "coupling-x", "coupling-z", "ms",
    "z-plus-zero", "z-aux-plus",
];
