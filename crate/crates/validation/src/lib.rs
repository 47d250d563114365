//! Dense reference constructions, written from the textbook definitions
//! without going through the simulator's operator tables, plus the
//! bookkeeping used by the acceptance suite.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn mat3(rows: [[f64; 3]; 3]) -> DMatrix<C64> {
    DMatrix::from_fn(3, 3, |i, j| c(rows[i][j]))
}

/// `S^x` in the `(+, 0, −)` basis.
pub fn sx() -> DMatrix<C64> {
    let s = FRAC_1_SQRT_2;
    mat3([[0.0, s, 0.0], [s, 0.0, s], [0.0, s, 0.0]])
}

pub fn sz() -> DMatrix<C64> {
    mat3([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, -1.0]])
}

pub fn lambda1() -> DMatrix<C64> {
    mat3([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
}

pub fn lambda6() -> DMatrix<C64> {
    mat3([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
}

/// `exp(−i t H)` for Hermitian `H` by diagonalization.
pub fn expm_herm(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let eig = h.clone().symmetric_eigen();
    let phases = DMatrix::from_fn(h.nrows(), h.nrows(), |i, j| {
        if i == j {
            C64::from_polar(1.0, -t * eig.eigenvalues[i])
        } else {
            c(0.0)
        }
    });
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// `op` on `site` of an `sites`-site chain; site `j` carries weight `3^j`.
pub fn embed(op: &DMatrix<C64>, site: usize, sites: usize) -> DMatrix<C64> {
    let mut out = DMatrix::identity(1, 1);
    for s in (0..sites).rev() {
        let f = if s == site { op.clone() } else { DMatrix::identity(3, 3) };
        out = out.kronecker(&f);
    }
    out
}

/// `Σ_j A_j A_{j+1}` with open boundaries.
pub fn bond_sum(a: &DMatrix<C64>, sites: usize) -> DMatrix<C64> {
    let dim = 3usize.pow(sites as u32);
    let mut h = DMatrix::zeros(dim, dim);
    for j in 0..sites - 1 {
        h += embed(a, j, sites) * embed(a, j + 1, sites);
    }
    h
}

/// One drive period `P U_z U_x` as a dense `3^L × 3^L` matrix.
pub fn floquet_oracle(sites: usize, theta_x: f64, theta_z: f64, epsilon: f64) -> DMatrix<C64> {
    let ux = expm_herm(&bond_sum(&sx(), sites), theta_x / 2.0);
    let uz = expm_herm(&bond_sum(&sz(), sites), theta_z / 2.0);
    let angle = (PI - epsilon) / 2.0;
    let kick = expm_herm(&lambda6(), angle) * expm_herm(&lambda1(), angle);
    let mut p = DMatrix::identity(1, 1);
    for _ in 0..sites {
        p = p.kronecker(&kick);
    }
    p * uz * ux
}

/// One acceptance line.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: &'static str,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(id: &'static str, title: &'static str, pass: bool, detail: impl Into<String>) -> Self {
        Outcome { id, title, pass, detail: detail.into() }
    }

    pub fn line(&self) -> String {
        format!("{} {:<4} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.id, self.title, self.detail)
    }

    pub fn print(&self) {
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{}", self.line());
        let _ = out.flush();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_is_unitary_and_cycles_in_trivial_limit() {
        let u = floquet_oracle(3, 0.0, 0.9, 0.0);
        let id = DMatrix::<C64>::identity(27, 27);
        assert!((u.adjoint() * &u - &id).iter().all(|z| z.norm() < 1e-12));
        // |000⟩ has index 1 + 3 + 9
        let u3 = &u * &u * &u;
        assert!((u3[(13, 13)].norm() - 1.0).abs() < 1e-12);
        assert!(u[(13, 13)].norm() < 1e-12);
    }

    #[test]
    fn kick_permutes_levels() {
        let k = expm_herm(&lambda6(), PI / 2.0) * expm_herm(&lambda1(), PI / 2.0);
        // |0⟩ → |+⟩, |+⟩ → |−⟩, |−⟩ → |0⟩ up to phases
        for (from, to) in [(1, 0), (0, 2), (2, 1)] {
            assert!((k[(to, from)].norm() - 1.0).abs() < 1e-12);
        }
    }
}
