//! Dense statevectors over the `3^L` product basis.
//!
//! Site `j` (0-based) is the ternary digit of weight `3^j`, and the digit
//! value is the basis position in `(+, 0, −)`.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::kernels;
use crate::ops::Level;

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("pattern has {got} sites, expected {expected}")]
    PatternLength { expected: usize, got: usize },
    #[error("invalid level symbol `{0}` (expected +, 0 or -)")]
    BadSymbol(char),
    #[error("a chain needs at least one site")]
    Empty,
    #[error("{0} sites exceed the dense statevector limit")]
    TooLarge(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// Largest chain the dense engine will allocate (`3^16` amplitudes).
pub const MAX_DENSE_SITES: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    sites: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// Product state with the given local levels, `pattern[j]` on site `j`.
    pub fn product(pattern: &[Level]) -> Result<Self, StateError> {
        let sites = pattern.len();
        if sites == 0 {
            return Err(StateError::Empty);
        }
        if sites > MAX_DENSE_SITES {
            return Err(StateError::TooLarge(sites));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 3usize.pow(sites as u32)];
        amps[basis_index(pattern)] = C64::new(1.0, 0.0);
        Ok(StateVector { sites, amps })
    }

    /// `|0⟩^{⊗L}`.
    pub fn all_zero(sites: usize) -> Result<Self, StateError> {
        Self::product(&vec![Level::Zero; sites])
    }

    pub fn from_amplitudes(sites: usize, amps: Vec<C64>) -> Result<Self, StateError> {
        let dim = 3usize.pow(sites as u32);
        if amps.len() != dim {
            return Err(StateError::DimensionMismatch(amps.len(), dim));
        }
        Ok(StateVector { sites, amps })
    }

    pub fn num_sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        kernels::norm_sqr(&self.amps)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.amps.iter_mut().for_each(|a| *a *= inv);
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64, StateError> {
        if self.dim() != other.dim() {
            return Err(StateError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(kernels::inner(&self.amps, &other.amps))
    }

    /// Tensor product `self ⊗ other`, with `self` on the lower sites.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector, StateError> {
        let sites = self.sites + other.sites;
        if sites > MAX_DENSE_SITES {
            return Err(StateError::TooLarge(sites));
        }
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for b in &other.amps {
            for a in &self.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector { sites, amps })
    }
}

/// Basis index of a product configuration.
pub fn basis_index(pattern: &[Level]) -> usize {
    pattern.iter().rev().fold(0, |acc, l| 3 * acc + l.index())
}

/// Parses a level pattern such as `"0000"` or `"+-"`.
pub fn parse_pattern(s: &str) -> Result<Vec<Level>, StateError> {
    s.chars().map(|c| Level::from_symbol(c).ok_or(StateError::BadSymbol(c))).collect()
}

/// `init_state`: product state from a textual pattern whose length must be `sites`.
pub fn init_state(sites: usize, pattern: &str) -> Result<StateVector, StateError> {
    let levels = parse_pattern(pattern)?;
    if levels.len() != sites {
        return Err(StateError::PatternLength { expected: sites, got: levels.len() });
    }
    StateVector::product(&levels)
}

/// Calls `f(index, digits)` for every basis index in increasing order,
/// maintaining the ternary digits incrementally.
pub(crate) fn for_each_config(sites: usize, mut f: impl FnMut(usize, &[u8])) {
    let dim = 3usize.pow(sites as u32);
    let mut digits = vec![0u8; sites];
    for idx in 0..dim {
        f(idx, &digits);
        for d in digits.iter_mut() {
            *d += 1;
            if *d < 3 {
                break;
            }
            *d = 0;
        }
    }
}

/// `Σ_j m_j m_{j+1}` for every basis index.
pub(crate) fn bond_energies(sites: usize) -> Vec<i8> {
    let mut out = Vec::with_capacity(3usize.pow(sites as u32));
    let m = |d: u8| 1 - d as i8;
    for_each_config(sites, |_, digits| {
        out.push(digits.windows(2).map(|w| m(w[0]) * m(w[1])).sum());
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_zero_index() {
        let psi = StateVector::all_zero(4).unwrap();
        let idx = 1 + 3 + 9 + 27;
        assert_eq!(psi.amplitudes()[idx], C64::new(1.0, 0.0));
        assert!((psi.norm() - 1.0).abs() < 1e-15);
        assert_eq!(psi.amplitudes().iter().filter(|a| a.norm() > 0.0).count(), 1);
        assert!((psi.inner(&psi).unwrap().norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pattern_parsing() {
        let psi = init_state(2, "+-").unwrap();
        assert_eq!(psi.amplitudes().iter().filter(|a| a.norm() > 0.0).count(), 1);
        // + on site 0 (digit 0), − on site 1 (digit 2)
        assert_eq!(psi.amplitudes()[6], C64::new(1.0, 0.0));
        assert_eq!(init_state(3, "00"), Err(StateError::PatternLength { expected: 3, got: 2 }));
        assert_eq!(init_state(2, "0x"), Err(StateError::BadSymbol('x')));
    }

    #[test]
    fn energies_small_chain() {
        let e = bond_energies(2);
        // |++⟩ → 1, |+−⟩ → −1, |0·⟩ → 0
        assert_eq!(e[0], 1);
        assert_eq!(e[6], -1);
        assert_eq!(e[1], 0);
        assert_eq!(e.len(), 9);
    }

    #[test]
    fn tensor_product_order() {
        let a = init_state(1, "+").unwrap();
        let b = init_state(1, "-").unwrap();
        assert_eq!(a.tensor(&b).unwrap(), init_state(2, "+-").unwrap());
    }
}
