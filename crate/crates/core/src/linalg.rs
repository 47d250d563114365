//! Small dense helpers shared by the operator constructors and the engines.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Kronecker product `a ⊗ b`, with `a` acting on the more significant index.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Largest entry-wise modulus of `a - b`.
pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_abs(a: &DMatrix<C64>) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// `max |U U† - 1|`.
pub fn unitarity_residual(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    max_abs_diff(&(u * u.adjoint()), &DMatrix::identity(n, n))
}

pub fn hermiticity_residual(h: &DMatrix<C64>) -> f64 {
    max_abs_diff(h, &h.adjoint())
}

pub fn commutator(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a * b - b * a
}

/// `exp(-i t H)` for Hermitian `H` through its eigendecomposition.
pub fn expm_hermitian(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| (-I * t * e).exp()));
    v * phases * v.adjoint()
}

/// `exp(-i a A)` for a Hermitian `A` with `A³ = A` (spectrum in {-1, 0, 1}):
/// `1 + (cos a - 1) A² - i sin a A`.
pub(crate) fn expm_tripotent(a_mat: &DMatrix<C64>, angle: f64) -> DMatrix<C64> {
    let n = a_mat.nrows();
    let sq = a_mat * a_mat;
    DMatrix::identity(n, n) + sq * C64::from(angle.cos() - 1.0) - a_mat * (I * angle.sin())
}

/// Multiply `b` by the unit-modulus phase that best aligns it with `a`,
/// using the largest-magnitude entry of `a` as reference.
pub fn align_global_phase(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (mut best, mut idx) = (0.0, 0);
    for (k, z) in a.iter().enumerate() {
        if z.norm() > best {
            best = z.norm();
            idx = k;
        }
    }
    let bz = b.iter().nth(idx).copied().unwrap_or(C64::new(0.0, 0.0));
    if best == 0.0 || bz.norm() == 0.0 {
        return b.clone();
    }
    let phase = a.iter().nth(idx).unwrap() / bz;
    b * C64::from_polar(1.0, phase.arg())
}

/// Max residual between `a` and `b` after quotienting out a global phase.
pub fn phase_insensitive_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    max_abs_diff(a, &align_global_phase(a, b))
}

/// Thin SVD `m = u diag(s) vt`, singular values sorted descending.
///
/// Goes through faer: nalgebra's complex bidiagonal iteration returns
/// visibly wrong factors for some rank-deficient inputs, which are the
/// common case for weakly entangled MPS bonds.
pub fn thin_svd(m: &DMatrix<C64>) -> Option<(DMatrix<C64>, Vec<f64>, DMatrix<C64>)> {
    let (r, c) = m.shape();
    let svd = faer::Mat::<C64>::from_fn(r, c, |i, j| m[(i, j)]).thin_svd().ok()?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let k = s.nrows();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].re.total_cmp(&s[a].re));
    let sorted = order.iter().map(|&q| s[q].re).collect();
    let u = DMatrix::from_fn(r, k, |i, q| u[(i, order[q])]);
    let vt = DMatrix::from_fn(k, c, |q, j| v[(j, order[q])].conj());
    Some((u, sorted, vt))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_ordering() {
        let a = DMatrix::from_row_slice(2, 2, &[C64::from(1.0), C64::from(2.0), C64::from(3.0), C64::from(4.0)]);
        let id = DMatrix::<C64>::identity(2, 2);
        let k = kron(&a, &id);
        // a acts on the slow index
        assert_eq!(k[(0, 2)], C64::from(2.0));
        assert_eq!(k[(0, 1)], C64::from(0.0));
    }

    #[test]
    fn global_phase_alignment_removes_phase() {
        let a = DMatrix::from_row_slice(2, 2, &[C64::from(0.6), C64::from(0.8), C64::from(-0.8), C64::from(0.6)]);
        let b = &a * C64::from_polar(1.0, 1.234);
        assert!(phase_insensitive_diff(&a, &b) < 1e-14);
        assert!(max_abs_diff(&a, &b) > 0.1);
    }

    #[test]
    fn svd_survives_nearly_rank_one_input() {
        // plain try_svd returns a factorization off by 0.1 on this block
        let c = C64::new;
        let m = DMatrix::from_row_slice(3, 3, &[
            c(1.2450238451404958e-32, -1.937603003917938e-30),
            c(-1.3699783096049518e-15, -3.8769551627497434e-16),
            c(-7.676222598402965e-31, -1.0394420291731824e-31),
            c(1.3111886120817745e-15, 3.6451887501811876e-16),
            c(0.9980658245348175, -0.062165986645721594),
            c(3.9260020960259635e-16, 3.7665793145290663e-16),
            c(2.025739900592241e-31, -6.444386972756831e-31),
            c(4.006399724596899e-16, -2.930498385334224e-16),
            c(1.0699604493777171e-31, 2.479616320831418e-31),
        ]);
        let (u, s, vt) = thin_svd(&m).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-12);
        let mut us = u.clone();
        for (k, &x) in s.iter().enumerate() {
            us.column_mut(k).scale_mut(x);
        }
        assert!((us * vt - &m).norm() < 1e-12);
    }
}
