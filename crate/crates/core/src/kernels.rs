//! Statevector kernels with a sequential path and a rayon path.
//!
//! The dispatching functions at the top of this module pick the rayon path
//! for vectors of at least [`PAR_MIN_LEN`] amplitudes when the `parallel`
//! feature is enabled. Both paths compute every amplitude with the same
//! arithmetic, and reductions accumulate fixed-size chunks in index order,
//! so results are bit-identical across paths and thread counts.

use num_complex::Complex64 as C64;

/// Vectors shorter than this always run sequentially.
pub const PAR_MIN_LEN: usize = 1 << 14;

/// Fixed chunk length of deterministic reductions.
pub const REDUCE_CHUNK: usize = 4096;

#[cfg(feature = "parallel")]
#[inline]
fn use_parallel(len: usize) -> bool {
    len >= PAR_MIN_LEN
}

/// Applies a 3×3 row-major `u` to site `site`.
pub fn apply_single_site(amps: &mut [C64], site: usize, u: &[C64; 9]) {
    #[cfg(feature = "parallel")]
    if use_parallel(amps.len()) {
        return par::apply_single_site(amps, site, u);
    }
    seq::apply_single_site(amps, site, u)
}

/// Applies a 9×9 row-major `u` to sites `(site, site + 1)`; the gate's first
/// tensor factor acts on `site`.
pub fn apply_two_site(amps: &mut [C64], site: usize, u: &[C64; 81]) {
    #[cfg(feature = "parallel")]
    if use_parallel(amps.len()) {
        return par::apply_two_site(amps, site, u);
    }
    seq::apply_two_site(amps, site, u)
}

/// Multiplies amplitude `k` by `table[(energies[k] + offset) as usize]`.
pub fn apply_diagonal(amps: &mut [C64], energies: &[i8], table: &[C64], offset: i32) {
    #[cfg(feature = "parallel")]
    if use_parallel(amps.len()) {
        return par::apply_diagonal(amps, energies, table, offset);
    }
    seq::apply_diagonal(amps, energies, table, offset)
}

pub fn norm_sqr(amps: &[C64]) -> f64 {
    reduce(amps.len(), |lo, hi| amps[lo..hi].iter().map(|a| a.norm_sqr()).sum::<f64>(), 0.0)
}

/// `Σ conj(a_k) b_k`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    assert_eq!(a.len(), b.len());
    reduce(
        a.len(),
        |lo, hi| a[lo..hi].iter().zip(&b[lo..hi]).map(|(x, y)| x.conj() * y).sum::<C64>(),
        C64::new(0.0, 0.0),
    )
}

/// Deterministic chunked reduction over `0..len`.
pub fn reduce<T, F>(len: usize, chunk: F, zero: T) -> T
where
    T: Copy + Send + std::ops::Add<Output = T>,
    F: Fn(usize, usize) -> T + Sync,
{
    let n_chunks = len.div_ceil(REDUCE_CHUNK);
    let bounds = |c: usize| (c * REDUCE_CHUNK, ((c + 1) * REDUCE_CHUNK).min(len));
    #[cfg(feature = "parallel")]
    if use_parallel(len) {
        use rayon::prelude::*;
        let partials: Vec<T> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let (lo, hi) = bounds(c);
                chunk(lo, hi)
            })
            .collect();
        return partials.into_iter().fold(zero, |acc, x| acc + x);
    }
    (0..n_chunks).fold(zero, |acc, c| {
        let (lo, hi) = bounds(c);
        acc + chunk(lo, hi)
    })
}

#[inline(always)]
fn mat3(u: &[C64; 9], a: C64, b: C64, c: C64) -> (C64, C64, C64) {
    (
        u[0] * a + u[1] * b + u[2] * c,
        u[3] * a + u[4] * b + u[5] * c,
        u[6] * a + u[7] * b + u[8] * c,
    )
}

#[inline(always)]
fn mat9(u: &[C64; 81], v: &[C64; 9]) -> [C64; 9] {
    let mut out = [C64::new(0.0, 0.0); 9];
    for (r, o) in out.iter_mut().enumerate() {
        let row = &u[9 * r..9 * r + 9];
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..9 {
            acc += row[k] * v[k];
        }
        *o = acc;
    }
    out
}

/// Sequential kernels; always compiled so benchmarks can compare paths.
pub mod seq {
    use super::*;

    pub fn apply_single_site(amps: &mut [C64], site: usize, u: &[C64; 9]) {
        let stride = 3usize.pow(site as u32);
        for block in amps.chunks_exact_mut(3 * stride) {
            let (a, rest) = block.split_at_mut(stride);
            let (b, c) = rest.split_at_mut(stride);
            for ((x, y), z) in a.iter_mut().zip(b.iter_mut()).zip(c.iter_mut()) {
                let (nx, ny, nz) = mat3(u, *x, *y, *z);
                *x = nx;
                *y = ny;
                *z = nz;
            }
        }
    }

    pub fn apply_two_site(amps: &mut [C64], site: usize, u: &[C64; 81]) {
        let stride = 3usize.pow(site as u32);
        for block in amps.chunks_exact_mut(9 * stride) {
            for off in 0..stride {
                two_site_at(block, off, stride, u);
            }
        }
    }

    pub fn apply_diagonal(amps: &mut [C64], energies: &[i8], table: &[C64], offset: i32) {
        for (a, &e) in amps.iter_mut().zip(energies) {
            *a *= table[(e as i32 + offset) as usize];
        }
    }

    #[inline(always)]
    pub(super) fn two_site_at(block: &mut [C64], off: usize, stride: usize, u: &[C64; 81]) {
        // local index p = 3·m_site + m_{site+1}; amplitude offset m_site·s + 3·m_{site+1}·s
        let mut v = [C64::new(0.0, 0.0); 9];
        for (p, slot) in v.iter_mut().enumerate() {
            *slot = block[off + stride * (p / 3 + 3 * (p % 3))];
        }
        let out = mat9(u, &v);
        for (p, val) in out.iter().enumerate() {
            block[off + stride * (p / 3 + 3 * (p % 3))] = *val;
        }
    }
}

/// Rayon kernels.
#[cfg(feature = "parallel")]
pub mod par {
    use super::*;
    use rayon::prelude::*;

    const INNER_CHUNK: usize = 2048;

    pub fn apply_single_site(amps: &mut [C64], site: usize, u: &[C64; 9]) {
        let stride = 3usize.pow(site as u32);
        let kernel = |a: &mut [C64], b: &mut [C64], c: &mut [C64]| {
            for ((x, y), z) in a.iter_mut().zip(b.iter_mut()).zip(c.iter_mut()) {
                let (nx, ny, nz) = mat3(u, *x, *y, *z);
                *x = nx;
                *y = ny;
                *z = nz;
            }
        };
        if stride < INNER_CHUNK {
            amps.par_chunks_mut(3 * stride).for_each(|block| {
                let (a, rest) = block.split_at_mut(stride);
                let (b, c) = rest.split_at_mut(stride);
                kernel(a, b, c);
            });
        } else {
            for block in amps.chunks_exact_mut(3 * stride) {
                let (a, rest) = block.split_at_mut(stride);
                let (b, c) = rest.split_at_mut(stride);
                a.par_chunks_mut(INNER_CHUNK)
                    .zip(b.par_chunks_mut(INNER_CHUNK))
                    .zip(c.par_chunks_mut(INNER_CHUNK))
                    .for_each(|((a, b), c)| kernel(a, b, c));
            }
        }
    }

    pub fn apply_two_site(amps: &mut [C64], site: usize, u: &[C64; 81]) {
        let stride = 3usize.pow(site as u32);
        let n_blocks = amps.len() / (9 * stride);
        if n_blocks >= 64 || stride < INNER_CHUNK {
            amps.par_chunks_mut(9 * stride).for_each(|block| {
                for off in 0..stride {
                    seq::two_site_at(block, off, stride, u);
                }
            });
        } else {
            for block in amps.chunks_exact_mut(9 * stride) {
                let ptr = SharedMut(block.as_mut_ptr());
                let len = block.len();
                (0..stride).into_par_iter().with_min_len(INNER_CHUNK).for_each(|off| {
                    // SAFETY: each offset touches the nine disjoint indices
                    // off + stride·k, k < 9, all inside the block; distinct
                    // offsets never share an index.
                    let block = unsafe { std::slice::from_raw_parts_mut(ptr.get(), len) };
                    seq::two_site_at(block, off, stride, u);
                });
            }
        }
    }

    pub fn apply_diagonal(amps: &mut [C64], energies: &[i8], table: &[C64], offset: i32) {
        amps.par_chunks_mut(INNER_CHUNK)
            .zip(energies.par_chunks(INNER_CHUNK))
            .for_each(|(a, e)| seq::apply_diagonal(a, e, table, offset));
    }

    #[derive(Clone, Copy)]
    struct SharedMut(*mut C64);
    unsafe impl Send for SharedMut {}
    unsafe impl Sync for SharedMut {}
    impl SharedMut {
        fn get(self) -> *mut C64 {
            self.0
        }
    }
}
