//! In-place 3-D discrete Fourier transforms on the flat `n^3` layout.
//!
//! Normalization convention, used by every module: the forward transform has
//! no prefactor, the inverse carries `1/n^3`. With that convention the
//! quadrature pairing `h^3 * sum` and Plancherel line up as
//! `h^3 * sum |f|^2 = h^3/n^3 * sum |F[f]|^2`.
//!
//! The 1-D transforms are delegated to `rustfft`; lines along the strided
//! axes go through a per-plane transpose so every 1-D pass runs on
//! contiguous memory.

use std::collections::HashMap;
use std::sync::{Arc, LazyLock, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

pub struct FftEngine {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

static ENGINES: LazyLock<Mutex<HashMap<usize, Arc<FftEngine>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

/// Returns the cached transform engine for grids with `n` points per axis.
pub fn engine(n: usize) -> Arc<FftEngine> {
    let mut map = ENGINES.lock().unwrap();
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            let fwd = planner.plan_fft_forward(n);
            let inv = planner.plan_fft_inverse(n);
            Arc::new(FftEngine { n, fwd, inv })
        })
        .clone()
}

fn transpose_square(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in 0..n {
            dst[j * n + i] = src[i * n + j];
        }
    }
}

impl FftEngine {
    /// 1-D pass along the z axis (contiguous lines).
    fn pass_z(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let scratch_len = fft.get_inplace_scratch_len();
        data.par_chunks_mut(self.n).for_each_init(
            || vec![Complex64::default(); scratch_len],
            |scratch, line| fft.process_with_scratch(line, scratch),
        );
    }

    /// 1-D pass along the y axis: transpose each (y,z) plane, run contiguous
    /// lines, transpose back.
    fn pass_y(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let scratch_len = fft.get_inplace_scratch_len();
        data.par_chunks_mut(n * n).for_each_init(
            || {
                (
                    vec![Complex64::default(); n * n],
                    vec![Complex64::default(); scratch_len],
                )
            },
            |(buf, scratch), plane| {
                transpose_square(plane, buf, n);
                for line in buf.chunks_mut(n) {
                    fft.process_with_scratch(line, scratch);
                }
                transpose_square(buf, plane, n);
            },
        );
    }

    /// 1-D pass along the x axis: stage each (x,z) slab for fixed y into a
    /// contiguous buffer, transpose, transform, undo.
    fn pass_x(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let nn = n * n;
        let scratch_len = fft.get_inplace_scratch_len();
        let ptr = SendPtr(data.as_mut_ptr());
        (0..n).into_par_iter().for_each_init(
            || {
                (
                    vec![Complex64::default(); nn],
                    vec![Complex64::default(); nn],
                    vec![Complex64::default(); scratch_len],
                )
            },
            |(slab, slab_t, scratch), iy| {
                let data = ptr;
                // slab[ix*n + iz] = data[ix*nn + iy*n + iz]; rows are contiguous.
                for ix in 0..n {
                    let off = ix * nn + iy * n;
                    // Safety: distinct iy values touch disjoint index sets.
                    let src = unsafe { std::slice::from_raw_parts(data.0.add(off), n) };
                    slab[ix * n..(ix + 1) * n].copy_from_slice(src);
                }
                transpose_square(slab, slab_t, n);
                for line in slab_t.chunks_mut(n) {
                    fft.process_with_scratch(line, scratch);
                }
                transpose_square(slab_t, slab, n);
                for ix in 0..n {
                    let off = ix * nn + iy * n;
                    let dst = unsafe { std::slice::from_raw_parts_mut(data.0.add(off), n) };
                    dst.copy_from_slice(&slab[ix * n..(ix + 1) * n]);
                }
            },
        );
    }

    fn pass_all(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.n * self.n * self.n, "buffer/grid mismatch");
        self.pass_z(data, fft);
        self.pass_y(data, fft);
        self.pass_x(data, fft);
    }

    /// Forward 3-D transform, no prefactor.
    pub fn forward(&self, data: &mut [Complex64]) {
        let fwd = self.fwd.clone();
        self.pass_all(data, &fwd);
    }

    /// Inverse 3-D transform with the `1/n^3` prefactor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        let inv = self.inv.clone();
        self.pass_all(data, &inv);
        let scale = 1.0 / (self.n * self.n * self.n) as f64;
        data.par_iter_mut().for_each(|z| *z *= scale);
    }
}

#[derive(Clone, Copy)]
struct SendPtr(*mut Complex64);
unsafe impl Send for SendPtr {}
unsafe impl Sync for SendPtr {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    /// Direct O(n^6) DFT used as the independent oracle on tiny grids.
    fn dft_direct(grid: &crate::grid::Grid3, f: &[Complex64]) -> Vec<Complex64> {
        let n = grid.n();
        let mut out = vec![Complex64::default(); f.len()];
        for kx in 0..n {
            for ky in 0..n {
                for kz in 0..n {
                    let mut acc = Complex64::default();
                    for jx in 0..n {
                        for jy in 0..n {
                            for jz in 0..n {
                                let phase = -2.0 * std::f64::consts::PI / n as f64
                                    * (kx * jx + ky * jy + kz * jz) as f64;
                                acc += f[grid.idx(jx, jy, jz)]
                                    * Complex64::new(phase.cos(), phase.sin());
                            }
                        }
                    }
                    out[grid.idx(kx, ky, kz)] = acc;
                }
            }
        }
        out
    }

    fn pseudo_random_field(len: usize) -> Vec<Complex64> {
        // Small deterministic LCG; good enough to exercise all bins.
        let mut s: u64 = 0x9e3779b97f4a7c15;
        (0..len)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let b = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                Complex64::new(a, b)
            })
            .collect()
    }

    #[test]
    fn forward_matches_direct_dft() {
        let g = make_grid(8, 2.0).unwrap();
        let f = pseudo_random_field(g.len());
        let oracle = dft_direct(&g, &f);
        let mut fast = f.clone();
        engine(8).forward(&mut fast);
        let scale: f64 = oracle.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let diff: f64 = oracle
            .iter()
            .zip(&fast)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff / scale < 1e-12, "rel diff {}", diff / scale);
    }

    #[test]
    fn round_trip_is_identity() {
        let g = make_grid(8, 5.0).unwrap();
        let f = pseudo_random_field(g.len());
        let mut data = f.clone();
        let eng = engine(8);
        eng.forward(&mut data);
        eng.inverse(&mut data);
        let scale: f64 = f.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let diff: f64 = f
            .iter()
            .zip(&data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff / scale < 1e-12);
    }

    #[test]
    fn constant_field_transforms_to_zero_mode() {
        let g = make_grid(8, 1.0).unwrap();
        let mut data = vec![Complex64::new(1.0, 0.0); g.len()];
        engine(8).forward(&mut data);
        assert!((data[0] - Complex64::new(512.0, 0.0)).norm() < 1e-10);
        let rest: f64 = data[1..].iter().map(|z| z.norm()).sum();
        assert!(rest < 1e-9);
    }
}
