//! Periodic computational box and its discrete Fourier frequencies.
//!
//! The box `[-L/2, L/2)^3` is sampled on `n` points per axis with spacing
//! `h = L/n`. Angular frequencies per axis are `k = (2*pi/L) * m` with
//! `m in {0, 1, ..., n/2-1, -n/2, ..., -1}` in FFT storage order, so every
//! nonlocal operator of the model becomes a diagonal Fourier multiplier.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Cubic periodic grid. Immutable after construction; cheap to share.
#[derive(Debug)]
pub struct Grid3 {
    n: usize,
    box_length: f64,
    spacing: f64,
    /// Angular frequencies in FFT storage order (identical on all axes).
    freqs: Vec<f64>,
    /// Box-centered physical coordinates, `x_j = -L/2 + j*h`.
    coords: Vec<f64>,
}

impl PartialEq for Grid3 {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.box_length == other.box_length
    }
}

/// Builds a grid, rejecting odd or tiny `n` and non-positive `L`.
pub fn make_grid(n: usize, box_length: f64) -> Result<Arc<Grid3>> {
    if n < 8 {
        return Err(Error::Grid(format!("n = {n} too small, need n >= 8")));
    }
    if n % 2 != 0 {
        return Err(Error::Grid(format!("n = {n} must be even")));
    }
    if !(box_length > 0.0) || !box_length.is_finite() {
        return Err(Error::Grid(format!("box length {box_length} must be positive")));
    }
    let spacing = box_length / n as f64;
    let dk = 2.0 * PI / box_length;
    let half = n / 2;
    let freqs = (0..n)
        .map(|i| {
            let m = if i < half { i as i64 } else { i as i64 - n as i64 };
            dk * m as f64
        })
        .collect();
    let coords = (0..n).map(|j| -0.5 * box_length + j as f64 * spacing).collect();
    Ok(Arc::new(Grid3 {
        n,
        box_length,
        spacing,
        freqs,
        coords,
    }))
}

impl Grid3 {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of grid points, `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^3` of the uniform Riemann sum.
    pub fn cell_volume(&self) -> f64 {
        self.spacing * self.spacing * self.spacing
    }

    /// Frequency axis in FFT storage order.
    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// Box-centered coordinate axis.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Smallest positive frequency, `2*pi/L`.
    pub fn k_min(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    /// Nyquist frequency per axis, `pi/h`.
    pub fn k_nyquist(&self) -> f64 {
        PI / self.spacing
    }

    /// Flat row-major index, axis order (x, y, z) with z fastest.
    #[inline]
    pub fn idx(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n + iy) * self.n + iz
    }

    /// Fills an `n^3` array from a function of the frequency triple.
    pub fn fill_spectral(&self, f: impl Fn(f64, f64, f64) -> Complex64 + Sync) -> Vec<Complex64> {
        let n = self.n;
        let mut out = vec![Complex64::default(); self.len()];
        for ix in 0..n {
            let kx = self.freqs[ix];
            for iy in 0..n {
                let ky = self.freqs[iy];
                let base = (ix * n + iy) * n;
                for iz in 0..n {
                    out[base + iz] = f(kx, ky, self.freqs[iz]);
                }
            }
        }
        out
    }

    /// Fills an `n^3` array from a function of the centered coordinates.
    pub fn fill_physical(&self, f: impl Fn(f64, f64, f64) -> Complex64 + Sync) -> Vec<Complex64> {
        let n = self.n;
        let mut out = vec![Complex64::default(); self.len()];
        for ix in 0..n {
            let x = self.coords[ix];
            for iy in 0..n {
                let y = self.coords[iy];
                let base = (ix * n + iy) * n;
                for iz in 0..n {
                    out[base + iz] = f(x, y, self.coords[iz]);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_frequencies_unit_box() {
        // L = 2*pi makes the frequency step exactly 1.
        let g = make_grid(8, 2.0 * PI).unwrap();
        let expect = [0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0];
        for (a, b) in g.freqs().iter().zip(expect) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
        let mut sorted: Vec<i64> = g.freqs().iter().map(|k| k.round() as i64).collect();
        sorted.sort_unstable();
        assert_eq!(sorted, (-4..4).collect::<Vec<_>>());
    }

    #[test]
    fn grid_spacing_exact() {
        let g = make_grid(16, 32.0).unwrap();
        assert_eq!(g.spacing(), 2.0);
        assert_eq!(g.spacing() * g.n() as f64, g.box_length());
        assert!((g.k_min() - PI / 16.0).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(make_grid(7, 1.0).is_err());
        assert!(make_grid(4, 1.0).is_err());
        assert!(make_grid(8, 0.0).is_err());
        assert!(make_grid(8, -3.0).is_err());
    }
}
