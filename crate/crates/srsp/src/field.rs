//! One complex wavefunction sampled on a grid, plus the quadrature rules
//! (uniform Riemann sum, weight `h^3`) shared by every functional.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::fft;
use crate::grid::Grid3;

/// Fixed chunk size for parallel reductions. Partial sums are produced per
/// chunk and combined in index order, so results are bit-identical for any
/// thread count.
const REDUCE_CHUNK: usize = 8192;

pub(crate) fn par_sum_f64(it: &[Complex64], f: impl Fn(Complex64) -> f64 + Sync) -> f64 {
    it.par_chunks(REDUCE_CHUNK)
        .map(|c| c.iter().map(|&z| f(z)).sum::<f64>())
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

pub(crate) fn par_sum_zip_c64(
    a: &[Complex64],
    b: &[Complex64],
    f: impl Fn(Complex64, Complex64) -> Complex64 + Sync,
) -> Complex64 {
    a.par_chunks(REDUCE_CHUNK)
        .zip(b.par_chunks(REDUCE_CHUNK))
        .map(|(ca, cb)| {
            ca.iter()
                .zip(cb)
                .map(|(&x, &y)| f(x, y))
                .fold(Complex64::default(), |acc, v| acc + v)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Complex64::default(), |acc, v| acc + v)
}

#[derive(Clone)]
pub struct Field {
    grid: Arc<Grid3>,
    values: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: Arc<Grid3>) -> Self {
        let values = vec![Complex64::default(); grid.len()];
        Field { grid, values }
    }

    pub fn from_values(grid: Arc<Grid3>, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), grid.len(), "value buffer does not match grid");
        Field { grid, values }
    }

    /// Samples a function of the centered coordinates.
    pub fn from_fn(grid: Arc<Grid3>, f: impl Fn(f64, f64, f64) -> Complex64 + Sync) -> Self {
        let values = grid.fill_physical(f);
        Field { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid3> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub(crate) fn assert_same_grid(&self, other: &Field) {
        assert!(self.grid == *other.grid(), "fields live on different grids");
    }

    /// `h^3 * sum |f|^2`, the discrete L2 norm squared.
    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.cell_volume() * par_sum_f64(&self.values, |z| z.norm_sqr())
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Discrete inner product, conjugate-linear in `self`.
    pub fn inner(&self, other: &Field) -> Complex64 {
        self.assert_same_grid(other);
        self.grid.cell_volume() * par_sum_zip_c64(&self.values, &other.values, |a, b| a.conj() * b)
    }

    /// `h^3 * sum f` (no conjugation).
    pub fn integral(&self) -> Complex64 {
        let s = self
            .values
            .par_chunks(REDUCE_CHUNK)
            .map(|c| c.iter().fold(Complex64::default(), |acc, &v| acc + v))
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Complex64::default(), |acc, v| acc + v);
        self.grid.cell_volume() * s
    }

    /// Discrete Lp norm of |f| for finite p; `h^(3/p) * (sum |f|^p)^(1/p)`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        assert!(p >= 1.0 && p.is_finite());
        let s = self
            .values
            .par_chunks(REDUCE_CHUNK)
            .map(|c| c.iter().map(|z| z.norm().powf(p)).sum::<f64>())
            .collect::<Vec<_>>()
            .into_iter()
            .sum::<f64>();
        (self.grid.cell_volume() * s).powf(1.0 / p)
    }

    /// Grid maximum of |f|.
    pub fn linf_norm(&self) -> f64 {
        self.values
            .par_chunks(REDUCE_CHUNK)
            .map(|c| c.iter().map(|z| z.norm()).fold(0.0f64, f64::max))
            .collect::<Vec<_>>()
            .into_iter()
            .fold(0.0f64, f64::max)
    }

    pub fn scale(&mut self, c: Complex64) {
        self.values.par_iter_mut().for_each(|z| *z *= c);
    }

    pub fn scaled(&self, c: Complex64) -> Field {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: Complex64, other: &Field) {
        self.assert_same_grid(other);
        self.values
            .par_iter_mut()
            .zip(other.values.par_iter())
            .for_each(|(a, &b)| *a += c * b);
    }

    /// Pointwise multiply by a real-valued weight array.
    pub fn mul_weight(&mut self, w: &[f64]) {
        assert_eq!(w.len(), self.values.len());
        self.values
            .par_iter_mut()
            .zip(w.par_iter())
            .for_each(|(z, &wi)| *z *= wi);
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .par_chunks(REDUCE_CHUNK)
            .all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    /// Forward transform into a new field of Fourier coefficients.
    pub fn forward_transform(&self) -> Field {
        let mut out = self.clone();
        fft::engine(self.grid.n()).forward(&mut out.values);
        out
    }

    /// Inverse transform (carries the `1/n^3` prefactor).
    pub fn inverse_transform(&self) -> Field {
        let mut out = self.clone();
        fft::engine(self.grid.n()).inverse(&mut out.values);
        out
    }

    pub fn forward_inplace(&mut self) {
        fft::engine(self.grid.n()).forward(&mut self.values);
    }

    pub fn inverse_inplace(&mut self) {
        fft::engine(self.grid.n()).inverse(&mut self.values);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    #[test]
    fn plane_wave_has_single_coefficient() {
        let g = make_grid(8, 2.0 * PI).unwrap();
        // k0 = (1, 0, 2) is on-grid for L = 2*pi.
        let f = Field::from_fn(g.clone(), |x, y, z| {
            Complex64::new(0.0, x + 2.0 * z - 0.0 * y).exp()
        });
        let spec = f.forward_transform();
        let hot = g.idx(1, 0, 2);
        let n3 = g.len() as f64;
        assert!((spec.values()[hot].norm() - n3).abs() / n3 < 1e-12);
        let rest: f64 = spec
            .values()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != hot)
            .map(|(_, z)| z.norm_sqr())
            .sum();
        assert!(rest.sqrt() / n3 < 1e-11);
    }

    #[test]
    fn plancherel_holds() {
        let g = make_grid(8, 3.0).unwrap();
        let f = Field::from_fn(g.clone(), |x, y, z| {
            Complex64::new((x * y).sin() + 0.3, (z - x).cos())
        });
        let phys = f.l2_norm_sq();
        let spec = f.forward_transform();
        let freq = spec.l2_norm_sq() / g.len() as f64;
        assert!((phys - freq).abs() / phys < 1e-12);
    }

    #[test]
    fn quadrature_of_unit_plane_wave_is_one() {
        let g = make_grid(8, 4.0).unwrap();
        let l = g.box_length();
        let norm = l.powf(-1.5);
        let k = 2.0 * PI / l;
        let f = Field::from_fn(g, |x, _, _| Complex64::from_polar(norm, k * x));
        assert!((f.l2_norm_sq() - 1.0).abs() < 1e-13);
    }
}
