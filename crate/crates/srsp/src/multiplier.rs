//! Fourier multipliers: the functional calculus for every nonlocal operator
//! of the model (relativistic kinetic term, fractional Laplacian, dissipative
//! semigroup, Coulomb kernel).

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::field::{par_sum_f64, Field};
use crate::grid::Grid3;

#[derive(Clone)]
pub struct Multiplier {
    grid: Arc<Grid3>,
    symbol: Vec<Complex64>,
}

impl Multiplier {
    pub fn from_symbol(grid: Arc<Grid3>, f: impl Fn(f64, f64, f64) -> Complex64 + Sync) -> Self {
        let symbol = grid.fill_spectral(f);
        Multiplier { grid, symbol }
    }

    /// Symbol from a function of |k|^2 (all our operators are radial).
    pub fn from_radial_symbol(grid: Arc<Grid3>, f: impl Fn(f64) -> f64 + Sync) -> Self {
        Multiplier::from_symbol(grid, |kx, ky, kz| {
            Complex64::new(f(kx * kx + ky * ky + kz * kz), 0.0)
        })
    }

    pub fn grid(&self) -> &Arc<Grid3> {
        &self.grid
    }

    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    pub fn is_finite(&self) -> bool {
        self.symbol.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Pointwise product of symbols (operator composition).
    pub fn compose(&self, other: &Multiplier) -> Multiplier {
        assert!(self.grid == *other.grid(), "multipliers on different grids");
        let symbol = self
            .symbol
            .iter()
            .zip(&other.symbol)
            .map(|(a, b)| a * b)
            .collect();
        Multiplier { grid: self.grid.clone(), symbol }
    }

    /// Multiply a spectrum in place (caller already holds coefficients).
    pub fn apply_spectrum(&self, spectrum: &mut [Complex64]) {
        assert_eq!(spectrum.len(), self.symbol.len());
        spectrum
            .par_iter_mut()
            .zip(self.symbol.par_iter())
            .for_each(|(z, &s)| *z *= s);
    }

    /// `F^-1[symbol * F[f]]`, in place.
    pub fn apply_inplace(&self, f: &mut Field) {
        assert!(*self.grid == **f.grid(), "field/multiplier grid mismatch");
        f.forward_inplace();
        self.apply_spectrum(f.values_mut());
        f.inverse_inplace();
    }

    pub fn apply(&self, f: &Field) -> Field {
        let mut out = f.clone();
        self.apply_inplace(&mut out);
        out
    }

    /// `<f, Op f>` for a real symbol, evaluated spectrally from one forward
    /// transform: `h^3/n^3 * sum symbol(k) |F[f](k)|^2`.
    pub fn quadratic_form(&self, f: &Field) -> f64 {
        let spec = f.forward_transform();
        self.quadratic_form_spectrum(spec.values())
    }

    /// Same as `quadratic_form` but from precomputed Fourier coefficients.
    pub fn quadratic_form_spectrum(&self, spectrum: &[Complex64]) -> f64 {
        assert_eq!(spectrum.len(), self.symbol.len());
        let w = self.grid.cell_volume() / self.grid.len() as f64;
        w * spectrum
            .par_chunks(8192)
            .zip(self.symbol.par_chunks(8192))
            .map(|(cs, css)| {
                cs.iter()
                    .zip(css)
                    .map(|(z, s)| s.re * z.norm_sqr())
                    .sum::<f64>()
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum::<f64>()
    }

    /// Largest symbol modulus (contraction check).
    pub fn max_modulus(&self) -> f64 {
        self.symbol.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Symbol of the semi-relativistic kinetic operator `sqrt(-Lap + m^2)`:
/// `sqrt(|k|^2 + m^2)`, equal to `m` at the zero mode.
pub fn kinetic_symbol(grid: Arc<Grid3>, m: f64) -> Multiplier {
    assert!(m >= 0.0, "mass must be nonnegative");
    Multiplier::from_radial_symbol(grid, move |k2| (k2 + m * m).sqrt())
}

/// Symbol of `(-Lap)^s`: `|k|^(2s)`. The s = 0 convention is the identity
/// (0^0 := 1), so the family ends at the identity operator.
pub fn frac_laplacian_symbol(grid: Arc<Grid3>, s: f64) -> Multiplier {
    assert!(s >= 0.0, "order must be nonnegative");
    Multiplier::from_radial_symbol(grid, move |k2| k2.powf(s))
}

/// Symbol `(1 + |k|^2)^s` of the inhomogeneous Bessel weight.
pub fn bessel_symbol(grid: Arc<Grid3>, s: f64) -> Multiplier {
    Multiplier::from_radial_symbol(grid, move |k2| (1.0 + k2).powf(s))
}

/// Symbol of the fractional heat semigroup `exp(-t (-Lap)^alpha)`.
pub fn heat_symbol(grid: Arc<Grid3>, t: f64, alpha: f64) -> Multiplier {
    assert!(t >= 0.0, "time must be nonnegative");
    Multiplier::from_radial_symbol(grid, move |k2| (-t * k2.powf(alpha)).exp())
}

/// Spectral weight sums used by the diagnostics: given |F[f]|^2 this returns
/// `h^3/n^3 * sum w(|k|) |F[f]|^2` for an arbitrary radial weight.
pub fn spectral_weight_sum(
    grid: &Grid3,
    spectrum: &[Complex64],
    weight: impl Fn(f64) -> f64 + Sync,
) -> f64 {
    let n = grid.n();
    let freqs = grid.freqs();
    let scale = grid.cell_volume() / grid.len() as f64;
    let sum: f64 = (0..n)
        .into_par_iter()
        .map(|ix| {
            let kx2 = freqs[ix] * freqs[ix];
            let mut acc = 0.0;
            for iy in 0..n {
                let kxy2 = kx2 + freqs[iy] * freqs[iy];
                let base = (ix * n + iy) * n;
                for iz in 0..n {
                    let k2 = kxy2 + freqs[iz] * freqs[iz];
                    acc += weight(k2.sqrt()) * spectrum[base + iz].norm_sqr();
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    scale * sum
}

/// L2 norm squared of a spectrum under the quadrature convention,
/// `h^3/n^3 * sum |F[f]|^2` (Plancherel pairing).
pub fn spectrum_l2_norm_sq(grid: &Grid3, spectrum: &[Complex64]) -> f64 {
    grid.cell_volume() / grid.len() as f64 * par_sum_f64(spectrum, |z| z.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    #[test]
    fn kinetic_symbol_values() {
        let g = make_grid(8, 2.0 * PI).unwrap();
        let m2 = kinetic_symbol(g.clone(), 2.0);
        assert_eq!(m2.symbol()[0], Complex64::new(2.0, 0.0));
        let m0 = kinetic_symbol(g.clone(), 0.0);
        // |k| = 3 at index (3,0,0) since dk = 1.
        assert!((m0.symbol()[g.idx(3, 0, 0)].re - 3.0).abs() < 1e-14);
        let m1 = kinetic_symbol(g.clone(), 1.0);
        assert!((m1.symbol()[g.idx(1, 2, 2)].re - 10.0f64.sqrt()).abs() < 1e-14);
        // Pointwise operator monotonicity sqrt(|k|^2+m^2) >= |k|.
        let half = frac_laplacian_symbol(g, 0.5);
        for (a, b) in m1.symbol().iter().zip(half.symbol()) {
            assert!(a.re >= b.re);
        }
    }

    #[test]
    fn frac_laplacian_symbol_values() {
        let g = make_grid(8, 2.0 * PI).unwrap();
        let s_half = frac_laplacian_symbol(g.clone(), 0.5);
        assert!((s_half.symbol()[g.idx(4, 0, 0)].re - 4.0).abs() < 1e-14);
        assert_eq!(s_half.symbol()[0].re, 0.0);
        let s_one = frac_laplacian_symbol(g.clone(), 1.0);
        assert!((s_one.symbol()[g.idx(1, 1, 1)].re - 3.0).abs() < 1e-14);
        // s = 0 is the identity, including the zero mode.
        let s_zero = frac_laplacian_symbol(g, 0.0);
        assert!(s_zero.symbol().iter().all(|z| (z.re - 1.0).abs() < 1e-15));
    }

    #[test]
    fn kinetic_on_plane_wave_is_eigenvalue() {
        let g = make_grid(8, 2.0 * PI).unwrap();
        let f = Field::from_fn(g.clone(), |x, y, _| Complex64::new(0.0, 2.0 * y + 0.0 * x).exp());
        let op = kinetic_symbol(g, 1.0);
        let out = op.apply(&f);
        let expect = 5.0f64.sqrt();
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a - expect * b).norm() < 1e-11);
        }
    }

    #[test]
    fn all_ones_symbol_is_identity() {
        let g = make_grid(8, 3.0).unwrap();
        let f = Field::from_fn(g.clone(), |x, y, z| Complex64::new(x * y - z, z * 0.5));
        let id = Multiplier::from_radial_symbol(g, |_| 1.0);
        let out = id.apply(&f);
        let scale = f.l2_norm();
        let mut diff = out;
        diff.axpy(Complex64::new(-1.0, 0.0), &f);
        assert!(diff.l2_norm() / scale < 1e-12);
    }

    #[test]
    fn real_symbol_is_self_adjoint_and_composes() {
        let g = make_grid(8, 2.0).unwrap();
        let f = Field::from_fn(g.clone(), |x, y, z| Complex64::new((3.0 * x).sin(), y * z));
        let h = Field::from_fn(g.clone(), |x, y, z| Complex64::new(y, (x + z).cos()));
        let op = kinetic_symbol(g.clone(), 0.7);
        let lhs = op.apply(&f).inner(&h);
        let rhs = f.inner(&op.apply(&h));
        assert!((lhs - rhs).norm() / lhs.norm() < 1e-12);

        let a = frac_laplacian_symbol(g.clone(), 0.5);
        let b = kinetic_symbol(g, 1.3);
        let seq = b.apply(&a.apply(&f));
        let fused = a.compose(&b).apply(&f);
        let mut diff = seq.clone();
        diff.axpy(Complex64::new(-1.0, 0.0), &fused);
        assert!(diff.l2_norm() / seq.l2_norm() < 1e-12);
    }

    #[test]
    fn quadratic_form_matches_apply_inner() {
        let g = make_grid(8, 2.5).unwrap();
        let f = Field::from_fn(g.clone(), |x, y, z| Complex64::new(x - y * z, (2.0 * z).sin()));
        let op = kinetic_symbol(g, 1.0);
        let via_apply = f.inner(&op.apply(&f)).re;
        let via_spec = op.quadratic_form(&f);
        assert!((via_apply - via_spec).abs() / via_apply.abs() < 1e-12);
    }
}
