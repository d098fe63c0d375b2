//! Finite-rank mixed state: an ordered stack of wavefunctions with positive
//! weights, the coupled density they generate, and the weighted norms the
//! conservation laws are written in.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid3;
use crate::multiplier::{bessel_symbol, frac_laplacian_symbol};

pub struct MixedState {
    components: Vec<Field>,
    weights: Vec<f64>,
}

impl MixedState {
    pub fn new(components: Vec<Field>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::State("rank must be at least 1".into()));
        }
        if components.len() != weights.len() {
            return Err(Error::State(format!(
                "rank {} does not match {} weights",
                components.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::State(format!("weights must be positive, got {w}")));
        }
        let grid = components[0].grid().clone();
        if components.iter().any(|c| *c.grid() != grid) {
            return Err(Error::State("components live on different grids".into()));
        }
        Ok(MixedState { components, weights })
    }

    pub fn rank(&self) -> usize {
        self.components.len()
    }

    pub fn grid(&self) -> &Arc<Grid3> {
        self.components[0].grid()
    }

    pub fn components(&self) -> &[Field] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [Field] {
        &mut self.components
    }

    pub fn component(&self, k: usize) -> &Field {
        &self.components[k]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Trace of the weight sequence, `sum lambda_k`.
    pub fn trace_weights(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Pointwise density `n(x) = sum_k lambda_k |psi_k(x)|^2`, accumulated in
    /// ascending component order for bit-reproducibility.
    pub fn density(&self) -> Field {
        let grid = self.grid().clone();
        let len = grid.len();
        let mut n = vec![0.0f64; len];
        for (psi, &w) in self.components.iter().zip(&self.weights) {
            let vals = psi.values();
            n.par_iter_mut().zip(vals.par_iter()).for_each(|(acc, z)| {
                *acc += w * z.norm_sqr();
            });
        }
        Field::from_values(grid, n.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    /// Weighted inner product `sum_k lambda_k <phi_k, psi_k>`.
    ///
    /// Panics on rank or weight mismatch: states are only comparable inside a
    /// common weight sequence.
    pub fn weighted_inner(&self, other: &MixedState) -> Complex64 {
        assert_eq!(self.rank(), other.rank(), "rank mismatch");
        assert!(
            self.weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| a == b),
            "weight sequences differ"
        );
        self.components
            .iter()
            .zip(&other.components)
            .zip(&self.weights)
            .map(|((a, b), &w)| w * a.inner(b))
            .fold(Complex64::default(), |acc, v| acc + v)
    }

    /// `||Psi||^2` in the weighted L2 space.
    pub fn l2_norm_sq(&self) -> f64 {
        self.components
            .iter()
            .zip(&self.weights)
            .map(|(c, &w)| w * c.l2_norm_sq())
            .sum()
    }

    /// Per-component L2 norms squared (the conserved charges at eps = 0).
    pub fn component_masses(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.l2_norm_sq()).collect()
    }

    /// Weighted Sobolev norm of order `s`; homogeneous uses `|k|^(2s)`,
    /// inhomogeneous `(1+|k|^2)^s`.
    pub fn sobolev_norm(&self, s: f64, homogeneous: bool) -> f64 {
        assert!(s >= 0.0);
        let grid = self.grid().clone();
        let mult = if homogeneous {
            frac_laplacian_symbol(grid, s)
        } else {
            bessel_symbol(grid, s)
        };
        let sum: f64 = self
            .components
            .iter()
            .zip(&self.weights)
            .map(|(c, &w)| w * mult.quadratic_form(c))
            .sum();
        sum.max(0.0).sqrt()
    }

    /// Gram matrix `G_jk = <psi_j, psi_k>`, row-major K x K.
    pub fn gram_matrix(&self) -> Vec<Complex64> {
        let k = self.rank();
        let mut g = vec![Complex64::default(); k * k];
        for j in 0..k {
            for l in j..k {
                let v = self.components[j].inner(&self.components[l]);
                g[j * k + l] = v;
                g[l * k + j] = v.conj();
            }
        }
        g
    }

    /// Max-norm distance between two Gram matrices.
    pub fn gram_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    /// Modified Gram-Schmidt, run twice for orthogonality near roundoff.
    /// Errors if a component is (numerically) linearly dependent.
    pub fn orthonormalize(&mut self) -> Result<()> {
        for _pass in 0..2 {
            for j in 0..self.components.len() {
                for i in 0..j {
                    let proj = self.components[i].inner(&self.components[j]);
                    let (head, tail) = self.components.split_at_mut(j);
                    tail[0].axpy(-proj, &head[i]);
                }
                let norm = self.components[j].l2_norm();
                if norm < 1e-12 {
                    return Err(Error::State(format!(
                        "component {j} is linearly dependent, cannot orthonormalize"
                    )));
                }
                self.components[j].scale(Complex64::new(1.0 / norm, 0.0));
            }
        }
        Ok(())
    }

    /// Uniform amplitude scaling of every component.
    pub fn scale_amplitude(&mut self, c: f64) {
        for comp in &mut self.components {
            comp.scale(Complex64::new(c, 0.0));
        }
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.is_finite())
    }
}

impl Clone for MixedState {
    fn clone(&self) -> Self {
        MixedState {
            components: self.components.clone(),
            weights: self.weights.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    fn plane_wave(grid: &Arc<Grid3>, mode: [i32; 3]) -> Field {
        let l = grid.box_length();
        let dk = 2.0 * PI / l;
        let amp = l.powf(-1.5);
        Field::from_fn(grid.clone(), move |x, y, z| {
            Complex64::from_polar(
                amp,
                dk * (mode[0] as f64 * x + mode[1] as f64 * y + mode[2] as f64 * z),
            )
        })
    }

    #[test]
    fn density_of_unit_plane_wave_is_uniform() {
        let g = make_grid(8, 2.0 * PI).unwrap();
        let st = MixedState::new(vec![plane_wave(&g, [1, 0, 0])], vec![1.0]).unwrap();
        let n = st.density();
        let expect = 1.0 / g.box_length().powi(3);
        for v in n.values() {
            assert!((v.re - expect).abs() < 1e-15);
            assert_eq!(v.im, 0.0);
        }
    }

    #[test]
    fn density_integral_matches_weighted_mass() {
        let g = make_grid(8, 4.0).unwrap();
        let a = Field::from_fn(g.clone(), |x, y, z| Complex64::new(x + y, z * x));
        let b = Field::from_fn(g.clone(), |x, y, z| Complex64::new((y * z).sin(), x));
        let c = Field::from_fn(g.clone(), |x, y, z| Complex64::new(z, (x * y).cos()));
        let st = MixedState::new(vec![a, b, c], vec![0.5, 0.3, 0.2]).unwrap();
        // Oracle: direct pointwise loop.
        let mut oracle = vec![0.0f64; g.len()];
        for (k, comp) in st.components().iter().enumerate() {
            for (o, v) in oracle.iter_mut().zip(comp.values()) {
                *o += st.weights()[k] * (v.re * v.re + v.im * v.im);
            }
        }
        let n = st.density();
        for (a, b) in n.values().iter().zip(&oracle) {
            assert!((a.re - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        let mass: f64 = st
            .weights()
            .iter()
            .zip(st.component_masses())
            .map(|(w, m)| w * m)
            .sum();
        assert!((n.integral().re - mass).abs() / mass < 1e-12);
        assert!(n.values().iter().all(|v| v.re >= 0.0));
    }

    #[test]
    fn weighted_inner_orthonormal_rank_two() {
        let g = make_grid(8, 2.0 * PI).unwrap();
        let st = MixedState::new(
            vec![plane_wave(&g, [1, 0, 0]), plane_wave(&g, [0, 2, 0])],
            vec![1.0, 1.0],
        )
        .unwrap();
        let self_inner = st.weighted_inner(&st);
        assert!((self_inner.re - 2.0).abs() < 1e-12);
        assert!(self_inner.im.abs() < 1e-13);
        assert!((st.l2_norm_sq() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gram_matrix_detects_duplicates() {
        let g = make_grid(8, 2.0 * PI).unwrap();
        let pw = plane_wave(&g, [1, 1, 0]);
        let st = MixedState::new(vec![pw.clone(), pw], vec![0.5, 0.5]).unwrap();
        let gm = st.gram_matrix();
        assert!((gm[1].norm() - 1.0).abs() < 1e-12);
        assert!((gm[0].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthonormalize_produces_identity_gram() {
        let g = make_grid(8, 6.0).unwrap();
        let mk = |s: f64| {
            Field::from_fn(g.clone(), move |x, y, z| {
                Complex64::new((-(x * x + y * y + z * z) / (2.0 * s * s)).exp(), 0.0)
            })
        };
        let mut st = MixedState::new(vec![mk(0.8), mk(1.1), mk(1.5)], vec![0.5, 0.3, 0.2]).unwrap();
        st.orthonormalize().unwrap();
        let gm = st.gram_matrix();
        for j in 0..3 {
            for l in 0..3 {
                let expect = if j == l { 1.0 } else { 0.0 };
                assert!(
                    (gm[j * 3 + l] - Complex64::new(expect, 0.0)).norm() < 1e-10,
                    "gram {j},{l} = {:?}",
                    gm[j * 3 + l]
                );
            }
        }
    }

    #[test]
    fn sobolev_norm_basics() {
        let g = make_grid(8, 2.0 * PI).unwrap();
        let st = MixedState::new(vec![plane_wave(&g, [2, 1, 0])], vec![1.0]).unwrap();
        // s = 0 equals the weighted L2 norm.
        let l2 = st.l2_norm_sq().sqrt();
        assert!((st.sobolev_norm(0.0, false) - l2).abs() < 1e-12);
        // Homogeneous H^{1/2} of a plane wave is |k0|^{1/2}.
        let k0 = 5.0f64.sqrt();
        assert!((st.sobolev_norm(0.5, true) - k0.sqrt()).abs() < 1e-10);
        // Monotone in s on the inhomogeneous scale.
        let mut prev = 0.0;
        for i in 0..6 {
            let s = 0.25 * i as f64;
            let v = st.sobolev_norm(s, false);
            assert!(v >= prev - 1e-13);
            prev = v;
        }
    }

    #[test]
    fn rejects_invalid_states() {
        let g = make_grid(8, 1.0).unwrap();
        let f = Field::zeros(g.clone());
        assert!(MixedState::new(vec![], vec![]).is_err());
        assert!(MixedState::new(vec![f.clone()], vec![0.0]).is_err());
        assert!(MixedState::new(vec![f], vec![0.5, 0.5]).is_err());
    }
}
