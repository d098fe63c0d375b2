//! Attractive Coulomb potential `V = -(1/|x|) * n` (convolution), solved
//! spectrally with either the periodic kernel or a spherically truncated
//! free-space kernel, plus the explicit radial formula used as an
//! independent oracle.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid3;
use crate::multiplier::Multiplier;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelMode {
    /// Torus Green's function with the zero mode gauged to mean-free V.
    Periodic,
    /// Free-space kernel truncated at `radius`; exact convolution for
    /// densities whose support diameter stays below the radius.
    TruncatedFreeSpace { radius: f64 },
}

impl KernelMode {
    /// Default physics kernel: truncation at half the box.
    pub fn truncated_default(grid: &Grid3) -> KernelMode {
        KernelMode::TruncatedFreeSpace { radius: 0.5 * grid.box_length() }
    }

    pub fn validate(&self, grid: &Grid3) -> Result<()> {
        if let KernelMode::TruncatedFreeSpace { radius } = self {
            let max = grid.box_length() * 3.0f64.sqrt() / 2.0;
            if !(*radius > 0.0) || *radius > max {
                return Err(Error::Grid(format!(
                    "truncation radius {radius} outside (0, {max:.6}]"
                )));
            }
        }
        Ok(())
    }
}

/// Fourier symbol of the attractive Coulomb convolution.
///
/// Periodic: `-4*pi/|k|^2`, zero at k = 0 (mean-zero gauge).
/// Truncated: `-4*pi*(1-cos(R|k|))/|k|^2`, with the Taylor limit `-2*pi*R^2`
/// at k = 0. The 1-cos factor is evaluated as `2*sin^2(R|k|/2)` to avoid
/// cancellation at small |k|.
pub fn coulomb_symbol(grid: Arc<Grid3>, mode: KernelMode) -> Multiplier {
    match mode {
        KernelMode::Periodic => Multiplier::from_radial_symbol(grid, |k2| {
            if k2 == 0.0 {
                0.0
            } else {
                -4.0 * PI / k2
            }
        }),
        KernelMode::TruncatedFreeSpace { radius } => {
            Multiplier::from_radial_symbol(grid, move |k2| {
                if k2 == 0.0 {
                    -2.0 * PI * radius * radius
                } else {
                    let k = k2.sqrt();
                    let s = (0.5 * radius * k).sin();
                    -8.0 * PI * s * s / k2
                }
            })
        }
    }
}

/// Solves for the Hartree potential of a (real, nonnegative) density.
/// The result is re-projected onto real values; roundoff leaves an O(1e-14)
/// imaginary part behind.
pub fn solve_potential(density: &Field, mode: KernelMode) -> Field {
    let sym = coulomb_symbol(density.grid().clone(), mode);
    let mut v = sym.apply(density);
    v.values_mut().iter_mut().for_each(|z| *z = Complex64::new(z.re, 0.0));
    v
}

/// Explicit radial formula for the potential of a spherically symmetric
/// density: `V(r) = -(1/r) * int_{s<=r} n - int_{s>r} n(s)/s`, evaluated by
/// composite trapezoid quadrature on the given radial samples.
pub struct RadialPotential {
    eval_radii: Vec<f64>,
    potential: Vec<f64>,
    gradient: Vec<f64>,
    total_mass: f64,
}

impl RadialPotential {
    pub fn radii(&self) -> &[f64] {
        &self.eval_radii
    }
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }
    /// Radial derivative `dV/dr = M(r)/r^2`.
    pub fn gradient(&self) -> &[f64] {
        &self.gradient
    }
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }
}

pub fn newton_radial_potential(
    radii: &[f64],
    density: &[f64],
    eval_radii: &[f64],
) -> Result<RadialPotential> {
    if radii.len() != density.len() || radii.len() < 2 {
        return Err(Error::Grid("radial profile needs >= 2 matching samples".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] < 0.0 {
        return Err(Error::Grid("radii must be strictly increasing and nonnegative".into()));
    }

    let m = radii.len();
    // Cumulative trapezoid of 4*pi*rho*s^2 (mass inside) and 4*pi*rho*s
    // (outer-shell weight) at the sample nodes.
    let mut inner = vec![0.0f64; m];
    let mut shell = vec![0.0f64; m];
    for i in 1..m {
        let (r0, r1) = (radii[i - 1], radii[i]);
        let dr = r1 - r0;
        inner[i] = inner[i - 1]
            + 2.0 * PI * dr * (density[i - 1] * r0 * r0 + density[i] * r1 * r1);
        shell[i] = shell[i - 1] + 2.0 * PI * dr * (density[i - 1] * r0 + density[i] * r1);
    }
    // Fill [0, radii[0]] assuming constant density there (radii usually
    // start at or near zero).
    let core_mass = 4.0 / 3.0 * PI * density[0] * radii[0].powi(3);
    let core_shell = 2.0 * PI * density[0] * radii[0] * radii[0];
    let total_mass = core_mass + inner[m - 1];
    let total_shell = core_shell + shell[m - 1];

    // rho linearly interpolated inside a segment.
    let interp = |r: f64| -> (f64, f64) {
        if r <= radii[0] {
            let mass = 4.0 / 3.0 * PI * density[0] * r * r * r;
            let sh = core_shell - 2.0 * PI * density[0] * r * r;
            // mass inside r, shell weight from r up to radii[0]
            (mass, sh + shell[m - 1])
        } else if r >= radii[m - 1] {
            (total_mass, 0.0)
        } else {
            let j = radii.partition_point(|&x| x < r) - 1;
            let (r0, r1) = (radii[j], radii[j + 1]);
            let t = (r - r0) / (r1 - r0);
            let rho_r = density[j] * (1.0 - t) + density[j + 1] * t;
            let dm = 2.0 * PI * (r - r0) * (density[j] * r0 * r0 + rho_r * r * r);
            let ds = 2.0 * PI * (r - r0) * (density[j] * r0 + rho_r * r);
            (core_mass + inner[j] + dm, shell[m - 1] - shell[j] - ds)
        }
    };

    let mut potential = Vec::with_capacity(eval_radii.len());
    let mut gradient = Vec::with_capacity(eval_radii.len());
    for &r in eval_radii {
        if r < 0.0 {
            return Err(Error::Grid("evaluation radii must be nonnegative".into()));
        }
        let (mass_in, shell_out) = interp(r);
        if r < 1e-300 {
            potential.push(-total_shell);
            gradient.push(0.0);
        } else {
            potential.push(-mass_in / r - shell_out);
            gradient.push(mass_in / (r * r));
        }
    }
    Ok(RadialPotential {
        eval_radii: eval_radii.to_vec(),
        potential,
        gradient,
        total_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn symbol_values() {
        let g = make_grid(8, PI).unwrap(); // dk = 2
        let per = coulomb_symbol(g.clone(), KernelMode::Periodic);
        // |k|^2 = 4 at index (1,0,0)
        assert!((per.symbol()[g.idx(1, 0, 0)].re - (-PI)).abs() < 1e-13);
        assert_eq!(per.symbol()[0].re, 0.0);

        let r = 1.0;
        let tr = coulomb_symbol(g.clone(), KernelMode::TruncatedFreeSpace { radius: r });
        assert!((tr.symbol()[0].re - (-2.0 * PI * r * r)).abs() < 1e-13);
        // R|k| = pi at |k| = pi: on this grid |k| = 2m, pick analytic check
        // instead at the mode where R|k| = 2 -> 1 - cos(2).
        let k2 = 4.0;
        let expect = -4.0 * PI * (1.0 - (2.0f64).cos()) / k2;
        assert!((tr.symbol()[g.idx(1, 0, 0)].re - expect).abs() < 1e-13);
    }

    #[test]
    fn truncated_symbol_at_half_period() {
        // R|k| = pi makes 1 - cos = 2, so the symbol is -8*pi/|k|^2.
        let g = make_grid(8, 2.0 * PI).unwrap(); // dk = 1
        let r = PI / 3.0;
        let tr = coulomb_symbol(g.clone(), KernelMode::TruncatedFreeSpace { radius: r });
        let idx = g.idx(3, 0, 0); // |k| = 3, R|k| = pi
        let expect = -8.0 * PI / 9.0;
        assert!((tr.symbol()[idx].re - expect).abs() < 1e-13);
    }

    #[test]
    fn uniform_density_gauges_to_zero_in_periodic_mode() {
        let g = make_grid(8, 3.0).unwrap();
        let n = Field::from_fn(g, |_, _, _| Complex64::new(0.7, 0.0));
        let v = solve_potential(&n, KernelMode::Periodic);
        assert!(v.linf_norm() < 1e-13);
    }

    #[test]
    fn potential_is_linear_in_density() {
        let g = make_grid(16, 8.0).unwrap();
        let n1 = Field::from_fn(g.clone(), |x, y, z| {
            Complex64::new((-(x * x + y * y + z * z)).exp(), 0.0)
        });
        let n2 = Field::from_fn(g.clone(), |x, y, z| {
            Complex64::new((-(x * x + y * y + z * z) / 2.0).exp() * 0.3, 0.0)
        });
        let mode = KernelMode::truncated_default(&g);
        let v1 = solve_potential(&n1, mode);
        let v2 = solve_potential(&n2, mode);
        let mut combo = n1.clone();
        combo.scale(Complex64::new(2.0, 0.0));
        combo.axpy(Complex64::new(-1.5, 0.0), &n2);
        let v_combo = solve_potential(&combo, mode);
        let mut expect = v1.clone();
        expect.scale(Complex64::new(2.0, 0.0));
        expect.axpy(Complex64::new(-1.5, 0.0), &v2);
        let mut diff = v_combo.clone();
        diff.axpy(Complex64::new(-1.0, 0.0), &expect);
        let scale = expect.l2_norm().max(1e-300);
        assert!(diff.l2_norm() / scale < 1e-12);
    }

    #[test]
    fn newton_oracle_gaussian_matches_erf_identity() {
        // Unit-mass Gaussian sigma = 1: V(r) = -erf(r/sqrt(2))/r.
        let m = 4000;
        let rmax = 12.0;
        let radii: Vec<f64> = (0..m).map(|i| i as f64 * rmax / (m - 1) as f64).collect();
        let norm = (2.0 * PI).powf(-1.5);
        let density: Vec<f64> = radii.iter().map(|r| norm * (-0.5 * r * r).exp()).collect();
        let eval: Vec<f64> = (1..60).map(|i| 0.15 * i as f64).collect();
        let out = newton_radial_potential(&radii, &density, &eval).unwrap();
        assert!((out.total_mass() - 1.0).abs() < 1e-6);
        for (i, &r) in eval.iter().enumerate() {
            let expect = -statrs::function::erf::erf(r / 2.0f64.sqrt()) / r;
            assert!(
                (out.potential()[i] - expect).abs() < 1e-6,
                "r = {r}: {} vs {expect}",
                out.potential()[i]
            );
        }
        // Newton bounds at every probe radius.
        for (i, &r) in eval.iter().enumerate() {
            assert!(out.potential()[i].abs() * r <= out.total_mass() * (1.0 + 1e-12));
            assert!(out.gradient()[i].abs() * r * r <= out.total_mass() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn newton_oracle_point_mass_far_field() {
        // Density packed near r = 0 with unit mass looks like -1/r outside.
        let m = 2000;
        let rmax = 0.2;
        let radii: Vec<f64> = (0..m).map(|i| i as f64 * rmax / (m - 1) as f64).collect();
        let sigma = 0.03;
        let norm = (2.0 * PI * sigma * sigma).powf(-1.5);
        let density: Vec<f64> =
            radii.iter().map(|r| norm * (-0.5 * r * r / (sigma * sigma)).exp()).collect();
        let eval = [0.5, 1.0, 2.0, 5.0];
        let out = newton_radial_potential(&radii, &density, &eval).unwrap();
        for (i, &r) in eval.iter().enumerate() {
            assert!(
                (out.potential()[i] + 1.0 / r).abs() < 1e-4,
                "V({r}) = {}",
                out.potential()[i]
            );
        }
    }

    #[test]
    fn newton_oracle_zero_density_and_bad_radii() {
        let radii = [0.0, 0.5, 1.0];
        let zero = [0.0, 0.0, 0.0];
        let out = newton_radial_potential(&radii, &zero, &[0.3, 0.9]).unwrap();
        assert!(out.potential().iter().all(|v| *v == 0.0));
        let bad = [0.0, 0.5, 0.4];
        assert!(newton_radial_potential(&bad, &zero, &[0.1]).is_err());
    }
}
