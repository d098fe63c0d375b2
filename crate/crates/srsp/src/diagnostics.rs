//! Tracked functionals: masses, energy, dissipation ledger, Sobolev norms,
//! spatial moments, the variance and dilation expectations behind the virial
//! argument, and the blow-up monitor.
//!
//! Position-dependent quadratures (moments, variance, dilation) use
//! box-centered coordinates under a radial cosine taper on the outer 10%
//! shell of the box, which suppresses periodic-wrap artifacts while leaving
//! well-contained states untouched.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

use crate::grid::Grid3;
use crate::hartree::{solve_potential, KernelMode};
use crate::state::MixedState;

/// One time-sample of every tracked functional. CSV column order follows
/// the field order here.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub masses: Vec<f64>,
    pub total_mass: f64,
    pub energy: f64,
    pub kinetic_part: f64,
    pub potential_part: f64,
    pub h_half: f64,
    pub h_half_hom: f64,
    pub ledger: f64,
    pub variance_m: f64,
    pub dilation_a: f64,
    pub rest_term: f64,
    pub moment1: f64,
    pub moment2: f64,
    pub tail_fraction: f64,
}

impl DiagnosticsRecord {
    pub fn csv_header(rank: usize) -> String {
        let mut cols = vec!["t".to_string()];
        for k in 1..=rank {
            cols.push(format!("mass_{k}"));
        }
        cols.extend(
            [
                "total_mass",
                "energy",
                "kinetic_part",
                "potential_part",
                "h_half",
                "h_half_hom",
                "ledger",
                "variance_m",
                "dilation_a",
                "rest_term",
                "moment1",
                "moment2",
                "tail_fraction",
            ]
            .map(String::from),
        );
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut cols = vec![format!("{:.17e}", self.t)];
        for m in &self.masses {
            cols.push(format!("{:.17e}", m));
        }
        for v in [
            self.total_mass,
            self.energy,
            self.kinetic_part,
            self.potential_part,
            self.h_half,
            self.h_half_hom,
            self.ledger,
            self.variance_m,
            self.dilation_a,
            self.rest_term,
            self.moment1,
            self.moment2,
            self.tail_fraction,
        ] {
            cols.push(format!("{:.17e}", v));
        }
        cols.join(",")
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MonitorThresholds {
    /// Trip when h_half exceeds this multiple of its initial value.
    pub blowup_ratio: f64,
    /// Trip when this fraction of homogeneous H^{1/2} energy sits in the
    /// outer third of frequency shells (resolution-loss sentinel).
    pub tail_threshold: f64,
}

impl Default for MonitorThresholds {
    fn default() -> Self {
        MonitorThresholds { blowup_ratio: 50.0, tail_threshold: 0.10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MonitorVerdict {
    Continue,
    BlowupDetected { reason: String },
}

/// Applies the sentinel thresholds to one record given the initial h_half.
pub fn blowup_monitor(
    record: &DiagnosticsRecord,
    thresholds: &MonitorThresholds,
    h_half_initial: f64,
) -> MonitorVerdict {
    if !record.h_half.is_finite() {
        return MonitorVerdict::BlowupDetected { reason: "non-finite h_half".into() };
    }
    if h_half_initial > 0.0 && record.h_half > thresholds.blowup_ratio * h_half_initial {
        return MonitorVerdict::BlowupDetected {
            reason: format!(
                "h_half ratio {:.3e} exceeded {}",
                record.h_half / h_half_initial,
                thresholds.blowup_ratio
            ),
        };
    }
    if record.tail_fraction > thresholds.tail_threshold {
        return MonitorVerdict::BlowupDetected {
            reason: format!(
                "tail fraction {:.3e} exceeded {}",
                record.tail_fraction, thresholds.tail_threshold
            ),
        };
    }
    MonitorVerdict::Continue
}

/// Spectral sums shared by several functionals, one forward transform per
/// component.
struct SpectralSums {
    mass: f64,
    kinetic_form: f64,   // <psi, sqrt(-Lap+m^2) psi>
    bessel_half: f64,    // <psi, (1-Lap)^{1/2} psi>
    hom_half: f64,       // <psi, (-Lap)^{1/2} psi>
    rest: f64,           // <psi, m^2 (-Lap+m^2)^{-1/2} psi>
    dissipation: f64,    // <psi, (-Lap)^alpha psi>
    tail_num: f64,       // hom-half weight restricted to |k| > kc
}

fn spectral_sums(grid: &Grid3, spectrum: &[Complex64], m: f64, alpha: f64, kc: f64) -> SpectralSums {
    let n = grid.n();
    let freqs = grid.freqs();
    let scale = grid.cell_volume() / grid.len() as f64;
    let m2 = m * m;
    let parts: Vec<[f64; 7]> = (0..n)
        .into_par_iter()
        .map(|ix| {
            let kx2 = freqs[ix] * freqs[ix];
            let mut acc = [0.0f64; 7];
            for iy in 0..n {
                let kxy2 = kx2 + freqs[iy] * freqs[iy];
                let base = (ix * n + iy) * n;
                for iz in 0..n {
                    let k2 = kxy2 + freqs[iz] * freqs[iz];
                    let p = spectrum[base + iz].norm_sqr();
                    let kin = (k2 + m2).sqrt();
                    let kabs = k2.sqrt();
                    acc[0] += p;
                    acc[1] += kin * p;
                    acc[2] += (1.0 + k2).sqrt() * p;
                    acc[3] += kabs * p;
                    acc[4] += if kin > 0.0 { m2 / kin * p } else { 0.0 };
                    acc[5] += k2.powf(alpha) * p;
                    if kabs > kc {
                        acc[6] += kabs * p;
                    }
                }
            }
            acc
        })
        .collect();
    let mut tot = [0.0f64; 7];
    for p in parts {
        for i in 0..7 {
            tot[i] += p[i];
        }
    }
    SpectralSums {
        mass: scale * tot[0],
        kinetic_form: scale * tot[1],
        bessel_half: scale * tot[2],
        hom_half: scale * tot[3],
        rest: scale * tot[4],
        dissipation: scale * tot[5],
        tail_num: scale * tot[6],
    }
}

/// Precomputed window / coordinate arrays for the position quadratures.
struct WindowArrays {
    /// Radial cosine taper, 1 inside 0.9*L/2, rolling to 0 at L/2.
    w: Vec<f64>,
    /// w * x_j per axis.
    wx: [Vec<f64>; 3],
    /// w^2 * r^2 and w^2 * r^4.
    w2r2: Vec<f64>,
    w2r4: Vec<f64>,
    /// Raw r^2 (no window), for the boundary-mass guard.
    r2: Vec<f64>,
}

fn build_window(grid: &Grid3) -> WindowArrays {
    let n = grid.n();
    let len = grid.len();
    let half = 0.5 * grid.box_length();
    let r_in = 0.9 * half;
    let coords = grid.coords();
    let mut w = vec![0.0f64; len];
    let mut wx0 = vec![0.0f64; len];
    let mut wx1 = vec![0.0f64; len];
    let mut wx2 = vec![0.0f64; len];
    let mut w2r2 = vec![0.0f64; len];
    let mut w2r4 = vec![0.0f64; len];
    let mut r2v = vec![0.0f64; len];
    for ix in 0..n {
        let x = coords[ix];
        for iy in 0..n {
            let y = coords[iy];
            let base = (ix * n + iy) * n;
            for iz in 0..n {
                let z = coords[iz];
                let r2 = x * x + y * y + z * z;
                let r = r2.sqrt();
                let wv = if r <= r_in {
                    1.0
                } else if r >= half {
                    0.0
                } else {
                    0.5 * (1.0 + (std::f64::consts::PI * (r - r_in) / (half - r_in)).cos())
                };
                let i = base + iz;
                w[i] = wv;
                wx0[i] = wv * x;
                wx1[i] = wv * y;
                wx2[i] = wv * z;
                w2r2[i] = wv * wv * r2;
                w2r4[i] = wv * wv * r2 * r2;
                r2v[i] = r2;
            }
        }
    }
    WindowArrays { w, wx: [wx0, wx1, wx2], w2r2, w2r4, r2: r2v }
}

/// Diagnostics engine bound to one grid and one parameter set. Caches the
/// window arrays and frequency data; all methods are pure in the state.
pub struct DiagnosticsEngine {
    grid: Arc<Grid3>,
    pub m: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub kernel_mode: KernelMode,
    /// Include variance/dilation/moments in records (3-axis transforms per
    /// component; noticeably more work per sample).
    pub virial: bool,
    window: std::sync::OnceLock<WindowArrays>,
    tail_cutoff: f64,
}

impl DiagnosticsEngine {
    pub fn new(
        grid: Arc<Grid3>,
        m: f64,
        epsilon: f64,
        alpha: f64,
        kernel_mode: KernelMode,
        virial: bool,
    ) -> Self {
        let tail_cutoff = 2.0 / 3.0 * grid.k_nyquist();
        DiagnosticsEngine {
            grid,
            m,
            epsilon,
            alpha,
            kernel_mode,
            virial,
            window: std::sync::OnceLock::new(),
            tail_cutoff,
        }
    }

    fn window(&self) -> &WindowArrays {
        self.window.get_or_init(|| build_window(&self.grid))
    }

    pub fn grid(&self) -> &Arc<Grid3> {
        &self.grid
    }

    /// Fraction of density mass in the outer shell r > 0.9*L/2; above 1e-6
    /// the position quadratures are unreliable.
    pub fn boundary_mass_fraction(&self, state: &MixedState) -> f64 {
        let density = state.density();
        let half = 0.5 * self.grid.box_length();
        let edge2 = (0.9 * half) * (0.9 * half);
        let vals = density.values();
        let r2 = &self.window().r2;
        let mut outer = 0.0;
        let mut total = 0.0;
        for (v, &rr) in vals.iter().zip(r2) {
            total += v.re;
            if rr > edge2 {
                outer += v.re;
            }
        }
        if total > 0.0 {
            outer / total
        } else {
            0.0
        }
    }

    /// Full record with the running ledger value supplied by the caller.
    pub fn record(&self, state: &MixedState, t: f64, ledger: f64) -> DiagnosticsRecord {
        self.record_inner(state, t, ledger, self.virial)
    }

    fn record_inner(&self, state: &MixedState, t: f64, ledger: f64, virial: bool) -> DiagnosticsRecord {
        let mut masses = Vec::with_capacity(state.rank());
        let mut kin2 = 0.0; // <Psi, sqrt(-Lap+m^2) Psi>
        let mut bess = 0.0;
        let mut hom = 0.0;
        let mut rest = 0.0;
        let mut tail_num = 0.0;
        for (comp, &w) in state.components().iter().zip(state.weights()) {
            let spec = comp.forward_transform();
            let s = spectral_sums(&self.grid, spec.values(), self.m, self.alpha, self.tail_cutoff);
            masses.push(s.mass);
            kin2 += w * s.kinetic_form;
            bess += w * s.bessel_half;
            hom += w * s.hom_half;
            rest += w * s.rest;
            tail_num += w * s.tail_num;
        }
        let total_mass: f64 = masses.iter().zip(state.weights()).map(|(m, w)| w * m).sum();
        let kinetic_part = 0.5 * kin2;

        let density = state.density();
        let v = solve_potential(&density, self.kernel_mode);
        let h3 = self.grid.cell_volume();
        let vn: f64 = v
            .values()
            .par_chunks(8192)
            .zip(density.values().par_chunks(8192))
            .map(|(cv, cn)| cv.iter().zip(cn).map(|(a, b)| a.re * b.re).sum::<f64>())
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        let potential_part = 0.25 * h3 * vn;

        let (variance_m, dilation_a, moment1, moment2) = if virial {
            (
                self.variance_m(state),
                self.dilation_a(state),
                self.moment(state, 1),
                self.moment(state, 2),
            )
        } else {
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        };

        DiagnosticsRecord {
            t,
            masses,
            total_mass,
            energy: kinetic_part + potential_part,
            kinetic_part,
            potential_part,
            h_half: bess.max(0.0).sqrt(),
            h_half_hom: hom.max(0.0).sqrt(),
            ledger,
            variance_m,
            dilation_a,
            rest_term: rest,
            moment1,
            moment2,
            tail_fraction: if hom > 0.0 { tail_num / hom } else { 0.0 },
        }
    }

    /// Energy functional split into (total, kinetic, potential).
    pub fn energy(&self, state: &MixedState) -> (f64, f64, f64) {
        let r = self.record_inner(state, 0.0, 0.0, false);
        (r.energy, r.kinetic_part, r.potential_part)
    }

    /// Integrand of the dissipation ledger, `2*eps*sum_k lambda_k
    /// <psi_k, (-Lap)^alpha psi_k>`. The factor 2 is the one the mass
    /// derivative actually carries; the accounting test pins it down.
    pub fn dissipation_rate(&self, state: &MixedState) -> f64 {
        if self.epsilon == 0.0 {
            return 0.0;
        }
        let mut sum = 0.0;
        for (comp, &w) in state.components().iter().zip(state.weights()) {
            let spec = comp.forward_transform();
            let s = spectral_sums(&self.grid, spec.values(), self.m, self.alpha, self.tail_cutoff);
            sum += w * s.dissipation;
        }
        2.0 * self.epsilon * sum
    }

    /// Variance expectation `<Psi, x sqrt(-Lap+m^2) x Psi>` with windowed
    /// centered coordinates; nonnegative by construction.
    pub fn variance_m(&self, state: &MixedState) -> f64 {
        self.check_boundary(state);
        let kin = crate::multiplier::kinetic_symbol(self.grid.clone(), self.m);
        let mut total = 0.0;
        for (comp, &w) in state.components().iter().zip(state.weights()) {
            for axis in 0..3 {
                let mut phi = comp.clone();
                phi.mul_weight(&self.window().wx[axis]);
                total += w * kin.quadratic_form(&phi);
            }
        }
        total
    }

    /// Dilation expectation `<Psi, (x.p + p.x)/2 Psi>` computed as
    /// `Re sum_j <w x_j psi, p_j (w psi)>`; real by construction and zero
    /// for real-valued components.
    pub fn dilation_a(&self, state: &MixedState) -> f64 {
        self.check_boundary(state);
        let h3 = self.grid.cell_volume();
        let n = self.grid.n();
        let freqs = self.grid.freqs();
        let mut total = 0.0;
        for (comp, &wgt) in state.components().iter().zip(state.weights()) {
            let mut windowed = comp.clone();
            windowed.mul_weight(&self.window().w);
            let chi = windowed.forward_transform();
            for axis in 0..3 {
                // p_j (w psi) = F^-1[ k_j F[w psi] ]
                let mut grad = chi.clone();
                {
                    let vals = grad.values_mut();
                    vals.par_chunks_mut(n * n)
                        .enumerate()
                        .for_each(|(ix, plane)| match axis {
                            0 => {
                                let kx = freqs[ix];
                                for v in plane.iter_mut() {
                                    *v *= kx;
                                }
                            }
                            1 => {
                                for (iy, line) in plane.chunks_mut(n).enumerate() {
                                    let ky = freqs[iy];
                                    for v in line.iter_mut() {
                                        *v *= ky;
                                    }
                                }
                            }
                            _ => {
                                for line in plane.chunks_mut(n) {
                                    for (iz, v) in line.iter_mut().enumerate() {
                                        *v *= freqs[iz];
                                    }
                                }
                            }
                        });
                }
                grad.inverse_inplace();
                // Re <w x_j psi, grad>
                let wx = &self.window().wx[axis];
                let acc: f64 = comp
                    .values()
                    .par_chunks(8192)
                    .zip(grad.values().par_chunks(8192))
                    .zip(wx.par_chunks(8192))
                    .map(|((cp, cg), cw)| {
                        cp.iter()
                            .zip(cg)
                            .zip(cw)
                            .map(|((p, g), w)| (p.conj() * g).re * w)
                            .sum::<f64>()
                    })
                    .collect::<Vec<_>>()
                    .into_iter()
                    .sum();
                total += wgt * h3 * acc;
            }
        }
        total
    }

    /// Rest-mass term `<Psi, m^2 (-Lap + m^2)^{-1/2} Psi>`.
    pub fn rest_term(&self, state: &MixedState) -> f64 {
        if self.m == 0.0 {
            return 0.0;
        }
        let mut sum = 0.0;
        for (comp, &w) in state.components().iter().zip(state.weights()) {
            let spec = comp.forward_transform();
            let s = spectral_sums(&self.grid, spec.values(), self.m, self.alpha, self.tail_cutoff);
            sum += w * s.rest;
        }
        sum
    }

    /// Weighted moments `sum_k lambda_k || |x|^j psi_k ||^2`, j in {1, 2}.
    pub fn moment(&self, state: &MixedState, j: u32) -> f64 {
        assert!(j == 1 || j == 2);
        let weight = if j == 1 { &self.window().w2r2 } else { &self.window().w2r4 };
        let h3 = self.grid.cell_volume();
        let mut total = 0.0;
        for (comp, &wgt) in state.components().iter().zip(state.weights()) {
            let acc: f64 = comp
                .values()
                .par_chunks(8192)
                .zip(weight.par_chunks(8192))
                .map(|(cv, cw)| cv.iter().zip(cw).map(|(z, w)| z.norm_sqr() * w).sum::<f64>())
                .collect::<Vec<_>>()
                .into_iter()
                .sum();
            total += wgt * h3 * acc;
        }
        total
    }

    fn check_boundary(&self, state: &MixedState) {
        let frac = self.boundary_mass_fraction(state);
        if frac > 1e-6 {
            log::warn!(
                "position quadrature: boundary shell holds mass fraction {frac:.3e} (> 1e-6)"
            );
        }
    }
}

/// Trapezoid update of the dissipation ledger between two samples.
pub fn ledger_update(ledger: f64, rate_prev: f64, rate_now: f64, dt: f64) -> f64 {
    ledger + 0.5 * dt * (rate_prev + rate_now)
}

/// Standalone energy functional `(total, kinetic, potential)`:
/// `E = 1/2 <Psi, sqrt(-Lap+m^2) Psi> + 1/4 <Psi, V[Psi] Psi>`.
pub fn energy(state: &MixedState, m: f64, kernel_mode: KernelMode) -> (f64, f64, f64) {
    let eng = DiagnosticsEngine::new(state.grid().clone(), m, 0.0, 0.5, kernel_mode, false);
    eng.energy(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    fn engine(grid: &Arc<Grid3>, m: f64) -> DiagnosticsEngine {
        DiagnosticsEngine::new(
            grid.clone(),
            m,
            0.0,
            0.5,
            KernelMode::Periodic,
            true,
        )
    }

    fn gaussian_state(grid: &Arc<Grid3>, sigma: f64, amp: f64) -> MixedState {
        let f = Field::from_fn(grid.clone(), move |x, y, z| {
            Complex64::new(amp * (-(x * x + y * y + z * z) / (2.0 * sigma * sigma)).exp(), 0.0)
        });
        MixedState::new(vec![f], vec![1.0]).unwrap()
    }

    #[test]
    fn zero_state_diagnostics_vanish() {
        let g = make_grid(16, 8.0).unwrap();
        let st = MixedState::new(vec![Field::zeros(g.clone())], vec![1.0]).unwrap();
        let eng = engine(&g, 1.0);
        let r = eng.record(&st, 0.0, 0.0);
        assert_eq!(r.total_mass, 0.0);
        assert_eq!(r.energy, 0.0);
        assert_eq!(r.variance_m, 0.0);
        assert_eq!(r.dilation_a, 0.0);
        assert_eq!(r.moment1, 0.0);
        assert_eq!(r.tail_fraction, 0.0);
    }

    #[test]
    fn plane_wave_energy_is_half_k() {
        let g = make_grid(16, 2.0 * PI).unwrap();
        let l = g.box_length();
        let amp = l.powf(-1.5);
        let f = Field::from_fn(g.clone(), move |x, _, _| Complex64::from_polar(amp, 2.0 * x));
        let st = MixedState::new(vec![f], vec![1.0]).unwrap();
        let eng = DiagnosticsEngine::new(g, 0.0, 0.0, 0.5, KernelMode::Periodic, false);
        let (tot, kin, pot) = eng.energy(&st);
        // Periodic gauge removes the uniform density: V = 0, E = |k|/2.
        assert!((kin - 1.0).abs() < 1e-10, "kin = {kin}");
        assert!(pot.abs() < 1e-10);
        assert!((tot - 1.0).abs() < 1e-10);
    }

    #[test]
    fn energy_scaling_turns_negative_for_large_amplitude() {
        let g = make_grid(32, 16.0).unwrap();
        let eng = DiagnosticsEngine::new(
            g.clone(),
            1.0,
            0.0,
            0.5,
            KernelMode::truncated_default(&g),
            false,
        );
        let base = gaussian_state(&g, 1.0, 1.0);
        let (_, kin1, pot1) = eng.energy(&base);
        assert!(kin1 > 0.0);
        assert!(pot1 < 0.0);
        // Kinetic scales as c^2, potential as c^4.
        let c = 3.0;
        let mut scaled = base.clone();
        scaled.scale_amplitude(c);
        let (_, kin2, pot2) = eng.energy(&scaled);
        assert!((kin2 / kin1 - c * c).abs() / (c * c) < 1e-10);
        assert!((pot2 / pot1 - c.powi(4)).abs() / c.powi(4) < 1e-10);
        // Large amplitude drives the total negative.
        let c_big = 2.0 * (kin1 / -pot1).sqrt();
        let mut big = base.clone();
        big.scale_amplitude(c_big);
        let (tot, _, _) = eng.energy(&big);
        assert!(tot < 0.0, "E = {tot}");
    }

    #[test]
    fn variance_m_large_mass_limit_matches_moment() {
        // sqrt(|k|^2 + m^2) -> m for m >> |k|, so <M> -> m * moment1.
        let g = make_grid(32, 16.0).unwrap();
        let m = 100.0;
        let eng = engine(&g, m);
        let st = gaussian_state(&g, 1.5, 0.8);
        let var = eng.variance_m(&st);
        let mom = eng.moment(&st, 1);
        assert!(var >= 0.0);
        assert!((var - m * mom).abs() / (m * mom) < 2e-3, "var {var} vs m*mom {}", m * mom);
    }

    #[test]
    fn variance_grows_under_translation() {
        let g = make_grid(32, 16.0).unwrap();
        let eng = engine(&g, 1.0);
        let centered = gaussian_state(&g, 1.0, 1.0);
        let shifted = MixedState::new(
            vec![Field::from_fn(g.clone(), |x, y, z| {
                Complex64::new(
                    (-(((x - 2.0) * (x - 2.0)) + y * y + z * z) / 2.0).exp(),
                    0.0,
                )
            })],
            vec![1.0],
        )
        .unwrap();
        assert!(eng.variance_m(&shifted) > eng.variance_m(&centered));
    }

    #[test]
    fn dilation_zero_for_real_field_and_positive_for_outgoing_phase() {
        let g = make_grid(32, 16.0).unwrap();
        let eng = engine(&g, 1.0);
        let real_state = gaussian_state(&g, 1.2, 1.0);
        assert!(eng.dilation_a(&real_state).abs() < 1e-10);

        // psi = g(r) exp(i mu r^2 / 2): <A> = mu * sum_j ||x_j g||^2.
        let mu = 0.37;
        let st = MixedState::new(
            vec![Field::from_fn(g.clone(), move |x, y, z| {
                let r2 = x * x + y * y + z * z;
                Complex64::from_polar((-r2 / 2.0).exp(), 0.5 * mu * r2)
            })],
            vec![1.0],
        )
        .unwrap();
        let a = eng.dilation_a(&st);
        let expect = mu * eng.moment(&st, 1);
        assert!(a > 0.0);
        assert!((a - expect).abs() / expect < 1e-6, "a = {a}, expect {expect}");
    }

    #[test]
    fn rest_term_bounds() {
        let g = make_grid(16, 2.0 * PI).unwrap();
        let eng = engine(&g, 1.0);
        // Zero-frequency plane wave: rest term equals the total mass.
        let amp = g.box_length().powf(-1.5);
        let flat = MixedState::new(
            vec![Field::from_fn(g.clone(), move |_, _, _| Complex64::new(amp, 0.0))],
            vec![1.0],
        )
        .unwrap();
        assert!((eng.rest_term(&flat) - 1.0).abs() < 1e-12);

        let st = MixedState::new(
            vec![Field::from_fn(g.clone(), |x, y, z| {
                Complex64::new((x * y).sin(), (z - 0.3 * x).cos())
            })],
            vec![1.0],
        )
        .unwrap();
        let r = eng.rest_term(&st);
        let mass = st.l2_norm_sq();
        assert!(r >= 0.0 && r <= 1.0 * mass + 1e-12);

        let eng0 = engine(&g, 0.0);
        assert_eq!(eng0.rest_term(&st), 0.0);
    }

    #[test]
    fn gaussian_moments_match_closed_form() {
        let g = make_grid(48, 24.0).unwrap();
        // |psi|^2 = standard normal density (unit mass, unit variance per
        // axis): moment1 = E|x|^2 = 3, moment2 = E|x|^4 = 15.
        let norm = (2.0 * PI).powf(-0.75);
        let st = MixedState::new(
            vec![Field::from_fn(g.clone(), move |x, y, z| {
                Complex64::new(norm * (-(x * x + y * y + z * z) / 4.0).exp(), 0.0)
            })],
            vec![1.0],
        )
        .unwrap();
        let eng = engine(&g, 1.0);
        assert!((st.l2_norm_sq() - 1.0).abs() < 1e-10);
        assert!((eng.moment(&st, 1) - 3.0).abs() < 1e-8);
        assert!((eng.moment(&st, 2) - 15.0).abs() < 1e-6);
    }

    #[test]
    fn monitor_trips_on_thresholds() {
        let mk = |h_half: f64, tail: f64| DiagnosticsRecord {
            t: 0.0,
            masses: vec![1.0],
            total_mass: 1.0,
            energy: 0.0,
            kinetic_part: 0.0,
            potential_part: 0.0,
            h_half,
            h_half_hom: 0.0,
            ledger: 0.0,
            variance_m: 0.0,
            dilation_a: 0.0,
            rest_term: 0.0,
            moment1: 0.0,
            moment2: 0.0,
            tail_fraction: tail,
        };
        let th = MonitorThresholds::default();
        assert_eq!(blowup_monitor(&mk(2.0, 0.01), &th, 1.0), MonitorVerdict::Continue);
        assert_ne!(blowup_monitor(&mk(51.0, 0.01), &th, 1.0), MonitorVerdict::Continue);
        assert_ne!(blowup_monitor(&mk(2.0, 0.2), &th, 1.0), MonitorVerdict::Continue);
    }
}
