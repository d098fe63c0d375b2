//! Time integration by operator splitting: the Fourier-diagonal linear flow
//! (kinetic + dissipation) alternates with the pointwise nonlinear potential
//! phase. Both substeps are exactly computable, so the scheme inherits exact
//! per-component mass behavior at eps = 0 and exact contraction at eps > 0.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::path::PathBuf;
use std::sync::Arc;

use crate::diagnostics::{
    blowup_monitor, ledger_update, DiagnosticsEngine, DiagnosticsRecord, MonitorThresholds,
    MonitorVerdict,
};
use crate::error::{Error, Result};
use crate::grid::Grid3;
use crate::hartree::{solve_potential, KernelMode};
use crate::multiplier::Multiplier;
use crate::snapshot;
use crate::state::MixedState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Splitting {
    /// Second order: half linear, potential phase, half linear.
    Strang,
    /// First order cross-check: full linear, then potential phase.
    Lie,
}

#[derive(Debug, Clone, Copy)]
pub struct EvolutionParams {
    pub mass: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub dt: f64,
    pub t_end: f64,
    pub kernel_mode: KernelMode,
    pub splitting: Splitting,
    /// Force V = 0; turns the solver into the exact linear semigroup.
    pub force_linear: bool,
}

impl EvolutionParams {
    pub fn validate(&self, grid: &Grid3) -> Result<()> {
        if self.mass < 0.0 {
            return Err(Error::Scenario(format!("mass {} must be >= 0", self.mass)));
        }
        if self.epsilon < 0.0 {
            return Err(Error::Scenario(format!("epsilon {} must be >= 0", self.epsilon)));
        }
        if self.alpha < 0.5 {
            return Err(Error::Scenario(format!("alpha {} must be >= 1/2", self.alpha)));
        }
        if !(self.dt > 0.0) || !(self.t_end > 0.0) || self.dt > self.t_end {
            return Err(Error::Scenario(format!(
                "need 0 < dt <= t_end, got dt = {}, t_end = {}",
                self.dt, self.t_end
            )));
        }
        self.kernel_mode.validate(grid)?;
        // Accuracy heuristic only; the multiplier step is unconditionally
        // stable.
        if self.dt > 0.5 * grid.spacing() {
            log::warn!(
                "dt = {} exceeds the advective accuracy heuristic 0.5*h = {}",
                self.dt,
                0.5 * grid.spacing()
            );
        }
        Ok(())
    }
}

/// Symbol of the linear sub-flow over a time `tau`:
/// `exp(-i tau sqrt(|k|^2+m^2) - eps tau |k|^(2 alpha))`. Modulus <= 1.
pub fn linear_step_symbol(grid: Arc<Grid3>, params: &EvolutionParams, tau: f64) -> Multiplier {
    let m2 = params.mass * params.mass;
    let eps = params.epsilon;
    let alpha = params.alpha;
    Multiplier::from_symbol(grid, move |kx, ky, kz| {
        let k2 = kx * kx + ky * ky + kz * kz;
        let phase = -tau * (k2 + m2).sqrt();
        let damp = (-eps * tau * k2.powf(alpha)).exp();
        Complex64::from_polar(damp, phase)
    })
}

/// Half-step symbol used by the Strang composition.
pub fn linear_half_step_symbol(grid: Arc<Grid3>, params: &EvolutionParams) -> Multiplier {
    linear_step_symbol(grid, params, 0.5 * params.dt)
}

/// Raised instead of silently propagating NaN/Inf through the transforms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Sentinel {
    NonFinite { component: usize },
}

pub struct Stepper {
    params: EvolutionParams,
    half: Multiplier,
    full: Multiplier,
}

impl Stepper {
    pub fn new(grid: Arc<Grid3>, params: EvolutionParams) -> Result<Self> {
        params.validate(&grid)?;
        Ok(Stepper {
            params,
            half: linear_half_step_symbol(grid.clone(), &params),
            full: linear_step_symbol(grid, &params, params.dt),
        })
    }

    pub fn params(&self) -> &EvolutionParams {
        &self.params
    }

    fn apply_linear(&self, state: &mut MixedState, sym: &Multiplier) {
        for comp in state.components_mut() {
            sym.apply_inplace(comp);
        }
    }

    /// Potential phase over the full dt: every component is multiplied by
    /// the same `exp(-i dt V[n])`, coupling the system through the shared
    /// density.
    fn apply_phase(&self, state: &mut MixedState) {
        if self.params.force_linear {
            return;
        }
        let density = state.density();
        let v = solve_potential(&density, self.params.kernel_mode);
        let dt = self.params.dt;
        let phase: Vec<Complex64> = v
            .values()
            .par_iter()
            .map(|z| Complex64::from_polar(1.0, -dt * z.re))
            .collect();
        for comp in state.components_mut() {
            comp.values_mut()
                .par_iter_mut()
                .zip(phase.par_iter())
                .for_each(|(a, &p)| *a *= p);
        }
    }

    fn check_finite(&self, state: &MixedState) -> std::result::Result<(), Sentinel> {
        for (k, comp) in state.components().iter().enumerate() {
            if !comp.is_finite() {
                return Err(Sentinel::NonFinite { component: k });
            }
        }
        Ok(())
    }

    /// One full step of the configured splitting.
    pub fn step(&self, state: &mut MixedState) -> std::result::Result<(), Sentinel> {
        match self.params.splitting {
            Splitting::Strang => {
                self.apply_linear(state, &self.half);
                self.apply_phase(state);
                self.apply_linear(state, &self.half);
            }
            Splitting::Lie => {
                self.apply_linear(state, &self.full);
                self.apply_phase(state);
            }
        }
        self.check_finite(state)
    }
}

/// One Strang step as a pure function (test/sandbox convenience; `evolve`
/// reuses a cached `Stepper`).
pub fn step_strang(state: &MixedState, params: &EvolutionParams) -> Result<MixedState> {
    let stepper = Stepper::new(state.grid().clone(), *params)?;
    let mut out = state.clone();
    stepper
        .step(&mut out)
        .map_err(|s| Error::Scenario(format!("blow-up sentinel during step: {s:?}")))?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RunStatus {
    Completed,
    BlowupDetected { time: f64, reason: String },
}

#[derive(Clone)]
pub struct ObserverConfig {
    /// Diagnostics sampling period in steps (>= 1).
    pub record_stride: usize,
    /// Snapshot period in steps; 0 disables snapshots.
    pub snapshot_stride: usize,
    pub snapshot_dir: Option<PathBuf>,
    /// Track variance/dilation/moments (extra transforms per record).
    pub virial: bool,
    pub thresholds: MonitorThresholds,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        ObserverConfig {
            record_stride: 1,
            snapshot_stride: 0,
            snapshot_dir: None,
            virial: false,
            thresholds: MonitorThresholds::default(),
        }
    }
}

pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    pub status: RunStatus,
    pub final_state: MixedState,
    pub steps_taken: usize,
}

impl Trajectory {
    pub fn initial_record(&self) -> &DiagnosticsRecord {
        &self.records[0]
    }
    pub fn final_record(&self) -> &DiagnosticsRecord {
        self.records.last().expect("trajectory has at least the initial record")
    }
}

/// Repeated stepping with periodic diagnostics, ledger accumulation, the
/// blow-up monitor, and optional binary snapshots. Halts early with
/// `BlowupDetected` when the monitor (or a non-finite value) trips.
pub fn evolve(
    initial: &MixedState,
    params: &EvolutionParams,
    observers: &ObserverConfig,
) -> Result<Trajectory> {
    assert!(observers.record_stride >= 1);
    let grid = initial.grid().clone();
    let stepper = Stepper::new(grid.clone(), *params)?;
    let eng = DiagnosticsEngine::new(
        grid,
        params.mass,
        params.epsilon,
        params.alpha,
        params.kernel_mode,
        observers.virial,
    );

    let steps = (params.t_end / params.dt).round() as usize;
    let steps = steps.max(1);

    let mut state = initial.clone();
    let mut ledger = 0.0;
    let mut rate_prev = eng.dissipation_rate(&state);
    let mut t_prev_sample = 0.0;

    let mut records = Vec::with_capacity(steps / observers.record_stride + 2);
    let first = eng.record(&state, 0.0, 0.0);
    let h_half_initial = first.h_half;
    records.push(first);

    if observers.snapshot_stride > 0 {
        if let Some(dir) = &observers.snapshot_dir {
            snapshot::write_snapshot(&dir.join("snapshot_000000.sps"), &state)?;
        }
    }

    let mut status = RunStatus::Completed;
    let mut steps_taken = 0;
    for step_idx in 1..=steps {
        if let Err(sentinel) = stepper.step(&mut state) {
            status = RunStatus::BlowupDetected {
                time: step_idx as f64 * params.dt,
                reason: format!("non-finite state: {sentinel:?}"),
            };
            steps_taken = step_idx;
            break;
        }
        steps_taken = step_idx;
        let t = step_idx as f64 * params.dt;

        let sample_now = step_idx % observers.record_stride == 0 || step_idx == steps;
        if sample_now {
            if params.epsilon > 0.0 {
                let rate_now = eng.dissipation_rate(&state);
                ledger = ledger_update(ledger, rate_prev, rate_now, t - t_prev_sample);
                rate_prev = rate_now;
            }
            t_prev_sample = t;
            let rec = eng.record(&state, t, ledger);
            let verdict = blowup_monitor(&rec, &observers.thresholds, h_half_initial);
            records.push(rec);
            if let MonitorVerdict::BlowupDetected { reason } = verdict {
                status = RunStatus::BlowupDetected { time: t, reason };
                break;
            }
        }

        if observers.snapshot_stride > 0 && step_idx % observers.snapshot_stride == 0 {
            if let Some(dir) = &observers.snapshot_dir {
                snapshot::write_snapshot(
                    &dir.join(format!("snapshot_{step_idx:06}.sps")),
                    &state,
                )?;
            }
        }
    }

    Ok(Trajectory { records, status, final_state: state, steps_taken })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    /// (dt, weighted-L2 self-convergence error vs the finest level).
    pub rows: Vec<(f64, f64)>,
    /// Least-squares slope of log(error) vs log(dt).
    pub fitted_order: f64,
}

/// Weighted L2 distance between equal-rank states.
fn state_distance(a: &MixedState, b: &MixedState) -> f64 {
    let mut sum = 0.0;
    for ((ca, cb), &w) in a.components().iter().zip(b.components()).zip(a.weights()) {
        let mut diff = ca.clone();
        diff.axpy(Complex64::new(-1.0, 0.0), cb);
        sum += w * diff.l2_norm_sq();
    }
    sum.sqrt()
}

/// Self-convergence study: evolve the same data at each dt and compare the
/// final states against the finest level.
pub fn convergence_study(
    initial: &MixedState,
    params: &EvolutionParams,
    dts: &[f64],
) -> Result<ConvergenceStudy> {
    if dts.len() < 3 {
        return Err(Error::Scenario("convergence study needs >= 3 dt levels".into()));
    }
    let mut sorted = dts.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let finest = *sorted.last().unwrap();

    let run = |dt: f64| -> Result<MixedState> {
        let p = EvolutionParams { dt, ..*params };
        let obs = ObserverConfig {
            record_stride: usize::MAX / 2,
            thresholds: MonitorThresholds { blowup_ratio: f64::INFINITY, tail_threshold: 2.0 },
            ..Default::default()
        };
        let traj = evolve(initial, &p, &obs)?;
        Ok(traj.final_state)
    };

    let reference = run(finest)?;
    let mut rows = Vec::new();
    for &dt in &sorted[..sorted.len() - 1] {
        let final_state = run(dt)?;
        rows.push((dt, state_distance(&final_state, &reference)));
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(dt, e)| (dt.ln(), e.ln()))
        .collect();
    let fitted_order = least_squares_slope(&pts);
    Ok(ConvergenceStudy { rows, fitted_order })
}

/// Slope of the least-squares line through (x, y) pairs.
pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    fn default_params(grid: &Grid3) -> EvolutionParams {
        EvolutionParams {
            mass: 1.0,
            epsilon: 0.0,
            alpha: 0.5,
            dt: 0.01,
            t_end: 0.1,
            kernel_mode: KernelMode::truncated_default(grid),
            splitting: Splitting::Strang,
            force_linear: false,
        }
    }

    #[test]
    fn zero_state_stays_zero() {
        let g = make_grid(16, 8.0).unwrap();
        let st = MixedState::new(vec![Field::zeros(g.clone())], vec![1.0]).unwrap();
        let params = default_params(&g);
        let out = step_strang(&st, &params).unwrap();
        assert_eq!(out.l2_norm_sq(), 0.0);
    }

    #[test]
    fn half_step_symbol_is_contraction() {
        let g = make_grid(16, 2.0 * PI).unwrap(); // dk = 1
        let mut params = default_params(&g);
        params.epsilon = 1.0;
        params.alpha = 0.5;
        params.dt = 0.2;
        let sym = linear_half_step_symbol(g.clone(), &params);
        assert!(sym.max_modulus() <= 1.0 + 1e-15);
        // k = 0, any m: pure phase.
        assert!((sym.symbol()[0].norm() - 1.0).abs() < 1e-15);
        // |k| = 1 with eps = 1, alpha = 1/2, dt = 0.2: modulus e^{-0.1}.
        let expect = (-0.1f64).exp();
        assert!((sym.symbol()[g.idx(1, 0, 0)].norm() - expect).abs() < 1e-14);
        // k = 0, m = 0: symbol exactly 1.
        let mut p0 = params;
        p0.mass = 0.0;
        let sym_m0 = linear_half_step_symbol(g.clone(), &p0);
        assert!((sym_m0.symbol()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        // eps = 0: unitary everywhere.
        params.epsilon = 0.0;
        let sym0 = linear_half_step_symbol(g, &params);
        assert!(sym0.symbol().iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn plane_wave_keeps_modulus_pointwise() {
        // Single plane wave: density is uniform so V is constant (periodic
        // gauge makes it zero); the step is a pure phase rotation.
        let g = make_grid(16, 2.0 * PI).unwrap();
        let amp = g.box_length().powf(-1.5);
        let f = Field::from_fn(g.clone(), move |x, _, _| Complex64::from_polar(amp, x));
        let st = MixedState::new(vec![f], vec![1.0]).unwrap();
        let mut params = default_params(&g);
        params.kernel_mode = KernelMode::Periodic;
        let out = step_strang(&st, &params).unwrap();
        for (a, b) in out.component(0).values().iter().zip(st.component(0).values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn strang_mass_is_preserved_per_step() {
        let g = make_grid(16, 8.0).unwrap();
        let f = Field::from_fn(g.clone(), |x, y, z| {
            Complex64::new(2.0 * (-(x * x + y * y + z * z) / 2.0).exp(), 0.0)
        });
        let st = MixedState::new(vec![f], vec![1.0]).unwrap();
        let params = default_params(&g);
        let mass0 = st.l2_norm_sq();
        let mut cur = st;
        for _ in 0..5 {
            cur = step_strang(&cur, &params).unwrap();
        }
        let drift = (cur.l2_norm_sq() - mass0).abs() / mass0;
        assert!(drift < 1e-13, "drift {drift}");
    }

    #[test]
    fn linear_problem_strang_equals_exact_semigroup() {
        let g = make_grid(16, 8.0).unwrap();
        let f = Field::from_fn(g.clone(), |x, y, z| {
            Complex64::new((x + y).sin(), (z - x).cos())
        });
        let st = MixedState::new(vec![f], vec![1.0]).unwrap();
        let mut params = default_params(&g);
        params.force_linear = true;
        params.epsilon = 0.3;
        params.alpha = 0.75;
        let stepped = step_strang(&st, &params).unwrap();
        let exact_sym = linear_step_symbol(g, &params, params.dt);
        let exact = exact_sym.apply(st.component(0));
        let mut diff = exact.clone();
        diff.axpy(Complex64::new(-1.0, 0.0), stepped.component(0));
        assert!(diff.l2_norm() / exact.l2_norm() < 1e-12);
    }

    #[test]
    fn evolve_produces_records_and_completes() {
        let g = make_grid(16, 8.0).unwrap();
        let f = Field::from_fn(g.clone(), |x, y, z| {
            Complex64::new(0.5 * (-(x * x + y * y + z * z)).exp(), 0.0)
        });
        let st = MixedState::new(vec![f], vec![1.0]).unwrap();
        let params = default_params(&g);
        let obs = ObserverConfig { record_stride: 2, ..Default::default() };
        let traj = evolve(&st, &params, &obs).unwrap();
        assert_eq!(traj.status, RunStatus::Completed);
        assert_eq!(traj.steps_taken, 10);
        // initial + records at steps 2,4,6,8,10
        assert_eq!(traj.records.len(), 6);
        assert!((traj.final_record().t - 0.1).abs() < 1e-12);
    }

    #[test]
    fn params_validation_rejects_bad_values() {
        let g = make_grid(16, 8.0).unwrap();
        let mut p = default_params(&g);
        p.alpha = 0.3;
        assert!(p.validate(&g).is_err());
        let mut p2 = default_params(&g);
        p2.epsilon = -1.0;
        assert!(p2.validate(&g).is_err());
        let mut p3 = default_params(&g);
        p3.dt = 1.0;
        p3.t_end = 0.5;
        assert!(p3.validate(&g).is_err());
    }
}
