//! Experiment drivers: initial-condition recipes, single runs with output
//! artifacts, negative-energy tuning, and the blow-up/arrest study.

use num_complex::Complex64;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::config::{InitialConfig, InitialKind, SimConfig};
use crate::diagnostics::{DiagnosticsEngine, DiagnosticsRecord, MonitorThresholds};
use crate::error::{Error, Result};
use crate::evolution::{evolve, EvolutionParams, ObserverConfig, RunStatus, Splitting, Trajectory};
use crate::field::Field;
use crate::grid::{make_grid, Grid3};
use crate::hartree::KernelMode;
use crate::snapshot;
use crate::state::MixedState;

/// Cosine taper: 1 inside `r_on`, 0 beyond `r_off`. Stands in for the
/// compact support the blow-up theorem asks of its initial data.
pub fn radial_taper(r: f64, r_on: f64, r_off: f64) -> f64 {
    if r <= r_on {
        1.0
    } else if r >= r_off {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * (r - r_on) / (r_off - r_on)).cos())
    }
}

/// Builds the initial mixed state from a recipe. Gaussian stacks are
/// tapered beyond L/4 (support ends at 3L/8), L2-normalized per component,
/// orthonormalized when requested, then uniformly scaled by the amplitude.
pub fn build_initial(grid: &Arc<Grid3>, cfg: &InitialConfig) -> Result<MixedState> {
    match &cfg.kind {
        InitialKind::RadialGaussianStack { widths, amplitude } => {
            let l = grid.box_length();
            let (r_on, r_off) = (0.25 * l, 0.375 * l);
            let mut comps = Vec::with_capacity(widths.len());
            for &sigma in widths {
                let mut f = Field::from_fn(grid.clone(), move |x, y, z| {
                    let r2 = x * x + y * y + z * z;
                    let r = r2.sqrt();
                    Complex64::new(
                        (-r2 / (2.0 * sigma * sigma)).exp() * radial_taper(r, r_on, r_off),
                        0.0,
                    )
                });
                let norm = f.l2_norm();
                if norm < 1e-300 {
                    return Err(Error::Scenario(format!("width {sigma} produced a zero field")));
                }
                f.scale(Complex64::new(1.0 / norm, 0.0));
                comps.push(f);
            }
            let mut state = MixedState::new(comps, cfg.weights.clone())?;
            if cfg.orthonormalize {
                state.orthonormalize()?;
                let gram = state.gram_matrix();
                let k = state.rank();
                let mut dev = 0.0f64;
                for j in 0..k {
                    for i in 0..k {
                        let expect = if i == j { 1.0 } else { 0.0 };
                        dev = dev.max((gram[j * k + i] - Complex64::new(expect, 0.0)).norm());
                    }
                }
                if dev > 1e-10 {
                    return Err(Error::Scenario(format!(
                        "orthonormalization left Gram deviation {dev:.3e}"
                    )));
                }
            }
            state.scale_amplitude(*amplitude);
            Ok(state)
        }
        InitialKind::PlaneWaveStack { modes, amplitude } => {
            let l = grid.box_length();
            let dk = grid.k_min();
            let amp = amplitude * l.powf(-1.5);
            let comps = modes
                .iter()
                .map(|&m| {
                    Field::from_fn(grid.clone(), move |x, y, z| {
                        Complex64::from_polar(
                            amp,
                            dk * (m[0] as f64 * x + m[1] as f64 * y + m[2] as f64 * z),
                        )
                    })
                })
                .collect();
            MixedState::new(comps, cfg.weights.clone())
        }
        InitialKind::FromSnapshot { path } => snapshot::read_snapshot(Path::new(path)),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub status: RunStatus,
    pub final_time: f64,
    pub sentinel_reason: Option<String>,
    pub energy_initial: f64,
    pub masses_initial: Vec<f64>,
    pub total_mass_initial: f64,
    /// Max-norm Gram drift between t = 0 and the final state. The
    /// dissipative flow is self-adjoint rather than unitary, so this is
    /// reported with no normative threshold.
    pub gram_drift: f64,
    pub steps_taken: usize,
    pub software_version: String,
    pub config_hash: String,
}

pub struct RunArtifacts {
    pub report: RunReport,
    pub trajectory: Trajectory,
}

pub fn params_from_config(cfg: &SimConfig) -> EvolutionParams {
    EvolutionParams {
        mass: cfg.physics.m,
        epsilon: cfg.physics.epsilon,
        alpha: cfg.physics.alpha,
        dt: cfg.time.dt,
        t_end: cfg.time.t_end,
        kernel_mode: cfg.kernel_mode(),
        splitting: Splitting::Strang,
        force_linear: false,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord], rank: usize) -> String {
    let mut out = DiagnosticsRecord::csv_header(rank);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Runs one configured simulation and writes diagnostics (CSV/JSON),
/// snapshots, and the run report into the output directory.
pub fn run(cfg: &SimConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let grid = make_grid(cfg.grid.n, cfg.grid.l)?;
    let initial = build_initial(&grid, &cfg.initial)?;
    let params = params_from_config(cfg);

    let out_dir = PathBuf::from(&cfg.output.directory);
    std::fs::create_dir_all(&out_dir)?;
    let snap_dir = out_dir.join("snapshots");
    if cfg.time.snapshot_stride > 0 {
        std::fs::create_dir_all(&snap_dir)?;
    }

    let observers = ObserverConfig {
        record_stride: cfg.time.record_stride,
        snapshot_stride: cfg.time.snapshot_stride,
        snapshot_dir: if cfg.time.snapshot_stride > 0 { Some(snap_dir) } else { None },
        virial: cfg.output.virial,
        thresholds: MonitorThresholds {
            blowup_ratio: cfg.thresholds.blowup_ratio,
            tail_threshold: cfg.thresholds.tail_threshold,
        },
    };

    let gram0 = initial.gram_matrix();
    let trajectory = evolve(&initial, &params, &observers)?;
    let gram1 = trajectory.final_state.gram_matrix();
    let gram_drift = MixedState::gram_distance(&gram0, &gram1);

    let first = trajectory.initial_record();
    let (final_time, sentinel_reason) = match &trajectory.status {
        RunStatus::Completed => (trajectory.final_record().t, None),
        RunStatus::BlowupDetected { time, reason } => (*time, Some(reason.clone())),
    };
    let report = RunReport {
        status: trajectory.status.clone(),
        final_time,
        sentinel_reason,
        energy_initial: first.energy,
        masses_initial: first.masses.clone(),
        total_mass_initial: first.total_mass,
        gram_drift,
        steps_taken: trajectory.steps_taken,
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.hash(),
    };

    if cfg.output.formats.iter().any(|f| f == "csv") {
        write_text(
            &out_dir.join("diagnostics.csv"),
            &diagnostics_csv(&trajectory.records, initial.rank()),
        )?;
    }
    if cfg.output.formats.iter().any(|f| f == "json") {
        write_text(
            &out_dir.join("diagnostics.json"),
            &serde_json::to_string_pretty(&trajectory.records).unwrap(),
        )?;
    }
    write_text(&out_dir.join("report.json"), &serde_json::to_string_pretty(&report).unwrap())?;

    Ok(RunArtifacts { report, trajectory })
}

/// Bisection on the overall amplitude `c` of a radial recipe so the energy
/// of `c * Psi` reaches the target. Kinetic energy scales as c^2 and the
/// focusing potential as c^4, so E(c) = a c^2 + b c^4 with a > 0 >= b; the
/// returned amplitude satisfies E <= target up to the bisection tolerance.
pub fn tune_negative_energy(
    grid: &Arc<Grid3>,
    recipe: &InitialConfig,
    m: f64,
    kernel_mode: KernelMode,
    target: f64,
) -> Result<(f64, f64)> {
    let unit = {
        let mut r = recipe.clone();
        if let InitialKind::RadialGaussianStack { amplitude, .. } = &mut r.kind {
            *amplitude = 1.0;
        } else {
            return Err(Error::Scenario("amplitude tuning needs a radial recipe".into()));
        }
        build_initial(grid, &r)?
    };
    let eng = DiagnosticsEngine::new(grid.clone(), m, 0.0, 0.5, kernel_mode, false);
    let (_, a, b) = eng.energy(&unit);
    if b >= 0.0 && target < 0.0 {
        return Err(Error::Scenario(format!(
            "potential part {b} is not focusing; cannot reach negative energy"
        )));
    }
    let energy_at = |c: f64| a * c * c + b * c.powi(4);
    let cap = 1e4;
    // E(c) rises to a maximum at c_peak then plunges; negative targets live
    // on the falling branch, positive ones on the rising branch.
    let (mut lo, mut hi) = if b < 0.0 {
        let c_peak = (-a / (2.0 * b)).sqrt();
        let e_max = energy_at(c_peak);
        if target <= 0.0 {
            (c_peak, cap)
        } else if target <= e_max {
            (0.0, c_peak)
        } else {
            return Err(Error::Scenario(format!(
                "target {target} exceeds the peak energy {e_max:.6}; not bracketed"
            )));
        }
    } else {
        if target < 0.0 || energy_at(cap) < target {
            return Err(Error::Scenario(format!(
                "target {target} not bracketed by amplitudes (0, {cap}]"
            )));
        }
        (0.0, cap)
    };
    let g = |c: f64| energy_at(c) - target;
    let glo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid).signum() == glo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Return the endpoint on the E <= target side of the root.
    let c = if g(lo) <= 0.0 { lo } else { hi };
    let mut tuned = unit;
    tuned.scale_amplitude(c);
    let (achieved, _, _) = eng.energy(&tuned);
    Ok((c, achieved))
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyRow {
    pub epsilon: f64,
    pub status: RunStatus,
    pub sentinel_time: Option<f64>,
    pub final_h_half_ratio: f64,
    pub max_h_half_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    pub energy_initial: f64,
    /// True when eps = 0 tripped the sentinel and every eps > 0 completed.
    pub dichotomy_holds: bool,
}

/// Evolves identical initial data once per dissipation strength and tables
/// the outcome. The headline check: no dissipation blows up, any positive
/// dissipation completes the horizon.
pub fn blowup_study(base: &SimConfig, epsilons: &[f64]) -> Result<StudyReport> {
    if epsilons.is_empty() {
        return Err(Error::config("epsilons", "list must be nonempty"));
    }
    if !epsilons.contains(&0.0) {
        return Err(Error::config("epsilons", "list must include 0"));
    }
    base.validate()?;
    let grid = make_grid(base.grid.n, base.grid.l)?;
    let initial = build_initial(&grid, &base.initial)?;
    let mut rows = Vec::new();
    let mut energy_initial = 0.0;
    for &eps in epsilons {
        let mut params = params_from_config(base);
        params.epsilon = eps;
        let observers = ObserverConfig {
            record_stride: base.time.record_stride,
            virial: false,
            thresholds: MonitorThresholds {
                blowup_ratio: base.thresholds.blowup_ratio,
                tail_threshold: base.thresholds.tail_threshold,
            },
            ..Default::default()
        };
        let traj = evolve(&initial, &params, &observers)?;
        let h0 = traj.initial_record().h_half;
        energy_initial = traj.initial_record().energy;
        let max_ratio = traj
            .records
            .iter()
            .map(|r| r.h_half / h0)
            .fold(0.0f64, f64::max);
        let (sentinel_time, status) = match &traj.status {
            RunStatus::Completed => (None, traj.status.clone()),
            RunStatus::BlowupDetected { time, .. } => (Some(*time), traj.status.clone()),
        };
        rows.push(StudyRow {
            epsilon: eps,
            status,
            sentinel_time,
            final_h_half_ratio: traj.final_record().h_half / h0,
            max_h_half_ratio: max_ratio,
        });
    }
    let zero_blew = rows
        .iter()
        .find(|r| r.epsilon == 0.0)
        .map(|r| matches!(r.status, RunStatus::BlowupDetected { .. }))
        .unwrap_or(false);
    let positive_completed = rows
        .iter()
        .filter(|r| r.epsilon > 0.0)
        .all(|r| matches!(r.status, RunStatus::Completed));
    Ok(StudyReport { rows, energy_initial, dichotomy_holds: zero_blew && positive_completed })
}
