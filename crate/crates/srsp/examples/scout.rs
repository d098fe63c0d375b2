// Scratch calibration runs; not part of the deliverable surface.
use num_complex::Complex64;
use srsp::config::{InitialConfig, InitialKind};
use srsp::diagnostics::{DiagnosticsEngine, MonitorThresholds};
use srsp::evolution::{evolve, EvolutionParams, ObserverConfig, RunStatus, Splitting};
use srsp::field::Field;
use srsp::hartree::KernelMode;
use srsp::scenario::{build_initial, tune_negative_energy};
use srsp::{make_grid, MixedState};
use std::time::Instant;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "fft".into());
    match which.as_str() {
        "fft" => fft_timing(),
        "dich" => dichotomy(),
        "scan" => scan(),
        "energy" => energy_order(),
        "decay" => decay(),
        "duhamel" => duhamel(),
        "virial" => virial(),
        other => eprintln!("unknown scout {other}"),
    }
}

fn fft_timing() {
    for &n in &[64usize, 128] {
        let g = make_grid(n, 32.0).unwrap();
        let mut f = Field::from_fn(g.clone(), |x, y, z| Complex64::new(x * y, z));
        let t0 = Instant::now();
        let reps = if n == 64 { 40 } else { 10 };
        for _ in 0..reps {
            f.forward_inplace();
            f.inverse_inplace();
        }
        let dt = t0.elapsed().as_secs_f64() / (2 * reps) as f64;
        println!("n = {n}: {:.2} ms per 3-D transform", dt * 1e3);
    }
}

fn recipe(width: f64) -> InitialConfig {
    InitialConfig {
        kind: InitialKind::RadialGaussianStack { widths: vec![width], amplitude: 1.0 },
        weights: vec![1.0],
        orthonormalize: true,
    }
}

fn dichotomy() {
    let args: Vec<String> = std::env::args().collect();
    let width: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(1.5);
    let target: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(-0.6);
    let dt: f64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(0.01);
    let t_end: f64 = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(8.0);
    let grid = make_grid(64, 32.0).unwrap();
    let kernel = KernelMode::truncated_default(&grid);
    let (c, achieved) = tune_negative_energy(&grid, &recipe(width), 1.0, kernel, target).unwrap();
    println!("width {width}, target {target}: amplitude {c:.5}, energy {achieved:.5}");
    let mut rcp = recipe(width);
    if let InitialKind::RadialGaussianStack { amplitude, .. } = &mut rcp.kind {
        *amplitude = c;
    }
    let initial = build_initial(&grid, &rcp).unwrap();
    println!("mass = {:.4}", initial.l2_norm_sq());
    for eps in [0.0, 0.05, 0.1, 0.5] {
        let params = EvolutionParams {
            mass: 1.0,
            epsilon: eps,
            alpha: 0.5,
            dt,
            t_end,
            kernel_mode: kernel,
            splitting: Splitting::Strang,
            force_linear: false,
        };
        let obs = ObserverConfig {
            record_stride: 5,
            thresholds: MonitorThresholds::default(),
            ..Default::default()
        };
        let t0 = Instant::now();
        let traj = evolve(&initial, &params, &obs).unwrap();
        let h0 = traj.initial_record().h_half;
        let maxratio = traj.records.iter().map(|r| r.h_half / h0).fold(0.0f64, f64::max);
        let maxtail = traj.records.iter().map(|r| r.tail_fraction).fold(0.0f64, f64::max);
        println!(
            "eps {eps}: {:?} steps {} | max h ratio {maxratio:.3} max tail {maxtail:.4} | {:.1}s",
            match traj.status {
                RunStatus::Completed => "completed".to_string(),
                RunStatus::BlowupDetected { time, ref reason } =>
                    format!("BLOWUP t = {time:.3} ({reason})"),
            },
            traj.steps_taken,
            t0.elapsed().as_secs_f64()
        );
    }
}

fn scan() {
    let args: Vec<String> = std::env::args().collect();
    let width: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(2.0);
    let target: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(-0.1);
    let t_end: f64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(10.0);
    let box_l: f64 = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(32.0);
    let m: f64 = args.get(6).map(|s| s.parse().unwrap()).unwrap_or(1.0);
    let grid = make_grid(64, box_l).unwrap();
    let kernel = KernelMode::truncated_default(&grid);
    let (c, achieved) = tune_negative_energy(&grid, &recipe(width), m, kernel, target).unwrap();
    let mut rcp = recipe(width);
    if let InitialKind::RadialGaussianStack { amplitude, .. } = &mut rcp.kind {
        *amplitude = c;
    }
    let initial = build_initial(&grid, &rcp).unwrap();
    println!(
        "width {width} target {target}: amp {c:.4}, E {achieved:.4}, mass {:.4}",
        initial.l2_norm_sq()
    );
    for eps in [0.0, 0.05] {
        let params = EvolutionParams {
            mass: m,
            epsilon: eps,
            alpha: 0.5,
            dt: 0.01,
            t_end,
            kernel_mode: kernel,
            splitting: Splitting::Strang,
            force_linear: false,
        };
        let obs = ObserverConfig { record_stride: 5, ..Default::default() };
        let traj = evolve(&initial, &params, &obs).unwrap();
        let h0 = traj.initial_record().h_half;
        let maxratio = traj.records.iter().map(|r| r.h_half / h0).fold(0.0f64, f64::max);
        let maxtail = traj.records.iter().map(|r| r.tail_fraction).fold(0.0f64, f64::max);
        println!(
            "  eps {eps}: {} | max h ratio {maxratio:.3} max tail {maxtail:.4}",
            match traj.status {
                RunStatus::Completed => "completed".to_string(),
                RunStatus::BlowupDetected { time, ref reason } =>
                    format!("BLOWUP t = {time:.3} ({reason})"),
            }
        );
    }
}

fn energy_order() {
    let grid = make_grid(64, 32.0).unwrap();
    let initial = build_initial(
        &grid,
        &InitialConfig {
            kind: InitialKind::RadialGaussianStack { widths: vec![1.0, 1.6], amplitude: 1.2 },
            weights: vec![0.6, 0.4],
            orthonormalize: true,
        },
    )
    .unwrap();
    let eng = DiagnosticsEngine::new(
        grid.clone(),
        1.0,
        0.0,
        0.5,
        KernelMode::truncated_default(&grid),
        false,
    );
    let (e, k, p) = eng.energy(&initial);
    println!("E = {e:.5} (kin {k:.5}, pot {p:.5}), mass {:.4}", initial.l2_norm_sq());
    let mut drifts = Vec::new();
    for dt in [0.02, 0.01, 0.005] {
        let params = EvolutionParams {
            mass: 1.0,
            epsilon: 0.0,
            alpha: 0.5,
            dt,
            t_end: 0.5,
            kernel_mode: KernelMode::truncated_default(&grid),
            splitting: Splitting::Strang,
            force_linear: false,
        };
        let traj = evolve(&initial, &params, &ObserverConfig::default()).unwrap();
        let e0 = traj.initial_record().energy;
        let drift = traj
            .records
            .iter()
            .map(|r| (r.energy - e0).abs() / e0.abs())
            .fold(0.0f64, f64::max);
        println!("dt {dt}: energy drift {drift:.3e}");
        drifts.push(drift);
    }
    println!("ratios: {:.3}, {:.3}", drifts[0] / drifts[1], drifts[1] / drifts[2]);
}

fn decay() {
    let grid = make_grid(128, 32.0).unwrap();
    let t0 = Instant::now();
    for probe in srsp::semigroup::standard_decay_matrix(&grid) {
        match srsp::semigroup::decay_exponent_fit(&grid, &probe) {
            Ok(fit) => println!(
                "a={:<5} nu={} r={} p={:<4}: fitted {:>8.4} predicted {:>8.4} gap {:>6.2}% n={}",
                probe.alpha,
                probe.nu,
                probe.r,
                if probe.p.is_infinite() { "inf".to_string() } else { probe.p.to_string() },
                fit.fitted_slope,
                fit.predicted_slope,
                100.0 * fit.relative_gap,
                fit.samples_used,
            ),
            Err(e) => println!(
                "a={} nu={} r={} p={}: ERROR {e}",
                probe.alpha, probe.nu, probe.r, probe.p
            ),
        }
    }
    println!("decay matrix in {:.1}s", t0.elapsed().as_secs_f64());
}

fn duhamel() {
    let grid = make_grid(128, 32.0).unwrap();
    for alpha in [1.0, 0.75] {
        let t0 = Instant::now();
        let probe = srsp::semigroup::DuhamelProbe::standard(alpha, &grid).unwrap();
        match srsp::semigroup::duhamel_scaling_probe(&grid, &probe) {
            Ok(fit) => println!(
                "alpha {alpha}: fitted {:.4} predicted {:.4} gap {:.2}% quad {:.2e} | {:.1}s",
                fit.fitted_exponent,
                fit.predicted_exponent,
                100.0 * fit.relative_gap,
                fit.quadrature_residual,
                t0.elapsed().as_secs_f64()
            ),
            Err(e) => println!("alpha {alpha}: ERROR {e}"),
        }
    }
}

fn virial() {
    let args: Vec<String> = std::env::args().collect();
    let t_end: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(1.5);
    let dt: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(0.01);
    let target: f64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(-0.6);
    let grid = make_grid(64, 32.0).unwrap();
    let kernel = KernelMode::truncated_default(&grid);
    let (c, achieved) = tune_negative_energy(&grid, &recipe(1.5), 1.0, kernel, target).unwrap();
    println!("amplitude {c:.5}, E0 {achieved:.5}");
    let mut rcp = recipe(1.5);
    if let InitialKind::RadialGaussianStack { amplitude, .. } = &mut rcp.kind {
        *amplitude = c;
    }
    let initial = build_initial(&grid, &rcp).unwrap();
    let params = EvolutionParams {
        mass: 1.0,
        epsilon: 0.0,
        alpha: 0.5,
        dt,
        t_end,
        kernel_mode: kernel,
        splitting: Splitting::Strang,
        force_linear: false,
    };
    let obs = ObserverConfig { record_stride: 1, virial: true, ..Default::default() };
    let t0 = Instant::now();
    let traj = evolve(&initial, &params, &obs).unwrap();
    println!("virial run: {:?} in {:.1}s", traj.status, t0.elapsed().as_secs_f64());
    let recs = &traj.records;
    let e0 = recs[0].energy;
    let mut worst = 0.0f64;
    for i in 1..recs.len() - 1 {
        let lhs = (recs[i + 1].dilation_a - recs[i - 1].dilation_a) / (2.0 * params.dt);
        let rhs = 2.0 * e0 - recs[i].rest_term;
        worst = worst.max((lhs - rhs).abs());
    }
    println!(
        "dilation residual {worst:.4e} vs 1% of |2E0| = {:.4e}",
        0.01 * (2.0 * e0).abs()
    );
    let mut worst_m = 0.0f64;
    for i in 1..recs.len() - 1 {
        let dm = (recs[i + 1].variance_m - recs[i - 1].variance_m) / (2.0 * params.dt);
        worst_m = worst_m.max((dm - 2.0 * recs[i].dilation_a).abs());
    }
    println!("variance chain sup residual {worst_m:.4e}");
    println!(
        "M0 = {:.4}, A0 = {:.4}, rest0 = {:.4}",
        recs[0].variance_m, recs[0].dilation_a, recs[0].rest_term
    );
}
