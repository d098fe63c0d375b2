use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use srsp::config::SimConfig;
use srsp::error::{Error, Result};
use srsp::evolution::RunStatus;
use srsp::hartree::newton_radial_potential;
use srsp::scenario;
use srsp::semigroup::{
    decay_exponent_fit, duhamel_scaling_probe, standard_decay_matrix, DecayProbe, DuhamelProbe,
    TestFunction,
};
use srsp::verify;

#[derive(Parser)]
#[command(name = "srsp", version, about = "Semi-relativistic Schrodinger-Poisson simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured simulation and write diagnostics + report.
    Run {
        config: PathBuf,
    },
    /// Evolve identical initial data across a dissipation sweep.
    BlowupStudy {
        config: PathBuf,
        /// Comma-separated dissipation strengths; must include 0.
        #[arg(long = "eps", value_delimiter = ',')]
        eps: Vec<f64>,
        /// Output report path (JSON).
        #[arg(long, default_value = "blowup_study.json")]
        out: PathBuf,
    },
    /// Run a named verification suite.
    Verify {
        suite: String,
        /// Optional JSON report path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Semigroup lab probes from a probe-config TOML.
    KernelLab {
        probe_config: PathBuf,
        /// Output directory for CSV series and verdicts.
        #[arg(long, default_value = "kernel_lab_out")]
        out: PathBuf,
    },
    /// Radial Newton-oracle potential of a (r, rho) CSV density profile.
    PotentialOracle {
        density_file: PathBuf,
        /// Output CSV path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Deserialize)]
struct KernelLabConfig {
    n: usize,
    l: f64,
    /// Run the full standard decay matrix.
    #[serde(default)]
    standard_matrix: bool,
    /// Custom decay cases (recipe picked automatically).
    #[serde(default)]
    decay: Vec<DecayCase>,
    /// Alphas for standard Duhamel probes.
    #[serde(default)]
    duhamel: Vec<f64>,
}

#[derive(Deserialize)]
struct DecayCase {
    alpha: f64,
    nu: f64,
    r: f64,
    p: f64,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = dispatch() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn dispatch() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config } => {
            let cfg = SimConfig::load(&config)?;
            let artifacts = scenario::run(&cfg)?;
            match &artifacts.report.status {
                RunStatus::Completed => {
                    println!("completed at t = {:.4}", artifacts.report.final_time)
                }
                RunStatus::BlowupDetected { time, reason } => {
                    println!("blow-up sentinel at t = {time:.4}: {reason}")
                }
            }
            println!(
                "energy(0) = {:.6}, gram drift = {:.3e}, outputs in {}",
                artifacts.report.energy_initial, artifacts.report.gram_drift, cfg.output.directory
            );
            Ok(())
        }
        Command::BlowupStudy { config, eps, out } => {
            let cfg = SimConfig::load(&config)?;
            let report = scenario::blowup_study(&cfg, &eps)?;
            println!("{:<8} {:<18} {:<12} {:<12}", "eps", "status", "t_sentinel", "max h ratio");
            for row in &report.rows {
                let status = match &row.status {
                    RunStatus::Completed => "completed".to_string(),
                    RunStatus::BlowupDetected { .. } => "blow-up".to_string(),
                };
                println!(
                    "{:<8} {:<18} {:<12} {:<12.3}",
                    row.epsilon,
                    status,
                    row.sentinel_time.map_or("-".into(), |t| format!("{t:.3}")),
                    row.max_h_half_ratio
                );
            }
            println!("dichotomy holds: {}", report.dichotomy_holds);
            std::fs::write(&out, serde_json::to_string_pretty(&report).unwrap())?;
            Ok(())
        }
        Command::Verify { suite, out } => {
            let report = verify::run_suite(&suite)?;
            for case in &report.cases {
                println!("[{}] {}: {}", if case.pass { "PASS" } else { "FAIL" }, case.name, case.detail);
            }
            println!("suite {}: {}", report.suite, if report.pass { "PASS" } else { "FAIL" });
            if let Some(path) = out {
                std::fs::write(&path, serde_json::to_string_pretty(&report).unwrap())?;
            }
            if !report.pass {
                std::process::exit(1);
            }
            Ok(())
        }
        Command::KernelLab { probe_config, out } => {
            let text = std::fs::read_to_string(&probe_config)?;
            let cfg: KernelLabConfig = toml::from_str(&text)
                .map_err(|e| Error::Config { field: "<kernel-lab toml>".into(), message: e.to_string() })?;
            let grid = srsp::make_grid(cfg.n, cfg.l)?;
            std::fs::create_dir_all(&out)?;
            let mut probes: Vec<DecayProbe> = Vec::new();
            if cfg.standard_matrix {
                probes.extend(standard_decay_matrix(&grid));
            }
            for c in &cfg.decay {
                let recipe = if c.r == 1.0 {
                    TestFunction::MomentFreePeak { sigma: 2.0 * grid.spacing() }
                } else if c.p == 2.0 && c.nu == 0.0 {
                    TestFunction::WideGaussian { sigma: cfg.l / 8.0 }
                } else {
                    TestFunction::PowerLawSpectrum {
                        a: 1.5,
                        k_lo: 2.5 * grid.k_min(),
                        k_hi: 0.7 * grid.k_nyquist(),
                    }
                };
                probes.push(DecayProbe::with_auto_samples(c.alpha, c.nu, c.r, c.p, recipe, &grid));
            }
            let mut verdicts = Vec::new();
            for (i, probe) in probes.iter().enumerate() {
                let fit = decay_exponent_fit(&grid, probe)?;
                let mut csv = String::from("t,norm,used\n");
                for s in &fit.series {
                    csv.push_str(&format!("{:e},{:e},{}\n", s.t, s.norm, s.used));
                }
                std::fs::write(out.join(format!("decay_{i:02}.csv")), csv)?;
                let pass = if fit.predicted_slope == 0.0 {
                    fit.fitted_slope.abs() <= 0.02
                } else {
                    fit.relative_gap <= 0.05
                };
                println!(
                    "decay alpha={} nu={} r={} p={}: fitted {:.4} predicted {:.4} gap {:.2}% [{}]",
                    probe.alpha,
                    probe.nu,
                    probe.r,
                    probe.p,
                    fit.fitted_slope,
                    fit.predicted_slope,
                    100.0 * fit.relative_gap,
                    if pass { "PASS" } else { "FAIL" }
                );
                verdicts.push(serde_json::json!({
                    "probe": probe,
                    "predicted": fit.predicted_slope,
                    "fitted": fit.fitted_slope,
                    "gap": fit.relative_gap,
                    "pass": pass,
                }));
            }
            for &alpha in &cfg.duhamel {
                let probe = DuhamelProbe::standard(alpha, &grid)?;
                let fit = duhamel_scaling_probe(&grid, &probe)?;
                let mut csv = String::from("T,sup_norm\n");
                for (t, v) in &fit.series {
                    csv.push_str(&format!("{t:e},{v:e}\n"));
                }
                std::fs::write(out.join(format!("duhamel_a{alpha}.csv")), csv)?;
                let pass = fit.relative_gap <= 0.10;
                println!(
                    "duhamel alpha={alpha}: fitted {:.4} predicted {:.4} gap {:.2}% [{}]",
                    fit.fitted_exponent,
                    fit.predicted_exponent,
                    100.0 * fit.relative_gap,
                    if pass { "PASS" } else { "FAIL" }
                );
                verdicts.push(serde_json::json!({
                    "duhamel": probe,
                    "predicted": fit.predicted_exponent,
                    "fitted": fit.fitted_exponent,
                    "gap": fit.relative_gap,
                    "pass": pass,
                }));
            }
            std::fs::write(
                out.join("verdicts.json"),
                serde_json::to_string_pretty(&verdicts).unwrap(),
            )?;
            Ok(())
        }
        Command::PotentialOracle { density_file, out } => {
            let text = std::fs::read_to_string(&density_file)?;
            let mut radii = Vec::new();
            let mut rho = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') || line.starts_with('r') {
                    continue;
                }
                let mut parts = line.split(',');
                let parse = |s: Option<&str>| -> Result<f64> {
                    s.ok_or_else(|| Error::Scenario(format!("line {}: need r,rho", lineno + 1)))?
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Scenario(format!("line {}: {e}", lineno + 1)))
                };
                radii.push(parse(parts.next())?);
                rho.push(parse(parts.next())?);
            }
            let result = newton_radial_potential(&radii, &rho, &radii)?;
            let mut csv = String::from("r,V\n");
            for (r, v) in result.radii().iter().zip(result.potential()) {
                csv.push_str(&format!("{r:e},{v:e}\n"));
            }
            match out {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            Ok(())
        }
    }
}
