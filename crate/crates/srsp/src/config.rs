//! Run configuration: a single TOML tree mirroring the simulator's
//! parameter surface, with field-level validation and a content hash for
//! reproducibility metadata.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hartree::KernelMode;

fn default_true() -> bool {
    true
}
fn default_record_stride() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridConfig {
    pub n: usize,
    pub l: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    Periodic,
    Truncated,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PhysicsConfig {
    pub m: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub kernel: KernelChoice,
    /// Truncation radius; defaults to L/2 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_record_stride")]
    pub record_stride: usize,
    /// 0 disables snapshots.
    #[serde(default)]
    pub snapshot_stride: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialKind {
    /// Spherically symmetric Gaussians (cosine-tapered beyond L/4) of the
    /// given widths, orthonormalized and then scaled by `amplitude`.
    RadialGaussianStack { widths: Vec<f64>, amplitude: f64 },
    PlaneWaveStack { modes: Vec<[i64; 3]>, amplitude: f64 },
    FromSnapshot { path: String },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InitialConfig {
    #[serde(flatten)]
    pub kind: InitialKind,
    #[serde(default)]
    pub weights: Vec<f64>,
    #[serde(default = "default_true")]
    pub orthonormalize: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ThresholdConfig {
    pub blowup_ratio: f64,
    pub tail_threshold: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig { blowup_ratio: 50.0, tail_threshold: 0.10 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OutputConfig {
    pub directory: String,
    /// Subset of {"csv", "json"}; both by default.
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
    /// Track the virial quantities (variance, dilation, moments).
    #[serde(default = "default_true")]
    pub virial: bool,
}

fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SimConfig {
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    pub time: TimeConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub thresholds: ThresholdConfig,
    pub output: OutputConfig,
}

impl SimConfig {
    pub fn from_toml_str(s: &str) -> Result<SimConfig> {
        let cfg: SimConfig = toml::from_str(s)
            .map_err(|e| Error::Config { field: "<toml>".into(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<SimConfig> {
        let text = std::fs::read_to_string(path)?;
        SimConfig::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML serialization.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_toml_string().as_bytes());
        let digest = h.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn kernel_mode(&self) -> KernelMode {
        match self.physics.kernel {
            KernelChoice::Periodic => KernelMode::Periodic,
            KernelChoice::Truncated => KernelMode::TruncatedFreeSpace {
                radius: self.physics.radius.unwrap_or(0.5 * self.grid.l),
            },
        }
    }

    pub fn rank(&self) -> usize {
        match &self.initial.kind {
            InitialKind::RadialGaussianStack { widths, .. } => widths.len(),
            InitialKind::PlaneWaveStack { modes, .. } => modes.len(),
            InitialKind::FromSnapshot { .. } => self.initial.weights.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |f: &str, m: &str| Error::config(f, m);
        if self.grid.n < 8 || self.grid.n % 2 != 0 {
            return Err(err("grid.n", "must be even and >= 8"));
        }
        if !(self.grid.l > 0.0) {
            return Err(err("grid.l", "must be positive"));
        }
        if self.physics.m < 0.0 {
            return Err(err("physics.m", "must be >= 0"));
        }
        if self.physics.epsilon < 0.0 {
            return Err(err("physics.epsilon", "must be >= 0"));
        }
        if self.physics.alpha < 0.5 {
            return Err(err("physics.alpha", "must be >= 1/2"));
        }
        if let Some(r) = self.physics.radius {
            let max = self.grid.l * 3.0f64.sqrt() / 2.0;
            if !(r > 0.0 && r <= max) {
                return Err(Error::config("physics.radius", format!("must lie in (0, {max:.4}]")));
            }
        }
        if !(self.time.dt > 0.0) {
            return Err(err("time.dt", "must be positive"));
        }
        if !(self.time.t_end >= self.time.dt) {
            return Err(err("time.t_end", "must be >= dt"));
        }
        if self.time.record_stride == 0 {
            return Err(err("time.record_stride", "must be >= 1"));
        }
        match &self.initial.kind {
            InitialKind::RadialGaussianStack { widths, amplitude } => {
                if widths.is_empty() || widths.iter().any(|w| !(*w > 0.0)) {
                    return Err(err("initial.widths", "need >= 1 positive width"));
                }
                if !(*amplitude > 0.0) {
                    return Err(err("initial.amplitude", "must be positive"));
                }
            }
            InitialKind::PlaneWaveStack { modes, amplitude } => {
                if modes.is_empty() {
                    return Err(err("initial.modes", "need >= 1 mode"));
                }
                if !(*amplitude > 0.0) {
                    return Err(err("initial.amplitude", "must be positive"));
                }
                let mut sorted = modes.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != modes.len() {
                    return Err(err("initial.modes", "modes must be distinct"));
                }
            }
            InitialKind::FromSnapshot { path } => {
                if path.is_empty() {
                    return Err(err("initial.path", "must be nonempty"));
                }
            }
        }
        if !matches!(self.initial.kind, InitialKind::FromSnapshot { .. }) {
            if self.initial.weights.len() != self.rank() {
                return Err(Error::config("initial.weights", "length must match the component count"));
            }
            if self.initial.weights.iter().any(|w| !(*w > 0.0)) {
                return Err(err("initial.weights", "must all be positive"));
            }
        }
        if !(self.thresholds.blowup_ratio > 1.0) {
            return Err(err("thresholds.blowup_ratio", "must exceed 1"));
        }
        if !(self.thresholds.tail_threshold > 0.0 && self.thresholds.tail_threshold <= 1.0) {
            return Err(err("thresholds.tail_threshold", "must lie in (0, 1]"));
        }
        for f in &self.output.formats {
            if f != "csv" && f != "json" {
                return Err(Error::config("output.formats", format!("unknown format {f:?}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SimConfig {
        SimConfig {
            grid: GridConfig { n: 64, l: 32.0 },
            physics: PhysicsConfig {
                m: 1.0,
                epsilon: 0.1,
                alpha: 0.5,
                kernel: KernelChoice::Truncated,
                radius: None,
            },
            time: TimeConfig { dt: 0.01, t_end: 1.0, record_stride: 5, snapshot_stride: 0 },
            initial: InitialConfig {
                kind: InitialKind::RadialGaussianStack { widths: vec![1.0, 1.5], amplitude: 2.0 },
                weights: vec![0.6, 0.4],
                orthonormalize: true,
            },
            thresholds: ThresholdConfig::default(),
            output: OutputConfig {
                directory: "out".into(),
                formats: default_formats(),
                virial: true,
            },
        }
    }

    #[test]
    fn round_trip_is_idempotent() {
        let cfg = sample();
        let one = cfg.to_toml_string();
        let parsed = SimConfig::from_toml_str(&one).unwrap();
        assert_eq!(parsed, cfg);
        assert_eq!(parsed.to_toml_string(), one);
        assert_eq!(parsed.hash(), cfg.hash());
    }

    #[test]
    fn negative_epsilon_names_the_field() {
        let mut cfg = sample();
        cfg.physics.epsilon = -0.5;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("physics.epsilon"), "{msg}");
    }

    #[test]
    fn weight_mismatch_rejected() {
        let mut cfg = sample();
        cfg.initial.weights = vec![1.0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn kernel_mode_defaults_to_half_box() {
        let cfg = sample();
        match cfg.kernel_mode() {
            KernelMode::TruncatedFreeSpace { radius } => assert_eq!(radius, 16.0),
            _ => panic!("expected truncated kernel"),
        }
    }
}
