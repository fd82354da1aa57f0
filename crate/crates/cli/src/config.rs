//! TOML experiment configuration.
//!
//! One table per command (`[train]`, `[noise_sweep]`, `[defect_sweep]`,
//! `[shot_noise_tvd]`, `[decompose_check]`) plus a shared `[training]`
//! table overriding the training defaults. Unknown keys are rejected.
//! Noise levels are given in units of pi; `total_count = 0` selects exact
//! probabilities instead of Poisson shot noise.

use std::path::{Path, PathBuf};

use qgan_core::mesh::PHASE_COUNT;
use qgan_core::{ConvergenceRule, NoiseModel, ShotNoise, TrainingConfig};
use serde::Deserialize;

use crate::error::CliError;

/// Repetitions per sweep point under `--full`.
pub const FULL_REPETITIONS: usize = 100;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub training: TrainingSection,
    pub train: TrainSection,
    pub noise_sweep: NoiseSweepSection,
    pub defect_sweep: DefectSweepSection,
    pub shot_noise_tvd: ShotNoiseTvdSection,
    pub decompose_check: DecomposeCheckSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

/// Overrides for [`TrainingConfig`]; absent keys keep the library default.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub max_rounds: Option<usize>,
    pub inner_steps_d: Option<usize>,
    pub inner_steps_g: Option<usize>,
    pub lr_d: Option<f64>,
    pub lr_g: Option<f64>,
    pub lr_decay: Option<f64>,
    pub epsilon_d: Option<f64>,
    pub patience: Option<usize>,
    pub sample_reference: Option<bool>,
}

impl TrainingSection {
    /// Base training configuration (noise, defects and seed are set per run).
    pub fn resolve(&self) -> Result<TrainingConfig, CliError> {
        let d = TrainingConfig::default();
        let config = TrainingConfig {
            max_rounds: self.max_rounds.unwrap_or(d.max_rounds),
            inner_steps_d: self.inner_steps_d.unwrap_or(d.inner_steps_d),
            inner_steps_g: self.inner_steps_g.unwrap_or(d.inner_steps_g),
            lr_d: self.lr_d.unwrap_or(d.lr_d),
            lr_g: self.lr_g.unwrap_or(d.lr_g),
            lr_decay: self.lr_decay.unwrap_or(d.lr_decay),
            convergence: ConvergenceRule {
                epsilon_d: self.epsilon_d.unwrap_or(d.convergence.epsilon_d),
                patience: self.patience.unwrap_or(d.convergence.patience),
            },
            noise: NoiseModel { sample_reference: self.sample_reference.unwrap_or(false), ..d.noise },
            ..d
        };
        config.validate()?;
        Ok(config)
    }
}

/// Builds a noise model from a sigma in units of pi and a total count.
pub fn noise_model(sigma_over_pi: f64, total_count: f64, sample_reference: bool) -> Result<NoiseModel, CliError> {
    if !(total_count >= 0.0 && total_count.is_finite()) {
        return Err(CliError::Config(format!("total_count must be finite and >= 0, got {total_count}")));
    }
    let shots = if total_count == 0.0 { ShotNoise::Exact } else { ShotNoise::Poisson { total_count } };
    let mut model = NoiseModel::new(sigma_over_pi * std::f64::consts::PI, shots)?;
    model.sample_reference = sample_reference;
    Ok(model)
}

/// Defective shifters per arm for a total defect rate.
pub fn defects_per_arm(rate: f64) -> usize {
    (rate * PHASE_COUNT as f64).round() as usize
}

fn nonempty<T>(list: &[T], name: &str) -> Result<(), CliError> {
    if list.is_empty() {
        return Err(CliError::Config(format!("{name} must not be empty")));
    }
    Ok(())
}

fn positive(n: usize, name: &str) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Config(format!("{name} must be >= 1")));
    }
    Ok(())
}

fn sigmas_valid(sigmas: &[f64]) -> Result<(), CliError> {
    match sigmas.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
        Some(s) => Err(CliError::Config(format!("sigma_over_pi must be finite and >= 0, got {s}"))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub sigma_over_pi: f64,
    pub total_count: f64,
    pub defect_rate: f64,
    /// Fill the `wall_time` column (makes the file non-reproducible).
    pub wall_time: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self { seed: None, out: None, sigma_over_pi: 0.0, total_count: 0.0, defect_rate: 0.0, wall_time: false }
    }
}

impl TrainSection {
    pub fn validate(&self) -> Result<(), CliError> {
        sigmas_valid(&[self.sigma_over_pi])?;
        rates_valid(&[self.defect_rate])
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSweepSection {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub sigmas_over_pi: Vec<f64>,
    pub total_count: f64,
    pub repetitions: usize,
}

impl Default for NoiseSweepSection {
    fn default() -> Self {
        Self {
            seed: None,
            out: None,
            sigmas_over_pi: vec![0.01, 0.02, 0.03, 0.04, 0.05],
            total_count: 1500.0,
            repetitions: 20,
        }
    }
}

impl NoiseSweepSection {
    pub fn validate(&self) -> Result<(), CliError> {
        nonempty(&self.sigmas_over_pi, "sigmas_over_pi")?;
        sigmas_valid(&self.sigmas_over_pi)?;
        positive(self.repetitions, "repetitions")
    }
}

fn rates_valid(rates: &[f64]) -> Result<(), CliError> {
    match rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        Some(r) => Err(CliError::Config(format!("defect rate must lie in [0, 1], got {r}"))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DefectSweepSection {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Fraction of the 15 shifters per arm that are broken.
    pub rates: Vec<f64>,
    /// Alternative grid: absolute defect counts spread over all 30 shifters.
    /// When set, `rates` is ignored.
    pub total_defects: Option<Vec<usize>>,
    pub sigma_over_pi: f64,
    pub total_count: f64,
    pub repetitions: usize,
}

impl Default for DefectSweepSection {
    fn default() -> Self {
        Self {
            seed: None,
            out: None,
            rates: (0..=8).map(|k| k as f64 / 10.0).collect(),
            total_defects: None,
            sigma_over_pi: 0.02,
            total_count: 1500.0,
            repetitions: 20,
        }
    }
}

impl DefectSweepSection {
    pub fn validate(&self) -> Result<(), CliError> {
        match &self.total_defects {
            Some(totals) => {
                nonempty(totals, "total_defects")?;
                if let Some(t) = totals.iter().find(|&&t| t > 2 * PHASE_COUNT) {
                    return Err(CliError::Config(format!("total_defects entry {t} exceeds {}", 2 * PHASE_COUNT)));
                }
            }
            None => {
                nonempty(&self.rates, "rates")?;
                rates_valid(&self.rates)?;
            }
        }
        sigmas_valid(&[self.sigma_over_pi])?;
        positive(self.repetitions, "repetitions")
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShotNoiseTvdSection {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub counts: Vec<f64>,
    pub repetitions: usize,
}

impl Default for ShotNoiseTvdSection {
    fn default() -> Self {
        Self { seed: None, out: None, counts: vec![100.0, 300.0, 1000.0, 3000.0, 10000.0], repetitions: 1000 }
    }
}

impl ShotNoiseTvdSection {
    pub fn validate(&self) -> Result<(), CliError> {
        nonempty(&self.counts, "counts")?;
        if let Some(c) = self.counts.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(CliError::Config(format!("counts must be finite and > 0, got {c}")));
        }
        positive(self.repetitions, "repetitions")
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecomposeCheckSection {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub samples: usize,
    pub tolerance: f64,
    /// Check the identity matrix instead of Haar-random unitaries.
    pub identity: bool,
}

impl Default for DecomposeCheckSection {
    fn default() -> Self {
        Self { seed: None, out: None, samples: 1000, tolerance: 1e-10, identity: false }
    }
}

impl DecomposeCheckSection {
    pub fn validate(&self) -> Result<(), CliError> {
        positive(self.samples, "samples")?;
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(CliError::Config(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        Ok(())
    }
}
