//! Scenario configuration: the flat key/value document behind the CLI and
//! the figure presets. Unknown keys are rejected so typos surface as
//! configuration errors instead of silently running defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::beamforming::SchedulePolicy;
use crate::error::{Error, Result};
use crate::rf::{PhaseResolution, PilotVariant};

/// Beamforming method a scenario evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// SVD-based hybrid beamforming with ideal phase shifters.
    SvdPerfectPs,
    /// SVD-based hybrid beamforming whose digital precoder is designed
    /// from the ideal equivalent channel while the hardware is impaired.
    SvdImpaired,
    /// Exhaustive beamsteering-codebook training at the BS plus
    /// equivalent-channel estimation.
    CodebookBaseline,
    /// Four-stage downlink estimation: DFT-interpolated AOD estimates,
    /// scheduling and steering design, combiner search, and ZF from the
    /// estimated equivalent channel.
    Algorithm1,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::SvdPerfectPs => "svd-perfect-ps",
            Method::SvdImpaired => "svd-impaired",
            Method::CodebookBaseline => "codebook-baseline",
            Method::Algorithm1 => "algorithm1",
        }
    }
}

/// Digital precoder family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precoder {
    #[default]
    Zf,
    Rzf,
}

/// How the rate formulas account for receive noise after an impaired
/// combiner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseConvention {
    /// Noise power sigma_z^2 regardless of the realized combiner, matching
    /// the closed-form expressions.
    #[default]
    Fixed,
    /// Noise power sigma_z^2 * ||w_E||^2 with the realized impaired
    /// combiner.
    ImpairedCombiner,
}

fn default_trials() -> usize {
    1000
}

fn default_cycles() -> usize {
    1
}

fn default_seed() -> u64 {
    1
}

/// All scalar parameters of one experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    /// BS antenna count.
    pub n_bs: usize,
    /// Per-user antenna count.
    pub n_ue: usize,
    /// Total user count (one RF chain each at the BS).
    pub k: usize,
    /// BS phase-shifter resolution.
    pub phase_bits_bs: PhaseResolution,
    /// UE phase-shifter resolution; defaults to the BS resolution.
    #[serde(default)]
    pub phase_bits_ue: Option<PhaseResolution>,
    /// Rician K-factor shared by all users.
    pub rician_factor: f64,
    /// Model the pure-LOS limit exactly instead of via a huge factor.
    #[serde(default)]
    pub los_only: bool,
    /// Scattering paths per user.
    pub paths: usize,
    /// Phase error standard deviation, radians.
    pub sigma_delta: f64,
    /// Gain error standard deviation, unitless.
    pub sigma_alpha: f64,
    /// Transmit SNR grid, dB.
    pub snr_db: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Training cycles P for the estimation method.
    #[serde(default = "default_cycles")]
    pub pilot_cycles: usize,
    #[serde(default)]
    pub pilot_variant: PilotVariant,
    pub method: Method,
    #[serde(default)]
    pub precoder: Precoder,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub schedule: SchedulePolicy,
    #[serde(default)]
    pub noise_convention: NoiseConvention,
    /// Subtract the per-user mean of the training bins before
    /// interpolation (counteracts the ones-padding offset).
    #[serde(default)]
    pub mean_removal: bool,
}

impl ScenarioConfig {
    /// UE resolution with the BS fallback applied.
    pub fn bits_ue(&self) -> PhaseResolution {
        self.phase_bits_ue.unwrap_or(self.phase_bits_bs)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.id.is_empty() {
            problems.push("id must be nonempty".to_string());
        }
        if self.n_bs == 0 {
            problems.push("n_bs must be at least 1".to_string());
        }
        if self.n_ue == 0 {
            problems.push("n_ue must be at least 1".to_string());
        }
        if self.k == 0 {
            problems.push("k must be at least 1".to_string());
        }
        if self.trials == 0 {
            problems.push("trials must be at least 1".to_string());
        }
        if self.pilot_cycles == 0 {
            problems.push("pilot_cycles must be at least 1".to_string());
        }
        if !self.los_only {
            if !(self.rician_factor >= 0.0 && self.rician_factor.is_finite()) {
                problems.push(format!(
                    "rician_factor must be finite and nonnegative, got {}",
                    self.rician_factor
                ));
            }
            if self.paths == 0 {
                problems.push("paths must be at least 1 unless los_only is set".to_string());
            }
        }
        if !(self.sigma_delta >= 0.0 && self.sigma_delta.is_finite()) {
            problems.push(format!(
                "sigma_delta must be finite and nonnegative, got {}",
                self.sigma_delta
            ));
        }
        if !(self.sigma_alpha >= 0.0 && self.sigma_alpha.is_finite()) {
            problems.push(format!(
                "sigma_alpha must be finite and nonnegative, got {}",
                self.sigma_alpha
            ));
        }
        if self.snr_db.is_empty() {
            problems.push("snr_db must contain at least one point".to_string());
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            problems.push("snr_db entries must be finite".to_string());
        }
        if self.method == Method::Algorithm1 && self.pilot_cycles * self.k > self.n_bs {
            problems.push(format!(
                "pilot_cycles * k = {} exceeds n_bs = {} for method algorithm1",
                self.pilot_cycles * self.k,
                self.n_bs
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "scenario {:?}: {}",
                self.id,
                problems.join("; ")
            )))
        }
    }
}

/// Parse a scenario from a JSON document.
pub fn config_from_json(text: &str) -> Result<ScenarioConfig> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

/// Load a scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    config_from_json(&text)
}
