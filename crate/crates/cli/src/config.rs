//! Run configuration: one command plus a section per module, read from
//! TOML or JSON and echoed verbatim into every report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Subcommand;
use eos_core::anomaly::FlagRule;
use eos_core::harness::{SyntheticBenchConfig, TimingConfig};
use eos_core::supervised::{MislabelExperimentConfig, DEFAULT_L2};
use eos_core::EosConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Flag outliers in a CSV dataset with the Gaussian error model.
    Detect,
    /// Per-point affinity rows at a fixed bandwidth or perplexity.
    Affinity,
    /// Train the reweighted classifier on a labeled CSV dataset.
    RobustTrain,
    /// Planted-outlier benchmark against chi-square baselines.
    SynthBench,
    /// Label-flip benchmark of plain vs reweighted training.
    MislabelBench,
    /// Wall time of the weight update across sizes and dimensions.
    Timing,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Detect => "detect",
            Command::Affinity => "affinity",
            Command::RobustTrain => "robust-train",
            Command::SynthBench => "synth-bench",
            Command::MislabelBench => "mislabel-bench",
            Command::Timing => "timing",
        }
    }
}

/// How CSV columns become features and labels.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsvConfig {
    pub label_column: Option<String>,
    pub drop_columns: Vec<String>,
    /// Label cell text to class; empty means the cells must read `0` or `1`.
    pub label_map: BTreeMap<String, u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectConfig {
    pub rule: FlagRule,
    /// Calibrate alpha to this ESS fraction instead of using `eos.alpha`.
    pub ess_target: Option<f64>,
}

/// Exactly one of `sigma_sq` and `perplexity` must be set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AffinityConfig {
    pub sigma_sq: Option<f64>,
    pub perplexity: Option<f64>,
    /// Rows to compute; all points when absent.
    pub anchors: Option<Vec<usize>>,
}

impl Default for AffinityConfig {
    fn default() -> Self {
        Self {
            sigma_sq: None,
            perplexity: Some(30.0),
            anchors: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustTrainConfig {
    pub l2_strength: f64,
    /// Points with weight below `kappa / T` are flagged as suspect labels.
    pub kappa: f64,
}

impl Default for RobustTrainConfig {
    fn default() -> Self {
        Self {
            l2_strength: DEFAULT_L2,
            kappa: eos_core::anomaly::DEFAULT_KAPPA,
        }
    }
}

/// Two Gaussian classes used when no input file is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoClassConfig {
    pub n_instances: usize,
    pub dim: usize,
    pub mean_norm: f64,
    pub seed: u64,
}

impl Default for TwoClassConfig {
    fn default() -> Self {
        Self {
            n_instances: 400,
            dim: 5,
            mean_norm: 2.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MislabelBenchConfig {
    pub flip_proportions: Vec<f64>,
    pub data: TwoClassConfig,
    /// `flip_proportion` and `seed` are overridden per run.
    pub experiment: MislabelExperimentConfig,
}

impl Default for MislabelBenchConfig {
    fn default() -> Self {
        Self {
            flip_proportions: vec![0.0, 0.1, 0.2, 0.3],
            data: TwoClassConfig::default(),
            experiment: MislabelExperimentConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_path: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Copied into every module seed when the run starts.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub csv: CsvConfig,
    #[serde(default)]
    pub eos: EosConfig,
    #[serde(default)]
    pub detect: DetectConfig,
    #[serde(default)]
    pub affinity: AffinityConfig,
    #[serde(default)]
    pub robust_train: RobustTrainConfig,
    #[serde(default)]
    pub synth_bench: SyntheticBenchConfig,
    #[serde(default)]
    pub mislabel_bench: MislabelBenchConfig,
    #[serde(default)]
    pub timing: TimingConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("eos-output")
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            input_path: None,
            output_dir: default_output_dir(),
            seed: 0,
            csv: CsvConfig::default(),
            eos: EosConfig::default(),
            detect: DetectConfig::default(),
            affinity: AffinityConfig::default(),
            robust_train: RobustTrainConfig::default(),
            synth_bench: SyntheticBenchConfig::default(),
            mislabel_bench: MislabelBenchConfig::default(),
            timing: TimingConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub input_path: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
}

impl RunConfig {
    /// Parses TOML, or JSON when the path ends in `.json`.
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading config {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(format!("invalid TOML config: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid JSON config: {e}")))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::config(format!("config cannot be written as TOML: {e}")))
    }

    /// Merges overrides and propagates the run seed. Returns the config the
    /// run actually uses.
    pub fn resolve(mut self, o: Overrides) -> Result<Self, CliError> {
        match (self.command, o.command) {
            (Some(file), Some(cli)) if file != cli => {
                return Err(CliError::config(format!(
                    "config file is for `{}` but `{}` was requested",
                    file.name(),
                    cli.name()
                )));
            }
            (None, None) => return Err(CliError::config("no command given".into())),
            (_, Some(cli)) => self.command = Some(cli),
            _ => {}
        }
        if let Some(p) = o.input_path {
            self.input_path = Some(p);
        }
        if let Some(p) = o.output_dir {
            self.output_dir = p;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(alpha) = o.alpha {
            self.apply_alpha(alpha)?;
        }
        self.eos.seed = self.seed;
        self.synth_bench.spec.seed = self.seed;
        self.synth_bench.eos.seed = self.seed;
        self.mislabel_bench.experiment.seed = self.seed;
        self.mislabel_bench.experiment.eos.seed = self.seed;
        self.timing.seed = self.seed;
        Ok(self)
    }

    fn apply_alpha(&mut self, alpha: f64) -> Result<(), CliError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(CliError::config(format!("--alpha must be positive, got {alpha}")));
        }
        match self.command.expect("command resolved before alpha") {
            Command::Detect => {
                self.eos.alpha = alpha;
                self.detect.ess_target = None;
            }
            Command::RobustTrain => self.eos.alpha = alpha,
            Command::Affinity => {
                self.affinity.sigma_sq = Some(0.5 * alpha);
                self.affinity.perplexity = None;
            }
            Command::SynthBench => {
                self.synth_bench.eos.alpha = alpha;
                self.synth_bench.ess_target = None;
            }
            Command::MislabelBench => self.mislabel_bench.experiment.alpha_grid = vec![alpha],
            Command::Timing => self.timing.alpha = alpha,
        }
        Ok(())
    }
}
