//! JSON experiment files. Powers and noise density are given in dBm and
//! converted to watts once, when the file is parsed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aircomp::InterferenceMode;
use crate::channel::{dbm_to_watts, SystemConfig};
use crate::error::{Error, Result};
use crate::fl::{Aggregator, ModelKind, RunConfig, TaskConfig};
use crate::harness::{SweepAxis, SweepSettings, SyntheticGradients};
use crate::ris::PhaseImpairment;
use crate::schemes::Strategy;

/// Schema version this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// File form of [`SystemConfig`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemFile {
    pub targets: usize,
    pub interferers: usize,
    pub ris_elements: usize,
    pub max_power_dbm: f64,
    /// Defaults to `max_power_dbm`.
    pub interferer_power_dbm: Option<f64>,
    pub noise_psd_dbm_hz: f64,
    pub bandwidth_hz: f64,
    pub gradient_bound: f64,
    pub pathloss_exponent: f64,
    pub ps_ris_distance_m: f64,
    pub device_disk_radius_m: f64,
    pub reference_gain: f64,
    pub seed: u64,
}

impl Default for SystemFile {
    fn default() -> Self {
        let d = SystemConfig::default();
        Self {
            targets: d.targets,
            interferers: d.interferers,
            ris_elements: d.ris_elements,
            max_power_dbm: 0.0,
            interferer_power_dbm: None,
            noise_psd_dbm_hz: -140.0,
            bandwidth_hz: d.bandwidth,
            gradient_bound: d.gradient_bound,
            pathloss_exponent: d.pathloss_exponent,
            ps_ris_distance_m: d.ps_ris_distance,
            device_disk_radius_m: d.device_disk_radius,
            reference_gain: d.reference_gain,
            seed: d.seed,
        }
    }
}

impl SystemFile {
    pub fn to_system(&self) -> Result<SystemConfig> {
        let c = SystemConfig {
            targets: self.targets,
            interferers: self.interferers,
            ris_elements: self.ris_elements,
            max_power: dbm_to_watts(self.max_power_dbm),
            interferer_power: self.interferer_power_dbm.map(dbm_to_watts),
            noise_psd: dbm_to_watts(self.noise_psd_dbm_hz),
            bandwidth: self.bandwidth_hz,
            gradient_bound: self.gradient_bound,
            pathloss_exponent: self.pathloss_exponent,
            ps_ris_distance: self.ps_ris_distance_m,
            device_disk_radius: self.device_disk_radius_m,
            reference_gain: self.reference_gain,
            seed: self.seed,
        };
        c.validate().map_err(|e| Error::Config(format!("system: {e}")))?;
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl Default for SweepFile {
    fn default() -> Self {
        Self {
            axis: SweepAxis::RisElements,
            values: vec![64.0, 128.0, 256.0, 512.0, 1024.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum DatasetSource {
    Synthetic(TaskConfig),
    /// An MNIST directory holding the four standard IDX files.
    Mnist {
        dir: PathBuf,
        #[serde(default = "default_labels_per_client")]
        labels_per_client: usize,
        #[serde(default = "default_train_per_client")]
        train_per_client: usize,
        #[serde(default = "default_test_samples")]
        test_samples: usize,
    },
}

fn default_labels_per_client() -> usize {
    TaskConfig::default().labels_per_client
}

fn default_train_per_client() -> usize {
    TaskConfig::default().train_per_client
}

fn default_test_samples() -> usize {
    TaskConfig::default().test_samples
}

impl Default for DatasetSource {
    fn default() -> Self {
        Self::Synthetic(TaskConfig::default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingFile {
    pub rounds: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub model: ModelKind,
    pub dataset: DatasetSource,
    /// Rounds of the pilot that sets the gradient bound; `null` keeps
    /// `system.gradient_bound`.
    pub pilot_rounds: Option<usize>,
    /// Also train with error-free averaging.
    pub include_ideal: bool,
}

impl Default for TrainingFile {
    fn default() -> Self {
        let r = RunConfig::default();
        Self {
            rounds: r.rounds,
            learning_rate: r.learning_rate,
            batch_size: r.batch_size,
            model: r.model,
            dataset: DatasetSource::default(),
            pilot_rounds: r.pilot_rounds,
            include_ideal: true,
        }
    }
}

/// Learning constants for the convergence bound; any left out are measured
/// by a pilot run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundFile {
    pub smoothness: Option<f64>,
    pub dissimilarity: Option<f64>,
    pub sgd_variance: Option<f64>,
    pub initial_gap: Option<f64>,
    /// Defaults to `training.rounds`.
    pub rounds: Option<u64>,
    pub pilot_rounds: Option<usize>,
}

/// A complete experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub system: SystemFile,
    pub strategies: Vec<Strategy>,
    pub impairment: PhaseImpairment,
    pub interference: InterferenceMode,
    pub trials: u64,
    pub seeds: Vec<u64>,
    pub sweep: SweepFile,
    pub gradients: SyntheticGradients,
    pub training: TrainingFile,
    pub bound: BoundFile,
    /// Multiplies every denoising factor; anything but 1 biases the schemes.
    pub lambda_scale: f64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            system: SystemFile::default(),
            strategies: vec![Strategy::SchemeI, Strategy::SchemeII],
            impairment: PhaseImpairment::Ideal,
            interference: InterferenceMode::RandomUnit,
            trials: 100_000,
            seeds: vec![0],
            sweep: SweepFile::default(),
            gradients: SyntheticGradients::default(),
            training: TrainingFile::default(),
            bound: BoundFile::default(),
            lambda_scale: 1.0,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates; errors carry the JSON line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_owned()));
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        self.system.to_system()?;
        if self.strategies.is_empty() {
            return fail("strategies must not be empty");
        }
        if self.seeds.is_empty() {
            return fail("seeds must not be empty");
        }
        if self.sweep.values.is_empty() {
            return fail("sweep.values must not be empty");
        }
        if !(self.lambda_scale > 0.0 && self.lambda_scale.is_finite()) {
            return fail("lambda_scale must be positive");
        }
        if self.gradients.dim <= self.system.targets {
            return fail("gradients.dim must exceed system.targets");
        }
        if !(0.0..=1.0).contains(&self.gradients.correlation) {
            return fail("gradients.correlation must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn system_config(&self) -> Result<SystemConfig> {
        self.system.to_system()
    }

    pub fn sweep_settings(&self) -> SweepSettings {
        SweepSettings {
            strategies: self.strategies.clone(),
            impairment: self.impairment,
            interference: self.interference,
            gradients: self.gradients,
            trials: self.trials,
            lambda_scale: self.lambda_scale,
        }
    }

    /// One run per aggregator: ideal averaging first when requested, then
    /// every strategy over the air.
    pub fn run_configs(&self) -> Result<Vec<RunConfig>> {
        let system = self.system_config()?;
        let t = &self.training;
        let task = match &t.dataset {
            DatasetSource::Synthetic(task) => task.clone(),
            DatasetSource::Mnist { labels_per_client, train_per_client, test_samples, .. } => TaskConfig {
                labels_per_client: *labels_per_client,
                train_per_client: *train_per_client,
                test_samples: *test_samples,
                features: 784,
                classes: 10,
                ..TaskConfig::default()
            },
        };
        let mut aggregators = Vec::new();
        if t.include_ideal {
            aggregators.push(Aggregator::Ideal);
        }
        aggregators.extend(self.strategies.iter().map(|&strategy| Aggregator::OverTheAir {
            strategy,
            impairment: self.impairment,
            interference: self.interference,
        }));
        let runs: Vec<RunConfig> = aggregators
            .into_iter()
            .map(|aggregator| RunConfig {
                system: system.clone(),
                task: task.clone(),
                model: t.model,
                aggregator,
                rounds: t.rounds,
                learning_rate: t.learning_rate,
                batch_size: t.batch_size,
                lambda_scale: self.lambda_scale,
                pilot_rounds: t.pilot_rounds,
            })
            .collect();
        for r in &runs {
            r.validate().map_err(|e| Error::Config(format!("training: {e}")))?;
        }
        Ok(runs)
    }
}
