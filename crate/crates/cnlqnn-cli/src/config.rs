//! The experiment configuration: a single flat JSON document with defaults
//! for every key, plus validation into the library's typed configs and a
//! canonical content hash for the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use cnlqnn::attacks::{AttackConfig, AttackMethod};
use cnlqnn::model::{CnlConfig, ModelConfig};
use cnlqnn::search::SearchConfig;
use cnlqnn::sim::noise::{NoiseKind, NoiseSpec};
use cnlqnn::sim::GateKind;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Mnist,
    Fashion,
    Cifar10,
    Synthetic,
}

impl DatasetKind {
    pub fn name(&self) -> &'static str {
        match self {
            DatasetKind::Mnist => "mnist",
            DatasetKind::Fashion => "fashion",
            DatasetKind::Cifar10 => "cifar10",
            DatasetKind::Synthetic => "synthetic",
        }
    }
}

/// Every knob of one experiment. All keys are optional in the JSON file;
/// unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetKind,
    pub data_dir: String,
    pub class_pair: (u8, u8),
    pub grid: usize,
    pub layers: usize,
    pub gate_pool: Vec<String>,
    pub n_train: usize,
    pub n_test: usize,
    pub lr_omega: f64,
    pub lr_alpha: f64,
    pub batch_size: usize,
    pub n_arch: usize,
    pub n_iter: Option<usize>,
    pub epochs: usize,
    pub tau0: f64,
    pub tau_decay: f64,
    pub patience: usize,
    pub val_fraction: f64,
    pub final_epochs: usize,
    pub cnl_enabled: bool,
    pub cnl_h: f64,
    pub cnl_gamma: f64,
    pub attack_methods: Vec<String>,
    pub attack_epsilons: Vec<f64>,
    pub attack_steps: usize,
    pub noise_kinds: Vec<String>,
    pub noise_probs: Vec<f64>,
    pub noise_trajectories: usize,
    pub noise_resamples: usize,
    pub noise_max_samples: Option<usize>,
    pub seed: u64,
    pub out_dir: String,
    pub single_thread_reproducible: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetKind::Synthetic,
            data_dir: "data".into(),
            class_pair: (0, 1),
            grid: 3,
            layers: 3,
            gate_pool: GateKind::ALL.iter().map(|k| k.name().to_string()).collect(),
            n_train: 2000,
            n_test: 500,
            lr_omega: 0.01,
            lr_alpha: 0.01,
            batch_size: 32,
            n_arch: 3,
            n_iter: None,
            epochs: 20,
            tau0: 5.0,
            tau_decay: 0.95,
            patience: 5,
            val_fraction: 0.2,
            final_epochs: 5,
            cnl_enabled: true,
            cnl_h: 0.02,
            cnl_gamma: 1.0,
            attack_methods: AttackMethod::ALL.iter().map(|m| m.name().to_string()).collect(),
            attack_epsilons: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            attack_steps: 10,
            noise_kinds: NoiseKind::ALL.iter().map(|k| k.name().to_string()).collect(),
            noise_probs: vec![0.05, 0.08, 0.10],
            noise_trajectories: 100,
            noise_resamples: 3,
            noise_max_samples: None,
            seed: 42,
            out_dir: "runs/default".into(),
            single_thread_reproducible: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn n_qubits(&self) -> usize {
        self.grid * self.grid
    }

    /// The effective noise-layer settings: disabling the layer zeroes both
    /// the perturbation scale and the extra loss weight.
    pub fn effective_cnl(&self) -> (f64, f64) {
        if self.cnl_enabled {
            (self.cnl_h, self.cnl_gamma)
        } else {
            (0.0, 0.0)
        }
    }

    /// Checks ranges and cross-field constraints, resolving names into the
    /// library's typed configs.
    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        if !(1..=4).contains(&self.grid) {
            return Err(CliError::config(format!(
                "grid {} outside 1..=4 (n_qubits = grid² must stay within 16)",
                self.grid
            )));
        }
        if self.class_pair.0 == self.class_pair.1 {
            return Err(CliError::config("class_pair needs two distinct classes"));
        }
        if self.n_train == 0 || self.n_test == 0 {
            return Err(CliError::config("n_train and n_test must be positive"));
        }

        let pool = self
            .gate_pool
            .iter()
            .map(|name| {
                GateKind::from_name(name)
                    .ok_or_else(|| CliError::config(format!("unknown gate kind {name:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let model = ModelConfig::new(self.n_qubits(), self.layers, pool)
            .map_err(|e| CliError::config(e.to_string()))?;

        let search = SearchConfig {
            lr_omega: self.lr_omega,
            lr_alpha: self.lr_alpha,
            batch_size: self.batch_size,
            n_arch: self.n_arch,
            n_iter: self.n_iter,
            epochs: self.epochs,
            tau0: self.tau0,
            tau_decay: self.tau_decay,
            patience: self.patience,
            val_fraction: self.val_fraction,
            final_epochs: self.final_epochs,
        };
        search.validate().map_err(|e| CliError::config(e.to_string()))?;

        let (h, gamma) = self.effective_cnl();
        let cnl = CnlConfig::new(h, gamma).map_err(|e| CliError::config(e.to_string()))?;

        let mut attacks = Vec::new();
        for name in &self.attack_methods {
            let method = AttackMethod::from_name(name)
                .ok_or_else(|| CliError::config(format!("unknown attack method {name:?}")))?;
            for &epsilon in &self.attack_epsilons {
                let cfg = AttackConfig {
                    steps: self.attack_steps,
                    ..AttackConfig::new(method, epsilon)
                        .map_err(|e| CliError::config(e.to_string()))?
                };
                cfg.validate().map_err(|e| CliError::config(e.to_string()))?;
                attacks.push(cfg);
            }
        }

        let mut noise = Vec::new();
        for name in &self.noise_kinds {
            let kind = NoiseKind::from_name(name)
                .ok_or_else(|| CliError::config(format!("unknown noise channel {name:?}")))?;
            for &prob in &self.noise_probs {
                noise.push(NoiseSpec::new(kind, prob).map_err(|e| CliError::config(e.to_string()))?);
            }
        }
        if self.noise_trajectories == 0 || self.noise_resamples == 0 {
            return Err(CliError::config(
                "noise_trajectories and noise_resamples must be positive",
            ));
        }

        Ok(ResolvedExperiment { model, search, cnl, attacks, noise })
    }

    /// SHA-256 over the canonical (sorted-key) JSON of every semantically
    /// relevant field. Where outputs go (`out_dir`) and how they are computed
    /// (`single_thread_reproducible`) do not change what they are, so both
    /// are excluded.
    pub fn content_hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        let map = value.as_object_mut().expect("config is a JSON object");
        map.remove("out_dir");
        map.remove("single_thread_reproducible");
        let mut canonical = String::new();
        write_canonical(&value, &mut canonical);
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in digest {
            let _ = write!(hex, "{byte:02x}");
        }
        hex
    }
}

/// Serializes a JSON value with object keys in sorted order, independent of
/// insertion order, so the hash is stable under re-keying.
fn write_canonical(value: &serde_json::Value, out: &mut String) {
    match value {
        serde_json::Value::Object(map) => {
            let sorted: BTreeMap<_, _> = map.iter().collect();
            out.push('{');
            for (i, (k, v)) in sorted.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}:", serde_json::Value::String((*k).clone()));
                write_canonical(v, out);
            }
            out.push('}');
        }
        serde_json::Value::Array(items) => {
            out.push('[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(v, out);
            }
            out.push(']');
        }
        leaf => {
            let _ = write!(out, "{leaf}");
        }
    }
}

/// The typed view of a valid config.
pub struct ResolvedExperiment {
    pub model: ModelConfig,
    pub search: SearchConfig,
    pub cnl: CnlConfig,
    pub attacks: Vec<AttackConfig>,
    pub noise: Vec<NoiseSpec>,
}
