//! Run-directory artifacts: the manifest, learned architecture and weights,
//! and CSV results. All writes are atomic (temp file + rename) and all
//! serialization is deterministic, which is what makes the CLI's
//! reproducibility contract checkable byte for byte.

use std::collections::BTreeMap;
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian};
use cnlqnn::model::{Architecture, ModelConfig, ParamStore};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

pub const ARTIFACT_VERSION: u32 = 1;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.json";
pub const ARCHITECTURE_FILE: &str = "architecture.json";
pub const OMEGA_BIN_FILE: &str = "omega.bin";
pub const OMEGA_HEADER_FILE: &str = "omega.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const ATTACKS_FILE: &str = "attacks.csv";
pub const NOISE_FILE: &str = "noise.csv";
pub const ABLATE_FILE: &str = "ablate.csv";
pub const REPORT_FILE: &str = "report.csv";

/// Writes via a sibling temp file and rename, so readers never observe a
/// partially written artifact.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = parent {
        std::fs::create_dir_all(dir)?;
    }
    let mut name = path
        .file_name()
        .ok_or_else(|| CliError::Other(format!("not a file path: {}", path.display())))?
        .to_os_string();
    name.push(".tmp");
    let tmp = path.with_file_name(name);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Other(format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|_| CliError::artifacts(format!("missing {}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::artifacts(format!("corrupt {}: {e}", path.display())))
}

/// Provenance record for one run directory. Written with `complete: false`
/// before any heavy work and finalized afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub deterministic: bool,
    /// Unix milliseconds; zero in deterministic mode so outputs stay
    /// byte-identical across runs.
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    /// Wall-clock seconds per phase; zeros in deterministic mode.
    pub phase_seconds: BTreeMap<String, f64>,
    pub complete: bool,
}

impl Manifest {
    pub fn begin(config: &ExperimentConfig) -> Self {
        let deterministic = config.single_thread_reproducible;
        Self {
            artifact_version: ARTIFACT_VERSION,
            config_hash: config.content_hash(),
            seed: config.seed,
            deterministic,
            started_unix_ms: if deterministic { 0 } else { now_ms() },
            finished_unix_ms: 0,
            phase_seconds: BTreeMap::new(),
            complete: false,
        }
    }

    pub fn record_phase(&mut self, name: &str, seconds: f64) {
        let value = if self.deterministic { 0.0 } else { seconds };
        self.phase_seconds.insert(name.to_string(), value);
    }

    pub fn finish(&mut self) {
        self.finished_unix_ms = if self.deterministic { 0 } else { now_ms() };
        self.complete = true;
    }
}

fn now_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// `architecture.json`: the searched result, readable without the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureFile {
    pub n_qubits: usize,
    pub gate_pool: Vec<String>,
    pub choices: Vec<usize>,
    pub kinds: Vec<String>,
}

impl ArchitectureFile {
    pub fn new(arch: &Architecture, cfg: &ModelConfig) -> Self {
        Self {
            n_qubits: cfg.n_qubits(),
            gate_pool: cfg.gate_pool().iter().map(|k| k.name().to_string()).collect(),
            choices: arch.choices().to_vec(),
            kinds: arch.kinds(cfg).iter().map(|k| k.name().to_string()).collect(),
        }
    }

    /// Reconstructs the typed architecture, revalidating against `cfg`.
    pub fn to_architecture(&self, cfg: &ModelConfig) -> Result<Architecture> {
        let stored: Vec<String> = cfg.gate_pool().iter().map(|k| k.name().to_string()).collect();
        if stored != self.gate_pool || cfg.n_qubits() != self.n_qubits {
            return Err(CliError::artifacts(
                "architecture.json does not match the run's config".to_string(),
            ));
        }
        Architecture::new(self.choices.clone(), cfg)
            .map_err(|e| CliError::artifacts(format!("architecture.json invalid: {e}")))
    }
}

/// Shape header for `omega.bin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaHeader {
    pub total: usize,
    pub n_layers: usize,
    pub gate_pool: Vec<String>,
    pub per_layer_counts: Vec<usize>,
}

impl OmegaHeader {
    pub fn new(cfg: &ModelConfig) -> Self {
        let per_layer_counts: Vec<usize> = cfg
            .gate_pool()
            .iter()
            .map(|&k| if k.parameterized() { cfg.instances(k) } else { 0 })
            .collect();
        let per_layer: usize = per_layer_counts.iter().sum();
        Self {
            total: per_layer * cfg.n_layers(),
            n_layers: cfg.n_layers(),
            gate_pool: cfg.gate_pool().iter().map(|k| k.name().to_string()).collect(),
            per_layer_counts,
        }
    }
}

/// Writes `omega.bin` (flat little-endian f64, layer-major) plus its JSON
/// shape header.
pub fn write_omega(dir: &Path, store: &ParamStore, cfg: &ModelConfig) -> Result<()> {
    let flat = store.as_slice();
    let mut bytes = vec![0u8; flat.len() * 8];
    LittleEndian::write_f64_into(flat, &mut bytes);
    atomic_write(&dir.join(OMEGA_BIN_FILE), &bytes)?;
    write_json(&dir.join(OMEGA_HEADER_FILE), &OmegaHeader::new(cfg))
}

/// Reads the weights back, checking the header against `cfg`.
pub fn read_omega(dir: &Path, cfg: &ModelConfig) -> Result<ParamStore> {
    let header: OmegaHeader = read_json(&dir.join(OMEGA_HEADER_FILE))?;
    let expected = OmegaHeader::new(cfg);
    if header != expected {
        return Err(CliError::artifacts(format!(
            "omega.json shape {:?} does not match the run's config {:?}",
            header, expected
        )));
    }
    let path = dir.join(OMEGA_BIN_FILE);
    let bytes = std::fs::read(&path)
        .map_err(|_| CliError::artifacts(format!("missing {}", path.display())))?;
    if bytes.len() != header.total * 8 {
        return Err(CliError::artifacts(format!(
            "{} holds {} bytes, expected {}",
            path.display(),
            bytes.len(),
            header.total * 8
        )));
    }
    let mut flat = vec![0.0f64; header.total];
    LittleEndian::read_f64_into(&bytes, &mut flat);
    ParamStore::from_flat(cfg, flat)
        .map_err(|e| CliError::artifacts(format!("omega.bin invalid: {e}")))
}

/// Serializes rows into a CSV body with the given header line. Fields are
/// plain names and numbers, so no quoting is needed; floats use Rust's
/// shortest-roundtrip formatting.
pub fn csv_document(header: &str, rows: &[Vec<String>]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Minimal CSV reader for the crate's own output files.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|_| CliError::artifacts(format!("missing {}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::artifacts(format!("{} is empty", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    Ok((header, rows))
}
