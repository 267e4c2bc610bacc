//! Gumbel-Softmax sampling over the gate pool and the temperature schedule.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Architecture, ModelConfig};
use crate::{Error, Result};

/// Architecture logits α, one row per layer and one column per pool kind.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureLogits {
    rows: Vec<Vec<f64>>,
}

impl ArchitectureLogits {
    /// Uniform categorical start: all logits zero.
    pub fn zeros(n_layers: usize, pool_len: usize) -> Self {
        Self { rows: vec![vec![0.0; pool_len]; n_layers] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        if width == 0 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::LogitsShapeMismatch {
                got: format!("{:?}", rows.iter().map(Vec::len).collect::<Vec<_>>()),
                expected: "rectangular, at least one column".into(),
            });
        }
        Ok(Self { rows })
    }

    pub fn n_layers(&self) -> usize {
        self.rows.len()
    }

    pub fn pool_len(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn rows_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.rows
    }

    /// Softmax probabilities per layer.
    pub fn probabilities(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| softmax(r)).collect()
    }

    fn check_against(&self, cfg: &ModelConfig) -> Result<()> {
        if self.n_layers() != cfg.n_layers() || self.pool_len() != cfg.gate_pool().len() {
            return Err(Error::LogitsShapeMismatch {
                got: format!("{}x{}", self.n_layers(), self.pool_len()),
                expected: format!("{}x{}", cfg.n_layers(), cfg.gate_pool().len()),
            });
        }
        Ok(())
    }

    /// The maximum-probability architecture: per-layer argmax of α, first
    /// index winning ties.
    pub fn argmax_architecture(&self, cfg: &ModelConfig) -> Result<Architecture> {
        self.check_against(cfg)?;
        let choices = self.rows.iter().map(|r| argmax(r)).collect();
        Architecture::new(choices, cfg)
    }
}

/// One relaxed sample: per-layer soft weights on the probability simplex and
/// the hard architecture from the same perturbed logits.
#[derive(Debug, Clone, PartialEq)]
pub struct GumbelDraw {
    pub soft: Vec<Vec<f64>>,
    pub hard: Architecture,
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// One standard Gumbel(0, 1) variate, −ln(−ln u) with u uniform on (0, 1).
pub fn sample_gumbel(rng: &mut ChaCha8Rng) -> f64 {
    // gen() covers [0, 1); skip an exact zero so the log is finite.
    let mut u: f64 = rng.gen();
    while u == 0.0 {
        u = rng.gen();
    }
    -(-u.ln()).ln()
}

/// Deterministic core of the sampler: the caller supplies the Gumbel noise,
/// one value per (layer, pool kind).
pub fn gumbel_softmax_with(
    alpha: &ArchitectureLogits,
    tau: f64,
    gumbels: &[Vec<f64>],
    cfg: &ModelConfig,
) -> Result<GumbelDraw> {
    if !(tau > 0.0) {
        return Err(Error::BadTemperature { value: tau });
    }
    alpha.check_against(cfg)?;
    if gumbels.len() != alpha.n_layers() || gumbels.iter().any(|g| g.len() != alpha.pool_len()) {
        return Err(Error::LogitsShapeMismatch {
            got: format!("{} gumbel row(s)", gumbels.len()),
            expected: format!("{}x{}", alpha.n_layers(), alpha.pool_len()),
        });
    }
    let mut soft = Vec::with_capacity(alpha.n_layers());
    let mut choices = Vec::with_capacity(alpha.n_layers());
    for (row, g) in alpha.rows.iter().zip(gumbels) {
        let pi = softmax(row);
        let perturbed: Vec<f64> = pi.iter().zip(g).map(|(&p, &g)| p.ln() + g).collect();
        let scaled: Vec<f64> = perturbed.iter().map(|&v| v / tau).collect();
        soft.push(softmax(&scaled));
        choices.push(argmax(&perturbed));
    }
    Ok(GumbelDraw { soft, hard: Architecture::new(choices, cfg)? })
}

/// Draws fresh Gumbel noise and produces a soft/hard architecture sample.
pub fn gumbel_softmax_sample(
    alpha: &ArchitectureLogits,
    tau: f64,
    cfg: &ModelConfig,
    rng: &mut ChaCha8Rng,
) -> Result<GumbelDraw> {
    if !(tau > 0.0) {
        return Err(Error::BadTemperature { value: tau });
    }
    alpha.check_against(cfg)?;
    let gumbels: Vec<Vec<f64>> = (0..alpha.n_layers())
        .map(|_| (0..alpha.pool_len()).map(|_| sample_gumbel(rng)).collect())
        .collect();
    gumbel_softmax_with(alpha, tau, &gumbels, cfg)
}

/// τ(epoch) = τ0 · decay^epoch, computed by repeated multiplication so that
/// consecutive values satisfy τ(e+1) = τ(e)·decay bit-for-bit.
pub fn temperature(epoch: usize, tau0: f64, decay: f64) -> f64 {
    let mut tau = tau0;
    for _ in 0..epoch {
        tau *= decay;
    }
    tau
}
