//! Differentiable architecture search.
//!
//! One search epoch samples `n_arch` architectures from the Gumbel-Softmax
//! relaxation of the logits α, trains the shared angles ω on each for
//! `n_iter` mini-batches, then takes a single Adam step on α using the
//! score-function estimator over the realized losses. The temperature anneals
//! geometrically, and the loop early-stops when the argmax architecture's
//! validation accuracy stops improving.

mod gumbel;
mod optim;

pub use gumbel::{
    gumbel_softmax_sample, gumbel_softmax_with, sample_gumbel, softmax, temperature,
    ArchitectureLogits, GumbelDraw,
};
pub use optim::{adam_step, arch_grad_estimate, sgd_step, AdamState, LossBaseline};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::{DatasetSplit, Sample};
use crate::model::{cnl_perturb_batch, Architecture, CnlConfig, ModelConfig, ModelContext, ParamStore};
use crate::rng::{SeedFactory, Stream};
use crate::{Error, Result};

/// Hyperparameters of the search loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub lr_omega: f64,
    pub lr_alpha: f64,
    pub batch_size: usize,
    pub n_arch: usize,
    /// Mini-batch iterations per sampled architecture. `None` derives
    /// ceil(n_train / (batch_size · n_arch)) so an epoch touches roughly the
    /// whole training set.
    pub n_iter: Option<usize>,
    /// Epoch cap; early stopping usually ends the loop sooner.
    pub epochs: usize,
    pub tau0: f64,
    pub tau_decay: f64,
    /// Epochs without strict validation improvement before stopping.
    pub patience: usize,
    /// Fraction of the training set carved off (from the tail) as validation.
    pub val_fraction: f64,
    /// Post-search training epochs for the selected architecture.
    pub final_epochs: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
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
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        for (what, ok) in [
            ("batch_size", self.batch_size > 0),
            ("n_arch", self.n_arch > 0),
            ("epochs", self.epochs > 0),
            ("patience", self.patience > 0),
        ] {
            if !ok {
                return Err(Error::ZeroSearchParameter { what });
            }
        }
        if let Some(0) = self.n_iter {
            return Err(Error::ZeroSearchParameter { what: "n_iter" });
        }
        if !(self.tau0 > 0.0) {
            return Err(Error::BadTemperature { value: self.tau0 });
        }
        if !(self.tau_decay > 0.0 && self.tau_decay < 1.0) {
            return Err(Error::BadDecay { value: self.tau_decay });
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::BadDecay { value: self.val_fraction });
        }
        Ok(())
    }

    fn derived_n_iter(&self, n_train: usize) -> usize {
        self.n_iter
            .unwrap_or_else(|| n_train.div_ceil(self.batch_size * self.n_arch))
            .max(1)
    }
}

/// One row of the search history.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub tau: f64,
    /// Mean total loss across the epoch's sampled architectures.
    pub mean_loss: f64,
    /// Validation accuracy of the current argmax architecture.
    pub val_accuracy: f64,
}

/// Everything the search produces.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: Architecture,
    pub omega: ParamStore,
    pub alpha: ArchitectureLogits,
    pub history: Vec<EpochRecord>,
    pub val_accuracy: f64,
}

fn carve_validation<'a>(
    train: &'a [Sample],
    val_fraction: f64,
) -> Result<(&'a [Sample], &'a [Sample])> {
    if train.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let n_val = ((train.len() as f64 * val_fraction).floor() as usize).max(1);
    if n_val >= train.len() {
        return Err(Error::InsufficientSamples { needed: n_val + 1, available: train.len() });
    }
    let cut = train.len() - n_val;
    Ok((&train[..cut], &train[cut..]))
}

fn draw_batch<'a>(train: &'a [Sample], k: usize, rng: &mut ChaCha8Rng) -> Vec<&'a Sample> {
    // Uniform with replacement: batch composition is independent of epoch
    // boundaries and stays well-defined when k exceeds the training set.
    (0..k).map(|_| &train[rng.gen_range(0..train.len())]).collect()
}

fn train_iteration(
    ctx: &mut ModelContext,
    batch: &[&Sample],
    cnl: &CnlConfig,
    lr: f64,
    cnl_rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let owned: Vec<Sample> = batch.iter().map(|&s| s.clone()).collect();
    let features: Vec<Vec<f64>> = owned.iter().map(|s| s.features.clone()).collect();
    let perturbed = cnl_perturb_batch(&features, cnl.h, cnl_rng);
    let loss = ctx.total_loss_frozen(&owned, &perturbed, cnl.gamma)?;
    let grads = ctx.omega_loss_grads(&owned, &perturbed, cnl.gamma)?;
    sgd_step(ctx.store_mut(), &grads, lr)?;
    Ok(loss)
}

/// Runs the architecture search and returns the argmax architecture, the
/// trained shared angles, the final logits, and the per-epoch history.
pub fn search_run(
    dataset: &DatasetSplit,
    cfg: &ModelConfig,
    scfg: &SearchConfig,
    cnl: &CnlConfig,
    seeds: &SeedFactory,
) -> Result<SearchOutcome> {
    scfg.validate()?;
    let (train, val) = carve_validation(&dataset.train, scfg.val_fraction)?;
    let n_iter = scfg.derived_n_iter(train.len());

    let mut omega = ParamStore::random_init(cfg, &mut seeds.stream(Stream::OmegaInit));
    let mut alpha = ArchitectureLogits::zeros(cfg.n_layers(), cfg.gate_pool().len());
    let mut adam = AdamState::new(cfg.n_layers(), cfg.gate_pool().len());
    let mut baseline = LossBaseline::new(0.9)?;

    let mut gumbel_rng = seeds.stream(Stream::Gumbel);
    let mut cnl_rng = seeds.stream(Stream::Cnl);
    let mut batch_rng = seeds.stream(Stream::MiniBatch);

    let mut history = Vec::new();
    let mut best_val = f64::NEG_INFINITY;
    let mut stale_epochs = 0usize;
    let mut last_val = 0.0;

    for epoch in 0..scfg.epochs {
        let tau = temperature(epoch, scfg.tau0, scfg.tau_decay);
        let mut draws: Vec<(GumbelDraw, f64)> = Vec::with_capacity(scfg.n_arch);
        for _ in 0..scfg.n_arch {
            let draw = gumbel_softmax_sample(&alpha, tau, cfg, &mut gumbel_rng)?;
            let mut ctx = ModelContext::new(cfg.clone(), draw.hard.clone(), omega)?;
            let mut loss_sum = 0.0;
            for _ in 0..n_iter {
                let batch = draw_batch(train, scfg.batch_size, &mut batch_rng);
                loss_sum += train_iteration(&mut ctx, &batch, cnl, scfg.lr_omega, &mut cnl_rng)?;
            }
            omega = ctx.into_store();
            draws.push((draw, loss_sum / n_iter as f64));
        }

        let b = baseline.value_or(draws[0].1);
        let agrad = arch_grad_estimate(&draws, &alpha, b)?;
        adam_step(&mut adam, &mut alpha, &agrad, scfg.lr_alpha)?;
        for &(_, loss) in &draws {
            baseline.observe(loss);
        }

        let current_best = alpha.argmax_architecture(cfg)?;
        let val_ctx = ModelContext::new(cfg.clone(), current_best, omega.clone())?;
        let val_acc = val_ctx.accuracy(val)?;
        last_val = val_acc;
        let mean_loss = draws.iter().map(|&(_, l)| l).sum::<f64>() / draws.len() as f64;
        history.push(EpochRecord { epoch, tau, mean_loss, val_accuracy: val_acc });

        if val_acc > best_val {
            best_val = val_acc;
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= scfg.patience {
                break;
            }
        }
    }

    let best = alpha.argmax_architecture(cfg)?;
    Ok(SearchOutcome { best, omega, alpha, history, val_accuracy: last_val })
}

/// Trains a fixed architecture for `scfg.final_epochs` full passes with the
/// same SGD/CNL objective the search used. RNG streams are indexed at 1 so
/// final training never replays the search's draws.
pub fn final_train(
    dataset: &DatasetSplit,
    cfg: &ModelConfig,
    arch: &Architecture,
    omega: ParamStore,
    scfg: &SearchConfig,
    cnl: &CnlConfig,
    seeds: &SeedFactory,
) -> Result<(ParamStore, Vec<f64>)> {
    scfg.validate()?;
    let (train, _) = carve_validation(&dataset.train, scfg.val_fraction)?;
    let iters_per_epoch = train.len().div_ceil(scfg.batch_size).max(1);
    let mut cnl_rng = seeds.stream_indexed(Stream::Cnl, 1);
    let mut batch_rng = seeds.stream_indexed(Stream::MiniBatch, 1);
    let mut ctx = ModelContext::new(cfg.clone(), arch.clone(), omega)?;
    let mut epoch_losses = Vec::with_capacity(scfg.final_epochs);
    for _ in 0..scfg.final_epochs {
        let mut loss_sum = 0.0;
        for _ in 0..iters_per_epoch {
            let batch = draw_batch(train, scfg.batch_size, &mut batch_rng);
            loss_sum += train_iteration(&mut ctx, &batch, cnl, scfg.lr_omega, &mut cnl_rng)?;
        }
        epoch_losses.push(loss_sum / iters_per_epoch as f64);
    }
    Ok((ctx.into_store(), epoch_losses))
}
