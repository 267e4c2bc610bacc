//! A small dense classifier with exact backpropagation.
//!
//! One hidden tanh layer and a tanh output put predictions on the same
//! (-1, 1) scale as the quantum readout, so the attack code drives both
//! models through one interface. The net doubles as the black-box transfer
//! surrogate, which needs exact input gradients.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::Sample;
use crate::model::{accuracy_of, loss_mse};
use crate::rng::{SeedFactory, Stream};
use crate::{Error, Result};

/// Dense-network hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl MlpConfig {
    pub fn new(input_dim: usize) -> Self {
        Self { input_dim, hidden: 32, lr: 0.05, epochs: 50, batch_size: 32 }
    }

    pub fn validate(&self) -> Result<()> {
        for (what, ok) in [
            ("input_dim", self.input_dim > 0),
            ("hidden", self.hidden > 0),
            ("epochs", self.epochs > 0),
            ("batch_size", self.batch_size > 0),
        ] {
            if !ok {
                return Err(Error::ZeroSearchParameter { what });
            }
        }
        Ok(())
    }
}

/// ŷ = tanh(W2·tanh(W1·x + b1) + b2).
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    cfg: MlpConfig,
    w1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
    epochs_trained: usize,
}

/// Gradients of the squared error with respect to every parameter and the
/// input, shaped like the network.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub x: Vec<f64>,
}

impl Mlp {
    /// Weights uniform on ±1/√fan_in, biases zero.
    pub fn init(cfg: MlpConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        cfg.validate()?;
        let s1 = 1.0 / (cfg.input_dim as f64).sqrt();
        let w1 = (0..cfg.hidden)
            .map(|_| (0..cfg.input_dim).map(|_| rng.gen_range(-s1..s1)).collect())
            .collect();
        let s2 = 1.0 / (cfg.hidden as f64).sqrt();
        let w2 = (0..cfg.hidden).map(|_| rng.gen_range(-s2..s2)).collect();
        Ok(Self {
            b1: vec![0.0; cfg.hidden],
            b2: 0.0,
            cfg,
            w1,
            w2,
            epochs_trained: 0,
        })
    }

    pub fn cfg(&self) -> &MlpConfig {
        &self.cfg
    }

    pub fn is_trained(&self) -> bool {
        self.epochs_trained > 0
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.cfg.input_dim {
            return Err(Error::MlpDimensionMismatch { got: x.len(), expected: self.cfg.input_dim });
        }
        Ok(())
    }

    fn hidden_activations(&self, x: &[f64]) -> Vec<f64> {
        self.w1
            .iter()
            .zip(&self.b1)
            .map(|(row, &b)| (row.iter().zip(x).map(|(&w, &v)| w * v).sum::<f64>() + b).tanh())
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let h = self.hidden_activations(x);
        Ok((self.w2.iter().zip(&h).map(|(&w, &v)| w * v).sum::<f64>() + self.b2).tanh())
    }

    /// Exact chain-rule gradients of (y − ŷ)².
    pub fn grads(&self, x: &[f64], y: f64) -> Result<MlpGrads> {
        self.check_dim(x)?;
        let h = self.hidden_activations(x);
        let yhat = (self.w2.iter().zip(&h).map(|(&w, &v)| w * v).sum::<f64>() + self.b2).tanh();
        // dL/dz2 through the output tanh.
        let dz2 = -2.0 * (y - yhat) * (1.0 - yhat * yhat);
        let gw2: Vec<f64> = h.iter().map(|&v| dz2 * v).collect();
        let dz1: Vec<f64> = self
            .w2
            .iter()
            .zip(&h)
            .map(|(&w, &v)| dz2 * w * (1.0 - v * v))
            .collect();
        let gw1: Vec<Vec<f64>> = dz1.iter().map(|&d| x.iter().map(|&v| d * v).collect()).collect();
        let gx: Vec<f64> = (0..self.cfg.input_dim)
            .map(|i| dz1.iter().zip(&self.w1).map(|(&d, row)| d * row[i]).sum())
            .collect();
        Ok(MlpGrads { w1: gw1, b1: dz1, w2: gw2, b2: dz2, x: gx })
    }

    /// d(y − ŷ)²/dx, the quantity attacks consume.
    pub fn loss_input_grad(&self, x: &[f64], y: f64) -> Result<Vec<f64>> {
        Ok(self.grads(x, y)?.x)
    }

    fn apply_batch(&mut self, batch: &[&Sample], lr: f64) -> Result<f64> {
        let inv = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        let mut acc: Option<MlpGrads> = None;
        for s in batch {
            loss += loss_mse(s.label, self.forward(&s.features)?);
            let g = self.grads(&s.features, s.label)?;
            match &mut acc {
                None => acc = Some(g),
                Some(a) => {
                    for (ar, gr) in a.w1.iter_mut().zip(&g.w1) {
                        for (av, &gv) in ar.iter_mut().zip(gr) {
                            *av += gv;
                        }
                    }
                    for (av, &gv) in a.b1.iter_mut().zip(&g.b1) {
                        *av += gv;
                    }
                    for (av, &gv) in a.w2.iter_mut().zip(&g.w2) {
                        *av += gv;
                    }
                    a.b2 += g.b2;
                }
            }
        }
        let g = acc.ok_or(Error::EmptyBatch)?;
        for (wr, gr) in self.w1.iter_mut().zip(&g.w1) {
            for (w, &gv) in wr.iter_mut().zip(gr) {
                *w -= lr * inv * gv;
            }
        }
        for (b, &gv) in self.b1.iter_mut().zip(&g.b1) {
            *b -= lr * inv * gv;
        }
        for (w, &gv) in self.w2.iter_mut().zip(&g.w2) {
            *w -= lr * inv * gv;
        }
        self.b2 -= lr * inv * g.b2;
        Ok(loss * inv)
    }

    /// Mini-batch SGD over shuffled epochs; returns the mean pre-update loss
    /// per epoch.
    pub fn train(&mut self, samples: &[Sample], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        if samples.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        let mut losses = Vec::with_capacity(self.cfg.epochs);
        let mut order: Vec<usize> = (0..samples.len()).collect();
        for _ in 0..self.cfg.epochs {
            order.shuffle(rng);
            let mut epoch_loss = 0.0;
            let mut batches = 0;
            for chunk in order.chunks(self.cfg.batch_size) {
                let batch: Vec<&Sample> = chunk.iter().map(|&i| &samples[i]).collect();
                epoch_loss += self.apply_batch(&batch, self.cfg.lr)?;
                batches += 1;
            }
            losses.push(epoch_loss / batches as f64);
        }
        self.epochs_trained += self.cfg.epochs;
        Ok(losses)
    }

    pub fn predict_batch(&self, samples: &[Sample]) -> Result<Vec<f64>> {
        samples.iter().map(|s| self.forward(&s.features)).collect()
    }

    pub fn accuracy(&self, samples: &[Sample]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        let preds = self.predict_batch(samples)?;
        let labels: Vec<f64> = samples.iter().map(|s| s.label).collect();
        accuracy_of(&preds, &labels)
    }
}

/// Initializes and trains a network with the factory's dedicated streams.
pub fn mlp_train(samples: &[Sample], cfg: MlpConfig, seeds: &SeedFactory) -> Result<(Mlp, Vec<f64>)> {
    let mut mlp = Mlp::init(cfg, &mut seeds.stream(Stream::MlpInit))?;
    let losses = mlp.train(samples, &mut seeds.stream(Stream::MlpShuffle))?;
    Ok((mlp, losses))
}
