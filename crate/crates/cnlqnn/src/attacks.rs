//! Input-space adversarial attacks under an ℓ∞ budget.
//!
//! All methods ascend the squared-error loss via the target's exact input
//! gradients, project every iterate onto [x−ε, x+ε] ∩ [0,1], and are fully
//! deterministic (no random start). The same code attacks the quantum model
//! (parameter-shift gradients) and the dense baseline (backprop gradients);
//! transfer attacks craft on one target and evaluate on another.

use rayon::prelude::*;

use crate::baseline::Mlp;
use crate::data::Sample;
use crate::grad::input_grad_vec;
use crate::model::{accuracy_of, ModelContext};
use crate::{Error, Result};

/// Anything attacks can aim at: a prediction plus d(y−ŷ)²/dx.
pub trait AttackTarget: Sync {
    fn predict(&self, x: &[f64]) -> Result<f64>;
    fn loss_input_grad(&self, x: &[f64], y: f64) -> Result<Vec<f64>>;
}

impl AttackTarget for ModelContext {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        self.forward(x)
    }

    fn loss_input_grad(&self, x: &[f64], y: f64) -> Result<Vec<f64>> {
        input_grad_vec(self, x, y)
    }
}

impl AttackTarget for Mlp {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        self.forward(x)
    }

    fn loss_input_grad(&self, x: &[f64], y: f64) -> Result<Vec<f64>> {
        Mlp::loss_input_grad(self, x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AttackMethod {
    Fgsm,
    Pgd,
    Bim,
    Mim,
}

impl AttackMethod {
    pub const ALL: [AttackMethod; 4] =
        [AttackMethod::Fgsm, AttackMethod::Pgd, AttackMethod::Bim, AttackMethod::Mim];

    pub fn name(&self) -> &'static str {
        match self {
            AttackMethod::Fgsm => "FGSM",
            AttackMethod::Pgd => "PGD",
            AttackMethod::Bim => "BIM",
            AttackMethod::Mim => "MIM",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

/// Attack hyperparameters. `step_size = None` uses the method's convention:
/// 2ε/steps for PGD, ε/steps for BIM and MIM. FGSM always takes one ε-sized
/// step.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AttackConfig {
    pub method: AttackMethod,
    pub epsilon: f64,
    pub steps: usize,
    pub step_size: Option<f64>,
    pub momentum: f64,
}

impl AttackConfig {
    pub fn new(method: AttackMethod, epsilon: f64) -> Result<Self> {
        let cfg = Self { method, epsilon, steps: 10, step_size: None, momentum: 1.0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon < 0.0 || self.epsilon.is_nan() {
            return Err(Error::NegativeEpsilon { value: self.epsilon });
        }
        if self.steps == 0 {
            return Err(Error::ZeroSteps);
        }
        if let Some(s) = self.step_size {
            if !(s > 0.0) && self.epsilon > 0.0 {
                return Err(Error::BadStepSize { value: s });
            }
        }
        Ok(())
    }

    /// The per-iteration step the configured method will take.
    pub fn resolved_step(&self) -> f64 {
        match self.method {
            AttackMethod::Fgsm => self.epsilon,
            _ => self
                .step_size
                .unwrap_or_else(|| match self.method {
                    AttackMethod::Pgd => 2.0 * self.epsilon / self.steps as f64,
                    _ => self.epsilon / self.steps as f64,
                }),
        }
    }
}

/// Adversarial batch plus the metrics reporting needs.
#[derive(Debug, Clone)]
pub struct AttackResult {
    pub adversarial: Vec<Vec<f64>>,
    pub linf: Vec<f64>,
    pub clean_accuracy: f64,
    pub robust_accuracy: f64,
}

impl AttackResult {
    pub fn mean_linf(&self) -> f64 {
        if self.linf.is_empty() {
            0.0
        } else {
            self.linf.iter().sum::<f64>() / self.linf.len() as f64
        }
    }
}

fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn ascend<T: AttackTarget + ?Sized>(
    target: &T,
    x0: &[f64],
    y: f64,
    epsilon: f64,
    steps: usize,
    step: f64,
    momentum: Option<f64>,
) -> Result<Vec<f64>> {
    let mut x = x0.to_vec();
    let mut buffer = vec![0.0; x.len()];
    for _ in 0..steps {
        let grad = target.loss_input_grad(&x, y)?;
        let direction: &[f64] = match momentum {
            None => &grad,
            Some(mu) => {
                let l1: f64 = grad.iter().map(|g| g.abs()).sum();
                for (b, &g) in buffer.iter_mut().zip(&grad) {
                    let unit = if l1 < 1e-12 { g } else { g / l1 };
                    *b = mu * *b + unit;
                }
                &buffer
            }
        };
        for ((v, &v0), &d) in x.iter_mut().zip(x0).zip(direction) {
            *v = (*v + step * sign(d)).max(v0 - epsilon).min(v0 + epsilon).clamp(0.0, 1.0);
        }
    }
    Ok(x)
}

/// One ε-sized step along the gradient sign, clipped to valid pixels.
pub fn fgsm<T: AttackTarget + ?Sized>(target: &T, x: &[f64], y: f64, epsilon: f64) -> Result<Vec<f64>> {
    if epsilon < 0.0 || epsilon.is_nan() {
        return Err(Error::NegativeEpsilon { value: epsilon });
    }
    ascend(target, x, y, epsilon, 1, epsilon, None)
}

/// Projected gradient ascent from a clean start (no random initialization).
pub fn pgd<T: AttackTarget + ?Sized>(target: &T, x: &[f64], y: f64, cfg: &AttackConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    ascend(target, x, y, cfg.epsilon, cfg.steps, cfg.resolved_step(), None)
}

/// Iterative FGSM. Identical loop to PGD; kept as its own entry point with
/// the ε/steps default step.
pub fn bim<T: AttackTarget + ?Sized>(target: &T, x: &[f64], y: f64, cfg: &AttackConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    ascend(target, x, y, cfg.epsilon, cfg.steps, cfg.resolved_step(), None)
}

/// Momentum iterative method: accumulates ℓ1-normalized gradients (skipping
/// normalization below 1e-12) and steps along the accumulator's sign.
pub fn mim<T: AttackTarget + ?Sized>(target: &T, x: &[f64], y: f64, cfg: &AttackConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    ascend(target, x, y, cfg.epsilon, cfg.steps, cfg.resolved_step(), Some(cfg.momentum))
}

/// Dispatches on `cfg.method`.
pub fn craft<T: AttackTarget + ?Sized>(target: &T, x: &[f64], y: f64, cfg: &AttackConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    match cfg.method {
        AttackMethod::Fgsm => fgsm(target, x, y, cfg.epsilon),
        AttackMethod::Pgd => pgd(target, x, y, cfg),
        AttackMethod::Bim => bim(target, x, y, cfg),
        AttackMethod::Mim => mim(target, x, y, cfg),
    }
}

fn linf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y).abs()).fold(0.0, f64::max)
}

fn evaluate_on<T: AttackTarget + ?Sized>(
    target: &T,
    samples: &[Sample],
    adversarial: Vec<Vec<f64>>,
) -> Result<AttackResult> {
    let labels: Vec<f64> = samples.iter().map(|s| s.label).collect();
    let clean_preds: Vec<f64> = samples
        .par_iter()
        .map(|s| target.predict(&s.features))
        .collect::<Result<_>>()?;
    let adv_preds: Vec<f64> = adversarial
        .par_iter()
        .map(|x| target.predict(x))
        .collect::<Result<_>>()?;
    let linf: Vec<f64> = samples
        .iter()
        .zip(&adversarial)
        .map(|(s, adv)| linf_distance(&s.features, adv))
        .collect();
    Ok(AttackResult {
        clean_accuracy: accuracy_of(&clean_preds, &labels)?,
        robust_accuracy: accuracy_of(&adv_preds, &labels)?,
        adversarial,
        linf,
    })
}

/// White-box evaluation: craft per-sample adversarial examples with the true
/// labels on `target` itself, then measure its accuracy on them.
pub fn robust_accuracy<T: AttackTarget + ?Sized>(
    samples: &[Sample],
    target: &T,
    cfg: &AttackConfig,
) -> Result<AttackResult> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    cfg.validate()?;
    let adversarial: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|s| craft(target, &s.features, s.label, cfg))
        .collect::<Result<_>>()?;
    evaluate_on(target, samples, adversarial)
}

/// Black-box transfer: adversarial examples come from the surrogate's exact
/// gradients and are evaluated on `target`.
pub fn blackbox_transfer<T: AttackTarget + ?Sized>(
    samples: &[Sample],
    surrogate: &Mlp,
    target: &T,
    cfg: &AttackConfig,
) -> Result<AttackResult> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if !surrogate.is_trained() {
        return Err(Error::UntrainedSurrogate);
    }
    cfg.validate()?;
    let adversarial: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|s| craft(surrogate, &s.features, s.label, cfg))
        .collect::<Result<_>>()?;
    evaluate_on(target, samples, adversarial)
}
