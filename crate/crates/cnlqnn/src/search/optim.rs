//! Optimizers and the architecture-gradient estimator.
//!
//! Circuit angles ω take plain SGD steps. The architecture logits α take Adam
//! steps driven by a score-function (REINFORCE) estimator over the hard
//! Gumbel samples, with an exponential-moving-average loss baseline for
//! variance reduction. The estimator is unbiased for any baseline that does
//! not depend on the current draws.

use crate::model::ParamStore;
use crate::search::gumbel::{softmax, ArchitectureLogits, GumbelDraw};
use crate::{Error, Result};

/// ω ← ω − lr·g, elementwise over the flat store.
pub fn sgd_step(store: &mut ParamStore, grads: &[f64], lr: f64) -> Result<()> {
    if grads.len() != store.len() {
        return Err(Error::GradShapeMismatch {
            got: format!("{} gradient(s)", grads.len()),
            expected: store.shape_string(),
        });
    }
    for (w, g) in store.as_mut_slice().iter_mut().zip(grads) {
        *w -= lr * g;
    }
    Ok(())
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Per-entry Adam moments for the α matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u32,
}

impl AdamState {
    pub fn new(n_layers: usize, pool_len: usize) -> Self {
        Self {
            m: vec![vec![0.0; pool_len]; n_layers],
            v: vec![vec![0.0; pool_len]; n_layers],
            t: 0,
        }
    }

    pub fn step_count(&self) -> u32 {
        self.t
    }
}

/// One bias-corrected Adam update of α in place.
pub fn adam_step(
    state: &mut AdamState,
    alpha: &mut ArchitectureLogits,
    grad: &[Vec<f64>],
    lr: f64,
) -> Result<()> {
    let (p, k) = (alpha.n_layers(), alpha.pool_len());
    if state.m.len() != p || state.m.first().map_or(0, Vec::len) != k {
        return Err(Error::LogitsShapeMismatch {
            got: format!("adam state {}x{}", state.m.len(), state.m.first().map_or(0, Vec::len)),
            expected: format!("{p}x{k}"),
        });
    }
    if grad.len() != p || grad.iter().any(|r| r.len() != k) {
        return Err(Error::LogitsShapeMismatch {
            got: format!("{} gradient row(s)", grad.len()),
            expected: format!("{p}x{k}"),
        });
    }
    state.t += 1;
    let t = state.t as i32;
    let corr1 = 1.0 - ADAM_BETA1.powi(t);
    let corr2 = 1.0 - ADAM_BETA2.powi(t);
    for l in 0..p {
        for i in 0..k {
            let g = grad[l][i];
            state.m[l][i] = ADAM_BETA1 * state.m[l][i] + (1.0 - ADAM_BETA1) * g;
            state.v[l][i] = ADAM_BETA2 * state.v[l][i] + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = state.m[l][i] / corr1;
            let v_hat = state.v[l][i] / corr2;
            alpha.rows_mut()[l][i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
    Ok(())
}

/// Exponential moving average of realized losses, initialized to the first
/// observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBaseline {
    value: Option<f64>,
    decay: f64,
}

impl LossBaseline {
    pub fn new(decay: f64) -> Result<Self> {
        if !(decay > 0.0 && decay < 1.0) {
            return Err(Error::BadDecay { value: decay });
        }
        Ok(Self { value: None, decay })
    }

    pub fn observe(&mut self, loss: f64) {
        self.value = Some(match self.value {
            None => loss,
            Some(v) => self.decay * v + (1.0 - self.decay) * loss,
        });
    }

    pub fn value(&self) -> Option<f64> {
        self.value
    }

    /// The baseline to subtract, falling back to `first_loss` before any
    /// observation exists.
    pub fn value_or(&self, first_loss: f64) -> f64 {
        self.value.unwrap_or(first_loss)
    }
}

/// Score-function gradient of E[L] over hard architecture draws:
/// (1/M)·Σ_m (L_m − b)·∇_α log p(hard_m | α), where for each layer l
/// ∇_{α_{l,i}} log p = 1{choice_l = i} − softmax(α_l)_i.
pub fn arch_grad_estimate(
    draws: &[(GumbelDraw, f64)],
    alpha: &ArchitectureLogits,
    baseline: f64,
) -> Result<Vec<Vec<f64>>> {
    if draws.is_empty() {
        return Err(Error::NoDraws);
    }
    let (p, k) = (alpha.n_layers(), alpha.pool_len());
    let pi: Vec<Vec<f64>> = alpha.rows().iter().map(|r| softmax(r)).collect();
    let mut grad = vec![vec![0.0; k]; p];
    for (draw, loss) in draws {
        let choices = draw.hard.choices();
        if choices.len() != p {
            return Err(Error::LogitsShapeMismatch {
                got: format!("draw with {} layer(s)", choices.len()),
                expected: format!("{p}x{k}"),
            });
        }
        let advantage = loss - baseline;
        for (l, &choice) in choices.iter().enumerate() {
            if choice >= k {
                return Err(Error::ArchChoiceOutOfRange { choice, pool: k });
            }
            for i in 0..k {
                let indicator = if i == choice { 1.0 } else { 0.0 };
                grad[l][i] += advantage * (indicator - pi[l][i]);
            }
        }
    }
    let inv_m = 1.0 / draws.len() as f64;
    for row in &mut grad {
        for g in row {
            *g *= inv_m;
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Architecture, ModelConfig, ParamStore};
    use crate::search::gumbel::gumbel_softmax_sample;
    use crate::sim::GateKind;
    use approx::assert_abs_diff_eq;
    use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

    #[test]
    fn sgd_examples() {
        let cfg = ModelConfig::new(2, 1, vec![GateKind::Rx]).unwrap();
        let mut store = ParamStore::zeros(&cfg);
        store.as_mut_slice().copy_from_slice(&[1.0, 1.0]);
        sgd_step(&mut store, &[0.0, 0.0], 0.01).unwrap();
        assert_eq!(store.as_slice(), &[1.0, 1.0]);
        sgd_step(&mut store, &[2.0, -2.0], 0.01).unwrap();
        assert_eq!(store.as_slice(), &[0.98, 1.02]);
        assert!(matches!(
            sgd_step(&mut store, &[1.0], 0.01),
            Err(Error::GradShapeMismatch { .. })
        ));
    }

    #[test]
    fn sgd_steps_compose_linearly() {
        let cfg = ModelConfig::new(1, 1, vec![GateKind::Rx]).unwrap();
        let mut twice = ParamStore::zeros(&cfg);
        twice.as_mut_slice()[0] = 0.7;
        let mut once = twice.clone();
        sgd_step(&mut twice, &[0.3], 0.05).unwrap();
        sgd_step(&mut twice, &[0.4], 0.05).unwrap();
        sgd_step(&mut once, &[0.7], 0.05).unwrap();
        assert_abs_diff_eq!(twice.as_slice()[0], once.as_slice()[0], epsilon = 1e-15);
    }

    #[test]
    fn adam_first_step_magnitude_is_close_to_lr() {
        let mut alpha = ArchitectureLogits::zeros(1, 2);
        let mut state = AdamState::new(1, 2);
        adam_step(&mut state, &mut alpha, &[vec![0.5, -0.25]], 0.01).unwrap();
        assert_abs_diff_eq!(alpha.rows()[0][0], -0.01, epsilon = 1e-9);
        assert_abs_diff_eq!(alpha.rows()[0][1], 0.01, epsilon = 1e-9);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn adam_zero_gradient_is_a_no_op_on_fresh_state() {
        let mut alpha = ArchitectureLogits::from_rows(vec![vec![0.3, -0.2]]).unwrap();
        let before = alpha.clone();
        let mut state = AdamState::new(1, 2);
        adam_step(&mut state, &mut alpha, &[vec![0.0, 0.0]], 0.01).unwrap();
        assert_eq!(alpha, before);
    }

    #[test]
    fn adam_moves_monotonically_against_a_constant_gradient() {
        let mut alpha = ArchitectureLogits::zeros(1, 1);
        let mut state = AdamState::new(1, 1);
        let mut prev = 0.0;
        for _ in 0..100 {
            adam_step(&mut state, &mut alpha, &[vec![0.7]], 0.01).unwrap();
            let now = alpha.rows()[0][0];
            assert!(now < prev, "expected strict descent, {now} !< {prev}");
            prev = now;
        }
    }

    #[test]
    fn adam_shape_mismatches_are_rejected() {
        let mut alpha = ArchitectureLogits::zeros(2, 3);
        let mut state = AdamState::new(1, 3);
        assert!(adam_step(&mut state, &mut alpha, &vec![vec![0.0; 3]; 2], 0.01).is_err());
        let mut state = AdamState::new(2, 3);
        assert!(adam_step(&mut state, &mut alpha, &vec![vec![0.0; 2]; 2], 0.01).is_err());
    }

    #[test]
    fn baseline_initializes_to_first_loss_then_averages() {
        let mut b = LossBaseline::new(0.9).unwrap();
        assert_eq!(b.value(), None);
        assert_eq!(b.value_or(2.5), 2.5);
        b.observe(2.0);
        assert_eq!(b.value(), Some(2.0));
        b.observe(1.0);
        assert_abs_diff_eq!(b.value().unwrap(), 0.9 * 2.0 + 0.1 * 1.0, epsilon = 1e-15);
        assert!(LossBaseline::new(1.0).is_err());
        assert!(LossBaseline::new(0.0).is_err());
    }

    fn uniform_draw(choices: Vec<usize>, cfg: &ModelConfig) -> GumbelDraw {
        let k = cfg.gate_pool().len();
        GumbelDraw {
            soft: vec![vec![1.0 / k as f64; k]; cfg.n_layers()],
            hard: Architecture::new(choices, cfg).unwrap(),
        }
    }

    #[test]
    fn equal_losses_give_zero_gradient() {
        let cfg = ModelConfig::new(2, 1, GateKind::ALL[..2].to_vec()).unwrap();
        let alpha = ArchitectureLogits::zeros(1, 2);
        let draws = vec![
            (uniform_draw(vec![0], &cfg), 0.8),
            (uniform_draw(vec![1], &cfg), 0.8),
        ];
        let g = arch_grad_estimate(&draws, &alpha, 0.8).unwrap();
        assert!(g.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_pushes_toward_the_lower_loss_choice() {
        let cfg = ModelConfig::new(2, 1, GateKind::ALL[..2].to_vec()).unwrap();
        let alpha = ArchitectureLogits::zeros(1, 2);
        let draws = vec![
            (uniform_draw(vec![0], &cfg), 1.0),
            (uniform_draw(vec![1], &cfg), 0.0),
        ];
        let g = arch_grad_estimate(&draws, &alpha, 0.5).unwrap();
        // α ← α − lr·g, so a negative entry raises that choice's probability.
        assert!(g[0][1] < 0.0);
        assert!(g[0][0] > 0.0);
        assert_abs_diff_eq!(g[0][1], -0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(g[0][0], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn empty_draws_are_rejected() {
        let alpha = ArchitectureLogits::zeros(1, 2);
        assert!(matches!(arch_grad_estimate(&[], &alpha, 0.0), Err(Error::NoDraws)));
    }

    #[test]
    fn estimator_mean_matches_the_enumeration_oracle() {
        // Fixed 2-qubit supernet, p = 2 layers, pool {RX, ZZ, CNOT}: the
        // architecture space has 9 members, so the exact architecture gradient
        // of E_k[L(k)] is computable by enumeration. The Monte-Carlo mean of
        // the score-function estimator over hard Gumbel draws must agree.
        use crate::model::ModelContext;
        let pool = vec![GateKind::Rx, GateKind::Zz, GateKind::Cnot];
        let cfg = ModelConfig::new(2, 2, pool).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let store = ParamStore::random_init(&cfg, &mut rng);
        let batch = vec![
            crate::data::Sample { features: vec![0.15, 0.8], label: 1.0, source_class: 1 },
            crate::data::Sample { features: vec![0.65, 0.3], label: -1.0, source_class: 0 },
        ];
        let perturbed = vec![vec![0.17, 0.78], vec![0.63, 0.32]];

        // Realized loss per architecture, by direct evaluation.
        let mut losses = std::collections::HashMap::new();
        for a in 0..3 {
            for b in 0..3 {
                let arch = Architecture::new(vec![a, b], &cfg).unwrap();
                let ctx = ModelContext::new(cfg.clone(), arch, store.clone()).unwrap();
                losses.insert((a, b), ctx.total_loss_frozen(&batch, &perturbed, 1.0).unwrap());
            }
        }

        let alpha =
            ArchitectureLogits::from_rows(vec![vec![0.4, -0.3, 0.1], vec![-0.2, 0.5, 0.0]]).unwrap();
        let pi = alpha.probabilities();

        // Exact ∇_α E[L]: Σ_k p(k)·L_k·(1{k_l=i} − π_{l,i}).
        let mut exact = vec![vec![0.0; 3]; 2];
        let mut mean_loss = 0.0;
        for (&(a, b), &loss) in &losses {
            let p_k = pi[0][a] * pi[1][b];
            mean_loss += p_k * loss;
            for i in 0..3 {
                exact[0][i] += p_k * loss * (if i == a { 1.0 } else { 0.0 } - pi[0][i]);
                exact[1][i] += p_k * loss * (if i == b { 1.0 } else { 0.0 } - pi[1][i]);
            }
        }

        // Monte-Carlo mean of the estimator with a fixed baseline (the exact
        // mean loss, which keeps it unbiased and low-variance).
        let n = 100_000;
        let mut mc = vec![vec![0.0; 3]; 2];
        for _ in 0..n {
            let draw = gumbel_softmax_sample(&alpha, 1.0, &cfg, &mut rng).unwrap();
            let key = (draw.hard.choices()[0], draw.hard.choices()[1]);
            let loss = losses[&key];
            let g = arch_grad_estimate(&[(draw, loss)], &alpha, mean_loss).unwrap();
            for l in 0..2 {
                for i in 0..3 {
                    mc[l][i] += g[l][i];
                }
            }
        }
        for l in 0..2 {
            for i in 0..3 {
                let est = mc[l][i] / n as f64;
                let tol = 0.02 * exact[l][i].abs();
                assert!(
                    (est - exact[l][i]).abs() <= tol,
                    "entry ({l},{i}): {est} vs {} (tol {tol})",
                    exact[l][i]
                );
            }
        }
    }
}
