//! The hybrid classifier: classical noise layer, angle encoding, supernet
//! parameter store, architecture-conditioned circuit construction, mean-Z
//! readout, and the composite training loss.
//!
//! A model is a triple (config, architecture, parameters). The architecture
//! picks one gate kind per layer; single-qubit kinds fan out to one gate per
//! qubit and two-qubit kinds follow a ring layout, so every layer touches all
//! qubits. Parameters are shared across architectures: the store allocates an
//! angle for every (layer, parameterized pool kind, instance) slot whether or
//! not the current architecture uses it.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::TAU;

use crate::data::Sample;
use crate::grad::{expectation, param_shift_grad, Observable};
use crate::sim::{Circuit, GateInstance, GateKind, Statevector};
use crate::{Error, Result};

/// Static model shape: qubit count, supernet depth, and the ordered gate pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    n_qubits: usize,
    n_layers: usize,
    gate_pool: Vec<GateKind>,
}

impl ModelConfig {
    pub fn new(n_qubits: usize, n_layers: usize, gate_pool: Vec<GateKind>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 16 {
            return Err(Error::QubitCountUnsupported { n_qubits });
        }
        if gate_pool.is_empty() {
            return Err(Error::EmptyPool);
        }
        for (i, &kind) in gate_pool.iter().enumerate() {
            if gate_pool[..i].contains(&kind) {
                return Err(Error::DuplicatePoolKind { kind });
            }
            if kind.arity() == 2 && n_qubits < 2 {
                return Err(Error::RingTooSmall { kind, n_qubits });
            }
        }
        Ok(Self { n_qubits, n_layers, gate_pool })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn gate_pool(&self) -> &[GateKind] {
        &self.gate_pool
    }

    /// Ring edges for two-qubit layers: (q, q+1) for q = 0..n-2, plus the
    /// wrap-around (n-1, 0) when n > 2. For n = 2 the ring degenerates to the
    /// single edge (0, 1).
    pub fn ring_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_qubits;
        if n == 2 {
            return vec![(0, 1)];
        }
        let mut pairs: Vec<(usize, usize)> = (0..n - 1).map(|q| (q, q + 1)).collect();
        pairs.push((n - 1, 0));
        pairs
    }

    /// Number of gate instances a layer of `kind` expands to.
    pub fn instances(&self, kind: GateKind) -> usize {
        if kind.arity() == 1 {
            self.n_qubits
        } else {
            self.ring_pairs().len()
        }
    }
}

/// One gate-pool choice per layer.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Architecture {
    choices: Vec<usize>,
}

impl Architecture {
    pub fn new(choices: Vec<usize>, cfg: &ModelConfig) -> Result<Self> {
        if choices.len() != cfg.n_layers {
            return Err(Error::ArchLayerMismatch { got: choices.len(), expected: cfg.n_layers });
        }
        if let Some(&choice) = choices.iter().find(|&&c| c >= cfg.gate_pool.len()) {
            return Err(Error::ArchChoiceOutOfRange { choice, pool: cfg.gate_pool.len() });
        }
        Ok(Self { choices })
    }

    pub fn choices(&self) -> &[usize] {
        &self.choices
    }

    /// The gate kinds this architecture selects, in layer order.
    pub fn kinds(&self, cfg: &ModelConfig) -> Vec<GateKind> {
        self.choices.iter().map(|&c| cfg.gate_pool[c]).collect()
    }
}

/// Shared supernet angles ω, keyed by (layer, pool slot, instance) and stored
/// flat in layer-major order. Non-parameterized pool kinds hold zero slots.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore {
    n_layers: usize,
    counts: Vec<usize>,
    prefix: Vec<usize>,
    flat: Vec<f64>,
}

impl ParamStore {
    fn layout(cfg: &ModelConfig) -> (Vec<usize>, Vec<usize>) {
        let counts: Vec<usize> = cfg
            .gate_pool
            .iter()
            .map(|&k| if k.parameterized() { cfg.instances(k) } else { 0 })
            .collect();
        let mut prefix = Vec::with_capacity(counts.len() + 1);
        let mut acc = 0;
        prefix.push(0);
        for &c in &counts {
            acc += c;
            prefix.push(acc);
        }
        (counts, prefix)
    }

    pub fn zeros(cfg: &ModelConfig) -> Self {
        let (counts, prefix) = Self::layout(cfg);
        let stride = *prefix.last().unwrap();
        Self { n_layers: cfg.n_layers, counts, prefix, flat: vec![0.0; cfg.n_layers * stride] }
    }

    /// Independent uniform angles on [0, 2π), drawn in flat (layer-major)
    /// order so a given seed always yields the same store.
    pub fn random_init(cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> Self {
        let mut store = Self::zeros(cfg);
        for v in &mut store.flat {
            *v = rng.gen_range(0.0..TAU);
        }
        store
    }

    /// Rebuilds a store from the flat angle vector, validating the length.
    pub fn from_flat(cfg: &ModelConfig, flat: Vec<f64>) -> Result<Self> {
        let empty = Self::zeros(cfg);
        if flat.len() != empty.flat.len() {
            return Err(Error::StoreShapeMismatch {
                got: format!("{} angle(s)", flat.len()),
                expected: empty.shape_string(),
            });
        }
        Ok(Self { flat, ..empty })
    }

    fn layer_stride(&self) -> usize {
        *self.prefix.last().unwrap()
    }

    pub fn shape_string(&self) -> String {
        format!("{} layer(s) x slots {:?} = {} angle(s)", self.n_layers, self.counts, self.flat.len())
    }

    fn same_shape(&self, other: &ParamStore) -> bool {
        self.n_layers == other.n_layers && self.counts == other.counts
    }

    pub fn flat_index(&self, layer: usize, slot: usize, instance: usize) -> Result<usize> {
        if layer >= self.n_layers || slot >= self.counts.len() || instance >= self.counts[slot] {
            return Err(Error::OmegaKeyOutOfRange { layer, slot, instance });
        }
        Ok(layer * self.layer_stride() + self.prefix[slot] + instance)
    }

    pub fn get(&self, layer: usize, slot: usize, instance: usize) -> Result<f64> {
        Ok(self.flat[self.flat_index(layer, slot, instance)?])
    }

    pub fn set(&mut self, layer: usize, slot: usize, instance: usize, value: f64) -> Result<()> {
        let i = self.flat_index(layer, slot, instance)?;
        self.flat[i] = value;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.flat
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.flat
    }
}

/// Classical noise layer hyperparameters: perturbation magnitude `h` and the
/// robustness weight `gamma` on the perturbed loss term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnlConfig {
    pub h: f64,
    pub gamma: f64,
}

impl CnlConfig {
    pub fn new(h: f64, gamma: f64) -> Result<Self> {
        if !(h >= 0.0) {
            return Err(Error::NegativeHyperparameter { name: "h", value: h });
        }
        if !(gamma >= 0.0) {
            return Err(Error::NegativeHyperparameter { name: "gamma", value: gamma });
        }
        Ok(Self { h, gamma })
    }
}

impl Default for CnlConfig {
    fn default() -> Self {
        Self { h: 0.02, gamma: 1.0 }
    }
}

/// x'_j = x_j + h·sign(ξ_j) with ξ_j independent standard normal and
/// sign(0) = +1. The result is not clipped: the encoding is periodic, so
/// values outside [0, 1] are meaningful.
pub fn cnl_perturb(x: &[f64], h: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    assert!(h >= 0.0, "perturbation magnitude must be non-negative");
    x.iter()
        .map(|&v| {
            let xi: f64 = rng.sample(StandardNormal);
            if xi < 0.0 {
                v - h
            } else {
                v + h
            }
        })
        .collect()
}

/// Perturbs a whole batch, drawing in sample-major then coordinate order.
pub fn cnl_perturb_batch(features: &[Vec<f64>], h: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    features.iter().map(|x| cnl_perturb(x, h, rng)).collect()
}

/// Squared error against a ±1 label.
pub fn loss_mse(y: f64, yhat: f64) -> f64 {
    (y - yhat) * (y - yhat)
}

/// Encoding layer: RX(2π·x_j) on qubit j, in qubit order.
pub fn encode(x: &[f64], n_qubits: usize) -> Result<Vec<GateInstance>> {
    if x.len() != n_qubits {
        return Err(Error::PixelCountMismatch { got: x.len(), expected: n_qubits });
    }
    Ok(x.iter()
        .enumerate()
        .map(|(q, &v)| GateInstance::with_theta(GateKind::Rx, vec![q], TAU * v))
        .collect())
}

fn build_with_map(
    arch: &Architecture,
    store: &ParamStore,
    cfg: &ModelConfig,
) -> Result<(Circuit, Vec<(usize, usize)>)> {
    let mut circuit = Circuit::new(cfg.n_qubits);
    let mut param_map = Vec::new();
    for (layer, &choice) in arch.choices.iter().enumerate() {
        let kind = *cfg
            .gate_pool
            .get(choice)
            .ok_or(Error::ArchChoiceOutOfRange { choice, pool: cfg.gate_pool.len() })?;
        if kind.arity() == 1 {
            for q in 0..cfg.n_qubits {
                param_map.push((circuit.gates.len(), store.flat_index(layer, choice, q)?));
                circuit.push(GateInstance::with_theta(kind, vec![q], store.get(layer, choice, q)?));
            }
        } else {
            for (i, (a, b)) in cfg.ring_pairs().into_iter().enumerate() {
                if kind.parameterized() {
                    param_map.push((circuit.gates.len(), store.flat_index(layer, choice, i)?));
                    circuit.push(GateInstance::with_theta(kind, vec![a, b], store.get(layer, choice, i)?));
                } else {
                    circuit.push(GateInstance::fixed(kind, vec![a, b]));
                }
            }
        }
    }
    Ok((circuit, param_map))
}

/// Realizes an architecture as a concrete circuit over the supernet angles.
pub fn build_circuit(arch: &Architecture, store: &ParamStore, cfg: &ModelConfig) -> Result<Circuit> {
    Ok(build_with_map(arch, store, cfg)?.0)
}

/// A fully specified model, ready for inference and gradient evaluation.
#[derive(Debug, Clone)]
pub struct ModelContext {
    cfg: ModelConfig,
    arch: Architecture,
    store: ParamStore,
}

impl ModelContext {
    pub fn new(cfg: ModelConfig, arch: Architecture, store: ParamStore) -> Result<Self> {
        // Revalidate: the architecture and store may have been built against a
        // different config.
        let arch = Architecture::new(arch.choices, &cfg)?;
        let expected = ParamStore::zeros(&cfg);
        if !store.same_shape(&expected) {
            return Err(Error::StoreShapeMismatch {
                got: store.shape_string(),
                expected: expected.shape_string(),
            });
        }
        Ok(Self { cfg, arch, store })
    }

    pub fn cfg(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn into_store(self) -> ParamStore {
        self.store
    }

    pub fn n_qubits(&self) -> usize {
        self.cfg.n_qubits
    }

    pub fn observable(&self) -> Observable {
        Observable::all(self.cfg.n_qubits)
    }

    /// The encoding layer followed by the architecture circuit, plus the
    /// |0…0⟩ initial state. Encoding gate j sits at circuit position j.
    pub fn encoded_circuit(&self, x: &[f64]) -> Result<(Circuit, Statevector)> {
        let mut circuit = Circuit::new(self.cfg.n_qubits);
        circuit.gates = encode(x, self.cfg.n_qubits)?;
        let (body, _) = build_with_map(&self.arch, &self.store, &self.cfg)?;
        circuit.gates.extend(body.gates);
        Ok((circuit, Statevector::zero(self.cfg.n_qubits)))
    }

    /// Deterministic prediction ŷ ∈ [-1, 1]: mean ⟨Z⟩ over all qubits after
    /// the encoded circuit.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        let (circuit, init) = self.encoded_circuit(x)?;
        expectation(&circuit, &init, &self.observable())
    }

    /// Predictions for a sample list, in input order.
    pub fn predict_batch(&self, samples: &[Sample]) -> Result<Vec<f64>> {
        samples
            .par_iter()
            .map(|s| self.forward(&s.features))
            .collect()
    }

    /// Fraction of samples with sign(ŷ) = y, where sign(0) = +1.
    pub fn accuracy(&self, samples: &[Sample]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        let preds = self.predict_batch(samples)?;
        let correct = preds
            .iter()
            .zip(samples)
            .filter(|(&yhat, s)| sign_pm(yhat) == s.label)
            .count();
        Ok(correct as f64 / samples.len() as f64)
    }

    /// Mean squared error over a batch of samples.
    pub fn batch_mse(&self, batch: &[Sample]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let preds = self.predict_batch(batch)?;
        Ok(preds
            .iter()
            .zip(batch)
            .map(|(&yhat, s)| loss_mse(s.label, yhat))
            .sum::<f64>()
            / batch.len() as f64)
    }

    fn mse_on(&self, features: &[Vec<f64>], labels: &[f64]) -> Result<f64> {
        let preds: Vec<f64> = features
            .par_iter()
            .map(|x| self.forward(x))
            .collect::<Result<_>>()?;
        Ok(preds
            .iter()
            .zip(labels)
            .map(|(&yhat, &y)| loss_mse(y, yhat))
            .sum::<f64>()
            / labels.len() as f64)
    }

    /// Clean MSE plus `gamma` times the MSE on a freshly CNL-perturbed copy of
    /// the batch.
    pub fn total_loss(&self, batch: &[Sample], cnl: &CnlConfig, rng: &mut ChaCha8Rng) -> Result<f64> {
        let features: Vec<Vec<f64>> = batch.iter().map(|s| s.features.clone()).collect();
        let perturbed = cnl_perturb_batch(&features, cnl.h, rng);
        self.total_loss_frozen(batch, &perturbed, cnl.gamma)
    }

    /// The composite loss with an already-drawn perturbed batch, so gradients
    /// and loss values can share one perturbation.
    pub fn total_loss_frozen(&self, batch: &[Sample], perturbed: &[Vec<f64>], gamma: f64) -> Result<f64> {
        if perturbed.len() != batch.len() {
            return Err(Error::LengthMismatch {
                what: "perturbed batch",
                got: perturbed.len(),
                expected: batch.len(),
            });
        }
        let labels: Vec<f64> = batch.iter().map(|s| s.label).collect();
        let clean = self.batch_mse(batch)?;
        let robust = self.mse_on(perturbed, &labels)?;
        Ok(clean + gamma * robust)
    }

    /// d(total_loss_frozen)/dω for every store entry, via the parameter-shift
    /// rule. Entries whose gates the architecture does not select get exact
    /// zeros. Per-sample terms are reduced in batch order.
    pub fn omega_loss_grads(&self, batch: &[Sample], perturbed: &[Vec<f64>], gamma: f64) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if perturbed.len() != batch.len() {
            return Err(Error::LengthMismatch {
                what: "perturbed batch",
                got: perturbed.len(),
                expected: batch.len(),
            });
        }
        let (_, param_map) = build_with_map(&self.arch, &self.store, &self.cfg)?;
        let inv_b = 1.0 / batch.len() as f64;
        let jobs: Vec<(&[f64], f64, f64)> = batch
            .iter()
            .map(|s| (s.features.as_slice(), s.label, inv_b))
            .chain(
                perturbed
                    .iter()
                    .zip(batch)
                    .map(|(x, s)| (x.as_slice(), s.label, gamma * inv_b)),
            )
            .collect();
        let obs = self.observable();
        let n = self.cfg.n_qubits;
        let per_sample: Vec<Vec<f64>> = jobs
            .par_iter()
            .map(|&(x, y, weight)| {
                let (circuit, init) = self.encoded_circuit(x)?;
                let yhat = expectation(&circuit, &init, &obs)?;
                let scale = weight * -2.0 * (y - yhat);
                let mut grad = vec![0.0; self.store.len()];
                for &(pos, flat_idx) in &param_map {
                    // Encoding gates occupy positions 0..n, shifting the body.
                    grad[flat_idx] += scale * param_shift_grad(&circuit, &init, &obs, pos + n)?;
                }
                Ok(grad)
            })
            .collect::<Result<_>>()?;
        let mut total = vec![0.0; self.store.len()];
        for grad in per_sample {
            for (t, g) in total.iter_mut().zip(grad) {
                *t += g;
            }
        }
        Ok(total)
    }
}

/// The sign convention used for classification: sign(0) = +1.
fn sign_pm(yhat: f64) -> f64 {
    if yhat >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Fraction of (prediction, label) pairs that agree under sign(0) = +1.
pub fn accuracy_of(preds: &[f64], labels: &[f64]) -> Result<f64> {
    if preds.is_empty() || preds.len() != labels.len() {
        return Err(Error::EmptySampleSet);
    }
    let correct = preds
        .iter()
        .zip(labels)
        .filter(|(&yhat, &y)| sign_pm(yhat) == y)
        .count();
    Ok(correct as f64 / preds.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand_chacha::rand_core::SeedableRng;
    use std::f64::consts::PI;

    fn full_pool() -> Vec<GateKind> {
        GateKind::ALL.to_vec()
    }

    fn sample(features: Vec<f64>, label: f64) -> Sample {
        Sample { features, label, source_class: if label > 0.0 { 1 } else { 0 } }
    }

    #[test]
    fn encode_maps_pixels_to_full_turn_angles() {
        let gates = encode(&[1.0, 0.0, 0.5], 3).unwrap();
        assert_eq!(gates.len(), 3);
        for (q, g) in gates.iter().enumerate() {
            assert_eq!(g.kind, GateKind::Rx);
            assert_eq!(g.qubits, vec![q]);
        }
        assert_abs_diff_eq!(gates[0].theta.unwrap(), TAU, epsilon = 0.0);
        assert_eq!(gates[1].theta.unwrap(), 0.0);
        assert_abs_diff_eq!(gates[2].theta.unwrap(), PI, epsilon = 1e-15);
        assert!(matches!(
            encode(&[0.1], 3),
            Err(Error::PixelCountMismatch { got: 1, expected: 3 })
        ));
    }

    #[test]
    fn config_rejects_bad_pools() {
        assert!(matches!(ModelConfig::new(4, 2, vec![]), Err(Error::EmptyPool)));
        assert!(matches!(
            ModelConfig::new(4, 2, vec![GateKind::Rx, GateKind::Rx]),
            Err(Error::DuplicatePoolKind { kind: GateKind::Rx })
        ));
        assert!(matches!(
            ModelConfig::new(1, 2, vec![GateKind::Zz]),
            Err(Error::RingTooSmall { kind: GateKind::Zz, n_qubits: 1 })
        ));
        assert!(matches!(
            ModelConfig::new(0, 2, vec![GateKind::Rx]),
            Err(Error::QubitCountUnsupported { n_qubits: 0 })
        ));
    }

    #[test]
    fn architecture_validation() {
        let cfg = ModelConfig::new(4, 3, full_pool()).unwrap();
        assert!(matches!(
            Architecture::new(vec![0, 1], &cfg),
            Err(Error::ArchLayerMismatch { got: 2, expected: 3 })
        ));
        assert!(matches!(
            Architecture::new(vec![0, 9, 1], &cfg),
            Err(Error::ArchChoiceOutOfRange { choice: 9, pool: 9 })
        ));
        let arch = Architecture::new(vec![0, 8, 3], &cfg).unwrap();
        assert_eq!(arch.kinds(&cfg), vec![GateKind::Rx, GateKind::Iswap, GateKind::Xx]);
    }

    #[test]
    fn single_qubit_layer_fans_out_with_distinct_parameters() {
        let cfg = ModelConfig::new(4, 1, vec![GateKind::Rx]).unwrap();
        let arch = Architecture::new(vec![0], &cfg).unwrap();
        let mut store = ParamStore::zeros(&cfg);
        for q in 0..4 {
            store.set(0, 0, q, 0.1 * (q + 1) as f64).unwrap();
        }
        let c = build_circuit(&arch, &store, &cfg).unwrap();
        assert_eq!(c.gates.len(), 4);
        for (q, g) in c.gates.iter().enumerate() {
            assert_eq!(g.qubits, vec![q]);
            assert_abs_diff_eq!(g.theta.unwrap(), 0.1 * (q + 1) as f64, epsilon = 0.0);
        }
    }

    #[test]
    fn two_qubit_layer_follows_the_ring() {
        let cfg = ModelConfig::new(4, 1, vec![GateKind::Cnot]).unwrap();
        let arch = Architecture::new(vec![0], &cfg).unwrap();
        let store = ParamStore::zeros(&cfg);
        let c = build_circuit(&arch, &store, &cfg).unwrap();
        let pairs: Vec<Vec<usize>> = c.gates.iter().map(|g| g.qubits.clone()).collect();
        assert_eq!(pairs, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]]);
        assert!(c.gates.iter().all(|g| g.theta.is_none()));
    }

    #[test]
    fn two_qubit_ring_degenerates_at_two_qubits() {
        let cfg = ModelConfig::new(2, 1, vec![GateKind::Zz]).unwrap();
        let arch = Architecture::new(vec![0], &cfg).unwrap();
        let c = build_circuit(&arch, &ParamStore::zeros(&cfg), &cfg).unwrap();
        assert_eq!(c.gates.len(), 1);
        assert_eq!(c.gates[0].qubits, vec![0, 1]);
    }

    #[test]
    fn store_allocates_only_parameterized_slots() {
        let cfg = ModelConfig::new(3, 2, vec![GateKind::Rx, GateKind::Cnot, GateKind::Zz]).unwrap();
        let store = ParamStore::zeros(&cfg);
        // Rx: 3 per layer; Cnot: 0; Zz: ring of 3. Two layers.
        assert_eq!(store.len(), 2 * (3 + 0 + 3));
        assert!(store.flat_index(0, 1, 0).is_err());
        assert!(store.flat_index(0, 2, 2).is_ok());
        assert!(matches!(
            store.flat_index(2, 0, 0),
            Err(Error::OmegaKeyOutOfRange { layer: 2, .. })
        ));
    }

    #[test]
    fn random_init_is_seeded_and_in_range() {
        let cfg = ModelConfig::new(4, 3, full_pool()).unwrap();
        let a = ParamStore::random_init(&cfg, &mut ChaCha8Rng::seed_from_u64(7));
        let b = ParamStore::random_init(&cfg, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
        assert!(a.as_slice().iter().all(|&v| (0.0..TAU).contains(&v)));
        let c = ParamStore::random_init(&cfg, &mut ChaCha8Rng::seed_from_u64(8));
        assert_ne!(a, c);
    }

    #[test]
    fn context_rejects_mismatched_store() {
        let cfg = ModelConfig::new(4, 2, full_pool()).unwrap();
        let other = ModelConfig::new(4, 3, full_pool()).unwrap();
        let arch = Architecture::new(vec![0, 0], &cfg).unwrap();
        let store = ParamStore::zeros(&other);
        assert!(matches!(
            ModelContext::new(cfg, arch, store),
            Err(Error::StoreShapeMismatch { .. })
        ));
    }

    #[test]
    fn rz_layers_leave_the_zero_state_alone() {
        let cfg = ModelConfig::new(4, 3, vec![GateKind::Rz]).unwrap();
        let arch = Architecture::new(vec![0, 0, 0], &cfg).unwrap();
        let ctx = ModelContext::new(cfg.clone(), arch, ParamStore::zeros(&cfg)).unwrap();
        assert_eq!(ctx.forward(&[0.0, 0.0, 0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn quarter_pixels_read_out_zero() {
        let cfg = ModelConfig::new(4, 0, vec![GateKind::Rx]).unwrap();
        let arch = Architecture::new(vec![], &cfg).unwrap();
        let ctx = ModelContext::new(cfg.clone(), arch, ParamStore::zeros(&cfg)).unwrap();
        let yhat = ctx.forward(&[0.25; 4]).unwrap();
        assert_abs_diff_eq!(yhat, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn predictions_stay_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(90);
        for _ in 0..20 {
            let n = rng.gen_range(2..=4usize);
            let p = rng.gen_range(1..=4usize);
            let cfg = ModelConfig::new(n, p, full_pool()).unwrap();
            let choices: Vec<usize> = (0..p).map(|_| rng.gen_range(0..9)).collect();
            let arch = Architecture::new(choices, &cfg).unwrap();
            let store = ParamStore::random_init(&cfg, &mut rng);
            let ctx = ModelContext::new(cfg, arch, store).unwrap();
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..1.5)).collect();
            let yhat = ctx.forward(&x).unwrap();
            assert!((-1.0..=1.0).contains(&yhat), "yhat {yhat}");
        }
    }

    #[test]
    fn forward_is_bit_deterministic() {
        let cfg = ModelConfig::new(4, 2, full_pool()).unwrap();
        let arch = Architecture::new(vec![3, 6], &cfg).unwrap();
        let store = ParamStore::random_init(&cfg, &mut ChaCha8Rng::seed_from_u64(17));
        let ctx = ModelContext::new(cfg, arch, store).unwrap();
        let x = vec![0.12, 0.9, 0.44, 0.67];
        assert_eq!(ctx.forward(&x).unwrap(), ctx.forward(&x).unwrap());
    }

    #[test]
    fn unselected_kinds_do_not_influence_forward() {
        let cfg = ModelConfig::new(3, 1, vec![GateKind::Rx, GateKind::Rz]).unwrap();
        let arch = Architecture::new(vec![0], &cfg).unwrap();
        let store = ParamStore::random_init(&cfg, &mut ChaCha8Rng::seed_from_u64(19));
        let mut ctx = ModelContext::new(cfg, arch, store).unwrap();
        let x = vec![0.2, 0.5, 0.8];
        let before = ctx.forward(&x).unwrap();
        ctx.store_mut().set(0, 1, 1, 9.99).unwrap();
        assert_eq!(ctx.forward(&x).unwrap(), before);
        ctx.store_mut().set(0, 0, 1, 9.99).unwrap();
        assert_ne!(ctx.forward(&x).unwrap(), before);
    }

    #[test]
    fn loss_mse_examples() {
        assert_eq!(loss_mse(1.0, 1.0), 0.0);
        assert_eq!(loss_mse(1.0, 0.5), 0.25);
        assert_eq!(loss_mse(-1.0, 0.0), 1.0);
    }

    #[test]
    fn sign_convention_counts_zero_as_positive() {
        assert_eq!(sign_pm(0.0), 1.0);
        assert_eq!(sign_pm(1e-300), 1.0);
        assert_eq!(sign_pm(-1e-300), -1.0);
        assert_eq!(accuracy_of(&[0.0, -0.2], &[1.0, -1.0]).unwrap(), 1.0);
        assert_eq!(accuracy_of(&[0.0, 0.2], &[-1.0, 1.0]).unwrap(), 0.5);
        assert!(accuracy_of(&[], &[]).is_err());
    }

    #[test]
    fn accuracy_on_a_separable_toy_model() {
        // Encoding only, 1 qubit: ŷ = cos(2πx). x = 0 → +1, x = 0.5 → -1.
        let cfg = ModelConfig::new(1, 0, vec![GateKind::Rx]).unwrap();
        let arch = Architecture::new(vec![], &cfg).unwrap();
        let ctx = ModelContext::new(cfg.clone(), arch, ParamStore::zeros(&cfg)).unwrap();
        let samples = vec![sample(vec![0.0], 1.0), sample(vec![0.5], -1.0)];
        assert_eq!(ctx.accuracy(&samples).unwrap(), 1.0);
        let flipped = vec![sample(vec![0.0], -1.0), sample(vec![0.5], -1.0)];
        assert_eq!(ctx.accuracy(&flipped).unwrap(), 0.5);
        assert!(matches!(ctx.accuracy(&[]), Err(Error::EmptySampleSet)));
    }

    #[test]
    fn cnl_zero_magnitude_is_identity() {
        let x = vec![0.1, 0.5, 0.9];
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        assert_eq!(cnl_perturb(&x, 0.0, &mut rng), x);
    }

    #[test]
    fn cnl_moves_every_coordinate_by_exactly_h() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let x: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..1.0)).collect();
        let h = 0.02;
        let xp = cnl_perturb(&x, h, &mut rng);
        for (a, b) in x.iter().zip(&xp) {
            assert!(((b - a).abs() - h).abs() < 1e-15, "moved by {}", b - a);
        }
        // No clipping: a coordinate at 0 may go negative.
        let low = cnl_perturb(&vec![0.0; 256], h, &mut rng);
        assert!(low.iter().any(|&v| v < 0.0));
    }

    #[test]
    fn cnl_signs_are_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 100_000;
        let xp = cnl_perturb(&vec![0.5; n], 0.02, &mut rng);
        let ups = xp.iter().filter(|&&v| v > 0.5).count() as f64;
        let frac = ups / n as f64;
        let sigma = (0.25 / n as f64).sqrt();
        assert!((frac - 0.5).abs() < 3.0 * sigma, "fraction {frac}");
    }

    #[test]
    fn cnl_is_reproducible_per_seed() {
        let x = vec![0.3; 50];
        let a = cnl_perturb(&x, 0.02, &mut ChaCha8Rng::seed_from_u64(37));
        let b = cnl_perturb(&x, 0.02, &mut ChaCha8Rng::seed_from_u64(37));
        assert_eq!(a, b);
    }

    #[test]
    fn cnl_config_validation() {
        assert!(CnlConfig::new(0.0, 0.0).is_ok());
        assert!(matches!(
            CnlConfig::new(-0.1, 1.0),
            Err(Error::NegativeHyperparameter { name: "h", .. })
        ));
        assert!(matches!(
            CnlConfig::new(0.02, -1.0),
            Err(Error::NegativeHyperparameter { name: "gamma", .. })
        ));
        let d = CnlConfig::default();
        assert_eq!(d.h, 0.02);
        assert_eq!(d.gamma, 1.0);
    }

    fn toy_ctx() -> ModelContext {
        let cfg = ModelConfig::new(1, 0, vec![GateKind::Rx]).unwrap();
        let arch = Architecture::new(vec![], &cfg).unwrap();
        ModelContext::new(cfg.clone(), arch, ParamStore::zeros(&cfg)).unwrap()
    }

    #[test]
    fn zero_gamma_reduces_to_clean_loss() {
        let ctx = toy_ctx();
        let batch = vec![sample(vec![0.1], 1.0), sample(vec![0.4], -1.0)];
        let clean = ctx.batch_mse(&batch).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let cnl = CnlConfig::new(0.02, 0.0).unwrap();
        assert_eq!(ctx.total_loss(&batch, &cnl, &mut rng).unwrap(), clean);
    }

    #[test]
    fn zero_h_doubles_the_clean_loss() {
        let ctx = toy_ctx();
        let batch = vec![sample(vec![0.1], 1.0), sample(vec![0.4], -1.0)];
        let clean = ctx.batch_mse(&batch).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let cnl = CnlConfig::new(0.0, 1.0).unwrap();
        assert_eq!(ctx.total_loss(&batch, &cnl, &mut rng).unwrap(), 2.0 * clean);
    }

    #[test]
    fn total_loss_matches_a_closed_form_evaluation() {
        // Encoding-only 1-qubit model: ŷ(x) = cos(2πx). The oracle reproduces
        // the perturbation signs from an identically seeded rng and assembles
        // the loss from the cosine closed form, never calling forward().
        let ctx = toy_ctx();
        let batch = vec![sample(vec![0.0], 1.0), sample(vec![0.25], -1.0)];
        let h = 0.02;
        let seed = 47;
        let mut oracle_rng = ChaCha8Rng::seed_from_u64(seed);
        let mut expected_robust = 0.0;
        let mut expected_clean = 0.0;
        for s in &batch {
            let x = s.features[0];
            expected_clean += loss_mse(s.label, (TAU * x).cos());
            let xi: f64 = oracle_rng.sample(StandardNormal);
            let xp = if xi < 0.0 { x - h } else { x + h };
            expected_robust += loss_mse(s.label, (TAU * xp).cos());
        }
        expected_clean /= batch.len() as f64;
        expected_robust /= batch.len() as f64;
        let expected = expected_clean + 1.0 * expected_robust;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cnl = CnlConfig::new(h, 1.0).unwrap();
        let got = ctx.total_loss(&batch, &cnl, &mut rng).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-12);
    }

    #[test]
    fn omega_gradients_match_finite_differences() {
        let cfg = ModelConfig::new(2, 2, vec![GateKind::Rx, GateKind::Zz, GateKind::Crz]).unwrap();
        let arch = Architecture::new(vec![0, 2], &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let store = ParamStore::random_init(&cfg, &mut rng);
        let ctx = ModelContext::new(cfg, arch, store).unwrap();
        let batch = vec![sample(vec![0.2, 0.7], 1.0), sample(vec![0.9, 0.35], -1.0)];
        let features: Vec<Vec<f64>> = batch.iter().map(|s| s.features.clone()).collect();
        let perturbed = cnl_perturb_batch(&features, 0.02, &mut rng);
        let gamma = 1.0;
        let grads = ctx.omega_loss_grads(&batch, &perturbed, gamma).unwrap();
        assert_eq!(grads.len(), ctx.store().len());
        let h = 1e-5;
        for i in 0..grads.len() {
            let mut up = ctx.clone();
            up.store_mut().as_mut_slice()[i] += h;
            let mut down = ctx.clone();
            down.store_mut().as_mut_slice()[i] -= h;
            let lp = up.total_loss_frozen(&batch, &perturbed, gamma).unwrap();
            let lm = down.total_loss_frozen(&batch, &perturbed, gamma).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            assert!((grads[i] - fd).abs() <= 1e-6, "entry {i}: {} vs {fd}", grads[i]);
        }
    }

    #[test]
    fn unselected_slots_get_exact_zero_gradients() {
        let cfg = ModelConfig::new(2, 1, vec![GateKind::Rx, GateKind::Yy]).unwrap();
        let arch = Architecture::new(vec![0], &cfg).unwrap();
        let store = ParamStore::random_init(&cfg, &mut ChaCha8Rng::seed_from_u64(59));
        let ctx = ModelContext::new(cfg, arch, store).unwrap();
        let batch = vec![sample(vec![0.3, 0.6], 1.0)];
        let perturbed = vec![vec![0.32, 0.58]];
        let grads = ctx.omega_loss_grads(&batch, &perturbed, 1.0).unwrap();
        // Slots: Rx instances 0..2, then Yy instance 0 (ring of one edge).
        let yy_idx = ctx.store().flat_index(0, 1, 0).unwrap();
        assert_eq!(grads[yy_idx], 0.0);
        assert!(grads.iter().take(2).any(|&g| g != 0.0));
    }
}
