//! Desk-scale quantum architecture search with a classical noise layer.
//!
//! This crate implements a small, fully deterministic research stack:
//!
//! * [`sim`] — dense statevector simulation of up to 16 qubits with a fixed
//!   nine-gate pool and Monte-Carlo Pauli noise channels,
//! * [`grad`] — exact parameter-shift gradients for circuit angles and encoded
//!   input pixels, with a finite-difference oracle for cross-checks,
//! * [`data`] — IDX (MNIST/FashionMNIST) and CIFAR-10 binary parsing, grayscale
//!   conversion, block-mean downsampling to qubit grids, and a hermetic
//!   synthetic dataset,
//! * [`model`] — angle-encoded supernet circuits with shared parameters, the
//!   classical noise layer (CNL) perturbation, and the combined training loss,
//! * [`search`] — Gumbel-Softmax architecture sampling, a score-function
//!   gradient estimator for the architecture logits, SGD/Adam optimizers, and
//!   the full search loop with early stopping,
//! * [`attacks`] — FGSM/PGD/BIM/MIM input attacks plus black-box transfer from
//!   a classical surrogate,
//! * [`baseline`] — a tanh MLP with exact backprop, used both as the classical
//!   comparison model and as the transfer-attack surrogate.
//!
//! Everything downstream of a master seed is reproducible bit-for-bit: random
//! streams are derived per purpose (see [`rng`]), and all floating-point
//! reductions run in a fixed order regardless of thread count.
//!
//! # Example
//!
//! Simulate a Bell state and read out ⟨Z⟩ per qubit:
//!
//! ```
//! use cnlqnn::sim::{Circuit, GateInstance, GateKind, Statevector};
//!
//! let mut c = Circuit::new(2);
//! c.push(GateInstance::with_theta(GateKind::Rx, vec![0], std::f64::consts::PI / 2.0));
//! c.push(GateInstance::fixed(GateKind::Cnot, vec![0, 1]));
//! let state = c.run(&Statevector::zero(2)).unwrap();
//! // Both qubits are maximally mixed locally: ⟨Z⟩ = 0.
//! assert!(state.expectation_z(0).unwrap().abs() < 1e-12);
//! assert!(state.expectation_z(1).unwrap().abs() < 1e-12);
//! ```

pub mod attacks;
pub mod baseline;
pub mod data;
pub mod grad;
pub mod model;
pub mod rng;
pub mod search;
pub mod sim;

#[cfg(doctest)]
mod book;

use sim::GateKind;

/// Crate-wide error type. Every fallible operation reports which contract was
/// violated and with what values; nothing panics on user input.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {n_qubits} qubit(s)")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("qubit count {n_qubits} outside supported range 1..=16")]
    QubitCountUnsupported { n_qubits: usize },
    #[error("{kind:?} acts on {expected} qubit(s), got {got}")]
    WrongQubitCount {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("two-qubit gate {kind:?} applied to duplicate qubit {qubit}")]
    DuplicateQubit { kind: GateKind, qubit: usize },
    #[error("{kind:?} is parameterized but no angle was supplied")]
    MissingTheta { kind: GateKind },
    #[error("{kind:?} takes no angle but one was supplied")]
    UnexpectedTheta { kind: GateKind },
    #[error("amplitude vector length {len} is not a power of two in 2..=65536")]
    BadAmplitudeCount { len: usize },
    #[error("state norm {norm} deviates from 1 by more than {tolerance}")]
    NotNormalized { norm: f64, tolerance: f64 },
    #[error("probability {value} outside [0, 1]")]
    BadProbability { value: f64 },
    #[error("gate position {position} out of range for circuit of {len} gate(s)")]
    GatePositionOutOfRange { position: usize, len: usize },
    #[error("gate at position {position} ({kind:?}) is not parameterized")]
    NotParameterized { position: usize, kind: GateKind },
    #[error("malformed data at byte {offset}: {reason}")]
    DataFormat { offset: usize, reason: String },
    #[error("IDX payload length mismatch: expected {expected} bytes, got {actual}")]
    IdxLength { expected: usize, actual: usize },
    #[error("CIFAR-10 data length {len} is not a multiple of the {record} byte record size")]
    CifarRecordSize { len: usize, record: usize },
    #[error("expected a 3-channel image, got {channels} channel(s)")]
    NotRgb { channels: usize },
    #[error("downsampling needs a square image, got {width}x{height}")]
    NotSquare { width: usize, height: usize },
    #[error("image {rows}x{cols} too small for grid {grid}")]
    ImageTooSmall { rows: usize, cols: usize, grid: usize },
    #[error("class {class} has {available} sample(s), need {needed}")]
    InsufficientClass {
        class: u8,
        available: usize,
        needed: usize,
    },
    #[error("pixel vector length {got} does not match {expected} qubit(s)")]
    PixelCountMismatch { got: usize, expected: usize },
    #[error("architecture has {got} choice(s), model expects {expected} layer(s)")]
    ArchLayerMismatch { got: usize, expected: usize },
    #[error("architecture choice {choice} out of range for pool of {pool} gate kind(s)")]
    ArchChoiceOutOfRange { choice: usize, pool: usize },
    #[error("two-qubit gate kind {kind:?} needs at least 2 qubits, model has {n_qubits}")]
    RingTooSmall { kind: GateKind, n_qubits: usize },
    #[error("gate pool lists {kind:?} more than once")]
    DuplicatePoolKind { kind: GateKind },
    #[error("parameter store shape {got} does not match expected {expected}")]
    StoreShapeMismatch { got: String, expected: String },
    #[error("omega key (layer {layer}, pool slot {slot}, instance {instance}) out of range")]
    OmegaKeyOutOfRange { layer: usize, slot: usize, instance: usize },
    #[error("hyperparameter {name} must be non-negative, got {value}")]
    NegativeHyperparameter { name: &'static str, value: f64 },
    #[error("{what}: length {got} does not match {expected}")]
    LengthMismatch { what: &'static str, got: usize, expected: usize },
    #[error("gradient shape {got} does not match parameter shape {expected}")]
    GradShapeMismatch { got: String, expected: String },
    #[error("accuracy undefined on an empty sample set")]
    EmptySampleSet,
    #[error("empty mini-batch")]
    EmptyBatch,
    #[error("architecture logits shape {got} does not match {expected}")]
    LogitsShapeMismatch { got: String, expected: String },
    #[error("no architecture draws supplied to the gradient estimator")]
    NoDraws,
    #[error("temperature {value} must be positive")]
    BadTemperature { value: f64 },
    #[error("decay factor {value} outside (0, 1)")]
    BadDecay { value: f64 },
    #[error("search configured with {what} = 0")]
    ZeroSearchParameter { what: &'static str },
    #[error("gate pool is empty")]
    EmptyPool,
    #[error("attack epsilon {value} must be non-negative")]
    NegativeEpsilon { value: f64 },
    #[error("iterative attack configured with 0 steps")]
    ZeroSteps,
    #[error("attack step size {value} must be positive")]
    BadStepSize { value: f64 },
    #[error("surrogate model has not been trained")]
    UntrainedSurrogate,
    #[error("input dimension {got} does not match network dimension {expected}")]
    MlpDimensionMismatch { got: usize, expected: usize },
    #[error("dataset split needs {needed} sample(s), pool has {available}")]
    InsufficientSamples { needed: usize, available: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
