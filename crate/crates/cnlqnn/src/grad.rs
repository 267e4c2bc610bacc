//! Exact gradients of circuit expectations.
//!
//! Gates of the form `exp(-iθG/2)` with `G² = I` (RX, RZ, XX, YY, ZZ) obey the
//! two-term parameter-shift rule `dE/dθ = [E(θ+π/2) - E(θ-π/2)] / 2`. CRZ has
//! generator eigenvalues {0, ±1}, so it is differentiated through the identity
//! `CRZ(θ) = (RZ(θ/2) on target) · CNOT · (RZ(-θ/2) on target) · CNOT`,
//! which yields a sum of two shift-rule terms. A central finite-difference
//! oracle is provided for cross-checks; it never uses the shift rule.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::model::ModelContext;
use crate::sim::{Circuit, GateInstance, GateKind, Statevector};
use crate::{Error, Result};

/// Mean ⟨Z⟩ over a set of qubits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observable {
    qubits: Vec<usize>,
}

impl Observable {
    pub fn mean_z(qubits: Vec<usize>) -> Self {
        assert!(!qubits.is_empty(), "observable needs at least one qubit");
        Self { qubits }
    }

    /// Mean ⟨Z⟩ over all `n` qubits.
    pub fn all(n: usize) -> Self {
        Self::mean_z((0..n).collect())
    }

    pub fn eval(&self, state: &Statevector) -> Result<f64> {
        let mut acc = 0.0;
        for &q in &self.qubits {
            acc += state.expectation_z(q)?;
        }
        Ok(acc / self.qubits.len() as f64)
    }
}

/// Runs `circuit` on `initial` and evaluates `observable`.
pub fn expectation(circuit: &Circuit, initial: &Statevector, observable: &Observable) -> Result<f64> {
    observable.eval(&circuit.run(initial)?)
}

fn check_position(circuit: &Circuit, position: usize) -> Result<&GateInstance> {
    let gate = circuit
        .gates
        .get(position)
        .ok_or(Error::GatePositionOutOfRange { position, len: circuit.gates.len() })?;
    if !gate.kind.parameterized() {
        return Err(Error::NotParameterized { position, kind: gate.kind });
    }
    Ok(gate)
}

fn eval_with_theta(
    circuit: &Circuit,
    initial: &Statevector,
    observable: &Observable,
    position: usize,
    theta: f64,
) -> Result<f64> {
    let mut shifted = circuit.clone();
    shifted.gates[position].theta = Some(theta);
    expectation(&shifted, initial, observable)
}

/// Replaces the CRZ at `position` with its four-gate decomposition and
/// returns the new circuit plus the positions of the two RZ angles
/// (first carries -θ/2, second +θ/2).
fn decompose_crz(circuit: &Circuit, position: usize, theta: f64) -> (Circuit, usize, usize) {
    let gate = &circuit.gates[position];
    let (control, target) = (gate.qubits[0], gate.qubits[1]);
    let mut out = Circuit::new(circuit.n_qubits);
    out.gates.extend_from_slice(&circuit.gates[..position]);
    out.push(GateInstance::fixed(GateKind::Cnot, vec![control, target]));
    out.push(GateInstance::with_theta(GateKind::Rz, vec![target], -theta / 2.0));
    out.push(GateInstance::fixed(GateKind::Cnot, vec![control, target]));
    out.push(GateInstance::with_theta(GateKind::Rz, vec![target], theta / 2.0));
    out.gates.extend_from_slice(&circuit.gates[position + 1..]);
    (out, position + 1, position + 3)
}

/// Exact derivative of the expectation with respect to the angle of the gate
/// at `position`.
pub fn param_shift_grad(
    circuit: &Circuit,
    initial: &Statevector,
    observable: &Observable,
    position: usize,
) -> Result<f64> {
    circuit.validate()?;
    let gate = check_position(circuit, position)?;
    let theta = gate.theta.ok_or(Error::MissingTheta { kind: gate.kind })?;
    if gate.kind == GateKind::Crz {
        let (decomposed, neg_pos, pos_pos) = decompose_crz(circuit, position, theta);
        let d_neg = two_term_shift(&decomposed, initial, observable, neg_pos, -theta / 2.0)?;
        let d_pos = two_term_shift(&decomposed, initial, observable, pos_pos, theta / 2.0)?;
        // Chain rule through the two half-angles.
        return Ok(0.5 * d_pos - 0.5 * d_neg);
    }
    two_term_shift(circuit, initial, observable, position, theta)
}

fn two_term_shift(
    circuit: &Circuit,
    initial: &Statevector,
    observable: &Observable,
    position: usize,
    theta: f64,
) -> Result<f64> {
    let plus = eval_with_theta(circuit, initial, observable, position, theta + FRAC_PI_2)?;
    let minus = eval_with_theta(circuit, initial, observable, position, theta - FRAC_PI_2)?;
    Ok((plus - minus) / 2.0)
}

/// Independent oracle: central finite difference on the stored angle.
pub fn finite_diff_grad(
    circuit: &Circuit,
    initial: &Statevector,
    observable: &Observable,
    position: usize,
    step: f64,
) -> Result<f64> {
    circuit.validate()?;
    let gate = check_position(circuit, position)?;
    let theta = gate.theta.ok_or(Error::MissingTheta { kind: gate.kind })?;
    let plus = eval_with_theta(circuit, initial, observable, position, theta + step)?;
    let minus = eval_with_theta(circuit, initial, observable, position, theta - step)?;
    Ok((plus - minus) / (2.0 * step))
}

/// Default step for the finite-difference oracle.
pub const FD_STEP: f64 = 1e-5;

/// d(loss)/d(pixel j) for the squared-error loss `(y - ŷ(x))²`, computed with
/// the shift rule on the encoding gate: `dθ_j/dx_j = 2π`.
pub fn input_grad(ctx: &ModelContext, x: &[f64], y: f64, j: usize) -> Result<f64> {
    let (circuit, init) = ctx.encoded_circuit(x)?;
    if j >= ctx.n_qubits() {
        return Err(Error::QubitOutOfRange { index: j, n_qubits: ctx.n_qubits() });
    }
    let obs = ctx.observable();
    let yhat = expectation(&circuit, &init, &obs)?;
    let dy_dtheta = param_shift_grad(&circuit, &init, &obs, j)?;
    Ok(-2.0 * (y - yhat) * dy_dtheta * 2.0 * PI)
}

/// Full input gradient: one entry per pixel, sharing a single base forward.
pub fn input_grad_vec(ctx: &ModelContext, x: &[f64], y: f64) -> Result<Vec<f64>> {
    let (circuit, init) = ctx.encoded_circuit(x)?;
    let obs = ctx.observable();
    let yhat = expectation(&circuit, &init, &obs)?;
    let scale = -2.0 * (y - yhat) * 2.0 * PI;
    (0..ctx.n_qubits())
        .map(|j| Ok(scale * param_shift_grad(&circuit, &init, &obs, j)?))
        .collect()
}
