//! Monte-Carlo Pauli noise: one trajectory applies a sampled error after each
//! gate, independently per qubit the gate touches.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{C64, Circuit, Statevector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum NoiseKind {
    Depolarizing,
    BitFlip,
    PhaseFlip,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [NoiseKind::Depolarizing, NoiseKind::BitFlip, NoiseKind::PhaseFlip];

    pub fn name(&self) -> &'static str {
        match self {
            NoiseKind::Depolarizing => "DEPOLARIZING",
            NoiseKind::BitFlip => "BITFLIP",
            NoiseKind::PhaseFlip => "PHASEFLIP",
        }
    }

    pub fn from_name(name: &str) -> Option<NoiseKind> {
        NoiseKind::ALL.iter().copied().find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub prob: f64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&prob) || !prob.is_finite() {
            return Err(Error::BadProbability { value: prob });
        }
        Ok(Self { kind, prob })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// Draws the error for one qubit after one gate: `None` with probability
/// `1 - p`. Depolarizing splits `p` evenly across X, Y, Z; the flip channels
/// apply their single Pauli with probability `p`.
pub fn sample_error(spec: &NoiseSpec, rng: &mut ChaCha8Rng) -> Option<Pauli> {
    let draw: f64 = rng.gen();
    if draw >= spec.prob {
        return None;
    }
    Some(match spec.kind {
        NoiseKind::BitFlip => Pauli::X,
        NoiseKind::PhaseFlip => Pauli::Z,
        NoiseKind::Depolarizing => {
            let third = spec.prob / 3.0;
            if draw < third {
                Pauli::X
            } else if draw < 2.0 * third {
                Pauli::Y
            } else {
                Pauli::Z
            }
        }
    })
}

impl Statevector {
    /// Applies a bare Pauli to one qubit in place.
    pub fn apply_pauli(&mut self, pauli: Pauli, q: usize) -> Result<()> {
        if q >= self.n_qubits() {
            return Err(Error::QubitOutOfRange { index: q, n_qubits: self.n_qubits() });
        }
        let mask = 1usize << q;
        let amps = self.amplitudes_mut();
        for i in 0..amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                match pauli {
                    Pauli::X => amps.swap(i, j),
                    Pauli::Y => {
                        let a0 = amps[i];
                        let a1 = amps[j];
                        amps[i] = C64::new(0.0, -1.0) * a1;
                        amps[j] = C64::new(0.0, 1.0) * a0;
                    }
                    Pauli::Z => amps[j] = -amps[j],
                }
            }
        }
        Ok(())
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }
}

/// Runs one noisy trajectory: after each gate, each touched qubit
/// independently suffers a sampled Pauli error.
pub fn run_noisy_trajectory(
    circuit: &Circuit,
    initial: &Statevector,
    spec: &NoiseSpec,
    rng: &mut ChaCha8Rng,
) -> Result<Statevector> {
    circuit.validate()?;
    NoiseSpec::new(spec.kind, spec.prob)?;
    let mut state = initial.clone();
    for g in &circuit.gates {
        state.apply(g)?;
        for &q in &g.qubits {
            if let Some(p) = sample_error(spec, rng) {
                state.apply_pauli(p, q)?;
            }
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{GateInstance, GateKind};
    use rand_chacha::rand_core::SeedableRng;

    #[test]
    fn probability_zero_never_errs() {
        let spec = NoiseSpec::new(NoiseKind::Depolarizing, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10_000 {
            assert_eq!(sample_error(&spec, &mut rng), None);
        }
    }

    #[test]
    fn probability_one_bitflip_always_x() {
        let spec = NoiseSpec::new(NoiseKind::BitFlip, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10_000 {
            assert_eq!(sample_error(&spec, &mut rng), Some(Pauli::X));
        }
    }

    #[test]
    fn depolarizing_frequencies_match_probabilities() {
        let p = 0.1;
        let n = 100_000usize;
        let spec = NoiseSpec::new(NoiseKind::Depolarizing, p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut counts = [0usize; 4];
        for _ in 0..n {
            match sample_error(&spec, &mut rng) {
                None => counts[0] += 1,
                Some(Pauli::X) => counts[1] += 1,
                Some(Pauli::Y) => counts[2] += 1,
                Some(Pauli::Z) => counts[3] += 1,
            }
        }
        let total_err = (counts[1] + counts[2] + counts[3]) as f64 / n as f64;
        let se_total = (p * (1.0 - p) / n as f64).sqrt();
        assert!((total_err - p).abs() <= 3.0 * se_total, "total {total_err}");
        let third = p / 3.0;
        let se_third = (third * (1.0 - third) / n as f64).sqrt();
        for &c in &counts[1..] {
            let f = c as f64 / n as f64;
            assert!((f - third).abs() <= 3.0 * se_third, "pauli share {f}");
        }
    }

    #[test]
    fn zero_probability_trajectory_matches_noiseless_exactly() {
        let mut c = Circuit::new(2);
        c.push(GateInstance::with_theta(GateKind::Rx, vec![0], 0.7));
        c.push(GateInstance::fixed(GateKind::Cnot, vec![0, 1]));
        c.push(GateInstance::with_theta(GateKind::Zz, vec![0, 1], 1.1));
        let init = Statevector::zero(2);
        let spec = NoiseSpec::new(NoiseKind::Depolarizing, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noisy = run_noisy_trajectory(&c, &init, &spec, &mut rng).unwrap();
        let clean = c.run(&init).unwrap();
        assert_eq!(noisy.amplitudes(), clean.amplitudes());
    }

    /// Analytic oracle: a bit-flip channel after RX(θ) flips the sign of ⟨Z⟩
    /// with probability p, so the trajectory mean is (1-2p)·cos θ.
    #[test]
    fn bitflip_mean_matches_analytic_value() {
        let (theta, p, n) = (1.0f64, 0.1, 10_000usize);
        let mut c = Circuit::new(1);
        c.push(GateInstance::with_theta(GateKind::Rx, vec![0], theta));
        let spec = NoiseSpec::new(NoiseKind::BitFlip, p).unwrap();
        let init = Statevector::zero(1);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut acc = 0.0;
        for _ in 0..n {
            acc += run_noisy_trajectory(&c, &init, &spec, &mut rng)
                .unwrap()
                .expectation_z(0)
                .unwrap();
        }
        let mean = acc / n as f64;
        let expected = (1.0 - 2.0 * p) * theta.cos();
        let q = p; // sign flip probability
        let se = theta.cos().abs() * 2.0 * (q * (1.0 - q) / n as f64).sqrt();
        assert!((mean - expected).abs() <= 3.0 * se, "mean {mean} expected {expected}");
    }

    /// Depolarizing flips ⟨Z⟩ when X or Y lands (probability 2p/3), giving
    /// mean (1-4p/3)·cos θ.
    #[test]
    fn depolarizing_mean_matches_analytic_value() {
        let (theta, p, n) = (1.0f64, 0.1, 10_000usize);
        let mut c = Circuit::new(1);
        c.push(GateInstance::with_theta(GateKind::Rx, vec![0], theta));
        let spec = NoiseSpec::new(NoiseKind::Depolarizing, p).unwrap();
        let init = Statevector::zero(1);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut acc = 0.0;
        for _ in 0..n {
            acc += run_noisy_trajectory(&c, &init, &spec, &mut rng)
                .unwrap()
                .expectation_z(0)
                .unwrap();
        }
        let mean = acc / n as f64;
        let expected = (1.0 - 4.0 * p / 3.0) * theta.cos();
        let q = 2.0 * p / 3.0;
        let se = theta.cos().abs() * 2.0 * (q * (1.0 - q) / n as f64).sqrt();
        assert!((mean - expected).abs() <= 3.0 * se, "mean {mean} expected {expected}");
    }

    #[test]
    fn bad_probability_rejected() {
        assert!(matches!(
            NoiseSpec::new(NoiseKind::BitFlip, 1.5),
            Err(Error::BadProbability { value }) if value == 1.5
        ));
        assert!(matches!(
            NoiseSpec::new(NoiseKind::BitFlip, -0.1),
            Err(Error::BadProbability { .. })
        ));
    }

    #[test]
    fn pauli_x_flips_basis_state() {
        let mut s = Statevector::zero(2);
        s.apply_pauli(Pauli::X, 1).unwrap();
        assert_eq!(s.amplitudes()[2], C64::new(1.0, 0.0));
    }
}
