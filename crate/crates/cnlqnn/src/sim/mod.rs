//! Dense statevector simulation for 1..=16 qubits.
//!
//! Basis states are indexed by bit patterns with qubit 0 as the least
//! significant bit, so `|q1 q0⟩ = |01⟩` is amplitude index 1.

mod gate;
pub mod noise;

pub use gate::{gate_matrix, C64, Circuit, GateInstance, GateKind, GateMatrix};

use crate::{Error, Result};

const NORM_TOLERANCE: f64 = 1e-9;

/// A normalized pure state of `n_qubits` qubits: `2^n` complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl Statevector {
    /// `|0...0⟩` on `n_qubits`.
    pub fn zero(n_qubits: usize) -> Self {
        assert!(
            (1..=16).contains(&n_qubits),
            "qubit count {n_qubits} outside 1..=16"
        );
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = C64::new(1.0, 0.0);
        Self { n_qubits, amplitudes }
    }

    /// Wraps raw amplitudes. The length must be a power of two in `2..=65536`
    /// and the 2-norm must be within `1e-9` of 1.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || len > (1 << 16) || !len.is_power_of_two() {
            return Err(Error::BadAmplitudeCount { len });
        }
        let n_qubits = len.trailing_zeros() as usize;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm, tolerance: NORM_TOLERANCE });
        }
        Ok(Self { n_qubits, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Applies one gate in place.
    pub fn apply(&mut self, gate: &GateInstance) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match gate.matrix()? {
            GateMatrix::Single(u) => self.apply_single(gate.qubits[0], &u),
            GateMatrix::Two(u) => self.apply_two(gate.qubits[0], gate.qubits[1], &u),
        }
        Ok(())
    }

    fn apply_single(&mut self, q: usize, u: &[[C64; 2]; 2]) {
        let mask = 1usize << q;
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let j = i | mask;
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[j];
                self.amplitudes[i] = u[0][0] * a0 + u[0][1] * a1;
                self.amplitudes[j] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
    }

    /// Gate basis index is `2*bit(qa) + bit(qb)` for listed qubits `(qa, qb)`.
    fn apply_two(&mut self, qa: usize, qb: usize, u: &[[C64; 4]; 4]) {
        let ma = 1usize << qa;
        let mb = 1usize << qb;
        for i in 0..self.amplitudes.len() {
            if i & ma == 0 && i & mb == 0 {
                let idx = [i, i | mb, i | ma, i | ma | mb];
                let old = [
                    self.amplitudes[idx[0]],
                    self.amplitudes[idx[1]],
                    self.amplitudes[idx[2]],
                    self.amplitudes[idx[3]],
                ];
                for r in 0..4 {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..4 {
                        acc += u[r][k] * old[k];
                    }
                    self.amplitudes[idx[r]] = acc;
                }
            }
        }
    }

    /// `⟨Z⟩` of one qubit: P(bit 0) - P(bit 1).
    pub fn expectation_z(&self, q: usize) -> Result<f64> {
        if q >= self.n_qubits {
            return Err(Error::QubitOutOfRange { index: q, n_qubits: self.n_qubits });
        }
        let mask = 1usize << q;
        let mut acc = 0.0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            let sign = if i & mask == 0 { 1.0 } else { -1.0 };
            acc += sign * a.norm_sqr();
        }
        Ok(acc)
    }
}

impl Circuit {
    /// Runs the circuit on `initial`, returning the final state.
    pub fn run(&self, initial: &Statevector) -> Result<Statevector> {
        self.validate()?;
        if initial.n_qubits != self.n_qubits {
            return Err(Error::QubitCountUnsupported { n_qubits: self.n_qubits });
        }
        let mut state = initial.clone();
        for g in &self.gates {
            state.apply(g)?;
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
    use std::f64::consts::PI;

    fn bit(i: usize, q: usize) -> usize {
        (i >> q) & 1
    }

    /// Independent oracle: embed the gate into a dense 2^n x 2^n matrix and
    /// multiply, without reusing the simulator's bit-pair update.
    fn dense_apply(state: &[C64], n: usize, g: &GateInstance) -> Vec<C64> {
        let dim = 1 << n;
        let m = g.matrix().unwrap();
        let mut out = vec![C64::new(0.0, 0.0); dim];
        for row in 0..dim {
            for col in 0..dim {
                let factor = match m {
                    GateMatrix::Single(u) => {
                        let q = g.qubits[0];
                        let mut ok = true;
                        for r in 0..n {
                            if r != q && bit(row, r) != bit(col, r) {
                                ok = false;
                            }
                        }
                        if ok { u[bit(row, q)][bit(col, q)] } else { C64::new(0.0, 0.0) }
                    }
                    GateMatrix::Two(u) => {
                        let (qa, qb) = (g.qubits[0], g.qubits[1]);
                        let mut ok = true;
                        for r in 0..n {
                            if r != qa && r != qb && bit(row, r) != bit(col, r) {
                                ok = false;
                            }
                        }
                        if ok {
                            u[2 * bit(row, qa) + bit(row, qb)][2 * bit(col, qa) + bit(col, qb)]
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    }
                };
                out[row] += factor * state[col];
            }
        }
        out
    }

    fn random_gate(rng: &mut ChaCha8Rng, n: usize) -> GateInstance {
        let kind = GateKind::ALL[rng.gen_range(0..GateKind::ALL.len())];
        let theta = kind.parameterized().then(|| rng.gen_range(-PI..PI));
        if kind.arity() == 1 {
            GateInstance { kind, qubits: vec![rng.gen_range(0..n)], theta }
        } else {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n);
            while b == a {
                b = rng.gen_range(0..n);
            }
            GateInstance { kind, qubits: vec![a, b], theta }
        }
    }

    #[test]
    fn rx_pi_maps_zero_to_minus_i_one() {
        let mut s = Statevector::zero(1);
        s.apply(&GateInstance::with_theta(GateKind::Rx, vec![0], PI)).unwrap();
        assert!((s.amplitudes()[0] - C64::new(0.0, 0.0)).norm() < 1e-15);
        assert!((s.amplitudes()[1] - C64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn cnot_flips_target_when_control_set() {
        // |01⟩ (qubit 0 = 1) with CNOT(control=0, target=1) becomes |11⟩.
        let mut amps = vec![C64::new(0.0, 0.0); 4];
        amps[1] = C64::new(1.0, 0.0);
        let mut s = Statevector::from_amplitudes(amps).unwrap();
        s.apply(&GateInstance::fixed(GateKind::Cnot, vec![0, 1])).unwrap();
        assert!((s.amplitudes()[3] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn iswap_swaps_with_phase_i() {
        let mut amps = vec![C64::new(0.0, 0.0); 4];
        amps[1] = C64::new(1.0, 0.0);
        let mut s = Statevector::from_amplitudes(amps).unwrap();
        s.apply(&GateInstance::fixed(GateKind::Iswap, vec![0, 1])).unwrap();
        assert!((s.amplitudes()[2] - C64::new(0.0, 1.0)).norm() < 1e-15);
        assert!(s.amplitudes()[1].norm() < 1e-15);
    }

    #[test]
    fn empty_circuit_is_identity() {
        let c = Circuit::new(3);
        let s = c.run(&Statevector::zero(3)).unwrap();
        assert_eq!(s, Statevector::zero(3));
    }

    #[test]
    fn two_half_rotations_compose_to_one_full() {
        let mut twice = Circuit::new(1);
        twice.push(GateInstance::with_theta(GateKind::Rx, vec![0], PI / 2.0));
        twice.push(GateInstance::with_theta(GateKind::Rx, vec![0], PI / 2.0));
        let mut once = Circuit::new(1);
        once.push(GateInstance::with_theta(GateKind::Rx, vec![0], PI));
        let a = twice.run(&Statevector::zero(1)).unwrap();
        let b = once.run(&Statevector::zero(1)).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() <= 1e-12);
        }
    }

    #[test]
    fn cnot_applied_twice_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let raw: Vec<C64> = (0..4).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let amps: Vec<C64> = raw.into_iter().map(|a| a / norm).collect();
        let s0 = Statevector::from_amplitudes(amps).unwrap();
        let mut s = s0.clone();
        let g = GateInstance::fixed(GateKind::Cnot, vec![0, 1]);
        s.apply(&g).unwrap();
        s.apply(&g).unwrap();
        for (x, y) in s.amplitudes().iter().zip(s0.amplitudes()) {
            assert!((x - y).norm() <= 1e-12);
        }
    }

    #[test]
    fn expectation_of_zero_state_is_one() {
        let s = Statevector::zero(2);
        assert_eq!(s.expectation_z(0).unwrap(), 1.0);
        assert_eq!(s.expectation_z(1).unwrap(), 1.0);
    }

    #[test]
    fn rx_half_pi_gives_zero_expectation() {
        let mut s = Statevector::zero(1);
        s.apply(&GateInstance::with_theta(GateKind::Rx, vec![0], PI / 2.0)).unwrap();
        assert_abs_diff_eq!(s.expectation_z(0).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rx_theta_gives_cos_theta() {
        for theta in [0.3, 1.0, 2.5] {
            let mut s = Statevector::zero(1);
            s.apply(&GateInstance::with_theta(GateKind::Rx, vec![0], theta)).unwrap();
            assert_abs_diff_eq!(s.expectation_z(0).unwrap(), theta.cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn xx_on_zero_zero_gives_cos_theta() {
        let theta = 1.3;
        let mut s = Statevector::zero(2);
        s.apply(&GateInstance::with_theta(GateKind::Xx, vec![0, 1], theta)).unwrap();
        assert_abs_diff_eq!(s.expectation_z(0).unwrap(), theta.cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.expectation_z(1).unwrap(), theta.cos(), epsilon = 1e-12);
    }

    #[test]
    fn expectation_rejects_bad_qubit() {
        let s = Statevector::zero(2);
        assert!(matches!(
            s.expectation_z(2),
            Err(Error::QubitOutOfRange { index: 2, n_qubits: 2 })
        ));
    }

    #[test]
    fn from_amplitudes_rejects_bad_inputs() {
        let amps = vec![C64::new(1.0, 0.0); 3];
        assert!(matches!(
            Statevector::from_amplitudes(amps),
            Err(Error::BadAmplitudeCount { len: 3 })
        ));
        let amps = vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
        assert!(matches!(
            Statevector::from_amplitudes(amps),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn norm_preserved_across_long_random_circuits() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..=6 {
            let mut c = Circuit::new(n);
            for _ in 0..50 {
                c.push(random_gate(&mut rng, n));
            }
            let s = c.run(&Statevector::zero(n)).unwrap();
            assert!((s.norm() - 1.0).abs() <= 1e-9, "norm {}", s.norm());
        }
    }

    #[test]
    fn bit_pair_update_matches_dense_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 1..=4 {
            for _ in 0..25 {
                let g = random_gate(&mut rng, n.max(2)).clone();
                let n = n.max(g.qubits.iter().copied().max().unwrap() + 1);
                let raw: Vec<C64> = (0..1 << n)
                    .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                let amps: Vec<C64> = raw.into_iter().map(|a| a / norm).collect();
                let expected = dense_apply(&amps, n, &g);
                let mut s = Statevector::from_amplitudes(amps).unwrap();
                s.apply(&g).unwrap();
                for (x, y) in s.amplitudes().iter().zip(&expected) {
                    assert!((x - y).norm() <= 1e-12, "{g:?}");
                }
            }
        }
    }
}
