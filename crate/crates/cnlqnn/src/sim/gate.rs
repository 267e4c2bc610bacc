//! The fixed gate pool: matrix conventions, arity, and circuit containers.
//!
//! Rotation conventions: `RX(θ) = exp(-iθX/2)`, `RZ(θ) = exp(-iθZ/2)`, and the
//! two-qubit rotations `XX/YY/ZZ(θ) = exp(-iθ P⊗P/2)`. `CRZ(θ)` multiplies the
//! control-1 subspace by `diag(e^{-iθ/2}, e^{+iθ/2})`. CNOT, CZ and ISWAP are
//! the standard fixed gates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type C64 = Complex64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// The nine supported gate kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Rx,
    Rz,
    Crz,
    Xx,
    Yy,
    Zz,
    Cnot,
    Cz,
    Iswap,
}

impl GateKind {
    pub const ALL: [GateKind; 9] = [
        GateKind::Rx,
        GateKind::Rz,
        GateKind::Crz,
        GateKind::Xx,
        GateKind::Yy,
        GateKind::Zz,
        GateKind::Cnot,
        GateKind::Cz,
        GateKind::Iswap,
    ];

    /// Number of qubits the gate acts on.
    pub fn arity(&self) -> usize {
        match self {
            GateKind::Rx | GateKind::Rz => 1,
            _ => 2,
        }
    }

    /// Whether the gate takes a rotation angle.
    pub fn parameterized(&self) -> bool {
        !matches!(self, GateKind::Cnot | GateKind::Cz | GateKind::Iswap)
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::Rx => "RX",
            GateKind::Rz => "RZ",
            GateKind::Crz => "CRZ",
            GateKind::Xx => "XX",
            GateKind::Yy => "YY",
            GateKind::Zz => "ZZ",
            GateKind::Cnot => "CNOT",
            GateKind::Cz => "CZ",
            GateKind::Iswap => "ISWAP",
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        GateKind::ALL.iter().copied().find(|k| k.name() == name)
    }
}

/// Dense matrix of a gate: 2x2 for single-qubit kinds, 4x4 for two-qubit kinds.
/// Two-qubit matrices are written in the basis `|q_a q_b⟩` where `q_a` is the
/// first qubit listed (control for CRZ/CNOT) and indexes the high bit.
#[derive(Debug, Clone, PartialEq)]
pub enum GateMatrix {
    Single([[C64; 2]; 2]),
    Two([[C64; 4]; 4]),
}

impl GateMatrix {
    pub fn dim(&self) -> usize {
        match self {
            GateMatrix::Single(_) => 2,
            GateMatrix::Two(_) => 4,
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        match self {
            GateMatrix::Single(m) => m[row][col],
            GateMatrix::Two(m) => m[row][col],
        }
    }
}

/// Matrix for `kind`. `theta` must be `Some` exactly when the kind is
/// parameterized.
pub fn gate_matrix(kind: GateKind, theta: Option<f64>) -> Result<GateMatrix> {
    let angle = match (kind.parameterized(), theta) {
        (true, Some(t)) => t,
        (true, None) => return Err(Error::MissingTheta { kind }),
        (false, Some(_)) => return Err(Error::UnexpectedTheta { kind }),
        (false, None) => 0.0,
    };
    let half = angle / 2.0;
    let (co, si) = (half.cos(), half.sin());
    let zero = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let m = match kind {
        GateKind::Rx => GateMatrix::Single([[c(co, 0.0), c(0.0, -si)], [c(0.0, -si), c(co, 0.0)]]),
        GateKind::Rz => GateMatrix::Single([[c(co, -si), zero], [zero, c(co, si)]]),
        GateKind::Crz => GateMatrix::Two([
            [one, zero, zero, zero],
            [zero, one, zero, zero],
            [zero, zero, c(co, -si), zero],
            [zero, zero, zero, c(co, si)],
        ]),
        GateKind::Xx => GateMatrix::Two([
            [c(co, 0.0), zero, zero, c(0.0, -si)],
            [zero, c(co, 0.0), c(0.0, -si), zero],
            [zero, c(0.0, -si), c(co, 0.0), zero],
            [c(0.0, -si), zero, zero, c(co, 0.0)],
        ]),
        GateKind::Yy => GateMatrix::Two([
            [c(co, 0.0), zero, zero, c(0.0, si)],
            [zero, c(co, 0.0), c(0.0, -si), zero],
            [zero, c(0.0, -si), c(co, 0.0), zero],
            [c(0.0, si), zero, zero, c(co, 0.0)],
        ]),
        GateKind::Zz => GateMatrix::Two([
            [c(co, -si), zero, zero, zero],
            [zero, c(co, si), zero, zero],
            [zero, zero, c(co, si), zero],
            [zero, zero, zero, c(co, -si)],
        ]),
        GateKind::Cnot => GateMatrix::Two([
            [one, zero, zero, zero],
            [zero, one, zero, zero],
            [zero, zero, zero, one],
            [zero, zero, one, zero],
        ]),
        GateKind::Cz => GateMatrix::Two([
            [one, zero, zero, zero],
            [zero, one, zero, zero],
            [zero, zero, one, zero],
            [zero, zero, zero, c(-1.0, 0.0)],
        ]),
        GateKind::Iswap => GateMatrix::Two([
            [one, zero, zero, zero],
            [zero, zero, c(0.0, 1.0), zero],
            [zero, c(0.0, 1.0), zero, zero],
            [zero, zero, zero, one],
        ]),
    };
    Ok(m)
}

/// One gate placed on concrete qubits, with its angle if parameterized.
#[derive(Debug, Clone, PartialEq)]
pub struct GateInstance {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub theta: Option<f64>,
}

impl GateInstance {
    pub fn with_theta(kind: GateKind, qubits: Vec<usize>, theta: f64) -> Self {
        Self { kind, qubits, theta: Some(theta) }
    }

    pub fn fixed(kind: GateKind, qubits: Vec<usize>) -> Self {
        Self { kind, qubits, theta: None }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let expected = self.kind.arity();
        if self.qubits.len() != expected {
            return Err(Error::WrongQubitCount {
                kind: self.kind,
                expected,
                got: self.qubits.len(),
            });
        }
        for &q in &self.qubits {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
        }
        if expected == 2 && self.qubits[0] == self.qubits[1] {
            return Err(Error::DuplicateQubit {
                kind: self.kind,
                qubit: self.qubits[0],
            });
        }
        match (self.kind.parameterized(), self.theta) {
            (true, None) => Err(Error::MissingTheta { kind: self.kind }),
            (false, Some(_)) => Err(Error::UnexpectedTheta { kind: self.kind }),
            _ => Ok(()),
        }
    }

    pub fn matrix(&self) -> Result<GateMatrix> {
        gate_matrix(self.kind, self.theta)
    }
}

/// An ordered gate list on a fixed qubit count.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<GateInstance>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, gates: Vec::new() }
    }

    pub fn push(&mut self, gate: GateInstance) {
        self.gates.push(gate);
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > 16 {
            return Err(Error::QubitCountUnsupported { n_qubits: self.n_qubits });
        }
        for g in &self.gates {
            g.validate(self.n_qubits)?;
        }
        Ok(())
    }
}
