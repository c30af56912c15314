//! The truncated two-node Hilbert space.
//!
//! Four two-level factors in the fixed order
//! `A-qubit ⊗ A-cavity ⊗ B-cavity ⊗ B-qubit`, each with basis `{|0>, |1>}`
//! where for qubits `|0> = |g>` and `|1> = |e>`. A basis index is the binary
//! number `qA cA cB qB`, most significant bit first.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{ComplexMatrix, I, ONE, ZERO};

pub const DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    QubitA,
    CavityA,
    CavityB,
    QubitB,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::QubitA, Mode::CavityA, Mode::CavityB, Mode::QubitB];

    /// Position of the factor in the tensor product.
    pub fn factor(self) -> usize {
        match self {
            Mode::QubitA => 0,
            Mode::CavityA => 1,
            Mode::CavityB => 2,
            Mode::QubitB => 3,
        }
    }

    fn bit(self) -> usize {
        3 - self.factor()
    }
}

/// Occupation (0 or 1) of `mode` in basis state `index`.
#[inline]
pub fn occupation(index: usize, mode: Mode) -> usize {
    (index >> mode.bit()) & 1
}

/// Basis index of `|qA cA cB qB>`.
pub fn basis_index(qubit_a: usize, cavity_a: usize, cavity_b: usize, qubit_b: usize) -> usize {
    debug_assert!(qubit_a < 2 && cavity_a < 2 && cavity_b < 2 && qubit_b < 2);
    (qubit_a << 3) | (cavity_a << 2) | (cavity_b << 1) | qubit_b
}

/// Annihilation operator of `which`, embedded with identities on the other
/// three factors.
pub fn mode_operator(which: Mode) -> ComplexMatrix {
    ComplexMatrix::from_fn(DIM, |row, col| {
        let differs_only_in_mode = (row ^ col) == (1 << which.bit());
        if differs_only_in_mode && occupation(col, which) == 1 {
            ONE
        } else {
            ZERO
        }
    })
}

/// Single-qubit Pauli label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }

    /// 2×2 matrix in the `{|g>, |e>}` basis: `Z = 2|e><e| - 1`,
    /// `X = |g><e| + |e><g|`, `Y = i(|e><g| - |g><e|)`.
    pub fn matrix(self) -> ComplexMatrix {
        let entries = match self {
            Pauli::I => [ONE, ZERO, ZERO, ONE],
            Pauli::X => [ZERO, ONE, ONE, ZERO],
            Pauli::Y => [ZERO, -I, I, ZERO],
            Pauli::Z => [-ONE, ZERO, ZERO, ONE],
        };
        ComplexMatrix::from_row_major(entries.to_vec())
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown Pauli label {0:?} (expected one of I, X, Y, Z)")]
pub struct ParsePauliError(pub String);

impl FromStr for Pauli {
    type Err = ParsePauliError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "I" => Ok(Pauli::I),
            "X" => Ok(Pauli::X),
            "Y" => Ok(Pauli::Y),
            "Z" => Ok(Pauli::Z),
            other => Err(ParsePauliError(other.to_string())),
        }
    }
}

/// `alpha` on Alice's qubit, identity on both cavities, `beta` on Bob's qubit.
pub fn two_qubit_pauli(alpha: Pauli, beta: Pauli) -> ComplexMatrix {
    let cavities = ComplexMatrix::identity(4);
    alpha.matrix().kron(&cavities).kron(&beta.matrix())
}

/// `alpha ⊗ beta` on the reduced two-qubit space (Alice first).
pub fn qubit_pair_pauli(alpha: Pauli, beta: Pauli) -> ComplexMatrix {
    alpha.matrix().kron(&beta.matrix())
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("density matrix must be 16x16, got {0}x{0}")]
    WrongDimension(usize),
    #[error("trace {re:.3e}{im:+.3e}i is not 1")]
    Trace { re: f64, im: f64 },
    #[error("density matrix is not Hermitian (max |rho - rho^dag| = {0:.3e})")]
    NotHermitian(f64),
    #[error("density matrix is not positive (min eigenvalue {0:.3e})")]
    NotPositive(f64),
}

/// Two-node state on the 16-dimensional truncated space.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix16(ComplexMatrix);

impl DensityMatrix16 {
    pub const TRACE_TOL: f64 = 1e-9;
    pub const TRACE_IMAG_TOL: f64 = 1e-12;
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const POSITIVITY_TOL: f64 = -1e-8;

    /// Validates all state invariants.
    pub fn new(matrix: ComplexMatrix) -> Result<Self, StateError> {
        let state = Self::new_unchecked(matrix)?;
        state.validate()?;
        Ok(state)
    }

    /// Only checks the dimension; used by the integrator for intermediate states.
    pub fn new_unchecked(matrix: ComplexMatrix) -> Result<Self, StateError> {
        if matrix.dim() != DIM {
            return Err(StateError::WrongDimension(matrix.dim()));
        }
        Ok(Self(matrix))
    }

    pub fn validate(&self) -> Result<(), StateError> {
        let tr = self.0.trace();
        if (tr.re - 1.0).abs() > Self::TRACE_TOL || tr.im.abs() > Self::TRACE_IMAG_TOL {
            return Err(StateError::Trace { re: tr.re, im: tr.im });
        }
        let herm = self.0.hermiticity_error();
        if herm > Self::HERMITIAN_TOL {
            return Err(StateError::NotHermitian(herm));
        }
        let min_ev = self.min_eigenvalue();
        if min_ev < Self::POSITIVITY_TOL {
            return Err(StateError::NotPositive(min_ev));
        }
        Ok(())
    }

    /// Pure basis state `|qA cA cB qB>`.
    pub fn basis(qubit_a: usize, cavity_a: usize, cavity_b: usize, qubit_b: usize) -> Self {
        let idx = basis_index(qubit_a, cavity_a, cavity_b, qubit_b);
        let mut m = ComplexMatrix::zeros(DIM);
        m.set(idx, idx, ONE);
        Self(m)
    }

    /// Both nodes in `|g0>`.
    pub fn ground() -> Self {
        Self::basis(0, 0, 0, 0)
    }

    /// Pure state from an (unnormalised) amplitude vector.
    pub fn pure(amplitudes: &[C64]) -> Result<Self, StateError> {
        if amplitudes.len() != DIM {
            return Err(StateError::WrongDimension(amplitudes.len()));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let v: Vec<C64> = amplitudes.iter().map(|a| a / norm).collect();
        Ok(Self(ComplexMatrix::projector(&v)))
    }

    /// Product of Alice's qubit state and Bob's qubit state with both cavities
    /// empty. Each qubit state is `(amp_g, amp_e)`.
    pub fn product_qubits(alice: [C64; 2], bob: [C64; 2]) -> Result<Self, StateError> {
        let mut amps = vec![ZERO; DIM];
        for (qa, a) in alice.iter().enumerate() {
            for (qb, b) in bob.iter().enumerate() {
                amps[basis_index(qa, 0, 0, qb)] = a * b;
            }
        }
        Self::pure(&amps)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.0.hermitian_eigenvalues()[0]
    }

    /// `Tr(op · rho)`.
    pub fn expectation(&self, op: &ComplexMatrix) -> C64 {
        op.trace_product(&self.0)
    }

    /// Occupation of `mode`, read off the diagonal.
    pub fn population(&self, mode: Mode) -> f64 {
        (0..DIM).filter(|&i| occupation(i, mode) == 1).map(|i| self.0.get(i, i).re).sum()
    }

    /// `<Z_A Z_B>` with `Z = 2|e><e| - 1`.
    pub fn zz_correlator(&self) -> f64 {
        (0..DIM)
            .map(|i| {
                let za = 2.0 * occupation(i, Mode::QubitA) as f64 - 1.0;
                let zb = 2.0 * occupation(i, Mode::QubitB) as f64 - 1.0;
                za * zb * self.0.get(i, i).re
            })
            .sum()
    }

    /// Partial trace over both cavities; the result is indexed `qA * 2 + qB`.
    pub fn qubit_reduced(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(4);
        for qa in 0..2 {
            for qb in 0..2 {
                for qa2 in 0..2 {
                    for qb2 in 0..2 {
                        let mut acc = ZERO;
                        for ca in 0..2 {
                            for cb in 0..2 {
                                acc += self.0.get(basis_index(qa, ca, cb, qb), basis_index(qa2, ca, cb, qb2));
                            }
                        }
                        out.set(qa * 2 + qb, qa2 * 2 + qb2, acc);
                    }
                }
            }
        }
        out
    }
}
