//! Two-qubit Pauli tomography: expectation tables, finite readout fidelity,
//! linear-inversion reconstruction and Bell-state fidelity.

use std::fmt;
use std::io::{BufRead, Write};

use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

use crate::hilbert::{qubit_pair_pauli, two_qubit_pauli, DensityMatrix16, Pauli};
use crate::matrix::{ComplexMatrix, ZERO};
use crate::model::NodePair;
use crate::table::{format_value, TableError};

/// Imaginary parts below this are dropped silently.
pub const IMAG_DISCARD_TOL: f64 = 1e-10;
/// Imaginary parts above this indicate a non-Hermitian input.
pub const IMAG_REJECT_TOL: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum TomographyError {
    #[error("<{label}> has imaginary part {value:.3e}; the state is not Hermitian")]
    ImaginaryResidue { label: String, value: f64 },
    #[error("expected a {expected}x{expected} matrix, got {found}x{found}")]
    Dimension { expected: usize, found: usize },
    #[error("readout fidelity {name} = {value} must lie in (0.5, 1]")]
    Fidelity { name: &'static str, value: f64 },
}

/// Sixteen two-qubit expectation values `<α_A β_B>`, Alice's label first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliTable {
    values: [[f64; 4]; 4],
}

impl PauliTable {
    pub fn zeros() -> Self {
        Self { values: [[0.0; 4]; 4] }
    }

    /// Table of the maximally mixed state.
    pub fn identity() -> Self {
        let mut t = Self::zeros();
        t.set(Pauli::I, Pauli::I, 1.0);
        t
    }

    pub fn get(&self, alpha: Pauli, beta: Pauli) -> f64 {
        self.values[alpha.index()][beta.index()]
    }

    pub fn set(&mut self, alpha: Pauli, beta: Pauli, value: f64) {
        self.values[alpha.index()][beta.index()] = value;
    }

    /// Entries in canonical order II, IX, ..., ZZ.
    pub fn iter(&self) -> impl Iterator<Item = (Pauli, Pauli, f64)> + '_ {
        Pauli::ALL.into_iter().flat_map(move |a| Pauli::ALL.into_iter().map(move |b| (a, b, self.get(a, b))))
    }

    pub fn label(alpha: Pauli, beta: Pauli) -> String {
        format!("{alpha}{beta}")
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.iter().map(|(a, b, v)| (v - other.get(a, b)).abs()).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "label,value")?;
        for (a, b, v) in self.iter() {
            writeln!(out, "{}{},{}", a, b, format_value(v))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, TableError> {
        let mut table = Self::zeros();
        let mut seen = [[false; 4]; 4];
        let mut header = false;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if !header {
                if line != "label,value" {
                    return Err(TableError::Header { expected: "label,value".into(), found: line.into() });
                }
                header = true;
                continue;
            }
            let bad = || TableError::Number { line: i + 1, text: line.to_string() };
            let (label, value) = line.split_once(',').ok_or_else(bad)?;
            let mut chars = label.trim().chars();
            let (Some(a), Some(b), None) = (chars.next(), chars.next(), chars.next()) else {
                return Err(bad());
            };
            let a: Pauli = a.to_string().parse().map_err(|_| bad())?;
            let b: Pauli = b.to_string().parse().map_err(|_| bad())?;
            let v: f64 = value.trim().parse().map_err(|_| bad())?;
            table.set(a, b, v);
            seen[a.index()][b.index()] = true;
        }
        if seen.iter().flatten().any(|s| !s) {
            return Err(TableError::Empty);
        }
        Ok(table)
    }

    pub fn entries(&self) -> Vec<PauliEntry> {
        self.iter().map(|(a, b, value)| PauliEntry { label: Self::label(a, b), value }).collect()
    }
}

impl fmt::Display for PauliTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, b, v) in self.iter() {
            writeln!(f, "{a}{b} {v:+.4}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PauliEntry {
    pub label: String,
    pub value: f64,
}

/// Assignment fidelities of both qubits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReadoutModel {
    pub f_g_a: f64,
    pub f_e_a: f64,
    pub f_g_b: f64,
    pub f_e_b: f64,
}

impl ReadoutModel {
    pub fn new(f_g_a: f64, f_e_a: f64, f_g_b: f64, f_e_b: f64) -> Result<Self, TomographyError> {
        let m = Self { f_g_a, f_e_a, f_g_b, f_e_b };
        for (name, value) in [("f_g_a", f_g_a), ("f_e_a", f_e_a), ("f_g_b", f_g_b), ("f_e_b", f_e_b)] {
            if !(value > 0.5 && value <= 1.0) {
                return Err(TomographyError::Fidelity { name, value });
            }
        }
        Ok(m)
    }

    pub fn perfect() -> Self {
        Self { f_g_a: 1.0, f_e_a: 1.0, f_g_b: 1.0, f_e_b: 1.0 }
    }

    pub fn from_nodes(nodes: &NodePair) -> Self {
        Self {
            f_g_a: nodes.alice.readout_fidelity_g,
            f_e_a: nodes.alice.readout_fidelity_e,
            f_g_b: nodes.bob.readout_fidelity_g,
            f_e_b: nodes.bob.readout_fidelity_e,
        }
    }
}

/// Probability of reading "excited" given the true excited population.
pub fn apply_readout_error(p_sim: f64, f_g: f64, f_e: f64) -> f64 {
    f_e * p_sim + (1.0 - f_g) * (1.0 - p_sim)
}

/// The readout map written for a ±1 observable: `<s>_meas = contrast <s> + offset`.
fn contrast_offset(f_g: f64, f_e: f64) -> (f64, f64) {
    // 2·apply_readout_error((1+s)/2) − 1
    let hi = 2.0 * apply_readout_error(1.0, f_g, f_e) - 1.0;
    let lo = 2.0 * apply_readout_error(0.0, f_g, f_e) - 1.0;
    (0.5 * (hi - lo), 0.5 * (hi + lo))
}

fn real_part(z: C64, alpha: Pauli, beta: Pauli) -> Result<f64, TomographyError> {
    if z.im.abs() > IMAG_REJECT_TOL {
        return Err(TomographyError::ImaginaryResidue { label: PauliTable::label(alpha, beta), value: z.im });
    }
    Ok(z.re)
}

/// Ideal expectation values `Tr(α_A ⊗ 1 ⊗ 1 ⊗ β_B · ρ)`.
pub fn pauli_expectations(rho: &DensityMatrix16) -> Result<PauliTable, TomographyError> {
    let mut t = PauliTable::zeros();
    for a in Pauli::ALL {
        for b in Pauli::ALL {
            t.set(a, b, real_part(rho.expectation(&two_qubit_pauli(a, b)), a, b)?);
        }
    }
    Ok(t)
}

/// Expectation values of a reduced two-qubit matrix (index `qA * 2 + qB`).
pub fn qubit_expectations(rho: &ComplexMatrix) -> Result<PauliTable, TomographyError> {
    if rho.dim() != 4 {
        return Err(TomographyError::Dimension { expected: 4, found: rho.dim() });
    }
    let mut t = PauliTable::zeros();
    for a in Pauli::ALL {
        for b in Pauli::ALL {
            t.set(a, b, real_part(qubit_pair_pauli(a, b).trace_product(rho), a, b)?);
        }
    }
    Ok(t)
}

/// Rotates Bob's equatorial axes by `angle`: `X' = cos X + sin Y`, `Y' = cos Y − sin X`.
pub fn rotate_bob_frame(t: &PauliTable, angle: f64) -> PauliTable {
    let (s, c) = angle.sin_cos();
    let mut out = *t;
    for a in Pauli::ALL {
        let (x, y) = (t.get(a, Pauli::X), t.get(a, Pauli::Y));
        out.set(a, Pauli::X, c * x + s * y);
        out.set(a, Pauli::Y, c * y - s * x);
    }
    out
}

/// Applies each qubit's assignment errors to every measured outcome. The
/// identity factor is never measured, so `<II>` stays 1.
pub fn apply_readout_to_table(t: &PauliTable, rm: &ReadoutModel) -> PauliTable {
    let (ca, oa) = contrast_offset(rm.f_g_a, rm.f_e_a);
    let (cb, ob) = contrast_offset(rm.f_g_b, rm.f_e_b);
    let mut out = PauliTable::zeros();
    for (a, b, v) in t.iter() {
        let value = match (a, b) {
            (Pauli::I, Pauli::I) => v,
            (Pauli::I, _) => cb * v + ob,
            (_, Pauli::I) => ca * v + oa,
            _ => {
                ca * cb * v
                    + ca * ob * t.get(a, Pauli::I)
                    + oa * cb * t.get(Pauli::I, b)
                    + oa * ob * t.get(Pauli::I, Pauli::I)
            }
        };
        out.set(a, b, value);
    }
    out
}

/// Table an experiment would record: ideal values, Bob's frame rotated by
/// `frame_angle`, then finite readout fidelity on both qubits.
pub fn measured_table(
    rho: &DensityMatrix16,
    rm: &ReadoutModel,
    frame_angle: f64,
) -> Result<PauliTable, TomographyError> {
    let ideal = pauli_expectations(rho)?;
    Ok(apply_readout_to_table(&rotate_bob_frame(&ideal, frame_angle), rm))
}

/// `ρ = ¼ Σ <α β> α ⊗ β`, without any positivity projection.
pub fn reconstruct_density_matrix(t: &PauliTable) -> ComplexMatrix {
    let mut rho = ComplexMatrix::zeros(4);
    for (a, b, v) in t.iter() {
        if v != 0.0 {
            rho.add_scaled(C64::new(0.25 * v, 0.0), &qubit_pair_pauli(a, b));
        }
    }
    rho
}

/// `<Φ+|ρ|Φ+>` with `Φ+ = (|gg> + |ee>)/√2`.
pub fn bell_fidelity(rho2q: &ComplexMatrix) -> f64 {
    assert_eq!(rho2q.dim(), 4, "bell_fidelity expects a two-qubit matrix");
    let sum = rho2q.get(0, 0) + rho2q.get(0, 3) + rho2q.get(3, 0) + rho2q.get(3, 3);
    0.5 * sum.re
}

/// `|Φ+><Φ+|` on the two-qubit space.
pub fn bell_state() -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let v = [C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)];
    ComplexMatrix::projector(&v)
}

/// JSON-facing summary of a reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionReport {
    pub bell_fidelity: f64,
    pub eigenvalues: Vec<f64>,
    pub table: Vec<PauliEntry>,
    pub rho_re: Vec<Vec<f64>>,
    pub rho_im: Vec<Vec<f64>>,
}

impl ReconstructionReport {
    pub fn new(table: &PauliTable) -> Self {
        let rho = reconstruct_density_matrix(table);
        let part = |f: fn(C64) -> f64| (0..4).map(|i| (0..4).map(|j| f(rho.get(i, j))).collect()).collect();
        Self {
            bell_fidelity: bell_fidelity(&rho),
            eigenvalues: rho.hermitian_eigenvalues(),
            table: table.entries(),
            rho_re: part(|z| z.re),
            rho_im: part(|z| z.im),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::basis_index;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn bell16() -> DensityMatrix16 {
        let mut amps = vec![ZERO; 16];
        amps[basis_index(0, 0, 0, 0)] = C64::new(FRAC_1_SQRT_2, 0.0);
        amps[basis_index(1, 0, 0, 1)] = C64::new(FRAC_1_SQRT_2, 0.0);
        DensityMatrix16::pure(&amps).unwrap()
    }

    #[test]
    fn ground_state_table() {
        let t = pauli_expectations(&DensityMatrix16::ground()).unwrap();
        for (a, b, v) in t.iter() {
            let expected = match (a, b) {
                (Pauli::I, Pauli::I) | (Pauli::Z, Pauli::Z) => 1.0,
                (Pauli::Z, Pauli::I) | (Pauli::I, Pauli::Z) => -1.0,
                _ => 0.0,
            };
            assert!((v - expected).abs() < 1e-15, "{a}{b}");
        }
    }

    #[test]
    fn bell_table_and_fidelity() {
        let t = pauli_expectations(&bell16()).unwrap();
        assert!((t.get(Pauli::X, Pauli::X) - 1.0).abs() < 1e-15);
        assert!((t.get(Pauli::Y, Pauli::Y) + 1.0).abs() < 1e-15);
        assert!((t.get(Pauli::Z, Pauli::Z) - 1.0).abs() < 1e-15);
        assert_eq!(t.get(Pauli::Z, Pauli::I), 0.0);
        let rho = reconstruct_density_matrix(&t);
        assert!(rho.max_abs_diff(&bell_state()) < 1e-15);
        let mut exact = PauliTable::identity();
        exact.set(Pauli::X, Pauli::X, 1.0);
        exact.set(Pauli::Y, Pauli::Y, -1.0);
        exact.set(Pauli::Z, Pauli::Z, 1.0);
        assert_eq!(bell_fidelity(&reconstruct_density_matrix(&exact)), 1.0);
    }

    #[test]
    fn maximally_mixed() {
        let rho = reconstruct_density_matrix(&PauliTable::identity());
        assert!(rho.max_abs_diff(&ComplexMatrix::identity(4).scale_real(0.25)) < 1e-16);
        assert!((bell_fidelity(&rho) - 0.25).abs() < 1e-16);
        let t = qubit_expectations(&rho).unwrap();
        assert!(t.max_abs_diff(&PauliTable::identity()) < 1e-16);
    }

    #[test]
    fn readout_map_examples() {
        assert!((apply_readout_error(1.0, 0.955, 0.94) - 0.94).abs() < 1e-15);
        assert!((apply_readout_error(0.0, 0.955, 0.94) - 0.045).abs() < 1e-15);
        for p in [0.0, 0.3, 1.0] {
            assert_eq!(apply_readout_error(p, 1.0, 1.0), p);
        }
    }

    #[test]
    fn frame_rotation_flips_xx() {
        let t = measured_table(&bell16(), &ReadoutModel::perfect(), PI).unwrap();
        assert!((t.get(Pauli::X, Pauli::X) + 1.0).abs() < 1e-12);
        assert!((t.get(Pauli::Y, Pauli::Y) - 1.0).abs() < 1e-12);
        let same = measured_table(&bell16(), &ReadoutModel::perfect(), 0.0).unwrap();
        assert_eq!(same, pauli_expectations(&bell16()).unwrap());
    }

    #[test]
    fn readout_on_table_matches_outcome_distribution() {
        // Oracle: push the joint (A, B) outcome distribution of the Z basis
        // through each qubit's confusion matrix and recompute correlators.
        let rm = ReadoutModel::new(0.955, 0.94, 0.985, 0.96).unwrap();
        let rho = DensityMatrix16::product_qubits(
            [C64::new(0.8, 0.0), C64::new(0.0, 0.6)],
            [C64::new(0.6, 0.0), C64::new(0.8, 0.0)],
        )
        .unwrap();
        let m = measured_table(&rho, &rm, 0.0).unwrap();
        let red = rho.qubit_reduced();
        let p = |qa: usize, qb: usize| red.get(qa * 2 + qb, qa * 2 + qb).re;
        let confusion = |f_g: f64, f_e: f64, truth: usize, read: usize| match (truth, read) {
            (0, 0) => f_g,
            (0, _) => 1.0 - f_g,
            (_, 1) => f_e,
            _ => 1.0 - f_e,
        };
        let sign = |s: usize| if s == 1 { 1.0 } else { -1.0 };
        let mut zz = 0.0;
        let mut zi = 0.0;
        for ta in 0..2 {
            for tb in 0..2 {
                for ra in 0..2 {
                    for rb in 0..2 {
                        let w =
                            p(ta, tb) * confusion(rm.f_g_a, rm.f_e_a, ta, ra) * confusion(rm.f_g_b, rm.f_e_b, tb, rb);
                        zz += w * sign(ra) * sign(rb);
                        zi += w * sign(ra);
                    }
                }
            }
        }
        assert!((m.get(Pauli::Z, Pauli::Z) - zz).abs() < 1e-14);
        assert!((m.get(Pauli::Z, Pauli::I) - zi).abs() < 1e-14);
        assert_eq!(m.get(Pauli::I, Pauli::I), 1.0);
    }

    #[test]
    fn csv_round_trip() {
        let t = pauli_expectations(&bell16()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 17);
        assert!(text.starts_with("label,value\nII,"));
        let back = PauliTable::read_csv(buf.as_slice()).unwrap();
        assert!(back.max_abs_diff(&t) < 1e-11);
    }

    #[test]
    fn non_hermitian_input_rejected() {
        let mut m = ComplexMatrix::identity(4).scale_real(0.25);
        m.set(0, 3, C64::new(0.0, 0.1));
        assert!(matches!(qubit_expectations(&m), Err(TomographyError::ImaginaryResidue { .. })));
    }

    #[test]
    fn fidelity_bounds() {
        assert!(ReadoutModel::new(0.5, 0.9, 0.9, 0.9).is_err());
        assert!(ReadoutModel::new(1.0, 0.9, 0.9, 0.51).is_ok());
    }
}
