//! Node parameters and the closed-form pumped-transmon quantities.
//!
//! All angular frequencies are stored in rad/µs and times in µs. Tables of
//! device constants are usually quoted as ω/2π in MHz; use [`from_mhz`] at the
//! boundary.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// ω/2π in MHz → ω in rad/µs.
#[inline]
pub fn from_mhz(f_mhz: f64) -> f64 {
    TAU * f_mhz
}

/// ω in rad/µs → ω/2π in MHz.
#[inline]
pub fn to_mhz(omega: f64) -> f64 {
    omega / TAU
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{field} must be positive, got {value}")]
    NotPositive { field: &'static str, value: f64 },
    #[error("T2 exceeds 2*T1 (T2 = {t2} us, T1 = {t1} us)")]
    T2ExceedsBound { t1: f64, t2: f64 },
    #[error("{field} must lie in (0.5, 1], got {value}")]
    Fidelity { field: &'static str, value: f64 },
    #[error("|xi1| = {0} is outside the fourth-order expansion regime (|xi1| < 1)")]
    PumpTooStrong(f64),
    #[error("unknown parameter preset {0:?}")]
    UnknownPreset(String),
}

/// Physical constants of one qubit–cavity node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeParams {
    pub omega_q: f64,
    pub omega_c: f64,
    pub kappa: f64,
    /// Dispersive shift χ.
    pub chi_cq: f64,
    /// Transmon anharmonicity α.
    pub chi_qq: f64,
    /// Cavity self-Kerr.
    pub chi_cc: f64,
    pub t1: f64,
    pub t2: f64,
    pub readout_fidelity_g: f64,
    pub readout_fidelity_e: f64,
}

impl NodeParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (field, value) in [("kappa", self.kappa), ("T1", self.t1), ("T2", self.t2)] {
            if value.is_nan() || value <= 0.0 {
                return Err(ModelError::NotPositive { field, value });
            }
        }
        if self.t2 > 2.0 * self.t1 {
            return Err(ModelError::T2ExceedsBound { t1: self.t1, t2: self.t2 });
        }
        for (field, value) in
            [("readout_fidelity_g", self.readout_fidelity_g), ("readout_fidelity_e", self.readout_fidelity_e)]
        {
            if !(value > 0.5 && value <= 1.0) {
                return Err(ModelError::Fidelity { field, value });
            }
        }
        Ok(())
    }

    /// Γ1 = 1/T1.
    pub fn relaxation_rate(&self) -> f64 {
        1.0 / self.t1
    }

    /// Γφ = 1/T2 − 1/(2 T1).
    pub fn dephasing_rate(&self) -> f64 {
        1.0 / self.t2 - 0.5 / self.t1
    }
}

/// Effective pump displacements (dimensionless).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpAmplitudes {
    /// Qubit sideband pump.
    pub xi1: C64,
    /// Cavity sideband pump.
    pub xi2: C64,
}

impl PumpAmplitudes {
    pub fn new(xi1: C64, xi2: C64) -> Result<Self, ModelError> {
        if xi1.norm() >= 1.0 {
            return Err(ModelError::PumpTooStrong(xi1.norm()));
        }
        Ok(Self { xi1, xi2 })
    }

    pub fn real(xi1: f64, xi2: f64) -> Result<Self, ModelError> {
        Self::new(C64::new(xi1, 0.0), C64::new(xi2, 0.0))
    }

    pub fn off() -> Self {
        Self { xi1: C64::new(0.0, 0.0), xi2: C64::new(0.0, 0.0) }
    }
}

/// Pump-induced frequency shifts of the qubit and cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarkShifts {
    pub delta_q: f64,
    pub delta_c: f64,
}

/// δq = −2α|ξ1|² − χ|ξ2|², δc = −χ|ξ1|².
pub fn stark_shifts(p: &NodeParams, amps: &PumpAmplitudes) -> StarkShifts {
    let x1 = amps.xi1.norm_sqr();
    let x2 = amps.xi2.norm_sqr();
    StarkShifts { delta_q: -2.0 * p.chi_qq * x1 - p.chi_cq * x2, delta_c: -p.chi_cq * x1 }
}

/// Cavity shift from its own anharmonicity, −2 χcc |ξ2|². Reported for
/// reference only; the dynamics neglect it.
pub fn cavity_kerr_shift(p: &NodeParams, amps: &PumpAmplitudes) -> f64 {
    -2.0 * p.chi_cc * amps.xi2.norm_sqr()
}

/// Two-photon drive strengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveStrengths {
    /// Squeezing (|g0> ↔ |e1>), χ ξ1 ξ2.
    pub g_s: C64,
    /// Conversion (|g1> ↔ |e0>), χ ξ1 ξ2*.
    pub g_c: C64,
}

pub fn drive_strengths(p: &NodeParams, amps: &PumpAmplitudes) -> DriveStrengths {
    DriveStrengths { g_s: p.chi_cq * amps.xi1 * amps.xi2, g_c: p.chi_cq * amps.xi1 * amps.xi2.conj() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SidebandBranch {
    /// Blue sideband, ω̃q + ω̃c − χ = ω1 + ω2.
    Squeeze,
    /// Red sideband, ω̃q − ω̃c = ω1 − ω2.
    Convert,
}

/// Cavity-pump frequency ω2 that puts the chosen two-photon transition on
/// resonance for a qubit pump at `omega_1`.
pub fn resonance_pump_frequency(p: &NodeParams, amps: &PumpAmplitudes, omega_1: f64, branch: SidebandBranch) -> f64 {
    let shifts = stark_shifts(p, amps);
    let wq = p.omega_q + shifts.delta_q;
    let wc = p.omega_c + shifts.delta_c;
    match branch {
        SidebandBranch::Squeeze => wq + wc - p.chi_cq - omega_1,
        SidebandBranch::Convert => wc - wq + omega_1,
    }
}

/// Both nodes of the link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodePair {
    pub alice: NodeParams,
    pub bob: NodeParams,
}

impl NodePair {
    pub fn validate(&self) -> Result<(), ModelError> {
        self.alice.validate()?;
        self.bob.validate()
    }

    /// Mismatch between Alice's |e>-conditioned cavity line and Bob's cavity,
    /// (ωcA − χA) − ωcB, from bare frequencies.
    pub fn cavity_mismatch(&self) -> f64 {
        self.alice.omega_c - self.alice.chi_cq - self.bob.omega_c
    }
}

pub const PAPER_DEFAULTS: &str = "paper-defaults";

/// Looks up a named preset.
pub fn preset(name: &str) -> Result<NodePair, ModelError> {
    match name {
        PAPER_DEFAULTS => Ok(paper_defaults()),
        other => Err(ModelError::UnknownPreset(other.to_string())),
    }
}

pub fn preset_names() -> &'static [&'static str] {
    &[PAPER_DEFAULTS]
}

/// Measured device constants of the two nodes.
///
/// T2 holds the pump-on coherence times (Alice 10 µs, Bob 17.5 µs); the
/// pump-off values are 11.5 µs and 20 µs.
pub fn paper_defaults() -> NodePair {
    NodePair {
        alice: NodeParams {
            omega_q: from_mhz(4510.0),
            omega_c: from_mhz(7611.8),
            kappa: from_mhz(1.0),
            chi_cq: from_mhz(8.3),
            chi_qq: from_mhz(200.0),
            chi_cc: from_mhz(0.085),
            t1: 100.0,
            t2: 10.0,
            readout_fidelity_g: 0.955,
            readout_fidelity_e: 0.94,
        },
        bob: NodeParams {
            omega_q: from_mhz(4751.0),
            omega_c: from_mhz(7602.9),
            kappa: from_mhz(1.0),
            chi_cq: from_mhz(3.3),
            chi_qq: from_mhz(240.0),
            chi_cc: from_mhz(0.010),
            t1: 96.0,
            t2: 17.5,
            readout_fidelity_g: 0.985,
            readout_fidelity_e: 0.96,
        },
    }
}
