//! Cascaded master equation for two nodes joined by a one-way lossy line.
//!
//! ```text
//! dρ/dt = −i[H_A + H_B + (i/2)√(Tκ_Aκ_B)(c_A†c_B − c_A c_B†), ρ]
//!         + √T D[√κ_A c_A + √κ_B c_B]
//!         + (1 − √T)(D[√κ_A c_A] + D[√κ_B c_B])
//!         + Σ_nodes Γ1 D[q] + Γφ D[q†q]
//! ```
//!
//! Each node Hamiltonian is written in the frame of its dressed cavity. A
//! catching node uses the conversion form `δ c†c + g q†c + g* q c†`, a
//! pitching node the squeezing form `δ c†c + g q c + g* q†c†`.

mod evolve;
mod experiments;
mod liouvillian;

pub use evolve::{evolve, EvolveError, Trajectory, TrajectorySample, TRAJECTORY_COLUMNS};
pub use experiments::{
    entangle_experiment, entangle_with_controls, rabi_master_equation, reflection_probe, synthesize_protocol,
    transfer_experiment, transfer_with_controls, EntangleSummary, ExperimentError, ImperfectionFlags, ProtocolSettings,
    ReflectionProbe, TransferSummary,
};
pub use liouvillian::{build_liouvillian, Generator, Liouvillian};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::DensityMatrix16;
use crate::model::NodePair;
use crate::pulse::ControlSequence;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("channel transmission must lie in [0, 1], got {0}")]
    Transmission(f64),
    #[error("{name} rate must be finite and non-negative, got {value}")]
    NegativeRate { name: &'static str, value: f64 },
    #[error("integrator step must be positive and finite, got {0}")]
    Step(f64),
    #[error("sample_every must be at least 1")]
    SampleEvery,
    #[error("controls of both nodes must share one time grid ({len_a} samples at {dt_a} us vs {len_b} at {dt_b} us)")]
    GridMismatch { len_a: usize, dt_a: f64, len_b: usize, dt_b: f64 },
    #[error("control window is empty")]
    EmptyWindow,
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// Directional line between the nodes; propagation delay is neglected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub transmission: f64,
}

impl ChannelParams {
    pub fn new(transmission: f64) -> Result<Self, ConfigError> {
        let c = Self { transmission };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.transmission) {
            return Err(ConfigError::Transmission(self.transmission));
        }
        Ok(())
    }

    pub fn propagation_delay(&self) -> f64 {
        0.0
    }
}

/// One qubit decoherence channel that can be switched off for ablations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayChannel {
    pub rate: f64,
    pub enabled: bool,
}

impl DecayChannel {
    pub fn on(rate: f64) -> Self {
        Self { rate, enabled: true }
    }

    pub fn off() -> Self {
        Self { rate: 0.0, enabled: false }
    }

    pub fn effective(&self) -> f64 {
        if self.enabled {
            self.rate
        } else {
            0.0
        }
    }
}

/// Qubit relaxation (`Γ1 D[q]`) and pure dephasing (`Γφ D[q†q]`) on both nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImperfectionSet {
    pub relaxation_a: DecayChannel,
    pub relaxation_b: DecayChannel,
    pub dephasing_a: DecayChannel,
    pub dephasing_b: DecayChannel,
}

impl ImperfectionSet {
    pub fn none() -> Self {
        Self {
            relaxation_a: DecayChannel::off(),
            relaxation_b: DecayChannel::off(),
            dephasing_a: DecayChannel::off(),
            dephasing_b: DecayChannel::off(),
        }
    }

    pub fn from_nodes(nodes: &NodePair) -> Self {
        Self {
            relaxation_a: DecayChannel::on(nodes.alice.relaxation_rate()),
            relaxation_b: DecayChannel::on(nodes.bob.relaxation_rate()),
            dephasing_a: DecayChannel::on(nodes.alice.dephasing_rate()),
            dephasing_b: DecayChannel::on(nodes.bob.dephasing_rate()),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, ch) in [
            ("relaxation_a", self.relaxation_a),
            ("relaxation_b", self.relaxation_b),
            ("dephasing_a", self.dephasing_a),
            ("dephasing_b", self.dephasing_b),
        ] {
            if !(ch.rate.is_finite() && ch.rate >= 0.0) {
                return Err(ConfigError::NegativeRate { name, value: ch.rate });
            }
        }
        Ok(())
    }

    pub fn is_clean(&self) -> bool {
        [self.relaxation_a, self.relaxation_b, self.dephasing_a, self.dephasing_b].iter().all(|c| c.effective() == 0.0)
    }
}

/// Everything needed for one run of the integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub dt: f64,
    pub sample_every: usize,
    pub nodes: NodePair,
    pub channel: ChannelParams,
    pub imperfections: ImperfectionSet,
    pub controls_a: ControlSequence,
    pub controls_b: ControlSequence,
    pub initial_state: DensityMatrix16,
}

impl SimulationConfig {
    pub const DEFAULT_DT: f64 = 1e-3;

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(ConfigError::Step(self.dt));
        }
        if self.sample_every == 0 {
            return Err(ConfigError::SampleEvery);
        }
        self.nodes.validate()?;
        self.channel.validate()?;
        self.imperfections.validate()?;
        let (a, b) = (&self.controls_a, &self.controls_b);
        if a.len() != b.len() || (a.dt - b.dt).abs() > 1e-12 * a.dt.abs().max(1.0) {
            return Err(ConfigError::GridMismatch { len_a: a.len(), dt_a: a.dt, len_b: b.len(), dt_b: b.dt });
        }
        if a.len() < 2 {
            return Err(ConfigError::EmptyWindow);
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.controls_a.duration()
    }
}
