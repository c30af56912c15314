//! End-to-end protocols: photon transfer, remote entanglement, the
//! reflected-field probe and single-node Rabi oscillations.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{DensityMatrix16, StateError};
use crate::matrix::ComplexMatrix;
use crate::model::{ModelError, NodePair};
use crate::pulse::{
    synthesize_catch, synthesize_pitch, ControlSequence, Role, Shape, SynthesisError, SynthesisOptions, WavepacketSpec,
    GAUSSIAN_WINDOW_SIGMAS,
};
use crate::tomography::{
    apply_readout_error, bell_fidelity, measured_table, pauli_expectations, reconstruct_density_matrix, PauliTable,
    ReadoutModel, TomographyError,
};

use super::{evolve, ChannelParams, EvolveError, ImperfectionSet, SimulationConfig, Trajectory};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error(transparent)]
    Tomography(#[from] TomographyError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Config(#[from] super::ConfigError),
}

/// Which departures from the ideal protocol are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImperfectionFlags {
    pub channel_loss: bool,
    pub decoherence: bool,
    pub readout: bool,
}

impl ImperfectionFlags {
    pub fn all() -> Self {
        Self { channel_loss: true, decoherence: true, readout: true }
    }

    pub fn none() -> Self {
        Self { channel_loss: false, decoherence: false, readout: false }
    }
}

/// Protocol knobs shared by the transfer and entanglement experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSettings {
    pub shape: Shape,
    /// σ of the photon flux (µs) for Gaussians, decay rate Γ (1/µs) otherwise.
    pub width: f64,
    /// Control window (µs); Gaussians default to 8σ.
    pub duration: f64,
    pub transmission: f64,
    /// Detuning of Alice's resonance condition (rad/µs); Bob stays resonant.
    pub delta_a: f64,
    pub dt: f64,
    pub sample_every: usize,
    pub synthesis: SynthesisOptions,
    pub flags: ImperfectionFlags,
    /// Rotation of Bob's equatorial axes before tomography (rad).
    pub frame_angle: f64,
}

impl ProtocolSettings {
    pub const DEFAULT_TRANSMISSION: f64 = 0.85;
    pub const TRANSFER_SIGMA: f64 = 0.8;
    pub const ENTANGLE_SIGMA: f64 = 0.45;

    fn gaussian(sigma: f64) -> Self {
        Self {
            shape: Shape::Gaussian,
            width: sigma,
            duration: GAUSSIAN_WINDOW_SIGMAS * sigma,
            transmission: Self::DEFAULT_TRANSMISSION,
            delta_a: TAU * 0.6,
            dt: SimulationConfig::DEFAULT_DT,
            sample_every: 10,
            synthesis: SynthesisOptions::default(),
            flags: ImperfectionFlags::all(),
            frame_angle: 0.0,
        }
    }

    pub fn transfer_defaults() -> Self {
        Self::gaussian(Self::TRANSFER_SIGMA)
    }

    pub fn entangle_defaults() -> Self {
        Self::gaussian(Self::ENTANGLE_SIGMA)
    }

    /// Sets a Gaussian width and its matching window.
    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.shape = Shape::Gaussian;
        self.width = sigma;
        self.duration = GAUSSIAN_WINDOW_SIGMAS * sigma;
        self
    }

    pub fn with_flags(mut self, flags: ImperfectionFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn wavepacket(&self, n_phot: f64) -> WavepacketSpec {
        WavepacketSpec { shape: self.shape, width: self.width, duration: self.duration, n_phot, carrier_detuning: 0.0 }
    }

    pub fn effective_transmission(&self) -> f64 {
        if self.flags.channel_loss {
            self.transmission
        } else {
            1.0
        }
    }

    pub fn imperfections(&self, nodes: &NodePair) -> ImperfectionSet {
        if self.flags.decoherence {
            ImperfectionSet::from_nodes(nodes)
        } else {
            ImperfectionSet::none()
        }
    }

    pub fn readout(&self, nodes: &NodePair) -> ReadoutModel {
        if self.flags.readout {
            ReadoutModel::from_nodes(nodes)
        } else {
            ReadoutModel::perfect()
        }
    }
}

/// Pitch controls for Alice and matching catch controls for Bob. The catch
/// targets the flux the pitch actually emits.
pub fn synthesize_protocol(
    nodes: &NodePair,
    settings: &ProtocolSettings,
    fraction: f64,
) -> Result<(ControlSequence, ControlSequence), ExperimentError> {
    let opts = &settings.synthesis;
    let pitch =
        synthesize_pitch(&settings.wavepacket(1.0), nodes.alice.kappa, settings.delta_a, fraction, settings.dt, opts)?;
    let emitted = if fraction >= 1.0 { opts.pitch_reduction } else { fraction };
    let catch = synthesize_catch(&settings.wavepacket(emitted), nodes.bob.kappa, 0.0, settings.dt, opts)?;
    Ok((pitch, catch))
}

fn run(
    nodes: &NodePair,
    settings: &ProtocolSettings,
    controls_a: ControlSequence,
    controls_b: ControlSequence,
    initial_state: DensityMatrix16,
) -> Result<Trajectory, ExperimentError> {
    let cfg = SimulationConfig {
        dt: settings.dt,
        sample_every: settings.sample_every,
        nodes: *nodes,
        channel: ChannelParams::new(settings.effective_transmission())?,
        imperfections: settings.imperfections(nodes),
        controls_a,
        controls_b,
        initial_state,
    };
    Ok(evolve(&cfg)?)
}

#[derive(Debug, Clone)]
pub struct TransferSummary {
    pub final_p_ea: f64,
    pub final_p_eb: f64,
    /// Bob's excited population as seen through his readout.
    pub detected_p_eb: f64,
    pub transmission: f64,
    pub controls_a: ControlSequence,
    pub controls_b: ControlSequence,
    pub trajectory: Trajectory,
}

/// Full pitch from Alice, catch by Bob, both nodes starting in `|g0>`.
pub fn transfer_experiment(nodes: &NodePair, settings: &ProtocolSettings) -> Result<TransferSummary, ExperimentError> {
    let (a, b) = synthesize_protocol(nodes, settings, 1.0)?;
    transfer_with_controls(nodes, settings, a, b)
}

pub fn transfer_with_controls(
    nodes: &NodePair,
    settings: &ProtocolSettings,
    controls_a: ControlSequence,
    controls_b: ControlSequence,
) -> Result<TransferSummary, ExperimentError> {
    let trajectory = run(nodes, settings, controls_a.clone(), controls_b.clone(), DensityMatrix16::ground())?;
    let last = trajectory.final_sample();
    let rm = settings.readout(nodes);
    Ok(TransferSummary {
        final_p_ea: last.p_ea,
        final_p_eb: last.p_eb,
        detected_p_eb: apply_readout_error(last.p_eb, rm.f_g_b, rm.f_e_b),
        transmission: settings.effective_transmission(),
        controls_a,
        controls_b,
        trajectory,
    })
}

#[derive(Debug, Clone)]
pub struct EntangleSummary {
    pub final_p_ea: f64,
    pub final_p_eb: f64,
    pub zz: f64,
    /// Expectations of the simulated state.
    pub ideal_table: PauliTable,
    /// Expectations after frame rotation and readout errors.
    pub measured_table: PauliTable,
    /// Linear-inversion reconstruction from `measured_table`.
    pub rho: ComplexMatrix,
    pub bell_fidelity: f64,
    /// Fidelity of the simulated two-qubit state itself.
    pub ideal_bell_fidelity: f64,
    pub eigenvalues: Vec<f64>,
    pub controls_a: ControlSequence,
    pub controls_b: ControlSequence,
    pub trajectory: Trajectory,
}

/// Half pitch from Alice caught by Bob, followed by two-qubit tomography.
pub fn entangle_experiment(nodes: &NodePair, settings: &ProtocolSettings) -> Result<EntangleSummary, ExperimentError> {
    let (a, b) = synthesize_protocol(nodes, settings, 0.5)?;
    entangle_with_controls(nodes, settings, a, b)
}

pub fn entangle_with_controls(
    nodes: &NodePair,
    settings: &ProtocolSettings,
    controls_a: ControlSequence,
    controls_b: ControlSequence,
) -> Result<EntangleSummary, ExperimentError> {
    let trajectory = run(nodes, settings, controls_a.clone(), controls_b.clone(), DensityMatrix16::ground())?;
    let state = trajectory.final_state();
    let last = trajectory.final_sample();
    let ideal_table = pauli_expectations(state)?;
    let measured = measured_table(state, &settings.readout(nodes), settings.frame_angle)?;
    let rho = reconstruct_density_matrix(&measured);
    Ok(EntangleSummary {
        final_p_ea: last.p_ea,
        final_p_eb: last.p_eb,
        zz: last.zz,
        ideal_table,
        measured_table: measured,
        bell_fidelity: bell_fidelity(&rho),
        ideal_bell_fidelity: bell_fidelity(&state.qubit_reduced()),
        eigenvalues: rho.hermitian_eigenvalues(),
        rho,
        controls_a,
        controls_b,
        trajectory,
    })
}

/// Mean output field with Bob's catch on and off, Alice prepared in
/// `(|g> + |e>)/√2` so the emitted field has a nonzero mean.
#[derive(Debug, Clone)]
pub struct ReflectionProbe {
    pub catch_on: Trajectory,
    pub catch_off: Trajectory,
    /// `T κ_A ∫|<c_A>|²`: field energy arriving at Bob.
    pub incident_energy: f64,
    pub reflected_on: f64,
    pub reflected_off: f64,
    /// Power-weighted mean arrival time of the incident field.
    pub incident_centroid: f64,
    pub reflected_off_centroid: f64,
}

fn centroid(times: &[f64], power: &[f64]) -> f64 {
    let total: f64 = power.iter().sum();
    times.iter().zip(power).map(|(t, p)| t * p).sum::<f64>() / total
}

pub fn reflection_probe(nodes: &NodePair, settings: &ProtocolSettings) -> Result<ReflectionProbe, ExperimentError> {
    let (pitch, catch) = synthesize_protocol(nodes, settings, 1.0)?;
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let initial = DensityMatrix16::product_qubits([h, h], [C64::new(1.0, 0.0), C64::new(0.0, 0.0)])?;
    let idle = ControlSequence { samples: vec![C64::new(0.0, 0.0); catch.len()], ..catch.clone() };
    let catch_on = run(nodes, settings, pitch.clone(), catch, initial.clone())?;
    let catch_off = run(nodes, settings, pitch, idle, initial)?;

    let coupling = settings.effective_transmission() * nodes.alice.kappa;
    let ca = crate::hilbert::mode_operator(crate::hilbert::Mode::CavityA);
    let times: Vec<f64> = catch_off.samples.iter().map(|s| s.t).collect();
    let incident: Vec<f64> = catch_off.states.iter().map(|st| coupling * st.expectation(&ca).norm_sqr()).collect();
    let reflected: Vec<f64> = catch_off.samples.iter().map(|s| s.a_out.norm_sqr()).collect();
    let incident_energy =
        times.windows(2).zip(incident.windows(2)).map(|(t, p)| 0.5 * (t[1] - t[0]) * (p[0] + p[1])).sum();
    Ok(ReflectionProbe {
        incident_energy,
        reflected_on: catch_on.output_energy(),
        reflected_off: catch_off.output_energy(),
        incident_centroid: centroid(&times, &incident),
        reflected_off_centroid: centroid(&times, &reflected),
        catch_on,
        catch_off,
    })
}

/// Excited-level population of a single node under a constant two-photon
/// drive, from the full master equation. Bob starts in `|e0>` and the
/// conversion sideband empties him into his cavity; Alice is idle in `|g0>`
/// and feeds him nothing. Returns `(t, P_e)` pairs.
pub fn rabi_master_equation(
    g: C64,
    kappa: f64,
    delta: f64,
    duration: f64,
    dt: f64,
    sample_every: usize,
) -> Result<Vec<(f64, f64)>, ExperimentError> {
    let mut nodes = crate::model::paper_defaults();
    nodes.bob.kappa = kappa;
    let controls_a = ControlSequence::zeros(duration, dt, Role::Pitch);
    let controls_b = ControlSequence::constant(g, duration, dt, delta, Role::Catch);
    let cfg = SimulationConfig {
        dt,
        sample_every,
        nodes,
        channel: ChannelParams::new(1.0)?,
        imperfections: ImperfectionSet::none(),
        controls_a,
        controls_b,
        initial_state: DensityMatrix16::basis(0, 0, 0, 1),
    };
    let traj = evolve(&cfg)?;
    Ok(traj.samples.iter().map(|s| (s.t, s.p_eb)).collect())
}
