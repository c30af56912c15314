use pitchcatch::cascaded::{
    entangle_experiment, reflection_probe, transfer_experiment, ImperfectionFlags, ProtocolSettings,
};
use pitchcatch::hilbert::Pauli;
use pitchcatch::model::paper_defaults;

fn flags(channel_loss: bool, decoherence: bool, readout: bool) -> ImperfectionFlags {
    ImperfectionFlags { channel_loss, decoherence, readout }
}

fn detected_transfer(f: ImperfectionFlags) -> f64 {
    let s = ProtocolSettings::transfer_defaults().with_flags(f);
    transfer_experiment(&paper_defaults(), &s).unwrap().detected_p_eb
}

#[test]
fn ideal_transfer_is_nearly_perfect() {
    let s = ProtocolSettings::transfer_defaults().with_flags(ImperfectionFlags::none());
    let out = transfer_experiment(&paper_defaults(), &s).unwrap();
    assert!(out.final_p_eb >= 0.98, "P(e_B) = {}", out.final_p_eb);
    assert_eq!(out.detected_p_eb, out.final_p_eb);
    let traj = &out.trajectory;
    assert!(traj.balance_drift() < 1e-4);
    assert!(traj.max_trace_err() < 1e-9 * traj.duration());
}

#[test]
fn realistic_transfer_efficiency() {
    let p = detected_transfer(ImperfectionFlags::all());
    assert!((p - 0.70).abs() <= 0.04, "detected P(e_B) = {p}");
}

#[test]
fn loss_alone_costs_the_line_transmission() {
    let s = ProtocolSettings::transfer_defaults().with_flags(flags(true, false, false));
    let out = transfer_experiment(&paper_defaults(), &s).unwrap();
    assert!((out.final_p_eb - 0.84).abs() <= 0.02, "P(e_B) = {}", out.final_p_eb);
    assert!(out.trajectory.balance_drift() < 1e-4);
}

#[test]
fn every_imperfection_costs_something() {
    let ideal = detected_transfer(ImperfectionFlags::none());
    let all = detected_transfer(ImperfectionFlags::all());
    for single in [flags(true, false, false), flags(false, true, false), flags(false, false, true)] {
        let p = detected_transfer(single);
        assert!(all < p && p < ideal, "{single:?}: {all} < {p} < {ideal} violated");
    }
}

#[test]
fn ideal_half_pitch_makes_a_bell_pair() {
    let s = ProtocolSettings::entangle_defaults().with_flags(ImperfectionFlags::none());
    let out = entangle_experiment(&paper_defaults(), &s).unwrap();
    assert!(out.bell_fidelity >= 0.98, "F = {}", out.bell_fidelity);
    assert!((out.bell_fidelity - out.ideal_bell_fidelity).abs() < 1e-9);
}

#[test]
fn realistic_bell_fidelity() {
    let out = entangle_experiment(&paper_defaults(), &ProtocolSettings::entangle_defaults()).unwrap();
    assert!((out.bell_fidelity - 0.73).abs() <= 0.04, "F = {}", out.bell_fidelity);
    assert!(out.bell_fidelity < out.ideal_bell_fidelity);
    // Bell-state signature survives the imperfections.
    let t = &out.measured_table;
    assert!(t.get(Pauli::X, Pauli::X) > 0.5);
    assert!(t.get(Pauli::Y, Pauli::Y) < -0.5);
    assert!(t.get(Pauli::Z, Pauli::Z) > 0.5);
    for (a, b) in [(Pauli::X, Pauli::Y), (Pauli::Y, Pauli::X), (Pauli::Z, Pauli::I), (Pauli::I, Pauli::X)] {
        assert!(t.get(a, b).abs() < 0.15, "{a:?}{b:?} = {}", t.get(a, b));
    }
}

#[test]
fn imperfect_runs_stay_entangled() {
    let nodes = paper_defaults();
    for f in [flags(true, false, false), flags(false, true, false), flags(false, false, true), ImperfectionFlags::all()]
    {
        let out = entangle_experiment(&nodes, &ProtocolSettings::entangle_defaults().with_flags(f)).unwrap();
        assert!(out.bell_fidelity > 0.5, "{f:?}: F = {}", out.bell_fidelity);
    }
}

#[test]
fn bob_is_excited_only_if_alice_is() {
    let s = ProtocolSettings::entangle_defaults().with_flags(flags(true, true, false));
    let out = entangle_experiment(&paper_defaults(), &s).unwrap();
    assert!((out.final_p_ea - 0.5).abs() <= 0.01, "P(e_A) = {}", out.final_p_ea);
    assert!((out.zz - 2.0 * out.final_p_eb).abs() <= 0.02, "ZZ = {}, P(e_B) = {}", out.zz, out.final_p_eb);
}

#[test]
fn catch_suppresses_reflection() {
    let s = ProtocolSettings::transfer_defaults().with_flags(ImperfectionFlags::none());
    let probe = reflection_probe(&paper_defaults(), &s).unwrap();
    let rel = (probe.reflected_off - probe.incident_energy).abs() / probe.incident_energy;
    assert!(rel < 0.02, "idle Bob should reflect everything: {rel}");
    assert!(probe.reflected_on < 0.05 * probe.incident_energy);
    assert!(probe.reflected_off_centroid > probe.incident_centroid);
}
