use num_complex::Complex64 as C64;
use pitchcatch::hilbert::{DensityMatrix16, Pauli, DIM};
use pitchcatch::matrix::ComplexMatrix;
use pitchcatch::tomography::{
    apply_readout_error, apply_readout_to_table, bell_fidelity, bell_state, pauli_expectations, qubit_expectations,
    reconstruct_density_matrix, rotate_bob_frame, PauliTable, ReadoutModel,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn random_state(rng: &mut ChaCha8Rng, rank: usize) -> DensityMatrix16 {
    let mut m = ComplexMatrix::zeros(DIM);
    for _ in 0..rank {
        let v: Vec<C64> = (0..DIM).map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))).collect();
        m.add_scaled(C64::new(1.0, 0.0), &ComplexMatrix::projector(&v));
    }
    let tr = m.trace().re;
    DensityMatrix16::new(m.scale_real(1.0 / tr)).unwrap()
}

#[test]
fn reconstruction_recovers_the_reduced_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..100 {
        let rho = random_state(&mut rng, 1 + k % 4);
        let table = pauli_expectations(&rho).unwrap();
        let rebuilt = reconstruct_density_matrix(&table);
        let err = rebuilt.max_abs_diff(&rho.qubit_reduced());
        assert!(err <= 1e-10, "state {k}: {err:e}");
        assert!(table.max_abs_diff(&qubit_expectations(&rho.qubit_reduced()).unwrap()) <= 1e-12);
    }
}

#[test]
fn bell_table_scores_one() {
    let mut t = PauliTable::zeros();
    t.set(Pauli::I, Pauli::I, 1.0);
    t.set(Pauli::X, Pauli::X, 1.0);
    t.set(Pauli::Y, Pauli::Y, -1.0);
    t.set(Pauli::Z, Pauli::Z, 1.0);
    assert_eq!(bell_fidelity(&reconstruct_density_matrix(&t)), 1.0);
    assert!(reconstruct_density_matrix(&t).max_abs_diff(&bell_state()) < 1e-15);
}

/// Measured `<Z_A Z_B>` from the confusion matrix applied to the four
/// outcome probabilities.
fn confused_zz(p: [f64; 4], rm: &ReadoutModel) -> f64 {
    let flip = |f_g: f64, f_e: f64, truth: usize, read: usize| match (truth, read) {
        (0, 0) => f_g,
        (0, _) => 1.0 - f_g,
        (_, 1) => f_e,
        _ => 1.0 - f_e,
    };
    let mut zz = 0.0;
    for (truth, prob) in p.iter().enumerate() {
        for read in 0..4 {
            let (ta, tb, ra, rb) = (truth >> 1, truth & 1, read >> 1, read & 1);
            let w = flip(rm.f_g_a, rm.f_e_a, ta, ra) * flip(rm.f_g_b, rm.f_e_b, tb, rb);
            let sign = (2.0 * ra as f64 - 1.0) * (2.0 * rb as f64 - 1.0);
            zz += prob * w * sign;
        }
    }
    zz
}

#[test]
fn correlator_readout_matches_confusion_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rm = ReadoutModel::new(0.955, 0.94, 0.985, 0.96).unwrap();
    for _ in 0..20 {
        let rho = random_state(&mut rng, 2);
        let red = rho.qubit_reduced();
        let p = [red.get(0, 0).re, red.get(1, 1).re, red.get(2, 2).re, red.get(3, 3).re];
        let ideal = pauli_expectations(&rho).unwrap();
        let measured = apply_readout_to_table(&ideal, &rm);
        assert!((measured.get(Pauli::Z, Pauli::Z) - confused_zz(p, &rm)).abs() < 1e-12);
        let p_ea = p[2] + p[3];
        let z_a = 2.0 * apply_readout_error(p_ea, rm.f_g_a, rm.f_e_a) - 1.0;
        assert!((measured.get(Pauli::Z, Pauli::I) - z_a).abs() < 1e-12);
        assert_eq!(measured.get(Pauli::I, Pauli::I), ideal.get(Pauli::I, Pauli::I));
    }
}

#[test]
fn perfect_readout_changes_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t = pauli_expectations(&random_state(&mut rng, 3)).unwrap();
    assert!(apply_readout_to_table(&t, &ReadoutModel::perfect()).max_abs_diff(&t) < 1e-15);
}

#[test]
fn impossible_fidelities_are_rejected() {
    assert!(ReadoutModel::new(1.2, 0.9, 0.9, 0.9).is_err());
    assert!(ReadoutModel::new(0.9, -0.1, 0.9, 0.9).is_err());
}

#[test]
fn csv_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = pauli_expectations(&random_state(&mut rng, 2)).unwrap();
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    let back = PauliTable::read_csv(buf.as_slice()).unwrap();
    assert!(back.max_abs_diff(&t) < 1e-10);
}

proptest! {
    #[test]
    fn readout_is_affine_and_monotone(
        p in 0.0f64..=1.0, q in 0.0f64..=1.0, s in 0.0f64..=1.0,
        f_g in 0.5f64..=1.0, f_e in 0.5f64..=1.0,
    ) {
        let mix = apply_readout_error(s * p + (1.0 - s) * q, f_g, f_e);
        let sep = s * apply_readout_error(p, f_g, f_e) + (1.0 - s) * apply_readout_error(q, f_g, f_e);
        prop_assert!((mix - sep).abs() < 1e-12);
        let (lo, hi) = if p < q { (p, q) } else { (q, p) };
        prop_assert!(apply_readout_error(lo, f_g, f_e) <= apply_readout_error(hi, f_g, f_e) + 1e-15);
        let out = apply_readout_error(p, f_g, f_e);
        prop_assert!((0.0..=1.0).contains(&out));
    }

    #[test]
    fn fidelity_is_linear(seed in any::<u64>(), s in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_state(&mut rng, 1).qubit_reduced();
        let b = random_state(&mut rng, 3).qubit_reduced();
        let mut mix = a.scale_real(s);
        mix.add_scaled(C64::new(1.0 - s, 0.0), &b);
        let lin = s * bell_fidelity(&a) + (1.0 - s) * bell_fidelity(&b);
        prop_assert!((bell_fidelity(&mix) - lin).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&bell_fidelity(&a)));
    }

    #[test]
    fn frame_rotation_is_a_rotation(seed in any::<u64>(), angle in -7.0f64..7.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = pauli_expectations(&random_state(&mut rng, 2)).unwrap();
        let r = rotate_bob_frame(&t, angle);
        for a in Pauli::ALL {
            let before = t.get(a, Pauli::X).powi(2) + t.get(a, Pauli::Y).powi(2);
            let after = r.get(a, Pauli::X).powi(2) + r.get(a, Pauli::Y).powi(2);
            prop_assert!((before - after).abs() < 1e-12);
            prop_assert_eq!(r.get(a, Pauli::Z), t.get(a, Pauli::Z));
        }
        prop_assert!(rotate_bob_frame(&r, -angle).max_abs_diff(&t) < 1e-12);
    }
}
