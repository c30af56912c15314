use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use pitchcatch::pulse::{
    emitted_waveform, integrated_flux, synthesize_catch, synthesize_pitch, ControlSequence, Role, SynthesisError,
    SynthesisOptions, WavepacketSpec,
};

const KAPPA: f64 = TAU;

fn unlimited() -> SynthesisOptions {
    SynthesisOptions { g_max: f64::INFINITY, ..Default::default() }
}

fn relative_l2(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn max_refinement_change(coarse: &ControlSequence, fine: &ControlSequence) -> f64 {
    let peak = coarse.peak_magnitude();
    coarse
        .samples
        .iter()
        .enumerate()
        .map(|(i, g)| (g - fine.samples[2 * i]).norm() / g.norm().max(1e-3 * peak))
        .fold(0.0, f64::max)
}

fn unwrapped_phase(samples: &[C64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut prev = samples[0].arg();
    let mut offset = 0.0;
    for z in samples {
        let mut a = z.arg() + offset;
        while a - prev > PI {
            a -= TAU;
            offset -= TAU;
        }
        while a - prev < -PI {
            a += TAU;
            offset += TAU;
        }
        out.push(a);
        prev = a;
    }
    out
}

#[test]
fn emitted_field_reproduces_target() {
    let w = WavepacketSpec::gaussian(0.8, 1.0);
    let pitch = synthesize_pitch(&w, KAPPA, 0.0, 1.0, 1e-3, &SynthesisOptions::default()).unwrap();
    let out = emitted_waveform(&pitch, KAPPA, C64::new(1.0, 0.0)).unwrap();
    let flux = integrated_flux(&out, pitch.dt);
    assert!((flux - 0.99).abs() <= 1e-3, "flux {flux}");
    let target = w.with_n_phot(0.99);
    let reference: Vec<C64> = (0..pitch.len()).map(|i| target.envelope(pitch.time(i))).collect();
    let err = relative_l2(&out, &reference);
    assert!(err <= 2e-2, "relative L2 {err}");
}

#[test]
fn idle_controls_emit_nothing() {
    let cs = ControlSequence::zeros(2.0, 1e-3, Role::Pitch);
    let out = emitted_waveform(&cs, KAPPA, C64::new(1.0, 0.0)).unwrap();
    assert!(out.iter().all(|z| z.norm() == 0.0));
}

#[test]
fn halving_the_step_barely_moves_controls() {
    let opts = SynthesisOptions::default();
    let w = WavepacketSpec::gaussian(0.8, 1.0);
    let a = synthesize_pitch(&w, KAPPA, 0.0, 1.0, 1e-3, &opts).unwrap();
    let b = synthesize_pitch(&w, KAPPA, 0.0, 1.0, 5e-4, &opts).unwrap();
    assert!(max_refinement_change(&a, &b) < 1e-4);
    let w = w.with_n_phot(0.99);
    let a = synthesize_catch(&w, KAPPA, 0.0, 1e-3, &opts).unwrap();
    let b = synthesize_catch(&w, KAPPA, 0.0, 5e-4, &opts).unwrap();
    assert!(max_refinement_change(&a, &b) < 1e-4);
}

#[test]
fn catch_is_time_reversed_pitch() {
    let w = WavepacketSpec::gaussian(0.8, 1.0);
    let pitch = synthesize_pitch(&w, KAPPA, 0.0, 1.0, 1e-3, &unlimited()).unwrap();
    // Start the catch with exactly the amplitude the pitch leaves behind.
    let opts = SynthesisOptions { catch_regularization: 99.0, ..unlimited() };
    let catch = synthesize_catch(&w.with_n_phot(0.99), KAPPA, 0.0, 1e-3, &opts).unwrap();
    let n = pitch.len();
    assert_eq!(n, catch.len());
    let (lo, hi) = (n / 50, n - n / 50);
    let forward: Vec<C64> = pitch.samples[lo..hi].to_vec();
    let reversed: Vec<C64> = (lo..hi).map(|i| catch.samples[n - 1 - i]).collect();
    let conjugated: Vec<C64> = reversed.iter().map(|z| z.conj()).collect();
    let err = relative_l2(&reversed, &forward).min(relative_l2(&conjugated, &forward));
    assert!(err < 1e-3, "time-reversal mismatch {err}");
}

#[test]
fn photon_number_does_not_change_shape() {
    let opts = SynthesisOptions::default();
    let small = WavepacketSpec::gaussian(0.8, 0.25);
    let unit = WavepacketSpec::gaussian(0.8, 1.0);
    let a = synthesize_catch(&small, KAPPA, 0.0, 1e-3, &opts).unwrap();
    let b = synthesize_catch(&unit, KAPPA, 0.0, 1e-3, &opts).unwrap();
    assert!(a.samples.iter().zip(&b.samples).all(|(x, y)| (x - y).norm() <= 1e-8));
    let a = synthesize_pitch(&small, KAPPA, 0.0, 1.0, 1e-3, &opts).unwrap();
    let b = synthesize_pitch(&unit, KAPPA, 0.0, 1.0, 1e-3, &opts).unwrap();
    assert!(a.samples.iter().zip(&b.samples).all(|(x, y)| (x - y).norm() <= 1e-8));
}

#[test]
fn detuning_rotates_and_strengthens_the_drive() {
    let opts = unlimited();
    let w = WavepacketSpec::gaussian(0.8, 1.0);
    let delta = TAU * 0.6;
    let flat = synthesize_pitch(&w, KAPPA, 0.0, 1.0, 1e-3, &opts).unwrap();
    let turned = synthesize_pitch(&w, KAPPA, delta, 1.0, 1e-3, &opts).unwrap();
    assert!(turned.peak_magnitude() > flat.peak_magnitude());

    // Seen from a frame co-rotating with Alice's detuned cavity.
    let peak = turned.peak_magnitude();
    let strong: Vec<C64> = (0..turned.len())
        .filter(|&i| turned.samples[i].norm() > 0.05 * peak)
        .map(|i| turned.samples[i] * C64::from_polar(1.0, -delta * turned.time(i)))
        .collect();
    let phase = unwrapped_phase(&strong);
    assert!(phase.windows(2).all(|p| p[1] < p[0]), "phase is not monotone");
    let window = strong.len() as f64 * turned.dt;
    let sweep = phase[phase.len() - 1] - phase[0];
    assert!((sweep + delta * window).abs() < PI, "sweep {sweep} vs {}", -delta * window);
}

#[test]
fn never_emits_non_finite_values() {
    let opts = unlimited();
    for i in 0..=20 {
        let sk = 0.3 * (10.0f64 / 0.3).powf(i as f64 / 20.0);
        let w = WavepacketSpec::gaussian(sk / KAPPA, 1.0);
        let dt = w.duration / 2000.0;
        for result in [
            synthesize_catch(&w.with_n_phot(0.99), KAPPA, 0.0, dt, &opts),
            synthesize_pitch(&w, KAPPA, 0.0, 1.0, dt, &opts),
            synthesize_pitch(&w, KAPPA, 0.0, 0.5, dt, &opts),
        ] {
            match result {
                Ok(cs) => assert!(cs.samples.iter().all(|g| g.re.is_finite() && g.im.is_finite()), "σκ = {sk}"),
                Err(SynthesisError::AmplitudeCollapse { .. }) => {}
                Err(e) => panic!("σκ = {sk}: unexpected {e}"),
            }
        }
    }
}

#[test]
fn slow_packets_always_synthesize() {
    let opts = unlimited();
    for sk in [2.0, 3.0, 5.0, 10.0] {
        let w = WavepacketSpec::gaussian(sk / KAPPA, 1.0);
        let dt = w.duration / 2000.0;
        assert!(synthesize_catch(&w.with_n_phot(0.99), KAPPA, 0.0, dt, &opts).is_ok());
        assert!(synthesize_pitch(&w, KAPPA, 0.0, 1.0, dt, &opts).is_ok());
    }
}

#[test]
fn catch_is_single_lobed_and_early() {
    let w = WavepacketSpec::gaussian(0.8, 0.99);
    let catch = synthesize_catch(&w, KAPPA, 0.0, 1e-3, &SynthesisOptions::default()).unwrap();
    let mags: Vec<f64> = catch.samples.iter().map(|g| g.norm()).collect();
    let imax = mags.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!(catch.time(imax) < 0.5 * w.duration);
    let rising = mags[..=imax].windows(2).filter(|p| p[1] < p[0] - 1e-12).count();
    let falling = mags[imax..].windows(2).filter(|p| p[1] > p[0] + 1e-12).count();
    assert_eq!(rising + falling, 0, "catch magnitude has more than one lobe");
}

#[test]
fn too_fast_for_the_cavity_is_reported() {
    let w = WavepacketSpec::gaussian(0.4, 0.99);
    let opts = SynthesisOptions { g_max: TAU * 0.1, ..Default::default() };
    assert!(matches!(synthesize_catch(&w, KAPPA, 0.0, 1e-3, &opts), Err(SynthesisError::ExceedsGMax { .. })));
}
