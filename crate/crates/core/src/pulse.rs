//! Control synthesis for releasing ("pitch") and absorbing ("catch") a
//! traveling single-photon wavepacket.
//!
//! Both nodes are treated in the single-excitation sector, where the qubit
//! amplitude `q` and the cavity amplitude `c` obey linear equations. Imposing
//! the wanted cavity field at every instant turns those equations into an
//! explicit rule for `g(t)` given the current `q`, and `q` is then advanced
//! with the same `g`.
//!
//! * Catch (conversion node): `H = δ c†c + g q†c + g* q c†`. With the incoming
//!   envelope `u` and no reflection, `c = -u/√κ` and
//!   `i√κ g* q = u̇ + iδu − κu/2`, `q̇ = i g u / √κ`.
//! * Pitch (squeezing node, relabeled `|g⟩ ↔ |e⟩`): `H = δ c†c + g q c + g* q†c†`.
//!   With `a` the amplitude of the initial ground state and `c = u/√κ`,
//!   `−i g* a = ċ + iδc + κc/2`, `ȧ = −i g c`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{I, ZERO};
use crate::table::{self, TableError};

/// Gaussian windows span this many standard deviations.
pub const GAUSSIAN_WINDOW_SIGMAS: f64 = 8.0;
/// Default control ceiling, rad/µs.
pub const DEFAULT_G_MAX: f64 = TAU * 0.6;
/// Ratio `n_phot / q0²` used to seed the catch away from the `q = 0` singularity.
pub const DEFAULT_CATCH_REGULARIZATION: f64 = 100.0;
/// Fraction of the stored excitation released by a full pitch.
pub const DEFAULT_PITCH_REDUCTION: f64 = 0.99;
/// Synthesis requires at least this many steps per window.
pub const MIN_STEPS: f64 = 1000.0;

pub const CONTROL_COLUMNS: [&str; 3] = ["t_us", "re_g_radperus", "im_g_radperus"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error("invalid wavepacket: {0}")]
    InvalidSpec(String),
    #[error("kappa must be positive, got {0}")]
    InvalidKappa(f64),
    #[error("time step {dt} us is coarser than duration/{MIN_STEPS} = {limit} us")]
    StepTooCoarse { dt: f64, limit: f64 },
    #[error(
        "control magnitude {magnitude:.4} rad/us at t = {t:.4} us exceeds g_max = {g_max:.4} rad/us; \
         the wavepacket is too fast for the cavity linewidth"
    )]
    ExceedsGMax { t: f64, magnitude: f64, g_max: f64 },
    #[error("qubit amplitude collapsed to {amplitude:.3e} at t = {t:.4} us (control would diverge)")]
    AmplitudeCollapse { t: f64, amplitude: f64 },
    #[error("non-finite control at t = {t:.4} us")]
    NonFinite { t: f64 },
    #[error("fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("expected a {expected} sequence, got {found}")]
    WrongRole { expected: Role, found: Role },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Gaussian,
    SymmetricExponential,
}

impl FromStr for Shape {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gaussian" => Ok(Shape::Gaussian),
            "symmetric_exponential" | "exponential" => Ok(Shape::SymmetricExponential),
            other => Err(format!("unknown wavepacket shape `{other}`")),
        }
    }
}

/// Which half of the protocol a node performs; fixes the form of its
/// sideband Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Pitch,
    Catch,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Pitch => "pitch",
            Role::Catch => "catch",
        })
    }
}

impl FromStr for Role {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pitch" => Ok(Role::Pitch),
            "catch" => Ok(Role::Catch),
            other => Err(format!("unknown role `{other}` (expected pitch or catch)")),
        }
    }
}

/// Target traveling-mode envelope on the window `[0, duration]`.
///
/// For a Gaussian, `width` is the standard deviation σ of the photon flux
/// `|u(t)|²`; for the exponential it is the amplitude decay rate Γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavepacketSpec {
    pub shape: Shape,
    pub width: f64,
    pub duration: f64,
    pub n_phot: f64,
    #[serde(default)]
    pub carrier_detuning: f64,
}

impl WavepacketSpec {
    pub fn gaussian(sigma: f64, n_phot: f64) -> Self {
        Self {
            shape: Shape::Gaussian,
            width: sigma,
            duration: GAUSSIAN_WINDOW_SIGMAS * sigma,
            n_phot,
            carrier_detuning: 0.0,
        }
    }

    pub fn symmetric_exponential(gamma: f64, duration: f64, n_phot: f64) -> Self {
        Self { shape: Shape::SymmetricExponential, width: gamma, duration, n_phot, carrier_detuning: 0.0 }
    }

    pub fn with_n_phot(mut self, n_phot: f64) -> Self {
        self.n_phot = n_phot;
        self
    }

    pub fn with_carrier_detuning(mut self, detuning: f64) -> Self {
        self.carrier_detuning = detuning;
        self
    }

    pub fn validate(&self) -> Result<(), SynthesisError> {
        let bad = |msg: String| Err(SynthesisError::InvalidSpec(msg));
        if !(self.width.is_finite() && self.width > 0.0) {
            return bad(format!("width must be positive, got {}", self.width));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if !(self.n_phot > 0.0 && self.n_phot <= 1.0) {
            return bad(format!("n_phot must lie in (0, 1], got {}", self.n_phot));
        }
        if !self.carrier_detuning.is_finite() {
            return bad("carrier detuning must be finite".into());
        }
        Ok(())
    }

    fn center(&self) -> f64 {
        0.5 * self.duration
    }

    /// Peak amplitude making `∫₀ᵀ |u|² dt = n_phot` on the truncated window.
    fn amplitude_scale(&self) -> f64 {
        let unnormalized = match self.shape {
            Shape::Gaussian => {
                let s = self.width;
                s * (2.0 * PI).sqrt() * libm::erf(self.duration / (2.0 * std::f64::consts::SQRT_2 * s))
            }
            Shape::SymmetricExponential => {
                let g = self.width;
                -(-g * self.duration).exp_m1() / g
            }
        };
        (self.n_phot / unnormalized).sqrt()
    }

    fn real_profile(&self, t: f64) -> (f64, f64) {
        let x = t - self.center();
        let a = self.amplitude_scale();
        match self.shape {
            Shape::Gaussian => {
                let s2 = self.width * self.width;
                let u = a * (-x * x / (4.0 * s2)).exp();
                (u, -x / (2.0 * s2) * u)
            }
            Shape::SymmetricExponential => {
                let u = a * (-self.width * x.abs()).exp();
                (u, -self.width * x.signum() * u)
            }
        }
    }

    /// Complex envelope `u(t)`; zero outside the window.
    pub fn envelope(&self, t: f64) -> C64 {
        if !(0.0..=self.duration).contains(&t) {
            return ZERO;
        }
        let (u, _) = self.real_profile(t);
        C64::from_polar(u, -self.carrier_detuning * t)
    }

    pub fn envelope_derivative(&self, t: f64) -> C64 {
        if !(0.0..=self.duration).contains(&t) {
            return ZERO;
        }
        let (u, du) = self.real_profile(t);
        C64::from_polar(1.0, -self.carrier_detuning * t) * C64::new(du, -self.carrier_detuning * u)
    }
}

/// Sampled complex control `g(t)` on the grid `t_i = i·dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSequence {
    pub dt: f64,
    pub samples: Vec<C64>,
    pub delta: f64,
    pub role: Role,
    pub fraction: f64,
}

impl ControlSequence {
    pub fn constant(g: C64, duration: f64, dt: f64, delta: f64, role: Role) -> Self {
        let (steps, dt) = grid(duration, dt);
        Self { dt, samples: vec![g; steps + 1], delta, role, fraction: 1.0 }
    }

    pub fn zeros(duration: f64, dt: f64, role: Role) -> Self {
        Self::constant(ZERO, duration, dt, 0.0, role)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.samples.len().saturating_sub(1) as f64
    }

    pub fn time(&self, index: usize) -> f64 {
        self.dt * index as f64
    }

    /// Linear interpolation between samples; zero outside the window.
    pub fn at(&self, t: f64) -> C64 {
        if self.samples.is_empty() || t < 0.0 {
            return ZERO;
        }
        let x = t / self.dt;
        let i = x.floor() as usize;
        let last = self.samples.len() - 1;
        if i >= last {
            // tolerate round-off at the right edge
            return if x <= last as f64 + 1e-9 { self.samples[last] } else { ZERO };
        }
        let w = x - i as f64;
        self.samples[i] * (1.0 - w) + self.samples[i + 1] * w
    }

    pub fn peak_magnitude(&self) -> f64 {
        self.samples.iter().map(|g| g.norm()).fold(0.0, f64::max)
    }

    pub fn check_g_max(&self, g_max: f64) -> Result<(), SynthesisError> {
        for (i, g) in self.samples.iter().enumerate() {
            check_sample(*g, self.time(i), g_max)?;
        }
        Ok(())
    }

    /// Multiplies every sample by `e^{iφ}`.
    pub fn rotate(&mut self, phi: f64) {
        let r = C64::from_polar(1.0, phi);
        for g in &mut self.samples {
            *g *= r;
        }
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{}", CONTROL_COLUMNS.join(","))?;
        for (i, g) in self.samples.iter().enumerate() {
            table::write_row(out, &[self.time(i), g.re, g.im])?;
        }
        Ok(())
    }

    /// Reads samples written by [`ControlSequence::write_csv`]; the grid must be
    /// uniform and start at zero.
    pub fn read_csv<R: BufRead>(input: R, delta: f64, role: Role, fraction: f64) -> Result<Self, TableError> {
        let rows = table::read_numeric(input, &CONTROL_COLUMNS)?;
        let dt = if rows.len() > 1 { rows[1][0] - rows[0][0] } else { 0.0 };
        for (i, row) in rows.iter().enumerate() {
            let expected = dt * i as f64;
            if (row[0] - expected).abs() > 1e-9 * (1.0 + expected.abs()) || (rows.len() > 1 && dt <= 0.0) {
                return Err(TableError::Number { line: i + 2, text: format!("non-uniform time {}", row[0]) });
            }
        }
        let samples = rows.iter().map(|r| C64::new(r[1], r[2])).collect();
        Ok(Self { dt, samples, delta, role, fraction })
    }
}

/// Tunables shared by both synthesis routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisOptions {
    pub g_max: f64,
    pub catch_regularization: f64,
    pub pitch_reduction: f64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            g_max: DEFAULT_G_MAX,
            catch_regularization: DEFAULT_CATCH_REGULARIZATION,
            pitch_reduction: DEFAULT_PITCH_REDUCTION,
        }
    }
}

/// Number of steps and the exact step covering `duration`.
fn grid(duration: f64, dt: f64) -> (usize, f64) {
    let steps = (duration / dt).round().max(1.0) as usize;
    (steps, duration / steps as f64)
}

fn check_sample(g: C64, t: f64, g_max: f64) -> Result<(), SynthesisError> {
    if !(g.re.is_finite() && g.im.is_finite()) {
        return Err(SynthesisError::NonFinite { t });
    }
    if g.norm() > g_max {
        return Err(SynthesisError::ExceedsGMax { t, magnitude: g.norm(), g_max });
    }
    Ok(())
}

fn check_inputs(w: &WavepacketSpec, kappa: f64, dt: f64) -> Result<(), SynthesisError> {
    w.validate()?;
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(SynthesisError::InvalidKappa(kappa));
    }
    let limit = w.duration / MIN_STEPS;
    if dt.is_nan() || dt <= 0.0 || dt > limit * (1.0 + 1e-9) {
        return Err(SynthesisError::StepTooCoarse { dt, limit });
    }
    Ok(())
}

/// Explicit-midpoint march shared by pitch and catch: `control(t, q)` gives
/// `g` from the current amplitude and `rate(t, q, g)` gives `q̇`.
/// `expected(t, flux)` is the exact `|q(t)|²` given the flux `∫₀ᵗ|u|²`
/// delivered so far; the march stops before it reaches zero.
fn march(
    w: &WavepacketSpec,
    dt: f64,
    q0: C64,
    g_max: f64,
    control: impl Fn(f64, C64) -> C64,
    rate: impl Fn(f64, C64, C64) -> C64,
    expected: impl Fn(f64, f64) -> f64,
) -> Result<(Vec<C64>, f64, C64), SynthesisError> {
    let (steps, h) = grid(w.duration, dt);
    let floor = 1e-6 * q0.norm_sqr();
    let mut q = q0;
    let mut flux = 0.0;
    let mut samples = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let t = h * i as f64;
        if i > 0 {
            flux += 0.5 * h * (w.envelope(t - h).norm_sqr() + w.envelope(t).norm_sqr());
        }
        let predicted = expected(t, flux);
        if !(predicted > floor && q.norm_sqr() > floor) {
            return Err(SynthesisError::AmplitudeCollapse { t, amplitude: predicted.max(0.0).sqrt() });
        }
        let g = control(t, q);
        check_sample(g, t, g_max)?;
        samples.push(g);
        if i == steps {
            break;
        }
        let tm = t + 0.5 * h;
        let qm = q + rate(t, q, g) * (0.5 * h);
        if qm.norm_sqr().is_nan() || qm.norm_sqr() <= floor {
            return Err(SynthesisError::AmplitudeCollapse { t: tm, amplitude: qm.norm() });
        }
        let gm = control(tm, qm);
        q += rate(tm, qm, gm) * h;
    }
    Ok((samples, h, q))
}

/// Control absorbing the incoming wavepacket `w` without reflection.
pub fn synthesize_catch(
    w: &WavepacketSpec,
    kappa: f64,
    delta: f64,
    dt: f64,
    opts: &SynthesisOptions,
) -> Result<ControlSequence, SynthesisError> {
    check_inputs(w, kappa, dt)?;
    let sk = kappa.sqrt();
    let q0 = C64::new((w.n_phot / opts.catch_regularization).sqrt(), 0.0);
    let control = |t: f64, q: C64| {
        let u = w.envelope(t);
        let a = w.envelope_derivative(t) + I * delta * u - 0.5 * kappa * u;
        (a / (I * sk * q)).conj()
    };
    let rate = |t: f64, _q: C64, g: C64| I * g * w.envelope(t) / sk;
    let u0 = w.envelope(0.0).norm_sqr();
    let expected = |t: f64, flux: f64| q0.norm_sqr() + flux - (w.envelope(t).norm_sqr() - u0) / kappa;
    let (samples, h, q_end) = march(w, dt, q0, opts.g_max, control, rate, expected)?;
    let mut cs = ControlSequence { dt: h, samples, delta, role: Role::Catch, fraction: 1.0 };
    // A constant phase on g is free; choose it so the captured amplitude ends real.
    cs.rotate(-q_end.arg());
    Ok(cs)
}

/// Control releasing the wavepacket `w` from a node starting in its ground
/// state. A full pitch (`fraction = 1`) emits `pitch_reduction · n_phot`;
/// a partial pitch emits `fraction · n_phot` and leaves the rest in the qubit.
pub fn synthesize_pitch(
    w: &WavepacketSpec,
    kappa: f64,
    delta: f64,
    fraction: f64,
    dt: f64,
    opts: &SynthesisOptions,
) -> Result<ControlSequence, SynthesisError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(SynthesisError::InvalidFraction(fraction));
    }
    check_inputs(w, kappa, dt)?;
    let emitted = if fraction >= 1.0 { opts.pitch_reduction } else { fraction };
    let target = w.with_n_phot(w.n_phot * emitted);
    let sk = kappa.sqrt();
    let a0 = C64::new(w.n_phot.sqrt(), 0.0);
    let control = |t: f64, a: C64| {
        let c = target.envelope(t) / sk;
        let b = target.envelope_derivative(t) / sk + I * delta * c + 0.5 * kappa * c;
        (I * b / a).conj()
    };
    let rate = |t: f64, _a: C64, g: C64| -I * g * target.envelope(t) / sk;
    let expected = |t: f64, flux: f64| a0.norm_sqr() - flux - target.envelope(t).norm_sqr() / kappa;
    let (samples, h, a_end) = march(&target, dt, a0, opts.g_max, control, rate, expected)?;
    let mut cs = ControlSequence { dt: h, samples, delta, role: Role::Pitch, fraction };
    if fraction < 1.0 {
        // Align the retained and emitted branches so their relative phase is zero.
        cs.rotate(-a_end.arg());
    }
    Ok(cs)
}

/// Output field `√κ c(t)` radiated by a pitch sequence, integrating the
/// single-excitation equations with RK4 from qubit amplitude `initial_q`.
pub fn emitted_waveform(cs: &ControlSequence, kappa: f64, initial_q: C64) -> Result<Vec<C64>, SynthesisError> {
    if cs.role != Role::Pitch {
        return Err(SynthesisError::WrongRole { expected: Role::Pitch, found: cs.role });
    }
    let delta = cs.delta;
    let rhs = |g: C64, a: C64, c: C64| {
        let da = -I * g * c;
        let dc = -I * delta * c - I * g.conj() * a - 0.5 * kappa * c;
        (da, dc)
    };
    let h = cs.dt;
    let (mut a, mut c) = (initial_q, ZERO);
    let mut out = Vec::with_capacity(cs.len());
    out.push(kappa.sqrt() * c);
    for pair in cs.samples.windows(2) {
        let (g0, g1) = (pair[0], pair[1]);
        let gm = 0.5 * (g0 + g1);
        let (k1a, k1c) = rhs(g0, a, c);
        let (k2a, k2c) = rhs(gm, a + k1a * (0.5 * h), c + k1c * (0.5 * h));
        let (k3a, k3c) = rhs(gm, a + k2a * (0.5 * h), c + k2c * (0.5 * h));
        let (k4a, k4c) = rhs(g1, a + k3a * h, c + k3c * h);
        a += (k1a + 2.0 * k2a + 2.0 * k3a + k4a) * (h / 6.0);
        c += (k1c + 2.0 * k2c + 2.0 * k3c + k4c) * (h / 6.0);
        out.push(kappa.sqrt() * c);
    }
    Ok(out)
}

/// Trapezoidal `∫|f|² dt` on a uniform grid.
pub fn integrated_flux(samples: &[C64], dt: f64) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let inner: f64 = samples.iter().map(|z| z.norm_sqr()).sum();
    dt * (inner - 0.5 * (samples[0].norm_sqr() + samples[samples.len() - 1].norm_sqr()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const KAPPA: f64 = TAU;

    #[test]
    fn gaussian_envelope_is_normalized() {
        for (sigma, n) in [(0.8, 0.99), (0.45, 0.5), (0.2, 1.0)] {
            let w = WavepacketSpec::gaussian(sigma, n);
            let steps = 200_000;
            let h = w.duration / steps as f64;
            let samples: Vec<C64> = (0..=steps).map(|i| w.envelope(h * i as f64)).collect();
            assert!((integrated_flux(&samples, h) - n).abs() < 1e-9);
        }
    }

    #[test]
    fn exponential_envelope_is_normalized() {
        let w = WavepacketSpec::symmetric_exponential(3.0, 4.0, 0.7).with_carrier_detuning(1.3);
        let steps = 400_000;
        let h = w.duration / steps as f64;
        let samples: Vec<C64> = (0..=steps).map(|i| w.envelope(h * i as f64)).collect();
        assert!((integrated_flux(&samples, h) - 0.7).abs() < 1e-9);
    }

    #[test]
    fn envelope_derivative_matches_finite_difference() {
        let w = WavepacketSpec::gaussian(0.6, 1.0).with_carrier_detuning(2.0);
        let h = 1e-6;
        for t in [0.3, 1.7, 2.4, 4.0] {
            let fd = (w.envelope(t + h) - w.envelope(t - h)) / (2.0 * h);
            assert!((fd - w.envelope_derivative(t)).norm() < 1e-6);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(WavepacketSpec::gaussian(0.8, 0.0).validate().is_err());
        assert!(WavepacketSpec::gaussian(0.8, 1.2).validate().is_err());
        assert!(WavepacketSpec::gaussian(-1.0, 0.5).validate().is_err());
        assert!(WavepacketSpec::gaussian(0.8, 1.0).validate().is_ok());
    }

    #[test]
    fn coarse_grid_rejected() {
        let w = WavepacketSpec::gaussian(0.8, 0.99);
        let err = synthesize_catch(&w, KAPPA, 0.0, 0.01, &SynthesisOptions::default()).unwrap_err();
        assert!(matches!(err, SynthesisError::StepTooCoarse { .. }));
    }

    #[test]
    fn fast_wavepacket_exceeds_ceiling() {
        let w = WavepacketSpec::gaussian(0.05, 0.99);
        let err = synthesize_catch(&w, KAPPA, 0.0, 1e-5, &SynthesisOptions::default()).unwrap_err();
        assert!(matches!(err, SynthesisError::ExceedsGMax { .. }), "{err}");
    }

    #[test]
    fn over_release_collapses() {
        let w = WavepacketSpec::gaussian(0.8, 1.0);
        let opts = SynthesisOptions { pitch_reduction: 1.0, g_max: f64::INFINITY, ..Default::default() };
        let err = synthesize_pitch(&w, KAPPA, 0.0, 1.0, 1e-3, &opts).unwrap_err();
        assert!(matches!(err, SynthesisError::AmplitudeCollapse { .. } | SynthesisError::NonFinite { .. }), "{err}");
    }

    #[test]
    fn interpolation_and_edges() {
        let cs = ControlSequence {
            dt: 0.5,
            samples: vec![C64::new(0.0, 0.0), C64::new(1.0, 2.0), C64::new(3.0, 0.0)],
            delta: 0.0,
            role: Role::Catch,
            fraction: 1.0,
        };
        assert_eq!(cs.duration(), 1.0);
        assert_eq!(cs.at(0.25), C64::new(0.5, 1.0));
        assert_eq!(cs.at(1.0), C64::new(3.0, 0.0));
        assert_eq!(cs.at(1.5), ZERO);
        assert_eq!(cs.at(-0.1), ZERO);
    }

    #[test]
    fn control_csv_round_trip() {
        let w = WavepacketSpec::gaussian(0.8, 0.99);
        let cs = synthesize_catch(&w, KAPPA, 0.0, 1e-3, &SynthesisOptions::default()).unwrap();
        let mut buf = Vec::new();
        cs.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t_us,re_g_radperus,im_g_radperus\n"));
        let back = ControlSequence::read_csv(buf.as_slice(), 0.0, Role::Catch, 1.0).unwrap();
        assert_eq!(back.len(), cs.len());
        for (a, b) in back.samples.iter().zip(&cs.samples) {
            assert!((a - b).norm() < 1e-11 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn zero_control_emits_nothing() {
        let cs = ControlSequence::zeros(2.0, 1e-3, Role::Pitch);
        let out = emitted_waveform(&cs, KAPPA, C64::new(1.0, 0.0)).unwrap();
        assert!(out.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn emitted_waveform_requires_pitch() {
        let cs = ControlSequence::zeros(1.0, 1e-3, Role::Catch);
        assert!(emitted_waveform(&cs, KAPPA, C64::new(1.0, 0.0)).is_err());
    }
}
