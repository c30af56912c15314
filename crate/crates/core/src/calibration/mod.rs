//! Calibration forward models and fits: measurement-induced dephasing and
//! Stark shift of a dressed qubit, line transmission from those curves, and
//! drive strength from two-photon Rabi data.

mod lm;

pub use lm::{minimize, LmOptions, LmResult};

use std::io::{BufRead, Write};

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use thiserror::Error;

use crate::model::{from_mhz, to_mhz, NodeParams};
use crate::semiclassical::{rabi_excited_population, RabiParams};
use crate::table::{self, TableError};
use crate::tomography::apply_readout_error;

pub const CURVE_COLUMNS: [&str; 3] = ["omega_MHz", "gamma_d_per_P0", "delta_q_per_P0"];
pub const MIN_CURVE_SAMPLES: usize = 10;
pub const MIN_RABI_SAMPLES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("fit did not converge after {iterations} iterations (rms residual {rms:.3e}, signal scale {scale:.3e})")]
    NotConverged { iterations: usize, rms: f64, scale: f64 },
    #[error("residual landscape is flat: g cannot be distinguished from zero with these samples")]
    FlatLandscape,
    #[error("invalid sample: {0}")]
    InvalidSample(String),
}

/// Continuous tone near the cavity resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressingDrive {
    /// Angular frequency (rad/µs).
    pub omega: f64,
    /// Photon flux scale (photons/µs).
    pub power: f64,
}

/// `α_e α_g*` for cavity linewidth `kappa`, shift `chi`, detuning `x = ω − ω_c`.
fn field_product(kappa: f64, chi: f64, x: f64, power: f64) -> C64 {
    let amp = 2.0 * (kappa * power).sqrt();
    let alpha_e = amp / C64::new(kappa, 2.0 * (x + chi));
    let alpha_g = amp / C64::new(kappa, 2.0 * x);
    alpha_e * alpha_g.conj()
}

fn dephasing_stark_raw(kappa: f64, chi: f64, x: f64, power: f64) -> (f64, f64) {
    let prod = field_product(kappa, chi, x, power);
    // Sign chosen so the dephasing rate is non-negative.
    (-chi * prod.im, chi * prod.re)
}

/// Measurement-induced dephasing rate Γ_d (1/µs) and Stark shift δ_q
/// (rad/µs) caused by the dressing tone.
pub fn dephasing_and_stark(p: &NodeParams, d: &DressingDrive) -> (f64, f64) {
    dephasing_stark_raw(p.kappa, p.chi_cq, d.omega - p.omega_c, d.power)
}

/// One point of a dressing curve, both responses per unit reference power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSample {
    pub omega: f64,
    pub gamma_d_per_p0: f64,
    pub delta_q_per_p0: f64,
}

/// Evenly spaced tone frequencies centred between the two dressed cavity
/// frequencies.
pub fn frequency_grid(p: &NodeParams, span: f64, points: usize) -> Vec<f64> {
    let center = p.omega_c - 0.5 * p.chi_cq;
    let n = points.max(2);
    (0..n).map(|i| center - 0.5 * span + span * i as f64 / (n - 1) as f64).collect()
}

/// Noiseless curves for a node that receives `power_ratio = P/P0` of the
/// reference power.
pub fn synthetic_curves(p: &NodeParams, power_ratio: f64, omegas: &[f64]) -> Vec<CurveSample> {
    omegas
        .iter()
        .map(|&omega| {
            let (g, d) = dephasing_stark_raw(p.kappa, p.chi_cq, omega - p.omega_c, power_ratio);
            CurveSample { omega, gamma_d_per_p0: g, delta_q_per_p0: d }
        })
        .collect()
}

/// Multiplies every response by `1 + rel·N(0, 1)`.
pub fn add_multiplicative_noise<R: Rng + ?Sized>(curves: &mut [CurveSample], rel: f64, rng: &mut R) {
    let normal = Normal::new(0.0, rel).expect("noise level must be finite and non-negative");
    for s in curves {
        s.gamma_d_per_p0 *= 1.0 + normal.sample(rng);
        s.delta_q_per_p0 *= 1.0 + normal.sample(rng);
    }
}

pub fn write_curves_csv<W: Write>(curves: &[CurveSample], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{}", CURVE_COLUMNS.join(","))?;
    for s in curves {
        table::write_row(out, &[to_mhz(s.omega), s.gamma_d_per_p0, s.delta_q_per_p0])?;
    }
    Ok(())
}

pub fn read_curves_csv<R: BufRead>(input: R) -> Result<Vec<CurveSample>, TableError> {
    Ok(table::read_numeric(input, &CURVE_COLUMNS)?
        .into_iter()
        .map(|r| CurveSample { omega: from_mhz(r[0]), gamma_d_per_p0: r[1], delta_q_per_p0: r[2] })
        .collect())
}

/// Fitted dressing parameters of one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeFit {
    pub chi: f64,
    pub kappa: f64,
    pub power_ratio: f64,
    pub rms_residual: f64,
    pub iterations: usize,
    /// The sampled span is narrower than the fitted linewidth.
    pub ill_conditioned: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransmissionFit {
    pub transmission: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
    pub chi_a: f64,
    pub chi_b: f64,
    pub alice: NodeFit,
    pub bob: NodeFit,
}

fn unit_model(kappa: f64, chi: f64, curves: &[CurveSample], omega_c: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * curves.len());
    for s in curves {
        out.push(dephasing_stark_raw(kappa, chi, s.omega - omega_c, 1.0).0);
    }
    for s in curves {
        out.push(dephasing_stark_raw(kappa, chi, s.omega - omega_c, 1.0).1);
    }
    out
}

fn data_vector(curves: &[CurveSample]) -> Vec<f64> {
    curves.iter().map(|s| s.gamma_d_per_p0).chain(curves.iter().map(|s| s.delta_q_per_p0)).collect()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
}

/// Fits `(χ, κ, P/P0)` of one node with its bare cavity frequency known.
pub fn fit_node_curves(curves: &[CurveSample], omega_c: f64) -> Result<NodeFit, FitError> {
    if curves.len() < MIN_CURVE_SAMPLES {
        return Err(FitError::TooFewSamples { needed: MIN_CURVE_SAMPLES, found: curves.len() });
    }
    if curves.iter().any(|s| !(s.omega.is_finite() && s.gamma_d_per_p0.is_finite() && s.delta_q_per_p0.is_finite())) {
        return Err(FitError::InvalidSample("non-finite curve value".into()));
    }
    let y = data_vector(curves);
    let scale = (y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64).sqrt();
    let (lo, hi) =
        curves.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.omega), hi.max(s.omega)));
    let span = hi - lo;
    let min_step = curves.windows(2).map(|w| (w[1].omega - w[0].omega).abs()).filter(|d| *d > 0.0).fold(span, f64::min);

    // Grid seed: for each (χ, κ) the best power ratio is a linear projection.
    let mut best = (f64::INFINITY, 1.0, 1.0, 1.0);
    for chi in log_grid(0.5 * min_step, 4.0 * span, 60) {
        for kappa in log_grid(0.5 * min_step, 4.0 * span, 60) {
            let m = unit_model(kappa, chi, curves, omega_c);
            let mm: f64 = m.iter().map(|v| v * v).sum();
            if mm.is_nan() || mm <= 0.0 {
                continue;
            }
            let s = m.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / mm;
            let cost: f64 = m.iter().zip(&y).map(|(a, b)| (s * a - b).powi(2)).sum();
            if cost < best.0 {
                best = (cost, chi, kappa, s);
            }
        }
    }
    let residuals = |p: &[f64]| -> Vec<f64> {
        let (chi, kappa, s) = (p[0], p[1], p[2]);
        if !(chi > 0.0 && kappa > 0.0) {
            return vec![f64::INFINITY; y.len()];
        }
        unit_model(kappa, chi, curves, omega_c).iter().zip(&y).map(|(m, d)| s * m - d).collect()
    };
    let opts = LmOptions { max_iterations: 500, ..Default::default() };
    let res = minimize(residuals, &[best.1, best.2, best.3], &opts);
    let rms = (res.cost / y.len() as f64).sqrt();
    if !res.converged {
        return Err(FitError::NotConverged { iterations: res.iterations, rms, scale });
    }
    let (chi, kappa, power_ratio) = (res.params[0], res.params[1], res.params[2]);
    Ok(NodeFit {
        chi,
        kappa,
        power_ratio,
        rms_residual: rms,
        iterations: res.iterations,
        ill_conditioned: span < kappa,
    })
}

/// Line transmission as the ratio of the power ratios fitted at Bob (after
/// the line) and at Alice.
pub fn fit_transmission(
    curves_a: &[CurveSample],
    omega_c_a: f64,
    curves_b: &[CurveSample],
    omega_c_b: f64,
) -> Result<TransmissionFit, FitError> {
    let alice = fit_node_curves(curves_a, omega_c_a)?;
    let bob = fit_node_curves(curves_b, omega_c_b)?;
    Ok(TransmissionFit {
        transmission: bob.power_ratio / alice.power_ratio,
        kappa_a: alice.kappa,
        kappa_b: bob.kappa,
        chi_a: alice.chi,
        chi_b: bob.chi,
        alice,
        bob,
    })
}

/// Readout fidelities used to scale the model before comparing with data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReadoutScaling {
    pub f_g: f64,
    pub f_e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RabiFit {
    /// Drive strength magnitude (rad/µs).
    pub g: f64,
    pub rms_residual: f64,
}

fn rabi_model(g: f64, kappa: f64, delta: f64, t: f64, scaling: Option<ReadoutScaling>) -> f64 {
    let p = rabi_excited_population(&RabiParams::real(g, kappa, delta), t).unwrap_or(f64::NAN);
    match scaling {
        Some(s) => apply_readout_error(p, s.f_g, s.f_e),
        None => p,
    }
}

/// One-parameter least squares of the closed-form Rabi population against
/// `(t, P_e)` samples.
pub fn fit_rabi_strength(
    samples: &[(f64, f64)],
    kappa: f64,
    delta: f64,
    scaling: Option<ReadoutScaling>,
) -> Result<RabiFit, FitError> {
    if samples.len() < MIN_RABI_SAMPLES {
        return Err(FitError::TooFewSamples { needed: MIN_RABI_SAMPLES, found: samples.len() });
    }
    if let Some(&(t, p)) = samples.iter().find(|(t, p)| !(t.is_finite() && *t >= 0.0 && p.is_finite())) {
        return Err(FitError::InvalidSample(format!("(t = {t}, P = {p})")));
    }
    let mut times: Vec<f64> = samples.iter().map(|s| s.0).collect();
    times.sort_by(f64::total_cmp);
    let t_max = times[times.len() - 1];
    let min_step = times.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min);
    if !(t_max > 0.0 && min_step.is_finite()) {
        return Err(FitError::FlatLandscape);
    }
    let cost =
        |g: f64| -> f64 { samples.iter().map(|&(t, p)| (rabi_model(g, kappa, delta, t, scaling) - p).powi(2)).sum() };
    // Highest resolvable strength: a quarter oscillation per sample step.
    let g_hi = std::f64::consts::PI / (2.0 * min_step);
    let n = 4000;
    let grid: Vec<(f64, f64)> = (0..=n).map(|i| g_hi * i as f64 / n as f64).map(|g| (g, cost(g))).collect();
    let (c_min, c_max) =
        grid.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, c)| (lo.min(c), hi.max(c)));
    let signal: f64 = samples.iter().map(|s| s.1 * s.1).sum();
    if c_max - c_min <= 1e-12 * signal.max(1e-300) {
        return Err(FitError::FlatLandscape);
    }
    let &(g_seed, c_seed) = grid.iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("grid is non-empty");
    if g_seed == 0.0 {
        // Refine from the smallest nonzero strength; keep zero if nothing beats it.
        let res = minimize(
            |p| samples.iter().map(|&(t, y)| rabi_model(p[0], kappa, delta, t, scaling) - y).collect(),
            &[g_hi / n as f64],
            &LmOptions::default(),
        );
        let g = res.params[0].abs();
        let (g, c) = if res.cost < c_seed { (g, res.cost) } else { (0.0, c_seed) };
        return Ok(RabiFit { g, rms_residual: (c / samples.len() as f64).sqrt() });
    }
    let res = minimize(
        |p| samples.iter().map(|&(t, y)| rabi_model(p[0], kappa, delta, t, scaling) - y).collect(),
        &[g_seed],
        &LmOptions::default(),
    );
    if !res.converged {
        let rms = (res.cost / samples.len() as f64).sqrt();
        return Err(FitError::NotConverged {
            iterations: res.iterations,
            rms,
            scale: (signal / samples.len() as f64).sqrt(),
        });
    }
    Ok(RabiFit { g: res.params[0].abs(), rms_residual: (res.cost / samples.len() as f64).sqrt() })
}

/// Ordinary least-squares line `y = slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
