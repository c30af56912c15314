use std::io::Write;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::hilbert::{DensityMatrix16, Mode, StateError, DIM};
use crate::matrix::{ComplexMatrix, ZERO};
use crate::table;

use super::{ConfigError, Liouvillian, SimulationConfig};

/// Integration aborts once `|Tr ρ − 1|` exceeds this.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;

pub const TRAJECTORY_COLUMNS: [&str; 9] =
    ["t_us", "P_eA", "P_eB", "n_cavA", "n_cavB", "ZZ", "re_aout", "im_aout", "trace_err"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolveError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("trace drifted by {drift:.3e} at t = {t:.4} us; reduce the time step")]
    TraceDrift { t: f64, drift: f64 },
    #[error("state became non-finite at t = {t:.4} us; reduce the time step")]
    NonFinite { t: f64 },
    #[error(transparent)]
    State(#[from] StateError),
}

/// Observables recorded at one sample time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub p_ea: f64,
    pub p_eb: f64,
    pub n_cav_a: f64,
    pub n_cav_b: f64,
    pub zz: f64,
    /// Mean field leaving Bob's node toward the detector.
    pub a_out: C64,
    pub trace_err: f64,
    /// Photon number lost to the line and detector since `t = 0`.
    pub lost: f64,
    /// Weighted excitation count minus `lost`; constant without qubit decoherence.
    pub balance: f64,
    pub hermiticity_err: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub states: Vec<DensityMatrix16>,
    /// Integrator step actually used (the window divided into whole steps).
    pub dt: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityMatrix16 {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn final_sample(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn duration(&self) -> f64 {
        self.final_sample().t
    }

    /// Worst `|Tr ρ − 1|` over the recorded samples.
    pub fn max_trace_err(&self) -> f64 {
        self.samples.iter().map(|s| s.trace_err).fold(0.0, f64::max)
    }

    pub fn max_hermiticity_err(&self) -> f64 {
        self.samples.iter().map(|s| s.hermiticity_err).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.samples.iter().map(|s| s.min_eigenvalue).fold(f64::INFINITY, f64::min)
    }

    /// Largest deviation of the excitation balance from its initial value.
    pub fn balance_drift(&self) -> f64 {
        let b0 = self.samples[0].balance;
        self.samples.iter().map(|s| (s.balance - b0).abs()).fold(0.0, f64::max)
    }

    /// Trapezoidal `∫|<a_out>|² dt` over the recorded samples.
    pub fn output_energy(&self) -> f64 {
        self.samples.windows(2).map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].a_out.norm_sqr() + w[1].a_out.norm_sqr())).sum()
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{}", TRAJECTORY_COLUMNS.join(","))?;
        for s in &self.samples {
            table::write_row(
                out,
                &[s.t, s.p_ea, s.p_eb, s.n_cav_a, s.n_cav_b, s.zz, s.a_out.re, s.a_out.im, s.trace_err],
            )?;
        }
        Ok(())
    }
}

struct Recorder<'a> {
    liouvillian: &'a Liouvillian,
    out_coupling_a: f64,
    out_coupling_b: f64,
    ca: ComplexMatrix,
    cb: ComplexMatrix,
}

impl Recorder<'_> {
    fn sample(&self, t: f64, rho: &[C64], lost: f64) -> Result<(TrajectorySample, DensityMatrix16), EvolveError> {
        let state = DensityMatrix16::new_unchecked(ComplexMatrix::from_row_major(rho.to_vec()))?;
        let m = state.matrix();
        let tr = m.trace();
        let a_out =
            self.out_coupling_a * state.expectation(&self.ca) + self.out_coupling_b * state.expectation(&self.cb);
        let sample = TrajectorySample {
            t,
            p_ea: state.population(Mode::QubitA),
            p_eb: state.population(Mode::QubitB),
            n_cav_a: state.population(Mode::CavityA),
            n_cav_b: state.population(Mode::CavityB),
            zz: state.zz_correlator(),
            a_out,
            trace_err: (tr - 1.0).norm(),
            lost,
            balance: self.liouvillian.balance(rho) - lost,
            hermiticity_err: m.hermiticity_error(),
            min_eigenvalue: state.min_eigenvalue(),
        };
        Ok((sample, state))
    }
}

/// Fixed-step RK4 integration over the control window. Controls are
/// interpolated linearly between their samples.
pub fn evolve(cfg: &SimulationConfig) -> Result<Trajectory, EvolveError> {
    cfg.validate()?;
    let duration = cfg.duration();
    let steps = (duration / cfg.dt).round().max(1.0) as usize;
    let h = duration / steps as f64;
    let liouvillian = Liouvillian::new(cfg);
    let recorder = Recorder {
        liouvillian: &liouvillian,
        out_coupling_a: (cfg.channel.transmission * cfg.nodes.alice.kappa).sqrt(),
        out_coupling_b: cfg.nodes.bob.kappa.sqrt(),
        ca: crate::hilbert::mode_operator(Mode::CavityA),
        cb: crate::hilbert::mode_operator(Mode::CavityB),
    };

    let n = DIM * DIM;
    let mut rho = cfg.initial_state.matrix().as_slice().to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]);
    let mut stage = vec![ZERO; n];
    let mut scratch = vec![ZERO; n];
    let mut lost = 0.0;

    let capacity = steps / cfg.sample_every + 2;
    let mut samples = Vec::with_capacity(capacity);
    let mut states = Vec::with_capacity(capacity);
    let (s0, st0) = recorder.sample(0.0, &rho, lost)?;
    samples.push(s0);
    states.push(st0);

    for step in 0..steps {
        let t = h * step as f64;
        let g0 = (cfg.controls_a.at(t), cfg.controls_b.at(t));
        let gm = (cfg.controls_a.at(t + 0.5 * h), cfg.controls_b.at(t + 0.5 * h));
        let g1 = (cfg.controls_a.at(t + h), cfg.controls_b.at(t + h));

        liouvillian.apply_into(g0.0, g0.1, &rho, &mut k1, &mut scratch);
        let f1 = liouvillian.leak_rate(&rho);
        axpy(&rho, 0.5 * h, &k1, &mut stage);
        let f2 = liouvillian.leak_rate(&stage);
        liouvillian.apply_into(gm.0, gm.1, &stage, &mut k2, &mut scratch);
        axpy(&rho, 0.5 * h, &k2, &mut stage);
        let f3 = liouvillian.leak_rate(&stage);
        liouvillian.apply_into(gm.0, gm.1, &stage, &mut k3, &mut scratch);
        axpy(&rho, h, &k3, &mut stage);
        let f4 = liouvillian.leak_rate(&stage);
        liouvillian.apply_into(g1.0, g1.1, &stage, &mut k4, &mut scratch);

        let w = h / 6.0;
        for i in 0..n {
            rho[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        lost += w * (f1 + 2.0 * f2 + 2.0 * f3 + f4);

        let t_next = h * (step + 1) as f64;
        let tr: C64 = (0..DIM).map(|i| rho[i * DIM + i]).sum();
        let drift = (tr - 1.0).norm();
        if !drift.is_finite() {
            return Err(EvolveError::NonFinite { t: t_next });
        }
        if drift > TRACE_DRIFT_LIMIT {
            return Err(EvolveError::TraceDrift { t: t_next, drift });
        }
        if (step + 1) % cfg.sample_every == 0 || step + 1 == steps {
            let (s, st) = recorder.sample(t_next, &rho, lost)?;
            samples.push(s);
            states.push(st);
        }
    }
    Ok(Trajectory { samples, states, dt: h })
}

/// `out = x + a·y`
#[inline]
fn axpy(x: &[C64], a: f64, y: &[C64], out: &mut [C64]) {
    for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
        *o = xi + a * yi;
    }
}
