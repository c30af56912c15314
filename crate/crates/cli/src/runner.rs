//! Runs one resolved experiment and writes its artifacts.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use num_complex::Complex64 as C64;
use pitchcatch::calibration::{
    add_multiplicative_noise, fit_rabi_strength, fit_transmission, frequency_grid, read_curves_csv, synthetic_curves,
    write_curves_csv, CurveSample, ReadoutScaling,
};
use pitchcatch::cascaded::{
    entangle_experiment, rabi_master_equation, synthesize_protocol, transfer_experiment, Trajectory,
};
use pitchcatch::model::{to_mhz, NodeParams};
use pitchcatch::pulse::{emitted_waveform, integrated_flux, synthesize_catch, synthesize_pitch, ControlSequence, Role};
use pitchcatch::semiclassical::{rabi_excited_population, RabiParams};
use pitchcatch::table::{self, write_row};
use pitchcatch::tomography::{apply_readout_error, ReconstructionReport};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, Experiment, Resolved};
use crate::plot::{Plot, Series};

pub const RABI_COLUMNS: [&str; 4] = ["t_us", "P_e", "P_e_measured", "P_e_closed_form"];
pub const EMITTED_COLUMNS: [&str; 5] = ["t_us", "re_cout", "im_cout", "re_target", "im_target"];

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl RunError {
    /// 1 for anything the user can fix in the configuration, 2 for numerics.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Numerical(_) => 2,
            _ => 1,
        }
    }
}

fn numerical(e: impl std::fmt::Display) -> RunError {
    RunError::Numerical(e.to_string())
}

/// Headline numbers of one run; keys are stable column names.
pub type Summary = BTreeMap<String, f64>;

/// Output directory plus a record of what has been written to it.
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn write_with(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Result<(), RunError> {
        let mut buf = Vec::new();
        let path = self.dir.join(name);
        f(&mut buf).and_then(|_| fs::write(&path, &buf)).map_err(|source| RunError::Io { path, source })?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), RunError> {
        self.write_with(name, |out| {
            serde_json::to_writer_pretty(&mut *out, value).map_err(io::Error::other)?;
            out.write_all(b"\n")
        })
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config_path: String,
    status: &'static str,
    error: Option<String>,
    resolved: &'a Resolved,
    outputs: Vec<String>,
    started_unix_s: f64,
    wall_time_s: f64,
}

/// Runs `r` into its output directory. A manifest is written whether or not
/// the experiment succeeds.
pub fn execute(config_path: &Path, r: &Resolved, plot: bool) -> Result<Summary, RunError> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let clock = Instant::now();
    let mut art = Artifacts::create(&r.output_dir)?;
    let result = run_experiment(r, plot, &mut art).and_then(|summary| {
        let mut doc = serde_json::Map::new();
        doc.insert("experiment".into(), r.experiment.to_string().into());
        for (k, v) in &summary {
            doc.insert(k.clone(), serde_json::json!(v));
        }
        art.write_json("summary.json", &doc)?;
        Ok(summary)
    });
    let mut outputs = art.written().to_vec();
    outputs.push("manifest.json".into());
    let manifest = Manifest {
        tool: "pitchcatch",
        version: env!("CARGO_PKG_VERSION"),
        config_path: config_path.display().to_string(),
        status: if result.is_ok() { "ok" } else { "failed" },
        error: result.as_ref().err().map(|e| e.to_string()),
        resolved: r,
        outputs,
        started_unix_s: started,
        wall_time_s: clock.elapsed().as_secs_f64(),
    };
    art.write_json("manifest.json", &manifest)?;
    result
}

pub fn run_experiment(r: &Resolved, plot: bool, art: &mut Artifacts) -> Result<Summary, RunError> {
    match r.experiment {
        Experiment::Rabi => rabi(r, plot, art),
        Experiment::Synthesize => synthesize(r, plot, art),
        Experiment::Transfer => transfer(r, plot, art),
        Experiment::Entangle => entangle(r, plot, art),
        Experiment::CalibrateLine => calibrate_line(r, plot, art),
    }
}

/// Synthesizes the controls an experiment would use, without simulating.
pub fn check_controls(r: &Resolved) -> Result<(), String> {
    let fraction = match r.experiment {
        Experiment::Transfer => 1.0,
        Experiment::Entangle => 0.5,
        Experiment::Synthesize => return synthesize_controls(r).map(|_| ()).map_err(|e| e.to_string()),
        _ => return Ok(()),
    };
    synthesize_protocol(&r.nodes, &r.protocol, fraction).map(|_| ()).map_err(|e| e.to_string())
}

fn write_svg(art: &mut Artifacts, plot: &Plot) -> Result<(), RunError> {
    let svg = plot.to_svg();
    art.write_with("plot.svg", |out| out.write_all(svg.as_bytes()))
}

fn write_controls(art: &mut Artifacts, name: &str, cs: &ControlSequence) -> Result<(), RunError> {
    art.write_with(name, |out| cs.write_csv(out))
}

fn write_trajectory(art: &mut Artifacts, traj: &Trajectory) -> Result<(), RunError> {
    art.write_with("trajectory.csv", |out| traj.write_csv(out))
}

fn conservation(summary: &mut Summary, traj: &Trajectory) {
    summary.insert("max_trace_err".into(), traj.max_trace_err());
    summary.insert("max_hermiticity_err".into(), traj.max_hermiticity_err());
    summary.insert("min_eigenvalue".into(), traj.min_eigenvalue());
    summary.insert("balance_drift".into(), traj.balance_drift());
}

fn population_plot<'a>(title: &'a str, traj: &Trajectory) -> Plot<'a> {
    let series = |label, f: fn(&pitchcatch::cascaded::TrajectorySample) -> f64| Series {
        label,
        points: traj.samples.iter().map(|s| (s.t, f(s))).collect(),
    };
    Plot {
        title,
        x_label: "t (us)",
        y_label: "population",
        series: vec![
            series("P(e_A)", |s| s.p_ea),
            series("P(e_B)", |s| s.p_eb),
            series("n_cav A", |s| s.n_cav_a),
            series("n_cav B", |s| s.n_cav_b),
        ],
    }
}

fn rabi(r: &Resolved, plot: bool, art: &mut Artifacts) -> Result<Summary, RunError> {
    let node = r.nodes.alice;
    let (g, kappa, delta) = (r.rabi.g, node.kappa, r.rabi.delta);
    let p = &r.protocol;
    let data = rabi_master_equation(C64::new(g, 0.0), kappa, delta, r.rabi.duration, p.dt, p.sample_every)
        .map_err(numerical)?;
    let (f_g, f_e) = if p.flags.readout { (node.readout_fidelity_g, node.readout_fidelity_e) } else { (1.0, 1.0) };
    let rp = RabiParams::real(g, kappa, delta);
    let mut rows = Vec::with_capacity(data.len());
    let mut worst: f64 = 0.0;
    for &(t, pe) in &data {
        let exact = rabi_excited_population(&rp, t).map_err(numerical)?;
        worst = worst.max((pe - exact).abs());
        rows.push([t, pe, apply_readout_error(pe, f_g, f_e), exact]);
    }
    art.write_with("rabi.csv", |out| {
        writeln!(out, "{}", RABI_COLUMNS.join(","))?;
        rows.iter().try_for_each(|row| write_row(out, row))
    })?;
    let measured: Vec<(f64, f64)> = rows.iter().map(|row| (row[0], row[2])).collect();
    let scaling = p.flags.readout.then_some(ReadoutScaling { f_g, f_e });
    let fit = fit_rabi_strength(&measured, kappa, delta, scaling).map_err(numerical)?;
    if plot {
        write_svg(
            art,
            &Plot {
                title: "Two-photon Rabi oscillation",
                x_label: "t (us)",
                y_label: "P(e)",
                series: vec![
                    Series { label: "master equation", points: rows.iter().map(|r| (r[0], r[1])).collect() },
                    Series { label: "measured", points: measured.clone() },
                    Series { label: "closed form", points: rows.iter().map(|r| (r[0], r[3])).collect() },
                ],
            },
        )?;
    }
    Ok(Summary::from([
        ("g_MHz".into(), to_mhz(g)),
        ("fitted_g_MHz".into(), to_mhz(fit.g)),
        ("fit_rms_residual".into(), fit.rms_residual),
        ("max_closed_form_error".into(), worst),
    ]))
}

fn synthesize_controls(r: &Resolved) -> Result<ControlSequence, pitchcatch::pulse::SynthesisError> {
    let (s, p) = (&r.synthesize, &r.protocol);
    let w = p.wavepacket(s.n_phot);
    match s.role {
        Role::Pitch => synthesize_pitch(&w, r.nodes.alice.kappa, p.delta_a, s.fraction, p.dt, &p.synthesis),
        Role::Catch => synthesize_catch(&w, r.nodes.bob.kappa, 0.0, p.dt, &p.synthesis),
    }
}

fn synthesize(r: &Resolved, plot: bool, art: &mut Artifacts) -> Result<Summary, RunError> {
    let cs = synthesize_controls(r).map_err(numerical)?;
    write_controls(art, "controls.csv", &cs)?;
    let mut summary = Summary::from([
        ("peak_g_MHz".into(), to_mhz(cs.peak_magnitude())),
        ("duration_us".into(), cs.duration()),
        ("samples".into(), cs.len() as f64),
    ]);
    let mut series = vec![Series {
        label: "|g| / 2pi (MHz)",
        points: (0..cs.len()).map(|i| (cs.time(i), to_mhz(cs.samples[i].norm()))).collect(),
    }];
    if r.synthesize.role == Role::Pitch {
        let s = &r.synthesize;
        let kappa = r.nodes.alice.kappa;
        let out = emitted_waveform(&cs, kappa, C64::new(s.n_phot.sqrt(), 0.0)).map_err(numerical)?;
        let emitted =
            if s.fraction >= 1.0 { s.n_phot * r.protocol.synthesis.pitch_reduction } else { s.n_phot * s.fraction };
        let target = r.protocol.wavepacket(emitted);
        let rows: Vec<[f64; 5]> = (0..cs.len())
            .map(|i| {
                let (t, u) = (cs.time(i), target.envelope(cs.time(i)));
                [t, out[i].re, out[i].im, u.re, u.im]
            })
            .collect();
        art.write_with("emitted.csv", |w| {
            writeln!(w, "{}", EMITTED_COLUMNS.join(","))?;
            rows.iter().try_for_each(|row| write_row(w, row))
        })?;
        let num: f64 = rows.iter().map(|r| (r[1] - r[3]).powi(2) + (r[2] - r[4]).powi(2)).sum();
        let den: f64 = rows.iter().map(|r| r[3] * r[3] + r[4] * r[4]).sum();
        summary.insert("emitted_flux".into(), integrated_flux(&out, cs.dt));
        summary.insert("target_flux".into(), emitted);
        summary.insert("relative_l2_error".into(), (num / den).sqrt());
        series.push(Series {
            label: "|c_out|^2",
            points: rows.iter().map(|r| (r[0], r[1] * r[1] + r[2] * r[2])).collect(),
        });
    }
    if plot {
        let title = match r.synthesize.role {
            Role::Pitch => "Pitch control",
            Role::Catch => "Catch control",
        };
        write_svg(art, &Plot { title, x_label: "t (us)", y_label: "magnitude", series })?;
    }
    Ok(summary)
}

fn transfer(r: &Resolved, plot: bool, art: &mut Artifacts) -> Result<Summary, RunError> {
    let out = transfer_experiment(&r.nodes, &r.protocol).map_err(numerical)?;
    write_trajectory(art, &out.trajectory)?;
    write_controls(art, "controls_alice.csv", &out.controls_a)?;
    write_controls(art, "controls_bob.csv", &out.controls_b)?;
    if plot {
        write_svg(art, &population_plot("Photon transfer", &out.trajectory))?;
    }
    let mut summary = Summary::from([
        ("detected_P_eB".into(), out.detected_p_eb),
        ("P_eA".into(), out.final_p_ea),
        ("P_eB".into(), out.final_p_eb),
        ("transmission".into(), out.transmission),
    ]);
    conservation(&mut summary, &out.trajectory);
    Ok(summary)
}

fn entangle(r: &Resolved, plot: bool, art: &mut Artifacts) -> Result<Summary, RunError> {
    let out = entangle_experiment(&r.nodes, &r.protocol).map_err(numerical)?;
    write_trajectory(art, &out.trajectory)?;
    write_controls(art, "controls_alice.csv", &out.controls_a)?;
    write_controls(art, "controls_bob.csv", &out.controls_b)?;
    art.write_with("pauli_ideal.csv", |w| out.ideal_table.write_csv(w))?;
    art.write_with("pauli_measured.csv", |w| out.measured_table.write_csv(w))?;
    art.write_json("reconstruction.json", &ReconstructionReport::new(&out.measured_table))?;
    if plot {
        write_svg(art, &population_plot("Half pitch and catch", &out.trajectory))?;
    }
    let mut summary = Summary::from([
        ("bell_fidelity".into(), out.bell_fidelity),
        ("ideal_bell_fidelity".into(), out.ideal_bell_fidelity),
        ("P_eA".into(), out.final_p_ea),
        ("P_eB".into(), out.final_p_eb),
        ("ZZ".into(), out.zz),
        ("min_reconstructed_eigenvalue".into(), out.eigenvalues.first().copied().unwrap_or(f64::NAN)),
    ]);
    conservation(&mut summary, &out.trajectory);
    Ok(summary)
}

fn load_curves(path: &Path) -> Result<Vec<CurveSample>, RunError> {
    let file = File::open(path).map_err(|source| RunError::Io { path: path.to_path_buf(), source })?;
    read_curves_csv(BufReader::new(file)).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct FitReport<'a> {
    fit: &'a pitchcatch::calibration::TransmissionFit,
    fitted_kappa_a_mhz: f64,
    fitted_kappa_b_mhz: f64,
    fitted_chi_a_mhz: f64,
    fitted_chi_b_mhz: f64,
    /// Parameters the synthetic curves were generated with, if any.
    truth: Option<Truth>,
}

#[derive(Serialize)]
struct Truth {
    transmission: f64,
    noise: f64,
    seed: u64,
}

fn calibrate_line(r: &Resolved, plot: bool, art: &mut Artifacts) -> Result<Summary, RunError> {
    let c = &r.calibrate;
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    let mut synthetic = false;
    let mut curves = |node: &NodeParams, ratio: f64, input: &Option<PathBuf>| -> Result<Vec<CurveSample>, RunError> {
        if let Some(path) = input {
            return load_curves(path);
        }
        synthetic = true;
        let span = c.span.unwrap_or(3.0 * (node.chi_cq + node.kappa));
        let mut out = synthetic_curves(node, ratio, &frequency_grid(node, span, c.points));
        add_multiplicative_noise(&mut out, c.noise, &mut rng);
        Ok(out)
    };
    let transmission = r.protocol.transmission;
    let a = curves(&r.nodes.alice, 1.0, &c.curves_alice)?;
    let b = curves(&r.nodes.bob, transmission, &c.curves_bob)?;
    art.write_with("curves_alice.csv", |w| write_curves_csv(&a, w))?;
    art.write_with("curves_bob.csv", |w| write_curves_csv(&b, w))?;
    let fit = fit_transmission(&a, r.nodes.alice.omega_c, &b, r.nodes.bob.omega_c).map_err(numerical)?;
    art.write_json(
        "fit_report.json",
        &FitReport {
            fit: &fit,
            fitted_kappa_a_mhz: to_mhz(fit.kappa_a),
            fitted_kappa_b_mhz: to_mhz(fit.kappa_b),
            fitted_chi_a_mhz: to_mhz(fit.chi_a),
            fitted_chi_b_mhz: to_mhz(fit.chi_b),
            truth: synthetic.then_some(Truth { transmission, noise: c.noise, seed: r.seed }),
        },
    )?;
    if plot {
        let pts = |cs: &[CurveSample]| cs.iter().map(|s| (to_mhz(s.omega), s.gamma_d_per_p0)).collect();
        write_svg(
            art,
            &Plot {
                title: "Measurement-induced dephasing",
                x_label: "tone frequency (MHz)",
                y_label: "Gamma_d / P0",
                series: vec![Series { label: "Alice", points: pts(&a) }, Series { label: "Bob", points: pts(&b) }],
            },
        )?;
    }
    Ok(Summary::from([
        ("fitted_T".into(), fit.transmission),
        ("fitted_kappa_a_MHz".into(), to_mhz(fit.kappa_a)),
        ("fitted_kappa_b_MHz".into(), to_mhz(fit.kappa_b)),
        ("fitted_chi_a_MHz".into(), to_mhz(fit.chi_a)),
        ("fitted_chi_b_MHz".into(), to_mhz(fit.chi_b)),
    ]))
}

/// Writes `rows` of a sweep as CSV: index, swept value, then every summary key.
pub fn write_sweep_csv<W: Write>(out: &mut W, key: &str, rows: &[(String, Option<Summary>)]) -> io::Result<()> {
    let mut columns: Vec<&String> = rows.iter().filter_map(|(_, s)| s.as_ref()).flat_map(|s| s.keys()).collect();
    columns.sort();
    columns.dedup();
    write!(out, "index,{key}")?;
    for c in &columns {
        write!(out, ",{c}")?;
    }
    writeln!(out)?;
    for (i, (value, summary)) in rows.iter().enumerate() {
        write!(out, "{i},{value}")?;
        for c in &columns {
            let v = summary.as_ref().and_then(|s| s.get(*c)).copied().unwrap_or(f64::NAN);
            write!(out, ",{}", table::format_value(v))?;
        }
        writeln!(out)?;
    }
    Ok(())
}
