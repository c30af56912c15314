//! Experiment configuration: a TOML file naming one experiment, a node
//! preset and a flat table of dotted-key overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pitchcatch::cascaded::ProtocolSettings;
use pitchcatch::model::{self, from_mhz, NodePair, NodeParams};
use pitchcatch::pulse::Role;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::{Spanned, Value};

use crate::units::{parse_frequency, parse_time};

/// A configuration problem, anchored to a line of the file when possible.
#[derive(Debug, Error)]
pub struct ConfigError {
    pub file: PathBuf,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.file.display(), line, self.message),
            None => write!(f, "{}: {}", self.file.display(), self.message),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Rabi,
    Synthesize,
    Transfer,
    Entangle,
    CalibrateLine,
}

impl Experiment {
    pub const NAMES: [&'static str; 5] = ["rabi", "synthesize", "transfer", "entangle", "calibrate-line"];
}

impl FromStr for Experiment {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rabi" => Ok(Self::Rabi),
            "synthesize" => Ok(Self::Synthesize),
            "transfer" => Ok(Self::Transfer),
            "entangle" => Ok(Self::Entangle),
            "calibrate-line" => Ok(Self::CalibrateLine),
            other => Err(format!("unknown experiment `{other}` (expected one of {})", Self::NAMES.join(", "))),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = *self as usize;
        f.write_str(Self::NAMES[i])
    }
}

/// Single-node Rabi oscillation under a constant two-photon drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RabiSettings {
    pub g: f64,
    pub delta: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SynthesizeSettings {
    pub role: Role,
    pub fraction: f64,
    pub n_phot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrateSettings {
    pub points: usize,
    /// Tone sweep width (rad/µs); `None` picks 3(χ + κ) per node.
    pub span: Option<f64>,
    pub noise: f64,
    pub curves_alice: Option<PathBuf>,
    pub curves_bob: Option<PathBuf>,
}

/// Fully resolved run description, recorded verbatim in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub experiment: Experiment,
    pub preset: String,
    pub nodes: NodePair,
    pub protocol: ProtocolSettings,
    pub rabi: RabiSettings,
    pub synthesize: SynthesizeSettings,
    pub calibrate: CalibrateSettings,
    pub output_dir: PathBuf,
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Spanned<String>,
    preset: Option<Spanned<Value>>,
    #[serde(default)]
    overrides: BTreeMap<String, Spanned<Value>>,
    output_dir: Option<Spanned<String>>,
    seed: Option<Spanned<i64>>,
}

/// Command-line adjustments layered over the file.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub preset: Option<String>,
    pub output_dir: Option<PathBuf>,
    pub dt_ns: Option<f64>,
    /// Extra `key = value` overrides applied after the file's own.
    pub extra: Vec<(String, Value)>,
}

/// Reads a command-line value the way TOML would: number, bool, else string.
pub fn cli_value(text: &str) -> Value {
    let t = text.trim();
    if let Ok(i) = t.parse::<i64>() {
        Value::Integer(i)
    } else if let Ok(x) = t.parse::<f64>() {
        Value::Float(x)
    } else if let Ok(b) = t.parse::<bool>() {
        Value::Boolean(b)
    } else {
        Value::String(t.to_string())
    }
}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

pub const DEFAULT_OUTPUT_DIR: &str = "pitchcatch-out";
pub const DEFAULT_RABI_G_MHZ: f64 = 0.23;
pub const DEFAULT_RABI_DURATION: f64 = 3.0;
pub const DEFAULT_CURVE_POINTS: usize = 61;
pub const DEFAULT_CURVE_NOISE: f64 = 0.02;

pub fn load(path: &Path, cli: &CliOverrides) -> Result<Resolved, ConfigError> {
    let source = std::fs::read_to_string(path).map_err(|e| ConfigError {
        file: path.to_path_buf(),
        line: None,
        message: format!("cannot read config: {e}"),
    })?;
    parse(&source, path, cli)
}

pub fn parse(source: &str, path: &Path, cli: &CliOverrides) -> Result<Resolved, ConfigError> {
    let err = |line: Option<usize>, message: String| ConfigError { file: path.to_path_buf(), line, message };
    let at = |span: std::ops::Range<usize>| Some(line_of(source, span.start));

    let raw: RawConfig = toml::from_str(source)
        .map_err(|e| err(e.span().map(|s| line_of(source, s.start)), e.message().trim().to_string()))?;

    let experiment: Experiment = raw.experiment.get_ref().parse().map_err(|m| err(at(raw.experiment.span()), m))?;

    let preset_line = raw.preset.as_ref().and_then(|p| at(p.span()));
    let (preset, nodes) = match (&cli.preset, &raw.preset) {
        (Some(name), _) => (name.clone(), model::preset(name).map_err(|e| err(None, e.to_string()))?),
        (None, None) => (model::PAPER_DEFAULTS.to_string(), model::paper_defaults()),
        (None, Some(p)) => match p.get_ref() {
            Value::String(name) => (name.clone(), model::preset(name).map_err(|e| err(preset_line, e.to_string()))?),
            Value::Table(t) => ("inline".to_string(), inline_preset(t).map_err(|m| err(preset_line, m))?),
            other => {
                return Err(err(preset_line, format!("preset must be a name or a table, got {}", other.type_str())))
            }
        },
    };

    let protocol = match experiment {
        Experiment::Entangle => ProtocolSettings::entangle_defaults(),
        _ => ProtocolSettings::transfer_defaults(),
    };
    let mut r = Resolved {
        experiment,
        preset,
        nodes,
        protocol,
        rabi: RabiSettings { g: from_mhz(DEFAULT_RABI_G_MHZ), delta: 0.0, duration: DEFAULT_RABI_DURATION },
        synthesize: SynthesizeSettings { role: Role::Pitch, fraction: 1.0, n_phot: 1.0 },
        calibrate: CalibrateSettings {
            points: DEFAULT_CURVE_POINTS,
            span: None,
            noise: DEFAULT_CURVE_NOISE,
            curves_alice: None,
            curves_bob: None,
        },
        output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
        seed: 0,
    };

    // The Gaussian width resets the window, so it goes before everything else.
    let mut ordered: Vec<(&String, &Spanned<Value>)> = raw.overrides.iter().collect();
    ordered.sort_by_key(|(k, _)| !matches!(k.as_str(), "protocol.shape" | "protocol.sigma"));
    let mut lines: BTreeMap<String, usize> = BTreeMap::new();
    for (key, value) in ordered {
        let line = at(value.span());
        apply_override(&mut r, key, value.get_ref(), path).map_err(|m| err(line, m))?;
        if let Some(l) = line {
            lines.insert(key.clone(), l);
        }
    }
    for (key, value) in &cli.extra {
        apply_override(&mut r, key, value, path).map_err(|m| err(None, format!("--sweep {key}: {m}")))?;
    }
    if let Some(ns) = cli.dt_ns {
        if !(ns.is_finite() && ns > 0.0) {
            return Err(err(None, format!("--dt must be a positive number of ns, got {ns}")));
        }
        r.protocol.dt = ns * 1e-3;
    }

    if let Some(dir) = &raw.output_dir {
        r.output_dir = PathBuf::from(dir.get_ref());
    }
    if let Some(dir) = &cli.output_dir {
        r.output_dir = dir.clone();
    }
    if let Some(seed) = &raw.seed {
        r.seed =
            u64::try_from(*seed.get_ref()).map_err(|_| err(at(seed.span()), "seed must be non-negative".into()))?;
    }

    for (name, node) in [("alice", &r.nodes.alice), ("bob", &r.nodes.bob)] {
        node.validate().map_err(|e| {
            let line = ["t2", "t1", "kappa", "readout_fidelity_g", "readout_fidelity_e"]
                .iter()
                .find_map(|f| lines.get(&format!("{name}.{f}")).copied())
                .or(preset_line);
            err(line, format!("{name}: {e}"))
        })?;
    }
    Ok(r)
}

const NODE_FIELDS: [&str; 10] = [
    "omega_q",
    "omega_c",
    "kappa",
    "chi_cq",
    "chi_qq",
    "chi_cc",
    "t1",
    "t2",
    "readout_fidelity_g",
    "readout_fidelity_e",
];

fn inline_preset(t: &toml::Table) -> Result<NodePair, String> {
    for key in t.keys() {
        if key != "alice" && key != "bob" {
            return Err(format!("unknown preset node `{key}` (expected alice and bob)"));
        }
    }
    let node = |name: &str| -> Result<NodeParams, String> {
        let table = t
            .get(name)
            .and_then(Value::as_table)
            .ok_or_else(|| format!("inline preset is missing the `{name}` table"))?;
        let mut p = model::paper_defaults().alice;
        for field in NODE_FIELDS {
            let v = table.get(field).ok_or_else(|| format!("preset.{name} is missing `{field}`"))?;
            set_node_field(&mut p, field, v).map_err(|m| format!("preset.{name}.{field}: {m}"))?;
        }
        if let Some(extra) = table.keys().find(|k| !NODE_FIELDS.contains(&k.as_str())) {
            return Err(format!("unknown node parameter `preset.{name}.{extra}`"));
        }
        Ok(p)
    };
    Ok(NodePair { alice: node("alice")?, bob: node("bob")? })
}

fn number(v: &Value) -> Result<f64, String> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(format!("expected a number, got {}", other.type_str())),
    }
}

fn frequency(v: &Value) -> Result<f64, String> {
    match v {
        Value::String(s) => parse_frequency(s),
        other => number(other),
    }
}

fn time(v: &Value) -> Result<f64, String> {
    match v {
        Value::String(s) => parse_time(s),
        other => number(other),
    }
}

fn positive(x: f64, what: &str) -> Result<f64, String> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(format!("{what} must be positive, got {x}"))
    }
}

fn boolean(v: &Value) -> Result<bool, String> {
    v.as_bool().ok_or_else(|| format!("expected true or false, got {}", v.type_str()))
}

fn string(v: &Value) -> Result<&str, String> {
    v.as_str().ok_or_else(|| format!("expected a string, got {}", v.type_str()))
}

fn count(v: &Value) -> Result<usize, String> {
    match v {
        Value::Integer(i) if *i > 0 => Ok(*i as usize),
        other => Err(format!("expected a positive integer, got {other}")),
    }
}

fn unit_interval(x: f64, what: &str) -> Result<f64, String> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(format!("{what} must lie in [0, 1], got {x}"))
    }
}

fn set_node_field(p: &mut NodeParams, field: &str, v: &Value) -> Result<(), String> {
    match field {
        "omega_q" => p.omega_q = frequency(v)?,
        "omega_c" => p.omega_c = frequency(v)?,
        "kappa" => p.kappa = positive(frequency(v)?, "kappa")?,
        "chi_cq" => p.chi_cq = frequency(v)?,
        "chi_qq" => p.chi_qq = frequency(v)?,
        "chi_cc" => p.chi_cc = frequency(v)?,
        "t1" => p.t1 = positive(time(v)?, "T1")?,
        "t2" => p.t2 = positive(time(v)?, "T2")?,
        "readout_fidelity_g" => p.readout_fidelity_g = number(v)?,
        "readout_fidelity_e" => p.readout_fidelity_e = number(v)?,
        other => return Err(format!("unknown node parameter `{other}`")),
    }
    Ok(())
}

/// Every key accepted under `[overrides]`.
pub const OVERRIDE_KEYS: &[&str] = &[
    "alice.<node parameter>",
    "bob.<node parameter>",
    "channel.transmission",
    "protocol.shape",
    "protocol.sigma",
    "protocol.width",
    "protocol.duration",
    "protocol.delta_a",
    "protocol.dt",
    "protocol.sample_every",
    "protocol.g_max",
    "protocol.frame_angle",
    "imperfections.channel_loss",
    "imperfections.decoherence",
    "imperfections.readout",
    "rabi.g",
    "rabi.delta",
    "rabi.duration",
    "synthesize.role",
    "synthesize.fraction",
    "synthesize.n_phot",
    "calibrate.points",
    "calibrate.span",
    "calibrate.noise",
    "calibrate.curves_alice",
    "calibrate.curves_bob",
];

fn apply_override(r: &mut Resolved, key: &str, v: &Value, config_path: &Path) -> Result<(), String> {
    let relative = |s: &str| config_path.parent().unwrap_or(Path::new(".")).join(s);
    let p = &mut r.protocol;
    match key {
        k if k.starts_with("alice.") => set_node_field(&mut r.nodes.alice, &k[6..], v)?,
        k if k.starts_with("bob.") => set_node_field(&mut r.nodes.bob, &k[4..], v)?,
        "channel.transmission" => p.transmission = unit_interval(number(v)?, "transmission")?,
        "protocol.shape" => p.shape = string(v)?.parse()?,
        "protocol.sigma" => *p = p.with_sigma(positive(time(v)?, "sigma")?),
        "protocol.width" => p.width = positive(number(v)?, "width")?,
        "protocol.duration" => p.duration = positive(time(v)?, "duration")?,
        "protocol.delta_a" => p.delta_a = frequency(v)?,
        "protocol.dt" => p.dt = positive(time(v)?, "dt")?,
        "protocol.sample_every" => p.sample_every = count(v)?,
        "protocol.g_max" => p.synthesis.g_max = positive(frequency(v)?, "g_max")?,
        "protocol.frame_angle" => p.frame_angle = number(v)?,
        "imperfections.channel_loss" => p.flags.channel_loss = boolean(v)?,
        "imperfections.decoherence" => p.flags.decoherence = boolean(v)?,
        "imperfections.readout" => p.flags.readout = boolean(v)?,
        "rabi.g" => r.rabi.g = frequency(v)?,
        "rabi.delta" => r.rabi.delta = frequency(v)?,
        "rabi.duration" => r.rabi.duration = positive(time(v)?, "duration")?,
        "synthesize.role" => r.synthesize.role = string(v)?.parse()?,
        "synthesize.fraction" => {
            let f = number(v)?;
            if !(f > 0.0 && f <= 1.0) {
                return Err(format!("fraction must lie in (0, 1], got {f}"));
            }
            r.synthesize.fraction = f;
        }
        "synthesize.n_phot" => r.synthesize.n_phot = positive(number(v)?, "n_phot")?,
        "calibrate.points" => r.calibrate.points = count(v)?,
        "calibrate.span" => r.calibrate.span = Some(positive(frequency(v)?, "span")?),
        "calibrate.noise" => {
            let x = number(v)?;
            if !(x.is_finite() && x >= 0.0) {
                return Err(format!("noise must be non-negative, got {x}"));
            }
            r.calibrate.noise = x;
        }
        "calibrate.curves_alice" => r.calibrate.curves_alice = Some(relative(string(v)?)),
        "calibrate.curves_bob" => r.calibrate.curves_bob = Some(relative(string(v)?)),
        other => return Err(format!("unknown override key `{other}` (accepted: {})", OVERRIDE_KEYS.join(", "))),
    }
    Ok(())
}
