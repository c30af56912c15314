mod config;
mod plot;
mod runner;
mod units;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use config::{cli_value, CliOverrides, ConfigError};
use runner::{execute, RunError, Summary};

/// Shaped single-photon transfer and remote entanglement between two
/// driven qubit-cavity nodes.
#[derive(Debug, Parser)]
#[command(name = "pitchcatch", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run(RunArgs),
    /// Check a config file without running anything.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also write plot.svg.
    #[arg(long)]
    plot: bool,
    /// Integrator and control step in nanoseconds.
    #[arg(long, value_name = "NS")]
    dt: Option<f64>,
    /// Run once per value of an override key, in parallel.
    #[arg(long, value_name = "KEY=v1,v2,...")]
    sweep: Option<String>,
    /// Node parameter preset (overrides `preset`).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    #[arg(long, value_name = "NS")]
    dt: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(&args),
        Command::Validate(args) => validate(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn validate(args: &ValidateArgs) -> Result<(), RunError> {
    let overrides = CliOverrides { preset: args.preset.clone(), dt_ns: args.dt, ..Default::default() };
    let r = config::load(&args.config, &overrides)?;
    runner::check_controls(&r).map_err(|message| ConfigError { file: args.config.clone(), line: None, message })?;
    println!("{}: valid {} experiment (preset {})", args.config.display(), r.experiment, r.preset);
    Ok(())
}

fn run(args: &RunArgs) -> Result<(), RunError> {
    let overrides =
        CliOverrides { preset: args.preset.clone(), output_dir: args.out.clone(), dt_ns: args.dt, extra: Vec::new() };
    let base = config::load(&args.config, &overrides)?;
    let Some(spec) = &args.sweep else {
        let summary = execute(&args.config, &base, args.plot)?;
        report(&base.output_dir, &summary);
        return Ok(());
    };
    let (key, values) = parse_sweep(&args.config, spec)?;
    sweep(args, &overrides, &base.output_dir, &key, &values)
}

fn report(dir: &Path, summary: &Summary) {
    let pairs: Vec<String> = summary.iter().map(|(k, v)| format!("{k} = {v:.6}")).collect();
    println!("{}: {}", dir.display(), pairs.join(", "));
}

fn parse_sweep(config: &Path, spec: &str) -> Result<(String, Vec<String>), ConfigError> {
    let bad = |message: String| ConfigError { file: config.to_path_buf(), line: None, message };
    let (key, values) =
        spec.split_once('=').ok_or_else(|| bad(format!("--sweep expects KEY=v1,v2,..., got `{spec}`")))?;
    let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
    if key.trim().is_empty() || values.is_empty() {
        return Err(bad(format!("--sweep expects KEY=v1,v2,..., got `{spec}`")));
    }
    Ok((key.trim().to_string(), values))
}

#[derive(Serialize)]
struct SweepPoint<'a> {
    index: usize,
    value: &'a str,
    output_dir: String,
    status: &'static str,
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepManifest<'a> {
    tool: &'static str,
    version: &'static str,
    config_path: String,
    key: &'a str,
    points: Vec<SweepPoint<'a>>,
}

fn sweep(args: &RunArgs, base: &CliOverrides, root: &Path, key: &str, values: &[String]) -> Result<(), RunError> {
    // Resolve every point up front so a bad value fails before any work.
    let resolved: Vec<config::Resolved> = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut o = base.clone();
            o.extra.push((key.to_string(), cli_value(v)));
            o.output_dir = Some(root.join(format!("sweep_{i:03}")));
            config::load(&args.config, &o)
        })
        .collect::<Result<_, _>>()?;

    let results: Vec<Result<Summary, RunError>> =
        resolved.par_iter().map(|r| execute(&args.config, r, args.plot)).collect();

    let mut art = runner::Artifacts::create(root)?;
    let rows: Vec<(String, Option<Summary>)> =
        values.iter().zip(&results).map(|(v, r)| (v.clone(), r.as_ref().ok().cloned())).collect();
    art.write_with("sweep.csv", |out| runner::write_sweep_csv(out, key, &rows))?;
    let points = values
        .iter()
        .zip(&resolved)
        .zip(&results)
        .enumerate()
        .map(|(index, ((value, r), res))| SweepPoint {
            index,
            value,
            output_dir: r.output_dir.display().to_string(),
            status: if res.is_ok() { "ok" } else { "failed" },
            error: res.as_ref().err().map(|e| e.to_string()),
        })
        .collect();
    art.write_json(
        "manifest.json",
        &SweepManifest {
            tool: "pitchcatch",
            version: env!("CARGO_PKG_VERSION"),
            config_path: args.config.display().to_string(),
            key,
            points,
        },
    )?;

    for (r, res) in resolved.iter().zip(&results) {
        if let Ok(summary) = res {
            report(&r.output_dir, summary);
        }
    }
    // The most severe failure decides the exit status.
    match results.into_iter().filter_map(Result::err).max_by_key(RunError::exit_code) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
