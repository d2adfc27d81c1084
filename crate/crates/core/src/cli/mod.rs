//! Declarative scenario runner behind the `slowlight` binary.
//!
//! A run reads one config, executes one scenario and writes CSV tables plus a
//! `manifest.json` holding the fully resolved config. Everything except
//! `timing.json` is a pure function of the config and seed.

mod config;
mod scenarios;
mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde::Serialize;
use thiserror::Error;

pub use config::{
    AtomConfig, Axis, BandConfig, BoundConfig, CouplingConfig, CpwConfig, CubicConfig, DisorderConfig,
    FiberConfig, GridConfig, MapConfig, RunConfig, Scenario, ScenarioConfig,
};
pub use table::format_float;

use crate::band::BandError;
use crate::dynamics::DynamicsError;
use crate::emission::EmissionError;
use crate::platforms::PlatformError;
use crate::spectral::SpectralError;

#[derive(Debug, Parser, Clone)]
#[command(name = "slowlight", version, about = "Emission from atoms moving along coupled-resonator waveguides")]
pub struct Cli {
    pub scenario: Scenario,
    /// TOML config, or a previous run's manifest.json.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads for map and ensemble scenarios (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Overrides `disorder.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("band: {0}")]
    Band(#[from] BandError),
    #[error("dynamics: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error("emission: {0}")]
    Emission(#[from] EmissionError),
    #[error("spectral: {0}")]
    Spectral(#[from] SpectralError),
    #[error("platforms: {0}")]
    Platform(#[from] PlatformError),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for config problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } => 2,
            _ => 1,
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    program: &'static str,
    version: &'static str,
    scenario: &'static str,
    config: &'a ScenarioConfig,
    outputs: Vec<&'a str>,
    summary: &'a serde_json::Value,
}

/// What a completed run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
    pub wall_seconds: f64,
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn run(cli: &Cli) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let raw = ScenarioConfig::load(&cli.config)?;
    raw.check(cli.scenario)?;
    let config = scenarios::resolve(raw, cli.scenario, cli.seed)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()?;
    let jobs = pool.current_num_threads();
    let outcome = pool.install(|| scenarios::execute(cli.scenario, &config))?;

    std::fs::create_dir_all(&cli.out).map_err(|source| CliError::Io {
        path: cli.out.clone(),
        source,
    })?;
    for (name, contents) in &outcome.files {
        write(&cli.out.join(name), contents)?;
    }
    let manifest = Manifest {
        program: "slowlight",
        version: env!("CARGO_PKG_VERSION"),
        scenario: cli.scenario.name(),
        config: &config,
        outputs: outcome.files.iter().map(|(n, _)| n.as_str()).collect(),
        summary: &outcome.summary,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write(&cli.out.join("manifest.json"), &text)?;

    let wall_seconds = start.elapsed().as_secs_f64();
    let timing = serde_json::json!({
        "wall_seconds": wall_seconds,
        "jobs": jobs,
    });
    write(&cli.out.join("timing.json"), &format!("{timing}\n"))?;

    let mut files: Vec<String> = outcome.files.into_iter().map(|(n, _)| n).collect();
    files.push("manifest.json".into());
    files.push("timing.json".into());
    Ok(RunReport {
        out_dir: cli.out.clone(),
        files,
        wall_seconds,
    })
}
