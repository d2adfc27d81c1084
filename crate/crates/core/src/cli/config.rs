//! Scenario configuration. Every section rejects unknown keys.
//!
//! Units follow the library: `J = a = ħ = 1` unless the band section says
//! otherwise, detunings are measured from the band center, velocities are in
//! units of `Ja` (so `c̄ = 2`). Platform sections are in SI units with
//! angular frequencies in rad/s.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::dynamics::CouplingSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Emit,
    Transfer,
    DirectionalityMap,
    ValidityMap,
    Boundstates,
    Cubic,
    DisorderEnsemble,
    Fiber,
    Cpw,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Emit => "emit",
            Scenario::Transfer => "transfer",
            Scenario::DirectionalityMap => "directionality-map",
            Scenario::ValidityMap => "validity-map",
            Scenario::Boundstates => "boundstates",
            Scenario::Cubic => "cubic",
            Scenario::DisorderEnsemble => "disorder-ensemble",
            Scenario::Fiber => "fiber",
            Scenario::Cpw => "cpw",
        }
    }

    /// Sections the scenario reads; any other section is a schema error.
    fn sections(&self) -> &'static [&'static str] {
        match self {
            Scenario::Emit | Scenario::Transfer => &["band", "atoms", "coupling", "grid", "run"],
            Scenario::DisorderEnsemble => &["band", "atoms", "coupling", "grid", "run", "disorder"],
            Scenario::DirectionalityMap => &["band", "map"],
            Scenario::ValidityMap => &["band", "coupling", "grid", "run", "map"],
            Scenario::Boundstates => &["band", "bound"],
            Scenario::Cubic => &["band", "cubic"],
            Scenario::Fiber => &["fiber"],
            Scenario::Cpw => &["cpw"],
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_dt() -> f64 {
    0.01
}

fn default_stride() -> usize {
    1
}

fn default_gamma_p() -> f64 {
    crate::emission::DEFAULT_PHOTON_LOSS
}

fn default_realizations() -> usize {
    1
}

fn default_cubic_dt() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    #[serde(default = "one")]
    pub hopping: f64,
    #[serde(default = "one")]
    pub lattice_constant: f64,
    /// `γ_p`; zero unless given.
    #[serde(default)]
    pub photon_loss: f64,
}

impl Default for BandConfig {
    fn default() -> Self {
        Self {
            hopping: 1.0,
            lattice_constant: 1.0,
            photon_loss: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub detuning: f64,
    #[serde(default)]
    pub position: f64,
    #[serde(default)]
    pub velocity: f64,
    #[serde(default)]
    pub atomic_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CouplingConfig {
    Effective { gbar: f64 },
    Full { g: f64, z0: f64 },
}

impl From<CouplingConfig> for CouplingSpec {
    fn from(c: CouplingConfig) -> Self {
        match c {
            CouplingConfig::Effective { gbar } => CouplingSpec::Effective { gbar },
            CouplingConfig::Full { g, z0 } => CouplingSpec::Full { g, z0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_sites: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub t_max: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderConfig {
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_realizations")]
    pub n_realizations: usize,
}

/// A list of values or an inclusive linear range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Values(v) => v.clone(),
            Axis::Range { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n)
                    .map(|i| start + (stop - start) * i as f64 / (*n - 1) as f64)
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub deltas: Axis,
    pub velocities: Axis,
    /// Required by `directionality-map`; `validity-map` takes the coupling section.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gbar: Option<f64>,
    #[serde(default = "default_gamma_p")]
    pub gamma_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    pub deltas: Axis,
    pub velocities: Axis,
    pub gbar: f64,
    /// Also diagonalize a ring of this many sites.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_sites: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubicConfig {
    pub gbar: f64,
    #[serde(default)]
    pub delta: f64,
    pub t_max: f64,
    #[serde(default = "default_cubic_dt")]
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberConfig {
    /// `R0` (m).
    pub radius: f64,
    pub refractive_index: f64,
    /// `ω_e` (rad/s).
    pub cutoff_frequency: f64,
    /// Modulation periods `a` (m).
    pub periods: Axis,
    /// Modulation depths `δR/R0`.
    pub ratios: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpwConfig {
    pub l1: f64,
    pub l2: f64,
    pub length: f64,
    pub omega0: f64,
    pub dipole: f64,
    pub lattice_constant: f64,
    /// Atom heights `y_a` (m).
    pub heights: Axis,
    /// `J` (rad/s); enables the `gbar_over_J` and `gamma_c` columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hopping: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_depth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<BandConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<AtomConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder: Option<DisorderConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cubic: Option<CubicConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber: Option<FiberConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpw: Option<CpwConfig>,
}

/// Only the `config` entry of a manifest is read back.
#[derive(Deserialize)]
struct ManifestInput {
    config: ScenarioConfig,
}

fn schema(path: &str, message: impl Into<String>) -> CliError {
    CliError::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

fn path_error<E: std::fmt::Display>(err: serde_path_to_error::Error<E>) -> CliError {
    let path = err.path().to_string();
    schema(&path, err.into_inner().to_string())
}

impl ScenarioConfig {
    /// Reads a TOML config, or the resolved config stored in a `manifest.json`.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if path.extension().is_some_and(|e| e == "json") {
            let de = &mut serde_json::Deserializer::from_str(&text);
            let m: ManifestInput = serde_path_to_error::deserialize(de).map_err(path_error)?;
            Ok(m.config)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(path_error)
    }

    fn present(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let flags = [
            ("band", self.band.is_some()),
            ("atoms", !self.atoms.is_empty()),
            ("coupling", self.coupling.is_some()),
            ("grid", self.grid.is_some()),
            ("run", self.run.is_some()),
            ("disorder", self.disorder.is_some()),
            ("map", self.map.is_some()),
            ("bound", self.bound.is_some()),
            ("cubic", self.cubic.is_some()),
            ("fiber", self.fiber.is_some()),
            ("cpw", self.cpw.is_some()),
        ];
        for (name, set) in flags {
            if set {
                out.push(name);
            }
        }
        out
    }

    /// Structural checks that need no computation.
    pub fn check(&self, scenario: Scenario) -> Result<(), CliError> {
        if let Some(s) = self.scenario {
            if s != scenario {
                return Err(schema(
                    "scenario",
                    format!("config is for `{}` but `{}` was requested", s.name(), scenario.name()),
                ));
            }
        }
        let allowed = scenario.sections();
        for section in self.present() {
            if !allowed.contains(&section) {
                return Err(schema(
                    section,
                    format!("section is not used by scenario `{}`", scenario.name()),
                ));
            }
        }
        let need = |present: bool, name: &str| -> Result<(), CliError> {
            if present {
                Ok(())
            } else {
                Err(schema(name, format!("required by scenario `{}`", scenario.name())))
            }
        };
        match scenario {
            Scenario::Emit | Scenario::Transfer | Scenario::DisorderEnsemble => {
                if self.atoms.is_empty() {
                    return Err(schema("atoms", "at least one atom is required"));
                }
                if scenario == Scenario::Transfer && self.atoms.len() < 2 {
                    return Err(schema("atoms", "transfer needs at least two atoms"));
                }
                need(self.coupling.is_some(), "coupling")?;
                need(self.run.is_some(), "run")?;
                if scenario == Scenario::DisorderEnsemble {
                    need(self.disorder.is_some(), "disorder")?;
                }
            }
            Scenario::DirectionalityMap => {
                let map = self.map.as_ref().ok_or_else(|| schema("map", "required"))?;
                if map.gbar.is_none() {
                    return Err(schema("map.gbar", "required by scenario `directionality-map`"));
                }
            }
            Scenario::ValidityMap => {
                need(self.map.is_some(), "map")?;
                need(self.run.is_some(), "run")?;
                match self.coupling {
                    Some(CouplingConfig::Full { .. }) => {}
                    Some(_) => return Err(schema("coupling.kind", "validity-map compares against the full model; use kind = \"full\"")),
                    None => return Err(schema("coupling", "required by scenario `validity-map`")),
                }
                if let Some(map) = &self.map {
                    if map.gbar.is_some() {
                        return Err(schema("map.gbar", "validity-map derives gbar from the coupling section"));
                    }
                }
            }
            Scenario::Boundstates => need(self.bound.is_some(), "bound")?,
            Scenario::Cubic => need(self.cubic.is_some(), "cubic")?,
            Scenario::Fiber => need(self.fiber.is_some(), "fiber")?,
            Scenario::Cpw => need(self.cpw.is_some(), "cpw")?,
        }
        let axes: [(&str, Option<&Axis>); 6] = [
            ("map.deltas", self.map.as_ref().map(|m| &m.deltas)),
            ("map.velocities", self.map.as_ref().map(|m| &m.velocities)),
            ("bound.deltas", self.bound.as_ref().map(|m| &m.deltas)),
            ("bound.velocities", self.bound.as_ref().map(|m| &m.velocities)),
            ("fiber.periods", self.fiber.as_ref().map(|m| &m.periods)),
            ("fiber.ratios", self.fiber.as_ref().map(|m| &m.ratios)),
        ];
        for (name, axis) in axes {
            if axis.is_some_and(|a| a.values().is_empty()) {
                return Err(schema(name, "axis has no points"));
            }
        }
        if self.cpw.as_ref().is_some_and(|c| c.heights.values().is_empty()) {
            return Err(schema("cpw.heights", "axis has no points"));
        }
        if let Some(run) = &self.run {
            if run.stride == 0 {
                return Err(schema("run.stride", "must be at least 1"));
            }
        }
        if let Some(d) = &self.disorder {
            if d.n_realizations == 0 {
                return Err(schema("disorder.n_realizations", "must be at least 1"));
            }
        }
        Ok(())
    }
}
