//! JSON config schema and the tool's error/exit-code plumbing.

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use epiopt::codec;
use epiopt::cost::{CostTable, CovidCostTable, EpiOracle, H1N1CostTable, Mode};
use epiopt::dspsa::ThetaVec;
use epiopt::scenario::{self, Scenario};
use epiopt::sim::{ContactStructure, EpiRates, PopulationConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Config,
    Runtime,
}

#[derive(Debug)]
pub struct ToolError {
    pub kind: ExitKind,
    pub message: String,
}

impl fmt::Display for ToolError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl ToolError {
    pub fn config(message: impl Into<String>) -> Self {
        ToolError { kind: ExitKind::Config, message: message.into() }
    }

    pub fn config_from(e: impl fmt::Display) -> Self {
        Self::config(e.to_string())
    }

    pub fn runtime(e: impl fmt::Display) -> Self {
        ToolError { kind: ExitKind::Runtime, message: e.to_string() }
    }

    pub fn runtime_msg(message: impl Into<String>) -> Self {
        ToolError { kind: ExitKind::Runtime, message: message.into() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainConfig {
    /// Gain coefficient; tuned automatically when omitted.
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(rename = "A", default = "default_stability")]
    pub stability: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Desired magnitude of the first update step when tuning.
    #[serde(default = "default_first_step")]
    pub first_step: f64,
    #[serde(default = "default_tune_samples")]
    pub tune_samples: usize,
}

fn default_stability() -> f64 {
    1000.0
}
fn default_alpha() -> f64 {
    0.501
}
fn default_first_step() -> f64 {
    0.15
}
fn default_tune_samples() -> usize {
    50
}
fn default_runs() -> usize {
    10
}
fn default_iterations() -> usize {
    10_000
}
fn default_true() -> bool {
    true
}
fn default_ci_replicates() -> usize {
    500
}
fn default_ci_level() -> f64 {
    0.95
}
fn default_crn_probe_pairs() -> usize {
    200
}

impl Default for GainConfig {
    fn default() -> Self {
        GainConfig {
            a: None,
            stability: default_stability(),
            alpha: default_alpha(),
            first_step: default_first_step(),
            tune_samples: default_tune_samples(),
        }
    }
}

/// The JSON config document. Every block except `schema_version` and
/// `mode` has a documented default; `population`, `rates`, `cost_table`
/// and `supply` override the built-in placeholder scenario wholesale.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub schema_version: u32,
    pub mode: Mode,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_true")]
    pub crn: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub gain: GainConfig,
    #[serde(default = "default_ci_replicates")]
    pub ci_replicates: usize,
    #[serde(default = "default_ci_level")]
    pub ci_level: f64,
    #[serde(default = "default_crn_probe_pairs")]
    pub crn_probe_pairs: usize,
    /// Starting plan; defaults to the null intervention.
    #[serde(default)]
    pub theta0: Option<Vec<i64>>,
    #[serde(default)]
    pub population: Option<PopulationConfig>,
    #[serde(default)]
    pub rates: Option<EpiRates>,
    #[serde(default)]
    pub cost_table: Option<CostTable>,
    /// Per-day vaccine dose supply (influenza mode only).
    #[serde(default)]
    pub supply: Option<Vec<u64>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ToolError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ToolError::config(format!("cannot read {}: {e}", path.display())))?;
        let config: FileConfig = serde_json::from_str(&text)
            .map_err(|e| ToolError::config(format!("{}: {e}", path.display())))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(ToolError::config(format!(
                "{}: schema_version {} is not supported (this build expects {SCHEMA_VERSION})",
                path.display(),
                config.schema_version
            )));
        }
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), ToolError> {
        if self.runs == 0 {
            return Err(ToolError::config("runs must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(ToolError::config("iterations must be at least 1"));
        }
        if self.ci_replicates < 2 {
            return Err(ToolError::config("ci_replicates must be at least 2"));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(ToolError::config(format!("ci_level must lie in (0, 1), got {}", self.ci_level)));
        }
        if let (Mode::H1n1, Some(CostTable::Covid(_))) | (Mode::Covid, Some(CostTable::H1n1(_))) =
            (self.mode, &self.cost_table)
        {
            return Err(ToolError::config("cost_table flavor does not match mode"));
        }
        if self.mode == Mode::Covid && self.supply.is_some() {
            return Err(ToolError::config("supply applies to h1n1 mode only"));
        }
        Ok(())
    }

    /// Assemble the scenario, starting from the built-in defaults and
    /// applying the config's overrides.
    pub fn build_scenario(&self) -> Result<Scenario, ToolError> {
        let mut base = match self.mode {
            Mode::H1n1 => scenario::h1n1_default(),
            Mode::Covid => scenario::covid_default(),
        }
        .map_err(ToolError::config_from)?;

        if self.population.is_some() || self.rates.is_some() || self.cost_table.is_some() || self.supply.is_some() {
            let population = self.population.clone().unwrap_or(base.oracle.population);
            let rates = self.rates.clone().unwrap_or(base.oracle.rates);
            let contacts = ContactStructure::layered_default(&population);
            let cost_table = self.cost_table.clone().unwrap_or(match self.mode {
                Mode::H1n1 => CostTable::H1n1(H1N1CostTable::default()),
                Mode::Covid => CostTable::Covid(CovidCostTable::default()),
            });
            let supply = match self.mode {
                Mode::H1n1 => self
                    .supply
                    .clone()
                    .unwrap_or_else(|| scenario::h1n1_default_supply(population.sim_length_days as usize)),
                Mode::Covid => vec![],
            };
            let bounds = match self.mode {
                Mode::H1n1 => codec::h1n1_bounds(population.sim_length_days / 7),
                Mode::Covid => codec::covid_bounds(population.sim_length_days),
            };
            let baselines = match self.mode {
                Mode::H1n1 => scenario::h1n1_baselines(),
                Mode::Covid => scenario::covid_baselines(population.sim_length_days as i64),
            };
            base = Scenario {
                mode: self.mode,
                oracle: EpiOracle::new(self.mode, population, rates, contacts, cost_table, supply)
                    .map_err(ToolError::config_from)?,
                bounds,
                theta0: base.theta0,
                baselines,
            };
        }

        if let Some(theta0) = &self.theta0 {
            if theta0.len() != base.bounds.dim() {
                return Err(ToolError::config(format!(
                    "theta0 has {} slots but this mode needs {}",
                    theta0.len(),
                    base.bounds.dim()
                )));
            }
            base.theta0 = ThetaVec::initial(theta0.clone()).map_err(ToolError::config_from)?;
        }
        Ok(base)
    }
}
