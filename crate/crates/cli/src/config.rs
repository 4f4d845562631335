//! JSON configuration. Keys carry their units; durations are given as means
//! in seconds and converted to rates here.

use std::path::Path;

use femtoflow::domain::thermal_noise;
use femtoflow::mcsim::{Horizon, SimConfig};
use femtoflow::{RadioParams, SolverConfig, SystemParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub macro_radius_m: f64,
    pub femto_radius_m: f64,
    pub femtocells: u32,
    pub mean_femto_users: f64,
    pub femto_channels: u32,
    pub open_channels: u32,
    pub macro_channels: u32,
    pub indoor_fraction: f64,
    pub user_call_rate_per_s: f64,
    pub total_arrival_rate_per_s: f64,
    pub session_mean_s: f64,
    pub femto_dwell_mean_s: f64,
    pub macro_dwell_mean_s: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self::from_params(&SystemParams::default())
    }
}

impl SystemConfig {
    pub fn from_params(p: &SystemParams) -> Self {
        Self {
            macro_radius_m: p.macro_radius,
            femto_radius_m: p.femto_radius,
            femtocells: p.femtocells,
            mean_femto_users: p.mean_femto_users,
            femto_channels: p.femto_channels,
            open_channels: p.open_channels,
            macro_channels: p.macro_channels,
            indoor_fraction: p.indoor_fraction,
            user_call_rate_per_s: p.user_call_rate,
            total_arrival_rate_per_s: p.total_arrival_rate,
            session_mean_s: 1.0 / p.session_end_rate,
            femto_dwell_mean_s: 1.0 / p.femto_dwell_rate,
            macro_dwell_mean_s: 1.0 / p.macro_dwell_rate,
        }
    }

    pub fn to_params(&self) -> SystemParams {
        SystemParams {
            macro_radius: self.macro_radius_m,
            femto_radius: self.femto_radius_m,
            femtocells: self.femtocells,
            mean_femto_users: self.mean_femto_users,
            femto_channels: self.femto_channels,
            open_channels: self.open_channels,
            macro_channels: self.macro_channels,
            indoor_fraction: self.indoor_fraction,
            user_call_rate: self.user_call_rate_per_s,
            total_arrival_rate: self.total_arrival_rate_per_s,
            session_end_rate: 1.0 / self.session_mean_s,
            femto_dwell_rate: 1.0 / self.femto_dwell_mean_s,
            macro_dwell_rate: 1.0 / self.macro_dwell_mean_s,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioConfig {
    pub shadowing_sigma_db: f64,
    pub path_loss_exponent: f64,
    pub walls: f64,
    pub protection_distance_m: f64,
    pub indoor_shadowing_db: f64,
    pub channel_power_w: f64,
    pub circuit_power_w: f64,
    pub bandwidth_hz: f64,
    /// Defaults to thermal noise over the configured bandwidth.
    pub noise_power_w: Option<f64>,
}

impl Default for RadioConfig {
    fn default() -> Self {
        let r = RadioParams::default();
        Self {
            shadowing_sigma_db: r.shadowing_sigma_db,
            path_loss_exponent: r.path_loss_exponent,
            walls: r.walls,
            protection_distance_m: r.protection_distance,
            indoor_shadowing_db: r.indoor_shadowing_db,
            channel_power_w: r.channel_power,
            circuit_power_w: r.circuit_power,
            bandwidth_hz: r.bandwidth,
            noise_power_w: None,
        }
    }
}

impl RadioConfig {
    pub fn to_params(&self) -> RadioParams {
        RadioParams {
            shadowing_sigma_db: self.shadowing_sigma_db,
            path_loss_exponent: self.path_loss_exponent,
            walls: self.walls,
            protection_distance: self.protection_distance_m,
            indoor_shadowing_db: self.indoor_shadowing_db,
            channel_power: self.channel_power_w,
            circuit_power: self.circuit_power_w,
            bandwidth: self.bandwidth_hz,
            noise_power: self
                .noise_power_w
                .unwrap_or_else(|| thermal_noise(self.bandwidth_hz)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let c = SolverConfig::default();
        Self {
            tol: c.tol,
            max_iter: c.max_iter,
            damping: c.damping,
        }
    }
}

impl SolverSection {
    pub fn to_config(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    /// Event horizon per replication; ignored when `horizon_s` is set.
    pub events: u64,
    /// Time horizon per replication in simulated seconds.
    pub horizon_s: Option<f64>,
    pub warmup_fraction: f64,
    pub replications: usize,
    /// Capacity draws per replication for the simulated capacity.
    pub capacity_samples: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            events: 1_000_000,
            horizon_s: None,
            warmup_fraction: 0.2,
            replications: 20,
            capacity_samples: 5_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "lambda_T")]
    LambdaT,
    M,
    N,
    #[serde(rename = "N_F_O")]
    OpenChannels,
    #[serde(rename = "N_F_closed")]
    ClosedChannels,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: Axis,
    pub values: Vec<f64>,
    /// Columns to fill; the others are written empty. Defaults to all.
    #[serde(default)]
    pub outputs: Option<Vec<String>>,
    /// Adds simulated blocking and capacity columns.
    #[serde(default)]
    pub monte_carlo: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub radio: RadioConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    /// Capacity draws for the analytic pipeline.
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

fn default_mc_samples() -> usize {
    20_000
}

fn default_seed() -> u64 {
    1
}

impl Default for Config {
    fn default() -> Self {
        Self {
            system: SystemConfig::default(),
            radio: RadioConfig::default(),
            solver: SolverSection::default(),
            simulation: SimulationSection::default(),
            mc_samples: default_mc_samples(),
            seed: default_seed(),
            sweep: None,
        }
    }
}

/// Command-line overrides applied on top of a file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mc_samples: Option<usize>,
    pub replications: Option<usize>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Parse(format!("at `{path}`: {}", e.into_inner()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(n) = o.mc_samples {
            self.mc_samples = n;
        }
        if let Some(r) = o.replications {
            self.simulation.replications = r;
        }
    }

    /// Validated model parameters.
    pub fn params(&self) -> Result<(SystemParams, RadioParams), CliError> {
        Ok(femtoflow::validate(
            &self.system.to_params(),
            &self.radio.to_params(),
        )?)
    }

    pub fn solver_config(&self) -> Result<SolverConfig, CliError> {
        let c = self.solver.to_config();
        c.check()?;
        Ok(c)
    }

    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        let s = &self.simulation;
        let horizon = match s.horizon_s {
            Some(t) => Horizon::Time(t),
            None => Horizon::Events(s.events),
        };
        let c = SimConfig {
            horizon,
            warmup: s.warmup_fraction,
            replications: s.replications,
            seed: self.seed,
        };
        c.check()?;
        if s.capacity_samples == 0 {
            return Err(CliError::Validation(
                "simulation.capacity_samples must be >= 1".into(),
            ));
        }
        Ok(c)
    }

    pub fn check_mc_samples(&self) -> Result<usize, CliError> {
        if self.mc_samples == 0 {
            return Err(CliError::Validation("mc_samples must be >= 1".into()));
        }
        Ok(self.mc_samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_reference_parameters() {
        let c = Config::parse("{}").unwrap();
        let (p, r) = c.params().unwrap();
        assert_eq!(p.femtocells, 40);
        assert!((p.session_end_rate - 1.0 / 110.0).abs() < 1e-15);
        assert_eq!(r, RadioParams::default());
    }

    #[test]
    fn parse_errors_name_the_key() {
        let err = Config::parse(r#"{"system": {"femtocells": "forty"}}"#).unwrap_err();
        assert!(err.to_string().contains("system.femtocells"), "{err}");
        let err = Config::parse(r#"{"system": {"femtocels": 4}}"#).unwrap_err();
        assert!(err.to_string().contains("femtocels"), "{err}");
    }

    #[test]
    fn invalid_split_is_a_validation_error() {
        let c = Config::parse(r#"{"system": {"femto_channels": 3, "open_channels": 4}}"#).unwrap();
        assert!(matches!(c.params(), Err(CliError::Validation(_))));
    }

    #[test]
    fn durations_round_trip() {
        let p = SystemParams::default();
        let back = SystemConfig::from_params(&p).to_params();
        assert!((back.macro_dwell_rate - p.macro_dwell_rate).abs() < 1e-18);
    }
}
