//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::instance::Method;
use crate::dependence::IncrementForm;
use crate::error::{Error, Result};
use crate::repair::{LayeredSpec, MatchPolicy};
use crate::sim::SimConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Instance,
    Testbed,
    Figure3,
    Figure4,
    Figure5,
    Figure6,
    Figure7,
}

impl Mode {
    pub fn figure(n: u32) -> Result<Mode> {
        match n {
            3 => Ok(Mode::Figure3),
            4 => Ok(Mode::Figure4),
            5 => Ok(Mode::Figure5),
            6 => Ok(Mode::Figure6),
            7 => Ok(Mode::Figure7),
            _ => Err(Error::Config {
                path: "figure".into(),
                message: format!("figure {n} is not available (expected 3 to 7)"),
            }),
        }
    }
}

/// Simulation budget in units of the slower of the machine cycle and the
/// product interarrival time, so that slow queues get proportionally longer runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    pub cycles: f64,
    pub replications: usize,
    pub batches: usize,
    pub seed: u64,
    /// Fraction of the horizon discarded as warmup.
    pub warmup_fraction: f64,
    /// Target relative half-width of the simulated mean. A pilot run that
    /// misses it is repeated with a horizon scaled by the squared ratio.
    pub precision: Option<f64>,
    /// Largest factor by which the pilot horizon may grow.
    pub max_growth: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            cycles: 2e5,
            replications: 8,
            batches: 32,
            seed: 1,
            warmup_fraction: 0.01,
            precision: None,
            max_growth: 400.0,
        }
    }
}

impl Budget {
    /// Simulation settings for a queue with `arrival_rate` served by a machine with `cycle_len`.
    pub fn sim_config(&self, arrival_rate: f64, cycle_len: f64, seed: u64) -> SimConfig {
        let unit = if arrival_rate > 0.0 {
            cycle_len.max(1.0 / arrival_rate)
        } else {
            cycle_len
        };
        self.with_horizon(self.cycles * unit, seed)
    }

    pub fn with_horizon(&self, horizon: f64, seed: u64) -> SimConfig {
        SimConfig {
            warmup: self.warmup_fraction * horizon,
            horizon,
            replications: self.replications,
            seed,
            batches: self.batches,
            levels: 64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestbedConfig {
    /// Instances drawn from the grid; `None` runs all of them.
    pub subsample: Option<usize>,
    pub seed: u64,
}

impl Default for TestbedConfig {
    fn default() -> Self {
        TestbedConfig { subsample: None, seed: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FigureConfig {
    /// Points per sweep.
    pub points: usize,
}

impl Default for FigureConfig {
    fn default() -> Self {
        FigureConfig { points: 12 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub mode: Mode,
    #[serde(default)]
    pub layered: Option<LayeredSpec>,
    #[serde(default)]
    pub matching: MatchPolicy,
    #[serde(default)]
    pub increment: IncrementForm,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub testbed: TestbedConfig,
    #[serde(default)]
    pub figure: FigureConfig,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(mode: Mode) -> Self {
        ExperimentConfig {
            schema: SCHEMA_VERSION,
            mode,
            layered: None,
            matching: MatchPolicy::default(),
            increment: IncrementForm::default(),
            budget: Budget::default(),
            testbed: TestbedConfig::default(),
            figure: FigureConfig::default(),
            out: None,
            jobs: None,
        }
    }

    pub fn method(&self) -> Method {
        Method {
            policy: self.matching,
            form: self.increment,
        }
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config {
            path: origin.into(),
            message: e.to_string(),
        })?;
        cfg.validate().map_err(|e| match e {
            Error::Config { message, .. } => Error::Config {
                path: origin.into(),
                message,
            },
            other => Error::Config {
                path: origin.into(),
                message: other.to_string(),
            },
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| {
            Err(Error::Config {
                path: field.into(),
                message,
            })
        };
        if self.schema != SCHEMA_VERSION {
            return bad(
                "schema",
                format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.schema),
            );
        }
        if self.mode == Mode::Instance && self.layered.is_none() {
            return bad("layered", "instance mode needs a [layered] model".into());
        }
        if let Some(spec) = &self.layered {
            spec.validate()?;
        }
        if let Some(n) = self.testbed.subsample {
            if n == 0 || n > super::testbed::GRID_SIZE {
                return bad(
                    "testbed.subsample",
                    format!("subsample must lie in 1..={}, got {n}", super::testbed::GRID_SIZE),
                );
            }
        }
        if !(self.budget.cycles.is_finite() && self.budget.cycles > 0.0) {
            return bad("budget.cycles", format!("must be positive, got {}", self.budget.cycles));
        }
        if !(0.0..1.0).contains(&self.budget.warmup_fraction) {
            return bad(
                "budget.warmup_fraction",
                format!("must lie in [0, 1), got {}", self.budget.warmup_fraction),
            );
        }
        if let Some(p) = self.budget.precision {
            if !(p > 0.0 && p.is_finite()) {
                return bad("budget.precision", format!("must be positive, got {p}"));
            }
        }
        if !(self.budget.max_growth >= 1.0 && self.budget.max_growth.is_finite()) {
            return bad("budget.max_growth", format!("must be at least 1, got {}", self.budget.max_growth));
        }
        if self.figure.points < 2 {
            return bad("figure.points", format!("need at least 2 points, got {}", self.figure.points));
        }
        if self.jobs == Some(0) {
            return bad("jobs", "must be at least 1".into());
        }
        self.budget.sim_config(1.0, 1.0, 0).validate()
    }
}
