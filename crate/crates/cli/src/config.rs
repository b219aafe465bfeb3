use std::path::{Path, PathBuf};

use markov_gap::experiment::Layout;
use markov_gap::geometry::SmootherShape;
use markov_gap::models::ModelSpec;
use markov_gap::optimizer::OptimizerConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Largest optimized-block dimension run without `--force`.
pub const DEFAULT_MAX_DIM: usize = 3000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSpec,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub l_a: usize,
    pub l_b: usize,
    #[serde(default = "default_shape")]
    pub shape: SmootherShape,
    #[serde(default)]
    pub radius: usize,
    /// Minimum distance from the AB block to the lattice edge; default `max(8, 2R)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    /// Lower-left site `[x, y]` of region A; default centers the AB block.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<[usize; 2]>,
}

fn default_shape() -> SmootherShape {
    SmootherShape::TwoCircles
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write the per-iteration trace CSV.
    pub trace: bool,
    /// Write the final smoother unitaries for warm restarts.
    pub generators: bool,
    /// Generator file from an earlier run to start from.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warm_start: Option<PathBuf>,
    /// Runs whose optimized block exceeds this many modes need `--force`.
    pub max_dim: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), trace: true, generators: true, warm_start: None, max_dim: DEFAULT_MAX_DIM }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChecksConfig {
    /// Expected Chern number of the filled bands, one per layer.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_chern: Option<Vec<i64>>,
    /// Momentum grid per direction for the band checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_points: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepKey {
    /// Smoother radius.
    Radius,
    /// Linear size of A and B together.
    L,
    Shape,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub key: SweepKey,
    #[serde(default)]
    pub values: Vec<toml::Value>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.optimizer.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let g = &self.geometry;
        if g.l_a == 0 || g.l_b == 0 {
            return Err(CliError::Config("geometry.l_a and geometry.l_b must be positive".into()));
        }
        if g.width.is_some() != g.height.is_some() {
            return Err(CliError::Config("geometry.width and geometry.height go together".into()));
        }
        if self.optimizer.tr_constrained && self.model.n_layers() != 2 {
            return Err(CliError::Config("optimizer.tr_constrained needs a two-layer model".into()));
        }
        if let Some(expected) = &self.checks.expected_chern {
            if expected.len() != self.model.n_layers() {
                return Err(CliError::Config("checks.expected_chern needs one entry per layer".into()));
            }
        }
        Ok(())
    }

    pub fn layout(&self) -> Layout {
        let g = &self.geometry;
        Layout {
            l_a: g.l_a,
            l_b: g.l_b,
            shape: g.shape,
            radius: g.radius,
            margin: g.margin,
            lattice_size: g.width.zip(g.height),
            anchor: g.anchor.map(|[x, y]| (x, y)),
        }
    }

    /// Optimizer settings with the run seed applied.
    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig { rng_seed: self.seed, ..self.optimizer.clone() }
    }

    /// Copy of this config with one sweep value substituted.
    pub fn with_sweep_value(&self, key: SweepKey, value: &toml::Value) -> Result<Self, CliError> {
        let mut cfg = self.clone();
        cfg.sweep = None;
        let bad = || CliError::Config(format!("sweep value {value} does not fit key {key:?}"));
        match key {
            SweepKey::Radius => cfg.geometry.radius = value.as_integer().and_then(|v| usize::try_from(v).ok()).ok_or_else(bad)?,
            SweepKey::L => {
                let l = value.as_integer().and_then(|v| usize::try_from(v).ok()).ok_or_else(bad)?;
                cfg.geometry.l_a = l;
                cfg.geometry.l_b = l;
            }
            SweepKey::Shape => {
                cfg.geometry.shape = value.as_str().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parse comma-separated sweep values from the command line.
pub fn parse_values(key: SweepKey, text: &str) -> Result<Vec<toml::Value>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match key {
            SweepKey::Shape => Ok(toml::Value::String(s.to_string())),
            _ => s
                .parse::<i64>()
                .map(toml::Value::Integer)
                .map_err(|_| CliError::Config(format!("sweep value {s:?} is not an integer"))),
        })
        .collect()
}
