//! Run configuration, read from TOML and overridden by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use mfalloc_core::bifidelity::ScoringMode;
use mfalloc_core::models::{GridAxis, ModelSetup, ParameterGrid, SyntheticSpec};
use mfalloc_core::{Method, SelectorConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub model: Option<ModelSetup>,
    pub grid: GridConfig,
    pub synthetic: SyntheticSpec,
    pub selectors: Vec<SelectorEntry>,
    pub sizes: Vec<usize>,
    pub random_trials: usize,
    pub scoring: ScoringMode,
    pub workers: Option<usize>,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            model: None,
            grid: GridConfig::default(),
            synthetic: SyntheticSpec {
                d: 10,
                basis_size: 5,
                n: 40,
                coeff_bound: 0.7,
                noise_sigma: 0.0,
            },
            selectors: Method::ALL.iter().map(|m| SelectorEntry::new(*m)).collect(),
            sizes: (1..=20).collect(),
            random_trials: 100,
            scoring: ScoringMode::HeldOut,
            workers: None,
            output: OutputConfig::default(),
        }
    }
}

/// Either per-axis point counts over the model's default ranges, or explicit axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub counts: [usize; 2],
    pub axes: Option<Vec<GridAxis>>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            counts: [20, 20],
            axes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectorEntry {
    pub method: Method,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub leverage_rank: Option<usize>,
    #[serde(default)]
    pub normalize_columns: bool,
}

impl SelectorEntry {
    pub fn new(method: Method) -> Self {
        SelectorEntry {
            method,
            epsilon: 0.0,
            lambda: None,
            leverage_rank: None,
            normalize_columns: false,
        }
    }

    pub fn to_config(&self, target_size: usize, seed: u64) -> SelectorConfig {
        let mut cfg = SelectorConfig::new(self.method, target_size)
            .with_seed(seed)
            .with_epsilon(self.epsilon)
            .with_lambda(self.lambda)
            .with_leverage_rank(self.leverage_rank);
        cfg.normalize_columns = self.normalize_columns;
        cfg
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for generated ensemble files.
    pub dir: Option<PathBuf>,
    /// Sweep CSV report.
    pub report: Option<PathBuf>,
    /// Sweep plot table.
    pub plot: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::input(format!("bad config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.sizes.is_empty() {
            return Err(CliError::input("no subset sizes given"));
        }
        if self.sizes[0] == 0 || self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::input(
                "subset sizes must be positive and strictly increasing",
            ));
        }
        if self.selectors.is_empty() {
            return Err(CliError::input("no selectors given"));
        }
        if self.workers == Some(0) {
            return Err(CliError::input("workers must be positive"));
        }
        Ok(())
    }

    pub fn grid_for(&self, setup: &ModelSetup) -> Result<ParameterGrid, CliError> {
        let grid = match &self.grid.axes {
            Some(axes) => ParameterGrid::new(axes.clone())?,
            None => setup.default_grid(self.grid.counts)?,
        };
        if grid.dim() != setup.parameter_count() {
            return Err(CliError::input(format!(
                "{} takes {} parameters but the grid has {} axes",
                setup.model_id(),
                setup.parameter_count(),
                grid.dim()
            )));
        }
        Ok(grid)
    }

    /// Selector configurations for a sweep up to the largest size.
    pub fn selector_configs(&self) -> Vec<SelectorConfig> {
        let max = *self.sizes.last().unwrap_or(&1);
        self.selectors
            .iter()
            .map(|s| s.to_config(max, self.seed))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_cover_the_roster() {
        let c = RunConfig::default();
        assert!(c.validate().is_ok());
        assert_eq!(c.selectors.len(), 6);
        assert_eq!(c.sizes.len(), 20);
    }

    #[test]
    fn parses_toml() {
        let text = r#"
            seed = 7
            sizes = [1, 2, 5]
            random_trials = 10
            scoring = "all_columns"

            [model]
            model = "burgers"
            low_nx = 24

            [grid]
            counts = [3, 4]

            [[selectors]]
            method = "gomp"
            epsilon = 1e-8

            [[selectors]]
            method = "rand"
        "#;
        let c: RunConfig = toml::from_str(text).unwrap();
        c.validate().unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.scoring, ScoringMode::AllColumns);
        match &c.model {
            Some(ModelSetup::Burgers(b)) => {
                assert_eq!(b.low_nx, 24);
                assert_eq!(b.high_nx, 256);
            }
            other => panic!("unexpected model {other:?}"),
        }
        let cfgs = c.selector_configs();
        assert_eq!(cfgs[0].gomp_epsilon, 1e-8);
        assert_eq!(cfgs[1].method, Method::Random);
        assert_eq!(cfgs[1].target_size, 5);
        assert_eq!(cfgs[1].rng_seed, 7);
        let grid = c.grid_for(c.model.as_ref().unwrap()).unwrap();
        assert_eq!(grid.len(), 12);
    }

    #[test]
    fn rejects_unknown_selector_and_unsorted_sizes() {
        assert!(toml::from_str::<RunConfig>("[[selectors]]\nmethod = \"svd\"").is_err());
        let c: RunConfig = toml::from_str("sizes = [3, 2]").unwrap();
        assert!(c.validate().is_err());
        assert!(toml::from_str::<RunConfig>("colour = 1").is_err());
    }
}
