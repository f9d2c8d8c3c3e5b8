//! Experiment configuration: defaults, TOML loading, and derived objects.

use crate::choice::FilterMode;
use crate::env::{EnvError, GridSpec, Topology};
use crate::learner::{FitConfig, InitScheme};
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::ExpError;

/// Pair-filtering mode as written in config files; the common-terminal state
/// is resolved against the grid separately (see
/// [`ExperimentConfig::filter_mode`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    None,
    ExcludeSameTerminal,
    CommonTerminal,
}

/// Flat key-value configuration mirroring the CLI flags. Any subset of keys
/// may appear in a TOML config file; the rest keep these defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    // Grid geometry and beliefs.
    pub width: usize,
    pub height: usize,
    pub goal_x: usize,
    pub goal_y: usize,
    pub topology: Topology,
    pub progress_prob: f64,

    // Dataset generation.
    pub sizes: Vec<usize>,
    pub scales: Vec<f64>,
    pub filter: FilterKind,
    /// Common-terminal cell; defaults to the goal when absent.
    pub terminal_x: Option<usize>,
    pub terminal_y: Option<usize>,
    pub trajectory_len: usize,

    // SGD settings.
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub init: InitScheme,
    pub gradient_clip: Option<f64>,

    // Run control.
    pub seeds: Vec<u64>,
    pub gamma_high: f64,
    pub jobs: usize,
    pub out: String,

    // Good/bad experiment.
    pub goodbad_epsilon: f64,
    pub goodbad_n: usize,

    // Upweighted-pair experiment.
    pub upweight_weights: Vec<f64>,
    pub upweight_n: usize,

    // Robustness matrix.
    pub matrix_n: usize,
    pub matrix_weight: f64,

    // 1-d corridor demo.
    pub onedgrid_length: usize,
    pub onedgrid_treasure: Option<usize>,
    pub onedgrid_step_cost: f64,
    pub onedgrid_treasure_reward: f64,
    pub onedgrid_start: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            width: 5,
            height: 5,
            goal_x: 4,
            goal_y: 4,
            topology: Topology::Walls,
            progress_prob: 0.9,

            sizes: vec![1250, 2500, 5000, 10_000, 20_000],
            scales: vec![1.0, 2.0, 4.0, 8.0],
            filter: FilterKind::ExcludeSameTerminal,
            terminal_x: None,
            terminal_y: None,
            trajectory_len: 3,

            learning_rate: 0.05,
            batch_size: 64,
            epochs: 100,
            init: InitScheme::Zeros,
            gradient_clip: None,

            seeds: vec![1, 2, 3, 4, 5],
            gamma_high: 0.999,
            jobs: 0,
            out: "out".into(),

            goodbad_epsilon: 0.1,
            goodbad_n: 50_000,

            upweight_weights: vec![0.0, 0.25, 0.5, 0.75, 0.9],
            upweight_n: 100_000,

            matrix_n: 30_000,
            matrix_weight: 0.5,

            onedgrid_length: 7,
            onedgrid_treasure: None,
            onedgrid_step_cost: 1.0,
            onedgrid_treasure_reward: 10.0,
            onedgrid_start: 1,
        }
    }
}

impl ExperimentConfig {
    /// Parses a flat TOML config file.
    pub fn load(path: &Path) -> Result<Self, ExpError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ExpError> {
        let config: Self =
            toml::from_str(text).map_err(|e| ExpError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String, ExpError> {
        toml::to_string_pretty(self).map_err(|e| ExpError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ExpError> {
        if self.seeds.is_empty() {
            return Err(ExpError::Config("seeds list must be nonempty".into()));
        }
        if self.sizes.is_empty() {
            return Err(ExpError::Config("sizes list must be nonempty".into()));
        }
        if self.scales.iter().any(|&c| c < 1.0) {
            return Err(ExpError::Config("value scales must be >= 1".into()));
        }
        if self.trajectory_len == 0 {
            return Err(ExpError::Config("trajectory_len must be positive".into()));
        }
        self.grid_spec()?;
        Ok(())
    }

    /// The grid spec with this config's topology.
    pub fn grid_spec(&self) -> Result<GridSpec, EnvError> {
        GridSpec::new(
            self.width,
            self.height,
            (self.goal_x, self.goal_y),
            self.progress_prob,
            self.topology,
        )
    }

    /// Resolves the common-terminal cell, defaulting to the goal. The goal
    /// stays reachable mid-trajectory there (clipped moves can stall on it),
    /// so its reward entry keeps appearing in the data.
    pub fn common_terminal_state(&self, spec: &GridSpec) -> usize {
        let x = self.terminal_x.unwrap_or(spec.goal.0);
        let y = self.terminal_y.unwrap_or(spec.goal.1);
        spec.state_index(x.min(spec.width - 1), y.min(spec.height - 1))
    }

    /// The filter mode this config describes.
    pub fn filter_mode(&self, spec: &GridSpec) -> FilterMode {
        match self.filter {
            FilterKind::None => FilterMode::None,
            FilterKind::ExcludeSameTerminal => FilterMode::ExcludeSameTerminal,
            FilterKind::CommonTerminal => {
                FilterMode::CommonTerminal(self.common_terminal_state(spec))
            }
        }
    }

    /// Fit settings with the given SGD seed.
    pub fn fit_config(&self, seed: u64) -> FitConfig {
        FitConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed,
            init: self.init,
            gradient_clip: self.gradient_clip,
        }
    }

    pub fn onedgrid_treasure_index(&self) -> usize {
        self.onedgrid_treasure
            .unwrap_or(self.onedgrid_length.saturating_sub(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip_through_toml() {
        let config = ExperimentConfig::default();
        config.validate().unwrap();
        let text = config.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn partial_configs_keep_defaults() {
        let config =
            ExperimentConfig::from_toml_str("sizes = [100]\nseeds = [9]\nscales = [1.0, 8.0]\n")
                .unwrap();
        assert_eq!(config.sizes, vec![100]);
        assert_eq!(config.seeds, vec![9]);
        assert_eq!(config.width, 5);
        assert_eq!(config.epochs, 100);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml_str("no_such_key = 1\n").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(ExperimentConfig::from_toml_str("seeds = []\n").is_err());
        assert!(ExperimentConfig::from_toml_str("scales = [0.5]\n").is_err());
        assert!(ExperimentConfig::from_toml_str("goal_x = 11\n").is_err());
    }

    #[test]
    fn terminal_defaults_to_goal() {
        let config = ExperimentConfig::default();
        let spec = config.grid_spec().unwrap();
        assert_eq!(config.common_terminal_state(&spec), spec.goal_index());

        let custom = ExperimentConfig {
            terminal_x: Some(2),
            terminal_y: Some(2),
            ..ExperimentConfig::default()
        };
        assert_eq!(custom.common_terminal_state(&spec), spec.state_index(2, 2));
    }
}
