//! Run configuration, read from TOML.
//!
//! Every section and key is optional; missing values take the defaults
//! below. Unknown keys are rejected.
//!
//! ```toml
//! [metric]
//! eval_cutoff = 5.0
//! in_game_cutoff = 10.0
//!
//! [consensus]
//! merge_cutoff = 10.0
//! majority_fraction = 0.5
//! linkage = "complete"        # "single" | "complete" | "average"
//!
//! [selection]
//! k = 5
//! window = "all"              # or a positive count of recent scores
//! min_training_opinions = 10
//!
//! [bootstrap]
//! replicates = 10000
//! alpha = 0.05
//! seed = 1592635399
//!
//! [evaluation]
//! learning_curve_bin_width = 25
//!
//! [contest]
//! n_train_cases = 200
//! n_test_cases = 200
//! train_test_ratio = [1, 2]
//! n_experts = 5
//! n_crowd = 200
//! opinions_per_crowd_user = 98.9
//! master_seed = 2023
//! train_empty_fraction = 0.5
//! test_empty_fraction = 0.2
//!
//! [expert_model]
//! detect_prob_initial = 0.9
//! # ... every AnnotatorModel field
//!
//! [crowd_population]
//! detect_prob_initial = [0.4, 0.7]   # uniform range per user
//! # ... every CrowdPopulation field
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::consensus::ConsensusParams;
use crate::error::{Error, Result};
use crate::metric::SimilarityParams;
use crate::scoring::{SelectionPolicy, Window};
use crate::simulator::{AnnotatorModel, ContestConfig, CrowdPopulation};
use crate::stats::BootstrapConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricConfig {
    pub eval_cutoff: SimilarityParams,
    pub in_game_cutoff: SimilarityParams,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            eval_cutoff: SimilarityParams::evaluation(),
            in_game_cutoff: SimilarityParams::in_game(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionConfig {
    pub k: usize,
    pub window: Window,
    pub min_training_opinions: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        let p = SelectionPolicy::default();
        SelectionConfig {
            k: p.k,
            window: p.window,
            min_training_opinions: p.min_training_opinions,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    pub learning_curve_bin_width: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            learning_curve_bin_width: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub metric: MetricConfig,
    pub consensus: ConsensusParams,
    pub selection: SelectionConfig,
    pub bootstrap: BootstrapConfig,
    pub evaluation: EvaluationConfig,
    pub contest: ContestConfig,
    pub expert_model: AnnotatorModel,
    pub crowd_population: CrowdPopulation,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            metric: MetricConfig::default(),
            consensus: ConsensusParams::default(),
            selection: SelectionConfig::default(),
            bootstrap: BootstrapConfig::default(),
            evaluation: EvaluationConfig::default(),
            contest: ContestConfig::default(),
            expert_model: AnnotatorModel::default(),
            crowd_population: CrowdPopulation::default(),
        }
    }
}

impl RunConfig {
    /// Parses TOML text. `default_seed` replaces the contest master seed
    /// unless the text sets one explicitly.
    pub fn from_toml_str(text: &str, default_seed: Option<u64>) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let explicit_seed = table
            .get("contest")
            .and_then(|c| c.as_table())
            .is_some_and(|c| c.contains_key("master_seed"));
        let mut cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if let (false, Some(seed)) = (explicit_seed, default_seed) {
            cfg.contest.master_seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, default_seed: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, default_seed).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.consensus.validate()?;
        self.selection_policy().validate()?;
        self.bootstrap.validate()?;
        self.contest.validate()?;
        self.expert_model.validate()?;
        if self.evaluation.learning_curve_bin_width == 0 {
            return Err(Error::Config("learning_curve_bin_width must be >= 1".into()));
        }
        for (name, r) in [
            ("detect_prob_initial", self.crowd_population.detect_prob_initial),
            ("detect_prob_asymptote", self.crowd_population.detect_prob_asymptote),
            ("noise_sigma_initial", self.crowd_population.noise_sigma_initial),
            ("noise_sigma_asymptote", self.crowd_population.noise_sigma_asymptote),
            ("learning_rate", self.crowd_population.learning_rate),
            ("false_positive_rate", self.crowd_population.false_positive_rate),
        ] {
            if !(r.0.is_finite() && r.1.is_finite() && r.0 <= r.1 && r.0 >= 0.0) {
                return Err(Error::Config(format!("crowd_population.{name}: bad range [{}, {}]", r.0, r.1)));
            }
        }
        let p = self.crowd_population;
        if p.detect_prob_asymptote.1 > 1.0 || p.detect_prob_initial.1 > 1.0 {
            return Err(Error::Config("crowd detection probabilities must be <= 1".into()));
        }
        if p.learning_rate.0 <= 0.0 {
            return Err(Error::Config("crowd learning_rate must be > 0".into()));
        }
        Ok(())
    }

    pub fn selection_policy(&self) -> SelectionPolicy {
        SelectionPolicy {
            k: self.selection.k,
            window: self.selection.window,
            min_training_opinions: self.selection.min_training_opinions,
            qscore_cutoff: self.metric.in_game_cutoff,
        }
    }
}
