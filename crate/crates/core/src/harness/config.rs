use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::agent::{AgentMode, Hyperparams};
use crate::gridworld::{EnvId, EnvSpec};
use crate::views::ViewSpec;

pub const CONFIG_VERSION: u32 = 1;
pub const DEFAULT_SEEDS: [u64; 3] = [0, 1, 2];
pub const DEFAULT_SMOOTHING_WINDOW: u64 = 50_000;

/// One experiment: a target environment, optionally preceded by a
/// pretraining sequence, run once per seed.
///
/// JSON form (fields other than `version`, `env` and `total_steps` are optional):
///
/// ```json
/// {
///   "version": 1,
///   "env": "DoorKey-8x8",
///   "pretrain": ["MultiRoom-N4-S5", "KeyCorridorS3R3"],
///   "pretrain_steps": 200000,
///   "mode": {"strategy": "cyclophobic", "views": "full", "mixing": "weighted"},
///   "hyperparams": {"eta": 0.2, "gamma": 0.99, "epsilon": 0.1, "rho": 1.0, "q_init": 0.0},
///   "total_steps": 1000000,
///   "seeds": [0, 1, 2],
///   "smoothing_window": 50000,
///   "heatmap_at": 10000,
///   "color_reduction": false,
///   "max_steps": 640,
///   "views": ["9x9", "7x7", "5x5", "3x3", "2x1"],
///   "out_dir": "runs/doorkey"
/// }
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub env: EnvId,
    #[serde(default)]
    pub pretrain: Vec<EnvId>,
    /// Steps spent in each pretraining environment.
    #[serde(default)]
    pub pretrain_steps: u64,
    #[serde(default = "AgentMode::cyclophobic")]
    pub mode: AgentMode,
    /// Overrides the per-environment defaults for every phase.
    #[serde(default)]
    pub hyperparams: Option<Hyperparams>,
    pub total_steps: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_window")]
    pub smoothing_window: u64,
    /// Stop accumulating the heatmap after this many target steps.
    #[serde(default)]
    pub heatmap_at: Option<u64>,
    #[serde(default)]
    pub color_reduction: bool,
    /// Episode budget override for the target environment.
    #[serde(default)]
    pub max_steps: Option<u32>,
    #[serde(default)]
    pub views: ViewSpec,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn default_seeds() -> Vec<u64> {
    DEFAULT_SEEDS.to_vec()
}

fn default_window() -> u64 {
    DEFAULT_SMOOTHING_WINDOW
}

impl ExperimentConfig {
    pub fn new(env: EnvId, mode: AgentMode, total_steps: u64) -> ExperimentConfig {
        ExperimentConfig {
            version: CONFIG_VERSION,
            env,
            pretrain: Vec::new(),
            pretrain_steps: 0,
            mode,
            hyperparams: None,
            total_steps,
            seeds: default_seeds(),
            smoothing_window: DEFAULT_SMOOTHING_WINDOW,
            heatmap_at: None,
            color_reduction: false,
            max_steps: None,
            views: ViewSpec::default(),
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported config version {}", self.version));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return bad("seeds must be distinct".into());
        }
        if self.smoothing_window == 0 {
            return bad("smoothing_window must be positive".into());
        }
        if self.max_steps == Some(0) {
            return bad("max_steps must be positive".into());
        }
        if !self.pretrain.is_empty() && self.pretrain_steps == 0 {
            return bad("pretrain_steps must be positive when pretraining".into());
        }
        self.mode.validate()?;
        self.mode.active_views(&self.views)?;
        if let Some(hp) = &self.hyperparams {
            hp.validate()?;
        }
        Ok(())
    }

    /// Hyperparameters for a phase run on `env`.
    pub fn hyperparams_for(&self, env: EnvId) -> Hyperparams {
        self.hyperparams
            .unwrap_or_else(|| Hyperparams::for_env_and_strategy(env, self.mode.strategy))
    }

    pub fn target_spec(&self, seed: u64) -> EnvSpec {
        let spec = EnvSpec::new(self.env, seed).with_color_reduction(self.color_reduction);
        match self.max_steps {
            Some(m) => spec.with_max_steps(m),
            None => spec,
        }
    }

    /// Pretraining phase `i`; each phase draws layouts from its own stream.
    pub fn pretrain_spec(&self, i: usize, seed: u64) -> EnvSpec {
        let phase_seed = seed.wrapping_add((i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        EnvSpec::new(self.pretrain[i], phase_seed).with_color_reduction(self.color_reduction)
    }

    pub fn from_json(text: &str) -> Result<ExperimentConfig, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        ExperimentConfig::from_json(&text).map_err(|e| HarnessError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{Strategy, ViewSelection};

    #[test]
    fn minimal_json_fills_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"version":1,"env":"Unlock","total_steps":100}"#)
            .unwrap();
        assert_eq!(cfg.seeds, vec![0, 1, 2]);
        assert_eq!(cfg.smoothing_window, 50_000);
        assert_eq!(cfg.mode, AgentMode::cyclophobic());
        assert_eq!(cfg.views.len(), 5);
        cfg.validate().unwrap();
    }

    #[test]
    fn json_round_trip() {
        let mut cfg = ExperimentConfig::new(
            EnvId::DoorKey8x8,
            AgentMode::with_strategy(Strategy::CountBonus),
            10,
        );
        cfg.pretrain = vec![EnvId::MultiRoomN4S5];
        cfg.pretrain_steps = 5;
        cfg.heatmap_at = Some(3);
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn rejects_invalid_combinations() {
        let mut cfg = ExperimentConfig::new(EnvId::Unlock, AgentMode::cyclophobic(), 10);
        cfg.seeds.clear();
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::new(EnvId::Unlock, AgentMode::cyclophobic(), 10);
        cfg.mode = AgentMode {
            strategy: Strategy::EpsilonGreedyOnly,
            ..AgentMode::cyclophobic()
        };
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::new(EnvId::Unlock, AgentMode::cyclophobic(), 10);
        cfg.mode.views = ViewSelection::Subset(vec![true]);
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::new(EnvId::Unlock, AgentMode::cyclophobic(), 10);
        cfg.version = 2;
        assert!(cfg.validate().is_err());

        assert!(ExperimentConfig::from_json(
            r#"{"version":1,"env":"Unlock","total_steps":1,"bogus":0}"#
        )
        .is_err());
    }

    #[test]
    fn per_env_hyperparams_unless_overridden() {
        let mut cfg = ExperimentConfig::new(
            EnvId::Unlock,
            AgentMode::with_strategy(Strategy::OptimisticInit),
            10,
        );
        assert_eq!(cfg.hyperparams_for(EnvId::BlockedUnlockPickup).rho, 5.0);
        assert_eq!(cfg.hyperparams_for(EnvId::Unlock).q_init, 2.0);
        cfg.hyperparams = Some(Hyperparams::default());
        assert_eq!(cfg.hyperparams_for(EnvId::BlockedUnlockPickup).rho, 1.0);
    }
}
