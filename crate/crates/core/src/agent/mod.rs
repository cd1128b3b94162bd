//! The cycle-penalty learner.
//!
//! Each view keeps its own SARSA table trained on `rho * r_ex + r_intr`,
//! where the intrinsic term is -1 whenever the next observation/action
//! pair already occurred in this episode (in that view). Actions are chosen
//! greedily from a softmax-weighted mixture of the per-view rows, with the
//! weights favouring views whose current observation is rare.

mod checkpoint;
mod learner;
mod tables;

pub use checkpoint::{Checkpoint, CheckpointError, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use learner::{Learner, Transition};
pub use tables::{EpisodicHistory, GlobalCounts, KeyMap, QRow, QTable, ViewCounts};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridworld::{Action, EnvId};
use crate::views::{ObservationKey, ViewError, ViewSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("non-finite value in SARSA update (q={q}, reward={reward}, next={next})")]
    NonFinite { q: f64, reward: f64, next: f64 },
    #[error("invalid hyperparameter: {0}")]
    Hyperparam(String),
    #[error("invalid agent mode: {0}")]
    Mode(String),
    #[error(transparent)]
    Views(#[from] ViewError),
    #[error("learner has no episode in progress")]
    NoEpisode,
}

/// Learning-rate, discount, exploration and reward-weighting settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub eta: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub rho: f64,
    #[serde(default)]
    pub q_init: f64,
}

/// Initial Q-value of the optimistic-initialization baseline.
pub const OPTIMISTIC_Q_INIT: f64 = 2.0;

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            eta: 0.2,
            gamma: 0.99,
            epsilon: 0.1,
            rho: 1.0,
            q_init: 0.0,
        }
    }
}

impl Hyperparams {
    /// Tuned per-environment defaults (epsilon and rho come from the catalog).
    pub fn for_env(id: EnvId) -> Hyperparams {
        let e = id.entry();
        Hyperparams {
            epsilon: e.epsilon,
            rho: e.rho,
            ..Hyperparams::default()
        }
    }

    /// Environment defaults adjusted for the strategy (optimistic runs start at 2).
    pub fn for_env_and_strategy(id: EnvId, strategy: Strategy) -> Hyperparams {
        let mut hp = Hyperparams::for_env(id);
        if strategy == Strategy::OptimisticInit {
            hp.q_init = OPTIMISTIC_Q_INIT;
        }
        hp
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::Hyperparam(m.to_string()));
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad("eta must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 1]");
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return bad("rho must be finite and non-negative");
        }
        if !self.q_init.is_finite() {
            return bad("q_init must be finite");
        }
        Ok(())
    }
}

/// Which intrinsic signal drives exploration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// -1 for every repeated observation/action pair in the episode.
    Cyclophobic,
    /// `+N(o')^{-1/2}` visit-count bonus.
    CountBonus,
    /// No intrinsic reward; tables start at [`OPTIMISTIC_Q_INIT`].
    OptimisticInit,
    /// No intrinsic reward, largest view only.
    EpsilonGreedyOnly,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Cyclophobic => "cyclophobic",
            Strategy::CountBonus => "count-bonus",
            Strategy::OptimisticInit => "optimistic-init",
            Strategy::EpsilonGreedyOnly => "epsilon-greedy-only",
        })
    }
}

impl FromStr for Strategy {
    type Err = AgentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cyclophobic" => Ok(Strategy::Cyclophobic),
            "count-bonus" | "counts" => Ok(Strategy::CountBonus),
            "optimistic-init" | "optimistic" => Ok(Strategy::OptimisticInit),
            "epsilon-greedy-only" | "epsilon-greedy" => Ok(Strategy::EpsilonGreedyOnly),
            other => Err(AgentError::Mode(format!("unknown strategy `{other}`"))),
        }
    }
}

/// Which views of the base hierarchy the learner uses.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViewSelection {
    Full,
    SingleLargest,
    /// One flag per base view.
    Subset(Vec<bool>),
}

/// How the per-view rows are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mixing {
    /// Softmax of `1 - N / max N` per view.
    Weighted,
    /// Plain sum of the rows.
    Unweighted,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentMode {
    pub strategy: Strategy,
    pub views: ViewSelection,
    pub mixing: Mixing,
}

impl AgentMode {
    pub fn cyclophobic() -> AgentMode {
        AgentMode {
            strategy: Strategy::Cyclophobic,
            views: ViewSelection::Full,
            mixing: Mixing::Weighted,
        }
    }

    pub fn with_strategy(strategy: Strategy) -> AgentMode {
        let views = if strategy == Strategy::EpsilonGreedyOnly {
            ViewSelection::SingleLargest
        } else {
            ViewSelection::Full
        };
        AgentMode {
            strategy,
            views,
            mixing: Mixing::Weighted,
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if self.strategy == Strategy::EpsilonGreedyOnly
            && self.views != ViewSelection::SingleLargest
        {
            return Err(AgentError::Mode(
                "epsilon-greedy-only acts on the largest view only".into(),
            ));
        }
        Ok(())
    }

    /// Resolves the selection against the base hierarchy.
    pub fn active_views(&self, base: &ViewSpec) -> Result<ViewSpec, AgentError> {
        self.validate()?;
        let spec = match &self.views {
            ViewSelection::Full => base.clone(),
            ViewSelection::SingleLargest => ViewSpec::new(vec![base.dims()[0]])?,
            ViewSelection::Subset(mask) => {
                if mask.len() != base.len() {
                    return Err(AgentError::Mode(format!(
                        "view mask has {} entries for {} views",
                        mask.len(),
                        base.len()
                    )));
                }
                base.subset(mask)?
            }
        };
        Ok(spec)
    }
}

/// Per-view cycle flags: whether `(key_i, action)` already occurred in view `i`
/// this episode. Does not record the pair.
pub fn detect_cycles(keys: &[ObservationKey], action: Action, hist: &EpisodicHistory) -> Vec<bool> {
    keys.iter()
        .enumerate()
        .map(|(i, k)| hist.contains(i, *k, action))
        .collect()
}

pub fn cycle_penalty(cycled: bool) -> f64 {
    if cycled {
        -1.0
    } else {
        0.0
    }
}

/// `rho * r_ex + r_intr`.
pub fn total_reward(r_ex: f64, r_intr: f64, rho: f64) -> f64 {
    rho * r_ex + r_intr
}

/// Count-based bonus `N^{-1/2}`; zero for unseen observations.
pub fn count_bonus(count: u64) -> f64 {
    if count == 0 {
        0.0
    } else {
        1.0 / (count as f64).sqrt()
    }
}

/// One SARSA backup on `table`. `next` is `None` for terminal transitions.
/// Returns the new value of `Q(o, a)`.
pub fn sarsa_update(
    table: &mut QTable,
    key: ObservationKey,
    action: Action,
    reward: f64,
    next: Option<(ObservationKey, Action)>,
    hp: &Hyperparams,
) -> Result<f64, AgentError> {
    let q = table.get(key, action);
    let next_q = next.map_or(0.0, |(k, a)| table.get(k, a));
    if !(q.is_finite() && reward.is_finite() && next_q.is_finite()) {
        return Err(AgentError::NonFinite {
            q,
            reward,
            next: next_q,
        });
    }
    let updated = (1.0 - hp.eta) * q + hp.eta * (reward + hp.gamma * next_q);
    table.set(key, action, updated);
    Ok(updated)
}

/// View weights for the state whose view keys are `keys`.
///
/// Weighted: softmax over views of `1 - N_i(o_i) / max N_i`, or the zero
/// vector when no view has seen its observation. Unweighted: all ones.
pub fn mixing_weights(keys: &[ObservationKey], counts: &GlobalCounts, mixing: Mixing) -> Vec<f64> {
    match mixing {
        Mixing::Unweighted => vec![1.0; keys.len()],
        Mixing::Weighted => {
            let mut any_seen = false;
            let raw: Vec<f64> = keys
                .iter()
                .enumerate()
                .map(|(i, k)| {
                    let view = counts.view(i);
                    let n = view.get(*k);
                    any_seen |= n > 0;
                    if view.max() == 0 {
                        1.0
                    } else {
                        1.0 - n as f64 / view.max() as f64
                    }
                })
                .collect();
            if !any_seen {
                return vec![0.0; keys.len()];
            }
            softmax(&raw)
        }
    }
}

pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - top).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Mixture `sum_i alpha_i * Q_i(o_i, .)`.
pub fn q_cycle(keys: &[ObservationKey], tables: &[QTable], alpha: &[f64]) -> QRow {
    let mut out = [0.0; Action::COUNT];
    for ((key, table), &w) in keys.iter().zip(tables).zip(alpha) {
        if w == 0.0 {
            continue;
        }
        let row = table.row(*key);
        for (o, q) in out.iter_mut().zip(row) {
            *o += w * q;
        }
    }
    out
}

/// Indices of the maximal entries.
pub fn greedy_actions(q: &QRow) -> Vec<Action> {
    let top = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Action::ALL
        .into_iter()
        .filter(|a| q[a.index()] == top)
        .collect()
}

/// Epsilon-greedy over `q` with uniform tie-breaking.
pub fn select_action<R: Rng + ?Sized>(q: &QRow, epsilon: f64, rng: &mut R) -> Action {
    let explore = rng.gen::<f64>() < epsilon;
    if explore {
        return Action::ALL[rng.gen_range(0..Action::COUNT)];
    }
    let best = greedy_actions(q);
    if best.len() == 1 {
        best[0]
    } else {
        best[rng.gen_range(0..best.len())]
    }
}
