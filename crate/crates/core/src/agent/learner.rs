use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    count_bonus, cycle_penalty, mixing_weights, q_cycle, sarsa_update, select_action, total_reward,
    AgentError, AgentMode, Checkpoint, EpisodicHistory, GlobalCounts, Hyperparams, QTable,
    Strategy,
};
use crate::gridworld::{Action, EnvState};
use crate::views::{ObservationKey, ViewSpec};

/// One applied update, kept when tracing is enabled.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub keys: Vec<ObservationKey>,
    pub action: Action,
    /// Per-view reward fed into the update.
    pub rewards: Vec<f64>,
    pub extrinsic: f64,
    /// `None` for terminal transitions.
    pub next: Option<(Vec<ObservationKey>, Action)>,
}

/// Tabular multi-view SARSA learner.
///
/// Drive it with [`Learner::begin_episode`] on the reset observation and
/// [`Learner::observe_step`] after every environment step.
#[derive(Clone, Debug)]
pub struct Learner {
    mode: AgentMode,
    hp: Hyperparams,
    views: ViewSpec,
    tables: Vec<QTable>,
    extrinsic: Option<Vec<QTable>>,
    counts: GlobalCounts,
    history: EpisodicHistory,
    rng: ChaCha8Rng,
    current: Option<(Vec<ObservationKey>, Action)>,
    cycles: Vec<u64>,
    trace: Option<Vec<Transition>>,
    rewards: Vec<f64>,
}

impl Learner {
    /// `base` is the full hierarchy; the mode picks the active views from it.
    pub fn new(
        mode: AgentMode,
        hp: Hyperparams,
        base: &ViewSpec,
        seed: u64,
    ) -> Result<Learner, AgentError> {
        hp.validate()?;
        let views = mode.active_views(base)?;
        let n = views.len();
        Ok(Learner {
            tables: vec![QTable::new(hp.q_init); n],
            extrinsic: None,
            counts: GlobalCounts::new(n),
            history: EpisodicHistory::new(n),
            rng: ChaCha8Rng::seed_from_u64(seed),
            current: None,
            cycles: vec![0; n],
            trace: None,
            rewards: Vec::with_capacity(n),
            mode,
            hp,
            views,
        })
    }

    pub fn mode(&self) -> &AgentMode {
        &self.mode
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hp
    }

    /// Replaces the exploration and reward-weight settings, e.g. when a
    /// pretraining sequence moves to the next environment.
    pub fn set_hyperparams(&mut self, hp: Hyperparams) -> Result<(), AgentError> {
        hp.validate()?;
        self.hp = hp;
        Ok(())
    }

    /// Active views.
    pub fn views(&self) -> &ViewSpec {
        &self.views
    }

    pub fn tables(&self) -> &[QTable] {
        &self.tables
    }

    pub fn extrinsic_tables(&self) -> Option<&[QTable]> {
        self.extrinsic.as_deref()
    }

    pub fn counts(&self) -> &GlobalCounts {
        &self.counts
    }

    pub fn history(&self) -> &EpisodicHistory {
        &self.history
    }

    /// Cycles detected so far in each view, over all episodes.
    pub fn cumulative_cycles(&self) -> &[u64] {
        &self.cycles
    }

    /// Starts keeping a parallel per-view table trained on `rho * r_ex` alone.
    pub fn enable_extrinsic_tables(&mut self) {
        if self.extrinsic.is_none() {
            self.extrinsic = Some(vec![QTable::new(self.hp.q_init); self.views.len()]);
        }
    }

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn take_trace(&mut self) -> Vec<Transition> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Observation keys of `state` in the active views.
    pub fn keys(&self, state: &EnvState, out: &mut Vec<ObservationKey>) {
        self.views.keys(state, out);
    }

    /// Clears the episodic history, counts the initial observation and
    /// returns the first action.
    pub fn begin_episode(&mut self, keys: &[ObservationKey]) -> Action {
        self.check_keys(keys);
        self.history.clear();
        self.counts.record(keys);
        let action = self.act(keys);
        self.history.record(keys, action);
        self.current = Some((keys.to_vec(), action));
        action
    }

    /// Greedy action under the mixed Q-function, with epsilon exploration.
    pub fn act(&mut self, keys: &[ObservationKey]) -> Action {
        let alpha = mixing_weights(keys, &self.counts, self.mode.mixing);
        let q = q_cycle(keys, &self.tables, &alpha);
        select_action(&q, self.hp.epsilon, &mut self.rng)
    }

    /// Learns from the step just taken and returns the next action, or
    /// `None` when the episode terminated. Truncation is not termination:
    /// the caller starts a new episode after receiving the action.
    pub fn observe_step(
        &mut self,
        r_ex: f64,
        next_keys: &[ObservationKey],
        terminated: bool,
    ) -> Result<Option<Action>, AgentError> {
        self.check_keys(next_keys);
        let (keys, action) = self.current.take().ok_or(AgentError::NoEpisode)?;
        self.counts.record(next_keys);

        let next_action = if terminated {
            None
        } else {
            let a = self.act(next_keys);
            Some(a)
        };

        self.rewards.clear();
        for (i, key) in next_keys.iter().enumerate() {
            let cycled = next_action.is_some_and(|a| self.history.contains(i, *key, a));
            if cycled {
                self.cycles[i] += 1;
            }
            let intrinsic = match self.mode.strategy {
                Strategy::Cyclophobic => cycle_penalty(cycled),
                Strategy::CountBonus => count_bonus(self.counts.view(i).get(*key)),
                Strategy::OptimisticInit | Strategy::EpsilonGreedyOnly => 0.0,
            };
            self.rewards
                .push(total_reward(r_ex, intrinsic, self.hp.rho));
        }
        if let Some(a) = next_action {
            self.history.record(next_keys, a);
        }

        for (i, table) in self.tables.iter_mut().enumerate() {
            let next = next_action.map(|a| (next_keys[i], a));
            sarsa_update(table, keys[i], action, self.rewards[i], next, &self.hp)?;
        }
        if let Some(ext) = self.extrinsic.as_mut() {
            let r = total_reward(r_ex, 0.0, self.hp.rho);
            for (i, table) in ext.iter_mut().enumerate() {
                let next = next_action.map(|a| (next_keys[i], a));
                sarsa_update(table, keys[i], action, r, next, &self.hp)?;
            }
        }

        if let Some(trace) = self.trace.as_mut() {
            trace.push(Transition {
                keys: keys.clone(),
                action,
                rewards: self.rewards.clone(),
                extrinsic: r_ex,
                next: next_action.map(|a| (next_keys.to_vec(), a)),
            });
        }
        if let Some(a) = next_action {
            self.current = Some((next_keys.to_vec(), a));
        }
        Ok(next_action)
    }

    /// Starts the target phase of a transfer run: the main tables become
    /// copies of the extrinsic tables, and counts, history and cycle totals
    /// start over. Fails if extrinsic tables were never enabled.
    pub fn seed_from_extrinsic(&mut self) -> Result<(), AgentError> {
        let ext = self
            .extrinsic
            .take()
            .ok_or_else(|| AgentError::Mode("no extrinsic tables to transfer".into()))?;
        let n = self.views.len();
        self.tables = ext;
        self.counts = GlobalCounts::new(n);
        self.history = EpisodicHistory::new(n);
        self.cycles = vec![0; n];
        self.current = None;
        Ok(())
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            views: self.views.clone(),
            q_init: self.hp.q_init,
            tables: self.tables.clone(),
            counts: self.counts.clone(),
            extrinsic: self.extrinsic.clone(),
        }
    }

    /// Rebuilds a learner from saved tables. The checkpoint's views must
    /// equal the active views of `mode` over `base`.
    pub fn from_checkpoint(
        cp: Checkpoint,
        mode: AgentMode,
        hp: Hyperparams,
        base: &ViewSpec,
        seed: u64,
    ) -> Result<Learner, AgentError> {
        let mut learner = Learner::new(mode, hp, base, seed)?;
        if cp.views != learner.views {
            return Err(AgentError::Mode(format!(
                "checkpoint views {} differ from active views {}",
                cp.views, learner.views
            )));
        }
        learner.tables = cp.tables;
        learner.counts = cp.counts;
        learner.extrinsic = cp.extrinsic;
        Ok(learner)
    }

    fn check_keys(&self, keys: &[ObservationKey]) {
        assert_eq!(keys.len(), self.views.len(), "one key per active view");
    }
}
