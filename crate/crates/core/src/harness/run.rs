use std::thread;

use log::{debug, info};

use super::{EpisodeRecord, ExperimentConfig, HarnessError, HeatmapGrid, RunMetrics};
use crate::agent::{AgentMode, Checkpoint, Learner, Mixing, Strategy, ViewSelection};
use crate::gridworld::Env;

/// Everything one seed produces.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub seed: u64,
    pub metrics: RunMetrics,
    pub checkpoint: Checkpoint,
    pub heatmap: HeatmapGrid,
}

/// Short file-name friendly name of a mode, e.g. `cyclophobic-hier`.
pub fn mode_label(mode: &AgentMode) -> String {
    let strategy = match mode.strategy {
        Strategy::Cyclophobic => "cyclophobic",
        Strategy::CountBonus => "counts",
        Strategy::OptimisticInit => "optimistic",
        Strategy::EpsilonGreedyOnly => "epsilon-greedy",
    };
    let views = match &mode.views {
        ViewSelection::Full => "hier".to_string(),
        ViewSelection::SingleLargest => "single".to_string(),
        ViewSelection::Subset(mask) => {
            let bits: String = mask.iter().map(|&b| if b { '1' } else { '0' }).collect();
            format!("views{bits}")
        }
    };
    let mut label = format!("{strategy}-{views}");
    if mode.mixing == Mixing::Unweighted {
        label.push_str("-unweighted");
    }
    label
}

fn agent_seed(seed: u64) -> u64 {
    seed ^ 0xC3A5_C85C_97CB_3127
}

/// Trains from scratch on every seed of `cfg`, ignoring any pretraining
/// list. Seeds run on separate threads; results come back in seed order.
pub fn run_training(cfg: &ExperimentConfig) -> Result<Vec<RunOutput>, HarnessError> {
    let mut scratch = cfg.clone();
    scratch.pretrain.clear();
    run_all(&scratch)
}

/// Pretrains on `cfg.pretrain` in order, then transfers to `cfg.env`. With
/// an empty pretraining list this is [`run_training`].
pub fn run_transfer(cfg: &ExperimentConfig) -> Result<Vec<RunOutput>, HarnessError> {
    run_all(cfg)
}

fn run_all(cfg: &ExperimentConfig) -> Result<Vec<RunOutput>, HarnessError> {
    cfg.validate()?;
    thread::scope(|s| {
        let handles: Vec<_> = cfg
            .seeds
            .iter()
            .map(|&seed| s.spawn(move || run_transfer_seed(cfg, seed)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread panicked"))
            .collect()
    })
}

/// Scratch training of one seed.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<RunOutput, HarnessError> {
    let mut scratch = cfg.clone();
    scratch.pretrain.clear();
    run_transfer_seed(&scratch, seed)
}

/// One seed of the full protocol: pretraining phases (if any) with
/// extrinsic tables, seeding of the main tables, then the target phase.
pub fn run_transfer_seed(cfg: &ExperimentConfig, seed: u64) -> Result<RunOutput, HarnessError> {
    cfg.validate()?;
    let label = mode_label(&cfg.mode);
    let target_hp = cfg.hyperparams_for(cfg.env);
    let mut learner = Learner::new(cfg.mode.clone(), target_hp, &cfg.views, agent_seed(seed))?;

    let transfer = !cfg.pretrain.is_empty();
    if transfer {
        learner.enable_extrinsic_tables();
        for (i, &id) in cfg.pretrain.iter().enumerate() {
            info!(
                "seed {seed}: pretraining on {id} for {} steps",
                cfg.pretrain_steps
            );
            learner.set_hyperparams(cfg.hyperparams_for(id))?;
            let mut env = Env::new(cfg.pretrain_spec(i, seed))?;
            let mut discard =
                RunMetrics::new(id.name(), &label, seed, "pretrain", learner.views().clone());
            drive(
                &mut env,
                &mut learner,
                cfg.pretrain_steps,
                &mut discard,
                None,
            )?;
        }
        learner.seed_from_extrinsic()?;
        learner.set_hyperparams(target_hp)?;
    }

    let tag = if transfer { "transfer" } else { "scratch" };
    info!(
        "seed {seed}: {tag} run on {} for {} steps ({label})",
        cfg.env, cfg.total_steps
    );
    let mut env = Env::new(cfg.target_spec(seed))?;
    let mut metrics = RunMetrics::new(cfg.env.name(), &label, seed, tag, learner.views().clone());
    let mut heatmap = HeatmapGrid::new(cfg.env.name(), &label);
    let heat_limit = cfg
        .heatmap_at
        .unwrap_or(cfg.total_steps)
        .min(cfg.total_steps);
    drive(
        &mut env,
        &mut learner,
        cfg.total_steps,
        &mut metrics,
        Some((&mut heatmap, heat_limit)),
    )?;
    debug!("seed {seed}: {} episodes", metrics.records.len());
    Ok(RunOutput {
        seed,
        metrics,
        checkpoint: learner.checkpoint(),
        heatmap,
    })
}

/// Runs `steps` environment steps, resetting as episodes end. An episode
/// cut off by the step budget is not recorded.
fn drive(
    env: &mut Env,
    learner: &mut Learner,
    steps: u64,
    metrics: &mut RunMetrics,
    mut heat: Option<(&mut HeatmapGrid, u64)>,
) -> Result<(), HarnessError> {
    let mut keys = Vec::with_capacity(learner.views().len());
    let mut taken = 0u64;
    let mut episode = 0u64;
    while taken < steps {
        let state = env.reset()?;
        if let Some((map, limit)) = heat.as_mut() {
            if taken < *limit {
                map.record_reset(&state);
            }
        }
        learner.keys(&state, &mut keys);
        let mut action = learner.begin_episode(&keys);
        let mut ret = 0.0;
        let mut length = 0u32;
        loop {
            let outcome = env.step(action)?;
            taken += 1;
            length += 1;
            ret += outcome.extrinsic_reward;
            let state = env.state().expect("episode in progress");
            if let Some((map, limit)) = heat.as_mut() {
                if taken <= *limit {
                    map.record_step(state);
                }
            }
            learner.keys(state, &mut keys);
            let next = learner.observe_step(outcome.extrinsic_reward, &keys, outcome.terminated)?;
            if outcome.done() {
                metrics.push(EpisodeRecord {
                    global_step: taken,
                    episode,
                    episode_return: ret,
                    length,
                    cycles: learner.cumulative_cycles().to_vec(),
                });
                episode += 1;
                break;
            }
            if taken >= steps {
                break;
            }
            action = next.expect("non-terminal step yields an action");
        }
    }
    Ok(())
}
