#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use cyclophobic::agent::{Hyperparams, Learner, Transition};
use cyclophobic::gridworld::{Action, Env, EnvSpec, EnvState, CATALOG};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STATES: usize = 10_000;

/// Random-walk states over the whole catalog, grouped in episodes, each
/// paired with the action taken from it.
pub fn random_episodes() -> Vec<Vec<(EnvState, Action)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut episodes = Vec::new();
    let mut total = 0;
    let mut k = 0u64;
    while total < STATES {
        let entry = CATALOG[k as usize % CATALOG.len()];
        let mut state = Env::new(EnvSpec::new(entry.id, k))
            .unwrap()
            .reset()
            .unwrap();
        k += 1;
        let len = rng.gen_range(1..120);
        let mut episode = Vec::new();
        for _ in 0..len {
            let a = Action::from_index(rng.gen_range(0..Action::COUNT)).unwrap();
            episode.push((state.clone(), a));
            if state.step(a).unwrap().done() {
                break;
            }
        }
        total += episode.len();
        episodes.push(episode);
    }
    episodes
}

/// Drives `learner` on `env` for `steps` steps, returning the trace split
/// into episodes.
pub fn collect_episodes(
    learner: &mut Learner,
    env: &mut Env,
    steps: usize,
) -> Vec<Vec<Transition>> {
    learner.enable_trace();
    let mut episodes = Vec::new();
    let mut keys = Vec::new();
    let mut taken = 0;
    while taken < steps {
        let state = env.reset().unwrap();
        learner.keys(&state, &mut keys);
        let mut a = learner.begin_episode(&keys);
        loop {
            let o = env.step(a).unwrap();
            taken += 1;
            learner.keys(env.state().unwrap(), &mut keys);
            let next = learner
                .observe_step(o.extrinsic_reward, &keys, o.terminated)
                .unwrap();
            if o.done() || taken >= steps {
                break;
            }
            a = next.unwrap();
        }
        episodes.push(learner.take_trace());
    }
    episodes
}

/// Plain-loop replay: recomputes every reward from the extrinsic signal and
/// its own per-episode pair sets, then applies the update rule.
pub fn oracle_tables(
    episodes: &[Vec<Transition>],
    views: usize,
    hp: &Hyperparams,
) -> Vec<HashMap<(u64, usize), f64>> {
    let mut q: Vec<HashMap<(u64, usize), f64>> = vec![HashMap::new(); views];
    for episode in episodes {
        let mut seen: Vec<HashSet<(u64, usize)>> = vec![HashSet::new(); views];
        for (v, set) in seen.iter_mut().enumerate() {
            set.insert((episode[0].keys[v].0, episode[0].action.index()));
        }
        for t in episode {
            for v in 0..views {
                let mut r = hp.rho * t.extrinsic;
                let mut next_q = 0.0;
                if let Some((keys, a)) = &t.next {
                    let pair = (keys[v].0, a.index());
                    if !seen[v].insert(pair) {
                        r -= 1.0;
                    }
                    next_q = *q[v].get(&pair).unwrap_or(&hp.q_init);
                }
                let entry = q[v]
                    .entry((t.keys[v].0, t.action.index()))
                    .or_insert(hp.q_init);
                *entry = (1.0 - hp.eta) * *entry + hp.eta * (r + hp.gamma * next_q);
            }
        }
    }
    q
}
