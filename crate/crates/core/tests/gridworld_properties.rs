use std::collections::BTreeMap;

use cyclophobic::gridworld::{Action, CellKind, Color, Env, EnvId, EnvSpec, EnvState, CATALOG};
use proptest::prelude::*;

fn any_env() -> impl Strategy<Value = EnvId> {
    (0..CATALOG.len()).prop_map(|i| CATALOG[i].id)
}

fn actions(max: usize) -> impl Strategy<Value = Vec<Action>> {
    prop::collection::vec(
        (0..Action::COUNT).prop_map(|i| Action::from_index(i).unwrap()),
        1..max,
    )
}

fn play(state: &mut EnvState, actions: &[Action]) -> Vec<(u64, bool, bool)> {
    let mut log = Vec::new();
    for &a in actions {
        let o = state.step(a).unwrap();
        log.push((o.extrinsic_reward.to_bits(), o.terminated, o.truncated));
        if o.done() {
            break;
        }
    }
    log
}

/// Non-box objects with their target flag, as a multiset.
fn loose_objects(state: &EnvState) -> BTreeMap<[u8; 3], usize> {
    let mut m = BTreeMap::new();
    for obj in state.object_inventory() {
        if !matches!(obj, CellKind::Box { .. }) {
            *m.entry(obj.encode()).or_insert(0) += 1;
        }
    }
    m
}

fn boxes(state: &EnvState) -> usize {
    state
        .object_inventory()
        .iter()
        .filter(|o| matches!(o, CellKind::Box { .. }))
        .count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn replay_is_bit_identical(id in any_env(), seed in any::<u64>(), acts in actions(300)) {
        let spec = EnvSpec::new(id, seed);
        let mut a = Env::new(spec.clone()).unwrap().reset().unwrap();
        let mut b = Env::new(spec).unwrap().reset().unwrap();
        prop_assert_eq!(a.to_canonical_bytes(), b.to_canonical_bytes());
        let la = play(&mut a, &acts);
        let lb = play(&mut b, &acts);
        prop_assert_eq!(la, lb);
        prop_assert_eq!(a.to_canonical_bytes(), b.to_canonical_bytes());
    }

    #[test]
    fn objects_are_conserved_except_opened_boxes(id in any_env(), seed in any::<u64>(), acts in actions(400)) {
        let mut s = Env::new(EnvSpec::new(id, seed)).unwrap().reset().unwrap();
        let loose = loose_objects(&s);
        let mut n_boxes = boxes(&s);
        for a in acts {
            let before = s.clone();
            let o = s.step(a).unwrap();
            let now = boxes(&s);
            prop_assert!(now <= n_boxes);
            if now < n_boxes {
                prop_assert_eq!(a, Action::Toggle);
                let toggled_box = matches!(before.grid.get(before.agent.front()), Some(CellKind::Box { .. }));
                prop_assert!(toggled_box);
            }
            n_boxes = now;
            prop_assert_eq!(&loose_objects(&s), &loose);
            if o.done() {
                break;
            }
        }
    }

    #[test]
    fn color_reduction_leaves_one_color(id in any_env(), seed in any::<u64>(), acts in actions(100)) {
        let spec = EnvSpec::new(id, seed).with_color_reduction(true);
        let mut env = Env::new(spec).unwrap();
        let reduced = env.reset().unwrap();
        let full = Env::new(EnvSpec::new(id, seed)).unwrap().reset().unwrap();
        for (r, f) in reduced.grid.cells().iter().zip(full.grid.cells()) {
            if let Some(c) = r.color() {
                prop_assert_eq!(c, Color::CANONICAL);
                prop_assert_eq!(*r, f.with_color(Color::CANONICAL));
            } else {
                prop_assert_eq!(r, f);
            }
        }
        prop_assert_eq!(reduced.agent, full.agent);
        let mut s = reduced;
        for a in acts {
            let o = s.step(a).unwrap();
            prop_assert!(s.carrying.and_then(|c| c.color()).is_none_or(|c| c == Color::CANONICAL));
            if o.done() {
                break;
            }
        }
    }
}

/// Uniformly random play through many full episodes of every environment.
#[test]
fn budget_and_reward_sparsity() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for entry in CATALOG {
        let mut env = Env::new(EnvSpec::new(entry.id, 5)).unwrap();
        for _ in 0..4 {
            let mut state = env.reset().unwrap();
            let mut total = 0.0;
            let mut nonzero = 0;
            let mut steps = 0;
            loop {
                let a = Action::from_index(rng.gen_range(0..Action::COUNT)).unwrap();
                let o = state.step(a).unwrap();
                steps += 1;
                if o.extrinsic_reward != 0.0 {
                    nonzero += 1;
                    assert!(o.terminated);
                    assert!(o.extrinsic_reward > 0.0 && o.extrinsic_reward <= 1.0);
                }
                total += o.extrinsic_reward;
                assert_eq!(
                    o.truncated,
                    !o.terminated && state.step_count >= state.max_steps
                );
                if o.done() {
                    break;
                }
            }
            assert!(steps <= entry.max_steps);
            assert!(nonzero <= 1);
            assert!(total == 0.0 || (total > 0.0 && total <= 1.0));
            if steps == entry.max_steps && total == 0.0 {
                assert!(state.is_finished());
            }
            assert!(state.step(Action::Forward).is_err());
        }
    }
}

#[test]
fn fresh_states_are_not_terminal() {
    for entry in CATALOG {
        for seed in 0..20 {
            let state = Env::new(EnvSpec::new(entry.id, seed))
                .unwrap()
                .reset()
                .unwrap();
            assert!(!state.goal_reached(), "{} seed {seed}", entry.name);
        }
    }
}
