//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any criterion fails.

mod common;

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::Instant;

use cyclophobic::agent::{
    detect_cycles, mixing_weights, AgentMode, EpisodicHistory, GlobalCounts, Hyperparams, Learner,
    Mixing, Strategy,
};
use cyclophobic::gridworld::{Action, Env, EnvId, EnvSpec};
use cyclophobic::harness::cli::ablation_modes;
use cyclophobic::harness::{
    first_crossing, mode_label, run_training, run_transfer, smooth, ExperimentConfig, RunOutput,
};
use cyclophobic::views::{crop, observe, ObservationKey, ViewSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 3] = [0, 1, 2];
const THRESHOLD: f64 = 0.8;
const WINDOW: u64 = 50_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: &str, title: &str, started: Instant, outcome: &Outcome) {
    println!(
        "{} [{id}] {title} ({:.1}s): {}",
        if outcome.pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64(),
        outcome.detail
    );
}

fn config(env: EnvId, mode: AgentMode, steps: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(env, mode, steps);
    cfg.seeds = SEEDS.to_vec();
    cfg.smoothing_window = WINDOW;
    cfg
}

fn final_smoothed(out: &RunOutput) -> f64 {
    smooth(&out.metrics, WINDOW)
        .unwrap()
        .last()
        .map_or(0.0, |p| p.mean)
}

fn fmt_crossings(c: &[Option<u64>]) -> String {
    c.iter()
        .map(|x| x.map_or("never".to_string(), |s| s.to_string()))
        .collect::<Vec<_>>()
        .join("/")
}

fn exploration_ordering() -> Outcome {
    let steps = 10_000;
    let mut rows = Vec::new();
    for mode in ablation_modes() {
        let mut cfg = config(EnvId::DoorKey16x16, mode.clone(), steps);
        cfg.heatmap_at = Some(steps);
        let outs = run_training(&cfg).unwrap();
        let goal: Vec<u64> = outs.iter().map(|o| o.heatmap.goal_visits).collect();
        let outside: Vec<u64> = outs.iter().map(|o| o.heatmap.outside_start_room).collect();
        let distinct: usize = outs.iter().map(|o| o.heatmap.distinct_cells()).sum();
        rows.push((mode, goal, outside, distinct));
    }
    let find = |s: Strategy, single: bool| {
        rows.iter()
            .find(|(m, ..)| {
                m.strategy == s
                    && (single == (m.views == cyclophobic::agent::ViewSelection::SingleLargest))
            })
            .unwrap()
    };
    let cyc = find(Strategy::Cyclophobic, false);
    let eps = find(Strategy::EpsilonGreedyOnly, true);
    let counts = find(Strategy::CountBonus, false);
    let opt = find(Strategy::OptimisticInit, false);

    let goal_seeds = cyc.1.iter().filter(|&&g| g >= 1).count();
    let eps_confined = eps.2.iter().filter(|&&o| o == 0).count();
    let between = |d: usize| eps.3 < d && d < cyc.3;
    let checks = [
        goal_seeds >= 2,
        eps_confined == SEEDS.len(),
        between(counts.3),
        between(opt.3),
    ];
    let table = rows
        .iter()
        .map(|(m, g, o, d)| format!("{} goal={g:?} outside={o:?} distinct={d}", mode_label(m)))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome {
        pass: checks.iter().all(|&c| c),
        detail: format!(
            "cyclophobic goal seeds {goal_seeds}/3 (need 2), epsilon-greedy confined seeds {eps_confined}/3 (need 3), \
             counts between {}, optimistic between {} | {table}",
            checks[2], checks[3]
        ),
    }
}

/// Returns the outcome and the Unlock scratch runs for reuse.
fn easy_convergence() -> (Outcome, Vec<RunOutput>) {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut unlock = Vec::new();
    for env in [EnvId::Unlock, EnvId::DoorKey8x8] {
        let outs = run_training(&config(env, AgentMode::cyclophobic(), 1_000_000)).unwrap();
        let crossings: Vec<Option<u64>> = outs
            .iter()
            .map(|o| first_crossing(&o.metrics, WINDOW, THRESHOLD))
            .collect();
        pass &= crossings.iter().all(Option::is_some);
        parts.push(format!("{env} crossings {}", fmt_crossings(&crossings)));
        if env == EnvId::Unlock {
            unlock = outs;
        }
    }
    (
        Outcome {
            pass,
            detail: parts.join("; "),
        },
        unlock,
    )
}

fn color_reduction() -> Outcome {
    let mut cfg = config(EnvId::KeyCorridorS3R3, AgentMode::cyclophobic(), 2_000_000);
    cfg.color_reduction = true;
    let reduced = run_training(&cfg).unwrap();
    cfg.color_reduction = false;
    let full = run_training(&cfg).unwrap();
    let crossings: Vec<Option<u64>> = reduced
        .iter()
        .map(|o| first_crossing(&o.metrics, WINDOW, THRESHOLD))
        .collect();
    let mean =
        |outs: &[RunOutput]| outs.iter().map(final_smoothed).sum::<f64>() / outs.len() as f64;
    let (r, f) = (mean(&reduced), mean(&full));
    Outcome {
        pass: crossings.iter().all(Option::is_some) && f < r,
        detail: format!(
            "reduced crossings {}, final smoothed return reduced {r:.3} vs full colors {f:.3}",
            fmt_crossings(&crossings)
        ),
    }
}

fn transfer(scratch: &[RunOutput]) -> Outcome {
    let mut cfg = config(EnvId::Unlock, AgentMode::cyclophobic(), 1_000_000);
    cfg.pretrain = vec![EnvId::DoorKey8x8];
    cfg.pretrain_steps = 200_000;
    let transferred = run_transfer(&cfg).unwrap();
    let mut ratios = Vec::new();
    let mut parts = Vec::new();
    for (t, s) in transferred.iter().zip(scratch) {
        let tc = first_crossing(&t.metrics, WINDOW, THRESHOLD);
        let sc = first_crossing(&s.metrics, WINDOW, THRESHOLD);
        let ratio = match (tc, sc) {
            (Some(t), Some(s)) => t as f64 / s as f64,
            _ => f64::INFINITY,
        };
        parts.push(format!(
            "seed {} transfer {} scratch {} ratio {ratio:.3}",
            t.seed,
            fmt_crossings(&[tc]),
            fmt_crossings(&[sc])
        ));
        ratios.push(ratio);
    }
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    Outcome {
        pass: ratios.iter().all(|&r| r <= 2.0),
        detail: format!(
            "{}; median ratio {median:.3} ({} the 1x reference, reported only)",
            parts.join("; "),
            if median <= 1.0 { "within" } else { "above" }
        ),
    }
}

fn sarsa_oracle() -> Result<(), String> {
    for (id, seed) in [(EnvId::Unlock, 0), (EnvId::DoorKey8x8, 1)] {
        let hp = Hyperparams {
            epsilon: 0.3,
            ..Hyperparams::for_env(id)
        };
        let mut learner =
            Learner::new(AgentMode::cyclophobic(), hp, &ViewSpec::default(), seed).unwrap();
        let mut env = Env::new(EnvSpec::new(id, seed).with_max_steps(60)).unwrap();
        let episodes = common::collect_episodes(&mut learner, &mut env, 1000);
        let oracle = common::oracle_tables(&episodes, 5, &hp);
        let mut worst = 0.0f64;
        for (v, table) in learner.tables().iter().enumerate() {
            for (key, row) in table.sorted_rows() {
                for a in Action::ALL {
                    let expect = *oracle[v].get(&(key.0, a.index())).unwrap_or(&hp.q_init);
                    worst = worst.max((row[a.index()] - expect).abs());
                }
            }
        }
        if worst > 1e-12 {
            return Err(format!("SARSA oracle deviation {worst:e} on {id}"));
        }
        // penalty accounting: a pair seen l+1 times costs exactly -l
        for episode in &episodes {
            for v in 0..5 {
                let mut seen = HashSet::new();
                seen.insert((episode[0].keys[v], episode[0].action));
                let (mut repeats, mut penalty) = (0.0, 0.0);
                for t in episode {
                    if let Some((keys, a)) = &t.next {
                        if !seen.insert((keys[v], *a)) {
                            repeats += 1.0;
                        }
                        penalty += t.rewards[v] - hp.rho * t.extrinsic;
                    }
                }
                if penalty != -repeats {
                    return Err(format!("penalty {penalty} for {repeats} repeats"));
                }
            }
        }
    }
    Ok(())
}

fn alpha_invariant() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2000 {
        let mut counts = GlobalCounts::new(5);
        for _ in 0..rng.gen_range(1..50) {
            let keys: Vec<_> = (0..5)
                .map(|_| ObservationKey(rng.gen_range(0..8)))
                .collect();
            counts.record(&keys);
        }
        let probe: Vec<_> = (0..5)
            .map(|_| ObservationKey(rng.gen_range(0..8)))
            .collect();
        let w = mixing_weights(&probe, &counts, Mixing::Weighted);
        let known = probe
            .iter()
            .enumerate()
            .any(|(i, k)| counts.view(i).get(*k) > 0);
        let sum: f64 = w.iter().sum();
        if known && ((sum - 1.0).abs() > 1e-9 || w.iter().any(|&x| x < 0.0)) {
            return Err(format!("alpha {w:?} sums to {sum}"));
        }
    }
    Ok(())
}

fn nesting() -> Result<(), String> {
    let spec = ViewSpec::default();
    let mut states = 0;
    let mut keys = Vec::new();
    for episode in common::random_episodes() {
        let mut hist = EpisodicHistory::new(spec.len());
        for (state, action) in &episode {
            states += 1;
            let stack = observe(state, &spec);
            for w in stack.views.windows(2) {
                if crop(&w[0].0, w[1].0.dims()).unwrap() != w[1].0 {
                    return Err("views do not nest".into());
                }
            }
            spec.keys(state, &mut keys);
            let flags = detect_cycles(&keys, *action, &hist);
            if flags.windows(2).any(|f| f[0] && !f[1]) {
                return Err(format!("cycle flags not monotone: {flags:?}"));
            }
            hist.record(&keys, *action);
        }
    }
    if states < common::STATES {
        return Err(format!("only {states} states"));
    }
    Ok(())
}

fn persistence_and_determinism() -> Result<(), String> {
    let mut cfg = config(EnvId::DoorKey8x8, AgentMode::cyclophobic(), 30_000);
    cfg.pretrain = vec![EnvId::Unlock];
    cfg.pretrain_steps = 10_000;
    let a = run_transfer(&cfg).unwrap();
    let b = run_transfer(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (x, y) in a.iter().zip(&b) {
        if x.metrics.to_csv() != y.metrics.to_csv()
            || x.checkpoint.to_bytes() != y.checkpoint.to_bytes()
            || x.heatmap.to_csv() != y.heatmap.to_csv()
        {
            return Err(format!("seed {} differs between runs", x.seed));
        }
        let path = dir.path().join("run.ckpt");
        std::fs::write(&path, x.checkpoint.to_bytes()).unwrap();
        let loaded = cyclophobic::agent::Checkpoint::from_bytes(&std::fs::read(&path).unwrap())
            .map_err(|e| e.to_string())?;
        if loaded.to_bytes() != x.checkpoint.to_bytes() {
            return Err("checkpoint reload is not byte-identical".into());
        }
    }
    Ok(())
}

type Check = fn() -> Result<(), String>;

fn properties() -> Outcome {
    let checks: [(&str, Check); 4] = [
        ("SARSA oracle and penalty accounting", sarsa_oracle),
        ("alpha distribution", alpha_invariant),
        ("view nesting on 10000 states", nesting),
        (
            "checkpoint identity and run determinism",
            persistence_and_determinism,
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, check) in checks {
        match check() {
            Ok(()) => parts.push(format!("{name} ok")),
            Err(e) => {
                pass = false;
                parts.push(format!("{name} FAILED: {e}"));
            }
        }
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn main() -> ExitCode {
    let mut all = true;

    let t = Instant::now();
    let mut c1 = exploration_ordering();
    if t.elapsed().as_secs_f64() >= 60.0 {
        c1.pass = false;
        c1.detail.push_str(" | over the 60 s budget");
    }
    report(
        "1",
        "DoorKey-16x16 exploration ordering at 10k steps",
        t,
        &c1,
    );
    all &= c1.pass;

    let t = Instant::now();
    let (c2, unlock_scratch) = easy_convergence();
    report(
        "2",
        "Unlock and DoorKey-8x8 reach smoothed return 0.8 within 1M steps",
        t,
        &c2,
    );
    all &= c2.pass;

    let t = Instant::now();
    let c3 = color_reduction();
    report(
        "3",
        "KeyCorridorS3R3 color reduction ordering within 2M steps",
        t,
        &c3,
    );
    all &= c3.pass;

    let t = Instant::now();
    let c4 = transfer(&unlock_scratch);
    report(
        "4",
        "DoorKey-8x8 to Unlock transfer within 2x scratch steps",
        t,
        &c4,
    );
    all &= c4.pass;

    let t = Instant::now();
    let c5 = properties();
    report("5", "property suites", t, &c5);
    all &= c5.pass;

    let c6 = Outcome {
        pass: true,
        detail: "head-to-head curves against C-BET, NovelD, RIDE, RND and IMPALA and all MiniHack results need \
                 external baselines and the NetHack engine; out of scope, see README"
            .into(),
    };
    report("6", "excluded boundary documented", Instant::now(), &c6);

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
