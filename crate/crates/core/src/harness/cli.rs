//! Command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use super::{
    aggregate, mode_label, run_training, run_transfer, smooth, write_atomic, ExperimentConfig,
    RunArtifacts, RunMetrics, RunOutput,
};
use crate::agent::{AgentMode, Checkpoint, Mixing, Strategy, ViewSelection};
use crate::gridworld::EnvId;
use crate::views::{ViewDims, ViewSpec};

#[derive(Parser, Debug)]
#[command(
    name = "cyclophobic",
    version,
    about = "Cycle-penalty exploration on sparse-reward gridworlds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train one mode from scratch on every seed.
    Train(RunArgs),
    /// Pretrain on a sequence of environments, then transfer to the target.
    Transfer {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated pretraining environments, run in order.
        #[arg(long, value_delimiter = ',')]
        pretrain: Vec<EnvId>,
        /// Steps per pretraining environment.
        #[arg(long)]
        pretrain_steps: Option<u64>,
    },
    /// Run the five exploration modes on one environment and write heatmaps.
    Ablate(RunArgs),
    /// Train one mode and write only its visitation heatmaps.
    Heatmap(RunArgs),
    /// Smooth metric CSV files; with several inputs also write the
    /// cross-run mean and standard error.
    Smooth {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value_t = super::DEFAULT_SMOOTHING_WINDOW)]
        window: u64,
        /// Spacing of the cross-run grid in steps (defaults to a tenth of the window).
        #[arg(long)]
        grid_step: Option<u64>,
        #[arg(long, default_value = "smoothed")]
        out: PathBuf,
    },
    /// Print a summary of a checkpoint file.
    InspectCheckpoint { path: PathBuf },
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub env: Option<EnvId>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    pub seed: Vec<u64>,
    /// Environment steps per seed.
    #[arg(long)]
    pub steps: Option<u64>,
    /// cyclophobic, counts, optimistic or epsilon-greedy.
    #[arg(long)]
    pub mode: Option<Strategy>,
    /// View subset: any of largest, intermediate, smallest, or explicit
    /// dimensions such as 9x9,2x1.
    #[arg(long, value_delimiter = ',')]
    pub views: Vec<String>,
    #[arg(long, value_parser = parse_mixing)]
    pub mixing: Option<Mixing>,
    #[arg(long)]
    pub color_reduction: bool,
    /// Episode step budget override.
    #[arg(long)]
    pub max_steps: Option<u32>,
    /// Stop accumulating heatmaps after this many steps.
    #[arg(long)]
    pub heatmap_at: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_mixing(s: &str) -> Result<Mixing, String> {
    match s {
        "weighted" => Ok(Mixing::Weighted),
        "unweighted" => Ok(Mixing::Unweighted),
        other => Err(format!("unknown mixing `{other}` (weighted or unweighted)")),
    }
}

/// Maps `--views` names onto a mask over `base`: `largest` is the first
/// view, `smallest` the last, `intermediate` everything in between.
pub fn parse_view_selection(names: &[String], base: &ViewSpec) -> Result<ViewSelection> {
    let n = base.len();
    let mut mask = vec![false; n];
    for name in names {
        match name.trim() {
            "largest" => mask[0] = true,
            "smallest" => mask[n - 1] = true,
            "intermediate" => mask.iter_mut().take(n - 1).skip(1).for_each(|m| *m = true),
            "all" | "full" => mask.iter_mut().for_each(|m| *m = true),
            dims => {
                let d: ViewDims = dims
                    .parse()
                    .with_context(|| format!("unknown view `{dims}`"))?;
                let i = base
                    .dims()
                    .iter()
                    .position(|b| *b == d)
                    .with_context(|| format!("view {d} is not part of {base}"))?;
                mask[i] = true;
            }
        }
    }
    if !mask.iter().any(|&m| m) {
        bail!("view selection is empty");
    }
    Ok(if mask.iter().all(|&m| m) {
        ViewSelection::Full
    } else if mask == [&[true][..], &vec![false; n - 1]].concat() {
        ViewSelection::SingleLargest
    } else {
        ViewSelection::Subset(mask)
    })
}

impl RunArgs {
    /// Builds and validates the experiment before anything runs.
    pub fn to_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => {
                let env = self.env.context("--env or --config is required")?;
                let steps = self.steps.context("--steps or --config is required")?;
                ExperimentConfig::new(env, AgentMode::cyclophobic(), steps)
            }
        };
        if let Some(env) = self.env {
            cfg.env = env;
        }
        if let Some(steps) = self.steps {
            cfg.total_steps = steps;
        }
        if !self.seed.is_empty() {
            cfg.seeds = self.seed.clone();
        }
        if let Some(strategy) = self.mode {
            cfg.mode.strategy = strategy;
            if strategy == Strategy::EpsilonGreedyOnly && self.views.is_empty() {
                cfg.mode.views = ViewSelection::SingleLargest;
            }
        }
        if !self.views.is_empty() {
            cfg.mode.views = parse_view_selection(&self.views, &cfg.views)?;
        }
        if let Some(mixing) = self.mixing {
            cfg.mode.mixing = mixing;
        }
        if self.color_reduction {
            cfg.color_reduction = true;
        }
        if self.max_steps.is_some() {
            cfg.max_steps = self.max_steps;
        }
        if self.heatmap_at.is_some() {
            cfg.heatmap_at = self.heatmap_at;
        }
        if self.out.is_some() {
            cfg.out_dir = self.out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// The five exploration modes compared on one environment.
pub fn ablation_modes() -> [AgentMode; 5] {
    let single = |strategy| AgentMode {
        strategy,
        views: ViewSelection::SingleLargest,
        mixing: Mixing::Weighted,
    };
    [
        single(Strategy::EpsilonGreedyOnly),
        AgentMode::with_strategy(Strategy::CountBonus),
        AgentMode::with_strategy(Strategy::OptimisticInit),
        single(Strategy::Cyclophobic),
        AgentMode::cyclophobic(),
    ]
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("runs"))
}

fn write_runs(dir: &Path, outputs: &[RunOutput], heatmaps_only: bool) -> Result<()> {
    for out in outputs {
        let paths = RunArtifacts::for_run(dir, out);
        if heatmaps_only {
            write_atomic(&paths.heatmap_csv, &out.heatmap.to_csv())?;
            write_atomic(&paths.heatmap_ppm, &out.heatmap.to_ppm())?;
        } else {
            paths.write(out)?;
        }
    }
    Ok(())
}

fn summarize(cfg: &ExperimentConfig, outputs: &[RunOutput]) {
    for out in outputs {
        let m = &out.metrics;
        let last = m.records.last().map(|r| r.global_step).unwrap_or(0);
        let smoothed = super::window_stats(m, last, cfg.smoothing_window);
        println!(
            "{} {} {} seed {}: {} episodes, final smoothed return {}",
            m.env,
            m.mode,
            m.tag,
            out.seed,
            m.records.len(),
            smoothed.map_or("n/a".to_string(), |s| format!("{:.3}", s.mean)),
        );
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            let cfg = args.to_config()?;
            let outputs = run_training(&cfg)?;
            write_runs(&out_dir(&cfg), &outputs, false)?;
            summarize(&cfg, &outputs);
        }
        Command::Transfer {
            run,
            pretrain,
            pretrain_steps,
        } => {
            let mut cfg = run.to_config()?;
            if !pretrain.is_empty() {
                cfg.pretrain = pretrain;
            }
            if let Some(steps) = pretrain_steps {
                cfg.pretrain_steps = steps;
            }
            if cfg.pretrain.is_empty() {
                bail!("transfer needs --pretrain or a config with a pretrain list");
            }
            cfg.validate()?;
            let outputs = run_transfer(&cfg)?;
            write_runs(&out_dir(&cfg), &outputs, false)?;
            summarize(&cfg, &outputs);
        }
        Command::Ablate(args) => {
            if args.mode.is_some() || !args.views.is_empty() || args.mixing.is_some() {
                bail!("ablate runs a fixed set of modes; --mode, --views and --mixing are not accepted");
            }
            let base = args.to_config()?;
            let mut configs = Vec::new();
            for mode in ablation_modes() {
                let mut cfg = base.clone();
                cfg.mode = mode;
                cfg.heatmap_at.get_or_insert(cfg.total_steps);
                cfg.validate()?;
                configs.push(cfg);
            }
            println!("mode,seed,goal_visits,outside_start_room,distinct_cells");
            for cfg in &configs {
                let outputs = run_training(cfg)?;
                write_runs(&out_dir(cfg), &outputs, false)?;
                for out in &outputs {
                    let h = &out.heatmap;
                    println!(
                        "{},{},{},{},{}",
                        mode_label(&cfg.mode),
                        out.seed,
                        h.goal_visits,
                        h.outside_start_room,
                        h.distinct_cells()
                    );
                }
            }
        }
        Command::Heatmap(args) => {
            let cfg = args.to_config()?;
            let outputs = run_training(&cfg)?;
            write_runs(&out_dir(&cfg), &outputs, true)?;
            for out in &outputs {
                println!(
                    "seed {}: {} distinct cells, {} goal visits",
                    out.seed,
                    out.heatmap.distinct_cells(),
                    out.heatmap.goal_visits
                );
            }
        }
        Command::Smooth {
            inputs,
            window,
            grid_step,
            out,
        } => {
            if window == 0 {
                bail!("--window must be positive");
            }
            let mut runs = Vec::new();
            for path in &inputs {
                let data =
                    std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
                let (views, records) = RunMetrics::records_from_csv(&data)
                    .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
                let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
                let mut m = RunMetrics::new(name, "", 0, "", views);
                m.records = records;
                let points = smooth(&m, window).with_context(|| path.display().to_string())?;
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["step", "mean", "std", "episodes"])?;
                for p in points {
                    w.serialize((p.step, p.mean, p.std, p.episodes))?;
                }
                write_atomic(&out.join(format!("{name}.smoothed.csv")), &w.into_inner()?)?;
                runs.push(m);
            }
            if runs.len() > 1 {
                let step = grid_step.unwrap_or((window / 10).max(1));
                let end = runs
                    .iter()
                    .filter_map(|m| m.records.last().map(|r| r.global_step))
                    .max()
                    .unwrap_or(0);
                let grid: Vec<u64> = (1..=end / step).map(|i| i * step).collect();
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["step", "mean", "sem", "seeds"])?;
                for p in aggregate(&runs, window, &grid) {
                    w.serialize((p.step, p.mean, p.sem, p.seeds))?;
                }
                write_atomic(&out.join("aggregate.csv"), &w.into_inner()?)?;
            }
            println!("wrote smoothed curves to {}", out.display());
        }
        Command::InspectCheckpoint { path } => {
            let bytes =
                std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
            let cp = Checkpoint::from_bytes(&bytes).with_context(|| path.display().to_string())?;
            println!("views: {}", cp.views);
            println!("q_init: {}", cp.q_init);
            println!("extrinsic tables: {}", cp.extrinsic.is_some());
            for (i, d) in cp.views.dims().iter().enumerate() {
                println!(
                    "  {d}: {} Q rows, {} counted observations, max count {}",
                    cp.tables[i].len(),
                    cp.counts.view(i).len(),
                    cp.counts.view(i).max()
                );
            }
        }
    }
    Ok(())
}

/// Parses `std::env::args`, runs, and maps errors to a nonzero exit code.
pub fn main_entry() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
