//! Cycle-penalty exploration for tabular agents.
//!
//! * [`gridworld`]: sparse-reward MiniGrid-style environments.
//! * [`views`]: egocentric occluded views, their crops and 64-bit keys.
//! * [`agent`]: per-view SARSA learner with cycle penalties and
//!   count-weighted view mixing, plus the ablation baselines.
//! * [`harness`]: seeded experiment runner, transfer protocol, smoothing,
//!   heatmaps, persistence and the command-line front end.

pub mod agent;
pub mod gridworld;
pub mod harness;
pub mod views;
