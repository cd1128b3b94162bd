//! Trailing-window statistics over episode returns indexed by the step at
//! which each episode finished.

use serde::{Deserialize, Serialize};

use super::{HarnessError, RunMetrics};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub episodes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothedPoint {
    pub step: u64,
    pub mean: f64,
    pub std: f64,
    pub episodes: usize,
}

/// Cross-seed point: mean of the per-seed window means and its standard
/// error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregatePoint {
    pub step: u64,
    pub mean: f64,
    pub sem: f64,
    pub seeds: usize,
}

/// Statistics of the episodes finishing in `(end - window, end]`.
pub fn window_stats(metrics: &RunMetrics, end: u64, window: u64) -> Option<WindowStats> {
    let start = end.saturating_sub(window);
    let recs = &metrics.records;
    let lo = recs.partition_point(|r| r.global_step <= start);
    let hi = recs.partition_point(|r| r.global_step <= end);
    if lo >= hi {
        return None;
    }
    let slice = &recs[lo..hi];
    let n = slice.len() as f64;
    let mean = slice.iter().map(|r| r.episode_return).sum::<f64>() / n;
    let var = slice
        .iter()
        .map(|r| (r.episode_return - mean).powi(2))
        .sum::<f64>()
        / n;
    Some(WindowStats {
        mean,
        std: var.sqrt(),
        episodes: slice.len(),
    })
}

/// One point per finished episode, each over the trailing `window` steps.
pub fn smooth(metrics: &RunMetrics, window: u64) -> Result<Vec<SmoothedPoint>, HarnessError> {
    if window == 0 {
        return Err(HarnessError::Config("window must be positive".into()));
    }
    if metrics.records.is_empty() {
        return Err(HarnessError::EmptyMetrics);
    }
    Ok(metrics
        .records
        .iter()
        .map(|r| {
            let s =
                window_stats(metrics, r.global_step, window).expect("window holds its own episode");
            SmoothedPoint {
                step: r.global_step,
                mean: s.mean,
                std: s.std,
                episodes: s.episodes,
            }
        })
        .collect())
}

/// Mean-of-means across runs at each step of `grid`, skipping steps where
/// some run has no episode in the window.
pub fn aggregate(runs: &[RunMetrics], window: u64, grid: &[u64]) -> Vec<AggregatePoint> {
    grid.iter()
        .filter_map(|&step| {
            let means: Vec<f64> = runs
                .iter()
                .map(|m| window_stats(m, step, window).map(|s| s.mean))
                .collect::<Option<_>>()?;
            if means.is_empty() {
                return None;
            }
            let k = means.len() as f64;
            let mean = means.iter().sum::<f64>() / k;
            let sem = if means.len() > 1 {
                let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0);
                (var / k).sqrt()
            } else {
                0.0
            };
            Some(AggregatePoint {
                step,
                mean,
                sem,
                seeds: means.len(),
            })
        })
        .collect()
}

/// First episode-completion step `t >= window` whose trailing-window mean
/// reaches `threshold`.
pub fn first_crossing(metrics: &RunMetrics, window: u64, threshold: f64) -> Option<u64> {
    metrics
        .records
        .iter()
        .filter(|r| r.global_step >= window)
        .find(|r| window_stats(metrics, r.global_step, window).is_some_and(|s| s.mean >= threshold))
        .map(|r| r.global_step)
}
