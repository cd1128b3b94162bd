use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::views::ViewSpec;

/// Fixed leading columns of the metrics CSV. One `cycles_<view>` column
/// per active view follows, e.g. `cycles_9x9`, holding the cumulative
/// number of cycles detected in that view at the end of the episode.
pub const METRICS_CSV_HEADER_PREFIX: [&str; 4] = ["global_step", "episode", "return", "length"];

/// One finished episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    /// Environment steps taken in the phase when the episode ended.
    pub global_step: u64,
    pub episode: u64,
    #[serde(rename = "return")]
    pub episode_return: f64,
    pub length: u32,
    pub cycles: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub env: String,
    pub mode: String,
    pub seed: u64,
    /// `scratch` or `transfer`.
    pub tag: String,
    pub views: ViewSpec,
    pub records: Vec<EpisodeRecord>,
}

impl RunMetrics {
    pub fn new(env: &str, mode: &str, seed: u64, tag: &str, views: ViewSpec) -> RunMetrics {
        RunMetrics {
            env: env.to_string(),
            mode: mode.to_string(),
            seed,
            tag: tag.to_string(),
            views,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: EpisodeRecord) {
        debug_assert!(self
            .records
            .last()
            .is_none_or(|r| r.global_step < record.global_step));
        self.records.push(record);
    }

    pub fn header(&self) -> Vec<String> {
        METRICS_CSV_HEADER_PREFIX
            .iter()
            .map(|s| s.to_string())
            .chain(self.views.dims().iter().map(|d| format!("cycles_{d}")))
            .collect()
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header()).expect("in-memory write");
        for r in &self.records {
            let mut row = vec![
                r.global_step.to_string(),
                r.episode.to_string(),
                r.episode_return.to_string(),
                r.length.to_string(),
            ];
            row.extend(r.cycles.iter().map(u64::to_string));
            w.write_record(&row).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    /// Parses the records of a CSV written by [`RunMetrics::to_csv`]; the
    /// view list is recovered from the header. Run metadata is only kept
    /// in the JSON form.
    pub fn records_from_csv(data: &[u8]) -> Result<(ViewSpec, Vec<EpisodeRecord>), String> {
        let mut r = csv::Reader::from_reader(data);
        let header = r.headers().map_err(|e| e.to_string())?.clone();
        let fixed = METRICS_CSV_HEADER_PREFIX.len();
        if header.len() <= fixed || header.iter().take(fixed).ne(METRICS_CSV_HEADER_PREFIX) {
            return Err("unexpected metrics header".into());
        }
        let dims = header
            .iter()
            .skip(fixed)
            .map(|h| {
                h.strip_prefix("cycles_")
                    .ok_or_else(|| format!("bad column `{h}`"))?
                    .parse()
                    .map_err(|e| format!("{e}"))
            })
            .collect::<Result<Vec<_>, String>>()?;
        let views = ViewSpec::new(dims).map_err(|e| e.to_string())?;
        let mut records = Vec::new();
        for row in r.records() {
            let row = row.map_err(|e| e.to_string())?;
            let field = |i: usize| row.get(i).ok_or_else(|| "short row".to_string());
            let num_err = |e: &dyn std::fmt::Display| e.to_string();
            records.push(EpisodeRecord {
                global_step: field(0)?.parse().map_err(|e| num_err(&e))?,
                episode: field(1)?.parse().map_err(|e| num_err(&e))?,
                episode_return: field(2)?.parse().map_err(|e| num_err(&e))?,
                length: field(3)?.parse().map_err(|e| num_err(&e))?,
                cycles: (fixed..row.len())
                    .map(|i| field(i)?.parse().map_err(|e| num_err(&e)))
                    .collect::<Result<_, _>>()?,
            });
        }
        Ok((views, records))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    pub fn from_json(text: &str) -> Result<RunMetrics, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn returns(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.episode_return)
    }
}
