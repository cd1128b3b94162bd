//! Hash-keyed tabular state: per-view Q rows, lifetime visit counts and the
//! per-episode multiset of observation/action pairs.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

use crate::gridworld::Action;
use crate::views::ObservationKey;

/// Observation keys are already uniformly mixed digests, so the map hasher
/// passes them through.
#[derive(Default, Clone, Copy)]
pub struct KeyHasher(u64);

impl Hasher for KeyHasher {
    #[inline]
    fn finish(&self) -> u64 {
        self.0
    }

    #[inline]
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 << 8) ^ u64::from(b) ^ (self.0 >> 56);
        }
    }

    #[inline]
    fn write_u64(&mut self, i: u64) {
        self.0 = i;
    }
}

pub type KeyMap<V> = HashMap<ObservationKey, V, BuildHasherDefault<KeyHasher>>;

pub type QRow = [f64; Action::COUNT];

/// Q-values of one view. Missing entries read as `q_init`.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    q_init: f64,
    rows: KeyMap<QRow>,
}

impl QTable {
    pub fn new(q_init: f64) -> QTable {
        QTable {
            q_init,
            rows: KeyMap::default(),
        }
    }

    pub fn q_init(&self) -> f64 {
        self.q_init
    }

    pub fn get(&self, key: ObservationKey, action: Action) -> f64 {
        self.rows
            .get(&key)
            .map_or(self.q_init, |row| row[action.index()])
    }

    pub fn row(&self, key: ObservationKey) -> QRow {
        self.rows
            .get(&key)
            .copied()
            .unwrap_or([self.q_init; Action::COUNT])
    }

    pub fn set(&mut self, key: ObservationKey, action: Action, value: f64) {
        let q_init = self.q_init;
        self.rows.entry(key).or_insert([q_init; Action::COUNT])[action.index()] = value;
    }

    pub(crate) fn insert_row(&mut self, key: ObservationKey, row: QRow) {
        self.rows.insert(key, row);
    }

    /// Number of observations with a stored row.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows sorted by key.
    pub fn sorted_rows(&self) -> Vec<(ObservationKey, QRow)> {
        let mut rows: Vec<_> = self.rows.iter().map(|(k, r)| (*k, *r)).collect();
        rows.sort_unstable_by_key(|(k, _)| *k);
        rows
    }

    pub fn scale(&mut self, factor: f64) {
        for row in self.rows.values_mut() {
            row.iter_mut().for_each(|v| *v *= factor);
        }
    }
}

/// Lifetime visit counts of one view with their running maximum.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ViewCounts {
    counts: KeyMap<u64>,
    max: u64,
}

impl ViewCounts {
    pub fn increment(&mut self, key: ObservationKey) -> u64 {
        let n = self.counts.entry(key).or_insert(0);
        *n += 1;
        self.max = self.max.max(*n);
        *n
    }

    pub fn get(&self, key: ObservationKey) -> u64 {
        self.counts.get(&key).copied().unwrap_or(0)
    }

    pub fn max(&self) -> u64 {
        self.max
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn sorted(&self) -> Vec<(ObservationKey, u64)> {
        let mut v: Vec<_> = self.counts.iter().map(|(k, n)| (*k, *n)).collect();
        v.sort_unstable_by_key(|(k, _)| *k);
        v
    }

    pub(crate) fn from_entries(
        entries: impl IntoIterator<Item = (ObservationKey, u64)>,
    ) -> ViewCounts {
        let counts: KeyMap<u64> = entries.into_iter().collect();
        let max = counts.values().copied().max().unwrap_or(0);
        ViewCounts { counts, max }
    }
}

/// Per-view visit counts over the whole of training.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalCounts {
    views: Vec<ViewCounts>,
}

impl GlobalCounts {
    pub fn new(num_views: usize) -> GlobalCounts {
        GlobalCounts {
            views: vec![ViewCounts::default(); num_views],
        }
    }

    pub(crate) fn from_views(views: Vec<ViewCounts>) -> GlobalCounts {
        GlobalCounts { views }
    }

    /// Counts one visit of each view's observation.
    pub fn record(&mut self, keys: &[ObservationKey]) {
        debug_assert_eq!(keys.len(), self.views.len());
        for (view, key) in self.views.iter_mut().zip(keys) {
            view.increment(*key);
        }
    }

    pub fn view(&self, i: usize) -> &ViewCounts {
        &self.views[i]
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }
}

/// Per-view multiset of `(observation, action)` pairs seen this episode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpisodicHistory {
    views: Vec<KeyMap<[u32; Action::COUNT]>>,
}

impl EpisodicHistory {
    pub fn new(num_views: usize) -> EpisodicHistory {
        EpisodicHistory {
            views: vec![KeyMap::default(); num_views],
        }
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    /// Occurrences of the pair in view `i`.
    pub fn occurrences(&self, i: usize, key: ObservationKey, action: Action) -> u32 {
        self.views[i].get(&key).map_or(0, |row| row[action.index()])
    }

    pub fn contains(&self, i: usize, key: ObservationKey, action: Action) -> bool {
        self.occurrences(i, key, action) > 0
    }

    pub fn record(&mut self, keys: &[ObservationKey], action: Action) {
        debug_assert_eq!(keys.len(), self.views.len());
        for (view, key) in self.views.iter_mut().zip(keys) {
            view.entry(*key).or_insert([0; Action::COUNT])[action.index()] += 1;
        }
    }

    pub fn clear(&mut self) {
        self.views.iter_mut().for_each(KeyMap::clear);
    }

    pub fn is_empty(&self) -> bool {
        self.views.iter().all(KeyMap::is_empty)
    }
}
