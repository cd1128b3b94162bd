use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layouts;
use super::{Action, Color, EnvError, EnvState, StepOutcome};

/// Environment identifiers, addressed by their MiniGrid-style string names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnvId {
    Unlock,
    DoorKey8x8,
    DoorKey16x16,
    KeyCorridorS3R3,
    KeyCorridorS4R3,
    KeyCorridorS5R3,
    KeyCorridorS6R3,
    UnlockPickup,
    BlockedUnlockPickup,
    ObstructedMaze1Dlh,
    ObstructedMaze2Dlh,
    ObstructedMaze2Dlhb,
    MultiRoomN4S5,
    MultiRoomN6,
    MultiRoomN12S10,
}

/// Static facts about one catalog entry.
#[derive(Clone, Copy, Debug)]
pub struct CatalogEntry {
    pub id: EnvId,
    pub name: &'static str,
    pub max_steps: u32,
    /// Default random-action probability for this environment.
    pub epsilon: f64,
    /// Default extrinsic-reward weight for this environment.
    pub rho: f64,
}

const fn entry(
    id: EnvId,
    name: &'static str,
    max_steps: u32,
    epsilon: f64,
    rho: f64,
) -> CatalogEntry {
    CatalogEntry {
        id,
        name,
        max_steps,
        epsilon,
        rho,
    }
}

/// Step budgets: published budgets where stated, otherwise the MiniGrid
/// defaults (`10 * size^2` for DoorKey, `30 * S^2` for KeyCorridor,
/// `20 * rooms` for MultiRoom).
pub const CATALOG: [CatalogEntry; 15] = [
    entry(EnvId::Unlock, "Unlock", 288, 0.1, 1.0),
    entry(EnvId::DoorKey8x8, "DoorKey-8x8", 640, 0.1, 1.0),
    entry(EnvId::DoorKey16x16, "DoorKey-16x16", 2560, 0.1, 1.0),
    entry(EnvId::KeyCorridorS3R3, "KeyCorridorS3R3", 270, 0.1, 1.0),
    entry(EnvId::KeyCorridorS4R3, "KeyCorridorS4R3", 480, 0.1, 1.0),
    entry(EnvId::KeyCorridorS5R3, "KeyCorridorS5R3", 750, 0.1, 1.0),
    entry(EnvId::KeyCorridorS6R3, "KeyCorridorS6R3", 1080, 0.1, 1.0),
    entry(EnvId::UnlockPickup, "UnlockPickup", 288, 0.3, 2.0),
    entry(
        EnvId::BlockedUnlockPickup,
        "BlockedUnlockPickup",
        576,
        0.3,
        5.0,
    ),
    entry(
        EnvId::ObstructedMaze1Dlh,
        "ObstructedMaze-1Dlh",
        288,
        0.3,
        2.0,
    ),
    entry(
        EnvId::ObstructedMaze2Dlh,
        "ObstructedMaze-2Dlh",
        576,
        0.1,
        5.0,
    ),
    entry(
        EnvId::ObstructedMaze2Dlhb,
        "ObstructedMaze-2Dlhb",
        576,
        0.3,
        5.0,
    ),
    entry(EnvId::MultiRoomN4S5, "MultiRoom-N4-S5", 80, 0.1, 2.0),
    entry(EnvId::MultiRoomN6, "MultiRoom-N6", 120, 0.1, 2.0),
    entry(EnvId::MultiRoomN12S10, "MultiRoom-N12-S10", 120, 0.1, 2.0),
];

impl EnvId {
    pub fn entry(self) -> &'static CatalogEntry {
        CATALOG
            .iter()
            .find(|e| e.id == self)
            .expect("every id has a catalog entry")
    }

    pub fn name(self) -> &'static str {
        self.entry().name
    }

    pub fn default_max_steps(self) -> u32 {
        self.entry().max_steps
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvId {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        let bare = trimmed
            .strip_prefix("MiniGrid-")
            .map(|r| r.trim_end_matches("-v0"))
            .unwrap_or(trimmed);
        CATALOG
            .iter()
            .find(|e| e.name == bare)
            .map(|e| e.id)
            .ok_or_else(|| EnvError::UnknownEnv(s.to_string()))
    }
}

impl Serialize for EnvId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for EnvId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

/// Everything needed to instantiate an environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub id: EnvId,
    pub max_steps: u32,
    #[serde(default)]
    pub color_reduction: bool,
    pub seed: u64,
}

impl EnvSpec {
    pub fn new(id: EnvId, seed: u64) -> EnvSpec {
        EnvSpec {
            id,
            max_steps: id.default_max_steps(),
            color_reduction: false,
            seed,
        }
    }

    pub fn with_color_reduction(mut self, on: bool) -> EnvSpec {
        self.color_reduction = on;
        self
    }

    pub fn with_max_steps(mut self, max_steps: u32) -> EnvSpec {
        self.max_steps = max_steps;
        self
    }
}

/// Initial state of the first episode for `spec`.
pub fn make_env(spec: &EnvSpec) -> Result<EnvState, EnvError> {
    Env::new(spec.clone())?.reset()
}

/// An environment instance: owns the layout generator stream and the
/// current episode. Each reset draws a fresh layout from the stream.
#[derive(Clone, Debug)]
pub struct Env {
    spec: EnvSpec,
    rng: ChaCha8Rng,
    state: Option<EnvState>,
}

impl Env {
    pub fn new(spec: EnvSpec) -> Result<Env, EnvError> {
        if spec.max_steps == 0 {
            return Err(EnvError::TopologyTooLarge(
                "max_steps must be positive".into(),
            ));
        }
        let rng = ChaCha8Rng::seed_from_u64(spec.seed);
        Ok(Env {
            spec,
            rng,
            state: None,
        })
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    /// Generates the next episode layout and returns a copy of its state.
    pub fn reset(&mut self) -> Result<EnvState, EnvError> {
        let mut state = layouts::generate(self.spec.id, self.spec.max_steps, &mut self.rng)?;
        if self.spec.color_reduction {
            reduce_colors(&mut state);
        }
        self.state = Some(state.clone());
        Ok(state)
    }

    pub fn state(&self) -> Option<&EnvState> {
        self.state.as_ref()
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome, EnvError> {
        self.state
            .as_mut()
            .ok_or(EnvError::EpisodeFinished)?
            .step(action)
    }
}

fn reduce_colors(state: &mut EnvState) {
    let positions: Vec<_> = state.grid.positions().collect();
    for pos in positions {
        let cell = state.grid.get(pos).expect("position in grid");
        if cell.color().is_some() {
            state.grid.set(pos, cell.with_color(Color::CANONICAL));
        }
    }
    state.carrying = state.carrying.map(|c| c.with_color(Color::CANONICAL));
}
