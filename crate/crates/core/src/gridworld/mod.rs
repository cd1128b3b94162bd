//! Deterministic MiniGrid-style gridworlds with sparse extrinsic reward.
//!
//! The environment family mirrors the MiniGrid conventions: a fixed
//! 7-action set, doors that need a matching key, boxes that hide objects
//! and a terminal reward of `1 - 0.9 * step_count / max_steps` on success.
//! Layouts are generated procedurally from a seeded ChaCha stream so a
//! `(spec, seed)` pair always yields the same episodes.

mod builder;
mod catalog;
mod layouts;

pub use catalog::{make_env, Env, EnvId, EnvSpec, CATALOG};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while building or stepping an environment.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnvError {
    #[error("unknown environment id `{0}`")]
    UnknownEnv(String),
    #[error("grid too small for requested topology: {0}")]
    TopologyTooLarge(String),
    #[error("episode already finished; reset before stepping")]
    EpisodeFinished,
}

/// Object and door colors. `color_reduction` collapses them to [`Color::CANONICAL`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    Red,
    Green,
    Blue,
    Purple,
    Yellow,
    Grey,
}

impl Color {
    pub const ALL: [Color; 6] = [
        Color::Red,
        Color::Green,
        Color::Blue,
        Color::Purple,
        Color::Yellow,
        Color::Grey,
    ];

    /// The single color every object gets under color reduction.
    pub const CANONICAL: Color = Color::Grey;

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(idx: u8) -> Option<Color> {
        Color::ALL.get(idx as usize).copied()
    }
}

/// Heading of the agent. Discriminants follow MiniGrid (0 = east, clockwise).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    East = 0,
    South = 1,
    West = 2,
    North = 3,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::East,
        Direction::South,
        Direction::West,
        Direction::North,
    ];

    pub fn from_index(idx: u8) -> Direction {
        Direction::ALL[(idx % 4) as usize]
    }

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn turn_left(self) -> Direction {
        Direction::from_index(self.index() + 3)
    }

    pub fn turn_right(self) -> Direction {
        Direction::from_index(self.index() + 1)
    }

    /// Unit step `(dx, dy)` with y growing downwards.
    pub fn vector(self) -> (i32, i32) {
        match self {
            Direction::East => (1, 0),
            Direction::South => (0, 1),
            Direction::West => (-1, 0),
            Direction::North => (0, -1),
        }
    }

    /// Unit step towards the agent's right hand.
    pub fn right_vector(self) -> (i32, i32) {
        let (dx, dy) = self.vector();
        (-dy, dx)
    }
}

/// The fixed action set. The discriminant is the Q-table column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    TurnLeft = 0,
    TurnRight = 1,
    Forward = 2,
    Pickup = 3,
    Drop = 4,
    Toggle = 5,
    Done = 6,
}

impl Action {
    pub const COUNT: usize = 7;
    pub const ALL: [Action; Action::COUNT] = [
        Action::TurnLeft,
        Action::TurnRight,
        Action::Forward,
        Action::Pickup,
        Action::Drop,
        Action::Toggle,
        Action::Done,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(idx: usize) -> Option<Action> {
        Action::ALL.get(idx).copied()
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Action::TurnLeft => "left",
            Action::TurnRight => "right",
            Action::Forward => "forward",
            Action::Pickup => "pickup",
            Action::Drop => "drop",
            Action::Toggle => "toggle",
            Action::Done => "done",
        };
        f.write_str(name)
    }
}

/// Door state. A locked door is closed by construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DoorState {
    Open,
    Closed,
    Locked,
}

/// Something that can sit inside a box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoxItem {
    Key(Color),
    Ball(Color),
}

impl BoxItem {
    fn into_cell(self) -> CellKind {
        match self {
            BoxItem::Key(color) => CellKind::Key { color },
            BoxItem::Ball(color) => CellKind::Ball {
                color,
                target: false,
            },
        }
    }
}

/// Contents of one grid cell.
///
/// `target` marks the object the mission refers to. It is part of the true
/// state but never part of an observation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    Floor,
    Wall,
    Door {
        color: Color,
        state: DoorState,
    },
    Key {
        color: Color,
    },
    Ball {
        color: Color,
        target: bool,
    },
    Box {
        color: Color,
        contents: Option<BoxItem>,
        target: bool,
    },
    Goal,
}

/// Byte codes of the canonical cell encoding (kind byte).
pub mod kind_code {
    pub const OCCLUDED: u8 = 0;
    pub const FLOOR: u8 = 1;
    pub const WALL: u8 = 2;
    pub const DOOR: u8 = 4;
    pub const KEY: u8 = 5;
    pub const BALL: u8 = 6;
    pub const BOX: u8 = 7;
    pub const GOAL: u8 = 8;
}

const TARGET_FLAG: u8 = 0x80;

impl CellKind {
    pub fn is_open_door(self) -> bool {
        matches!(
            self,
            CellKind::Door {
                state: DoorState::Open,
                ..
            }
        )
    }

    /// Whether the agent may stand on this cell.
    pub fn can_overlap(self) -> bool {
        matches!(self, CellKind::Floor | CellKind::Goal) || self.is_open_door()
    }

    pub fn can_pickup(self) -> bool {
        matches!(
            self,
            CellKind::Key { .. } | CellKind::Ball { .. } | CellKind::Box { .. }
        )
    }

    /// Walls and closed doors block line of sight.
    pub fn see_behind(self) -> bool {
        match self {
            CellKind::Wall => false,
            CellKind::Door { state, .. } => state == DoorState::Open,
            _ => true,
        }
    }

    pub fn color(self) -> Option<Color> {
        match self {
            CellKind::Door { color, .. }
            | CellKind::Key { color }
            | CellKind::Ball { color, .. }
            | CellKind::Box { color, .. } => Some(color),
            _ => None,
        }
    }

    /// `(kind, color, state)` triple of the canonical state layout.
    ///
    /// Door state: 0 open, 1 closed, 2 locked. Ball/box state: bit 7 marks
    /// the mission target; the low nibble of a box holds its contents
    /// (0 empty, 1 + c for a key of color c, 7 + c for a ball of color c).
    pub fn encode(self) -> [u8; 3] {
        match self {
            CellKind::Floor => [kind_code::FLOOR, 0, 0],
            CellKind::Wall => [kind_code::WALL, 0, 0],
            CellKind::Goal => [kind_code::GOAL, 0, 0],
            CellKind::Door { color, state } => {
                let s = match state {
                    DoorState::Open => 0,
                    DoorState::Closed => 1,
                    DoorState::Locked => 2,
                };
                [kind_code::DOOR, color.index(), s]
            }
            CellKind::Key { color } => [kind_code::KEY, color.index(), 0],
            CellKind::Ball { color, target } => [
                kind_code::BALL,
                color.index(),
                if target { TARGET_FLAG } else { 0 },
            ],
            CellKind::Box {
                color,
                contents,
                target,
            } => {
                let inner = match contents {
                    None => 0,
                    Some(BoxItem::Key(c)) => 1 + c.index(),
                    Some(BoxItem::Ball(c)) => 7 + c.index(),
                };
                let flag = if target { TARGET_FLAG } else { 0 };
                [kind_code::BOX, color.index(), inner | flag]
            }
        }
    }

    /// Encoding as seen by the agent: hidden box contents and mission
    /// markers are dropped.
    pub fn encode_observed(self) -> [u8; 3] {
        let mut bytes = self.encode();
        if matches!(self, CellKind::Ball { .. } | CellKind::Box { .. }) {
            bytes[2] = 0;
        }
        bytes
    }

    pub fn decode(bytes: [u8; 3]) -> Option<CellKind> {
        let [kind, color, state] = bytes;
        let color_of = || Color::from_index(color);
        let cell = match kind {
            kind_code::FLOOR => CellKind::Floor,
            kind_code::WALL => CellKind::Wall,
            kind_code::GOAL => CellKind::Goal,
            kind_code::DOOR => CellKind::Door {
                color: color_of()?,
                state: match state {
                    0 => DoorState::Open,
                    1 => DoorState::Closed,
                    2 => DoorState::Locked,
                    _ => return None,
                },
            },
            kind_code::KEY => CellKind::Key { color: color_of()? },
            kind_code::BALL => CellKind::Ball {
                color: color_of()?,
                target: state & TARGET_FLAG != 0,
            },
            kind_code::BOX => {
                let inner = state & !TARGET_FLAG;
                let contents = match inner {
                    0 => None,
                    1..=6 => Some(BoxItem::Key(Color::from_index(inner - 1)?)),
                    7..=12 => Some(BoxItem::Ball(Color::from_index(inner - 7)?)),
                    _ => return None,
                };
                CellKind::Box {
                    color: color_of()?,
                    contents,
                    target: state & TARGET_FLAG != 0,
                }
            }
            _ => return None,
        };
        Some(cell)
    }

    pub fn with_color(self, new: Color) -> CellKind {
        let recolor_item = |item: BoxItem| match item {
            BoxItem::Key(_) => BoxItem::Key(new),
            BoxItem::Ball(_) => BoxItem::Ball(new),
        };
        match self {
            CellKind::Door { state, .. } => CellKind::Door { color: new, state },
            CellKind::Key { .. } => CellKind::Key { color: new },
            CellKind::Ball { target, .. } => CellKind::Ball { color: new, target },
            CellKind::Box {
                contents, target, ..
            } => CellKind::Box {
                color: new,
                contents: contents.map(recolor_item),
                target,
            },
            other => other,
        }
    }
}

/// Grid coordinate; `x` is the column, `y` the row (row 0 at the top).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Pos {
        Pos { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Pos {
        Pos::new(self.x + dx, self.y + dy)
    }
}

/// Row-major grid of cells.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    width: i32,
    height: i32,
    cells: Vec<CellKind>,
}

impl Grid {
    pub fn new(width: i32, height: i32) -> Grid {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        Grid {
            width,
            height,
            cells: vec![CellKind::Floor; (width * height) as usize],
        }
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    pub fn contains(&self, pos: Pos) -> bool {
        pos.x >= 0 && pos.y >= 0 && pos.x < self.width && pos.y < self.height
    }

    /// Cell at `pos`; `None` outside the grid.
    pub fn get(&self, pos: Pos) -> Option<CellKind> {
        self.contains(pos)
            .then(|| self.cells[(pos.y * self.width + pos.x) as usize])
    }

    pub fn set(&mut self, pos: Pos, cell: CellKind) {
        assert!(self.contains(pos), "position {pos:?} outside grid");
        let idx = (pos.y * self.width + pos.x) as usize;
        self.cells[idx] = cell;
    }

    pub fn cells(&self) -> &[CellKind] {
        &self.cells
    }

    pub fn positions(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| Pos::new(x, y)))
    }

    pub fn horizontal_wall(&mut self, x: i32, y: i32, len: i32) {
        for i in 0..len {
            self.set(Pos::new(x + i, y), CellKind::Wall);
        }
    }

    pub fn vertical_wall(&mut self, x: i32, y: i32, len: i32) {
        for j in 0..len {
            self.set(Pos::new(x, y + j), CellKind::Wall);
        }
    }

    pub fn wall_rect(&mut self, x: i32, y: i32, w: i32, h: i32) {
        self.horizontal_wall(x, y, w);
        self.horizontal_wall(x, y + h - 1, w);
        self.vertical_wall(x, y, h);
        self.vertical_wall(x + w - 1, y, h);
    }

    /// Canonical row-major layout: three bytes per cell, see [`CellKind::encode`].
    pub fn to_bytes(&self) -> Vec<u8> {
        self.cells.iter().flat_map(|c| c.encode()).collect()
    }
}

/// Agent position and heading.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentPose {
    pub pos: Pos,
    pub dir: Direction,
}

impl AgentPose {
    pub fn front(&self) -> Pos {
        let (dx, dy) = self.dir.vector();
        self.pos.offset(dx, dy)
    }
}

/// The task an environment instance has to accomplish.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mission {
    /// Step onto a goal cell.
    ReachGoal,
    /// Open the door at this position.
    OpenDoor(Pos),
    /// Hold the ball flagged as target.
    PickUpTargetBall,
    /// Open (toggle away) the box flagged as target.
    OpenTargetBox,
}

/// Full MDP state of one episode.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EnvState {
    pub grid: Grid,
    pub agent: AgentPose,
    pub carrying: Option<CellKind>,
    pub step_count: u32,
    pub max_steps: u32,
    pub mission: Mission,
    finished: bool,
}

/// Result of one transition; the next state is the mutated [`EnvState`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub extrinsic_reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}

impl StepOutcome {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

impl EnvState {
    pub fn new(grid: Grid, agent: AgentPose, max_steps: u32, mission: Mission) -> EnvState {
        EnvState {
            grid,
            agent,
            carrying: None,
            step_count: 0,
            max_steps,
            mission,
            finished: false,
        }
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Terminal reward for a success at the current step count.
    pub fn success_reward(&self) -> f64 {
        1.0 - 0.9 * (self.step_count as f64 / self.max_steps as f64)
    }

    /// Applies one action. Invalid actions are no-ops that still consume a step.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome, EnvError> {
        if self.finished {
            return Err(EnvError::EpisodeFinished);
        }
        self.step_count += 1;

        let front = self.agent.front();
        let front_cell = self.grid.get(front).unwrap_or(CellKind::Wall);
        let mut success = false;

        match action {
            Action::TurnLeft => self.agent.dir = self.agent.dir.turn_left(),
            Action::TurnRight => self.agent.dir = self.agent.dir.turn_right(),
            Action::Forward => {
                if front_cell.can_overlap() {
                    self.agent.pos = front;
                    success = self.mission == Mission::ReachGoal && front_cell == CellKind::Goal;
                }
            }
            Action::Pickup => {
                if self.carrying.is_none() && front_cell.can_pickup() {
                    self.carrying = Some(front_cell);
                    self.grid.set(front, CellKind::Floor);
                    success = self.mission == Mission::PickUpTargetBall
                        && matches!(front_cell, CellKind::Ball { target: true, .. });
                }
            }
            Action::Drop => {
                if front_cell == CellKind::Floor {
                    if let Some(obj) = self.carrying.take() {
                        self.grid.set(front, obj);
                    }
                }
            }
            Action::Toggle => match front_cell {
                CellKind::Door { color, state } => {
                    let next = match state {
                        DoorState::Locked => match self.carrying {
                            Some(CellKind::Key { color: k }) if k == color => DoorState::Open,
                            _ => DoorState::Locked,
                        },
                        DoorState::Open => DoorState::Closed,
                        DoorState::Closed => DoorState::Open,
                    };
                    self.grid.set(front, CellKind::Door { color, state: next });
                    success = self.mission == Mission::OpenDoor(front) && next == DoorState::Open;
                }
                CellKind::Box {
                    contents, target, ..
                } => {
                    let revealed = contents.map(BoxItem::into_cell).unwrap_or(CellKind::Floor);
                    self.grid.set(front, revealed);
                    success = self.mission == Mission::OpenTargetBox && target;
                }
                _ => {}
            },
            Action::Done => {}
        }

        let extrinsic_reward = if success { self.success_reward() } else { 0.0 };
        let truncated = !success && self.step_count >= self.max_steps;
        self.finished = success || truncated;
        Ok(StepOutcome {
            extrinsic_reward,
            terminated: success,
            truncated,
        })
    }

    /// Whether the mission's success predicate holds in this state.
    pub fn goal_reached(&self) -> bool {
        match self.mission {
            Mission::ReachGoal => self.grid.get(self.agent.pos) == Some(CellKind::Goal),
            Mission::OpenDoor(pos) => self.grid.get(pos).is_some_and(CellKind::is_open_door),
            Mission::PickUpTargetBall => {
                matches!(self.carrying, Some(CellKind::Ball { target: true, .. }))
            }
            Mission::OpenTargetBox => {
                let is_target = |c: &CellKind| matches!(c, CellKind::Box { target: true, .. });
                !self.grid.cells().iter().any(is_target)
                    && !self.carrying.as_ref().is_some_and(is_target)
            }
        }
    }

    /// Canonical byte image of the whole state (header then row-major grid).
    ///
    /// Header: width, height (u16 LE each), agent x, y (u16 LE), direction,
    /// carried-object triple (zeros when empty), step_count, max_steps
    /// (u32 LE each).
    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + 3 * self.grid.cells.len());
        out.extend_from_slice(&(self.grid.width as u16).to_le_bytes());
        out.extend_from_slice(&(self.grid.height as u16).to_le_bytes());
        out.extend_from_slice(&(self.agent.pos.x as u16).to_le_bytes());
        out.extend_from_slice(&(self.agent.pos.y as u16).to_le_bytes());
        out.push(self.agent.dir.index());
        out.extend_from_slice(&self.carrying.map(CellKind::encode).unwrap_or([0; 3]));
        out.extend_from_slice(&self.step_count.to_le_bytes());
        out.extend_from_slice(&self.max_steps.to_le_bytes());
        out.extend(self.grid.to_bytes());
        out
    }

    /// Every non-door object in the grid, the agent's hands and inside boxes.
    pub fn object_inventory(&self) -> Vec<CellKind> {
        let mut objects = Vec::new();
        let mut push = |cell: CellKind| {
            if cell.can_pickup() {
                objects.push(cell);
                if let CellKind::Box {
                    contents: Some(item),
                    ..
                } = cell
                {
                    objects.push(item.into_cell());
                }
            }
        };
        self.grid.cells().iter().copied().for_each(&mut push);
        if let Some(c) = self.carrying {
            push(c);
        }
        objects
    }
}

/// Whether `state` satisfies the success condition of the environment `spec` describes.
pub fn goal_condition(_spec: &EnvSpec, state: &EnvState) -> bool {
    state.goal_reached()
}
