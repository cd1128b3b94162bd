//! Procedural-generation helpers: random placement and the room-grid layout
//! (rooms sharing walls, door slots on each wall) used by most of the catalog.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{AgentPose, CellKind, Color, Direction, DoorState, EnvError, Grid, Pos};

const MAX_PLACEMENT_TRIES: usize = 10_000;

/// Mutable layout under construction plus the generator stream.
pub(crate) struct Builder<'r> {
    pub grid: Grid,
    pub agent: Option<AgentPose>,
    pub rng: &'r mut ChaCha8Rng,
}

impl<'r> Builder<'r> {
    pub fn new(width: i32, height: i32, rng: &'r mut ChaCha8Rng) -> Builder<'r> {
        Builder {
            grid: Grid::new(width, height),
            agent: None,
            rng,
        }
    }

    /// Uniform integer in `[lo, hi)`.
    pub fn rand_int(&mut self, lo: i32, hi: i32) -> i32 {
        self.rng.gen_range(lo..hi)
    }

    pub fn rand_color(&mut self) -> Color {
        Color::ALL[self.rng.gen_range(0..Color::ALL.len())]
    }

    pub fn rand_elem<T: Copy>(&mut self, items: &[T]) -> T {
        *items.choose(self.rng).expect("non-empty choice")
    }

    pub fn shuffled_colors(&mut self) -> [Color; 6] {
        let mut colors = Color::ALL;
        colors.shuffle(self.rng);
        colors
    }

    fn is_free(&self, pos: Pos) -> bool {
        self.grid.get(pos) == Some(CellKind::Floor) && self.agent.map(|a| a.pos) != Some(pos)
    }

    /// Random free floor cell in the rectangle `[top, top + size)`.
    pub fn random_free_pos(
        &mut self,
        top: Pos,
        size: (i32, i32),
        reject: impl Fn(Pos) -> bool,
    ) -> Result<Pos, EnvError> {
        let x0 = top.x.max(0);
        let y0 = top.y.max(0);
        let x1 = (top.x + size.0).min(self.grid.width());
        let y1 = (top.y + size.1).min(self.grid.height());
        if x0 >= x1 || y0 >= y1 {
            return Err(EnvError::TopologyTooLarge(format!(
                "empty placement region at {top:?} size {size:?}"
            )));
        }
        for _ in 0..MAX_PLACEMENT_TRIES {
            let pos = Pos::new(self.rand_int(x0, x1), self.rand_int(y0, y1));
            if self.is_free(pos) && !reject(pos) {
                return Ok(pos);
            }
        }
        Err(EnvError::TopologyTooLarge(format!(
            "no free cell in region at {top:?} size {size:?}"
        )))
    }

    pub fn place_obj(
        &mut self,
        cell: CellKind,
        top: Pos,
        size: (i32, i32),
    ) -> Result<Pos, EnvError> {
        let pos = self.random_free_pos(top, size, |_| false)?;
        self.grid.set(pos, cell);
        Ok(pos)
    }

    /// Random free position and heading for the agent.
    pub fn place_agent(&mut self, top: Pos, size: (i32, i32)) -> Result<AgentPose, EnvError> {
        self.agent = None;
        let pos = self.random_free_pos(top, size, |_| false)?;
        let dir = Direction::from_index(self.rand_int(0, 4) as u8);
        let pose = AgentPose { pos, dir };
        self.agent = Some(pose);
        Ok(pose)
    }
}

/// Wall slots, in MiniGrid order.
pub(crate) const RIGHT: usize = 0;
pub(crate) const DOWN: usize = 1;
pub(crate) const LEFT: usize = 2;
pub(crate) const UP: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Passage {
    None,
    Door,
    Opening,
}

#[derive(Clone, Debug)]
struct Room {
    top: Pos,
    size: i32,
    door_pos: [Option<Pos>; 4],
    passage: [Passage; 4],
    locked: bool,
}

/// A `cols x rows` arrangement of square rooms of side `room_size`
/// (walls included) where neighbours share a wall.
pub(crate) struct RoomGrid<'r> {
    pub b: Builder<'r>,
    rooms: Vec<Room>,
    cols: i32,
    rows: i32,
    room_size: i32,
}

impl<'r> RoomGrid<'r> {
    pub fn new(room_size: i32, rows: i32, cols: i32, rng: &'r mut ChaCha8Rng) -> RoomGrid<'r> {
        let width = (room_size - 1) * cols + 1;
        let height = (room_size - 1) * rows + 1;
        let mut b = Builder::new(width, height, rng);
        let mut rooms = Vec::with_capacity((rows * cols) as usize);
        for j in 0..rows {
            for i in 0..cols {
                let top = Pos::new(i * (room_size - 1), j * (room_size - 1));
                b.grid.wall_rect(top.x, top.y, room_size, room_size);
                rooms.push(Room {
                    top,
                    size: room_size,
                    door_pos: [None; 4],
                    passage: [Passage::None; 4],
                    locked: false,
                });
            }
        }
        let mut rg = RoomGrid {
            b,
            rooms,
            cols,
            rows,
            room_size,
        };
        for j in 0..rows {
            for i in 0..cols {
                let idx = rg.index(i, j);
                let top = rg.rooms[idx].top;
                let (xl, yl) = (top.x + 1, top.y + 1);
                let (xm, ym) = (top.x + room_size - 1, top.y + room_size - 1);
                if i < cols - 1 {
                    let y = rg.b.rand_int(yl, ym);
                    rg.rooms[idx].door_pos[RIGHT] = Some(Pos::new(xm, y));
                }
                if j < rows - 1 {
                    let x = rg.b.rand_int(xl, xm);
                    rg.rooms[idx].door_pos[DOWN] = Some(Pos::new(x, ym));
                }
                if i > 0 {
                    let left = rg.rooms[rg.index(i - 1, j)].door_pos[RIGHT];
                    rg.rooms[idx].door_pos[LEFT] = left;
                }
                if j > 0 {
                    let up = rg.rooms[rg.index(i, j - 1)].door_pos[DOWN];
                    rg.rooms[idx].door_pos[UP] = up;
                }
            }
        }
        // default start: centre of the middle room, facing east
        let centre = Pos::new(
            (cols / 2) * (room_size - 1) + room_size / 2,
            (rows / 2) * (room_size - 1) + room_size / 2,
        );
        rg.b.agent = Some(AgentPose {
            pos: centre,
            dir: Direction::East,
        });
        rg
    }

    fn index(&self, i: i32, j: i32) -> usize {
        (j * self.cols + i) as usize
    }

    fn neighbour(&self, i: i32, j: i32, wall: usize) -> Option<(i32, i32)> {
        let (ni, nj) = match wall {
            RIGHT => (i + 1, j),
            DOWN => (i, j + 1),
            LEFT => (i - 1, j),
            _ => (i, j - 1),
        };
        (ni >= 0 && nj >= 0 && ni < self.cols && nj < self.rows).then_some((ni, nj))
    }

    fn set_passage(&mut self, i: i32, j: i32, wall: usize, p: Passage) {
        let idx = self.index(i, j);
        self.rooms[idx].passage[wall] = p;
        if let Some((ni, nj)) = self.neighbour(i, j, wall) {
            let nidx = self.index(ni, nj);
            self.rooms[nidx].passage[(wall + 2) % 4] = p;
        }
    }

    /// Adds a door on `wall` of room `(i, j)` and returns its position and color.
    pub fn add_door(
        &mut self,
        i: i32,
        j: i32,
        wall: Option<usize>,
        color: Option<Color>,
        locked: bool,
    ) -> Result<(Pos, Color), EnvError> {
        let idx = self.index(i, j);
        let wall = match wall {
            Some(w) => w,
            None => loop {
                let w = self.b.rand_int(0, 4) as usize;
                if self.neighbour(i, j, w).is_some() && self.rooms[idx].passage[w] == Passage::None
                {
                    break w;
                }
            },
        };
        let pos = self.rooms[idx].door_pos[wall].ok_or_else(|| {
            EnvError::TopologyTooLarge(format!("room ({i},{j}) has no neighbour on wall {wall}"))
        })?;
        let color = match color {
            Some(c) => c,
            None => self.b.rand_color(),
        };
        let state = if locked {
            DoorState::Locked
        } else {
            DoorState::Closed
        };
        self.b.grid.set(pos, CellKind::Door { color, state });
        self.rooms[idx].locked = locked;
        self.set_passage(i, j, wall, Passage::Door);
        Ok((pos, color))
    }

    /// Knocks down the shared wall between room `(i, j)` and its neighbour.
    pub fn remove_wall(&mut self, i: i32, j: i32, wall: usize) {
        let room = &self.rooms[self.index(i, j)];
        let (tx, ty, s) = (room.top.x, room.top.y, room.size);
        for k in 1..s - 1 {
            let pos = match wall {
                RIGHT => Pos::new(tx + s - 1, ty + k),
                DOWN => Pos::new(tx + k, ty + s - 1),
                LEFT => Pos::new(tx, ty + k),
                _ => Pos::new(tx + k, ty),
            };
            self.b.grid.set(pos, CellKind::Floor);
        }
        self.set_passage(i, j, wall, Passage::Opening);
    }

    fn room_interior(&self, i: i32, j: i32) -> (Pos, (i32, i32)) {
        let room = &self.rooms[self.index(i, j)];
        (room.top, (room.size, room.size))
    }

    /// Places `cell` in room `(i, j)`, never right next to the agent's current spot.
    pub fn place_in_room(&mut self, i: i32, j: i32, cell: CellKind) -> Result<Pos, EnvError> {
        let (top, size) = self.room_interior(i, j);
        let agent = self.b.agent.map(|a| a.pos);
        let pos = self.b.random_free_pos(top, size, |p| {
            agent.is_some_and(|a| (a.x - p.x).abs() + (a.y - p.y).abs() < 2)
        })?;
        self.b.grid.set(pos, cell);
        Ok(pos)
    }

    /// Places the agent in room `(i, j)` facing floor or a wall.
    pub fn place_agent_in_room(&mut self, i: i32, j: i32) -> Result<AgentPose, EnvError> {
        let (top, size) = self.room_interior(i, j);
        for _ in 0..1000 {
            let pose = self.b.place_agent(top, size)?;
            match self.b.grid.get(pose.front()) {
                Some(CellKind::Floor) | Some(CellKind::Wall) | None => return Ok(pose),
                _ => {}
            }
        }
        Err(EnvError::TopologyTooLarge(format!(
            "no valid start pose in room ({i},{j})"
        )))
    }

    fn room_of(&self, pos: Pos) -> (i32, i32) {
        let step = self.room_size - 1;
        (
            (pos.x / step).min(self.cols - 1),
            (pos.y / step).min(self.rows - 1),
        )
    }

    fn reachable_rooms(&self) -> usize {
        let Some(agent) = self.b.agent else { return 0 };
        let start = self.room_of(agent.pos);
        let mut seen = vec![false; self.rooms.len()];
        let mut stack = vec![start];
        let mut count = 0;
        while let Some((i, j)) = stack.pop() {
            let idx = self.index(i, j);
            if seen[idx] {
                continue;
            }
            seen[idx] = true;
            count += 1;
            for wall in 0..4 {
                if self.rooms[idx].passage[wall] != Passage::None {
                    if let Some(n) = self.neighbour(i, j, wall) {
                        stack.push(n);
                    }
                }
            }
        }
        count
    }

    /// Adds closed unlocked doors until every room is reachable from the agent.
    pub fn connect_all(&mut self) -> Result<(), EnvError> {
        for _ in 0..5000 {
            if self.reachable_rooms() == self.rooms.len() {
                return Ok(());
            }
            let i = self.b.rand_int(0, self.cols);
            let j = self.b.rand_int(0, self.rows);
            let k = self.b.rand_int(0, 4) as usize;
            let idx = self.index(i, j);
            let Some((ni, nj)) = self.neighbour(i, j, k) else {
                continue;
            };
            if self.rooms[idx].passage[k] != Passage::None {
                continue;
            }
            if self.rooms[idx].locked || self.rooms[self.index(ni, nj)].locked {
                continue;
            }
            let color = self.b.rand_color();
            self.add_door(i, j, Some(k), Some(color), false)?;
        }
        Err(EnvError::TopologyTooLarge(
            "could not connect all rooms".into(),
        ))
    }

    pub fn finish(self) -> (Grid, Option<AgentPose>) {
        (self.b.grid, self.b.agent)
    }
}
