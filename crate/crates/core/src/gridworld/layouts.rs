//! Per-environment procedural generators.
//!
//! Topologies follow the MiniGrid reference layouts:
//!
//! | family            | grid                         | rooms                              |
//! |-------------------|------------------------------|------------------------------------|
//! | Unlock*, Blocked* | 11x6                         | 1x2 rooms of side 6                |
//! | DoorKey-N         | NxN                          | random vertical split, locked door |
//! | KeyCorridorSxR3   | (3(S-1)+1) x (3(S-1)+1)      | 3x3 rooms of side S, central hall  |
//! | ObstructedMaze-1D | 11x6                         | 1x2 rooms of side 6                |
//! | ObstructedMaze-2D | 16x16                        | 3x3 rooms of side 6, one quarter   |
//! | MultiRoom-Nn-Ss   | 25x25                        | chain of n rooms of side 4..=s     |

use rand_chacha::ChaCha8Rng;

use super::builder::{Builder, RoomGrid, DOWN, LEFT, RIGHT, UP};
use super::{AgentPose, BoxItem, CellKind, Color, EnvError, EnvId, EnvState, Grid, Mission, Pos};

pub(crate) fn generate(
    id: EnvId,
    max_steps: u32,
    rng: &mut ChaCha8Rng,
) -> Result<EnvState, EnvError> {
    let (grid, agent, mission) = match id {
        EnvId::Unlock => unlock(rng)?,
        EnvId::UnlockPickup => unlock_pickup(rng, false)?,
        EnvId::BlockedUnlockPickup => unlock_pickup(rng, true)?,
        EnvId::DoorKey8x8 => door_key(8, rng)?,
        EnvId::DoorKey16x16 => door_key(16, rng)?,
        EnvId::KeyCorridorS3R3 => key_corridor(3, 3, rng)?,
        EnvId::KeyCorridorS4R3 => key_corridor(4, 3, rng)?,
        EnvId::KeyCorridorS5R3 => key_corridor(5, 3, rng)?,
        EnvId::KeyCorridorS6R3 => key_corridor(6, 3, rng)?,
        EnvId::ObstructedMaze1Dlh => obstructed_maze_1d(rng)?,
        EnvId::ObstructedMaze2Dlh => obstructed_maze_2d(false, rng)?,
        EnvId::ObstructedMaze2Dlhb => obstructed_maze_2d(true, rng)?,
        EnvId::MultiRoomN4S5 => multi_room(4, 5, rng)?,
        EnvId::MultiRoomN6 => multi_room(6, 10, rng)?,
        EnvId::MultiRoomN12S10 => multi_room(12, 10, rng)?,
    };
    let agent = agent.ok_or_else(|| EnvError::TopologyTooLarge("agent was not placed".into()))?;
    Ok(EnvState::new(grid, agent, max_steps, mission))
}

type Layout = (Grid, Option<AgentPose>, Mission);

fn unlock(rng: &mut ChaCha8Rng) -> Result<Layout, EnvError> {
    let mut rg = RoomGrid::new(6, 1, 2, rng);
    let (door, color) = rg.add_door(0, 0, Some(RIGHT), None, true)?;
    rg.place_in_room(0, 0, CellKind::Key { color })?;
    rg.place_agent_in_room(0, 0)?;
    let (grid, agent) = rg.finish();
    Ok((grid, agent, Mission::OpenDoor(door)))
}

fn unlock_pickup(rng: &mut ChaCha8Rng, blocked: bool) -> Result<Layout, EnvError> {
    let mut rg = RoomGrid::new(6, 1, 2, rng);
    let box_color = rg.b.rand_color();
    rg.place_in_room(
        1,
        0,
        CellKind::Box {
            color: box_color,
            contents: None,
            target: true,
        },
    )?;
    let (door, color) = rg.add_door(0, 0, Some(RIGHT), None, true)?;
    if blocked {
        let ball = rg.b.rand_color();
        rg.b.grid.set(
            door.offset(-1, 0),
            CellKind::Ball {
                color: ball,
                target: false,
            },
        );
    }
    rg.place_in_room(0, 0, CellKind::Key { color })?;
    rg.place_agent_in_room(0, 0)?;
    let (grid, agent) = rg.finish();
    Ok((grid, agent, Mission::OpenTargetBox))
}

fn door_key(size: i32, rng: &mut ChaCha8Rng) -> Result<Layout, EnvError> {
    let mut b = Builder::new(size, size, rng);
    b.grid.wall_rect(0, 0, size, size);
    b.grid.set(Pos::new(size - 2, size - 2), CellKind::Goal);
    let split = b.rand_int(2, size - 2);
    b.grid.vertical_wall(split, 0, size);
    b.place_agent(Pos::new(0, 0), (split, size))?;
    let door_y = b.rand_int(1, size - 2);
    b.grid.set(
        Pos::new(split, door_y),
        CellKind::Door {
            color: Color::Yellow,
            state: super::DoorState::Locked,
        },
    );
    b.place_obj(
        CellKind::Key {
            color: Color::Yellow,
        },
        Pos::new(0, 0),
        (split, size),
    )?;
    Ok((b.grid, b.agent, Mission::ReachGoal))
}

fn key_corridor(room_size: i32, rows: i32, rng: &mut ChaCha8Rng) -> Result<Layout, EnvError> {
    let mut rg = RoomGrid::new(room_size, rows, 3, rng);
    for j in 1..rows {
        rg.remove_wall(1, j, UP);
    }
    let room = rg.b.rand_int(0, rows);
    let (_, door_color) = rg.add_door(2, room, Some(LEFT), None, true)?;
    let ball = rg.b.rand_color();
    rg.place_in_room(
        2,
        room,
        CellKind::Ball {
            color: ball,
            target: true,
        },
    )?;
    let key_room = rg.b.rand_int(0, rows);
    rg.place_in_room(0, key_room, CellKind::Key { color: door_color })?;
    rg.place_agent_in_room(1, rows / 2)?;
    rg.connect_all()?;
    let (grid, agent) = rg.finish();
    Ok((grid, agent, Mission::PickUpTargetBall))
}

const TARGET_BALL: Color = Color::Red;
const BLOCKING_BALL: Color = Color::Green;
const KEY_BOX: Color = Color::Blue;

/// Locked door whose key sits in a box in room `(i, j)`, optionally with a
/// ball blocking the door from that room's side.
fn obstructed_door(
    rg: &mut RoomGrid<'_>,
    i: i32,
    j: i32,
    wall: usize,
    color: Color,
    locked: bool,
    blocked: bool,
) -> Result<(), EnvError> {
    let (pos, color) = rg.add_door(i, j, Some(wall), Some(color), locked)?;
    if blocked {
        let (dx, dy) = match wall {
            RIGHT => (1, 0),
            DOWN => (0, 1),
            LEFT => (-1, 0),
            _ => (0, -1),
        };
        rg.b.grid.set(
            pos.offset(-dx, -dy),
            CellKind::Ball {
                color: BLOCKING_BALL,
                target: false,
            },
        );
    }
    if locked {
        rg.place_in_room(
            i,
            j,
            CellKind::Box {
                color: KEY_BOX,
                contents: Some(BoxItem::Key(color)),
                target: false,
            },
        )?;
    }
    Ok(())
}

fn obstructed_maze_1d(rng: &mut ChaCha8Rng) -> Result<Layout, EnvError> {
    let mut rg = RoomGrid::new(6, 1, 2, rng);
    let door_colors = rg.b.shuffled_colors();
    obstructed_door(&mut rg, 0, 0, RIGHT, door_colors[0], true, false)?;
    rg.place_in_room(
        1,
        0,
        CellKind::Ball {
            color: TARGET_BALL,
            target: true,
        },
    )?;
    rg.place_agent_in_room(0, 0)?;
    let (grid, agent) = rg.finish();
    Ok((grid, agent, Mission::PickUpTargetBall))
}

/// One quarter of the full obstructed maze: the agent starts in the
/// middle-right room whose up and down doors are locked; the ball waits in
/// the top-right corner room.
fn obstructed_maze_2d(blocked: bool, rng: &mut ChaCha8Rng) -> Result<Layout, EnvError> {
    let mut rg = RoomGrid::new(6, 3, 3, rng);
    let door_colors = rg.b.shuffled_colors();
    let (middle, side) = ((1, 1), (2, 1));
    obstructed_door(
        &mut rg,
        middle.0,
        middle.1,
        RIGHT,
        door_colors[0],
        false,
        false,
    )?;
    for (wall, color) in [(UP, door_colors[5]), (DOWN, door_colors[1])] {
        obstructed_door(&mut rg, side.0, side.1, wall, color, true, blocked)?;
    }
    rg.place_in_room(
        2,
        0,
        CellKind::Ball {
            color: TARGET_BALL,
            target: true,
        },
    )?;
    rg.place_agent_in_room(side.0, side.1)?;
    let (grid, agent) = rg.finish();
    Ok((grid, agent, Mission::PickUpTargetBall))
}

#[derive(Clone, Copy, Debug)]
struct ChainRoom {
    top: Pos,
    size: (i32, i32),
    entry_door: Pos,
}

const MULTIROOM_SIZE: i32 = 25;
const MULTIROOM_ATTEMPTS: usize = 100_000;

/// Chain of rooms laid out by a randomized depth-first walk. Retries until
/// a walk places all `num_rooms`, keeping the longest chain found.
fn multi_room(num_rooms: usize, max_room: i32, rng: &mut ChaCha8Rng) -> Result<Layout, EnvError> {
    let (w, h) = (MULTIROOM_SIZE, MULTIROOM_SIZE);
    let mut b = Builder::new(w, h, rng);
    let mut rooms: Vec<ChainRoom> = Vec::new();
    let mut attempts = 0;
    while rooms.len() < num_rooms {
        attempts += 1;
        if attempts > MULTIROOM_ATTEMPTS {
            return Err(EnvError::TopologyTooLarge(format!(
                "could not chain {num_rooms} rooms of size <= {max_room} in a {w}x{h} grid"
            )));
        }
        let mut current = Vec::new();
        let entry = Pos::new(b.rand_int(0, w - 2), b.rand_int(0, w - 2));
        place_room(&mut b, num_rooms, &mut current, 4, max_room, LEFT, entry);
        if current.len() > rooms.len() {
            rooms = current;
        }
    }

    // Everything outside the rooms is wall.
    b.grid = Grid::new(w, h);
    for pos in b.grid.positions().collect::<Vec<_>>() {
        b.grid.set(pos, CellKind::Wall);
    }
    for room in &rooms {
        for y in room.top.y + 1..room.top.y + room.size.1 - 1 {
            for x in room.top.x + 1..room.top.x + room.size.0 - 1 {
                b.grid.set(Pos::new(x, y), CellKind::Floor);
            }
        }
    }
    let mut prev_color: Option<Color> = None;
    for room in rooms.iter().skip(1) {
        let choices: Vec<Color> = Color::ALL
            .into_iter()
            .filter(|c| Some(*c) != prev_color)
            .collect();
        let color = b.rand_elem(&choices);
        b.grid.set(
            room.entry_door,
            CellKind::Door {
                color,
                state: super::DoorState::Closed,
            },
        );
        prev_color = Some(color);
    }
    let first = rooms[0];
    b.place_agent(first.top, first.size)?;
    let last = rooms[rooms.len() - 1];
    b.place_obj(CellKind::Goal, last.top, last.size)?;
    Ok((b.grid, b.agent, Mission::ReachGoal))
}

fn place_room(
    b: &mut Builder<'_>,
    num_left: usize,
    rooms: &mut Vec<ChainRoom>,
    min_size: i32,
    max_size: i32,
    entry_wall: usize,
    entry_door: Pos,
) -> bool {
    let sx = b.rand_int(min_size, max_size + 1);
    let sy = b.rand_int(min_size, max_size + 1);
    let (tx, ty) = if rooms.is_empty() {
        (entry_door.x, entry_door.y)
    } else {
        match entry_wall {
            RIGHT => (
                entry_door.x - sx + 1,
                b.rand_int(entry_door.y - sy + 2, entry_door.y),
            ),
            DOWN => (
                b.rand_int(entry_door.x - sx + 2, entry_door.x),
                entry_door.y - sy + 1,
            ),
            LEFT => (
                entry_door.x,
                b.rand_int(entry_door.y - sy + 2, entry_door.y),
            ),
            _ => (
                b.rand_int(entry_door.x - sx + 2, entry_door.x),
                entry_door.y,
            ),
        }
    };
    if tx < 0 || ty < 0 || tx + sx > b.grid.width() || ty + sy >= b.grid.height() {
        return false;
    }
    // rooms may share a wall with their direct predecessor only
    let skip_last = rooms.len().saturating_sub(1);
    for room in &rooms[..skip_last] {
        let apart = tx + sx < room.top.x
            || room.top.x + room.size.0 <= tx
            || ty + sy < room.top.y
            || room.top.y + room.size.1 <= ty;
        if !apart {
            return false;
        }
    }
    rooms.push(ChainRoom {
        top: Pos::new(tx, ty),
        size: (sx, sy),
        entry_door,
    });
    if num_left == 1 {
        return true;
    }
    for _ in 0..8 {
        let walls: Vec<usize> = [RIGHT, DOWN, LEFT, UP]
            .into_iter()
            .filter(|w| *w != entry_wall)
            .collect();
        let exit_wall = b.rand_elem(&walls);
        let next_entry = (exit_wall + 2) % 4;
        let exit = match exit_wall {
            RIGHT => Pos::new(tx + sx - 1, ty + b.rand_int(1, sy - 1)),
            DOWN => Pos::new(tx + b.rand_int(1, sx - 1), ty + sy - 1),
            LEFT => Pos::new(tx, ty + b.rand_int(1, sy - 1)),
            _ => Pos::new(tx + b.rand_int(1, sx - 1), ty),
        };
        if place_room(b, num_left - 1, rooms, min_size, max_size, next_entry, exit) {
            break;
        }
    }
    true
}
