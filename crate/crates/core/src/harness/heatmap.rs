use serde::{Deserialize, Serialize};

use crate::gridworld::{CellKind, EnvState, Pos};

/// Agent-position visit counts over the true grid.
///
/// Every reset and every environment step adds one count at the agent's
/// cell, so the total equals steps plus resets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub env: String,
    pub mode: String,
    /// Steps covered by the map.
    pub steps: u64,
    pub resets: u64,
    pub width: usize,
    pub height: usize,
    pub counts: Vec<u64>,
    /// Visits to cells outside the room the agent started the episode in.
    pub outside_start_room: u64,
    /// Visits to goal cells.
    pub goal_visits: u64,
    #[serde(skip)]
    start_room: Vec<bool>,
}

/// Scale of one grid cell in the rendered image.
const PIXELS_PER_CELL: usize = 8;

impl HeatmapGrid {
    pub fn new(env: &str, mode: &str) -> HeatmapGrid {
        HeatmapGrid {
            env: env.to_string(),
            mode: mode.to_string(),
            steps: 0,
            resets: 0,
            width: 0,
            height: 0,
            counts: Vec::new(),
            outside_start_room: 0,
            goal_visits: 0,
            start_room: Vec::new(),
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn distinct_cells(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn get(&self, x: usize, y: usize) -> u64 {
        self.counts[y * self.width + x]
    }

    pub fn record_reset(&mut self, state: &EnvState) {
        let (w, h) = (state.grid.width() as usize, state.grid.height() as usize);
        if self.counts.is_empty() {
            self.width = w;
            self.height = h;
            self.counts = vec![0; w * h];
        }
        assert_eq!(
            (w, h),
            (self.width, self.height),
            "grid size changed between episodes"
        );
        self.start_room = start_room(state);
        self.resets += 1;
        self.visit(state);
    }

    pub fn record_step(&mut self, state: &EnvState) {
        self.steps += 1;
        self.visit(state);
    }

    fn visit(&mut self, state: &EnvState) {
        let Pos { x, y } = state.agent.pos;
        let idx = y as usize * self.width + x as usize;
        self.counts[idx] += 1;
        if !self.start_room[idx] {
            self.outside_start_room += 1;
        }
        if state.grid.get(state.agent.pos) == Some(CellKind::Goal) {
            self.goal_visits += 1;
        }
    }

    /// Row-major counts, one grid row per line.
    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        for row in self.counts.chunks(self.width.max(1)) {
            w.write_record(row.iter().map(u64::to_string))
                .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn counts_from_csv(data: &[u8]) -> Result<(usize, usize, Vec<u64>), String> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(data);
        let mut counts = Vec::new();
        let mut width = None;
        let mut height = 0;
        for row in r.records() {
            let row = row.map_err(|e| e.to_string())?;
            if *width.get_or_insert(row.len()) != row.len() {
                return Err("ragged heatmap rows".into());
            }
            for f in row.iter() {
                counts.push(f.parse().map_err(|e| format!("{e}"))?);
            }
            height += 1;
        }
        Ok((width.unwrap_or(0), height, counts))
    }

    /// Binary portable pixmap with a black-red-yellow-white scale on
    /// log counts.
    pub fn to_ppm(&self) -> Vec<u8> {
        let (pw, ph) = (self.width * PIXELS_PER_CELL, self.height * PIXELS_PER_CELL);
        let mut out = format!("P6\n{pw} {ph}\n255\n").into_bytes();
        let top = (self.counts.iter().copied().max().unwrap_or(0) as f64).ln_1p();
        for py in 0..ph {
            for px in 0..pw {
                let c = self.get(px / PIXELS_PER_CELL, py / PIXELS_PER_CELL);
                let t = if top > 0.0 {
                    (c as f64).ln_1p() / top
                } else {
                    0.0
                };
                let channel =
                    |offset: f64| ((3.0 * t - offset).clamp(0.0, 1.0) * 255.0).round() as u8;
                out.extend_from_slice(&[channel(0.0), channel(1.0), channel(2.0)]);
            }
        }
        out
    }
}

/// Cells reachable from the agent without crossing walls or doors.
fn start_room(state: &EnvState) -> Vec<bool> {
    let (w, h) = (state.grid.width(), state.grid.height());
    let mut seen = vec![false; (w * h) as usize];
    let mut stack = vec![state.agent.pos];
    seen[(state.agent.pos.y * w + state.agent.pos.x) as usize] = true;
    while let Some(p) = stack.pop() {
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let q = p.offset(dx, dy);
            let Some(cell) = state.grid.get(q) else {
                continue;
            };
            let idx = (q.y * w + q.x) as usize;
            if seen[idx] || matches!(cell, CellKind::Wall | CellKind::Door { .. }) {
                continue;
            }
            seen[idx] = true;
            stack.push(q);
        }
    }
    seen
}
