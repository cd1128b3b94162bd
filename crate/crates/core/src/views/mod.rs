//! Egocentric, occluded observations and their cropped hierarchy.
//!
//! The largest view is rendered with the agent at the bottom-centre cell,
//! facing up. Smaller views are sub-rectangles of it sharing that anchor,
//! so equal large observations always imply equal small ones.
//!
//! # Canonical observation bytes
//!
//! ```text
//! offset  size  field
//! 0       1     width  (columns)
//! 1       1     height (rows)
//! 2       3     carried object (kind, color, state); 0,0,0 when empty
//! 5       3*w*h cells, row-major from the far row to the agent's row,
//!               each (kind, color, state); occluded cells are 0,0,0
//! ```
//!
//! Kind and color bytes are those of [`CellKind::encode`]; the state byte is
//! the door state (0 open, 1 closed, 2 locked) and 0 for everything else.
//! An [`ObservationKey`] is the XXH3-64 digest (seed 0) of these bytes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use xxhash_rust::xxh3::xxh3_64;

use crate::gridworld::{CellKind, EnvState};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ViewError {
    #[error("invalid view dimensions `{0}`; expected ROWSxCOLS with an odd column count")]
    BadDims(String),
    #[error("view {inner} is not nested inside {outer}")]
    NotNested { inner: ViewDims, outer: ViewDims },
    #[error("view list must not be empty")]
    Empty,
}

/// Marker triple for cells the agent cannot see.
pub const OCCLUDED: [u8; 3] = [0, 0, 0];

/// Size of one view. Written `ROWSxCOLS`, so `2x1` is the agent's cell plus
/// the cell directly ahead.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ViewDims {
    pub width: u8,
    pub height: u8,
}

impl ViewDims {
    pub const fn new(width: u8, height: u8) -> ViewDims {
        ViewDims { width, height }
    }

    pub fn area(self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn fits_in(self, outer: ViewDims) -> bool {
        self.width <= outer.width && self.height <= outer.height
    }

    fn is_valid(self) -> bool {
        self.width > 0 && self.height > 0 && self.width % 2 == 1
    }
}

/// The 9x9 view every other view is cropped from.
pub const FULL_VIEW: ViewDims = ViewDims::new(9, 9);

impl fmt::Display for ViewDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.height, self.width)
    }
}

impl FromStr for ViewDims {
    type Err = ViewError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ViewError::BadDims(s.to_string());
        let (rows, cols) = s.trim().split_once(['x', 'X', '×']).ok_or_else(bad)?;
        let height: u8 = rows.trim().parse().map_err(|_| bad())?;
        let width: u8 = cols.trim().parse().map_err(|_| bad())?;
        let dims = ViewDims::new(width, height);
        dims.is_valid().then_some(dims).ok_or_else(bad)
    }
}

impl Serialize for ViewDims {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ViewDims {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Ordered list of nested views, largest first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<ViewDims>", into = "Vec<ViewDims>")]
pub struct ViewSpec {
    dims: Vec<ViewDims>,
}

impl Default for ViewSpec {
    fn default() -> Self {
        ViewSpec {
            dims: ["9x9", "7x7", "5x5", "3x3", "2x1"]
                .iter()
                .map(|d| d.parse().expect("static dims"))
                .collect(),
        }
    }
}

impl ViewSpec {
    pub fn new(dims: Vec<ViewDims>) -> Result<ViewSpec, ViewError> {
        let first = *dims.first().ok_or(ViewError::Empty)?;
        if !first.is_valid() {
            return Err(ViewError::BadDims(first.to_string()));
        }
        for pair in dims.windows(2) {
            let (outer, inner) = (pair[0], pair[1]);
            if !inner.is_valid() {
                return Err(ViewError::BadDims(inner.to_string()));
            }
            if !inner.fits_in(outer) || inner.area() >= outer.area() {
                return Err(ViewError::NotNested { inner, outer });
            }
        }
        Ok(ViewSpec { dims })
    }

    pub fn dims(&self) -> &[ViewDims] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    /// Keeps the views whose mask entry is set.
    pub fn subset(&self, mask: &[bool]) -> Result<ViewSpec, ViewError> {
        ViewSpec::new(
            self.dims
                .iter()
                .zip(mask)
                .filter_map(|(d, keep)| keep.then_some(*d))
                .collect(),
        )
    }

    /// Dimensions of the rendered view the crops are taken from.
    pub fn render_dims(&self) -> ViewDims {
        let first = self.dims[0];
        ViewDims::new(
            first.width.max(FULL_VIEW.width),
            first.height.max(FULL_VIEW.height),
        )
    }

    /// Keys of every view of `state`, largest first.
    pub fn keys(&self, state: &EnvState, out: &mut Vec<ObservationKey>) {
        let full = render_egocentric(state, self.render_dims());
        let mut buf = Vec::with_capacity(full.byte_len());
        out.clear();
        for &dims in &self.dims {
            buf.clear();
            full.write_crop_bytes(dims, &mut buf);
            out.push(ObservationKey(xxh3_64(&buf)));
        }
    }
}

impl TryFrom<Vec<ViewDims>> for ViewSpec {
    type Error = ViewError;

    fn try_from(dims: Vec<ViewDims>) -> Result<Self, Self::Error> {
        ViewSpec::new(dims)
    }
}

impl From<ViewSpec> for Vec<ViewDims> {
    fn from(spec: ViewSpec) -> Self {
        spec.dims
    }
}

impl fmt::Display for ViewSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.dims.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for ViewSpec {
    type Err = ViewError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ViewSpec::new(s.split(',').map(str::parse).collect::<Result<_, _>>()?)
    }
}

/// One egocentric observation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Observation {
    width: u8,
    height: u8,
    carried: [u8; 3],
    cells: Vec<[u8; 3]>,
}

impl Observation {
    pub fn dims(&self) -> ViewDims {
        ViewDims::new(self.width, self.height)
    }

    /// Cell at column `col`, row `row` (row 0 is the farthest from the agent).
    pub fn cell(&self, col: u8, row: u8) -> [u8; 3] {
        self.cells[row as usize * self.width as usize + col as usize]
    }

    pub fn carried(&self) -> [u8; 3] {
        self.carried
    }

    /// Column and row of the agent's cell.
    pub fn agent_cell(&self) -> (u8, u8) {
        (self.width / 2, self.height - 1)
    }

    fn byte_len(&self) -> usize {
        5 + 3 * self.cells.len()
    }

    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.byte_len());
        self.write_crop_bytes(self.dims(), &mut out);
        out
    }

    /// Parses bytes produced by [`Observation::to_canonical_bytes`].
    pub fn from_canonical_bytes(bytes: &[u8]) -> Option<Observation> {
        let (&width, rest) = bytes.split_first()?;
        let (&height, rest) = rest.split_first()?;
        let carried: [u8; 3] = rest.get(..3)?.try_into().ok()?;
        let body = &rest[3..];
        if body.len() != 3 * width as usize * height as usize {
            return None;
        }
        let cells = body.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Some(Observation {
            width,
            height,
            carried,
            cells,
        })
    }

    fn crop_origin(&self, dims: ViewDims) -> (usize, usize) {
        (
            (self.width - dims.width) as usize / 2,
            (self.height - dims.height) as usize,
        )
    }

    fn write_crop_bytes(&self, dims: ViewDims, out: &mut Vec<u8>) {
        let (col0, row0) = self.crop_origin(dims);
        out.push(dims.width);
        out.push(dims.height);
        out.extend_from_slice(&self.carried);
        let w = self.width as usize;
        for row in row0..row0 + dims.height as usize {
            let start = row * w + col0;
            for cell in &self.cells[start..start + dims.width as usize] {
                out.extend_from_slice(cell);
            }
        }
    }
}

/// 64-bit digest of an observation's canonical bytes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObservationKey(pub u64);

impl fmt::Display for ObservationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

pub fn key_of(obs: &Observation) -> ObservationKey {
    ObservationKey(xxh3_64(&obs.to_canonical_bytes()))
}

/// Renders the egocentric view of size `dims` with occlusion.
pub fn render_egocentric(state: &EnvState, dims: ViewDims) -> Observation {
    let (w, h) = (dims.width as i32, dims.height as i32);
    let (fx, fy) = state.agent.dir.vector();
    let (rx, ry) = state.agent.dir.right_vector();
    let centre = w / 2;
    let agent = state.agent.pos;

    let mut cells: Vec<Option<CellKind>> = Vec::with_capacity((w * h) as usize);
    for row in 0..h {
        let ahead = h - 1 - row;
        for col in 0..w {
            let lateral = col - centre;
            let pos = agent.offset(ahead * fx + lateral * rx, ahead * fy + lateral * ry);
            cells.push(state.grid.get(pos));
        }
    }

    let visible = visibility(&cells, w as usize, h as usize);
    let encoded = cells
        .iter()
        .zip(&visible)
        .map(|(cell, &seen)| match (cell, seen) {
            (Some(c), true) => c.encode_observed(),
            _ => OCCLUDED,
        })
        .collect();

    Observation {
        width: dims.width,
        height: dims.height,
        carried: state
            .carrying
            .map(CellKind::encode_observed)
            .unwrap_or([0; 3]),
        cells: encoded,
    }
}

/// The 9x9 view used as the top of the default hierarchy.
pub fn render_full_egocentric(state: &EnvState) -> Observation {
    render_egocentric(state, FULL_VIEW)
}

/// Shadow propagation from the agent's cell (bottom centre): sweep rows from
/// the agent outwards, spreading sideways and forward (including diagonally)
/// from every visible transparent cell. Out-of-grid cells are opaque.
fn visibility(cells: &[Option<CellKind>], w: usize, h: usize) -> Vec<bool> {
    let mut mask = vec![false; w * h];
    let transparent = |i: usize, j: usize| cells[j * w + i].is_some_and(CellKind::see_behind);
    mask[(h - 1) * w + w / 2] = true;
    for j in (0..h).rev() {
        for i in 0..w - 1 {
            if !mask[j * w + i] || !transparent(i, j) {
                continue;
            }
            mask[j * w + i + 1] = true;
            if j > 0 {
                mask[(j - 1) * w + i + 1] = true;
                mask[(j - 1) * w + i] = true;
            }
        }
        for i in (1..w).rev() {
            if !mask[j * w + i] || !transparent(i, j) {
                continue;
            }
            mask[j * w + i - 1] = true;
            if j > 0 {
                mask[(j - 1) * w + i - 1] = true;
                mask[(j - 1) * w + i] = true;
            }
        }
    }
    mask
}

/// Sub-view of `full` sharing its agent anchor.
pub fn crop(full: &Observation, dims: ViewDims) -> Result<Observation, ViewError> {
    if !dims.is_valid() || !dims.fits_in(full.dims()) {
        return Err(ViewError::NotNested {
            inner: dims,
            outer: full.dims(),
        });
    }
    let (col0, row0) = full.crop_origin(dims);
    let w = full.width as usize;
    let cells = (row0..row0 + dims.height as usize)
        .flat_map(|row| {
            full.cells[row * w + col0..row * w + col0 + dims.width as usize]
                .iter()
                .copied()
        })
        .collect();
    Ok(Observation {
        width: dims.width,
        height: dims.height,
        carried: full.carried,
        cells,
    })
}

/// Observations of one state in every view of a spec.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViewStack {
    pub views: Vec<(Observation, ObservationKey)>,
}

impl ViewStack {
    pub fn keys(&self) -> Vec<ObservationKey> {
        self.views.iter().map(|(_, k)| *k).collect()
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }
}

pub fn observe(state: &EnvState, spec: &ViewSpec) -> ViewStack {
    let full = render_egocentric(state, spec.render_dims());
    let views = spec
        .dims()
        .iter()
        .map(|&d| {
            let obs = crop(&full, d).expect("spec views are nested in the render");
            let key = key_of(&obs);
            (obs, key)
        })
        .collect();
    ViewStack { views }
}
