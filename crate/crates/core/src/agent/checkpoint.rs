//! Binary checkpoint of a learner's tables.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! header   "CYCQ" | version u16 | views u16 | q_init f64 | flags u8 (bit 0: extrinsic tables)
//! dims     per view: width u8 | height u8
//! tables   per view: records u64 | records × (key u64 | action u8 | value f64)
//! counts   per view: entries u64 | max u64 | entries × (key u64 | count u64)
//! extrinsic (if flagged) tables again
//! ```
//!
//! Records are sorted by (key, action) and every stored row writes all
//! seven actions, so a load followed by a save reproduces the input bytes.

use thiserror::Error;

use super::{GlobalCounts, QTable, ViewCounts};
use crate::gridworld::Action;
use crate::views::{ObservationKey, ViewDims, ViewSpec};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"CYCQ";
pub const CHECKPOINT_VERSION: u16 = 1;

const FLAG_EXTRINSIC: u8 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u16),
    #[error("checkpoint truncated")]
    Truncated,
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub views: ViewSpec,
    pub q_init: f64,
    pub tables: Vec<QTable>,
    pub counts: GlobalCounts,
    pub extrinsic: Option<Vec<QTable>>,
}

impl Checkpoint {
    /// An untrained checkpoint for `views`.
    pub fn empty(views: ViewSpec, q_init: f64) -> Checkpoint {
        let n = views.len();
        Checkpoint {
            views,
            q_init,
            tables: vec![QTable::new(q_init); n],
            counts: GlobalCounts::new(n),
            extrinsic: None,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.views.len() as u16).to_le_bytes());
        out.extend_from_slice(&self.q_init.to_le_bytes());
        out.push(if self.extrinsic.is_some() {
            FLAG_EXTRINSIC
        } else {
            0
        });
        for d in self.views.dims() {
            out.push(d.width);
            out.push(d.height);
        }
        write_tables(&mut out, &self.tables);
        for i in 0..self.counts.num_views() {
            let sorted = self.counts.view(i).sorted();
            out.extend_from_slice(&(sorted.len() as u64).to_le_bytes());
            out.extend_from_slice(&self.counts.view(i).max().to_le_bytes());
            for (key, n) in sorted {
                out.extend_from_slice(&key.0.to_le_bytes());
                out.extend_from_slice(&n.to_le_bytes());
            }
        }
        if let Some(ext) = &self.extrinsic {
            write_tables(&mut out, ext);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = r.u16()?;
        if version != CHECKPOINT_VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let n = r.u16()? as usize;
        let q_init = r.f64()?;
        let flags = r.u8()?;
        if flags & !FLAG_EXTRINSIC != 0 {
            return Err(CheckpointError::Malformed(format!(
                "unknown flags {flags:#x}"
            )));
        }
        let mut dims = Vec::with_capacity(n);
        for _ in 0..n {
            dims.push(ViewDims::new(r.u8()?, r.u8()?));
        }
        let views = ViewSpec::new(dims).map_err(|e| CheckpointError::Malformed(e.to_string()))?;
        let tables = read_tables(&mut r, n, q_init)?;
        let mut counts = Vec::with_capacity(n);
        for _ in 0..n {
            let len = r.u64()?;
            let max = r.u64()?;
            let mut entries = Vec::new();
            let mut prev: Option<u64> = None;
            for _ in 0..len {
                let key = r.u64()?;
                let count = r.u64()?;
                if prev.is_some_and(|p| p >= key) {
                    return Err(CheckpointError::Malformed("count keys not sorted".into()));
                }
                if count == 0 {
                    return Err(CheckpointError::Malformed("zero count stored".into()));
                }
                prev = Some(key);
                entries.push((ObservationKey(key), count));
            }
            let view = ViewCounts::from_entries(entries);
            if view.max() != max {
                return Err(CheckpointError::Malformed("count maximum mismatch".into()));
            }
            counts.push(view);
        }
        let extrinsic = if flags & FLAG_EXTRINSIC != 0 {
            Some(read_tables(&mut r, n, q_init)?)
        } else {
            None
        };
        if r.pos != bytes.len() {
            return Err(CheckpointError::Malformed("trailing bytes".into()));
        }
        Ok(Checkpoint {
            views,
            q_init,
            tables,
            counts: GlobalCounts::from_views(counts),
            extrinsic,
        })
    }
}

fn write_tables(out: &mut Vec<u8>, tables: &[QTable]) {
    for t in tables {
        let rows = t.sorted_rows();
        out.extend_from_slice(&((rows.len() * Action::COUNT) as u64).to_le_bytes());
        for (key, row) in rows {
            for (a, v) in row.iter().enumerate() {
                out.extend_from_slice(&key.0.to_le_bytes());
                out.push(a as u8);
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
}

fn read_tables(r: &mut Reader<'_>, n: usize, q_init: f64) -> Result<Vec<QTable>, CheckpointError> {
    let mut tables = Vec::with_capacity(n);
    for _ in 0..n {
        let records = r.u64()?;
        if records % Action::COUNT as u64 != 0 {
            return Err(CheckpointError::Malformed("partial Q row".into()));
        }
        let mut table = QTable::new(q_init);
        let mut prev: Option<u64> = None;
        for _ in 0..records / Action::COUNT as u64 {
            let mut row = [0.0; Action::COUNT];
            let mut key = 0;
            for (a, slot) in row.iter_mut().enumerate() {
                let k = r.u64()?;
                if a == 0 {
                    if prev.is_some_and(|p| p >= k) {
                        return Err(CheckpointError::Malformed("Q keys not sorted".into()));
                    }
                    key = k;
                } else if k != key {
                    return Err(CheckpointError::Malformed("partial Q row".into()));
                }
                if r.u8()? as usize != a {
                    return Err(CheckpointError::Malformed("Q actions out of order".into()));
                }
                let v = r.f64()?;
                if !v.is_finite() {
                    return Err(CheckpointError::Malformed("non-finite Q value".into()));
                }
                *slot = v;
            }
            prev = Some(key);
            table.insert_row(ObservationKey(key), row);
        }
        tables.push(table);
    }
    Ok(tables)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).ok_or(CheckpointError::Truncated)?;
        let s = self
            .bytes
            .get(self.pos..end)
            .ok_or(CheckpointError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(
            self.take(2)?.try_into().expect("2 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}
