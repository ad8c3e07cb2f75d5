//! Compact binary prediction container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "MLPC1"
//! u32 len, model_id bytes
//! u32 len, dataset_id bytes
//! u32 num_classes
//! u32 depth
//! u64 record count
//! per record (ids ascending):
//!     u32 len, image id bytes
//!     u32 n
//!     n x (u32 class id, f32 score)   canonical rank order
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::predictions::PredictionDataset;

pub const MAGIC: &[u8; 5] = b"MLPC1";

pub fn write_binary<W: Write>(dataset: &PredictionDataset, mut out: W) -> std::io::Result<()> {
    out.write_all(MAGIC)?;
    write_str(&mut out, &dataset.model_id)?;
    write_str(&mut out, &dataset.dataset_id)?;
    out.write_all(&dataset.num_classes.to_le_bytes())?;
    out.write_all(&dataset.depth.to_le_bytes())?;
    out.write_all(&(dataset.len() as u64).to_le_bytes())?;
    for (id, ranking) in dataset.iter() {
        write_str(&mut out, id)?;
        out.write_all(&(ranking.len() as u32).to_le_bytes())?;
        for &(class, score) in ranking.entries() {
            out.write_all(&class.to_le_bytes())?;
            out.write_all(&score.to_le_bytes())?;
        }
    }
    Ok(())
}

fn write_str<W: Write>(out: &mut W, s: &str) -> std::io::Result<()> {
    out.write_all(&(s.len() as u32).to_le_bytes())?;
    out.write_all(s.as_bytes())
}

struct Cursor<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Cursor<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::Container(format!("truncated at byte {}: {e}", self.offset)))?;
        self.offset += N as u64;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let mut buf = vec![0u8; len];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::Container(format!("truncated string at byte {}: {e}", self.offset)))?;
        self.offset += len as u64;
        String::from_utf8(buf).map_err(|_| Error::Container(format!("invalid UTF-8 near byte {}", self.offset)))
    }
}

/// Reads a container; records go through the same validation as JSONL,
/// with the record ordinal (1-based) reported as the line.
pub fn read_binary<R: Read>(reader: R) -> Result<PredictionDataset> {
    let mut cur = Cursor { inner: reader, offset: 0 };
    if &cur.bytes::<5>()? != MAGIC {
        return Err(Error::Container("bad magic".into()));
    }
    let model_id = cur.string()?;
    let dataset_id = cur.string()?;
    let num_classes = cur.u32()?;
    let depth = cur.u32()?;
    let count = u64::from_le_bytes(cur.bytes()?);
    let mut dataset = PredictionDataset::new(model_id, dataset_id, num_classes, depth)?;
    for ordinal in 0..count {
        let id = cur.string()?;
        let n = cur.u32()? as usize;
        if n > depth as usize {
            return Err(Error::DepthViolation {
                line: ordinal as usize + 1,
                id,
                len: n,
                depth,
            });
        }
        let mut entries = Vec::with_capacity(n);
        for _ in 0..n {
            let class = cur.u32()?;
            let score = f32::from_le_bytes(cur.bytes()?);
            entries.push((class, score));
        }
        dataset.insert_at_line(ordinal as usize + 1, id, entries)?;
    }
    let mut trailing = [0u8; 1];
    if cur.inner.read(&mut trailing).map_err(|e| Error::Container(e.to_string()))? != 0 {
        return Err(Error::Container(format!("trailing bytes after {count} records")));
    }
    Ok(dataset)
}
