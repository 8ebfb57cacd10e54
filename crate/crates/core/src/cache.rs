//! Binary cache of a preprocessed ±1 dataset.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size | field                              |
//! |--------|------|------------------------------------|
//! | 0      | 4    | magic `KSPC`                       |
//! | 4      | 4    | format version (`u32`, currently 1)|
//! | 8      | 4    | dimension `n` (`u32`)              |
//! | 12     | 8    | binarization threshold (`f64`)     |
//! | 20     | 8    | record count (`u64`)               |
//! | 28     | 13·c | records                            |
//!
//! Each record is `id: u32`, `label: i8`, `negative_bits: u64`, where bit `j`
//! of `negative_bits` is set iff coordinate `j` equals `-1`.

use std::io::{Read, Write};

use crate::domain::{LabeledPoint, Point};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"KSPC";
pub const VERSION: u32 = 1;
const RECORD_LEN: usize = 13;

#[derive(Clone, Debug, PartialEq)]
pub struct CachedDataset {
    pub dim: usize,
    pub threshold: f64,
    pub items: Vec<LabeledPoint>,
}

pub fn write_cache<W: Write>(out: &mut W, data: &CachedDataset) -> Result<()> {
    out.write_all(&MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(data.dim as u32).to_le_bytes())?;
    out.write_all(&data.threshold.to_le_bytes())?;
    out.write_all(&(data.items.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(data.items.len() * RECORD_LEN);
    for it in &data.items {
        if it.point.dim() != data.dim {
            return Err(Error::DimensionMismatch {
                expected: data.dim,
                actual: it.point.dim(),
            });
        }
        buf.extend_from_slice(&it.id.to_le_bytes());
        buf.extend_from_slice(&it.label.to_le_bytes());
        buf.extend_from_slice(&it.point.negative_bits().to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_cache<R: Read>(input: &mut R) -> Result<CachedDataset> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let field = |range: std::ops::Range<usize>| {
        bytes
            .get(range)
            .ok_or_else(|| Error::Format("truncated cache header".into()))
    };
    if field(0..4)? != MAGIC {
        return Err(Error::Format("not a dataset cache (bad magic)".into()));
    }
    let version = u32::from_le_bytes(field(4..8)?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported cache version {version}, expected {VERSION}"
        )));
    }
    let dim = u32::from_le_bytes(field(8..12)?.try_into().unwrap()) as usize;
    let threshold = f64::from_le_bytes(field(12..20)?.try_into().unwrap());
    let count = u64::from_le_bytes(field(20..28)?.try_into().unwrap()) as usize;
    let body = &bytes[28..];
    if body.len() != count * RECORD_LEN {
        return Err(Error::Format(format!(
            "cache body holds {} bytes, expected {} for {count} records",
            body.len(),
            count * RECORD_LEN
        )));
    }
    let items = body
        .chunks_exact(RECORD_LEN)
        .map(|rec| {
            let id = u32::from_le_bytes(rec[0..4].try_into().unwrap());
            let label = rec[4] as i8;
            if label != 1 && label != -1 {
                return Err(Error::Format(format!("record {id} has label {label}")));
            }
            let bits = u64::from_le_bytes(rec[5..13].try_into().unwrap());
            let point = Point::from_negative_bits(bits, dim)
                .map_err(|e| Error::Format(format!("record {id}: {e}")))?;
            Ok(LabeledPoint { id, point, label })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CachedDataset {
        dim,
        threshold,
        items,
    })
}
