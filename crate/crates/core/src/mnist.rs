//! MNIST ingestion: IDX parsing, 5×5 block downsampling and ±1 binarization.
//!
//! IDX files carry big-endian `u32` header fields: the magic number, the item
//! count and, for images, the row and column counts. Gzip-compressed files are
//! detected by their leading `1f 8b` bytes.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::domain::{Label, LabeledPoint, Point};
use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;
pub const SIDE: usize = 28;
pub const BLOCK: usize = 5;
pub const GRID: usize = 5;

/// Top-left corners of the sampled blocks, `round(i·23/4)` for `i = 0..5`.
pub const GRID_OFFSETS: [usize; GRID] = [0, 6, 12, 17, 23];

pub const DEFAULT_THRESHOLD: f64 = 0.15;

/// One 28×28 digit; pixels are kept as bytes and scaled to `[0, 1]` by `/255`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawImage {
    bytes: Vec<u8>,
    label: u8,
}

impl RawImage {
    pub fn new(bytes: Vec<u8>, label: u8) -> Result<Self> {
        if bytes.len() != SIDE * SIDE {
            return Err(Error::Format(format!(
                "image has {} pixels, expected {}",
                bytes.len(),
                SIDE * SIDE
            )));
        }
        if label > 9 {
            return Err(Error::Format(format!("digit label {label} out of range")));
        }
        Ok(Self { bytes, label })
    }

    pub fn label(&self) -> u8 {
        self.label
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Row-major pixel intensities in `[0, 1]`.
    pub fn pixels(&self) -> Vec<f64> {
        self.bytes.iter().map(|&b| f64::from(b) / 255.0).collect()
    }
}

fn read_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format(format!("truncated stream: missing {what}")))
}

/// Parses an image stream and a label stream, preserving file order.
pub fn parse_idx(image_bytes: &[u8], label_bytes: &[u8]) -> Result<Vec<RawImage>> {
    let magic = read_u32(image_bytes, 0, "image magic")?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "bad image magic {magic}, expected {IMAGE_MAGIC}"
        )));
    }
    let magic = read_u32(label_bytes, 0, "label magic")?;
    if magic != LABEL_MAGIC {
        return Err(Error::Format(format!(
            "bad label magic {magic}, expected {LABEL_MAGIC}"
        )));
    }
    let count = read_u32(image_bytes, 4, "image count")? as usize;
    let rows = read_u32(image_bytes, 8, "row count")? as usize;
    let cols = read_u32(image_bytes, 12, "column count")? as usize;
    let label_count = read_u32(label_bytes, 4, "label count")? as usize;
    if count != label_count {
        return Err(Error::Format(format!(
            "count mismatch: {count} images vs {label_count} labels"
        )));
    }
    if rows != SIDE || cols != SIDE {
        return Err(Error::Format(format!(
            "images are {rows}x{cols}, expected {SIDE}x{SIDE}"
        )));
    }
    let pixels = &image_bytes[16..];
    let labels = &label_bytes[8..];
    let size = rows * cols;
    if pixels.len() < count * size {
        return Err(Error::Format(format!(
            "truncated stream: {} pixel bytes for {count} images of {size}",
            pixels.len()
        )));
    }
    if labels.len() < count {
        return Err(Error::Format(format!(
            "truncated stream: {} label bytes for {count} labels",
            labels.len()
        )));
    }
    pixels
        .chunks_exact(size)
        .take(count)
        .zip(labels)
        .map(|(img, &label)| RawImage::new(img.to_vec(), label))
        .collect()
}

/// Reads a file, inflating it when it is gzip-compressed.
pub fn read_maybe_gzip(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path)
        .map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::Format(format!("bad gzip stream in {}: {e}", path.display())))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

pub fn load_idx(images: &Path, labels: &Path) -> Result<Vec<RawImage>> {
    parse_idx(&read_maybe_gzip(images)?, &read_maybe_gzip(labels)?)
}

/// Means of the 5×5 blocks at [`GRID_OFFSETS`] × [`GRID_OFFSETS`], row-major.
pub fn downsample(pixels: &[f64]) -> Result<[f64; GRID * GRID]> {
    if pixels.len() != SIDE * SIDE {
        return Err(Error::InvalidArgument(format!(
            "expected {} pixels, got {}",
            SIDE * SIDE,
            pixels.len()
        )));
    }
    let mut out = [0.0; GRID * GRID];
    for (gr, &r0) in GRID_OFFSETS.iter().enumerate() {
        for (gc, &c0) in GRID_OFFSETS.iter().enumerate() {
            let mut sum = 0.0;
            for r in r0..r0 + BLOCK {
                sum += pixels[r * SIDE + c0..r * SIDE + c0 + BLOCK]
                    .iter()
                    .sum::<f64>();
            }
            out[gr * GRID + gc] = sum / (BLOCK * BLOCK) as f64;
        }
    }
    Ok(out)
}

/// `+1` where the block mean exceeds `threshold`, `-1` otherwise.
pub fn binarize(block_means: &[f64; GRID * GRID], threshold: f64) -> Point {
    let mut neg = 0u64;
    for (j, &v) in block_means.iter().enumerate() {
        if v <= threshold {
            neg |= 1 << j;
        }
    }
    Point::from_negative_bits(neg, GRID * GRID).expect("25 coordinates fit in a word")
}

/// Zeros map to `-1`, ones to `+1`.
pub fn label_map(digit: u8) -> Result<Label> {
    match digit {
        0 => Ok(-1),
        1 => Ok(1),
        other => Err(Error::InvalidArgument(format!(
            "digit {other} is not part of the zero-vs-one task"
        ))),
    }
}

/// Keeps digits 0 and 1 and maps each to a point of `{±1}^25`.
pub fn preprocess(images: &[RawImage], threshold: f64) -> Result<Vec<LabeledPoint>> {
    images
        .iter()
        .enumerate()
        .filter(|(_, img)| img.label() <= 1)
        .map(|(i, img)| {
            let means = downsample(&img.pixels())?;
            Ok(LabeledPoint {
                id: i as u32,
                point: binarize(&means, threshold),
                label: label_map(img.label())?,
            })
        })
        .collect()
}
