//! Correlation screening over low-degree parity columns.
//!
//! Columns `χ_S` restricted to the sample are ranked by `|W_{x,d}ᵀ f_x|` and
//! admitted greedily, skipping any column that equals (or negates) one already
//! admitted, until `k` distinct-up-to-sign columns are held.

use std::collections::HashSet;

use crate::domain::{ParityMask, Point, SampleSet};
use crate::error::{Error, Result};
use crate::wht::{correlate, enumerate_low_degree};

/// The `ℓ × k` design matrix of the selected parity columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectedFeatures {
    masks: Vec<ParityMask>,
    correlations: Vec<i64>,
    /// Row-major `rows × masks.len()`.
    design: Vec<i8>,
    rows: usize,
}

impl SelectedFeatures {
    /// Wraps explicit masks evaluated on `points` without screening.
    pub fn from_masks(points: &[Point], masks: Vec<ParityMask>) -> Result<Self> {
        if masks.is_empty() {
            return Err(Error::Empty("feature masks"));
        }
        if let Some(x) = points.first() {
            if let Some(m) = masks.iter().find(|m| m.dim() != x.dim()) {
                return Err(Error::DimensionMismatch {
                    expected: x.dim(),
                    actual: m.dim(),
                });
            }
        }
        let design = crate::wht::design_matrix(points, &masks);
        Ok(Self {
            correlations: vec![0; masks.len()],
            masks,
            design,
            rows: points.len(),
        })
    }

    pub fn masks(&self) -> &[ParityMask] {
        &self.masks
    }

    /// Sample correlation of each selected column with the labels.
    pub fn correlations(&self) -> &[i64] {
        &self.correlations
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.masks.len()
    }

    pub fn design(&self) -> &[i8] {
        &self.design
    }

    pub fn row(&self, i: usize) -> &[i8] {
        let k = self.cols();
        &self.design[i * k..(i + 1) * k]
    }

    pub fn column(&self, t: usize) -> Vec<i8> {
        (0..self.rows)
            .map(|i| self.design[i * self.cols() + t])
            .collect()
    }
}

/// Column of `χ_S` over the sample, packed 64 rows per word.
fn packed_column(points: &[Point], mask: &ParityMask) -> Vec<u64> {
    let mut words = vec![0u64; points.len().div_ceil(64)];
    for (i, x) in points.iter().enumerate() {
        if (mask.bits() & x.negative_bits()).count_ones() & 1 == 1 {
            words[i / 64] |= 1 << (i % 64);
        }
    }
    words
}

/// Flips a packed column so its first row is `+1`; columns that agree up to
/// a global sign share a canonical form.
fn canonicalize(mut words: Vec<u64>, rows: usize) -> Vec<u64> {
    if words.first().is_some_and(|w| w & 1 == 1) {
        for (i, w) in words.iter_mut().enumerate() {
            *w = !*w;
            let used = rows - i * 64;
            if used < 64 {
                *w &= (1u64 << used) - 1;
            }
        }
    }
    words
}

/// Greedy screening of all weight-`<= d` masks down to `k` distinct columns.
pub fn select_features(sample: &SampleSet, d: usize, k: usize) -> Result<SelectedFeatures> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if sample.is_empty() {
        return Err(Error::Empty("sample"));
    }
    let candidates = enumerate_low_degree(sample.dim(), d)?;
    let scores = correlate(sample, &candidates)?;

    // Stable sort keeps enumeration order among equal magnitudes.
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by_key(|&t| std::cmp::Reverse(scores[t].unsigned_abs()));

    let points = sample.points();
    let mut seen = HashSet::new();
    let mut masks = Vec::with_capacity(k);
    let mut correlations = Vec::with_capacity(k);
    for t in order {
        let mask = candidates[t];
        if seen.insert(canonicalize(packed_column(points, &mask), points.len())) {
            masks.push(mask);
            correlations.push(scores[t]);
            if masks.len() == k {
                break;
            }
        }
    }
    if masks.len() < k {
        return Err(Error::SelectionExhausted {
            requested: k,
            available: masks.len(),
        });
    }
    let design = crate::wht::design_matrix(points, &masks);
    Ok(SelectedFeatures {
        masks,
        correlations,
        design,
        rows: points.len(),
    })
}
