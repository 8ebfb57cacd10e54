//! Walsh–Hadamard kernels.
//!
//! `W = [[1, 1], [1, -1]]^{⊗n}` is kept unnormalized, so `W·W = 2^n·I`.
//! Entry `(v, u)` is `(-1)^{popcount(u & v)}`; row `v` corresponds to the
//! point whose `-1` coordinates are the set bits of `v`.

use rayon::prelude::*;

use crate::domain::{Label, ParityMask, Point, SampleSet};
use crate::error::{Error, Result};

/// Largest `n` accepted by [`fwht`] (a `2^26` buffer of `f64` is 512 MiB).
pub const MAX_TRANSFORM_DIM: u32 = 26;

/// A dense vector on `Z_2^n`, indexed by mask integer.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSpectrum {
    values: Vec<f64>,
}

impl DenseSpectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || !values.len().is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "length {} is not a power of two",
                values.len()
            )));
        }
        if values.len().trailing_zeros() > MAX_TRANSFORM_DIM {
            return Err(Error::InvalidArgument(format!(
                "length 2^{} exceeds the 2^{MAX_TRANSFORM_DIM} limit",
                values.len().trailing_zeros()
            )));
        }
        Ok(Self { values })
    }

    /// The standard basis vector `e_u` of length `2^n`.
    pub fn delta(n: u32, u: usize) -> Result<Self> {
        let len = 1usize
            .checked_shl(n)
            .ok_or_else(|| Error::InvalidArgument(format!("n = {n} too large")))?;
        if u >= len {
            return Err(Error::InvalidArgument(format!("index {u} >= {len}")));
        }
        let mut values = vec![0.0; len];
        values[u] = 1.0;
        Self::new(values)
    }

    pub fn dim(&self) -> u32 {
        self.values.len().trailing_zeros()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Unnormalized fast Walsh–Hadamard transform, `O(n·2^n)`.
pub fn fwht(v: &DenseSpectrum) -> DenseSpectrum {
    let mut values = v.values.clone();
    fwht_in_place(&mut values);
    DenseSpectrum { values }
}

/// In-place butterfly. Panics if the length is not a power of two.
pub fn fwht_in_place(data: &mut [f64]) {
    assert!(
        data.len().is_power_of_two(),
        "fwht length must be a power of two"
    );
    let mut half = 1;
    while half < data.len() {
        for block in data.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half *= 2;
    }
}

/// `χ_S(x) = ∏_{j∈S} x_j`.
pub fn parity_eval(mask: &ParityMask, x: &Point) -> Result<Label> {
    if mask.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: mask.dim(),
            actual: x.dim(),
        });
    }
    Ok(mask.chi(x))
}

/// All masks of Hamming weight `<= d`, by ascending weight then ascending value.
pub fn enumerate_low_degree(n: usize, d: usize) -> Result<Vec<ParityMask>> {
    if d > n {
        return Err(Error::InvalidArgument(format!(
            "degree {d} exceeds dimension {n}"
        )));
    }
    let mut masks = Vec::with_capacity(count_low_degree(n, d) as usize);
    masks.push(ParityMask::empty(n)?);
    for w in 1..=d {
        // Gosper's hack walks the weight-w subsets in increasing numeric order,
        // ending at the top w bits.
        let low = low_bits(w);
        let last = low << (n - w);
        let mut bits = low;
        loop {
            masks.push(ParityMask::new(bits, n)?);
            if bits == last {
                break;
            }
            let c = bits & bits.wrapping_neg();
            let r = bits + c;
            bits = (((r ^ bits) >> 2) / c) | r;
        }
    }
    Ok(masks)
}

fn low_bits(w: usize) -> u64 {
    if w >= 64 {
        u64::MAX
    } else {
        (1u64 << w) - 1
    }
}

/// `Σ_{i≤d} C(n, i)`.
pub fn count_low_degree(n: usize, d: usize) -> u64 {
    let mut total = 0u64;
    let mut binom = 1u64;
    for i in 0..=d.min(n) {
        if i > 0 {
            binom = binom * (n - i + 1) as u64 / i as u64;
        }
        total += binom;
    }
    total
}

/// `W_{x,S}ᵀ f_x`: for each mask, `Σ_i y_i χ_S(x_i)`.
///
/// Entries are exact integers. Masks are split across the rayon pool; each
/// entry is an independent sum so the result does not depend on the split.
pub fn correlate(sample: &SampleSet, masks: &[ParityMask]) -> Result<Vec<i64>> {
    if sample.is_empty() {
        return Err(Error::Empty("sample"));
    }
    let n = sample.dim();
    if let Some(bad) = masks.iter().find(|m| m.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: bad.dim(),
        });
    }
    // Split points by label so each entry is a difference of two parity counts.
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (x, &y) in sample.points().iter().zip(sample.labels()) {
        if y > 0 {
            pos.push(x.negative_bits());
        } else {
            neg.push(x.negative_bits());
        }
    }
    let signed_sum = |bits: u64, group: &[u64]| -> i64 {
        let odd = group
            .iter()
            .filter(|&&x| (x & bits).count_ones() & 1 == 1)
            .count() as i64;
        group.len() as i64 - 2 * odd
    };
    Ok(masks
        .par_iter()
        .with_min_len(16)
        .map(|m| signed_sum(m.bits(), &pos) - signed_sum(m.bits(), &neg))
        .collect())
}

/// The `ℓ × k` matrix of ±1 entries `χ_{S_t}(x_i)`, row-major.
pub fn design_matrix(points: &[Point], masks: &[ParityMask]) -> Vec<i8> {
    let mut out = Vec::with_capacity(points.len() * masks.len());
    for x in points {
        out.extend(masks.iter().map(|m| m.chi(x)));
    }
    out
}
