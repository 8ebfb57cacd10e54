//! Desk-scale checks of the learning-theory statements: the VC confidence
//! term, the explicit shattering construction for parities, and Monte Carlo
//! lower bounds on the number of sign patterns of `k`-sparse spectra.

use std::collections::HashSet;

use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::domain::{sign, Label};
use crate::error::{Error, Result};
use crate::seeding::rng_for;
use crate::wht::{fwht_in_place, DenseSpectrum};

/// Largest `n` for the enumeration-based checks (`2^n` sign bits per pattern).
pub const MAX_SMALL_DIM: u32 = 6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundParams {
    /// VC dimension (or an estimate of it).
    pub h: f64,
    /// Training-set size.
    pub ell: usize,
    /// Failure probability.
    pub eta: f64,
}

impl BoundParams {
    pub fn new(h: f64, ell: usize, eta: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "h must be positive, got {h}"
            )));
        }
        if ell == 0 {
            return Err(Error::InvalidArgument("ell must be at least 1".into()));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "eta must lie in (0, 1), got {eta}"
            )));
        }
        Ok(Self { h, ell, eta })
    }

    /// The bound is only informative once the sample outnumbers the VC dimension.
    pub fn is_sample_sufficient(&self) -> bool {
        self.ell as f64 >= self.h
    }
}

/// `sqrt((h (ln(2ℓ/h) + 1) − ln(η/4)) / ℓ)`.
pub fn vc_bound_term(p: &BoundParams) -> Result<f64> {
    let ell = p.ell as f64;
    let radicand = (p.h * ((2.0 * ell / p.h).ln() + 1.0) - (p.eta / 4.0).ln()) / ell;
    if radicand.is_nan() || radicand <= 0.0 {
        return Err(Error::NonFinite(format!(
            "non-positive radicand {radicand} for h={}, ell={}, eta={}",
            p.h, p.ell, p.eta
        )));
    }
    Ok(radicand.sqrt())
}

fn kron(a: &[i8], b: &[i8]) -> Vec<i8> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| x * y))
        .collect()
}

/// Explicit `2^n × 2^n` transform matrix, rows as vectors, built column by
/// column from transformed basis vectors.
fn transform_matrix(n: u32) -> Result<Vec<Vec<i8>>> {
    let size = 1usize << n;
    let mut rows = vec![vec![0i8; size]; size];
    for u in 0..size {
        let col = crate::wht::fwht(&DenseSpectrum::delta(n, u)?);
        for (row, &value) in rows.iter_mut().zip(col.values()) {
            row[u] = value as i8;
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShatterReport {
    /// Row indices of the transform selected by the construction.
    pub rows: Vec<usize>,
    /// Distinct labelings of those rows realized by 1-sparse sign patterns.
    pub realized: usize,
    /// `2^n`.
    pub total: usize,
}

impl ShatterReport {
    pub fn is_shattered(&self) -> bool {
        self.realized == self.total
    }
}

/// Picks the rows `(1,1)^{⊗(i−1)} ⊗ (1,−1) ⊗ (1,1)^{⊗(n−i)}` and counts the
/// labelings of them produced by `sign(W e_u)` over every `u`.
pub fn shattering_report(n: u32) -> Result<ShatterReport> {
    if !(1..=MAX_SMALL_DIM).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "n must be in 1..={MAX_SMALL_DIM}, got {n}"
        )));
    }
    let matrix = transform_matrix(n)?;
    let mut rows = Vec::with_capacity(n as usize);
    for i in 1..=n {
        let mut w = vec![1i8];
        for factor in 1..=n {
            let piece: [i8; 2] = if factor == i { [1, -1] } else { [1, 1] };
            w = kron(&w, &piece);
        }
        let row = matrix
            .iter()
            .position(|r| *r == w)
            .ok_or_else(|| Error::InvalidArgument(format!("row w_{i} not found")))?;
        rows.push(row);
    }
    let size = 1usize << n;
    let labelings: HashSet<Vec<Label>> = (0..size)
        .map(|u| {
            rows.iter()
                .map(|&v| sign(f64::from(matrix[v][u])))
                .collect()
        })
        .collect();
    Ok(ShatterReport {
        rows,
        realized: labelings.len(),
        total: 1 << n,
    })
}

/// Whether the construction shatters its `n` points.
pub fn verify_shattering_construction(n: u32) -> Result<bool> {
    Ok(shattering_report(n)?.is_shattered())
}

/// Counts distinct `sign(W z)` over `trials` random `k`-sparse `z` with
/// uniform support and standard normal coefficients.
pub fn sample_class_size(n: u32, k: usize, trials: usize, seed: u64) -> Result<usize> {
    if !(1..=MAX_SMALL_DIM).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "n must be in 1..={MAX_SMALL_DIM}, got {n}"
        )));
    }
    let size = 1usize << n;
    if k == 0 || k > size {
        return Err(Error::InvalidArgument(format!(
            "k must be in 1..={size}, got {k}"
        )));
    }
    let patterns: HashSet<u64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_for(seed, &[t]);
            let mut z = vec![0.0; size];
            for u in index::sample(&mut rng, size, k) {
                z[u] = StandardNormal.sample(&mut rng);
            }
            fwht_in_place(&mut z);
            sign_pattern(&z)
        })
        .collect();
    Ok(patterns.len())
}

/// Packs `sign(v)` into bits, bit `i` set iff `v_i < 0`.
fn sign_pattern(v: &[f64]) -> u64 {
    v.iter()
        .enumerate()
        .filter(|(_, &x)| sign(x) < 0)
        .fold(0, |acc, (i, _)| acc | 1 << i)
}

/// `C(2^{n+1}, k)²`, the counting bound on the class size.
pub fn class_size_upper_bound(n: u32, k: usize) -> f64 {
    let top = f64::from(1u32 << (n + 1));
    let binom = (0..k).fold(1.0, |acc, i| acc * (top - i as f64) / (i + 1) as f64);
    binom * binom
}
