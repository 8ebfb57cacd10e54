//! Domain types shared by every stage of the pipeline.
//!
//! Points of `{±1}^n` and parity masks are both packed into a single `u64`
//! (hence `n <= 64`). A point stores the set of coordinates equal to `-1`,
//! so the character `χ_S(x) = ∏_{j∈S} x_j` is `(-1)^{|S ∩ neg(x)|}` and costs
//! one `AND` and one `popcount`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 64;

/// A ±1 label.
pub type Label = i8;

/// `sign` with the convention `sign(0) = +1`.
#[inline]
pub fn sign(value: f64) -> Label {
    if value < 0.0 {
        -1
    } else {
        1
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "dimension must be in 1..={MAX_DIM}, got {n}"
        )));
    }
    Ok(())
}

#[inline]
fn dim_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

pub(crate) fn check_label(label: Label) -> Result<()> {
    if label == 1 || label == -1 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "labels must be +1 or -1, got {label}"
        )))
    }
}

/// A subset `S ⊆ {0, .., n-1}`; bit `j` is set iff `j ∈ S`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParityMask {
    bits: u64,
    n: u8,
}

impl ParityMask {
    pub fn new(bits: u64, n: usize) -> Result<Self> {
        check_dim(n)?;
        if bits & !dim_mask(n) != 0 {
            return Err(Error::InvalidArgument(format!(
                "mask {bits:#x} does not fit in {n} bits"
            )));
        }
        Ok(Self { bits, n: n as u8 })
    }

    /// Builds a mask from zero-based coordinate indices.
    pub fn from_indices(indices: &[usize], n: usize) -> Result<Self> {
        check_dim(n)?;
        let mut bits = 0u64;
        for &j in indices {
            if j >= n {
                return Err(Error::InvalidArgument(format!(
                    "index {j} out of range for dimension {n}"
                )));
            }
            bits |= 1 << j;
        }
        Ok(Self { bits, n: n as u8 })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(0, n)
    }

    pub fn full(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self {
            bits: dim_mask(n),
            n: n as u8,
        })
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n as usize
    }

    /// `|S|`.
    #[inline]
    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn contains(&self, j: usize) -> bool {
        j < 64 && self.bits >> j & 1 == 1
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&j| self.contains(j)).collect()
    }

    /// Character value at `x` without the dimension check.
    #[inline]
    pub(crate) fn chi(&self, x: &Point) -> Label {
        if (self.bits & x.neg).count_ones() & 1 == 0 {
            1
        } else {
            -1
        }
    }
}

impl fmt::Display for ParityMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, j) in self.indices().into_iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}

/// A point of `{±1}^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Point {
    neg: u64,
    n: u8,
}

impl Point {
    pub fn from_signs(coords: &[i8]) -> Result<Self> {
        check_dim(coords.len())?;
        let mut neg = 0u64;
        for (j, &c) in coords.iter().enumerate() {
            match c {
                1 => {}
                -1 => neg |= 1 << j,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "coordinate {j} is {other}, expected +1 or -1"
                    )))
                }
            }
        }
        Ok(Self {
            neg,
            n: coords.len() as u8,
        })
    }

    /// Builds a point from the bit set of its `-1` coordinates.
    pub fn from_negative_bits(neg: u64, n: usize) -> Result<Self> {
        check_dim(n)?;
        if neg & !dim_mask(n) != 0 {
            return Err(Error::InvalidArgument(format!(
                "bits {neg:#x} do not fit in {n} coordinates"
            )));
        }
        Ok(Self { neg, n: n as u8 })
    }

    #[inline]
    pub fn negative_bits(&self) -> u64 {
        self.neg
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n as usize
    }

    pub fn coord(&self, j: usize) -> Label {
        if self.neg >> j & 1 == 1 {
            -1
        } else {
            1
        }
    }

    pub fn coords(&self) -> Vec<Label> {
        (0..self.dim()).map(|j| self.coord(j)).collect()
    }
}

/// A labeled point tagged with its position in the source dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LabeledPoint {
    pub id: u32,
    pub point: Point,
    pub label: Label,
}

/// Labeled points `(x_i, y_i)`, all of the same dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    points: Vec<Point>,
    labels: Vec<Label>,
    n: usize,
}

impl SampleSet {
    pub fn new(points: Vec<Point>, labels: Vec<Label>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("sample set"));
        }
        if points.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: points.len(),
                right: labels.len(),
            });
        }
        let n = points[0].dim();
        for p in &points {
            if p.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: p.dim(),
                });
            }
        }
        for &y in &labels {
            check_label(y)?;
        }
        Ok(Self { points, labels, n })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// The rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut points = Vec::with_capacity(indices.len());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::InvalidArgument(format!(
                    "row {i} out of range for {} samples",
                    self.len()
                )));
            }
            points.push(self.points[i]);
            labels.push(self.labels[i]);
        }
        Self::new(points, labels)
    }

    pub fn from_labeled(items: &[LabeledPoint]) -> Result<Self> {
        Self::new(
            items.iter().map(|it| it.point).collect(),
            items.iter().map(|it| it.label).collect(),
        )
    }

    /// Concatenates two sample sets of equal dimension.
    pub fn concat(&self, other: &SampleSet) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: other.n,
            });
        }
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Self::new(points, labels)
    }
}

/// `x ↦ sign(Σ_i a_i χ_{S_i}(x))` with pairwise distinct `S_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseClassifier {
    terms: Vec<(ParityMask, f64)>,
    n: usize,
}

impl SparseClassifier {
    pub fn new(n: usize, terms: Vec<(ParityMask, f64)>) -> Result<Self> {
        check_dim(n)?;
        if terms.is_empty() {
            return Err(Error::Empty("classifier terms"));
        }
        let mut seen = HashSet::with_capacity(terms.len());
        for (mask, coeff) in &terms {
            if mask.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: mask.dim(),
                });
            }
            if !coeff.is_finite() {
                return Err(Error::NonFinite(format!("coefficient of mask {mask}")));
            }
            if !seen.insert(mask.bits()) {
                return Err(Error::InvalidArgument(format!("duplicate mask {mask}")));
            }
        }
        Ok(Self { terms, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(ParityMask, f64)] {
        &self.terms
    }

    pub fn sparsity(&self) -> usize {
        self.terms.len()
    }

    pub fn masks(&self) -> impl Iterator<Item = ParityMask> + '_ {
        self.terms.iter().map(|(m, _)| *m)
    }

    /// The polynomial value `Σ_i a_i χ_{S_i}(x)` before taking the sign.
    pub fn score(&self, x: &Point) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.score_unchecked(x))
    }

    #[inline]
    fn score_unchecked(&self, x: &Point) -> f64 {
        self.terms
            .iter()
            .map(|(mask, a)| a * f64::from(mask.chi(x)))
            .sum()
    }

    pub fn evaluate(&self, x: &Point) -> Result<Label> {
        self.score(x).map(sign)
    }

    /// Labels for every point of a sample.
    pub fn predict(&self, points: &[Point]) -> Result<Vec<Label>> {
        points.iter().map(|x| self.evaluate(x)).collect()
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        if x.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: x.dim(),
            });
        }
        Ok(())
    }

    /// Text form: a header line `n k`, then one `mask_hex coefficient` line per term.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.terms.len());
        for (mask, coeff) in &self.terms {
            // `{:e}` prints the shortest representation that round-trips.
            out.push_str(&format!("{:x} {:e}\n", mask.bits(), coeff));
        }
        out
    }
}

impl FromStr for SparseClassifier {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("missing header line".into()))?;
        let mut fields = header.split_whitespace();
        let (n, k) = match (fields.next(), fields.next(), fields.next()) {
            (Some(n), Some(k), None) => (parse_usize(n, "n")?, parse_usize(k, "k")?),
            _ => return Err(Error::Format(format!("bad header line {header:?}"))),
        };
        let mut terms = Vec::with_capacity(k);
        for line in lines.by_ref().take(k) {
            let mut fields = line.split_whitespace();
            let (mask, coeff) = match (fields.next(), fields.next(), fields.next()) {
                (Some(m), Some(c), None) => (m, c),
                _ => return Err(Error::Format(format!("bad term line {line:?}"))),
            };
            let bits = u64::from_str_radix(mask, 16)
                .map_err(|e| Error::Format(format!("bad mask {mask:?}: {e}")))?;
            let coeff: f64 = coeff
                .parse()
                .map_err(|e| Error::Format(format!("bad coefficient {coeff:?}: {e}")))?;
            terms.push((ParityMask::new(bits, n)?, coeff));
        }
        if terms.len() != k {
            return Err(Error::Format(format!(
                "header declares {k} terms, found {}",
                terms.len()
            )));
        }
        if lines.next().is_some() {
            return Err(Error::Format("trailing lines after terms".into()));
        }
        Self::new(n, terms)
    }
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.parse()
        .map_err(|e| Error::Format(format!("bad {what} {s:?}: {e}")))
}

/// Fraction of positions where `predicted` and `actual` disagree.
pub fn empirical_risk(predicted: &[Label], actual: &[Label]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: actual.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::Empty("label lists"));
    }
    let wrong = predicted.iter().zip(actual).filter(|(p, a)| p != a).count();
    Ok(wrong as f64 / predicted.len() as f64)
}
