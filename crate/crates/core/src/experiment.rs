//! Experiment drivers: repeated random splits over a `k` grid, a single large
//! final run, and planted synthetic models with known spectra.

use std::collections::HashSet;
use std::io::Write;
use std::time::Instant;

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domain::{
    empirical_risk, Label, LabeledPoint, ParityMask, Point, SampleSet, SparseClassifier,
};
use crate::error::{Error, Result};
use crate::features::select_features;
use crate::seeding::{derive_seed, rng_for};
use crate::svm::{train, TrainConfig, TrainResult};
use crate::theory::{vc_bound_term, BoundParams};
use crate::wht::enumerate_low_degree;

/// Confidence level used for the bound column of the summary.
pub const SUMMARY_ETA: f64 = 0.05;

/// Items split by label, each class sampled independently.
#[derive(Clone, Debug)]
pub struct ClassPool {
    negatives: Vec<LabeledPoint>,
    positives: Vec<LabeledPoint>,
    dim: usize,
}

impl ClassPool {
    pub fn new(items: &[LabeledPoint]) -> Result<Self> {
        let first = items.first().ok_or(Error::Empty("pool"))?;
        let dim = first.point.dim();
        let mut negatives = Vec::new();
        let mut positives = Vec::new();
        for it in items {
            if it.point.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: it.point.dim(),
                });
            }
            match it.label {
                -1 => negatives.push(*it),
                1 => positives.push(*it),
                other => return Err(Error::Format(format!("label {other} is not +1 or -1"))),
            }
        }
        Ok(Self {
            negatives,
            positives,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_sizes(&self) -> (usize, usize) {
        (self.negatives.len(), self.positives.len())
    }

    /// Disjoint uniform draws of `train` and `test` items from each class.
    pub fn split(
        &self,
        train: usize,
        test: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Vec<LabeledPoint>, Vec<LabeledPoint>)> {
        let mut train_items = Vec::with_capacity(2 * train);
        let mut test_items = Vec::with_capacity(2 * test);
        for (class, items) in [(-1i8, &self.negatives), (1, &self.positives)] {
            if items.len() < train + test {
                return Err(Error::InsufficientPool {
                    class,
                    available: items.len(),
                    required: train + test,
                });
            }
            let picked = index::sample(rng, items.len(), train + test).into_vec();
            train_items.extend(picked[..train].iter().map(|&i| items[i]));
            test_items.extend(picked[train..].iter().map(|&i| items[i]));
        }
        let train_ids: HashSet<u32> = train_items.iter().map(|it| it.id).collect();
        if train_ids.len() != train_items.len()
            || test_items.iter().any(|it| train_ids.contains(&it.id))
        {
            return Err(Error::InvalidArgument(
                "train and test draws overlap; pool ids must be unique".into(),
            ));
        }
        Ok((train_items, test_items))
    }
}

/// A trained classifier with its scores on a train and a test set.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub classifier: SparseClassifier,
    pub training: TrainResult,
    pub train_error: f64,
    pub test_error: f64,
    pub test_predictions: Vec<Label>,
}

/// Screens `k` features of degree `<= d` on `train`, fits the hinge model and
/// scores both sets.
pub fn fit_and_score(
    train_set: &SampleSet,
    test_set: &SampleSet,
    d: usize,
    k: usize,
    config: &TrainConfig,
) -> Result<Evaluation> {
    let features = select_features(train_set, d, k)?;
    let training = train(&features, train_set.labels(), config)?;
    let terms = features
        .masks()
        .iter()
        .copied()
        .zip(training.weights.iter().copied())
        .collect();
    let classifier = SparseClassifier::new(train_set.dim(), terms)?;
    let train_pred = classifier.predict(train_set.points())?;
    let test_predictions = classifier.predict(test_set.points())?;
    Ok(Evaluation {
        train_error: empirical_risk(&train_pred, train_set.labels())?,
        test_error: empirical_risk(&test_predictions, test_set.labels())?,
        classifier,
        training,
        test_predictions,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub k_values: Vec<usize>,
    pub trials_per_k: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub d: usize,
    pub train: TrainConfig,
    pub root_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            k_values: (10..=280).step_by(10).collect(),
            trials_per_k: 10,
            train_per_class: 1500,
            test_per_class: 2500,
            d: 3,
            train: TrainConfig::default(),
            root_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub k: usize,
    pub trial: usize,
    pub train_error: f64,
    pub test_error: f64,
    pub wall_seconds: f64,
}

impl SweepRecord {
    pub fn gap(&self) -> f64 {
        self.test_error - self.train_error
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub k: usize,
    pub mean_test: f64,
    /// Sample standard deviation (zero for a single trial).
    pub std_test: f64,
    pub mean_train: f64,
    pub mean_gap: f64,
    /// VC term at `h = 2·n·k`, `ℓ` = training-set size, `η` = [`SUMMARY_ETA`];
    /// `None` where the formula is undefined.
    pub bound_term: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub summary: Vec<SummaryRow>,
}

/// One random split at sparsity `k`; the split is seeded from `(root, k, trial)`.
pub fn run_trial(
    pool: &ClassPool,
    k: usize,
    trial: usize,
    cfg: &SweepConfig,
) -> Result<SweepRecord> {
    let start = Instant::now();
    let mut rng = rng_for(cfg.root_seed, &[k as u64, trial as u64]);
    let (train_items, test_items) =
        pool.split(cfg.train_per_class, cfg.test_per_class, &mut rng)?;
    let train_set = SampleSet::from_labeled(&train_items)?;
    let test_set = SampleSet::from_labeled(&test_items)?;
    let train_cfg = TrainConfig {
        seed: derive_seed(cfg.root_seed, &[k as u64, trial as u64, 1]),
        ..cfg.train.clone()
    };
    let eval = fit_and_score(&train_set, &test_set, cfg.d, k, &train_cfg)?;
    Ok(SweepRecord {
        k,
        trial,
        train_error: eval.train_error,
        test_error: eval.test_error,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// All `(k, trial)` pairs, run in parallel and reported sorted by `(k, trial)`.
pub fn run_sweep(pool: &ClassPool, cfg: &SweepConfig) -> Result<SweepOutput> {
    if cfg.k_values.is_empty() || cfg.trials_per_k == 0 {
        return Err(Error::InvalidArgument(
            "sweep needs at least one k and one trial".into(),
        ));
    }
    if cfg.test_per_class == 0 || cfg.train_per_class == 0 {
        return Err(Error::InvalidArgument(
            "train and test sizes must be positive".into(),
        ));
    }
    cfg.train.validate()?;
    let jobs: Vec<(usize, usize)> = cfg
        .k_values
        .iter()
        .flat_map(|&k| (0..cfg.trials_per_k).map(move |t| (k, t)))
        .collect();
    let mut records = jobs
        .par_iter()
        .map(|&(k, t)| run_trial(pool, k, t, cfg))
        .collect::<Result<Vec<_>>>()?;
    records.sort_by_key(|r| (r.k, r.trial));
    let summary = summarize(&records, pool.dim(), 2 * cfg.train_per_class);
    Ok(SweepOutput { records, summary })
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// Per-`k` means in ascending `k`.
pub fn summarize(records: &[SweepRecord], dim: usize, train_size: usize) -> Vec<SummaryRow> {
    let mut ks: Vec<usize> = records.iter().map(|r| r.k).collect();
    ks.sort_unstable();
    ks.dedup();
    ks.into_iter()
        .map(|k| {
            let rows: Vec<&SweepRecord> = records.iter().filter(|r| r.k == k).collect();
            let test: Vec<f64> = rows.iter().map(|r| r.test_error).collect();
            let train: Vec<f64> = rows.iter().map(|r| r.train_error).collect();
            let gap: Vec<f64> = rows.iter().map(|r| r.gap()).collect();
            let bound_term = BoundParams::new((2 * dim * k) as f64, train_size.max(1), SUMMARY_ETA)
                .and_then(|p| vc_bound_term(&p))
                .ok();
            SummaryRow {
                k,
                mean_test: mean(&test),
                std_test: sample_std(&test),
                mean_train: mean(&train),
                mean_gap: mean(&gap),
                bound_term,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FinalConfig {
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub k: usize,
    pub d: usize,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for FinalConfig {
    fn default() -> Self {
        Self {
            train_per_class: 4000,
            test_per_class: 1900,
            k: 150,
            d: 3,
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FinalReport {
    pub train_error: f64,
    pub test_error: f64,
    pub test_size: usize,
    /// Pool ids of the misclassified test items, ascending.
    pub misclassified: Vec<u32>,
    pub wall_seconds: f64,
    pub classifier: SparseClassifier,
}

/// Trains once on a large split; the test items come from the remainder.
pub fn run_final(pool: &ClassPool, cfg: &FinalConfig) -> Result<FinalReport> {
    if cfg.test_per_class == 0 {
        return Err(Error::InvalidArgument(
            "test_per_class must be positive".into(),
        ));
    }
    if cfg.train_per_class == 0 {
        return Err(Error::InvalidArgument(
            "train_per_class must be positive".into(),
        ));
    }
    let start = Instant::now();
    let mut rng = rng_for(cfg.seed, &[cfg.k as u64]);
    let (train_items, test_items) =
        pool.split(cfg.train_per_class, cfg.test_per_class, &mut rng)?;
    let train_set = SampleSet::from_labeled(&train_items)?;
    let test_set = SampleSet::from_labeled(&test_items)?;
    let eval = fit_and_score(&train_set, &test_set, cfg.d, cfg.k, &cfg.train)?;
    let mut misclassified: Vec<u32> = test_items
        .iter()
        .zip(&eval.test_predictions)
        .filter(|(it, &p)| it.label != p)
        .map(|(it, _)| it.id)
        .collect();
    misclassified.sort_unstable();
    Ok(FinalReport {
        train_error: eval.train_error,
        test_error: eval.test_error,
        test_size: test_items.len(),
        misclassified,
        wall_seconds: start.elapsed().as_secs_f64(),
        classifier: eval.classifier,
    })
}

fn uniform_points(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Point>> {
    let keep = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    (0..count)
        .map(|_| Point::from_negative_bits(rng.random::<u64>() & keep, n))
        .collect()
}

/// Uniform points of `{±1}^n` labeled by `truth`.
pub fn sample_labeled_by(truth: &SparseClassifier, count: usize, seed: u64) -> Result<SampleSet> {
    let mut rng = rng_for(seed, &[0x7e57]);
    let points = uniform_points(truth.dim(), count, &mut rng)?;
    let labels = truth.predict(&points)?;
    SampleSet::new(points, labels)
}

/// Draws a `k`-term truth of degree `<= d` and `ell` uniform points labeled by it.
///
/// Coefficients have magnitude uniform in `[0.5, 1.5]` and a random sign; a
/// coefficient vector whose polynomial vanishes on a drawn point is redrawn.
pub fn generate_planted(
    n: usize,
    k: usize,
    d: usize,
    ell: usize,
    seed: u64,
) -> Result<(SampleSet, SparseClassifier)> {
    let candidates = enumerate_low_degree(n, d)?;
    if k == 0 || k > candidates.len() {
        return Err(Error::InvalidArgument(format!(
            "k must be in 1..={}, got {k}",
            candidates.len()
        )));
    }
    let mut rng = rng_for(seed, &[n as u64, k as u64, d as u64]);
    let masks: Vec<ParityMask> = index::sample(&mut rng, candidates.len(), k)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    let points = uniform_points(n, ell, &mut rng)?;
    loop {
        let terms = masks
            .iter()
            .map(|&m| {
                let magnitude = rng.random_range(0.5..=1.5);
                let a = if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                };
                (m, a)
            })
            .collect();
        let truth = SparseClassifier::new(n, terms)?;
        let mut labels = Vec::with_capacity(points.len());
        let mut degenerate = false;
        for x in &points {
            let s = truth.score(x)?;
            if s == 0.0 {
                degenerate = true;
                break;
            }
            labels.push(crate::domain::sign(s));
        }
        if !degenerate {
            return Ok((SampleSet::new(points, labels)?, truth));
        }
    }
}

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

/// Writes `k,trial,train_error,test_error,wall_seconds`; timings are written
/// as zero when `with_timing` is false so repeated runs compare byte-for-byte.
pub fn write_sweep_csv<W: Write>(
    out: &mut W,
    records: &[SweepRecord],
    with_timing: bool,
) -> Result<()> {
    writeln!(out, "k,trial,train_error,test_error,wall_seconds")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.k,
            r.trial,
            fmt6(r.train_error),
            fmt6(r.test_error),
            fmt6(if with_timing { r.wall_seconds } else { 0.0 })
        )?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(out: &mut W, summary: &[SummaryRow]) -> Result<()> {
    writeln!(out, "k,mean_test,std_test,mean_train,mean_gap,bound_term")?;
    for s in summary {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            s.k,
            fmt6(s.mean_test),
            fmt6(s.std_test),
            fmt6(s.mean_train),
            fmt6(s.mean_gap),
            s.bound_term.map_or_else(|| "nan".to_string(), fmt6)
        )?;
    }
    Ok(())
}

/// `key: value` lines followed by the misclassified ids, one per line.
pub fn write_final_report<W: Write>(
    out: &mut W,
    cfg: &FinalConfig,
    report: &FinalReport,
    with_timing: bool,
) -> Result<()> {
    writeln!(out, "k: {}", cfg.k)?;
    writeln!(out, "d: {}", cfg.d)?;
    writeln!(out, "tau: {}", fmt6(cfg.train.tau))?;
    writeln!(out, "train_per_class: {}", cfg.train_per_class)?;
    writeln!(out, "test_per_class: {}", cfg.test_per_class)?;
    writeln!(out, "seed: {}", cfg.seed)?;
    writeln!(out, "train_error: {}", fmt6(report.train_error))?;
    writeln!(out, "test_error: {}", fmt6(report.test_error))?;
    writeln!(out, "misclassified_count: {}", report.misclassified.len())?;
    writeln!(
        out,
        "wall_seconds: {}",
        fmt6(if with_timing {
            report.wall_seconds
        } else {
            0.0
        })
    )?;
    writeln!(out, "misclassified_indices:")?;
    for id in &report.misclassified {
        writeln!(out, "{id}")?;
    }
    Ok(())
}
