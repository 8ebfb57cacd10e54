//! Learning Boolean classifiers whose Walsh–Hadamard spectra are `k`-sparse.
//!
//! A classifier is `x ↦ sign(Σ_i a_i ∏_{j∈S_i} x_j)` on `{±1}^n`. Training
//! restricts the index sets to Hamming weight `<= d`, screens the resulting
//! parity columns by their correlation with the labels, keeps `k` columns that
//! are distinct up to sign over the sample, and fits the coefficients with an
//! ℓ1-constrained hinge loss.
//!
//! ```
//! use kspectra::{generate_planted, select_features, train, TrainConfig};
//!
//! let (sample, _truth) = generate_planted(8, 2, 2, 400, 1).unwrap();
//! let features = select_features(&sample, 2, 10).unwrap();
//! let fit = train(&features, sample.labels(), &TrainConfig::default()).unwrap();
//! assert!(fit.objective <= sample.len() as f64);
//! ```

pub mod cache;
pub mod cli;
pub mod domain;
pub mod error;
pub mod experiment;
pub mod features;
pub mod mnist;
pub mod seeding;
pub mod svm;
pub mod theory;
pub mod wht;

pub use domain::{
    empirical_risk, sign, Label, LabeledPoint, ParityMask, Point, SampleSet, SparseClassifier,
};
pub use error::{Error, Result};
pub use experiment::{
    fit_and_score, generate_planted, run_final, run_sweep, run_trial, ClassPool, FinalConfig,
    FinalReport, SweepConfig, SweepOutput, SweepRecord,
};
pub use features::{select_features, SelectedFeatures};
pub use svm::{hinge_objective, project_l1, train, TrainConfig, TrainResult};
pub use wht::{correlate, enumerate_low_degree, fwht, parity_eval, DenseSpectrum};
