//! Linear hinge-loss training under an ℓ1 budget:
//!
//! ```text
//! minimize   Σ_i (1 − y_i (A z)_i)_+
//! subject to ‖z‖₁ ≤ τ
//! ```
//!
//! solved by projected subgradient descent with normalized steps of length
//! `step_scale / √t`. No intercept is fitted; the empty mask plays that role.

use crate::domain::Label;
use crate::error::{Error, Result};
use crate::features::SelectedFeatures;

/// Epochs over which the best objective must improve by `tolerance` (relative).
const STALL_WINDOW: usize = 500;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// ℓ1 budget.
    pub tau: f64,
    pub max_epochs: usize,
    /// Relative improvement of the best objective below which training stops.
    pub tolerance: f64,
    pub step_scale: f64,
    /// Carried for reproducibility records; the full-batch solver draws no randomness.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            tau: 1000.0,
            max_epochs: 2000,
            tolerance: 1e-6,
            step_scale: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidArgument("max_epochs must be >= 1".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if !(self.step_scale > 0.0 && self.step_scale.is_finite()) {
            return Err(Error::InvalidArgument("step_scale must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainResult {
    pub weights: Vec<f64>,
    /// Hinge sum at `weights`.
    pub objective: f64,
    pub epochs_used: usize,
    pub converged: bool,
}

fn check_shapes(design: &[i8], labels: &[Label], k: usize) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::Empty("labels"));
    }
    if k == 0 {
        return Err(Error::Empty("feature columns"));
    }
    if design.len() != labels.len() * k {
        return Err(Error::LengthMismatch {
            left: design.len(),
            right: labels.len() * k,
        });
    }
    Ok(())
}

/// `Σ_i max(0, 1 − y_i (A z)_i)` for a row-major `ℓ × k` matrix `A`, `k = z.len()`.
pub fn hinge_objective(z: &[f64], design: &[i8], labels: &[Label]) -> Result<f64> {
    check_shapes(design, labels, z.len())?;
    Ok(design
        .chunks_exact(z.len())
        .zip(labels)
        .map(|(row, &y)| {
            let s: f64 = row.iter().zip(z).map(|(&a, w)| f64::from(a) * w).sum();
            (1.0 - f64::from(y) * s).max(0.0)
        })
        .sum())
}

/// Euclidean projection onto `{w : ‖w‖₁ ≤ τ}`.
///
/// Soft-thresholds by the exact pivot `θ` found from the sorted magnitudes.
pub fn project_l1(v: &[f64], tau: f64) -> Vec<f64> {
    let norm: f64 = v.iter().map(|x| x.abs()).sum();
    if norm <= tau {
        return v.to_vec();
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in mags.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - tau) / (j + 1) as f64;
        if u > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    v.iter()
        .map(|&x| x.signum() * (x.abs() - theta).max(0.0))
        .collect()
}

/// Trains on the selected columns.
pub fn train(
    features: &SelectedFeatures,
    labels: &[Label],
    config: &TrainConfig,
) -> Result<TrainResult> {
    if labels.len() != features.rows() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: features.rows(),
        });
    }
    train_matrix(features.design(), labels, features.cols(), config)
}

/// Trains on an explicit row-major `ℓ × k` ±1 matrix.
pub fn train_matrix(
    design: &[i8],
    labels: &[Label],
    k: usize,
    config: &TrainConfig,
) -> Result<TrainResult> {
    config.validate()?;
    check_shapes(design, labels, k)?;
    for &y in labels {
        crate::domain::check_label(y)?;
    }
    let rows = labels.len();
    // Rows premultiplied by their labels: margin_i = <signed_i, z>.
    let signed: Vec<f64> = design
        .chunks_exact(k)
        .zip(labels)
        .flat_map(|(row, &y)| row.iter().map(move |&a| f64::from(a * y)))
        .collect();

    let mut z = vec![0.0; k];
    let mut grad = vec![0.0; k];
    let mut best_z = z.clone();
    let mut best_obj = rows as f64;
    let mut history = Vec::with_capacity(config.max_epochs + 1);
    let mut converged = false;
    let mut epochs_used = 0;

    for epoch in 1..=config.max_epochs {
        epochs_used = epoch;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut obj = 0.0;
        for row in signed.chunks_exact(k) {
            let margin: f64 = row.iter().zip(&z).map(|(a, w)| a * w).sum();
            if margin < 1.0 {
                obj += 1.0 - margin;
                for (g, a) in grad.iter_mut().zip(row) {
                    *g -= a;
                }
            }
        }
        if !obj.is_finite() {
            return Err(Error::NonFinite(format!("objective at epoch {epoch}")));
        }
        if obj < best_obj {
            best_obj = obj;
            best_z.copy_from_slice(&z);
        }
        history.push(best_obj);
        if best_obj == 0.0 {
            converged = true;
            break;
        }
        if history.len() > STALL_WINDOW {
            let before = history[history.len() - 1 - STALL_WINDOW];
            if before - best_obj <= config.tolerance * before {
                converged = true;
                break;
            }
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm == 0.0 {
            converged = true;
            break;
        }
        let step = config.step_scale / (epoch as f64).sqrt() / gnorm;
        let moved: Vec<f64> = z.iter().zip(&grad).map(|(w, g)| w - step * g).collect();
        z = project_l1(&moved, config.tau);
        if let Some(i) = z.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite(format!("weight {i} at epoch {epoch}")));
        }
    }

    // The last step is never scored inside the loop.
    let last = hinge_objective(&z, design, labels)?;
    if last < best_obj {
        best_obj = last;
        best_z = z;
    }
    Ok(TrainResult {
        weights: best_z,
        objective: best_obj,
        epochs_used,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn l1(v: &[f64]) -> f64 {
        v.iter().map(|x| x.abs()).sum()
    }

    fn l2_dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn hinge_examples() {
        let labels = [1i8, -1, 1];
        let design = [1i8, -1, 1];
        assert_eq!(hinge_objective(&[0.0], &design, &labels).unwrap(), 3.0);
        assert_eq!(hinge_objective(&[1.0], &design, &labels).unwrap(), 0.0);
        assert_eq!(hinge_objective(&[0.5], &[1, 1], &[1, -1]).unwrap(), 2.0);
        assert!(hinge_objective(&[0.5, 1.0], &[1, 1], &[1, -1]).is_err());
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_l1(&[0.2, -0.3], 1.0), vec![0.2, -0.3]);
        assert_eq!(project_l1(&[3.0, 0.0], 1.0), vec![1.0, 0.0]);
        assert_eq!(project_l1(&[2.0, 1.0], 1.0), vec![1.0, 0.0]);
        let p = project_l1(&[-2.0, 1.0, 0.5], 1.5);
        assert!((l1(&p) - 1.5).abs() < 1e-12);
        assert!(p[0] < 0.0);
    }

    #[test]
    fn separable_single_feature() {
        let labels = [1i8, -1, -1, 1, 1];
        let res = train_matrix(&labels, &labels, 1, &TrainConfig::default()).unwrap();
        assert!(res.weights[0] > 0.0);
        assert_eq!(res.objective, 0.0);
        assert!(res.converged);
    }

    #[test]
    fn antipodal_features() {
        let labels = [1i8, -1, 1, 1, -1, -1];
        let design: Vec<i8> = labels.iter().flat_map(|&y| [y, -y]).collect();
        let res = train_matrix(&design, &labels, 2, &TrainConfig::default()).unwrap();
        assert_eq!(res.objective, 0.0);
        assert!(res.weights[0] - res.weights[1] >= 1.0 - 1e-12);
        assert!(l1(&res.weights) <= 1000.0 + 1e-9);
    }

    #[test]
    fn tight_budget_is_respected() {
        let labels = [1i8, -1, 1, -1];
        let config = TrainConfig {
            tau: 0.25,
            ..TrainConfig::default()
        };
        let res = train_matrix(&labels, &labels, 1, &config).unwrap();
        assert!(l1(&res.weights) <= 0.25 + 1e-9);
        assert!((res.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn close_to_grid_search_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let (rows, k) = (30, 3);
        let design: Vec<i8> = (0..rows * k)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        let labels: Vec<i8> = (0..rows)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        let grid: Vec<f64> = (-20..=20).map(|i| f64::from(i) / 10.0).collect();
        let mut best = f64::INFINITY;
        for a in &grid {
            for b in &grid {
                for c in &grid {
                    best = best.min(hinge_objective(&[*a, *b, *c], &design, &labels).unwrap());
                }
            }
        }
        let res = train_matrix(&design, &labels, k, &TrainConfig::default()).unwrap();
        assert!(
            res.objective <= best * 1.02,
            "trainer {} vs grid {best}",
            res.objective
        );
    }

    #[test]
    fn rejects_invalid_config_and_shapes() {
        let bad = TrainConfig {
            tau: 0.0,
            ..TrainConfig::default()
        };
        assert!(train_matrix(&[1], &[1], 1, &bad).is_err());
        assert!(train_matrix(&[1, 1], &[1], 1, &TrainConfig::default()).is_err());
        assert!(train_matrix(&[1], &[2], 1, &TrainConfig::default()).is_err());
    }

    proptest! {
        #[test]
        fn projection_properties(
            u in proptest::collection::vec(-50.0f64..50.0, 1..20),
            shift in proptest::collection::vec(-5.0f64..5.0, 20),
            tau in 0.01f64..40.0,
        ) {
            let v: Vec<f64> = u.iter().zip(&shift).map(|(a, b)| a + b).collect();
            let pu = project_l1(&u, tau);
            let pv = project_l1(&v, tau);
            prop_assert!(l1(&pu) <= tau * (1.0 + 1e-12) + 1e-9);
            let again = project_l1(&pu, tau);
            prop_assert!(l2_dist(&again, &pu) <= 1e-9);
            prop_assert!(l2_dist(&pu, &pv) <= l2_dist(&u, &v) + 1e-9);
        }

        #[test]
        fn trainer_never_worse_than_zero(seed in any::<u64>(), rows in 1usize..40, k in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let design: Vec<i8> = (0..rows * k).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
            let labels: Vec<i8> = (0..rows).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
            let config = TrainConfig { max_epochs: 200, tau: 2.0, ..TrainConfig::default() };
            let res = train_matrix(&design, &labels, k, &config).unwrap();
            prop_assert!(res.objective <= rows as f64);
            prop_assert!(l1(&res.weights) <= 2.0 + 1e-9);
            let recomputed = hinge_objective(&res.weights, &design, &labels).unwrap();
            prop_assert!((recomputed - res.objective).abs() <= 1e-9 * rows as f64);
        }
    }
}
