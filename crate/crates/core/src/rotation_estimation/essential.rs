//! Essential matrix from calibrated correspondences.
//!
//! The model step is the normalized eight-point algorithm followed by
//! projection onto the essential manifold; RANSAC wraps it with a seeded
//! sampler so results are reproducible.

use nalgebra::{DMatrix, Matrix3, Vector2, Vector3};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Recorded in run metadata.
pub const ESSENTIAL_SOLVER: &str = "normalized-eight-point + essential-manifold projection";

pub const MIN_SAMPLE: usize = 8;

/// A correspondence in normalized camera coordinates: `(previous, next)`.
pub type NormalizedPair = (Vector2<f64>, Vector2<f64>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacConfig {
    pub max_iterations: usize,
    /// Symmetric epipolar distance threshold in normalized units.
    pub threshold: f64,
    /// Early-exit confidence for the adaptive iteration bound.
    pub confidence: f64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            threshold: 1e-3,
            confidence: 0.999,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EssentialEstimate {
    pub e: Matrix3<f64>,
    pub inliers: Vec<usize>,
}

/// Project onto the essential manifold: singular values `(s, s, 0)` with
/// `s` the mean of the two largest.
pub fn project_to_essential(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let s = 0.5 * (svd.singular_values[0] + svd.singular_values[1]);
    u * Matrix3::from_diagonal(&Vector3::new(s, s, 0.0)) * v_t
}

/// Isotropic similarity taking the points to zero mean and mean norm sqrt(2).
fn hartley_transform(points: impl Iterator<Item = Vector2<f64>> + Clone) -> Matrix3<f64> {
    let n = points.clone().count() as f64;
    let mean = points.clone().fold(Vector2::zeros(), |a, p| a + p) / n;
    let mean_dist = points.map(|p| (p - mean).norm()).sum::<f64>() / n;
    let s = if mean_dist > 1e-12 {
        std::f64::consts::SQRT_2 / mean_dist
    } else {
        1.0
    };
    Matrix3::new(s, 0.0, -s * mean.x, 0.0, s, -s * mean.y, 0.0, 0.0, 1.0)
}

/// Linear eight-point fit on at least eight pairs, projected to the
/// essential manifold.
pub fn eight_point(pairs: &[NormalizedPair]) -> Option<Matrix3<f64>> {
    eight_point_weighted(pairs, None)
}

/// Eight-point fit with one weight per row of the design matrix.
fn eight_point_weighted(pairs: &[NormalizedPair], weights: Option<&[f64]>) -> Option<Matrix3<f64>> {
    if pairs.len() < MIN_SAMPLE {
        return None;
    }
    let t1 = hartley_transform(pairs.iter().map(|p| p.0));
    let t2 = hartley_transform(pairs.iter().map(|p| p.1));
    // Pad to at least 9 rows so the SVD exposes the full right null space.
    let rows = pairs.len().max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (p1, p2)) in pairs.iter().enumerate() {
        let x1 = t1 * p1.push(1.0);
        let x2 = t2 * p2.push(1.0);
        let w = weights.map_or(1.0, |w| w[i]);
        for r in 0..3 {
            for c in 0..3 {
                a[(i, 3 * r + c)] = w * x2[r] * x1[c];
            }
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t?;
    let (min_idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    let f = v_t.row(min_idx);
    let e_hat = Matrix3::from_iterator(f.iter().copied()).transpose();
    let e = project_to_essential(&(t2.transpose() * e_hat * t1));
    let norm = e.norm();
    (norm > 0.0 && norm.is_finite()).then(|| e / norm)
}

/// Mean of the point-to-epipolar-line distances in both views.
pub fn symmetric_epipolar_distance(e: &Matrix3<f64>, pair: &NormalizedPair) -> f64 {
    let x1 = pair.0.push(1.0);
    let x2 = pair.1.push(1.0);
    let l2 = e * x1;
    let l1 = e.transpose() * x2;
    let r = x2.dot(&l2).abs();
    let n2 = (l2.x * l2.x + l2.y * l2.y).sqrt();
    let n1 = (l1.x * l1.x + l1.y * l1.y).sqrt();
    if n1 < 1e-15 || n2 < 1e-15 {
        return if r < 1e-15 { 0.0 } else { f64::INFINITY };
    }
    0.5 * (r / n1 + r / n2)
}

fn inliers_of(e: &Matrix3<f64>, pairs: &[NormalizedPair], threshold: f64) -> Vec<usize> {
    pairs
        .iter()
        .enumerate()
        .filter(|(_, p)| symmetric_epipolar_distance(e, p) < threshold)
        .map(|(i, _)| i)
        .collect()
}

/// Sum of squared distances capped at the threshold.
fn truncated_cost(e: &Matrix3<f64>, pairs: &[NormalizedPair], threshold: f64) -> f64 {
    pairs
        .iter()
        .map(|p| symmetric_epipolar_distance(e, p).min(threshold).powi(2))
        .sum()
}

/// Reweighted eight-point refit on the inliers. Rows are scaled so the
/// algebraic residual approximates the Sampson distance, and by a Cauchy
/// factor that damps pairs near the inlier threshold.
fn refine(initial: Matrix3<f64>, pairs: &[NormalizedPair], threshold: f64) -> Option<Matrix3<f64>> {
    let mut e = eight_point(pairs).unwrap_or(initial);
    let scale = 0.25 * threshold;
    for _ in 0..4 {
        let weights: Vec<f64> = pairs
            .iter()
            .map(|p| {
                let (x1, x2) = (p.0.push(1.0), p.1.push(1.0));
                let (l2, l1) = (e * x1, e.transpose() * x2);
                let grad = (l2.x * l2.x + l2.y * l2.y + l1.x * l1.x + l1.y * l1.y).sqrt();
                let d = symmetric_epipolar_distance(&e, p) / scale;
                1.0 / (grad.max(1e-12) * (1.0 + d * d))
            })
            .collect();
        e = eight_point_weighted(pairs, Some(&weights))?;
    }
    Some(e)
}

/// RANSAC essential-matrix estimate. Fails when fewer than eight pairs are
/// given or no model gathers at least eight inliers.
pub fn estimate_essential<R: Rng>(
    pairs: &[NormalizedPair],
    cfg: &RansacConfig,
    rng: &mut R,
) -> Result<EssentialEstimate> {
    if pairs.len() < MIN_SAMPLE {
        return Err(Error::TooFewCorrespondences {
            needed: MIN_SAMPLE,
            got: pairs.len(),
        });
    }
    let mut best: Option<EssentialEstimate> = None;
    let mut bound = cfg.max_iterations;
    let mut sample_buf = Vec::with_capacity(MIN_SAMPLE);
    let mut iter = 0;
    while iter < bound {
        iter += 1;
        sample_buf.clear();
        sample_buf.extend(
            sample(rng, pairs.len(), MIN_SAMPLE)
                .iter()
                .map(|i| pairs[i]),
        );
        let Some(e) = eight_point(&sample_buf) else {
            continue;
        };
        let inliers = inliers_of(&e, pairs, cfg.threshold);
        if best
            .as_ref()
            .is_none_or(|b| inliers.len() > b.inliers.len())
        {
            let ratio = inliers.len() as f64 / pairs.len() as f64;
            let p_good = ratio.powi(MIN_SAMPLE as i32);
            if p_good >= 1.0 {
                bound = iter;
            } else if p_good > 0.0 {
                let needed = ((1.0 - cfg.confidence).ln() / (1.0 - p_good).ln()).ceil();
                if needed.is_finite() && needed >= 0.0 {
                    bound = bound.min(needed as usize);
                }
            }
            best = Some(EssentialEstimate { e, inliers });
        }
    }
    let best = best
        .filter(|b| b.inliers.len() >= MIN_SAMPLE)
        .ok_or(Error::RansacFailed {
            min_inliers: MIN_SAMPLE,
        })?;

    let inlier_pairs: Vec<NormalizedPair> = best.inliers.iter().map(|&i| pairs[i]).collect();
    if let Some(refit) = refine(best.e, &inlier_pairs, cfg.threshold) {
        let refit_inliers = inliers_of(&refit, pairs, cfg.threshold);
        let better = truncated_cost(&refit, pairs, cfg.threshold)
            <= truncated_cost(&best.e, pairs, cfg.threshold);
        if better && refit_inliers.len() >= MIN_SAMPLE {
            return Ok(EssentialEstimate {
                e: refit,
                inliers: refit_inliers,
            });
        }
    }
    Ok(best)
}
