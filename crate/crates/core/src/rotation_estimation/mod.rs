//! 3-DoF rotation estimation from an image sequence.
//!
//! Corners are tracked frame to frame, an essential matrix is fitted to the
//! correspondences, and the relative rotation it contains is chained into a
//! world-frame trajectory anchored at the first frame. Pairs with too few
//! correspondences repeat the previous rotation; when the count drops even
//! lower, corners are detected afresh on the next frame.

mod decompose;
mod essential;

use nalgebra::{Rotation3, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use decompose::{cheirality_count, pose_candidates, recover_rotation, triangulate_depths};
pub use essential::{
    eight_point, estimate_essential, project_to_essential, symmetric_epipolar_distance,
    EssentialEstimate, NormalizedPair, RansacConfig, ESSENTIAL_SOLVER, MIN_SAMPLE,
};

use crate::dataset_io::IntensityFrame;
use crate::geometry::orthonormalize;
use crate::tracking::{
    detect_corners, track_pyramids, CorrespondenceSet, DetectorConfig, LkConfig, Pyramid,
};
use crate::{Error, Result};

/// Pinhole intrinsics in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        let k = Self { fx, fy, cx, cy };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.cx.is_finite() || !self.cy.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "invalid intrinsics {self:?}: focal lengths must be positive"
            )));
        }
        Ok(())
    }

    pub fn normalize(&self, u: f64, v: f64) -> Vector2<f64> {
        Vector2::new((u - self.cx) / self.fx, (v - self.cy) / self.fy)
    }

    pub fn denormalize(&self, p: &Vector2<f64>) -> (f64, f64) {
        (p.x * self.fx + self.cx, p.y * self.fy + self.cy)
    }
}

/// Map pixel correspondences to normalized camera coordinates.
pub fn normalize_points(set: &CorrespondenceSet, k: &CameraIntrinsics) -> Vec<NormalizedPair> {
    set.pairs
        .iter()
        .map(|(a, b)| (k.normalize(a.x, a.y), k.normalize(b.x, b.y)))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryEntry {
    pub t: f64,
    /// Camera-to-world rotation, identity at the first frame.
    pub rotation: Rotation3<f64>,
    /// Correspondences between this frame and the previous one.
    pub nc: usize,
    /// The rotation was carried over from the previous frame.
    pub fallback: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RotationTrajectory {
    pub entries: Vec<TrajectoryEntry>,
}

impl RotationTrajectory {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fraction of frame pairs that fell back to the previous rotation.
    pub fn fallback_fraction(&self) -> f64 {
        let pairs = &self.entries[self.entries.len().min(1)..];
        if pairs.is_empty() {
            return 0.0;
        }
        pairs.iter().filter(|e| e.fallback).count() as f64 / pairs.len() as f64
    }
}

/// Mean correspondence count over frame pairs (the first entry has no pair).
pub fn average_nc(traj: &RotationTrajectory) -> f64 {
    let pairs = &traj.entries[traj.entries.len().min(1)..];
    if pairs.is_empty() {
        return 0.0;
    }
    pairs.iter().map(|e| e.nc as f64).sum::<f64>() / pairs.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Below this many correspondences the previous rotation is repeated.
    pub threshold1: usize,
    /// Below this many correspondences corners are re-detected.
    pub threshold2: usize,
    pub ransac: RansacConfig,
    pub detector: DetectorConfig,
    pub lk: LkConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            threshold1: 15,
            threshold2: 30,
            ransac: RansacConfig::default(),
            detector: DetectorConfig::default(),
            lk: LkConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.threshold1 < 5 || self.threshold2 < 5 {
            return Err(Error::InvalidArgument(format!(
                "threshold1 ({}) and threshold2 ({}) must both be at least 5",
                self.threshold1, self.threshold2
            )));
        }
        if self.lk.window < 3 || self.lk.window % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "LK window must be odd and >= 3, got {}",
                self.lk.window
            )));
        }
        if self.ransac.threshold <= 0.0 {
            return Err(Error::InvalidArgument(
                "ransac threshold must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Relative rotation (previous camera to next camera coordinates) for one
/// frame pair.
pub fn estimate_relative_rotation(
    set: &CorrespondenceSet,
    intrinsics: &CameraIntrinsics,
    ransac: &RansacConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Rotation3<f64>> {
    let pairs = normalize_points(set, intrinsics);
    let est = estimate_essential(&pairs, ransac, rng)?;
    let inliers: Vec<NormalizedPair> = est.inliers.iter().map(|&i| pairs[i]).collect();
    recover_rotation(&est.e, &inliers)
}

fn pair_seed(seed: u64, pair: usize) -> u64 {
    seed ^ (pair as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Run the estimator over `frames`. `on_pair` sees the correspondences of
/// every frame pair in order.
pub fn run_pipeline_observed(
    frames: &[IntensityFrame],
    cfg: &PipelineConfig,
    intrinsics: &CameraIntrinsics,
    seed: u64,
    on_pair: &mut dyn FnMut(usize, &CorrespondenceSet),
) -> Result<RotationTrajectory> {
    cfg.validate()?;
    intrinsics.validate()?;
    if frames.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 frames, got {}",
            frames.len()
        )));
    }
    let mut world = Rotation3::identity();
    let mut entries = vec![TrajectoryEntry {
        t: frames[0].t,
        rotation: world,
        nc: 0,
        fallback: false,
    }];
    let mut prev = Pyramid::build(&frames[0], cfg.lk.pyramid_levels);
    let mut points: Vec<_> = detect_corners(&frames[0], &cfg.detector)
        .iter()
        .map(|c| c.point())
        .collect();

    for (k, frame) in frames.iter().enumerate().skip(1) {
        let next = Pyramid::build(frame, cfg.lk.pyramid_levels);
        let set = track_pyramids(&prev, &next, &points, &cfg.lk);
        on_pair(k, &set);
        let nc = set.len();

        let relative = if nc >= cfg.threshold1 {
            let mut rng = ChaCha8Rng::seed_from_u64(pair_seed(seed, k));
            estimate_relative_rotation(&set, intrinsics, &cfg.ransac, &mut rng).ok()
        } else {
            None
        };
        let fallback = relative.is_none();
        if let Some(r) = relative {
            // `r` maps previous-camera to next-camera coordinates, so the next
            // camera's orientation in the previous frame is its transpose.
            world = orthonormalize(&(world.matrix() * r.matrix().transpose()));
        }
        entries.push(TrajectoryEntry {
            t: frame.t,
            rotation: world,
            nc,
            fallback,
        });

        points = if nc < cfg.threshold2 {
            detect_corners(frame, &cfg.detector)
                .iter()
                .map(|c| c.point())
                .collect()
        } else {
            set.next_points()
        };
        prev = next;
    }
    Ok(RotationTrajectory { entries })
}

pub fn run_pipeline(
    frames: &[IntensityFrame],
    cfg: &PipelineConfig,
    intrinsics: &CameraIntrinsics,
    seed: u64,
) -> Result<RotationTrajectory> {
    run_pipeline_observed(frames, cfg, intrinsics, seed, &mut |_, _| {})
}
