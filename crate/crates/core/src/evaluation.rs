//! Trajectory evaluation against ground truth: association, first-frame
//! alignment, rotation-only APE and Euler-angle export.

use nalgebra::{Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::dataset_io::{GroundTruthPose, PlotSeries};
use crate::geometry::{canonical_quaternion, rotation_angle};
use crate::rotation_estimation::{average_nc, RotationTrajectory};
use crate::{Error, Result};

pub const DEFAULT_MAX_DT: f64 = 0.02;

#[derive(Clone, Debug, PartialEq)]
pub struct AlignedPair {
    pub t: f64,
    pub r_gt: Rotation3<f64>,
    pub r_est: Rotation3<f64>,
}

/// Geodesic interpolation between two orientations, `s` in [0, 1].
pub fn slerp(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>, s: f64) -> UnitQuaternion<f64> {
    let delta = canonical_quaternion(a.inverse() * b);
    a * UnitQuaternion::from_scaled_axis(delta.scaled_axis() * s)
}

/// Ground-truth orientation at `t`, or `None` outside coverage or when the
/// bracketing poses are more than `max_dt` apart.
pub fn interpolate_orientation(
    gt: &[GroundTruthPose],
    t: f64,
    max_dt: f64,
) -> Option<Rotation3<f64>> {
    let i = gt.partition_point(|p| p.t < t);
    if i < gt.len() && gt[i].t == t {
        return Some(gt[i].orientation.to_rotation_matrix());
    }
    if i == 0 || i == gt.len() {
        return None;
    }
    let (a, b) = (&gt[i - 1], &gt[i]);
    if b.t - a.t > max_dt {
        return None;
    }
    let s = (t - a.t) / (b.t - a.t);
    Some(slerp(&a.orientation, &b.orientation, s).to_rotation_matrix())
}

/// Pair every estimate with interpolated ground truth, then rotate the
/// estimates so both trajectories agree at the first associated frame.
pub fn associate(
    traj: &RotationTrajectory,
    gt: &[GroundTruthPose],
    max_dt: f64,
) -> Result<Vec<AlignedPair>> {
    if traj.is_empty() || gt.is_empty() {
        return Err(Error::Empty("trajectory or ground truth is empty".into()));
    }
    let mut pairs: Vec<AlignedPair> = traj
        .entries
        .iter()
        .filter_map(|e| {
            interpolate_orientation(gt, e.t, max_dt).map(|r_gt| AlignedPair {
                t: e.t,
                r_gt,
                r_est: e.rotation,
            })
        })
        .collect();
    let Some(first) = pairs.first() else {
        return Err(Error::Empty(
            "no estimate timestamps fall inside ground-truth coverage".into(),
        ));
    };
    let align = first.r_gt * first.r_est.inverse();
    for p in &mut pairs {
        p.r_est = align * p.r_est;
    }
    pairs[0].r_est = pairs[0].r_gt;
    Ok(pairs)
}

pub fn ape(pair: &AlignedPair) -> f64 {
    rotation_angle(&(pair.r_gt.matrix().transpose() * pair.r_est.matrix()))
}

pub fn average_ape(pairs: &[AlignedPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("no aligned pairs to average".into()));
    }
    Ok(pairs.iter().map(ape).sum::<f64>() / pairs.len() as f64)
}

/// `(roll, pitch, yaw)` with `R = Rz(yaw) * Ry(pitch) * Rx(roll)`.
pub fn to_euler(r: &Rotation3<f64>) -> (f64, f64, f64) {
    let m = r.matrix();
    let sp = (-m[(2, 0)]).clamp(-1.0, 1.0);
    let pitch = sp.asin();
    if (1.0 - sp.abs()) < 1e-12 {
        // Gimbal lock: only yaw -/+ roll is observable, so roll is set to 0.
        let yaw = if sp > 0.0 {
            m[(1, 2)].atan2(m[(0, 2)])
        } else {
            (-m[(1, 2)]).atan2(-m[(0, 2)])
        };
        return (0.0, pitch, yaw);
    }
    let roll = m[(2, 1)].atan2(m[(2, 2)]);
    let yaw = m[(1, 0)].atan2(m[(0, 0)]);
    (roll, pitch, yaw)
}

pub fn from_euler(roll: f64, pitch: f64, yaw: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::z_axis(), yaw)
        * Rotation3::from_axis_angle(&Vector3::y_axis(), pitch)
        * Rotation3::from_axis_angle(&Vector3::x_axis(), roll)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub average_ape: f64,
    pub max_ape: f64,
    pub average_nc: f64,
    pub fallback_fraction: f64,
    pub frames: usize,
    pub evaluated: usize,
}

pub fn metrics(traj: &RotationTrajectory, pairs: &[AlignedPair]) -> Result<Metrics> {
    Ok(Metrics {
        average_ape: average_ape(pairs)?,
        max_ape: pairs.iter().map(ape).fold(0.0, f64::max),
        average_nc: average_nc(traj),
        fallback_fraction: traj.fallback_fraction(),
        frames: traj.len(),
        evaluated: pairs.len(),
    })
}

/// Associate and score in one step.
pub fn report(
    traj: &RotationTrajectory,
    gt: &[GroundTruthPose],
    max_dt: f64,
) -> Result<(Metrics, Vec<AlignedPair>)> {
    let pairs = associate(traj, gt, max_dt)?;
    Ok((metrics(traj, &pairs)?, pairs))
}

/// Estimated and ground-truth Euler traces for the overlay plot.
pub fn euler_series(pairs: &[AlignedPair], est_label: &str) -> [PlotSeries; 2] {
    let trace = |f: &dyn Fn(&AlignedPair) -> Rotation3<f64>| {
        pairs
            .iter()
            .map(|p| {
                let (r, pi, y) = to_euler(&f(p));
                (p.t, [r, pi, y])
            })
            .collect()
    };
    [
        PlotSeries {
            label: "ground truth".into(),
            points: trace(&|p| p.r_gt),
        },
        PlotSeries {
            label: est_label.into(),
            points: trace(&|p| p.r_est),
        },
    ]
}

/// Euler angles of the aligned trajectories, one row per evaluated frame.
pub fn euler_csv_string(pairs: &[AlignedPair]) -> String {
    let mut out = String::from(
        "# euler: intrinsic Z-Y-X, R = Rz(yaw) * Ry(pitch) * Rx(roll), radians\n\
         t,gt_roll,gt_pitch,gt_yaw,est_roll,est_pitch,est_yaw,ape\n",
    );
    for p in pairs {
        let (a, b, c) = to_euler(&p.r_gt);
        let (d, e, f) = to_euler(&p.r_est);
        out.push_str(&format!(
            "{:.9},{a:.9},{b:.9},{c:.9},{d:.9},{e:.9},{f:.9},{:.9}\n",
            p.t,
            ape(p)
        ));
    }
    out
}
