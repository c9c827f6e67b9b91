//! Small SO(3) toolbox shared by the estimator, the simulator and the metrics.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Exponential map from a rotation vector (axis * angle) to a rotation.
pub fn exp_so3(omega: &Vector3<f64>) -> Rotation3<f64> {
    Rotation3::new(*omega)
}

/// Geodesic angle of a rotation, `arccos((tr(R) - 1) / 2)`.
///
/// Evaluated as `atan2(sin, cos)` with the sine taken from the skew part, which
/// agrees with the clamped arccos but keeps full precision near 0 and pi.
pub fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    let c = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let s = 0.5
        * Vector3::new(
            r[(2, 1)] - r[(1, 2)],
            r[(0, 2)] - r[(2, 0)],
            r[(1, 0)] - r[(0, 1)],
        )
        .norm();
    s.atan2(c)
}

/// Geodesic distance between two rotations.
pub fn geodesic_distance(a: &Rotation3<f64>, b: &Rotation3<f64>) -> f64 {
    rotation_angle(&(a.matrix().transpose() * b.matrix()))
}

/// Project an (almost) rotation matrix back onto SO(3) via SVD.
pub fn orthonormalize(m: &Matrix3<f64>) -> Rotation3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut d = Matrix3::identity();
        d[(2, 2)] = -1.0;
        r = u * d * v_t;
    }
    Rotation3::from_matrix_unchecked(r)
}

/// Quaternion with `w >= 0`, removing the double-cover ambiguity.
pub fn canonical_quaternion(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    if q.w < 0.0 {
        UnitQuaternion::new_unchecked(-q.into_inner())
    } else {
        q
    }
}

/// Orthonormality residual `||R^T R - I||_F`.
pub fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).norm()
}
