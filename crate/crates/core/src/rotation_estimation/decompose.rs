use nalgebra::{Matrix3, Rotation3, Vector3};

use super::essential::NormalizedPair;
use crate::geometry::orthonormalize;
use crate::{Error, Result};

/// Rays closer to parallel than this (squared sine of their angle) are not
/// triangulated.
const PARALLEL_RAYS: f64 = 1e-14;

/// The four `(R, t)` factorizations of an essential matrix, with
/// `x_next = R x_prev + t` up to scale.
pub fn pose_candidates(e: &Matrix3<f64>) -> [(Matrix3<f64>, Vector3<f64>); 4] {
    let svd = e.svd(true, true);
    let mut u = svd.u.unwrap();
    let mut v_t = svd.v_t.unwrap();
    // Order singular values so the null direction is the third column.
    let null_idx = (0..3)
        .min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]))
        .unwrap();
    if null_idx != 2 {
        u.swap_columns(null_idx, 2);
        v_t.swap_rows(null_idx, 2);
    }
    if u.determinant() < 0.0 {
        u.column_mut(2).neg_mut();
    }
    if v_t.determinant() < 0.0 {
        v_t.row_mut(2).neg_mut();
    }
    let w = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let r1 = u * w * v_t;
    let r2 = u * w.transpose() * v_t;
    let t: Vector3<f64> = u.column(2).into_owned();
    [(r1, t), (r1, -t), (r2, t), (r2, -t)]
}

/// Depths of a point seen along `x1` (previous view) and `x2` (next view)
/// under `x_next = R x_prev + t`, by midpoint triangulation.
pub fn triangulate_depths(
    r: &Matrix3<f64>,
    t: &Vector3<f64>,
    pair: &NormalizedPair,
) -> Option<(f64, f64)> {
    let a = r * pair.0.push(1.0);
    let b = pair.1.push(1.0);
    let (aa, bb, ab) = (a.dot(&a), b.dot(&b), a.dot(&b));
    let det = aa * bb - ab * ab;
    if det <= PARALLEL_RAYS * aa * bb {
        return None;
    }
    let (at, bt) = (a.dot(t), b.dot(t));
    // lambda1 * a + t = lambda2 * b in the least-squares sense.
    let l1 = (-at * bb + ab * bt) / det;
    let l2 = (aa * bt - ab * at) / det;
    Some((l1, l2))
}

pub fn cheirality_count(r: &Matrix3<f64>, t: &Vector3<f64>, pairs: &[NormalizedPair]) -> usize {
    pairs
        .iter()
        .filter_map(|p| triangulate_depths(r, t, p))
        .filter(|&(d1, d2)| d1 > 0.0 && d2 > 0.0)
        .count()
}

/// Rotation taking previous-camera coordinates to next-camera coordinates,
/// chosen among the SVD candidates by the number of points triangulated in
/// front of both cameras.
pub fn recover_rotation(e: &Matrix3<f64>, pairs: &[NormalizedPair]) -> Result<Rotation3<f64>> {
    let candidates = pose_candidates(e);
    let counts: Vec<usize> = candidates
        .iter()
        .map(|(r, t)| cheirality_count(r, t, pairs))
        .collect();
    let best = (0..4)
        .max_by_key(|&i| (counts[i], std::cmp::Reverse(i)))
        .unwrap();
    if counts[best] == 0 {
        return Err(Error::DegenerateGeometry(
            "no candidate places any point in front of both cameras".into(),
        ));
    }
    // Candidates 0/1 and 2/3 share a rotation; a tie across the pairs is ambiguous.
    let other = if best < 2 { [2, 3] } else { [0, 1] };
    if other.iter().any(|&i| counts[i] == counts[best]) {
        return Err(Error::DegenerateGeometry(
            "cheirality tie between rotations".into(),
        ));
    }
    Ok(orthonormalize(&candidates[best].0))
}
