//! Corner detection and sparse optical-flow tracking between consecutive frames.

mod lk;
mod shi_tomasi;

use nalgebra::Point2;

pub use lk::{track_lk, track_pyramids, LkConfig, Pyramid};
pub use shi_tomasi::{detect_corners, min_eigen_response, DetectorConfig};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Corner {
    pub x: f64,
    pub y: f64,
    /// Minimum eigenvalue of the structure tensor.
    pub score: f64,
}

impl Corner {
    pub fn point(&self) -> Point2<f64> {
        Point2::new(self.x, self.y)
    }
}

/// Point pairs tracked from one frame into the next.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CorrespondenceSet {
    pub pairs: Vec<(Point2<f64>, Point2<f64>)>,
    pub frame_t_prev: f64,
    pub frame_t_next: f64,
}

impl CorrespondenceSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn next_points(&self) -> Vec<Point2<f64>> {
        self.pairs.iter().map(|(_, n)| *n).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("prev_x,prev_y,next_x,next_y\n");
        for (p, n) in &self.pairs {
            s.push_str(&format!("{:.4},{:.4},{:.4},{:.4}\n", p.x, p.y, n.x, n.y));
        }
        s
    }
}
