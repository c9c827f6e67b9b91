use serde::{Deserialize, Serialize};

use super::Corner;
use crate::dataset_io::IntensityFrame;
use crate::image::ImageF32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub max_corners: usize,
    /// Fraction of the strongest response a corner must reach.
    pub quality_level: f64,
    pub min_distance: f64,
    /// Side of the structure-tensor summation window.
    pub block_size: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            max_corners: 400,
            quality_level: 0.01,
            min_distance: 8.0,
            block_size: 3,
        }
    }
}

/// Per-pixel minimum eigenvalue of the block-summed structure tensor.
pub fn min_eigen_response(img: &ImageF32, block_size: usize) -> ImageF32 {
    let (gx, gy) = img.sobel();
    let (w, h) = (img.width, img.height);
    let mut xx = ImageF32::zeros(w, h);
    let mut xy = ImageF32::zeros(w, h);
    let mut yy = ImageF32::zeros(w, h);
    for i in 0..w * h {
        let (a, b) = (gx.data[i], gy.data[i]);
        xx.data[i] = a * a;
        xy.data[i] = a * b;
        yy.data[i] = b * b;
    }
    let box_kernel = vec![1.0f32; block_size.max(1) | 1];
    let xx = xx.convolve_separable(&box_kernel);
    let xy = xy.convolve_separable(&box_kernel);
    let yy = yy.convolve_separable(&box_kernel);
    let mut out = ImageF32::zeros(w, h);
    for i in 0..w * h {
        let a = xx.data[i] as f64;
        let b = xy.data[i] as f64;
        let c = yy.data[i] as f64;
        let half_diff = 0.5 * (a - c);
        let lambda = 0.5 * (a + c) - (half_diff * half_diff + b * b).sqrt();
        out.data[i] = lambda.max(0.0) as f32;
    }
    out
}

/// Shi-Tomasi "good features to track", strongest first.
pub fn detect_corners(frame: &IntensityFrame, cfg: &DetectorConfig) -> Vec<Corner> {
    if cfg.max_corners == 0 || frame.width < 3 || frame.height < 3 {
        return Vec::new();
    }
    let img = ImageF32::from_frame(frame);
    let resp = min_eigen_response(&img, cfg.block_size);
    let (w, h) = (resp.width, resp.height);
    let global_max = resp.data.iter().copied().fold(0.0f32, f32::max);
    if global_max <= 0.0 {
        return Vec::new();
    }
    let floor = (cfg.quality_level * global_max as f64) as f32;

    let mut candidates: Vec<(f32, usize, usize)> = Vec::new();
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let v = resp.at(x, y);
            if v <= 0.0 || v < floor {
                continue;
            }
            let is_max = (y - 1..=y + 1).all(|ny| (x - 1..=x + 1).all(|nx| resp.at(nx, ny) <= v));
            if is_max {
                candidates.push((v, x, y));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.2.cmp(&b.2)).then(a.1.cmp(&b.1)));

    let min_d2 = cfg.min_distance * cfg.min_distance;
    let mut out: Vec<Corner> = Vec::new();
    for (score, x, y) in candidates {
        let (xf, yf) = (x as f64, y as f64);
        let far_enough = out.iter().all(|c| {
            let (dx, dy) = (c.x - xf, c.y - yf);
            dx * dx + dy * dy >= min_d2
        });
        if far_enough {
            out.push(Corner {
                x: xf,
                y: yf,
                score: score as f64,
            });
            if out.len() == cfg.max_corners {
                break;
            }
        }
    }
    out
}
