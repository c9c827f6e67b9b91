use nalgebra::Point2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CorrespondenceSet;
use crate::dataset_io::IntensityFrame;
use crate::image::ImageF32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LkConfig {
    pub pyramid_levels: usize,
    /// Odd side length of the integration window.
    pub window: usize,
    pub max_iters: usize,
    /// Stop iterating once an update is shorter than this (pixels).
    pub eps: f64,
    /// Forward-backward round-trip limit in pixels; `None` disables the check.
    pub fb_threshold: Option<f64>,
    /// Floor on the smallest eigenvalue of the window-averaged gradient tensor.
    pub min_eigen: f64,
}

impl Default for LkConfig {
    fn default() -> Self {
        Self {
            pyramid_levels: 3,
            window: 21,
            max_iters: 30,
            eps: 0.01,
            fb_threshold: Some(1.0),
            min_eigen: 1e-3,
        }
    }
}

struct Level {
    img: ImageF32,
    gx: ImageF32,
    gy: ImageF32,
}

/// Gaussian pyramid with Sobel gradients at every level. Level 0 is full size.
pub struct Pyramid {
    levels: Vec<Level>,
    pub t: f64,
}

impl Pyramid {
    pub fn build(frame: &IntensityFrame, levels: usize) -> Self {
        let mut imgs = vec![ImageF32::from_frame(frame)];
        for _ in 1..levels.max(1) {
            let prev = imgs.last().unwrap();
            if prev.width < 8 || prev.height < 8 {
                break;
            }
            imgs.push(prev.pyr_down());
        }
        let levels = imgs
            .into_iter()
            .map(|img| {
                let (gx, gy) = img.sobel();
                Level { img, gx, gy }
            })
            .collect();
        Self { levels, t: frame.t }
    }

    pub fn width(&self) -> usize {
        self.levels[0].img.width
    }

    pub fn height(&self) -> usize {
        self.levels[0].img.height
    }

    fn contains(&self, p: (f32, f32)) -> bool {
        p.0 >= 0.0
            && p.1 >= 0.0
            && p.0 <= (self.width() - 1) as f32
            && p.1 <= (self.height() - 1) as f32
    }
}

/// Coarse-to-fine iterative LK for one point. `None` when the gradient tensor
/// is near-singular at some level or the point leaves the image.
fn track_point(
    prev: &Pyramid,
    next: &Pyramid,
    p: (f32, f32),
    cfg: &LkConfig,
) -> Option<(f32, f32)> {
    let n_levels = prev.levels.len().min(next.levels.len());
    let r = (cfg.window / 2) as isize;
    let n = ((2 * r + 1) * (2 * r + 1)) as usize;
    let mut tmpl = Vec::with_capacity(n);
    let mut grads = Vec::with_capacity(n);
    let mut guess = (0.0f32, 0.0f32);

    for lvl in (0..n_levels).rev() {
        let scale = (1u32 << lvl) as f32;
        let (ux, uy) = (p.0 / scale, p.1 / scale);
        let a = &prev.levels[lvl];
        let b = &next.levels[lvl];

        tmpl.clear();
        grads.clear();
        let (mut gxx, mut gxy, mut gyy) = (0.0f64, 0.0f64, 0.0f64);
        for dy in -r..=r {
            for dx in -r..=r {
                let (sx, sy) = (ux + dx as f32, uy + dy as f32);
                let ix = a.gx.sample(sx, sy);
                let iy = a.gy.sample(sx, sy);
                tmpl.push(a.img.sample(sx, sy));
                grads.push((ix, iy));
                gxx += (ix * ix) as f64;
                gxy += (ix * iy) as f64;
                gyy += (iy * iy) as f64;
            }
        }
        let half_diff = 0.5 * (gxx - gyy);
        let min_eig = (0.5 * (gxx + gyy) - (half_diff * half_diff + gxy * gxy).sqrt()) / n as f64;
        if min_eig < cfg.min_eigen {
            return None;
        }
        let det = gxx * gyy - gxy * gxy;

        let mut v = (0.0f64, 0.0f64);
        for _ in 0..cfg.max_iters {
            let (cx, cy) = (ux + guess.0 + v.0 as f32, uy + guess.1 + v.1 as f32);
            let (mut bx, mut by) = (0.0f64, 0.0f64);
            let mut k = 0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let diff = (tmpl[k] - b.img.sample(cx + dx as f32, cy + dy as f32)) as f64;
                    bx += diff * grads[k].0 as f64;
                    by += diff * grads[k].1 as f64;
                    k += 1;
                }
            }
            let ex = (gyy * bx - gxy * by) / det;
            let ey = (gxx * by - gxy * bx) / det;
            v.0 += ex;
            v.1 += ey;
            if !v.0.is_finite() || !v.1.is_finite() {
                return None;
            }
            if (ex * ex + ey * ey).sqrt() < cfg.eps {
                break;
            }
        }
        let d = (guess.0 + v.0 as f32, guess.1 + v.1 as f32);
        guess = if lvl > 0 { (2.0 * d.0, 2.0 * d.1) } else { d };
    }
    let q = (p.0 + guess.0, p.1 + guess.1);
    next.contains(q).then_some(q)
}

/// Track `points` between two prebuilt pyramids. Output order follows input
/// order; lost points are simply absent.
pub fn track_pyramids(
    prev: &Pyramid,
    next: &Pyramid,
    points: &[Point2<f64>],
    cfg: &LkConfig,
) -> CorrespondenceSet {
    let pairs = points
        .par_iter()
        .filter_map(|pt| {
            let p = (pt.x as f32, pt.y as f32);
            if !prev.contains(p) {
                return None;
            }
            let q = track_point(prev, next, p, cfg)?;
            if let Some(limit) = cfg.fb_threshold {
                let back = track_point(next, prev, q, cfg)?;
                let err = ((back.0 - p.0).powi(2) + (back.1 - p.1).powi(2)).sqrt();
                if err as f64 > limit {
                    return None;
                }
            }
            Some((*pt, Point2::new(q.0 as f64, q.1 as f64)))
        })
        .collect();
    CorrespondenceSet {
        pairs,
        frame_t_prev: prev.t,
        frame_t_next: next.t,
    }
}

pub fn track_lk(
    prev_frame: &IntensityFrame,
    next_frame: &IntensityFrame,
    points: &[Point2<f64>],
    cfg: &LkConfig,
) -> CorrespondenceSet {
    let prev = Pyramid::build(prev_frame, cfg.pyramid_levels);
    let next = Pyramid::build(next_frame, cfg.pyramid_levels);
    track_pyramids(&prev, &next, points, cfg)
}
