//! Events Aggregation and Superimposition (EAS).
//!
//! The frame-aligned event slice is smoothed with a normalized Gaussian,
//! scaled by an adaptive weight `alpha = max(max(I), gamma)` and added to
//! every pixel darker than `beta`. Brighter pixels are left untouched.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset_io::{EventStream, IntensityFrame};
use crate::image::mirror;
use crate::representations::{slice_for_frame, EventSlice, DEFAULT_SLICE_EVENTS};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    /// Only pixels strictly below this intensity are enhanced.
    pub beta: u8,
    /// Lower bound of the adaptive weight.
    pub gamma: u8,
    pub gaussian_sigma: f64,
    pub gaussian_kernel_size: usize,
    /// Events per slice.
    pub n_events: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            beta: 128,
            gamma: 64,
            gaussian_sigma: 1.0,
            gaussian_kernel_size: 5,
            n_events: DEFAULT_SLICE_EVENTS,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gaussian_kernel_size < 3 || self.gaussian_kernel_size % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "gaussian kernel size must be odd and >= 3, got {}",
                self.gaussian_kernel_size
            )));
        }
        if !(self.gaussian_sigma > 0.0) || !self.gaussian_sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "gaussian sigma must be positive, got {}",
                self.gaussian_sigma
            )));
        }
        if self.n_events == 0 {
            return Err(Error::InvalidArgument("n_events must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FusedFrame {
    pub t: f64,
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
    pub alpha_used: f64,
    /// The frame was passed through unfused (no usable event slice).
    pub passthrough: bool,
}

impl FusedFrame {
    pub fn to_frame(&self) -> IntensityFrame {
        IntensityFrame {
            t: self.t,
            width: self.width,
            height: self.height,
            pixels: self.pixels.clone(),
        }
    }

    fn passthrough(frame: &IntensityFrame) -> Self {
        Self {
            t: frame.t,
            width: frame.width,
            height: frame.height,
            pixels: frame.pixels.clone(),
            alpha_used: 0.0,
            passthrough: true,
        }
    }
}

/// Normalized 1-D Gaussian taps.
pub fn gaussian_kernel(sigma: f64, size: usize) -> Vec<f64> {
    let r = (size / 2) as isize;
    let mut k: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian smoothing of a binary grid with mirror borders.
/// Output values lie in `[0, 1]`.
pub fn gaussian_smooth(
    grid: &[u8],
    width: usize,
    height: usize,
    sigma: f64,
    kernel_size: usize,
) -> Vec<f64> {
    let k = gaussian_kernel(sigma, kernel_size);
    let r = (kernel_size / 2) as isize;
    let mut tmp = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            tmp[y * width + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| {
                    kv * grid[y * width + mirror(x as isize + i as isize - r, width)] as f64
                })
                .sum();
        }
    }
    let mut out = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            let v: f64 = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * tmp[mirror(y as isize + i as isize - r, height) * width + x])
                .sum();
            out[y * width + x] = v.clamp(0.0, 1.0);
        }
    }
    out
}

pub fn adaptive_alpha(frame: &IntensityFrame, gamma: u8) -> f64 {
    frame.max_value().max(gamma) as f64
}

/// Superimpose an already-aligned slice onto `frame`.
pub fn fuse_with_slice(
    frame: &IntensityFrame,
    slice: &EventSlice,
    cfg: &FusionConfig,
) -> Result<FusedFrame> {
    cfg.validate()?;
    if (slice.width, slice.height) != (frame.width, frame.height) {
        return Err(Error::InvalidArgument(format!(
            "slice is {}x{}, frame is {}x{}",
            slice.width, slice.height, frame.width, frame.height
        )));
    }
    let alpha = adaptive_alpha(frame, cfg.gamma);
    let smoothed = gaussian_smooth(
        &slice.grid,
        frame.width as usize,
        frame.height as usize,
        cfg.gaussian_sigma,
        cfg.gaussian_kernel_size,
    );
    let pixels = frame
        .pixels
        .iter()
        .zip(&smoothed)
        .map(|(&p, &g)| {
            if p < cfg.beta {
                (p as f64 + alpha * g).round().clamp(0.0, 255.0) as u8
            } else {
                p
            }
        })
        .collect();
    Ok(FusedFrame {
        t: frame.t,
        width: frame.width,
        height: frame.height,
        pixels,
        alpha_used: alpha,
        passthrough: false,
    })
}

/// EAS of one frame with the slice aggregated from the frame timestamp on.
pub fn fuse(
    frame: &IntensityFrame,
    stream: &EventStream,
    cfg: &FusionConfig,
) -> Result<FusedFrame> {
    cfg.validate()?;
    let slice = slice_for_frame(stream, frame.t, cfg.n_events)?;
    fuse_with_slice(frame, &slice, cfg)
}

/// Fuse every frame; frames without a full slice pass through with
/// `passthrough` set. Output order matches input order.
pub fn fuse_sequence(
    frames: &[IntensityFrame],
    stream: &EventStream,
    cfg: &FusionConfig,
) -> Result<Vec<FusedFrame>> {
    cfg.validate()?;
    Ok(frames
        .par_iter()
        .map(
            |frame| match slice_for_frame(stream, frame.t, cfg.n_events) {
                Ok(slice) if !slice.short => fuse_with_slice(frame, &slice, cfg)
                    .unwrap_or_else(|_| FusedFrame::passthrough(frame)),
                _ => FusedFrame::passthrough(frame),
            },
        )
        .collect())
}
