//! Synthetic rotating-camera world used as a ground-truth oracle.
//!
//! A pinhole camera sits near the centre of a textured sphere (an
//! equirectangular radiance panorama) and rotates with a piecewise-constant
//! body angular velocity. Frames are point samples of the radiance; events
//! follow the contrast-threshold model on log radiance sampled at a fine
//! internal rate.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{Rotation3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset_io::{
    format_event_line, format_pose_line, write_grayscale_png, Event, EventStream, GroundTruthPose,
    IntensityFrame, Polarity, SensorSize, EVENTS_FILE, FRAME_INDEX_FILE, GROUND_TRUTH_FILE,
    IMAGES_DIR,
};
use crate::geometry::{canonical_quaternion, exp_so3};
use crate::rotation_estimation::CameraIntrinsics;
use crate::{Error, Result};

pub const INTRINSICS_FILE: &str = "intrinsics.json";
pub const GROUND_TRUTH_RATE: f64 = 200.0;
/// Offset inside the log so that zero radiance stays finite.
pub const LOG_EPS: f64 = 1e-4;

fn quantize_ns(t: f64) -> u64 {
    (t * 1e9).round() as u64
}

fn ns_to_s(ns: u64) -> f64 {
    ns as f64 / 1e9
}

/// Equirectangular radiance map with values in `[0, 1]`. Column 0 starts at
/// longitude -pi; row 0 is latitude -pi/2 (camera "up", since image y points
/// down).
#[derive(Clone, Debug, PartialEq)]
pub struct Panorama {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

/// A longitude band whose radiance is scaled down, standing in for a dim
/// part of the scene.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimSector {
    pub lon_min: f64,
    pub lon_max: f64,
    pub factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Texture {
    /// Band-limited value noise plus random high-contrast rectangles.
    Shapes {
        rectangles: usize,
        noise_amplitude: f64,
    },
    /// Dark for negative longitude, bright for positive: one vertical edge
    /// straight ahead of the initial camera (and one behind it).
    Edge { dark: f64, bright: f64 },
}

impl Default for Texture {
    fn default() -> Self {
        Texture::Shapes {
            rectangles: 220,
            noise_amplitude: 0.08,
        }
    }
}

fn smoothstep(x: f64) -> f64 {
    x * x * (3.0 - 2.0 * x)
}

/// Periodic-in-x value noise on a `gx` by `gy` lattice.
fn value_noise(rng: &mut ChaCha8Rng, w: usize, h: usize, gx: usize, gy: usize) -> Vec<f32> {
    let lattice: Vec<f64> = (0..gx * (gy + 1))
        .map(|_| rng.random::<f64>() * 2.0 - 1.0)
        .collect();
    let at = |i: usize, j: usize| lattice[j * gx + i % gx];
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        let fy = y as f64 / h as f64 * gy as f64;
        let j = (fy.floor() as usize).min(gy - 1);
        let ty = smoothstep(fy - j as f64);
        for x in 0..w {
            let fx = x as f64 / w as f64 * gx as f64;
            let i = fx.floor() as usize;
            let tx = smoothstep(fx - i as f64);
            let top = at(i, j) * (1.0 - tx) + at(i + 1, j) * tx;
            let bottom = at(i, j + 1) * (1.0 - tx) + at(i + 1, j + 1) * tx;
            out[y * w + x] = (top * (1.0 - ty) + bottom * ty) as f32;
        }
    }
    out
}

impl Panorama {
    pub fn generate(
        width: usize,
        height: usize,
        texture: &Texture,
        dim: Option<DimSector>,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = vec![0.5f32; width * height];
        match *texture {
            Texture::Shapes {
                rectangles,
                noise_amplitude,
            } => {
                for _ in 0..rectangles {
                    let rw = rng.random_range(0.02..0.12) * width as f64;
                    let rh = rng.random_range(0.04..0.2) * height as f64;
                    let x0 = rng.random_range(0.0..width as f64);
                    let y0 = rng.random_range(0.0..height as f64 - rh);
                    let level = rng.random_range(0.05..1.0f32);
                    for y in y0 as usize..(y0 + rh) as usize {
                        for x in x0 as usize..(x0 + rw) as usize {
                            data[y * width + x % width] = level;
                        }
                    }
                }
                for (g, amp) in [(12, 1.0), (24, 0.5), (48, 0.25)] {
                    let n = value_noise(&mut rng, width, height, g, g / 2);
                    for (d, v) in data.iter_mut().zip(n) {
                        *d += (noise_amplitude * amp) as f32 * v;
                    }
                }
            }
            Texture::Edge { dark, bright } => {
                for y in 0..height {
                    for x in 0..width {
                        let lon = (x as f64 + 0.5) / width as f64 * std::f64::consts::TAU
                            - std::f64::consts::PI;
                        data[y * width + x] = if lon < 0.0 { dark } else { bright } as f32;
                    }
                }
            }
        }
        if let Some(d) = dim {
            for x in 0..width {
                let lon =
                    (x as f64 + 0.5) / width as f64 * std::f64::consts::TAU - std::f64::consts::PI;
                if lon >= d.lon_min && lon < d.lon_max {
                    for y in 0..height {
                        data[y * width + x] *= d.factor as f32;
                    }
                }
            }
        }
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Bilinear radiance along a unit world direction.
    #[inline]
    pub fn sample(&self, d: &Vector3<f64>) -> f64 {
        use std::f64::consts::{FRAC_PI_2, PI, TAU};
        let lon = d.x.atan2(d.z);
        let lat = d.y.clamp(-1.0, 1.0).asin();
        let u = (lon + PI) / TAU * self.width as f64 - 0.5;
        let v = ((lat + FRAC_PI_2) / PI * self.height as f64 - 0.5)
            .clamp(0.0, (self.height - 1) as f64);
        let u0 = u.floor();
        let v0 = v.floor().min((self.height - 2) as f64);
        let (fu, fv) = (u - u0, v - v0);
        let w = self.width as isize;
        let x0 = (u0 as isize).rem_euclid(w) as usize;
        let x1 = (x0 + 1) % self.width;
        let y0 = v0 as usize;
        let row0 = y0 * self.width;
        let row1 = row0 + self.width;
        let a = self.data[row0 + x0] as f64 * (1.0 - fu) + self.data[row0 + x1] as f64 * fu;
        let b = self.data[row1 + x0] as f64 * (1.0 - fu) + self.data[row1 + x1] as f64 * fu;
        a * (1.0 - fv) + b * fv
    }
}

/// Body angular velocity `omega` (rad/s) holds from `t` until the next
/// segment starts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionSegment {
    pub t: f64,
    pub omega: [f64; 3],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MotionScript {
    pub segments: Vec<MotionSegment>,
}

impl MotionScript {
    pub fn constant(omega: [f64; 3]) -> Self {
        Self {
            segments: vec![MotionSegment { t: 0.0, omega }],
        }
    }

    /// Segments of `segment_len` seconds with random axes and rates in
    /// `[0.4, 1] * max_rate`. Odd segments roughly undo the preceding one so
    /// the camera keeps looking around the horizon.
    pub fn random_piecewise(duration: f64, segment_len: f64, max_rate: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_0F_0A1E);
        let mut segments = Vec::new();
        let mut prev = Vector3::zeros();
        let mut k = 0;
        while (k as f64) * segment_len < duration {
            let omega = if k % 2 == 0 {
                let dir = Vector3::new(
                    rng.random_range(-0.3..0.3),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-0.4..0.4),
                )
                .normalize();
                dir * max_rate * rng.random_range(0.4..1.0)
            } else {
                let jitter = Vector3::new(
                    rng.random_range(-0.1..0.1),
                    rng.random_range(-0.1..0.1),
                    rng.random_range(-0.1..0.1),
                );
                let w: Vector3<f64> = -prev + jitter * max_rate;
                if w.norm() > max_rate {
                    w.normalize() * max_rate
                } else {
                    w
                }
            };
            segments.push(MotionSegment {
                t: k as f64 * segment_len,
                omega: [omega.x, omega.y, omega.z],
            });
            prev = omega;
            k += 1;
        }
        Self { segments }
    }

    pub fn max_rate(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| Vector3::from(s.omega).norm())
            .fold(0.0, f64::max)
    }

    /// Rotation of the body frame at `t1` relative to the body frame at `t0`
    /// (`t0 <= t1`), integrated exactly segment by segment.
    pub fn rotation_between(&self, t0: f64, t1: f64) -> Rotation3<f64> {
        let mut r = Rotation3::identity();
        for (i, s) in self.segments.iter().enumerate() {
            let end = self.segments.get(i + 1).map_or(f64::INFINITY, |n| n.t);
            let a = s.t.max(t0);
            let b = end.min(t1);
            if b > a {
                r *= exp_so3(&(Vector3::from(s.omega) * (b - a)));
            }
        }
        r
    }

    /// Camera-to-world rotation at `t`, identity at `t = 0`.
    pub fn rotation_at(&self, t: f64) -> Rotation3<f64> {
        self.rotation_between(0.0, t)
    }
}

/// Everything needed to regenerate a synthetic dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub width: u32,
    pub height: u32,
    pub intrinsics: CameraIntrinsics,
    pub motion: MotionScript,
    pub duration: f64,
    pub frame_rate: f64,
    pub contrast_threshold: f64,
    pub seed: u64,
    /// Pixel value for unit radiance; 255 for a well-exposed sensor.
    pub frame_max: f64,
    pub texture: Texture,
    pub dim_sector: Option<DimSector>,
    pub panorama_width: usize,
    /// Radius of the textured sphere in metres.
    pub sphere_radius: f64,
    /// Amplitude of the sinusoidal camera translation in metres.
    pub translation_jitter: f64,
    /// Internal log-intensity sampling rate for event generation.
    pub sample_rate: f64,
    /// Background noise events per pixel per second.
    pub noise_rate: f64,
    /// Events are generated this long past the last frame so its slice is full.
    pub event_tail: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            width: 240,
            height: 180,
            intrinsics: CameraIntrinsics {
                fx: 200.0,
                fy: 200.0,
                cx: 119.5,
                cy: 89.5,
            },
            motion: MotionScript::constant([0.0, 0.5, 0.0]),
            duration: 5.0,
            frame_rate: 24.0,
            contrast_threshold: 0.15,
            seed: 42,
            frame_max: 255.0,
            texture: Texture::default(),
            dim_sector: None,
            panorama_width: 2048,
            sphere_radius: 5.0,
            translation_jitter: 0.01,
            sample_rate: 1000.0,
            noise_rate: 0.0,
            event_tail: 0.1,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.width < 8 || self.height < 8 {
            return bad(format!("sensor {}x{} too small", self.width, self.height));
        }
        self.intrinsics.validate()?;
        if !(self.frame_rate > 0.0) {
            return bad(format!(
                "frame_rate must be positive, got {}",
                self.frame_rate
            ));
        }
        if !(self.contrast_threshold > 0.0) {
            return bad(format!(
                "contrast threshold must be positive, got {}",
                self.contrast_threshold
            ));
        }
        if !(self.duration >= 0.0) || !(self.sample_rate > 0.0) || !(self.frame_max > 0.0) {
            return bad("duration, sample_rate and frame_max must be positive".into());
        }
        if !(self.sphere_radius > 10.0 * self.translation_jitter.abs()) {
            return bad("sphere radius must dwarf the translation jitter".into());
        }
        if self.noise_rate < 0.0 || self.panorama_width < 16 {
            return bad("invalid noise rate or panorama width".into());
        }
        if self.motion.segments.windows(2).any(|w| w[1].t <= w[0].t) {
            return bad("motion segments must have increasing start times".into());
        }
        Ok(())
    }
}

/// A validated scene with its panorama generated.
#[derive(Clone, Debug)]
pub struct SyntheticScene {
    pub config: SceneConfig,
    pub panorama: Panorama,
    rays: Vec<Vector3<f64>>,
    phases: [f64; 3],
}

/// Frames, events and ground truth of one synthetic run.
#[derive(Clone, Debug)]
pub struct SyntheticDataset {
    pub frames: Vec<IntensityFrame>,
    pub events: EventStream,
    pub ground_truth: Vec<GroundTruthPose>,
    pub intrinsics: CameraIntrinsics,
}

impl SyntheticScene {
    pub fn new(config: SceneConfig) -> Result<Self> {
        config.validate()?;
        let panorama = Panorama::generate(
            config.panorama_width,
            (config.panorama_width / 2).max(8),
            &config.texture,
            config.dim_sector,
            config.seed,
        );
        let k = config.intrinsics;
        let mut rays = Vec::with_capacity((config.width * config.height) as usize);
        for y in 0..config.height {
            for x in 0..config.width {
                let p = k.normalize(x as f64, y as f64);
                rays.push(Vector3::new(p.x, p.y, 1.0).normalize());
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x7A5_7E1);
        let phases = [0; 3].map(|_| rng.random_range(0.0..std::f64::consts::TAU));
        Ok(Self {
            config,
            panorama,
            rays,
            phases,
        })
    }

    pub fn sensor(&self) -> SensorSize {
        SensorSize::new(self.config.width, self.config.height)
    }

    pub fn rotation_at(&self, t: f64) -> Rotation3<f64> {
        self.config.motion.rotation_at(t)
    }

    /// Camera position: a slow sinusoid of amplitude `translation_jitter`.
    pub fn translation_at(&self, t: f64) -> Vector3<f64> {
        let freqs = [0.7, 1.1, 0.9];
        let a = self.config.translation_jitter;
        Vector3::from_fn(|i, _| a * (std::f64::consts::TAU * freqs[i] * t + self.phases[i]).sin())
    }

    pub fn pose_at(&self, t: f64) -> GroundTruthPose {
        GroundTruthPose {
            t,
            translation: self.translation_at(t),
            orientation: canonical_quaternion(UnitQuaternion::from_rotation_matrix(
                &self.rotation_at(t),
            )),
        }
    }

    /// Frame timestamps, quantized to nanoseconds.
    pub fn frame_times(&self) -> Vec<f64> {
        let n = (self.config.duration * self.config.frame_rate + 1e-9).floor() as u64;
        (0..=n)
            .map(|k| ns_to_s(quantize_ns(k as f64 / self.config.frame_rate)))
            .collect()
    }

    /// Radiance seen by every pixel at time `t`, row-major.
    fn radiance_into(&self, t: f64, out: &mut [f64]) {
        let r = self.rotation_at(t);
        let p = self.translation_at(t);
        let rad = self.config.sphere_radius;
        let c = p.norm_squared() - rad * rad;
        let w = self.config.width as usize;
        out.par_chunks_mut(w)
            .zip(self.rays.par_chunks(w))
            .for_each(|(row, rays)| {
                for (o, ray) in row.iter_mut().zip(rays) {
                    let d = r * ray;
                    let b = p.dot(&d);
                    let s = -b + (b * b - c).sqrt();
                    *o = self.panorama.sample(&((p + d * s) / rad));
                }
            });
    }

    pub fn render_frame(&self, t: f64) -> IntensityFrame {
        let mut radiance = vec![0.0; self.rays.len()];
        self.radiance_into(t, &mut radiance);
        let m = self.config.frame_max;
        let pixels = radiance
            .iter()
            .map(|&v| (v * m).round().clamp(0.0, 255.0) as u8)
            .collect();
        IntensityFrame {
            t,
            width: self.config.width,
            height: self.config.height,
            pixels,
        }
    }

    pub fn render_frames(&self) -> Vec<IntensityFrame> {
        self.frame_times()
            .into_iter()
            .map(|t| self.render_frame(t))
            .collect()
    }

    /// Poses on a 200 Hz grid merged with the frame timestamps.
    pub fn ground_truth(&self) -> Vec<GroundTruthPose> {
        let n = (self.config.duration * GROUND_TRUTH_RATE + 1e-9).floor() as u64;
        let mut ns: Vec<u64> = (0..=n)
            .map(|k| quantize_ns(k as f64 / GROUND_TRUTH_RATE))
            .collect();
        ns.extend(self.frame_times().iter().map(|&t| quantize_ns(t)));
        ns.sort_unstable();
        ns.dedup();
        ns.into_iter().map(|t| self.pose_at(ns_to_s(t))).collect()
    }

    /// Contrast-threshold events over `[0, duration + event_tail]`.
    pub fn generate_events(&self) -> EventStream {
        let cfg = &self.config;
        let n_px = self.rays.len();
        let w = cfg.width as usize;
        let c = cfg.contrast_threshold;
        let end = cfg.duration + cfg.event_tail;
        let steps = (end * cfg.sample_rate).ceil() as u64;
        let dt = end / steps.max(1) as f64;

        let mut radiance = vec![0.0; n_px];
        self.radiance_into(0.0, &mut radiance);
        let mut level: Vec<f64> = radiance.iter().map(|&v| (v + LOG_EPS).ln()).collect();
        let mut reference = level.clone();

        let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xE7E7_0015E);
        let noise = (cfg.noise_rate > 0.0)
            .then(|| Poisson::new(cfg.noise_rate * n_px as f64 * dt).unwrap());

        let mut out: Vec<Event> = Vec::new();
        let mut chunk: Vec<(u64, u16, u16, Polarity)> = Vec::new();
        for k in 1..=steps {
            let t0 = (k - 1) as f64 * dt;
            let t1 = k as f64 * dt;
            let (ns0, ns1) = (quantize_ns(t0), quantize_ns(t1));
            self.radiance_into(t1, &mut radiance);
            let rows: Vec<Vec<(u64, u16, u16, Polarity)>> = level
                .par_chunks_mut(w)
                .zip(reference.par_chunks_mut(w))
                .zip(radiance.par_chunks(w))
                .enumerate()
                .map(|(y, ((lv, rf), rad))| {
                    let mut evs = Vec::new();
                    for x in 0..w {
                        let l0 = lv[x];
                        let l1 = (rad[x] + LOG_EPS).ln();
                        loop {
                            let pol = if l1 - rf[x] >= c {
                                rf[x] += c;
                                Polarity::On
                            } else if rf[x] - l1 >= c {
                                rf[x] -= c;
                                Polarity::Off
                            } else {
                                break;
                            };
                            let s = ((rf[x] - l0) / (l1 - l0)).clamp(0.0, 1.0);
                            let ns = quantize_ns(t0 + s * dt).clamp(ns0 + 1, ns1);
                            evs.push((ns, x as u16, y as u16, pol));
                        }
                        lv[x] = l1;
                    }
                    evs
                })
                .collect();
            chunk.clear();
            chunk.extend(rows.into_iter().flatten());
            if let Some(dist) = &noise {
                let count = dist.sample(&mut noise_rng) as usize;
                for _ in 0..count {
                    let ns = noise_rng.random_range(ns0 + 1..=ns1);
                    let x = noise_rng.random_range(0..cfg.width) as u16;
                    let y = noise_rng.random_range(0..cfg.height) as u16;
                    let pol = if noise_rng.random::<bool>() {
                        Polarity::On
                    } else {
                        Polarity::Off
                    };
                    chunk.push((ns, x, y, pol));
                }
            }
            chunk.sort_unstable_by_key(|&(ns, x, y, p)| (ns, y, x, p.bit()));
            out.extend(chunk.iter().map(|&(ns, x, y, polarity)| Event {
                t: ns_to_s(ns),
                x,
                y,
                polarity,
            }));
        }
        EventStream::new(out, self.sensor()).expect("generated events are sorted and in bounds")
    }

    pub fn simulate(&self) -> SyntheticDataset {
        SyntheticDataset {
            frames: self.render_frames(),
            events: self.generate_events(),
            ground_truth: self.ground_truth(),
            intrinsics: self.config.intrinsics,
        }
    }
}

/// Write `data` in the on-disk dataset layout, plus `intrinsics.json`.
pub fn export_dataset(data: &SyntheticDataset, dir: &Path) -> Result<()> {
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |e| Error::io(&p, e)
    };
    let images = dir.join(IMAGES_DIR);
    fs::create_dir_all(&images).map_err(io(&images))?;

    let mut index = String::new();
    for (i, f) in data.frames.iter().enumerate() {
        let name = format!("frame_{i:08}.png");
        write_grayscale_png(f, &images.join(&name))?;
        writeln!(index, "{:.9} {IMAGES_DIR}/{name}", f.t).unwrap();
    }
    let path = dir.join(FRAME_INDEX_FILE);
    fs::write(&path, index).map_err(io(&path))?;

    let path = dir.join(EVENTS_FILE);
    let file = fs::File::create(&path).map_err(io(&path))?;
    let mut w = BufWriter::with_capacity(1 << 20, file);
    for e in data.events.events() {
        writeln!(w, "{}", format_event_line(e)).map_err(io(&path))?;
    }
    w.flush().map_err(io(&path))?;

    let mut gt = String::from("# timestamp tx ty tz qx qy qz qw\n");
    for p in &data.ground_truth {
        gt.push_str(&format_pose_line(p));
        gt.push('\n');
    }
    let path = dir.join(GROUND_TRUTH_FILE);
    fs::write(&path, gt).map_err(io(&path))?;

    let k = data.intrinsics;
    let json = format!(
        "{{\n  \"fx\": {:?},\n  \"fy\": {:?},\n  \"cx\": {:?},\n  \"cy\": {:?}\n}}\n",
        k.fx, k.fy, k.cx, k.cy
    );
    let path = dir.join(INTRINSICS_FILE);
    fs::write(&path, json).map_err(io(&path))
}
