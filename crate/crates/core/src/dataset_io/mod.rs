//! Dataset layout, domain types and artifact writers.
//!
//! A dataset directory follows the layout of the public event-camera dataset
//! family:
//!
//! ```text
//! events.txt       t x y p            (one event per line)
//! images.txt       t images/frame.png (frame index)
//! images/          8-bit grayscale PNG or PGM frames
//! groundtruth.txt  t px py pz qx qy qz qw
//! ```

mod image_io;
mod output;
mod parse;

use std::path::{Path, PathBuf};

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use image_io::{decode_grayscale, load_grayscale_image, write_grayscale_png};
pub use output::{
    read_trajectory_csv, render_svg_plot, trajectory_csv_string, write_svg_plot,
    write_trajectory_csv, PlotSeries,
};
pub use parse::{
    format_event_line, format_pose_line, load_events, load_frame_index, load_ground_truth,
    parse_events, parse_frame_index, parse_ground_truth, EventReader, FrameRecord,
};

pub const EVENTS_FILE: &str = "events.txt";
pub const FRAME_INDEX_FILE: &str = "images.txt";
pub const IMAGES_DIR: &str = "images";
pub const GROUND_TRUTH_FILE: &str = "groundtruth.txt";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Off,
    On,
}

impl Polarity {
    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Polarity::Off),
            1 => Some(Polarity::On),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Polarity::Off => 0,
            Polarity::On => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarity::Off => Polarity::On,
            Polarity::On => Polarity::Off,
        }
    }
}

/// A single DVS event.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    /// Seconds.
    pub t: f64,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorSize {
    pub width: u32,
    pub height: u32,
}

impl SensorSize {
    pub const DAVIS240: SensorSize = SensorSize {
        width: 240,
        height: 180,
    };

    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x < self.width && y < self.height
    }
}

/// Time-ordered events from one sensor.
#[derive(Clone, Debug, PartialEq)]
pub struct EventStream {
    events: Vec<Event>,
    size: SensorSize,
}

impl EventStream {
    /// Validates pixel bounds, finite non-negative timestamps and ordering.
    pub fn new(events: Vec<Event>, size: SensorSize) -> Result<Self> {
        let mut prev = f64::NEG_INFINITY;
        for (i, e) in events.iter().enumerate() {
            if !size.contains(e.x as u32, e.y as u32) {
                return Err(Error::InvalidArgument(format!(
                    "event {i} at ({}, {}) outside {}x{} sensor",
                    e.x, e.y, size.width, size.height
                )));
            }
            if !e.t.is_finite() || e.t < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "event {i} has invalid timestamp {}",
                    e.t
                )));
            }
            if e.t < prev {
                return Err(Error::InvalidArgument(format!(
                    "event {i} timestamp {} precedes {prev}",
                    e.t
                )));
            }
            prev = e.t;
        }
        Ok(Self { events, size })
    }

    pub fn empty(size: SensorSize) -> Self {
        Self {
            events: Vec::new(),
            size,
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn size(&self) -> SensorSize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Index of the first event with `t >= time`.
    pub fn lower_bound(&self, time: f64) -> usize {
        self.events.partition_point(|e| e.t < time)
    }

    pub fn time_range(&self) -> Option<(f64, f64)> {
        Some((self.events.first()?.t, self.events.last()?.t))
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }
}

/// 8-bit grayscale frame, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityFrame {
    pub t: f64,
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl IntensityFrame {
    pub fn new(t: f64, width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width as usize * height as usize {
            return Err(Error::InvalidArgument(format!(
                "frame buffer has {} pixels, expected {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(Self {
            t,
            width,
            height,
            pixels,
        })
    }

    pub fn filled(t: f64, width: u32, height: u32, value: u8) -> Self {
        Self {
            t,
            width,
            height,
            pixels: vec![value; width as usize * height as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[(y * self.width + x) as usize]
    }

    pub fn size(&self) -> SensorSize {
        SensorSize::new(self.width, self.height)
    }

    pub fn max_value(&self) -> u8 {
        self.pixels.iter().copied().max().unwrap_or(0)
    }
}

/// Ground-truth camera pose (camera-to-world) at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundTruthPose {
    pub t: f64,
    pub translation: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

/// A fully loaded dataset directory.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub root: PathBuf,
    pub frames: Vec<IntensityFrame>,
    pub events: EventStream,
    pub ground_truth: Vec<GroundTruthPose>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    /// Only keep data up to this many seconds after the first frame.
    pub max_duration: Option<f64>,
    /// Sensor size; taken from the first frame when absent.
    pub sensor: Option<SensorSize>,
}

impl Dataset {
    pub fn load(root: &Path, opts: LoadOptions) -> Result<Self> {
        let index = load_frame_index(&root.join(FRAME_INDEX_FILE))?;
        let t0 = index.first().map(|r| r.t).unwrap_or(0.0);
        let t_end = opts.max_duration.map(|d| t0 + d);
        let mut frames = Vec::with_capacity(index.len());
        for rec in index.iter().filter(|r| t_end.is_none_or(|e| r.t <= e)) {
            let mut frame = load_grayscale_image(&root.join(&rec.path))?;
            frame.t = rec.t;
            if let Some(first) = frames.first() {
                let first: &IntensityFrame = first;
                if (first.width, first.height) != (frame.width, frame.height) {
                    return Err(Error::Image {
                        path: root.join(&rec.path),
                        msg: format!(
                            "frame is {}x{}, sequence is {}x{}",
                            frame.width, frame.height, first.width, first.height
                        ),
                    });
                }
            }
            frames.push(frame);
        }
        let size = match (opts.sensor, frames.first()) {
            (Some(s), _) => s,
            (None, Some(f)) => f.size(),
            (None, None) => SensorSize::DAVIS240,
        };
        let events_path = root.join(EVENTS_FILE);
        let events = if events_path.exists() {
            let reader = EventReader::open(&events_path, size)?;
            let mut events = Vec::new();
            for e in reader {
                let e = e?;
                // A small tail past the last frame keeps its event slice complete.
                if t_end.is_some_and(|end| e.t > end + 1.0) {
                    break;
                }
                events.push(e);
            }
            EventStream::new(events, size)?
        } else {
            EventStream::empty(size)
        };
        let gt_path = root.join(GROUND_TRUTH_FILE);
        let mut ground_truth = if gt_path.exists() {
            load_ground_truth(&gt_path)?
        } else {
            Vec::new()
        };
        if let Some(end) = t_end {
            ground_truth.retain(|p| p.t <= end + 1.0);
        }
        Ok(Self {
            root: root.to_path_buf(),
            frames,
            events,
            ground_truth,
        })
    }
}
