use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use super::{Event, EventStream, GroundTruthPose, Polarity, SensorSize};
use crate::geometry::canonical_quaternion;
use crate::{Error, Result};

/// Quaternions within this distance of unit norm are renormalized on load.
const QUATERNION_NORM_TOLERANCE: f64 = 1e-3;

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn split_fields<'a>(
    path: &Path,
    line_no: usize,
    line: &'a str,
    expected: usize,
) -> Result<Vec<&'a str>> {
    let fields: Vec<&str> = line.split_ascii_whitespace().collect();
    if fields.len() != expected {
        return Err(parse_err(
            path,
            line_no,
            format!("expected {expected} fields, found {}", fields.len()),
        ));
    }
    Ok(fields)
}

fn parse_f64(path: &Path, line_no: usize, field: &str, what: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| parse_err(path, line_no, format!("invalid {what} {field:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line_no, format!("non-finite {what}")));
    }
    Ok(v)
}

/// Pull-based event parser over `t x y p` lines.
///
/// Checks pixel bounds and timestamp ordering as it goes; `max_regression`
/// is the tolerated backwards jump in seconds (zero by default).
pub struct EventReader<R> {
    lines: std::io::Lines<R>,
    path: PathBuf,
    size: SensorSize,
    line_no: usize,
    last_t: f64,
    max_regression: f64,
    failed: bool,
}

impl EventReader<BufReader<File>> {
    pub fn open(path: &Path, size: SensorSize) -> Result<Self> {
        Ok(Self::new(open(path)?, path, size))
    }
}

impl<R: BufRead> EventReader<R> {
    pub fn new(reader: R, path: &Path, size: SensorSize) -> Self {
        Self {
            lines: reader.lines(),
            path: path.to_path_buf(),
            size,
            line_no: 0,
            last_t: f64::NEG_INFINITY,
            max_regression: 0.0,
            failed: false,
        }
    }

    pub fn with_max_regression(mut self, slack: f64) -> Self {
        self.max_regression = slack;
        self
    }

    fn parse_line(&mut self, line: &str) -> Result<Event> {
        let path = self.path.as_path();
        let n = self.line_no;
        let f = split_fields(path, n, line, 4)?;
        let t = parse_f64(path, n, f[0], "timestamp")?;
        if t < 0.0 {
            return Err(parse_err(path, n, "negative timestamp"));
        }
        let x: u32 = f[1]
            .parse()
            .map_err(|_| parse_err(path, n, format!("invalid x {:?}", f[1])))?;
        let y: u32 = f[2]
            .parse()
            .map_err(|_| parse_err(path, n, format!("invalid y {:?}", f[2])))?;
        let polarity = f[3]
            .parse::<u8>()
            .ok()
            .and_then(Polarity::from_bit)
            .ok_or_else(|| parse_err(path, n, format!("invalid polarity {:?}", f[3])))?;
        if x >= self.size.width {
            return Err(parse_err(
                path,
                n,
                format!("x={x} out of bounds for width {}", self.size.width),
            ));
        }
        if y >= self.size.height {
            return Err(parse_err(
                path,
                n,
                format!("y={y} out of bounds for height {}", self.size.height),
            ));
        }
        if t < self.last_t - self.max_regression {
            return Err(parse_err(
                path,
                n,
                format!("timestamp {t} precedes previous {}", self.last_t),
            ));
        }
        self.last_t = self.last_t.max(t);
        Ok(Event {
            t,
            x: x as u16,
            y: y as u16,
            polarity,
        })
    }
}

impl<R: BufRead> Iterator for EventReader<R> {
    type Item = Result<Event>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(Error::io(&self.path, e)));
                }
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let parsed = self.parse_line(&line);
            self.failed = parsed.is_err();
            return Some(parsed);
        }
    }
}

/// Parse an events file held in memory.
pub fn parse_events<R: Read>(reader: R, path: &Path, size: SensorSize) -> Result<EventStream> {
    let events =
        EventReader::new(BufReader::new(reader), path, size).collect::<Result<Vec<_>>>()?;
    EventStream::new(events, size)
}

pub fn load_events(path: &Path, size: SensorSize) -> Result<EventStream> {
    let events = EventReader::open(path, size)?.collect::<Result<Vec<_>>>()?;
    EventStream::new(events, size)
}

/// One line of `images.txt`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameRecord {
    pub t: f64,
    pub path: PathBuf,
}

pub fn parse_frame_index<R: Read>(reader: R, path: &Path) -> Result<Vec<FrameRecord>> {
    let mut out: Vec<FrameRecord> = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f = split_fields(path, n, &line, 2)?;
        let t = parse_f64(path, n, f[0], "timestamp")?;
        if let Some(prev) = out.last() {
            if t < prev.t {
                return Err(parse_err(
                    path,
                    n,
                    format!("timestamp {t} precedes previous {}", prev.t),
                ));
            }
        }
        out.push(FrameRecord {
            t,
            path: PathBuf::from(f[1]),
        });
    }
    Ok(out)
}

pub fn load_frame_index(path: &Path) -> Result<Vec<FrameRecord>> {
    parse_frame_index(open(path)?, path)
}

pub fn parse_ground_truth<R: Read>(reader: R, path: &Path) -> Result<Vec<GroundTruthPose>> {
    let mut out: Vec<GroundTruthPose> = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let n = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f = split_fields(path, n, &line, 8)?;
        let mut v = [0.0; 8];
        for (slot, field) in v.iter_mut().zip(&f) {
            *slot = parse_f64(path, n, field, "value")?;
        }
        let q = Quaternion::new(v[7], v[4], v[5], v[6]);
        let norm = q.norm();
        if (norm - 1.0).abs() > QUATERNION_NORM_TOLERANCE {
            return Err(parse_err(
                path,
                n,
                format!("quaternion norm {norm} is not unit"),
            ));
        }
        if let Some(prev) = out.last() {
            if v[0] < prev.t {
                return Err(parse_err(
                    path,
                    n,
                    format!("timestamp {} precedes previous {}", v[0], prev.t),
                ));
            }
        }
        out.push(GroundTruthPose {
            t: v[0],
            translation: Vector3::new(v[1], v[2], v[3]),
            orientation: canonical_quaternion(UnitQuaternion::from_quaternion(q)),
        });
    }
    Ok(out)
}

pub fn load_ground_truth(path: &Path) -> Result<Vec<GroundTruthPose>> {
    parse_ground_truth(open(path)?, path)
}

pub fn format_event_line(e: &Event) -> String {
    format!("{:.9} {} {} {}", e.t, e.x, e.y, e.polarity.bit())
}

pub fn format_pose_line(p: &GroundTruthPose) -> String {
    let q = p.orientation;
    format!(
        "{:.9} {:.9} {:.9} {:.9} {:.9} {:.9} {:.9} {:.9}",
        p.t, p.translation.x, p.translation.y, p.translation.z, q.i, q.j, q.k, q.w
    )
}
