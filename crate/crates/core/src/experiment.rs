//! Source comparison: turn a dataset into one frame sequence per source,
//! run the rotation pipeline on each and tabulate NC and APE.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset_io::{EventStream, GroundTruthPose, IntensityFrame};
use crate::evaluation::{report, AlignedPair, Metrics, DEFAULT_MAX_DT};
use crate::fusion::{fuse_sequence, FusionConfig};
use crate::representations::{
    histogram_equalize, render_representation, slice_for_frame, EventSlice, SitsBuilder,
    TimeSurfaceBuilder, DEFAULT_SITS_RADIUS, DEFAULT_SLICE_EVENTS, DEFAULT_TAU,
};
use crate::rotation_estimation::{
    run_pipeline, CameraIntrinsics, PipelineConfig, RotationTrajectory,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Original,
    Enhanced,
    Slice,
    Ts,
    Sits,
    Eas,
}

impl Source {
    pub const ALL: [Source; 6] = [
        Source::Original,
        Source::Enhanced,
        Source::Slice,
        Source::Ts,
        Source::Sits,
        Source::Eas,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Source::Original => "original",
            Source::Enhanced => "enhanced",
            Source::Slice => "slice",
            Source::Ts => "ts",
            Source::Sits => "sits",
            Source::Eas => "eas",
        }
    }

    pub fn needs_events(self) -> bool {
        !matches!(self, Source::Original | Source::Enhanced)
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Source::ALL
            .into_iter()
            .find(|src| src.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Source::ALL.iter().map(|s| s.name()).collect();
                Error::InvalidArgument(format!(
                    "unknown source '{s}', expected one of: {}",
                    names.join(", ")
                ))
            })
    }
}

/// Parse a comma-separated source list, rejecting empty lists and duplicates.
pub fn parse_sources(list: &str) -> Result<Vec<Source>> {
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let src: Source = name.parse()?;
        if out.contains(&src) {
            return Err(Error::InvalidArgument(format!(
                "source '{name}' listed twice"
            )));
        }
        out.push(src);
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument(
            "no sources given: nothing to run".into(),
        ));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RepresentationConfig {
    /// Events per slice for the `slice` source.
    pub slice_events: usize,
    pub tau: f64,
    pub sits_radius: usize,
}

impl Default for RepresentationConfig {
    fn default() -> Self {
        Self {
            slice_events: DEFAULT_SLICE_EVENTS,
            tau: DEFAULT_TAU,
            sits_radius: DEFAULT_SITS_RADIUS,
        }
    }
}

impl RepresentationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.slice_events == 0 || !(self.tau > 0.0) || self.sits_radius == 0 {
            return Err(Error::InvalidArgument(format!(
                "invalid representation config {self:?}: slice_events, tau and sits_radius must be positive"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub fusion: FusionConfig,
    pub pipeline: PipelineConfig,
    pub representation: RepresentationConfig,
    pub max_dt: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            fusion: FusionConfig::default(),
            pipeline: PipelineConfig::default(),
            representation: RepresentationConfig::default(),
            max_dt: DEFAULT_MAX_DT,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.fusion.validate()?;
        self.pipeline.validate()?;
        self.representation.validate()?;
        if !(self.max_dt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "max_dt must be positive, got {}",
                self.max_dt
            )));
        }
        Ok(())
    }
}

/// The frame sequence a source feeds to the tracker, one frame per
/// intensity-frame timestamp.
pub fn build_source_frames(
    source: Source,
    frames: &[IntensityFrame],
    events: &EventStream,
    cfg: &ExperimentConfig,
) -> Result<Vec<IntensityFrame>> {
    let size = frames
        .first()
        .map(|f| f.size())
        .unwrap_or_else(|| events.size());
    if source.needs_events() && events.size() != size {
        return Err(Error::InvalidArgument(format!(
            "event sensor {}x{} does not match frames {}x{}",
            events.size().width,
            events.size().height,
            size.width,
            size.height
        )));
    }
    let rep = &cfg.representation;
    Ok(match source {
        Source::Original => frames.to_vec(),
        Source::Enhanced => frames.par_iter().map(histogram_equalize).collect(),
        Source::Slice => frames
            .par_iter()
            .map(|f| {
                let slice = slice_for_frame(events, f.t, rep.slice_events)
                    .unwrap_or_else(|_| EventSlice::empty(size));
                render_representation(&slice, f.t)
            })
            .collect(),
        Source::Ts => {
            let mut builder = TimeSurfaceBuilder::new(size);
            let mut out = Vec::with_capacity(frames.len());
            for f in frames {
                builder.advance_to(events, events.lower_bound(f.t));
                out.push(render_representation(&builder.snapshot(f.t, rep.tau)?, f.t));
            }
            out
        }
        Source::Sits => {
            let mut builder = SitsBuilder::new(size, rep.sits_radius)?;
            let mut out = Vec::with_capacity(frames.len());
            for f in frames {
                builder.advance_to(events, events.lower_bound(f.t));
                out.push(render_representation(builder.map(), f.t));
            }
            out
        }
        Source::Eas => fuse_sequence(frames, events, &cfg.fusion)?
            .iter()
            .map(|f| f.to_frame())
            .collect(),
    })
}

#[derive(Clone, Debug)]
pub struct SourceRun {
    pub source: Source,
    pub trajectory: RotationTrajectory,
    pub metrics: Metrics,
    pub aligned: Vec<AlignedPair>,
}

pub fn run_source(
    source: Source,
    frames: &[IntensityFrame],
    events: &EventStream,
    ground_truth: &[GroundTruthPose],
    intrinsics: &CameraIntrinsics,
    cfg: &ExperimentConfig,
) -> Result<SourceRun> {
    cfg.validate()?;
    let input = build_source_frames(source, frames, events, cfg)?;
    let trajectory = run_pipeline(&input, &cfg.pipeline, intrinsics, cfg.seed)?;
    let (metrics, aligned) = report(&trajectory, ground_truth, cfg.max_dt)?;
    Ok(SourceRun {
        source,
        trajectory,
        metrics,
        aligned,
    })
}

/// One table row: the metrics of a source, or why it failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceOutcome {
    pub source: Source,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub metrics: Option<Metrics>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl SourceOutcome {
    pub fn from_run(run: &Result<SourceRun>, source: Source) -> Self {
        match run {
            Ok(r) => Self {
                source,
                metrics: Some(r.metrics.clone()),
                error: None,
            },
            Err(e) => Self {
                source,
                metrics: None,
                error: Some(e.to_string()),
            },
        }
    }
}

/// Fixed-width text table: source, average NC, average APE, fallback share.
pub fn format_table(rows: &[SourceOutcome]) -> String {
    let mut out = format!(
        "{:<10} {:>10} {:>14} {:>10} {:>8}\n",
        "source", "avg_nc", "avg_ape_rad", "fallback", "frames"
    );
    for r in rows {
        match &r.metrics {
            Some(m) => out.push_str(&format!(
                "{:<10} {:>10.2} {:>14.6} {:>10.4} {:>8}\n",
                r.source.name(),
                m.average_nc,
                m.average_ape,
                m.fallback_fraction,
                m.frames
            )),
            None => out.push_str(&format!(
                "{:<10} failed: {}\n",
                r.source.name(),
                r.error.as_deref().unwrap_or("unknown error")
            )),
        }
    }
    out
}

pub fn format_table_csv(rows: &[SourceOutcome]) -> String {
    let mut out = String::from(
        "source,average_nc,average_ape,max_ape,fallback_fraction,frames,evaluated,error\n",
    );
    for r in rows {
        match &r.metrics {
            Some(m) => out.push_str(&format!(
                "{},{:.6},{:.9},{:.9},{:.6},{},{},\n",
                r.source.name(),
                m.average_nc,
                m.average_ape,
                m.max_ape,
                m.fallback_fraction,
                m.frames,
                m.evaluated
            )),
            None => out.push_str(&format!(
                "{},,,,,,,\"{}\"\n",
                r.source.name(),
                r.error.as_deref().unwrap_or("").replace('"', "'")
            )),
        }
    }
    out
}
