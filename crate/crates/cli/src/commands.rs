use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use evfuse::dataset_io::{
    load_events, load_ground_truth, read_trajectory_csv, write_grayscale_png, write_svg_plot,
    write_trajectory_csv, Dataset, IntensityFrame, LoadOptions, SensorSize, FRAME_INDEX_FILE,
    IMAGES_DIR,
};
use evfuse::evaluation::{euler_csv_string, euler_series, report, Metrics};
use evfuse::experiment::{
    build_source_frames, parse_sources, run_source, ExperimentConfig, RepresentationConfig, Source,
    SourceOutcome,
};
use evfuse::fusion::{fuse_sequence, FusionConfig};
use evfuse::rotation_estimation::{run_pipeline_observed, CameraIntrinsics, ESSENTIAL_SOLVER};
use evfuse::synthetic::{
    export_dataset, DimSector, MotionScript, SceneConfig, SyntheticScene, INTRINSICS_FILE,
};

use crate::args::{
    DatasetArgs, EstimateArgs, EvaluateArgs, FuseArgs, PipelineArgs, RepresentArgs, RepresentKind,
    SimulateArgs,
};
use crate::config::{
    apply_experiment, apply_fusion, experiment_config, load_file, load_intrinsics, parse_floats,
};
use crate::manifest::RunManifest;
use crate::{CliError, CliResult};

fn ensure_parent(path: &Path) -> CliResult<()> {
    match path.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(dir) => fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e)),
        None => Ok(()),
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    ensure_parent(path)?;
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn load_dataset(root: &Path, max_duration: Option<f64>) -> CliResult<Dataset> {
    if !root.join(FRAME_INDEX_FILE).exists() {
        return Err(CliError::Data(format!(
            "{} has no {FRAME_INDEX_FILE}",
            root.display()
        )));
    }
    let ds = Dataset::load(
        root,
        LoadOptions {
            max_duration,
            sensor: None,
        },
    )?;
    if ds.frames.is_empty() {
        return Err(CliError::Data(format!(
            "{} contains no frames",
            root.display()
        )));
    }
    info!(
        "loaded {}: {} frames, {} events, {} poses",
        root.display(),
        ds.frames.len(),
        ds.events.len(),
        ds.ground_truth.len()
    );
    Ok(ds)
}

fn intrinsics_for(
    explicit: Option<&Path>,
    dataset: &Path,
) -> CliResult<(CameraIntrinsics, PathBuf)> {
    let path = explicit
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dataset.join(INTRINSICS_FILE));
    if !path.exists() {
        return Err(CliError::Config(format!(
            "intrinsics file {} not found (pass --intrinsics)",
            path.display()
        )));
    }
    Ok((load_intrinsics(&path)?, path))
}

/// PNGs named `frame_%08d.png` plus an `images.txt` index, so the output
/// directory can itself be read back as a frame sequence.
fn write_frame_dir(frames: &[IntensityFrame], out: &Path) -> CliResult<Vec<String>> {
    let images = out.join(IMAGES_DIR);
    fs::create_dir_all(&images).map_err(|e| CliError::io(&images, e))?;
    let names: Vec<String> = (0..frames.len())
        .map(|i| format!("{IMAGES_DIR}/frame_{i:08}.png"))
        .collect();
    frames
        .par_iter()
        .zip(&names)
        .try_for_each(|(f, name)| write_grayscale_png(f, &out.join(name)))?;
    let mut index = String::new();
    for (f, name) in frames.iter().zip(&names) {
        writeln!(index, "{:.9} {name}", f.t).unwrap();
    }
    write(&out.join(FRAME_INDEX_FILE), index)?;
    Ok(names)
}

pub fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let mut cfg: SceneConfig = match &a.config {
        Some(p) => load_file(p)?,
        None => SceneConfig {
            duration: 10.0,
            ..Default::default()
        },
    };
    if let Some(v) = a.duration {
        cfg.duration = v;
    }
    if let Some(v) = a.contrast {
        cfg.contrast_threshold = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.fps {
        cfg.frame_rate = v;
    }
    if let Some(v) = a.frame_max {
        cfg.frame_max = v;
    }
    if let Some(v) = a.noise_rate {
        cfg.noise_rate = v;
    }
    if let Some(v) = a.jitter {
        cfg.translation_jitter = v;
    }
    if let Some(v) = a.sample_rate {
        cfg.sample_rate = v;
    }
    if let Some(s) = &a.dim_sector {
        let [lon_min, lon_max, factor] = parse_floats::<3>(s, "dim sector")?;
        cfg.dim_sector = Some(DimSector {
            lon_min,
            lon_max,
            factor,
        });
    }
    if let Some(s) = &a.omega {
        cfg.motion = MotionScript::constant(parse_floats::<3>(s, "omega")?);
    } else if a.config.is_none() {
        if !(a.max_omega >= 0.0 && a.segment > 0.0) {
            return Err(CliError::Config(
                "--max-omega must be >= 0 and --segment > 0".into(),
            ));
        }
        cfg.motion = MotionScript::random_piecewise(cfg.duration, a.segment, a.max_omega, cfg.seed);
    }
    let scene = SyntheticScene::new(cfg)?;
    info!("simulating {:.2} s", scene.config.duration);
    let data = scene.simulate();
    export_dataset(&data, &a.out)?;
    write(&a.out.join("scene.json"), json(&scene.config))?;
    println!(
        "wrote {}: {} frames, {} events, {} poses",
        a.out.display(),
        data.frames.len(),
        data.events.len(),
        data.ground_truth.len()
    );
    Ok(())
}

pub fn represent(a: &RepresentArgs) -> CliResult<()> {
    let DatasetArgs {
        dataset,
        max_duration,
    } = &a.data;
    let ds = load_dataset(dataset, *max_duration)?;
    let mut cfg = ExperimentConfig::default();
    let rep = &mut cfg.representation;
    if let Some(v) = a.n_events {
        rep.slice_events = v;
    }
    if let Some(v) = a.tau {
        rep.tau = v;
    }
    if let Some(v) = a.radius {
        rep.sits_radius = v;
    }
    cfg.representation.validate()?;
    let source = match a.kind {
        RepresentKind::Slice => Source::Slice,
        RepresentKind::Ts => Source::Ts,
        RepresentKind::Sits => Source::Sits,
        RepresentKind::Eq => Source::Enhanced,
    };
    let frames = build_source_frames(source, &ds.frames, &ds.events, &cfg)?;
    write_frame_dir(&frames, &a.out)?;
    #[derive(Serialize)]
    struct Sidecar<'a> {
        kind: &'a str,
        representation: &'a RepresentationConfig,
        frames: usize,
    }
    write(
        &a.out.join("representation.json"),
        json(&Sidecar {
            kind: source.name(),
            representation: &cfg.representation,
            frames: frames.len(),
        }),
    )?;
    println!(
        "wrote {} {} frames to {}",
        frames.len(),
        source,
        a.out.display()
    );
    Ok(())
}

pub fn fuse(a: &FuseArgs) -> CliResult<()> {
    let mut ds = load_dataset(&a.frames, a.max_duration)?;
    if let Some(path) = &a.events {
        let size = ds.frames[0].size();
        ds.events = load_events(path, SensorSize::new(size.width, size.height))?;
    }
    if ds.events.is_empty() {
        warn!("no events: every frame passes through unchanged");
    }
    let mut cfg: FusionConfig = match &a.config {
        Some(p) => load_file::<ExperimentConfig>(p)?.fusion,
        None => FusionConfig::default(),
    };
    apply_fusion(&mut cfg, &a.fusion);
    cfg.validate()?;
    let fused = fuse_sequence(&ds.frames, &ds.events, &cfg)?;
    let frames: Vec<IntensityFrame> = fused.iter().map(|f| f.to_frame()).collect();
    let names = write_frame_dir(&frames, &a.out)?;

    #[derive(Serialize)]
    struct FrameInfo<'a> {
        t: f64,
        file: &'a str,
        alpha_used: f64,
        passthrough: bool,
    }
    #[derive(Serialize)]
    struct Sidecar<'a> {
        fusion: &'a FusionConfig,
        frames: Vec<FrameInfo<'a>>,
    }
    let sidecar = Sidecar {
        fusion: &cfg,
        frames: fused
            .iter()
            .zip(&names)
            .map(|(f, name)| FrameInfo {
                t: f.t,
                file: name,
                alpha_used: f.alpha_used,
                passthrough: f.passthrough,
            })
            .collect(),
    };
    write(&a.out.join("fusion.json"), json(&sidecar))?;
    let passed = fused.iter().filter(|f| f.passthrough).count();
    println!(
        "fused {} frames ({} passed through) into {}",
        fused.len(),
        passed,
        a.out.display()
    );
    Ok(())
}

pub fn estimate(a: &EstimateArgs) -> CliResult<()> {
    let source: Source = a.source.parse()?;
    let cfg = experiment_config(&a.overrides)?;
    let (intrinsics, intrinsics_path) = intrinsics_for(a.intrinsics.as_deref(), &a.data.dataset)?;
    let ds = load_dataset(&a.data.dataset, a.data.max_duration)?;
    let input = build_source_frames(source, &ds.frames, &ds.events, &cfg)?;

    if let Some(dir) = &a.dump_tracks {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut dump_err = None;
    let traj = run_pipeline_observed(
        &input,
        &cfg.pipeline,
        &intrinsics,
        cfg.seed,
        &mut |k, set| {
            if let (Some(dir), None) = (&a.dump_tracks, &dump_err) {
                let path = dir.join(format!("tracks_{k:06}.csv"));
                if let Err(e) = fs::write(&path, set.to_csv()) {
                    dump_err = Some(CliError::io(path, e));
                }
            }
        },
    )?;
    if let Some(e) = dump_err {
        return Err(e);
    }
    ensure_parent(&a.out)?;
    write_trajectory_csv(&traj, &a.out)?;

    #[derive(Serialize)]
    struct Meta<'a> {
        tool_version: &'a str,
        essential_solver: &'a str,
        source: Source,
        dataset: &'a Path,
        intrinsics_file: &'a Path,
        intrinsics: CameraIntrinsics,
        config: &'a ExperimentConfig,
        frames: usize,
        fallback_fraction: f64,
        average_nc: f64,
    }
    let meta = Meta {
        tool_version: env!("CARGO_PKG_VERSION"),
        essential_solver: ESSENTIAL_SOLVER,
        source,
        dataset: &a.data.dataset,
        intrinsics_file: &intrinsics_path,
        intrinsics,
        config: &cfg,
        frames: traj.len(),
        fallback_fraction: traj.fallback_fraction(),
        average_nc: evfuse::rotation_estimation::average_nc(&traj),
    };
    write(&a.out.with_extension("meta.json"), json(&meta))?;
    println!(
        "{source}: {} frames, average NC {:.2}, fallback {:.1}% -> {}",
        traj.len(),
        meta.average_nc,
        100.0 * meta.fallback_fraction,
        a.out.display()
    );
    Ok(())
}

pub fn evaluate(a: &EvaluateArgs) -> CliResult<Metrics> {
    if !(a.max_dt > 0.0) {
        return Err(CliError::Config(format!(
            "--max-dt must be positive, got {}",
            a.max_dt
        )));
    }
    let traj = read_trajectory_csv(&a.est)?;
    let gt = load_ground_truth(&a.gt)?;
    let (metrics, pairs) = report(&traj, &gt, a.max_dt)?;
    let out = a.out.clone().unwrap_or_else(|| {
        a.est
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."))
    });
    write(&out.join("metrics.json"), json(&metrics))?;
    write(&out.join("euler.csv"), euler_csv_string(&pairs))?;
    write_svg_plot(&euler_series(&pairs, "estimate"), &out.join("euler.svg"))?;
    print!("{}", json(&metrics));
    if let Some(bound) = a.fail_above {
        if !(metrics.average_ape <= bound) {
            return Err(CliError::Bound(format!(
                "average APE {:.6} rad exceeds {bound}",
                metrics.average_ape
            )));
        }
    }
    Ok(metrics)
}

/// Table rows and the manifest of a `pipeline` run.
pub struct PipelineOutput {
    pub manifest: RunManifest,
    pub table: String,
    pub table_csv: String,
}

pub fn pipeline(a: &PipelineArgs) -> CliResult<PipelineOutput> {
    let mut manifest = match &a.from_manifest {
        Some(path) => {
            let mut m = RunManifest::load(path)?;
            apply_experiment(&mut m.config, &a.overrides);
            m.config.validate()?;
            m.seed = m.config.seed;
            m
        }
        None => {
            let dataset = a.dataset.clone().ok_or_else(|| {
                CliError::Config("--dataset or --from-manifest is required".into())
            })?;
            let sources = parse_sources(&a.sources)?;
            let cfg = experiment_config(&a.overrides)?;
            let (intrinsics, _) = intrinsics_for(a.intrinsics.as_deref(), &dataset)?;
            RunManifest::new(dataset, a.max_duration, intrinsics, sources, cfg)
        }
    };
    let ds = load_dataset(&manifest.dataset, manifest.max_duration)?;
    if ds.ground_truth.is_empty() {
        return Err(CliError::Data(format!(
            "{} has no ground truth to evaluate against",
            manifest.dataset.display()
        )));
    }

    let cfg = manifest.config.clone();
    let runs: Vec<_> = manifest
        .sources
        .par_iter()
        .map(|&s| {
            let r = run_source(
                s,
                &ds.frames,
                &ds.events,
                &ds.ground_truth,
                &manifest.intrinsics,
                &cfg,
            );
            if let Err(e) = &r {
                warn!("{s} failed: {e}");
            }
            (s, r)
        })
        .collect();

    let traj_dir = a.out.join("trajectories");
    fs::create_dir_all(&traj_dir).map_err(|e| CliError::io(&traj_dir, e))?;
    for (s, r) in &runs {
        if let Ok(run) = r {
            write_trajectory_csv(&run.trajectory, &traj_dir.join(format!("{s}.csv")))?;
            write(
                &traj_dir.join(format!("{s}_euler.csv")),
                euler_csv_string(&run.aligned),
            )?;
            write_svg_plot(
                &euler_series(&run.aligned, s.name()),
                &traj_dir.join(format!("{s}_euler.svg")),
            )?;
        }
    }
    manifest.results = runs
        .iter()
        .map(|(s, r)| SourceOutcome::from_run(r, *s))
        .collect();
    let table = evfuse::experiment::format_table(&manifest.results);
    let table_csv = evfuse::experiment::format_table_csv(&manifest.results);
    write(&a.out.join("table.txt"), &table)?;
    write(&a.out.join("table.csv"), &table_csv)?;
    write(&a.out.join("manifest.json"), manifest.to_json())?;
    print!("{table}");

    if manifest.results.iter().all(|r| r.metrics.is_none()) {
        return Err(CliError::Data("every source failed".into()));
    }
    if let Some(bound) = a.fail_above {
        let worst = manifest
            .results
            .iter()
            .filter_map(|r| r.metrics.as_ref().map(|m| (r.source, m.average_ape)))
            .find(|&(_, ape)| !(ape <= bound));
        if let Some((s, ape)) = worst {
            return Err(CliError::Bound(format!(
                "{s}: average APE {ape:.6} rad exceeds {bound}"
            )));
        }
    }
    Ok(PipelineOutput {
        manifest,
        table,
        table_csv,
    })
}
