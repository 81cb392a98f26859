//! Command-line front end: `simulate`, `process`, `evaluate`, `plot-speeds`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use pointvel_core::metrics::{speed_series, TrackingParams};
use pointvel_core::{ContextWindow, ObjectTrack};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pipeline::{evaluate, process_frame, simulate_frame, track_objects};
use crate::plot::{speeds_csv, speeds_svg};
use crate::report::write_report;
use crate::scene::{SceneFile, DEMO_SCENE};
use crate::sequence::{
    read_estimates, write_estimates, EstimateFrame, EstimateSet, ProcessSettings, SequenceReader, SequenceWriter,
};

pub const TIMING_FILE: &str = "timing.csv";

#[derive(Debug, Parser)]
#[command(name = "pointvel", version, about = "Point-wise 3D velocity from radar, optical flow and LiDAR")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesise a frame sequence from a scene file.
    Simulate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scene's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Estimate per-point velocities for every frame of a sequence.
    Process {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        window_az: usize,
        #[arg(long, default_value_t = 10)]
        window_el: usize,
        #[arg(long, default_value_t = 20)]
        window_range: usize,
        /// Defaults to the sequence's radar configuration (5 dB unless changed).
        #[arg(long)]
        threshold_db: Option<f64>,
        #[arg(long, default_value_t = 1e6)]
        cond_bound: f64,
    },
    /// Object-wise AVE / AVAE of estimates against a simulated sequence.
    Evaluate {
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Report file (TOML).
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tracking: TrackingArgs,
    },
    /// Per-object speed, radial and tangential curves as CSV and SVG.
    PlotSpeeds {
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        svg: PathBuf,
        #[command(flatten)]
        tracking: TrackingArgs,
    },
    /// Print the bundled demo scene file.
    DemoScene,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct TrackingArgs {
    /// Clustering neighbourhood radius, meters.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 3)]
    pub min_points: usize,
    /// Largest centroid jump between frames for one track, meters.
    #[arg(long, default_value_t = 0.5)]
    pub gate: f64,
}

/// Parses `args` (program name first), runs the command and maps failures
/// to a single `error kind=… message=…` line on stderr.
pub fn run_main<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let message: Vec<&str> = text
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:"))
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!("error kind=usage message={}", message.join(" ").trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report_line());
            ExitCode::FAILURE
        }
    }
}

pub fn run(command: &Command) -> Result<()> {
    match command {
        Command::Simulate { scene, out, seed } => simulate(scene, out, *seed),
        Command::Process { input, out, window_az, window_el, window_range, threshold_db, cond_bound } => {
            let window = ContextWindow { azimuth_extent: *window_az, elevation_extent: *window_el, range_extent: *window_range };
            process(input, out, window, *threshold_db, *cond_bound)
        }
        Command::Evaluate { est, truth, out, tracking } => {
            let tracks = tracks_for(est, truth, tracking)?;
            write_report(out, &evaluate(&tracks, est)?)
        }
        Command::PlotSpeeds { est, truth, csv, svg, tracking } => plot_speeds(est, truth, csv, svg, tracking),
        Command::DemoScene => {
            print!("{DEMO_SCENE}");
            Ok(())
        }
    }
}

pub fn simulate(scene_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut scene = SceneFile::load(scene_path)?;
    if let Some(seed) = seed {
        scene.scene.seed = seed;
    }
    let writer = SequenceWriter::create(out, scene.radar, scene.camera.clone(), scene.scene.frame_interval)?;
    let names = (0..scene.scene.n_frames)
        .into_par_iter()
        .map(|k| {
            let frame = simulate_frame(&scene, k).map_err(|e| Error::core(scene_path, e))?;
            writer.write_frame(&frame)
        })
        .collect::<Result<Vec<_>>>()?;
    writer.finish(names)
}

pub fn process(input: &Path, out: &Path, window: ContextWindow, threshold_db: Option<f64>, cond_bound: f64) -> Result<()> {
    let reader = SequenceReader::open(input)?;
    let manifest = reader.manifest();
    let settings = ProcessSettings { threshold_db: threshold_db.unwrap_or(manifest.radar.threshold_db), cond_bound, window };
    let flag = |field: &str, e: pointvel_core::Error| Error::schema("<command line>", format!("{field}: {e}"));
    window.validate().map_err(|e| flag("--window-*", e))?;
    if !(settings.threshold_db.is_finite() && settings.threshold_db >= 0.0) {
        return Err(Error::schema("<command line>", format!("--threshold-db: must be >= 0, got {}", settings.threshold_db)));
    }
    if !(cond_bound.is_finite() && cond_bound > 1.0) {
        return Err(Error::schema("<command line>", format!("--cond-bound: must be > 1, got {cond_bound}")));
    }

    let results = (0..reader.len())
        .into_par_iter()
        .map(|position| -> Result<(EstimateFrame, Option<f64>)> {
            let (frame_index, timestamp) = reader.frame_time(position)?;
            let incoming = match position {
                0 => None,
                p => reader.read_flow(p - 1)?,
            };
            let Some(flow) = incoming else {
                return Ok((EstimateFrame { frame_index, timestamp, cloud: None }, None));
            };
            let adc = reader.read_adc(position)?;
            let lidar = reader.read_lidar(position)?;
            let start = Instant::now();
            let cloud = process_frame(&adc, &lidar, &flow, &manifest.camera, &settings)
                .map_err(|e| Error::core(reader.dir().join(crate::sequence::frame_dir_name(frame_index)), e))?;
            let seconds = start.elapsed().as_secs_f64();
            Ok((EstimateFrame { frame_index, timestamp, cloud: Some(cloud) }, Some(seconds)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut timing = String::from("frame,seconds\n");
    let mut frames = Vec::with_capacity(results.len());
    for (frame, seconds) in results {
        if let Some(s) = seconds {
            let _ = writeln!(timing, "{},{s:.6}", frame.frame_index);
        }
        frames.push(frame);
    }
    write_estimates(out, &EstimateSet { frame_interval: manifest.frame_interval, settings, frames })?;
    let timing_path = out.join(TIMING_FILE);
    fs::write(&timing_path, timing).map_err(|e| Error::io(&timing_path, e))
}

pub fn tracks_for(est: &Path, truth: &Path, args: &TrackingArgs) -> Result<Vec<ObjectTrack>> {
    let reader = SequenceReader::open(truth)?;
    let estimates = read_estimates(est)?;
    let params = TrackingParams {
        eps: args.eps,
        min_points: args.min_points,
        gate: args.gate,
        dt: reader.manifest().frame_interval,
    };
    if !(args.gate.is_finite() && args.gate > 0.0) {
        return Err(Error::schema("<command line>", format!("--gate: must be > 0, got {}", args.gate)));
    }
    track_objects(&reader, &estimates, est, &params)
}

fn plot_speeds(est: &Path, truth: &Path, csv: &Path, svg: &Path, args: &TrackingArgs) -> Result<()> {
    let tracks = tracks_for(est, truth, args)?;
    let dt = SequenceReader::open(truth)?.manifest().frame_interval;
    let samples = speed_series(&tracks).map_err(|e| Error::core(est, e))?;
    fs::write(csv, speeds_csv(&samples, dt)).map_err(|e| Error::io(csv, e))?;
    fs::write(svg, speeds_svg(&samples, dt)).map_err(|e| Error::io(svg, e))
}
