//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test -p pointvel --test acceptance`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use pointvel::pipeline::{evaluate, process_frame, simulate_frame, track_objects};
use pointvel::report::read_report;
use pointvel::scene::SceneFile;
use pointvel::sequence::{read_estimates, read_sequence, ProcessSettings, SequenceReader};
use pointvel_core::cube::bin_to_physical;
use pointvel_core::fusion::condition_number;
use pointvel_core::metrics::{avae, build_tracks, evaluate_samples, evaluate_tracks, ObjectSample, TrackingFrame, TrackingParams};
use pointvel_core::sim::simulate_adc;
use pointvel_core::{
    build_radar_cube, collapse_doppler, query_radial_velocity, solve_full_velocity, threshold_cube, ContextWindow,
    FramePair, Matrix3, RadarConfig, RadialLookup, Scatterer, SceneConfig, Vector2, Vector3, VelocityPoint,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Criterion {
    id: &'static str,
    title: &'static str,
    limit: Option<Duration>,
    check: fn() -> Result<String, String>,
}

const CRITERIA: [Criterion; 7] = [
    Criterion { id: "AC1", title: "radar chain accuracy", limit: Some(Duration::from_secs(10)), check: ac1_radar_chain },
    Criterion { id: "AC2", title: "closed-form round trip", limit: Some(Duration::from_secs(1)), check: ac2_round_trip },
    Criterion { id: "AC3", title: "end-to-end synthetic pipeline", limit: Some(Duration::from_secs(60)), check: ac3_end_to_end },
    Criterion { id: "AC4", title: "thresholding behaviour", limit: None, check: ac4_thresholding },
    Criterion { id: "AC5", title: "metric oracles", limit: None, check: ac5_metric_oracles },
    Criterion { id: "AC6", title: "window coverage", limit: None, check: ac6_window_coverage },
    Criterion { id: "AC7", title: "determinism and format robustness", limit: None, check: ac7_determinism_and_fuzz },
];

fn main() {
    let mut failed = 0;
    for c in &CRITERIA {
        let start = Instant::now();
        let result = catch_unwind(c.check).unwrap_or_else(|p| Err(format!("panicked: {}", panic_text(&p))));
        let elapsed = start.elapsed();
        let result = match (result, c.limit) {
            (Ok(detail), Some(limit)) if elapsed >= limit => Err(format!("{detail}; too slow ({elapsed:.2?} >= {limit:?})")),
            (r, _) => r,
        };
        let limit = c.limit.map(|l| format!(" < {l:?}")).unwrap_or_default();
        match result {
            Ok(detail) => println!("{} PASS {}: {detail} [{elapsed:.2?}{limit}]", c.id, c.title),
            Err(detail) => {
                failed += 1;
                println!("{} FAIL {}: {detail} [{elapsed:.2?}{limit}]", c.id, c.title);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn panic_text(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn polar_to_cartesian(range: f64, azimuth: f64, elevation: f64) -> Vector3<f64> {
    range * Vector3::new(elevation.cos() * azimuth.cos(), elevation.cos() * azimuth.sin(), elevation.sin())
}

/// A random single-scatterer configuration inside the unambiguous cube.
/// Angles stay within ±20° azimuth and ±12° elevation, where the
/// linear bin-to-angle map is accurate to well under one bin.
fn random_target(rng: &mut ChaCha8Rng, cfg: &RadarConfig) -> (Vector3<f64>, f64) {
    let range = rng.random_range(0.3..cfg.max_range() - cfg.range_resolution);
    let az = rng.random_range(-20f64..20.0).to_radians();
    let el = rng.random_range(-12f64..12.0).to_radians();
    let v = rng.random_range(-cfg.max_speed() + cfg.speed_resolution..cfg.max_speed() - cfg.speed_resolution);
    (polar_to_cartesian(range, az, el), v)
}

fn single_scene(position: Vector3<f64>, v_radial: f64) -> SceneConfig {
    SceneConfig {
        scatterers: vec![Scatterer { position, velocity: position.normalize() * v_radial, amplitude: 1.0 }],
        ..SceneConfig::default()
    }
}

fn ac1_radar_chain() -> Result<String, String> {
    let cfg = RadarConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xac1);
    let mut worst_bins = [0f64; 4];
    let mut worst_dv: f64 = 0.0;
    for trial in 0..20 {
        let (position, v) = random_target(&mut rng, &cfg);
        let adc = simulate_adc(&single_scene(position, v), 0, &cfg).map_err(|e| e.to_string())?;
        let cube = threshold_cube(&build_radar_cube(&adc).map_err(|e| e.to_string())?, cfg.threshold_db);
        let vc = collapse_doppler(&cube);
        let [r, a, e, d] = cube.argmax();
        let bin = bin_to_physical(r, a, e, d, &cfg).map_err(|e| e.to_string())?;
        let range = position.norm();
        let (az, el) = (position.y.atan2(position.x), (position.z / range).asin());
        let offsets = [
            (bin.range - range).abs() / cfg.range_resolution,
            (bin.azimuth - az).abs() / cfg.azimuth_bin_width(),
            (bin.elevation - el).abs() / cfg.elevation_bin_width(),
            (bin.velocity - v).abs() / cfg.speed_resolution,
        ];
        for (w, o) in worst_bins.iter_mut().zip(offsets) {
            *w = w.max(o);
        }
        ensure(offsets.iter().all(|&o| o <= 1.0), || format!("trial {trial}: argmax voxel off by {offsets:.3?} bins"))?;
        let voxel_v = vc.velocity(r, a, e).ok_or_else(|| format!("trial {trial}: argmax voxel invalid"))?;
        let RadialLookup::Found { velocity: queried, .. } = query_radial_velocity(&vc, &position, &ContextWindow::default())
        else {
            return Err(format!("trial {trial}: no radial velocity found at the target"));
        };
        for got in [voxel_v, queried] {
            let dv = (got - v).abs();
            worst_dv = worst_dv.max(dv);
            ensure(dv <= cfg.speed_resolution / 2.0, || format!("trial {trial}: radial velocity {got} vs {v}"))?;
        }
    }
    Ok(format!(
        "20/20 targets; worst offsets (range, az, el, doppler) = {worst_bins:.3?} bins (<= 1); worst |dv| = {worst_dv:.4} m/s (<= {:.4})",
        cfg.speed_resolution / 2.0
    ))
}

/// Rotation by `axis` (direction) through `|axis|` radians.
fn rodrigues(axis: Vector3<f64>) -> Matrix3<f64> {
    let theta = axis.norm();
    if theta == 0.0 {
        return Matrix3::identity();
    }
    let k = axis / theta;
    let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    Matrix3::identity() + kx * theta.sin() + kx * kx * (1.0 - theta.cos())
}

fn ac2_round_trip() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xac2);
    let mut u = |lo: f64, hi: f64| rng.random_range(lo..hi);
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut worst: f64 = 0.0;
    while accepted < 1000 {
        let v = Vector3::new(u(-3.0, 3.0), u(-3.0, 3.0), u(-3.0, 3.0));
        let rot = rodrigues(Vector3::new(u(-0.3, 0.3), u(-0.3, 0.3), u(-0.3, 0.3)));
        let q_b = Vector3::new(u(-2.0, 2.0), u(-2.0, 2.0), u(1.0, 10.0));
        let dt = u(0.01, 0.5);
        let lever = Vector3::new(u(-0.2, 0.2), u(-0.2, 0.2), u(-0.2, 0.2));
        let p_b = q_b - rot * v * dt;
        let r_hat = (rot.transpose() * q_b + lever).normalize();
        let p_norm = Vector2::new(p_b.x / p_b.z, p_b.y / p_b.z);
        let system = Matrix3::from_rows(&[
            rot.row(0) - rot.row(2) * p_norm.x,
            rot.row(1) - rot.row(2) * p_norm.y,
            r_hat.transpose(),
        ]);
        if p_b.z < 0.2 || v.norm() < 1e-3 || condition_number(&system) >= 1e4 {
            rejected += 1;
            continue;
        }
        let pair = FramePair::new(rot, dt).map_err(|e| e.to_string())?;
        let got = solve_full_velocity(&p_norm, &q_b, &r_hat, r_hat.dot(&v), &pair, 1e6).map_err(|e| e.to_string())?;
        let rel = (got - v).norm() / v.norm();
        worst = worst.max(rel);
        accepted += 1;
    }
    ensure(worst < 1e-9, || format!("worst relative error {worst:.3e} (need < 1e-9)"))?;
    Ok(format!("1000 draws (cond < 1e4, {rejected} rejected); worst relative error {worst:.2e} (< 1e-9)"))
}

fn ac3_end_to_end() -> Result<String, String> {
    let scene = SceneFile::demo();
    let settings = ProcessSettings {
        threshold_db: scene.radar.threshold_db,
        cond_bound: 1e6,
        window: ContextWindow::default(),
    };
    let n = scene.scene.n_frames;
    let mut lidar = Vec::with_capacity(n);
    let mut estimates: Vec<Option<Vec<VelocityPoint>>> = Vec::with_capacity(n);
    let mut incoming = None;
    for k in 0..n {
        let frame = simulate_frame(&scene, k).map_err(|e| e.to_string())?;
        let est = match &incoming {
            Some(flow) => Some(
                process_frame(&frame.adc, &frame.lidar, flow, &scene.camera, &settings).map_err(|e| e.to_string())?.points,
            ),
            None => None,
        };
        lidar.push(frame.lidar.points);
        estimates.push(est);
        incoming = frame.flow;
    }
    let frames: Vec<TrackingFrame<'_>> = lidar
        .iter()
        .zip(&estimates)
        .enumerate()
        .map(|(k, (points, est))| TrackingFrame { frame_index: k, points, estimates: est.as_deref() })
        .collect();
    let params = TrackingParams { dt: scene.scene.frame_interval, ..TrackingParams::default() };
    let tracks = build_tracks(&frames, &params).map_err(|e| e.to_string())?;
    let long: Vec<_> = tracks.iter().filter(|t| t.frames.len() == n).collect();
    ensure(tracks.len() == 3 && long.len() == 3, || format!("expected 3 full-length tracks, got {} tracks", tracks.len()))?;
    let report = evaluate_tracks(&tracks).map_err(|e| e.to_string())?;
    ensure(report.n_frames == 3 * (n - 1), || format!("only {} of {} track-frames evaluated", report.n_frames, 3 * (n - 1)))?;
    let avae_w = report.avae_w.ok_or("no AVAE_w (all objects static?)")?;
    let summary = format!(
        "AVE {:.4} m/s (<= 0.12), AVE_rad {:.4}, AVE_tan {:.4}, AVAE {:.3} deg, AVAE_w {avae_w:.3} deg (<= 10); {} track-frames",
        report.ave,
        report.ave_rad,
        report.ave_tan,
        report.avae.unwrap_or(f64::NAN),
        report.n_frames
    );
    ensure(report.ave <= 0.12 && avae_w <= 10.0, || summary.clone())?;
    Ok(summary)
}

fn ac4_thresholding() -> Result<String, String> {
    let cfg = RadarConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xac4);
    let mut total_valid = 0;
    let mut worst = (0usize, 0usize);
    let trials = 10;
    for trial in 0..trials {
        let (position, v) = random_target(&mut rng, &cfg);
        let cube = build_radar_cube(&simulate_adc(&single_scene(position, v), 0, &cfg).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let noise = cube.max() * 10f64.powf(-10.0 / 20.0);
        let noisy = cube.map_magnitudes(|_, m| m + rng.random_range(0.0..=noise));
        let vc = collapse_doppler(&threshold_cube(&noisy, cfg.threshold_db));
        let range = position.norm();
        let [r0, a0, _] = cfg
            .nearest_spatial_bin(range, position.y.atan2(position.x), (position.z / range).asin())
            .ok_or("target outside the cube")?;
        let [nr, na, ne] = vc.shape();
        let mut found_target = false;
        for r in 0..nr {
            for a in 0..na {
                for e in 0..ne {
                    if vc.velocity(r, a, e).is_none() {
                        continue;
                    }
                    total_valid += 1;
                    let (dr, da) = (r.abs_diff(r0), a.abs_diff(a0));
                    worst = (worst.0.max(dr), worst.1.max(da));
                    found_target |= dr <= 1 && da <= 1;
                    ensure(dr <= 3 && da <= 3, || format!("trial {trial}: valid voxel ({r}, {a}, {e}) is {dr}/{da} bins from ({r0}, {a0})"))?;
                }
            }
        }
        ensure(found_target, || format!("trial {trial}: the target itself was thresholded away"))?;
    }
    Ok(format!(
        "{trials} targets with U[0, peak - 10 dB] noise: {total_valid} valid voxels, all within (range {}, azimuth {}) <= 3 bins",
        worst.0, worst.1
    ))
}

/// Independent recomputation: explicit projections and the arccos angle.
fn brute_force_metrics(samples: &[ObjectSample]) -> [f64; 5] {
    let n = samples.len() as f64;
    let (mut ave, mut rad, mut tan) = (0.0, 0.0, 0.0);
    let (mut ang, mut wang, mut wsum, mut m) = (0.0, 0.0, 0.0, 0.0);
    for s in samples {
        let u = s.position / s.position.norm();
        let (er, tr) = (u * s.estimate.dot(&u), u * s.truth.dot(&u));
        ave += ((s.estimate - s.truth).dot(&(s.estimate - s.truth))).sqrt();
        rad += (er - tr).norm();
        tan += ((s.estimate - er) - (s.truth - tr)).norm();
        let (ne, nt) = (s.estimate.norm(), s.truth.norm());
        if ne >= 1e-6 && nt >= 1e-6 {
            let a = (s.estimate.dot(&s.truth) / (ne * nt)).clamp(-1.0, 1.0).acos() * 180.0 / std::f64::consts::PI;
            ang += a;
            wang += nt * a;
            wsum += nt;
            m += 1.0;
        }
    }
    [ave / n, rad / n, tan / n, ang / m, wang / wsum]
}

fn ac5_metric_oracles() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xac5);
    let mut worst: f64 = 0.0;
    for instance in 0..100 {
        let n = rng.random_range(1..30);
        let v = |rng: &mut ChaCha8Rng| Vector3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let mut samples: Vec<ObjectSample> = (0..n)
            .map(|_| ObjectSample { estimate: v(&mut rng), truth: v(&mut rng), position: v(&mut rng) + Vector3::new(5.0, 0.0, 0.0) })
            .collect();
        // Static objects exercise the angular exclusion.
        if rng.random_bool(0.3) && n > 1 {
            samples[0].truth = Vector3::zeros();
        }
        let report = evaluate_samples(&samples).map_err(|e| e.to_string())?;
        let got = [report.ave, report.ave_rad, report.ave_tan, report.avae.unwrap(), report.avae_w.unwrap()];
        let want = brute_force_metrics(&samples);
        for (g, w) in got.iter().zip(&want) {
            let err = (g - w).abs() / w.abs().max(1.0);
            worst = worst.max(err);
            ensure(err <= 1e-12, || format!("instance {instance}: {got:?} vs brute force {want:?}"))?;
        }
    }
    // Two objects: 30 deg off at truth speed 2, 90 deg off at truth speed 1.
    let truth = [Vector3::new(2.0, 0.0, 0.0), Vector3::new(0.0, 0.0, 1.0)];
    let est = [Vector3::new(30f64.to_radians().cos(), 30f64.to_radians().sin(), 0.0), Vector3::new(1.0, 0.0, 0.0)];
    let plain = avae(&est, &truth, false).map_err(|e| e.to_string())?.degrees;
    let weighted = avae(&est, &truth, true).map_err(|e| e.to_string())?.degrees;
    ensure((weighted - 50.0).abs() <= 1e-12 && (plain - 60.0).abs() <= 1e-12, || {
        format!("hand example gave AVAE {plain} / AVAE_w {weighted}, expected 60 / 50")
    })?;
    Ok(format!("100 instances within {worst:.1e} (<= 1e-12) of brute force; 30/90 deg example: AVAE {plain} deg, AVAE_w {weighted} deg"))
}

/// Rounds to three significant figures and prints the digits kept.
fn sig3(x: f64) -> String {
    let decimals = (2 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

fn ac6_window_coverage() -> Result<String, String> {
    let (az, el, range) = ContextWindow::default().physical_coverage(&RadarConfig::default());
    let got = [sig3(az.to_degrees()), sig3(el.to_degrees()), sig3(range)];
    let want = ["20.0", "50.0", "0.938"];
    ensure(got == want, || format!("coverage {got:?}, expected {want:?}"))?;
    Ok(format!("10/10/20 bins cover {} deg x {} deg x {} m", got[0], got[1], got[2]))
}

fn pointvel_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pointvel"))
}

fn run_cli(args: &[&Path]) -> Result<(), String> {
    let out = pointvel_bin().args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn cli_chain(scene: &Path, root: &Path) -> Result<(), String> {
    let p = |s: &str| root.join(s);
    let (seq, est) = (p("seq"), p("est"));
    let a = |s: &'static str| -> &Path { Path::new(s) };
    run_cli(&[a("simulate"), a("--scene"), scene, a("--out"), &seq, a("--seed"), a("7")])?;
    run_cli(&[a("process"), a("--in"), &seq, a("--out"), &est])?;
    run_cli(&[a("evaluate"), a("--est"), &est, a("--truth"), &seq, a("--out"), &p("report.toml")])?;
    run_cli(&[a("plot-speeds"), a("--est"), &est, a("--truth"), &seq, a("--csv"), &p("speeds.csv"), a("--svg"), &p("speeds.svg")])
}

fn ac7_determinism_and_fuzz() -> Result<String, String> {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut demo = SceneFile::demo();
    demo.scene.n_frames = 6;
    let scene_path = tmp.path().join("scene.toml");
    std::fs::write(&scene_path, toml::to_string(&demo).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let (run_a, run_b) = (tmp.path().join("a"), tmp.path().join("b"));
    cli_chain(&scene_path, &run_a)?;
    cli_chain(&scene_path, &run_b)?;
    let strip = |t: Vec<(String, Vec<u8>)>| -> Vec<(String, Vec<u8>)> {
        t.into_iter().filter(|(p, _)| !p.ends_with(pointvel::cli::TIMING_FILE)).collect()
    };
    let (ta, tb) = (strip(common::tree(&run_a)), strip(common::tree(&run_b)));
    let bytes: usize = ta.iter().map(|(_, b)| b.len()).sum();
    if ta != tb {
        let diff = ta.iter().zip(&tb).find(|(x, y)| x != y).map(|(x, _)| x.0.clone());
        return Err(format!("runs differ (first difference: {diff:?})"));
    }
    let report = read_report(&run_a.join("report.toml")).map_err(|e| e.to_string())?;
    ensure(report.ave <= 0.12, || format!("demo chain AVE {} above 0.12", report.ave))?;
    let determinism = start.elapsed();

    let fuzz_start = Instant::now();
    let fuzz = fuzz_formats(tmp.path())?;
    let fuzz_time = fuzz_start.elapsed();
    ensure(fuzz_time < Duration::from_secs(60), || format!("fuzzing took {fuzz_time:.2?} (limit 60 s)"))?;
    Ok(format!(
        "two CLI runs identical over {} files / {bytes} bytes (timing.csv excluded) [{determinism:.2?}]; {fuzz} [{fuzz_time:.2?} < 60s]",
        ta.len()
    ))
}

/// One deterministic corruption of `bytes`.
fn mutate(rng: &mut ChaCha8Rng, bytes: &[u8], is_text: bool) -> Vec<u8> {
    let mut b = bytes.to_vec();
    let kind = rng.random_range(0..if is_text { 7 } else { 5 });
    match kind {
        0 => {
            for _ in 0..rng.random_range(1..8) {
                if !b.is_empty() {
                    let i = rng.random_range(0..b.len());
                    b[i] ^= 1 << rng.random_range(0..8);
                }
            }
        }
        1 => b.truncate(rng.random_range(0..=b.len())),
        2 => {
            let i = rng.random_range(0..=b.len());
            if rng.random_bool(0.5) || i == b.len() {
                let extra: Vec<u8> = (0..rng.random_range(1..16)).map(|_| rng.random()).collect();
                b.splice(i..i, extra);
            } else {
                let j = rng.random_range(i..b.len().min(i + 16) + 1);
                b.drain(i..j);
            }
        }
        3 => {
            // Header fields: version, dtype, rank, dims.
            let offsets = [4usize, 8, 12, 16, 24, 32, 40, 48, 56];
            let at = offsets[rng.random_range(0..offsets.len())];
            let values = [0u64, 1, 2, 3, 6, 7, 255, u32::MAX as u64, u64::MAX, 1 << 40, rng.random()];
            let value = values[rng.random_range(0..values.len())];
            let width = if at < 16 { 4 } else { 8 };
            if b.len() >= at + width {
                b[at..at + width].copy_from_slice(&value.to_le_bytes()[..width]);
            }
        }
        4 => b = (0..rng.random_range(0..128)).map(|_| rng.random()).collect(),
        5 | 6 => {
            let text = String::from_utf8_lossy(&b).into_owned();
            let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
            if lines.is_empty() {
                return b;
            }
            let i = rng.random_range(0..lines.len());
            if kind == 5 {
                if rng.random_bool(0.5) {
                    lines.remove(i);
                } else {
                    let dup = lines[i].clone();
                    lines.insert(i, dup);
                }
            } else if let Some(eq) = lines[i].find(" = ") {
                let garbage = [
                    "nan", "inf", "-inf", "-1", "0", "1e400", "1e-320", "18446744073709551616", "-9223372036854775809",
                    "\"x\"", "[]", "{}", "true", "[1, 2]", "\"../../etc\"", "99999999999",
                ];
                let g = garbage[rng.random_range(0..garbage.len())];
                lines[i] = format!("{}{g}", &lines[i][..eq + 3]);
            }
            b = lines.join("\n").into_bytes();
        }
        _ => unreachable!(),
    }
    b
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    common::tree(dir).into_iter().map(|(rel, _)| dir.join(rel)).collect()
}

/// Exercises every reader the CLI uses on `seq` / `est`, then the pipeline
/// stages that consume what was read. Any error is fine; panics are not.
fn consume(seq: &Path, est: &Path) -> Vec<String> {
    let mut errors = Vec::new();
    let mut note = |r: pointvel::Result<()>| {
        if let Err(e) = r {
            errors.push(e.report_line());
        }
    };
    note(read_sequence(seq).map(|_| ()));
    note(read_estimates(est).map(|_| ()));
    note((|| {
        let reader = SequenceReader::open(seq)?;
        let settings = ProcessSettings { threshold_db: 5.0, cond_bound: 1e6, window: ContextWindow::default() };
        for position in 1..reader.len() {
            if let Some(flow) = reader.read_flow(position - 1)? {
                let adc = reader.read_adc(position)?;
                let lidar = reader.read_lidar(position)?;
                process_frame(&adc, &lidar, &flow, &reader.manifest().camera, &settings)
                    .map_err(|e| pointvel::Error::core(seq, e))?;
            }
        }
        let params = TrackingParams { dt: reader.manifest().frame_interval, ..TrackingParams::default() };
        let tracks = track_objects(&reader, &read_estimates(est)?, est, &params)?;
        evaluate(&tracks, est).map(|_| ())
    })());
    errors
}

static LAST_PANIC: std::sync::Mutex<String> = std::sync::Mutex::new(String::new());

fn fuzz_formats(root: &Path) -> Result<String, String> {
    const CASES: usize = 10_000;
    const CLI_CASES: usize = 200;
    let dir = root.join("fuzz");
    let scene = common::small_scene(3);
    let scene_text = toml::to_string(&scene).map_err(|e| e.to_string())?;
    let scene_path = dir.join("scene.toml");
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    std::fs::write(&scene_path, &scene_text).map_err(|e| e.to_string())?;
    let (seq, est) = (dir.join("seq"), dir.join("est"));
    let a = |s: &'static str| -> &Path { Path::new(s) };
    run_cli(&[a("simulate"), a("--scene"), &scene_path, a("--out"), &seq, a("--seed"), a("7")])?;
    run_cli(&[a("process"), a("--in"), &seq, a("--out"), &est])?;
    let report_path = dir.join("report.toml");
    run_cli(&[a("evaluate"), a("--est"), &est, a("--truth"), &seq, a("--out"), &report_path, a("--eps"), a("0.05")])?;
    ensure(consume(&seq, &est).is_empty(), || "pristine artifacts do not read back cleanly".into())?;

    let mut targets = files_under(&seq);
    targets.extend(files_under(&est).into_iter().filter(|p| !p.ends_with(pointvel::cli::TIMING_FILE)));
    targets.push(report_path.clone());
    targets.push(scene_path.clone());
    let originals: Vec<Vec<u8>> = targets.iter().map(|p| std::fs::read(p).unwrap()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(0xac7);
    let (mut panics, mut rejected, mut multi_line) = (0usize, 0usize, 0usize);
    let mut first_panic = None;
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|info| {
        if let Some(l) = info.location() {
            *LAST_PANIC.lock().unwrap() = format!("{}:{}", l.file(), l.line());
        }
    }));
    for case in 0..CASES {
        let t = rng.random_range(0..targets.len());
        let path = &targets[t];
        let is_text = path.extension().is_some_and(|e| e == "toml");
        let corrupted = mutate(&mut rng, &originals[t], is_text);
        std::fs::write(path, &corrupted).unwrap();
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            if *path == scene_path {
                let text = String::from_utf8_lossy(&corrupted).into_owned();
                SceneFile::parse(path, &text).err().map(|e| vec![e.report_line()]).unwrap_or_default()
            } else if *path == report_path {
                read_report(path).err().map(|e| vec![e.report_line()]).unwrap_or_default()
            } else {
                consume(&seq, &est)
            }
        }));
        match outcome {
            Ok(errors) => {
                rejected += usize::from(!errors.is_empty());
                multi_line += errors.iter().filter(|l| l.contains('\n')).count();
            }
            Err(p) => {
                panics += 1;
                let at = LAST_PANIC.lock().unwrap().clone();
                first_panic.get_or_insert_with(|| format!("case {case} on {}: {} at {at}", path.display(), panic_text(&p)));
            }
        }
        std::fs::write(path, &originals[t]).unwrap();
    }
    std::panic::set_hook(hook);

    // The binary itself: corrupt inputs must give exit code 1 and one error line.
    let mut cli_bad = Vec::new();
    for case in 0..CLI_CASES {
        let t = rng.random_range(0..targets.len());
        let path = &targets[t];
        let is_text = path.extension().is_some_and(|e| e == "toml");
        std::fs::write(path, mutate(&mut rng, &originals[t], is_text)).unwrap();
        let out = if *path == scene_path {
            pointvel_bin().args([a("simulate"), a("--scene"), &scene_path, a("--out"), &dir.join("fuzz_seq")]).output()
        } else {
            pointvel_bin()
                .args([a("evaluate"), a("--est"), &est, a("--truth"), &seq, a("--out"), &dir.join("fuzz_report.toml")])
                .output()
        }
        .map_err(|e| e.to_string())?;
        let stderr = String::from_utf8_lossy(&out.stderr);
        let fine = match out.status.code() {
            Some(0) => true,
            Some(1) => stderr.lines().count() == 1 && stderr.starts_with("error kind="),
            _ => false,
        };
        if !fine {
            cli_bad.push(format!("case {case} ({}): status {:?}, stderr {stderr:?}", path.display(), out.status));
        }
        std::fs::write(path, &originals[t]).unwrap();
    }

    ensure(panics == 0, || format!("{panics} of {CASES} corrupt inputs panicked; first: {}", first_panic.unwrap_or_default()))?;
    ensure(multi_line == 0, || format!("{multi_line} error messages span several lines"))?;
    ensure(cli_bad.is_empty(), || format!("{} CLI runs misbehaved; first: {}", cli_bad.len(), cli_bad[0]))?;
    Ok(format!(
        "{CASES} corrupt inputs: 0 panics, {rejected} rejected with structured errors; {CLI_CASES} CLI runs on corrupt inputs exit cleanly"
    ))
}
