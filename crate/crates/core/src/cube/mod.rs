//! Radar cube construction: windowed FFTs over the raw ADC tensor and
//! relative-intensity thresholding.
//!
//! Axis conventions used throughout the crate:
//!
//! - ADC samples are indexed `(chirp, sample, azimuth antenna, elevation antenna)`.
//! - Radar cube magnitudes are indexed `(range, azimuth, elevation, doppler)`,
//!   with the Doppler bin innermost so each voxel's Doppler row is contiguous.
//! - Doppler and both angle axes are FFT-shifted: zero velocity and boresight
//!   sit at bin `n / 2`.

pub mod fft;
pub mod window;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::{Complex32, Complex64};
use num_traits::Float;

use crate::error::{Error, Result};
use fft::{fft_along_axis, shifted_source, FftPlan};
pub use window::{hanning_weights, Window};

/// Sensor geometry and processing parameters.
///
/// Defaults describe a 128-sample, 32-chirp sensor with 4.69 cm range bins
/// and 0.63 km/h (0.175 m/s) Doppler bins, 6 m maximum range, and a virtual
/// array resolving 32 azimuth × 8 elevation bins over a 64° × 40° field of view.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct RadarConfig {
    pub n_samples: usize,
    pub n_chirps: usize,
    pub n_azimuth_bins: usize,
    pub n_elevation_bins: usize,
    /// Meters per range bin.
    pub range_resolution: f64,
    /// Meters/second per Doppler bin.
    pub speed_resolution: f64,
    /// Full azimuth field of view, radians.
    pub azimuth_fov: f64,
    /// Full elevation field of view, radians.
    pub elevation_fov: f64,
    pub threshold_db: f64,
    /// Treat the ADC as a real beat signal and keep only `n_samples / 2`
    /// range bins. Off by default: complex baseband, all bins retained.
    pub one_sided_range: bool,
    pub window: Window,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self {
            n_samples: 128,
            n_chirps: 32,
            n_azimuth_bins: 32,
            n_elevation_bins: 8,
            range_resolution: 0.0469,
            speed_resolution: 0.63 / 3.6,
            azimuth_fov: 64.0 * PI / 180.0,
            elevation_fov: 40.0 * PI / 180.0,
            threshold_db: 5.0,
            one_sided_range: false,
            window: Window::Hanning,
        }
    }
}

impl RadarConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_samples", self.n_samples),
            ("n_chirps", self.n_chirps),
            ("n_azimuth_bins", self.n_azimuth_bins),
            ("n_elevation_bins", self.n_elevation_bins),
        ];
        for (name, n) in counts {
            if n < 2 {
                return Err(Error::Config(format!("{name} must be >= 2, got {n}")));
            }
        }
        if self.one_sided_range && self.n_samples < 4 {
            return Err(Error::Config(format!(
                "one-sided range needs n_samples >= 4, got {}",
                self.n_samples
            )));
        }
        let positives = [
            ("range_resolution", self.range_resolution),
            ("speed_resolution", self.speed_resolution),
            ("azimuth_fov", self.azimuth_fov),
            ("elevation_fov", self.elevation_fov),
            ("threshold_db", self.threshold_db),
        ];
        for (name, v) in positives {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if self.azimuth_fov >= PI || self.elevation_fov >= PI {
            return Err(Error::Config("angular field of view must be below 180 degrees".into()));
        }
        Ok(())
    }

    pub fn n_range_bins(&self) -> usize {
        if self.one_sided_range {
            self.n_samples / 2
        } else {
            self.n_samples
        }
    }

    pub fn max_range(&self) -> f64 {
        self.n_range_bins() as f64 * self.range_resolution
    }

    /// Half the unambiguous Doppler span, `n_chirps / 2 · speed_resolution`.
    pub fn max_speed(&self) -> f64 {
        (self.n_chirps / 2) as f64 * self.speed_resolution
    }

    pub fn azimuth_bin_width(&self) -> f64 {
        self.azimuth_fov / self.n_azimuth_bins as f64
    }

    pub fn elevation_bin_width(&self) -> f64 {
        self.elevation_fov / self.n_elevation_bins as f64
    }

    /// Virtual-array element spacing along azimuth, in wavelengths.
    ///
    /// Chosen as `1 / azimuth_fov` so the angle-FFT ambiguity interval spans
    /// the configured field of view and bins are ≈ linear in angle.
    pub fn azimuth_spacing(&self) -> f64 {
        1.0 / self.azimuth_fov
    }

    pub fn elevation_spacing(&self) -> f64 {
        1.0 / self.elevation_fov
    }

    pub fn adc_shape(&self) -> [usize; 4] {
        [self.n_chirps, self.n_samples, self.n_azimuth_bins, self.n_elevation_bins]
    }

    pub fn cube_shape(&self) -> [usize; 4] {
        [self.n_range_bins(), self.n_azimuth_bins, self.n_elevation_bins, self.n_chirps]
    }

    pub fn velocity_of_doppler_bin(&self, bin: usize) -> f64 {
        (bin as f64 - (self.n_chirps / 2) as f64) * self.speed_resolution
    }

    /// Nearest `(range, azimuth, elevation)` bin of a polar position, or
    /// `None` when the position lies outside max range or the field of view.
    pub fn nearest_spatial_bin(&self, range: f64, azimuth: f64, elevation: f64) -> Option<[usize; 3]> {
        if !(range >= 0.0 && range < self.max_range()) {
            return None;
        }
        if !(Float::abs(azimuth) <= 0.5 * self.azimuth_fov && Float::abs(elevation) <= 0.5 * self.elevation_fov) {
            return None;
        }
        let r = nearest_index(range / self.range_resolution, 0, self.n_range_bins());
        let a = nearest_index(azimuth / self.azimuth_bin_width(), self.n_azimuth_bins / 2, self.n_azimuth_bins);
        let e = nearest_index(
            elevation / self.elevation_bin_width(),
            self.n_elevation_bins / 2,
            self.n_elevation_bins,
        );
        Some([r, a, e])
    }
}

fn nearest_index(offset_bins: f64, center: usize, len: usize) -> usize {
    let idx = Float::round(offset_bins) + center as f64;
    idx.clamp(0.0, (len - 1) as f64) as usize
}

/// Physical coordinates of a radar cube voxel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinCoordinates {
    pub range: f64,
    pub azimuth: f64,
    pub elevation: f64,
    pub velocity: f64,
}

/// Maps cube bin indices to range (m), azimuth and elevation (rad) and radial
/// velocity (m/s). Angles are linear in bin index with boresight at `n / 2`.
pub fn bin_to_physical(
    range_bin: usize,
    azimuth_bin: usize,
    elevation_bin: usize,
    doppler_bin: usize,
    cfg: &RadarConfig,
) -> Result<BinCoordinates> {
    let checks = [
        ("range", range_bin, cfg.n_range_bins()),
        ("azimuth", azimuth_bin, cfg.n_azimuth_bins),
        ("elevation", elevation_bin, cfg.n_elevation_bins),
        ("doppler", doppler_bin, cfg.n_chirps),
    ];
    for (axis, bin, len) in checks {
        if bin >= len {
            return Err(Error::BinOutOfRange { axis, bin, len });
        }
    }
    Ok(BinCoordinates {
        range: range_bin as f64 * cfg.range_resolution,
        azimuth: (azimuth_bin as f64 - (cfg.n_azimuth_bins / 2) as f64) * cfg.azimuth_bin_width(),
        elevation: (elevation_bin as f64 - (cfg.n_elevation_bins / 2) as f64) * cfg.elevation_bin_width(),
        velocity: cfg.velocity_of_doppler_bin(doppler_bin),
    })
}

/// Raw complex ADC samples, indexed `(chirp, sample, azimuth antenna, elevation antenna)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdcCube {
    config: RadarConfig,
    samples: Vec<Complex32>,
}

impl AdcCube {
    pub fn new(config: RadarConfig, samples: Vec<Complex32>) -> Result<Self> {
        config.validate()?;
        let shape = config.adc_shape();
        let expected: usize = shape.iter().product();
        if samples.len() != expected {
            return Err(Error::Shape {
                what: "ADC cube",
                expected: shape.to_vec(),
                actual: vec![samples.len()],
            });
        }
        Ok(Self { config, samples })
    }

    pub fn zeros(config: RadarConfig) -> Result<Self> {
        config.validate()?;
        let n = config.adc_shape().iter().product();
        Self::new(config, vec![Complex32::new(0.0, 0.0); n])
    }

    pub fn config(&self) -> &RadarConfig {
        &self.config
    }

    pub fn shape(&self) -> [usize; 4] {
        self.config.adc_shape()
    }

    pub fn samples(&self) -> &[Complex32] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex32] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex32> {
        self.samples
    }

    pub fn index(&self, chirp: usize, sample: usize, az: usize, el: usize) -> usize {
        let [_, s, a, e] = self.shape();
        ((chirp * s + sample) * a + az) * e + el
    }

    pub fn get(&self, chirp: usize, sample: usize, az: usize, el: usize) -> Complex32 {
        self.samples[self.index(chirp, sample, az, el)]
    }
}

/// Non-negative magnitudes indexed `(range, azimuth, elevation, doppler)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarCube {
    config: RadarConfig,
    magnitudes: Vec<f64>,
}

impl RadarCube {
    pub fn new(config: RadarConfig, magnitudes: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let shape = config.cube_shape();
        let expected: usize = shape.iter().product();
        if magnitudes.len() != expected {
            return Err(Error::Shape {
                what: "radar cube",
                expected: shape.to_vec(),
                actual: vec![magnitudes.len()],
            });
        }
        if let Some(bad) = magnitudes.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::Config(format!("radar cube magnitude {bad} is not finite and >= 0")));
        }
        Ok(Self { config, magnitudes })
    }

    pub fn config(&self) -> &RadarConfig {
        &self.config
    }

    pub fn shape(&self) -> [usize; 4] {
        self.config.cube_shape()
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn index(&self, range: usize, az: usize, el: usize, doppler: usize) -> usize {
        let [_, a, e, d] = self.shape();
        ((range * a + az) * e + el) * d + doppler
    }

    pub fn get(&self, range: usize, az: usize, el: usize, doppler: usize) -> f64 {
        self.magnitudes[self.index(range, az, el, doppler)]
    }

    /// Doppler spectrum of one spatial voxel.
    pub fn doppler_row(&self, range: usize, az: usize, el: usize) -> &[f64] {
        let start = self.index(range, az, el, 0);
        &self.magnitudes[start..start + self.config.n_chirps]
    }

    /// Bin indices of the global maximum (first occurrence in memory order).
    pub fn argmax(&self) -> [usize; 4] {
        let mut best = 0;
        for (i, m) in self.magnitudes.iter().enumerate() {
            if *m > self.magnitudes[best] {
                best = i;
            }
        }
        let [_, a, e, d] = self.shape();
        [best / (a * e * d), (best / (e * d)) % a, (best / d) % e, best % d]
    }

    pub fn max(&self) -> f64 {
        self.magnitudes.iter().copied().fold(0.0, f64::max)
    }

    /// Applies `f` to every magnitude, e.g. for injecting synthetic noise.
    /// Negative or non-finite results are clamped to 0.
    pub fn map_magnitudes(mut self, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        for (i, m) in self.magnitudes.iter_mut().enumerate() {
            let v = f(i, *m);
            *m = if v.is_finite() && v > 0.0 { v } else { 0.0 };
        }
        self
    }
}

/// Range, Doppler and angle FFTs over the ADC tensor, returning the element-wise
/// magnitude.
///
/// The configured window is applied along the sample and chirp axes; the
/// angle axes are left untapered.
pub fn build_radar_cube(adc: &AdcCube) -> Result<RadarCube> {
    let cfg = *adc.config();
    cfg.validate()?;
    let [n_chirps, n_samples, n_az, n_el] = cfg.adc_shape();
    if adc.samples().len() != n_chirps * n_samples * n_az * n_el {
        return Err(Error::Shape {
            what: "ADC cube",
            expected: cfg.adc_shape().to_vec(),
            actual: vec![adc.samples().len()],
        });
    }
    let w_sample = cfg.window.weights(n_samples)?;
    let w_chirp = cfg.window.weights(n_chirps)?;

    // Working layout (sample, azimuth, elevation, chirp).
    let work_shape = [n_samples, n_az, n_el, n_chirps];
    let mut work = vec![Complex64::new(0.0, 0.0); adc.samples().len()];
    for c in 0..n_chirps {
        for s in 0..n_samples {
            let w = w_sample[s] * w_chirp[c];
            for a in 0..n_az {
                for e in 0..n_el {
                    let x = adc.get(c, s, a, e);
                    let dst = ((s * n_az + a) * n_el + e) * n_chirps + c;
                    work[dst] = Complex64::new(x.re as f64 * w, x.im as f64 * w);
                }
            }
        }
    }

    for axis in (0..4).rev() {
        let plan = FftPlan::new(work_shape[axis]);
        fft_along_axis(&mut work, &work_shape, axis, &plan);
    }

    let n_range = cfg.n_range_bins();
    let mut magnitudes = vec![0.0; n_range * n_az * n_el * n_chirps];
    let mut out = 0;
    for r in 0..n_range {
        for a in 0..n_az {
            let sa = shifted_source(a, n_az);
            for e in 0..n_el {
                let se = shifted_source(e, n_el);
                let row = ((r * n_az + sa) * n_el + se) * n_chirps;
                for d in 0..n_chirps {
                    magnitudes[out] = work[row + shifted_source(d, n_chirps)].norm();
                    out += 1;
                }
            }
        }
    }
    RadarCube::new(cfg, magnitudes)
}

/// Zeroes every voxel more than `threshold_db` below the global peak, using
/// the amplitude ratio `20·log10(peak / value)`.
pub fn threshold_cube(cube: &RadarCube, threshold_db: f64) -> RadarCube {
    let mut magnitudes = cube.magnitudes.clone();
    threshold_magnitudes(&mut magnitudes, threshold_db);
    RadarCube { config: cube.config, magnitudes }
}

/// Slice form of [`threshold_cube`]. An all-zero slice is left untouched.
pub fn threshold_magnitudes(values: &mut [f64], threshold_db: f64) {
    let peak = values.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return;
    }
    for v in values.iter_mut() {
        if *v > 0.0 && 20.0 * Float::log10(peak / *v) > threshold_db {
            *v = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_matches_sensor_table() {
        let cfg = RadarConfig::default();
        cfg.validate().unwrap();
        assert!((cfg.max_range() - 6.0032).abs() < 1e-12);
        assert!((cfg.speed_resolution - 0.175).abs() < 1e-15);
        assert!((cfg.n_chirps as f64 * cfg.speed_resolution - 5.6).abs() < 1e-12);
        assert!((cfg.azimuth_bin_width().to_degrees() - 2.0).abs() < 1e-12);
        assert!((cfg.elevation_bin_width().to_degrees() - 5.0).abs() < 1e-12);
        assert_eq!(cfg.cube_shape(), [128, 32, 8, 32]);
    }

    #[test]
    fn config_validation() {
        let mut cfg = RadarConfig { n_chirps: 1, ..RadarConfig::default() };
        assert!(cfg.validate().is_err());
        cfg = RadarConfig { threshold_db: 0.0, ..RadarConfig::default() };
        assert!(cfg.validate().is_err());
        cfg = RadarConfig { range_resolution: f64::NAN, ..RadarConfig::default() };
        assert!(cfg.validate().is_err());
        let one_sided = RadarConfig { one_sided_range: true, ..RadarConfig::default() };
        assert_eq!(one_sided.n_range_bins(), 64);
    }

    #[test]
    fn bin_mapping_examples() {
        let cfg = RadarConfig::default();
        assert_eq!(bin_to_physical(0, 16, 4, 16, &cfg).unwrap().velocity, 0.0);
        let c = bin_to_physical(64, 16, 4, 20, &cfg).unwrap();
        assert!((c.range - 3.0016).abs() < 1e-12);
        assert!((c.velocity - 0.70).abs() < 1e-12);
        assert_eq!(c.azimuth, 0.0);
        assert_eq!(c.elevation, 0.0);
        let edge = bin_to_physical(0, 0, 0, 0, &cfg).unwrap();
        assert!((edge.azimuth.to_degrees() + 32.0).abs() < 1e-9);
        assert!((edge.elevation.to_degrees() + 20.0).abs() < 1e-9);
        assert!((edge.velocity + 2.8).abs() < 1e-12);
    }

    #[test]
    fn bin_mapping_rejects_out_of_range() {
        let cfg = RadarConfig::default();
        assert_eq!(
            bin_to_physical(128, 0, 0, 0, &cfg),
            Err(Error::BinOutOfRange { axis: "range", bin: 128, len: 128 })
        );
        assert!(bin_to_physical(0, 32, 0, 0, &cfg).is_err());
        assert!(bin_to_physical(0, 0, 8, 0, &cfg).is_err());
        assert!(bin_to_physical(0, 0, 0, 32, &cfg).is_err());
    }

    #[test]
    fn nearest_bin_is_inverse_of_bin_mapping() {
        let cfg = RadarConfig::default();
        for (r, a, e) in [(0usize, 0usize, 0usize), (64, 16, 4), (127, 31, 7), (10, 3, 6)] {
            let c = bin_to_physical(r, a, e, 0, &cfg).unwrap();
            assert_eq!(cfg.nearest_spatial_bin(c.range, c.azimuth, c.elevation), Some([r, a, e]));
        }
        assert_eq!(cfg.nearest_spatial_bin(7.0, 0.0, 0.0), None);
        assert_eq!(cfg.nearest_spatial_bin(1.0, 0.6, 0.0), None);
        assert_eq!(cfg.nearest_spatial_bin(1.0, 0.0, -0.4), None);
    }

    #[test]
    fn threshold_hand_example() {
        let mut v = [10.0, 6.0, 1.0];
        threshold_magnitudes(&mut v, 5.0);
        assert_eq!(v, [10.0, 6.0, 0.0]);
    }

    #[test]
    fn threshold_uniform_and_zero() {
        let mut uniform = [3.0; 6];
        threshold_magnitudes(&mut uniform, 5.0);
        assert_eq!(uniform, [3.0; 6]);
        let mut zero = [0.0; 4];
        threshold_magnitudes(&mut zero, 5.0);
        assert_eq!(zero, [0.0; 4]);
    }

    #[test]
    fn zero_adc_gives_zero_cube() {
        let cfg = RadarConfig { n_samples: 16, n_chirps: 8, n_azimuth_bins: 4, n_elevation_bins: 2, ..Default::default() };
        let cube = build_radar_cube(&AdcCube::zeros(cfg).unwrap()).unwrap();
        assert_eq!(cube.shape(), [16, 4, 2, 8]);
        assert!(cube.magnitudes().iter().all(|m| *m == 0.0));
    }

    #[test]
    fn adc_shape_mismatch_is_rejected() {
        let cfg = RadarConfig { n_samples: 16, n_chirps: 8, n_azimuth_bins: 4, n_elevation_bins: 2, ..Default::default() };
        assert!(matches!(
            AdcCube::new(cfg, vec![Complex32::new(0.0, 0.0); 10]),
            Err(Error::Shape { .. })
        ));
        assert!(RadarCube::new(cfg, vec![0.0; 3]).is_err());
        let n = cfg.cube_shape().iter().product();
        let mut bad = vec![0.0; n];
        bad[0] = -1.0;
        assert!(RadarCube::new(cfg, bad).is_err());
    }

    #[test]
    fn one_sided_keeps_half_the_range_axis() {
        let cfg = RadarConfig {
            n_samples: 16,
            n_chirps: 4,
            n_azimuth_bins: 2,
            n_elevation_bins: 2,
            one_sided_range: true,
            ..Default::default()
        };
        let mut adc = AdcCube::zeros(cfg).unwrap();
        // Real tone at range bin 3.
        for c in 0..4 {
            for s in 0..16 {
                for a in 0..2 {
                    for e in 0..2 {
                        let i = adc.index(c, s, a, e);
                        let phase = 2.0 * PI * 3.0 * s as f64 / 16.0;
                        adc.samples_mut()[i] = Complex32::new(Float::cos(phase) as f32, 0.0);
                    }
                }
            }
        }
        let cube = build_radar_cube(&adc).unwrap();
        assert_eq!(cube.shape(), [8, 2, 2, 4]);
        assert_eq!(cube.argmax()[0], 3);
    }
}
