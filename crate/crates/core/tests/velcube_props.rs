use nalgebra::Vector3;
use pointvel_core::cube::{bin_to_physical, RadarConfig, RadarCube};
use pointvel_core::velcube::{collapse_doppler, query_radial_velocity, window_span, ContextWindow, RadialLookup, VelocityCube};
use proptest::prelude::*;

fn cfg() -> RadarConfig {
    RadarConfig { n_samples: 12, n_chirps: 8, n_azimuth_bins: 6, n_elevation_bins: 4, ..Default::default() }
}

fn arb_radar_cube() -> impl Strategy<Value = RadarCube> {
    let n: usize = cfg().cube_shape().iter().product();
    // Small integer magnitudes make ties common.
    prop::collection::vec(prop_oneof![2 => Just(0.0), 3 => (1u8..4).prop_map(f64::from)], n)
        .prop_map(|m| RadarCube::new(cfg(), m).unwrap())
}

fn arb_velocity_cube() -> impl Strategy<Value = VelocityCube> {
    let c = cfg();
    let [r, a, e, _] = c.cube_shape();
    let n = r * a * e;
    let bins = prop::collection::vec(prop::option::weighted(0.3, 0usize..8), n);
    bins.prop_map(move |b| {
        let vel = b.iter().map(|d| d.map_or(0.0, |d| c.velocity_of_doppler_bin(d))).collect();
        let valid = b.iter().map(|d| d.is_some()).collect();
        VelocityCube::new(c, vel, valid).unwrap()
    })
}

fn bin_point(c: &RadarConfig, r: usize, a: usize, e: usize, jitter: (f64, f64, f64)) -> Vector3<f64> {
    let p = bin_to_physical(r, a, e, 0, c).unwrap();
    let range = p.range + jitter.0 * c.range_resolution;
    let az = p.azimuth + jitter.1 * c.azimuth_bin_width();
    let el = p.elevation + jitter.2 * c.elevation_bin_width();
    Vector3::new(range * el.cos() * az.cos(), range * el.cos() * az.sin(), range * el.sin())
}

/// Exhaustive scan over every voxel, keeping those inside the clamped window.
fn brute_force_query(vc: &VelocityCube, centre: [usize; 3], w: &ContextWindow) -> Option<f64> {
    let [n_r, n_a, n_e] = vc.shape();
    let (r0, r1) = window_span(centre[0], w.range_extent, n_r);
    let (a0, a1) = window_span(centre[1], w.azimuth_extent, n_a);
    let (e0, e1) = window_span(centre[2], w.elevation_extent, n_e);
    let mut vals = Vec::new();
    for r in 0..n_r {
        for a in 0..n_a {
            for e in 0..n_e {
                if (r0..=r1).contains(&r) && (a0..=a1).contains(&a) && (e0..=e1).contains(&e) {
                    if let Some(v) = vc.velocity(r, a, e) {
                        vals.push(v);
                    }
                }
            }
        }
    }
    let max_abs = vals.iter().fold(None::<f64>, |m, v| Some(m.map_or(v.abs(), |m| m.max(v.abs()))))?;
    // Positive wins ties on |v|.
    Some(if vals.contains(&max_abs) { max_abs } else { -max_abs })
}

proptest! {
    #[test]
    fn collapse_matches_row_argmax(cube in arb_radar_cube()) {
        let c = cfg();
        let vc = collapse_doppler(&cube);
        let [n_r, n_a, n_e, _] = c.cube_shape();
        for r in 0..n_r {
            for a in 0..n_a {
                for e in 0..n_e {
                    let row = cube.doppler_row(r, a, e);
                    let max = row.iter().copied().fold(0.0, f64::max);
                    match vc.velocity(r, a, e) {
                        None => prop_assert_eq!(max, 0.0),
                        Some(v) => {
                            let winners: Vec<usize> = (0..row.len()).filter(|d| row[*d] == max).collect();
                            let speeds: Vec<f64> = winners.iter().map(|d| c.velocity_of_doppler_bin(*d)).collect();
                            prop_assert!(speeds.contains(&v));
                            let min_speed = speeds.iter().map(|s| s.abs()).fold(f64::INFINITY, f64::min);
                            prop_assert_eq!(v.abs(), min_speed);
                            prop_assert!(v.abs() <= c.max_speed());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn query_matches_brute_force(
        vc in arb_velocity_cube(),
        r in 0usize..12, a in 0usize..6, e in 0usize..4,
        jitter in (-0.3f64..0.3, -0.3f64..0.3, -0.3f64..0.3),
        extents in (1usize..8, 1usize..6, 1usize..12),
    ) {
        let c = cfg();
        prop_assume!(r > 0 || jitter.0 > 0.0);
        let w = ContextWindow { azimuth_extent: extents.0, elevation_extent: extents.1, range_extent: extents.2 };
        let p = bin_point(&c, r, a, e, jitter);
        let got = query_radial_velocity(&vc, &p, &w);
        match got {
            RadialLookup::OutOfFov => {
                // Only possible on the positive FoV edges, where jitter pushes
                // past fov/2.
                prop_assert!(a == 0 || e == 0 || jitter.1 > 0.0 || jitter.2 > 0.0 || r == 11);
            }
            _ => {
                prop_assert_eq!(got.found(), brute_force_query(&vc, [r, a, e], &w).is_some());
                prop_assert_eq!(got.velocity(), brute_force_query(&vc, [r, a, e], &w).unwrap_or(0.0));
            }
        }
    }

    #[test]
    fn larger_window_never_reduces_speed(
        vc in arb_velocity_cube(),
        r in 1usize..12, a in 0usize..6, e in 0usize..4,
        small in (1usize..5, 1usize..4, 1usize..8), grow in (0usize..4, 0usize..4, 0usize..6),
    ) {
        let c = cfg();
        let p = bin_point(&c, r, a, e, (0.0, 0.0, 0.0));
        let w1 = ContextWindow { azimuth_extent: small.0, elevation_extent: small.1, range_extent: small.2 };
        // Grow by two bins per side step so the smaller window stays nested.
        let w2 = ContextWindow {
            azimuth_extent: small.0 + 2 * grow.0,
            elevation_extent: small.1 + 2 * grow.1,
            range_extent: small.2 + 2 * grow.2,
        };
        let a1 = query_radial_velocity(&vc, &p, &w1);
        let a2 = query_radial_velocity(&vc, &p, &w2);
        if a1.found() {
            prop_assert!(a2.found());
            prop_assert!(a2.velocity().abs() >= a1.velocity().abs());
        }
    }
}

#[test]
fn default_window_covers_20_by_50_degrees_by_0_938_m() {
    let (az, el, range) = ContextWindow::default().physical_coverage(&RadarConfig::default());
    assert_eq!(format!("{:.3}", az.to_degrees()), "20.000");
    assert_eq!(format!("{:.3}", el.to_degrees()), "50.000");
    assert_eq!(format!("{:.3}", range), "0.938");
}
