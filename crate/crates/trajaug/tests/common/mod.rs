//! Shared synthetic-data generators for the integration suites.
//!
//! Walks are kept near (0, 0): that is where f64 degree coordinates carry
//! the most precision, which the tight displacement tolerances rely on.

use chrono::NaiveDateTime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trajaug::geodesy::{destination_point, initial_bearing, Bearing, DistanceMeters};
use trajaug::model::{GeoPoint, Trajectory, TrajectoryDataset, TrajectoryPoint};

pub const BAND_DEGREES: f64 = 0.5;

pub fn ts(secs: i64) -> NaiveDateTime {
    chrono::NaiveDate::from_ymd_opt(2020, 1, 1)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap()
        + chrono::Duration::seconds(secs)
}

/// Random walk whose per-step gaps come from `gap(rng)`. Steps that would
/// leave the +-0.5 degree band are re-aimed at the origin.
pub fn banded_walk(
    rng: &mut ChaCha8Rng,
    id: &str,
    n_points: usize,
    dt_secs: i64,
    mut gap: impl FnMut(&mut ChaCha8Rng) -> f64,
) -> Trajectory {
    let mut pos = GeoPoint {
        lat: rng.random_range(-0.05..0.05),
        lon: rng.random_range(-0.05..0.05),
    };
    let mut points = vec![TrajectoryPoint::new(ts(0), pos)];
    for i in 1..n_points {
        let bearing = if pos.lat.abs() > BAND_DEGREES || pos.lon.abs() > BAND_DEGREES {
            initial_bearing(pos, GeoPoint { lat: 0.0, lon: 0.0 }).unwrap()
        } else {
            Bearing::new(rng.random_range(0.0..360.0))
        };
        let step = DistanceMeters::new(gap(rng)).unwrap();
        pos = destination_point(pos, bearing, step);
        points.push(TrajectoryPoint::new(ts(i as i64 * dt_secs), pos));
    }
    Trajectory::new(id, points)
}

/// Log-uniform gap in [lo, hi] meters.
pub fn log_uniform_gap(lo: f64, hi: f64) -> impl FnMut(&mut ChaCha8Rng) -> f64 {
    move |rng| lo * (hi / lo).powf(rng.random::<f64>())
}

/// A labeled dataset of walks whose per-step gap is speed * dt, jittered a
/// little per trajectory so rows are distinct.
/// `classes` entries are (label, count, speed m/s).
pub fn speed_class_dataset(
    seed: u64,
    classes: &[(&str, usize, f64)],
    points: usize,
    dt_secs: i64,
) -> TrajectoryDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trajectories = Vec::new();
    for (label, count, speed) in classes {
        for i in 0..*count {
            let traj_speed = speed * rng.random_range(0.95..1.05);
            let walk = banded_walk(
                &mut rng,
                &format!("{label}-{i:03}"),
                points,
                dt_secs,
                |r| traj_speed * dt_secs as f64 * r.random_range(0.98..1.02),
            );
            trajectories.push(walk.with_label(*label));
        }
    }
    TrajectoryDataset::from_trajectories(trajectories, Some("class".into())).unwrap()
}
