//! Kinematic series and segment-form features.
//!
//! A point-based trajectory converts into five per-point series (distance,
//! displacement, speed, acceleration, jerk) and from there into one
//! statistical row per trajectory: nine statistics per series, 45 columns
//! total. That segment form is what representative selection and the
//! baseline classifier consume.
//!
//! Leading entries whose derivative is undefined are seeded with 0 rather
//! than NaN (one entry for distance/speed, two for acceleration, three for
//! jerk), so the statistics never see non-finite values.

use rayon::prelude::*;

use crate::geodesy::haversine_distance;
use crate::model::{Trajectory, TrajectoryDataset};

/// Statistic names in column order, applied to each series in turn.
pub const STAT_NAMES: [&str; 9] = ["10%", "25%", "50%", "75%", "90%", "min", "max", "mean", "std"];

/// Series names in column order.
pub const FAMILY_NAMES: [&str; 5] = ["Distance", "Displacement", "Speed", "Acceleration", "Jerk"];

/// Number of feature columns in a segment row.
pub const FEATURE_COUNT: usize = STAT_NAMES.len() * FAMILY_NAMES.len();

/// The 45 feature column names in canonical order:
/// `10%_Distance .. std_Distance, 10%_Displacement, .., std_Jerk`.
pub fn feature_columns() -> Vec<String> {
    FAMILY_NAMES
        .iter()
        .flat_map(|family| STAT_NAMES.iter().map(move |stat| format!("{stat}_{family}")))
        .collect()
}

/// Per-point kinematic series for one trajectory. Every series has exactly
/// one entry per trajectory point.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicSeries {
    /// Meters from the previous point; entry 0 is 0.
    pub distance: Vec<f64>,
    /// Meters from the first point.
    pub displacement: Vec<f64>,
    /// m/s; entry 0 is 0.
    pub speed: Vec<f64>,
    /// m/s^2; entries 0-1 are 0.
    pub acceleration: Vec<f64>,
    /// m/s^3; entries 0-2 are 0.
    pub jerk: Vec<f64>,
}

impl KinematicSeries {
    pub fn families(&self) -> [&[f64]; 5] {
        [
            &self.distance,
            &self.displacement,
            &self.speed,
            &self.acceleration,
            &self.jerk,
        ]
    }
}

/// One row of the segment-based format: per-trajectory statistics over the
/// kinematic series, in [`feature_columns`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentFeatureRow {
    pub traj_id: String,
    pub label: Option<String>,
    pub values: Vec<f64>,
}

impl SegmentFeatureRow {
    /// (column name, value) pairs in canonical order.
    pub fn named_values(&self) -> impl Iterator<Item = (String, f64)> + '_ {
        feature_columns().into_iter().zip(self.values.iter().copied())
    }

    pub fn get(&self, column: &str) -> Option<f64> {
        feature_columns()
            .iter()
            .position(|c| c == column)
            .map(|i| self.values[i])
    }
}

fn seconds_between(earlier: chrono::NaiveDateTime, later: chrono::NaiveDateTime) -> f64 {
    let d = later - earlier;
    d.num_seconds() as f64 + f64::from(d.subsec_nanos()) * 1e-9
}

/// Computes the five kinematic series for a validated trajectory.
///
/// distance_i = haversine(p_{i-1}, p_i); displacement_i = haversine(p_0, p_i);
/// speed, acceleration, and jerk are successive difference quotients over the
/// same time deltas.
pub fn point_kinematics(traj: &Trajectory) -> KinematicSeries {
    let n = traj.points.len();
    let mut distance = vec![0.0; n];
    let mut displacement = vec![0.0; n];
    let mut speed = vec![0.0; n];
    let mut acceleration = vec![0.0; n];
    let mut jerk = vec![0.0; n];

    for i in 1..n {
        let prev = &traj.points[i - 1];
        let cur = &traj.points[i];
        let dt = seconds_between(prev.timestamp, cur.timestamp);
        distance[i] = haversine_distance(prev.position, cur.position).meters();
        displacement[i] = haversine_distance(traj.points[0].position, cur.position).meters();
        speed[i] = distance[i] / dt;
        if i >= 2 {
            acceleration[i] = (speed[i] - speed[i - 1]) / dt;
        }
        if i >= 3 {
            jerk[i] = (acceleration[i] - acceleration[i - 1]) / dt;
        }
    }

    KinematicSeries {
        distance,
        displacement,
        speed,
        acceleration,
        jerk,
    }
}

/// Percentile by linear interpolation at rank q * (n - 1) over a sorted slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = q * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (rank - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// The nine statistics for one series, in [`STAT_NAMES`] order.
fn series_stats(series: &[f64]) -> [f64; 9] {
    let n = series.len();
    debug_assert!(n >= 1);
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("kinematic values are finite"));
    let mean = series.iter().sum::<f64>() / n as f64;
    let std = if n < 2 {
        0.0
    } else {
        let ss = series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
        (ss / (n - 1) as f64).sqrt()
    };
    [
        percentile(&sorted, 0.10),
        percentile(&sorted, 0.25),
        percentile(&sorted, 0.50),
        percentile(&sorted, 0.75),
        percentile(&sorted, 0.90),
        sorted[0],
        sorted[n - 1],
        mean,
        std,
    ]
}

/// Converts one validated trajectory to its segment-form row.
pub fn segment_features(traj: &Trajectory) -> SegmentFeatureRow {
    let series = point_kinematics(traj);
    let mut values = Vec::with_capacity(FEATURE_COUNT);
    for family in series.families() {
        values.extend(series_stats(family));
    }
    SegmentFeatureRow {
        traj_id: traj.id.clone(),
        label: traj.label.clone(),
        values,
    }
}

/// Segment-form rows for the whole dataset, one per trajectory, in id order.
/// Rows are computed in parallel; ordering is by id, never by completion.
pub fn dataset_features(ds: &TrajectoryDataset) -> Vec<SegmentFeatureRow> {
    let trajectories: Vec<&Trajectory> = ds.iter().collect();
    trajectories.par_iter().map(|t| segment_features(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesy::{destination_point, Bearing, DistanceMeters};
    use crate::model::{GeoPoint, TrajectoryPoint};
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn ts(secs: i64) -> chrono::NaiveDateTime {
        NaiveDate::from_ymd_opt(2020, 1, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap()
            + chrono::Duration::seconds(secs)
    }

    fn traj_from_positions(id: &str, step_secs: i64, positions: &[GeoPoint]) -> Trajectory {
        let points = positions
            .iter()
            .enumerate()
            .map(|(i, &p)| TrajectoryPoint::new(ts(i as i64 * step_secs), p))
            .collect();
        Trajectory::new(id, points)
    }

    #[test]
    fn two_points_hundred_meters_ten_seconds() {
        let start = GeoPoint { lat: 0.0, lon: 0.0 };
        let next = destination_point(start, Bearing::new(90.0), DistanceMeters::new(100.0).unwrap());
        let traj = traj_from_positions("t", 10, &[start, next]);
        let k = point_kinematics(&traj);
        assert_eq!(k.distance[0], 0.0);
        assert!((k.distance[1] - 100.0).abs() < 1e-6);
        assert!((k.speed[1] - 10.0).abs() < 1e-7);
        assert!((k.displacement[1] - 100.0).abs() < 1e-6);
        assert_eq!(k.displacement[0], 0.0);
        assert_eq!(k.acceleration, vec![0.0, 0.0]);
        assert_eq!(k.jerk, vec![0.0, 0.0]);
    }

    #[test]
    fn stationary_trajectory_is_all_zero() {
        let here = GeoPoint { lat: 12.0, lon: 34.0 };
        let traj = traj_from_positions("t", 1, &[here; 6]);
        let k = point_kinematics(&traj);
        for family in k.families() {
            assert!(family.iter().all(|&v| v == 0.0));
        }
        let row = segment_features(&traj);
        assert!(row.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn min_distance_is_always_zero() {
        // the seeded first entry pins the distance minimum at 0
        let start = GeoPoint { lat: 0.1, lon: 0.1 };
        let positions: Vec<GeoPoint> = (0..5)
            .map(|i| {
                destination_point(
                    start,
                    Bearing::new(45.0),
                    DistanceMeters::new(50.0 * i as f64).unwrap(),
                )
            })
            .collect();
        let row = segment_features(&traj_from_positions("t", 60, &positions));
        assert_eq!(row.get("min_Distance"), Some(0.0));
    }

    #[test]
    fn stats_match_hand_computed_series() {
        // distance series [0, 100, 100, 100, 100]
        let start = GeoPoint { lat: 0.0, lon: 0.0 };
        let mut positions = vec![start];
        for _ in 0..4 {
            let prev = *positions.last().unwrap();
            positions.push(destination_point(
                prev,
                Bearing::new(0.0),
                DistanceMeters::new(100.0).unwrap(),
            ));
        }
        let row = segment_features(&traj_from_positions("t", 10, &positions));
        assert!((row.get("mean_Distance").unwrap() - 80.0).abs() < 1e-6);
        assert!((row.get("max_Distance").unwrap() - 100.0).abs() < 1e-6);
        assert_eq!(row.get("min_Distance"), Some(0.0));
    }

    #[test]
    fn percentile_linear_interpolation() {
        let series = [0.0, 10.0, 20.0, 30.0, 40.0];
        assert_eq!(percentile(&series, 0.50), 20.0);
        assert_eq!(percentile(&series, 0.25), 10.0);
        // independent oracle: rank = q * (n - 1)
        let brute = |q: f64| {
            let rank: f64 = q * 4.0;
            let lo = rank.floor();
            series[lo as usize] + (rank - lo) * (series[(rank.ceil()) as usize] - series[lo as usize])
        };
        for q in [0.10, 0.25, 0.50, 0.75, 0.90] {
            assert_eq!(percentile(&series, q), brute(q));
        }
        assert_eq!(percentile(&series, 0.10), 4.0);
        assert_eq!(percentile(&series, 0.90), 36.0);
    }

    #[test]
    fn column_order_is_fixed() {
        let cols = feature_columns();
        assert_eq!(cols.len(), FEATURE_COUNT);
        assert_eq!(cols[0], "10%_Distance");
        assert_eq!(cols[8], "std_Distance");
        assert_eq!(cols[9], "10%_Displacement");
        assert_eq!(cols[44], "std_Jerk");
    }

    #[test]
    fn acceleration_matches_difference_quotient_of_speed() {
        // smooth path sampled at 1 s; oracle recomputes acceleration from the
        // speed series with the same discrete rule
        let start = GeoPoint { lat: 0.0, lon: 0.0 };
        let mut positions = vec![start];
        let mut cursor = start;
        for i in 1..40 {
            let gap = 20.0 + 10.0 * (i as f64 * 0.3).sin();
            cursor = destination_point(cursor, Bearing::new(70.0), DistanceMeters::new(gap).unwrap());
            positions.push(cursor);
        }
        let traj = traj_from_positions("t", 1, &positions);
        let k = point_kinematics(&traj);
        for i in 2..k.speed.len() {
            let oracle = k.speed[i] - k.speed[i - 1]; // dt = 1 s
            assert!((k.acceleration[i] - oracle).abs() < 1e-9);
        }
        for i in 3..k.acceleration.len() {
            let oracle = k.acceleration[i] - k.acceleration[i - 1];
            assert!((k.jerk[i] - oracle).abs() < 1e-9);
        }
    }

    #[test]
    fn dataset_features_ordered_by_id_and_matches_per_trajectory() {
        let a = GeoPoint { lat: 0.0, lon: 0.0 };
        let make = |id: &str, gap: f64| {
            let b = destination_point(a, Bearing::new(0.0), DistanceMeters::new(gap).unwrap());
            traj_from_positions(id, 10, &[a, b])
        };
        // insertion order differs from id order
        let ds = TrajectoryDataset::from_trajectories(
            [make("c", 30.0), make("a", 10.0), make("b", 20.0)],
            None,
        )
        .unwrap();
        let rows = dataset_features(&ds);
        assert_eq!(
            rows.iter().map(|r| r.traj_id.as_str()).collect::<Vec<_>>(),
            vec!["a", "b", "c"]
        );
        for row in &rows {
            assert_eq!(row, &segment_features(ds.get(&row.traj_id).unwrap()));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        /// speed_i * dt_i reconstructs distance_i exactly, and the
        /// non-negative families stay non-negative.
        #[test]
        fn speed_times_dt_reconstructs_distance(
            gaps in proptest::collection::vec(0.0f64..5_000.0, 1..40),
            dts in proptest::collection::vec(1i64..600, 40),
        ) {
            let start = GeoPoint { lat: 0.3, lon: 0.3 };
            let mut positions = vec![start];
            let mut cursor = start;
            for &gap in &gaps {
                cursor = destination_point(cursor, Bearing::new(135.0), DistanceMeters::new(gap).unwrap());
                positions.push(cursor);
            }
            let mut t = 0i64;
            let points: Vec<TrajectoryPoint> = positions
                .iter()
                .zip(std::iter::once(&0i64).chain(dts.iter()))
                .map(|(&p, &dt)| {
                    t += dt;
                    TrajectoryPoint::new(ts(t), p)
                })
                .collect();
            let traj = Trajectory::new("t", points);
            let k = point_kinematics(&traj);
            for i in 1..traj.points.len() {
                let dt = seconds_between(traj.points[i - 1].timestamp, traj.points[i].timestamp);
                // bit-exact when dt is a power of two, within 1 ulp otherwise
                if dt == 1.0 || (dt.log2().fract() == 0.0) {
                    prop_assert_eq!(k.speed[i] * dt, k.distance[i]);
                } else {
                    let err = (k.speed[i] * dt - k.distance[i]).abs();
                    prop_assert!(err <= k.distance[i] * f64::EPSILON);
                }
            }
            for series in [&k.distance, &k.displacement, &k.speed] {
                prop_assert!(series.iter().all(|&v| v >= 0.0));
            }
        }

        /// Percentiles are monotone per family: min <= 10% <= ... <= max.
        #[test]
        fn percentile_ordering_invariant(
            gaps in proptest::collection::vec(0.0f64..5_000.0, 2..50),
        ) {
            let start = GeoPoint { lat: 0.0, lon: 0.0 };
            let mut positions = vec![start];
            let mut cursor = start;
            for &gap in &gaps {
                cursor = destination_point(cursor, Bearing::new(200.0), DistanceMeters::new(gap).unwrap());
                positions.push(cursor);
            }
            let row = segment_features(&traj_from_positions("t", 7, &positions));
            for family in FAMILY_NAMES {
                let v = |stat: &str| row.get(&format!("{stat}_{family}")).unwrap();
                let ordered = [v("min"), v("10%"), v("25%"), v("50%"), v("75%"), v("90%"), v("max")];
                prop_assert!(ordered.windows(2).all(|w| w[0] <= w[1]), "{family}: {ordered:?}");
            }
        }
    }
}
