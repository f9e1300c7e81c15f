//! Point-modification strategies for generating synthetic trajectories.
//!
//! Every strategy rewrites positions (or drops interior rows) while leaving
//! timestamps, extra attributes, and the label untouched, so a synthetic
//! trajectory keeps the exact time structure of its original.
//!
//! The on/in-circle radius at a point is 10% of the gap to the next point
//! (the last point reuses the gap behind it). Stretching moves points along
//! one fixed bearing line; dropping removes interior points independently
//! and never touches the endpoints.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geodesy::{destination_point, haversine_distance, Bearing, DistanceMeters};
use crate::model::{derive_stream, RandomStream, RandomnessSpec, Trajectory, TrajectoryDataset};

/// Fraction of the inter-point gap used as the modification radius.
pub const RADIUS_FRACTION: f64 = 0.1;

/// How the stretch strategy picks the new point on the bearing line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StretchMode {
    /// Always the point on the opposite-bearing side.
    MinPoint,
    /// Always the point on the bearing side.
    MaxPoint,
    /// Either endpoint of the line, each with probability 1/2.
    RandomEndpoint,
    /// A uniform signed offset in (-max_distance, +max_distance).
    RandomInRange,
}

/// A parameterized point-modification strategy.
#[derive(Debug, Clone, PartialEq)]
pub enum ModificationStrategy {
    OnCircle,
    InCircle,
    Stretch {
        mode: StretchMode,
        max_distance: DistanceMeters,
        bearing: Bearing,
    },
    Drop {
        p_drop: f64,
    },
}

impl ModificationStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModificationStrategy::OnCircle | ModificationStrategy::InCircle => Ok(()),
            ModificationStrategy::Stretch { max_distance, .. } => {
                if max_distance.meters() > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(
                        "stretch max distance must be > 0".into(),
                    ))
                }
            }
            ModificationStrategy::Drop { p_drop } => {
                if (0.0..=1.0).contains(&p_drop) {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "drop probability must be in [0, 1], got {p_drop}"
                    )))
                }
            }
        }
    }
}

/// The modification radius at point `i`: 10% of the gap to the next point,
/// or of the previous gap for the last point.
pub fn circle_radius(traj: &Trajectory, i: usize) -> DistanceMeters {
    debug_assert!(traj.points.len() >= 2 && i < traj.points.len());
    let gap = if i + 1 < traj.points.len() {
        haversine_distance(traj.points[i].position, traj.points[i + 1].position)
    } else {
        haversine_distance(traj.points[i - 1].position, traj.points[i].position)
    };
    DistanceMeters::new(RADIUS_FRACTION * gap.meters()).expect("gap is non-negative")
}

fn with_modified_positions<F>(traj: &Trajectory, mut new_position: F) -> Trajectory
where
    F: FnMut(usize) -> crate::model::GeoPoint,
{
    let mut out = traj.clone();
    for (i, point) in out.points.iter_mut().enumerate() {
        point.position = new_position(i);
    }
    out
}

/// Moves every point onto the circumference of its modification circle, in a
/// uniformly random direction. Coincident points (radius 0) stay in place.
pub fn modify_on_circle(traj: &Trajectory, stream: &mut RandomStream) -> Trajectory {
    with_modified_positions(traj, |i| {
        let theta = Bearing::new(stream.random_range(0.0..360.0));
        destination_point(traj.points[i].position, theta, circle_radius(traj, i))
    })
}

/// Moves every point to a uniformly random distance within its modification
/// circle, in a uniformly random direction.
pub fn modify_in_circle(traj: &Trajectory, stream: &mut RandomStream) -> Trajectory {
    with_modified_positions(traj, |i| {
        // distance first, then direction
        let d = circle_radius(traj, i).meters() * stream.random::<f64>();
        let theta = Bearing::new(stream.random_range(0.0..360.0));
        destination_point(
            traj.points[i].position,
            theta,
            DistanceMeters::new(d).expect("scaled radius is non-negative"),
        )
    })
}

/// Shifts every point along the fixed bearing line through it, by
/// `max_distance` toward the chosen side (or a random offset within the
/// line for [`StretchMode::RandomInRange`]).
pub fn modify_stretch(
    traj: &Trajectory,
    mode: StretchMode,
    max_distance: DistanceMeters,
    bearing: Bearing,
    stream: &mut RandomStream,
) -> Trajectory {
    if max_distance.meters() == 0.0 {
        return traj.clone();
    }
    with_modified_positions(traj, |i| {
        let origin = traj.points[i].position;
        match mode {
            StretchMode::MinPoint => destination_point(origin, bearing.opposite(), max_distance),
            StretchMode::MaxPoint => destination_point(origin, bearing, max_distance),
            StretchMode::RandomEndpoint => {
                let toward_max = stream.random_bool(0.5);
                let side = if toward_max { bearing } else { bearing.opposite() };
                destination_point(origin, side, max_distance)
            }
            StretchMode::RandomInRange => {
                let magnitude = stream.random_range(0.0..max_distance.meters());
                let toward_max = stream.random_bool(0.5);
                let side = if toward_max { bearing } else { bearing.opposite() };
                destination_point(
                    origin,
                    side,
                    DistanceMeters::new(magnitude).expect("magnitude within range"),
                )
            }
        }
    })
}

/// Removes each interior point independently with probability `p_drop`. The
/// first and last points always survive, so the output keeps >= 2 points
/// and the original extent.
pub fn modify_drop(traj: &Trajectory, p_drop: f64, stream: &mut RandomStream) -> Trajectory {
    let last = traj.points.len() - 1;
    let mut out = traj.clone();
    let mut index = 0;
    out.points.retain(|_| {
        let keep = index == 0 || index == last || stream.random::<f64>() >= p_drop;
        index += 1;
        keep
    });
    out
}

/// Applies whichever strategy is described. The output keeps the input's id;
/// callers generating synthetics assign the new id.
pub fn apply_modification(
    traj: &Trajectory,
    strategy: &ModificationStrategy,
    stream: &mut RandomStream,
) -> Trajectory {
    match *strategy {
        ModificationStrategy::OnCircle => modify_on_circle(traj, stream),
        ModificationStrategy::InCircle => modify_in_circle(traj, stream),
        ModificationStrategy::Stretch {
            mode,
            max_distance,
            bearing,
        } => modify_stretch(traj, mode, max_distance, bearing, stream),
        ModificationStrategy::Drop { p_drop } => modify_drop(traj, p_drop, stream),
    }
}

/// Synthetic id for copy `k` of `orig_id`.
pub fn synthetic_id(orig_id: &str, k: u64) -> String {
    format!("{orig_id}#aug{k}")
}

/// Splits a synthetic id into (original id, copy index); plain ids map to
/// copy index 0.
pub fn split_synthetic_id(id: &str) -> (&str, u64) {
    if let Some((base, suffix)) = id.rsplit_once("#aug") {
        if !suffix.is_empty() && suffix.bytes().all(|b| b.is_ascii_digit()) {
            if let Ok(k) = suffix.parse::<u64>() {
                return (base, k);
            }
        }
    }
    (id, 0)
}

/// Adds `copies` synthetic trajectories per candidate to the dataset.
///
/// Copy `k` of candidate `c` is generated with the stream derived from
/// (spec, c, k) and inserted as `"{c}#aug{k}"`, inheriting the original's
/// label. Generation runs in parallel across (candidate, copy) pairs; the
/// id-keyed streams make the result independent of scheduling.
pub fn augment_dataset(
    ds: &TrajectoryDataset,
    candidates: &crate::selection::CandidateSet,
    strategy: &ModificationStrategy,
    copies: u32,
    spec: &RandomnessSpec,
) -> Result<TrajectoryDataset> {
    strategy.validate()?;
    if copies == 0 {
        return Err(Error::InvalidParameter("copies must be >= 1".into()));
    }
    let mut jobs = Vec::with_capacity(candidates.len() * copies as usize);
    for id in &candidates.traj_ids {
        let orig = ds.get(id).ok_or_else(|| Error::UnknownCandidate(id.clone()))?;
        for k in 1..=u64::from(copies) {
            let new_id = synthetic_id(id, k);
            if ds.contains(&new_id) {
                return Err(Error::IdCollision(new_id));
            }
            jobs.push((orig, k, new_id));
        }
    }

    let synthetics: Vec<Trajectory> = jobs
        .into_par_iter()
        .map(|(orig, k, new_id)| {
            let mut stream = derive_stream(spec, &orig.id, k);
            let mut out = apply_modification(orig, strategy, &mut stream);
            out.id = new_id;
            out
        })
        .collect();

    let mut result = TrajectoryDataset::new(ds.label_column().map(String::from));
    for traj in ds.iter() {
        result.insert(traj.clone())?;
    }
    for traj in synthetics {
        result.insert(traj)?;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GeoPoint, TrajectoryPoint};
    use crate::selection::{select_fewest, CandidateSet, SelectionStrategy};
    use chrono::NaiveDate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ts(secs: i64) -> chrono::NaiveDateTime {
        NaiveDate::from_ymd_opt(2022, 3, 5)
            .unwrap()
            .and_hms_opt(8, 0, 0)
            .unwrap()
            + chrono::Duration::seconds(secs)
    }

    fn spec(seed: u64) -> RandomnessSpec {
        RandomnessSpec::new(seed)
    }

    fn stream(seed: u64) -> RandomStream {
        derive_stream(&spec(seed), "s", 0)
    }

    /// Random walk near the equator; tight coordinates keep the geodesy
    /// round-trip well below the 1e-9 relative tolerance.
    fn equatorial_walk(id: &str, n: usize, gaps: &mut impl FnMut(usize) -> f64) -> Trajectory {
        let mut rng = ChaCha8Rng::seed_from_u64(id.len() as u64 * 31 + n as u64);
        let mut pos = GeoPoint { lat: 0.05, lon: -0.05 };
        let mut points = vec![TrajectoryPoint::new(ts(0), pos)];
        for i in 1..n {
            let gap = gaps(i);
            let bearing = if pos.lat.abs() > 0.4 || pos.lon.abs() > 0.4 {
                // steer back toward the origin to stay in the precision band
                crate::geodesy::initial_bearing(pos, GeoPoint { lat: 0.0, lon: 0.0 }).unwrap()
            } else {
                Bearing::new(rand::Rng::random_range(&mut rng, 0.0..360.0))
            };
            pos = destination_point(pos, bearing, DistanceMeters::new(gap).unwrap());
            points.push(TrajectoryPoint::new(ts(i as i64 * 10), pos));
        }
        Trajectory::new(id, points)
    }

    fn fixed_walk(id: &str, n: usize, gap: f64) -> Trajectory {
        equatorial_walk(id, n, &mut |_| gap)
    }

    #[test]
    fn circle_radius_is_ten_percent_of_gap() {
        let traj = fixed_walk("t", 5, 100.0);
        for i in 0..4 {
            assert!((circle_radius(&traj, i).meters() - 10.0).abs() < 1e-7);
        }
    }

    #[test]
    fn circle_radius_last_point_reuses_previous_gap() {
        let a = GeoPoint { lat: 0.0, lon: 0.0 };
        let b = destination_point(a, Bearing::new(90.0), DistanceMeters::new(50.0).unwrap());
        let traj = Trajectory::new(
            "t",
            vec![TrajectoryPoint::new(ts(0), a), TrajectoryPoint::new(ts(10), b)],
        );
        assert!((circle_radius(&traj, 0).meters() - 5.0).abs() < 1e-9);
        assert!((circle_radius(&traj, 1).meters() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn circle_radius_zero_for_coincident_points() {
        let here = GeoPoint { lat: 0.1, lon: 0.1 };
        let traj = Trajectory::new(
            "t",
            vec![TrajectoryPoint::new(ts(0), here), TrajectoryPoint::new(ts(10), here)],
        );
        assert_eq!(circle_radius(&traj, 0).meters(), 0.0);
    }

    #[test]
    fn on_circle_displacement_equals_radius() {
        let traj = equatorial_walk("t", 40, &mut |i| 1.0 + 237.0 * i as f64);
        let modified = modify_on_circle(&traj, &mut stream(3));
        for i in 0..traj.points.len() {
            let r = circle_radius(&traj, i).meters();
            let d = haversine_distance(traj.points[i].position, modified.points[i].position).meters();
            assert!((d - r).abs() <= 1e-9 * r, "i={i}: d={d}, r={r}");
        }
    }

    #[test]
    fn on_circle_preserves_everything_but_positions() {
        let mut traj = fixed_walk("t", 6, 80.0).with_label("elk");
        for (i, p) in traj.points.iter_mut().enumerate() {
            p.extras.insert("Species".into(), format!("sp{i}"));
        }
        let modified = modify_on_circle(&traj, &mut stream(4));
        assert_eq!(modified.id, traj.id);
        assert_eq!(modified.label, traj.label);
        assert_eq!(modified.points.len(), traj.points.len());
        for (orig, new) in traj.points.iter().zip(&modified.points) {
            assert_eq!(orig.timestamp, new.timestamp);
            assert_eq!(orig.extras, new.extras);
        }
    }

    #[test]
    fn coincident_trajectory_is_unchanged_by_circle_strategies() {
        let here = GeoPoint { lat: 0.2, lon: -0.3 };
        let traj = Trajectory::new(
            "t",
            (0..4).map(|i| TrajectoryPoint::new(ts(i * 5), here)).collect(),
        );
        assert_eq!(modify_on_circle(&traj, &mut stream(5)), traj);
        assert_eq!(modify_in_circle(&traj, &mut stream(5)), traj);
    }

    #[test]
    fn in_circle_displacement_bounded_by_radius() {
        let traj = equatorial_walk("t", 60, &mut |i| 2.0 + 91.0 * i as f64);
        let modified = modify_in_circle(&traj, &mut stream(6));
        for i in 0..traj.points.len() {
            let r = circle_radius(&traj, i).meters();
            let d = haversine_distance(traj.points[i].position, modified.points[i].position).meters();
            assert!(d <= r + 1e-9, "i={i}: d={d}, r={r}"); // coordinate round-trip slack
        }
    }

    #[test]
    fn in_circle_mean_displacement_is_half_radius() {
        // Monte Carlo oracle for Uniform[0, r]: mean r/2, sigma r/sqrt(12 n)
        let a = GeoPoint { lat: 0.0, lon: 0.0 };
        let b = destination_point(a, Bearing::new(90.0), DistanceMeters::new(500.0).unwrap());
        let traj = Trajectory::new(
            "t",
            vec![TrajectoryPoint::new(ts(0), a), TrajectoryPoint::new(ts(10), b)],
        );
        let r = circle_radius(&traj, 0).meters();
        let n = 10_000;
        let mut stream = stream(7);
        let mut total = 0.0;
        for _ in 0..n {
            let modified = modify_in_circle(&traj, &mut stream);
            total += haversine_distance(traj.points[0].position, modified.points[0].position).meters();
        }
        let mean = total / n as f64;
        let sigma = r / (12.0 * n as f64).sqrt();
        assert!(
            (mean - r / 2.0).abs() <= 3.0 * sigma,
            "mean={mean}, expected {} +- {}",
            r / 2.0,
            3.0 * sigma
        );
    }

    #[test]
    fn stretch_min_max_are_deterministic_reflections() {
        let traj = fixed_walk("t", 12, 150.0);
        let max_d = DistanceMeters::new(100.0).unwrap();
        let bearing = Bearing::new(0.0);
        // stream is unused by the deterministic modes
        let maxed = modify_stretch(&traj, StretchMode::MaxPoint, max_d, bearing, &mut stream(8));
        let maxed_again = modify_stretch(&traj, StretchMode::MaxPoint, max_d, bearing, &mut stream(99));
        assert_eq!(maxed, maxed_again);
        let minned = modify_stretch(&traj, StretchMode::MinPoint, max_d, bearing, &mut stream(8));
        for i in 0..traj.points.len() {
            let orig = traj.points[i].position;
            let up = haversine_distance(orig, maxed.points[i].position).meters();
            let down = haversine_distance(orig, minned.points[i].position).meters();
            assert!((up - 100.0).abs() < 1e-6);
            assert!((down - 100.0).abs() < 1e-6);
            // the originals sit at the midpoint of (min, max)
            let mid_lat = (maxed.points[i].position.lat + minned.points[i].position.lat) / 2.0;
            let mid_lon = (maxed.points[i].position.lon + minned.points[i].position.lon) / 2.0;
            assert!((mid_lat - orig.lat).abs() < 1e-6);
            assert!((mid_lon - orig.lon).abs() < 1e-6);
        }
    }

    #[test]
    fn stretch_max_moves_due_north_by_max_distance() {
        let traj = fixed_walk("t", 8, 60.0);
        let moved = modify_stretch(
            &traj,
            StretchMode::MaxPoint,
            DistanceMeters::new(100.0).unwrap(),
            Bearing::new(0.0),
            &mut stream(9),
        );
        for (orig, new) in traj.points.iter().zip(&moved.points) {
            let d = haversine_distance(orig.position, new.position).meters();
            assert!((d - 100.0).abs() < 1e-6);
            assert!(new.position.lat > orig.position.lat);
            assert!((new.position.lon - orig.position.lon).abs() < 1e-9);
        }
    }

    #[test]
    fn stretch_random_endpoint_lands_on_either_end() {
        let traj = fixed_walk("t", 200, 90.0);
        let max_d = DistanceMeters::new(50.0).unwrap();
        let moved = modify_stretch(&traj, StretchMode::RandomEndpoint, max_d, Bearing::new(45.0), &mut stream(10));
        let mut norths = 0;
        for (orig, new) in traj.points.iter().zip(&moved.points) {
            let d = haversine_distance(orig.position, new.position).meters();
            assert!((d - 50.0).abs() < 1e-6);
            if new.position.lat > orig.position.lat {
                norths += 1;
            }
        }
        // both sides occur
        assert!(norths > 50 && norths < 150, "norths={norths}");
    }

    #[test]
    fn stretch_random_in_range_stays_within_max() {
        let traj = fixed_walk("t", 300, 75.0);
        let max_d = DistanceMeters::new(20.0).unwrap();
        let moved = modify_stretch(&traj, StretchMode::RandomInRange, max_d, Bearing::new(10.0), &mut stream(11));
        for (orig, new) in traj.points.iter().zip(&moved.points) {
            let d = haversine_distance(orig.position, new.position).meters();
            assert!(d <= 20.0, "d={d}");
        }
    }

    #[test]
    fn drop_zero_probability_is_identity() {
        let traj = fixed_walk("t", 20, 45.0);
        assert_eq!(modify_drop(&traj, 0.0, &mut stream(12)), traj);
    }

    #[test]
    fn drop_certain_probability_keeps_only_endpoints() {
        let traj = fixed_walk("t", 20, 45.0);
        let dropped = modify_drop(&traj, 1.0, &mut stream(13));
        assert_eq!(dropped.points.len(), 2);
        assert_eq!(dropped.points[0], traj.points[0]);
        assert_eq!(dropped.points[1], traj.points[19]);
    }

    #[test]
    fn drop_rate_matches_binomial_oracle() {
        let traj = fixed_walk("t", 1000, 30.0);
        let interior = 998.0;
        let trials = 200;
        let mut stream = stream(14);
        let mut dropped_total = 0.0;
        for _ in 0..trials {
            let out = modify_drop(&traj, 0.3, &mut stream);
            dropped_total += interior - (out.points.len() as f64 - 2.0);
        }
        let rate = dropped_total / (interior * trials as f64);
        assert!((0.25..=0.35).contains(&rate), "rate={rate}");
    }

    #[test]
    fn drop_preserves_order_and_rows() {
        let mut traj = fixed_walk("t", 50, 35.0);
        for (i, p) in traj.points.iter_mut().enumerate() {
            p.extras.insert("idx".into(), i.to_string());
        }
        let out = modify_drop(&traj, 0.4, &mut stream(15));
        assert!(out.points.windows(2).all(|w| w[0].timestamp < w[1].timestamp));
        // surviving rows are bitwise rows of the original
        for p in &out.points {
            assert!(traj.points.contains(p));
        }
    }

    #[test]
    fn synthetic_id_roundtrip() {
        assert_eq!(synthetic_id("abc", 3), "abc#aug3");
        assert_eq!(split_synthetic_id("abc#aug3"), ("abc", 3));
        assert_eq!(split_synthetic_id("abc"), ("abc", 0));
        assert_eq!(split_synthetic_id("abc#augx"), ("abc#augx", 0));
        assert_eq!(split_synthetic_id("a#aug1#aug2"), ("a#aug1", 2));
    }

    fn candidate_set(ids: &[&str]) -> CandidateSet {
        CandidateSet {
            traj_ids: ids.iter().map(|s| s.to_string()).collect(),
            strategy: SelectionStrategy::Fewest { proportion: 1.0 },
        }
    }

    #[test]
    fn augment_adds_copies_per_candidate() {
        let ds = TrajectoryDataset::from_trajectories(
            (0..10).map(|i| fixed_walk(&format!("t{i}"), 6, 70.0)),
            None,
        )
        .unwrap();
        let candidates = candidate_set(&["t0", "t3", "t5", "t9"]);
        let out = augment_dataset(&ds, &candidates, &ModificationStrategy::OnCircle, 3, &spec(1415))
            .unwrap();
        assert_eq!(out.len(), 22);
        assert!(out.contains("t3#aug1") && out.contains("t3#aug2") && out.contains("t3#aug3"));
        assert!(!out.contains("t1#aug1"));
        // originals are untouched
        for t in ds.iter() {
            assert_eq!(out.get(&t.id), Some(t));
        }
    }

    #[test]
    fn augment_with_no_candidates_is_identity() {
        let ds = TrajectoryDataset::from_trajectories(
            (0..4).map(|i| fixed_walk(&format!("t{i}"), 5, 50.0)),
            None,
        )
        .unwrap();
        let out =
            augment_dataset(&ds, &candidate_set(&[]), &ModificationStrategy::InCircle, 1, &spec(2))
                .unwrap();
        assert_eq!(out, ds);
    }

    #[test]
    fn augment_is_deterministic() {
        let ds = TrajectoryDataset::from_trajectories(
            (0..8).map(|i| fixed_walk(&format!("t{i}"), 7, 65.0)),
            None,
        )
        .unwrap();
        let candidates = select_fewest(&ds, 0.5).unwrap();
        let strategy = ModificationStrategy::Drop { p_drop: 0.25 };
        let a = augment_dataset(&ds, &candidates, &strategy, 3, &spec(77)).unwrap();
        let b = augment_dataset(&ds, &candidates, &strategy, 3, &spec(77)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn augment_rejects_unknown_candidates_and_collisions() {
        let ds = TrajectoryDataset::from_trajectories(
            vec![fixed_walk("a", 5, 40.0), fixed_walk("a#aug1", 5, 40.0)],
            None,
        )
        .unwrap();
        assert!(matches!(
            augment_dataset(&ds, &candidate_set(&["zzz"]), &ModificationStrategy::OnCircle, 1, &spec(3)),
            Err(Error::UnknownCandidate(id)) if id == "zzz"
        ));
        assert!(matches!(
            augment_dataset(&ds, &candidate_set(&["a"]), &ModificationStrategy::OnCircle, 1, &spec(3)),
            Err(Error::IdCollision(id)) if id == "a#aug1"
        ));
    }

    #[test]
    fn augment_inherits_labels() {
        let ds = TrajectoryDataset::from_trajectories(
            vec![
                fixed_walk("a", 5, 40.0).with_label("car"),
                fixed_walk("b", 5, 40.0).with_label("bus"),
            ],
            Some("vehicle_type".into()),
        )
        .unwrap();
        let out = augment_dataset(&ds, &candidate_set(&["b"]), &ModificationStrategy::OnCircle, 2, &spec(4))
            .unwrap();
        assert_eq!(out.get("b#aug1").unwrap().label.as_deref(), Some("bus"));
        assert_eq!(out.get("b#aug2").unwrap().label.as_deref(), Some("bus"));
    }
}
