//! Domain types for point-based trajectory data and the deterministic
//! randomness contract shared by every augmentation strategy.
//!
//! A [`TrajectoryDataset`] is a collection of [`Trajectory`] values keyed by
//! id. All pipeline stages require a *validated* dataset (see
//! [`validate_dataset`]): points sorted by strictly increasing timestamp,
//! at least two points per trajectory, coordinates in range, and — when a
//! label column is declared — a non-empty label on every trajectory.
//!
//! Randomness is never drawn from a shared sequential stream. Each
//! (trajectory, copy) pair gets its own stream via [`derive_stream`], so
//! dataset-level operations produce identical output no matter how work is
//! scheduled across threads.

use std::collections::BTreeMap;

use chrono::NaiveDateTime;
use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Column names that carry structural meaning in the CSV schema and are
/// therefore forbidden as extra-attribute keys.
pub const RESERVED_COLUMNS: [&str; 4] = ["traj_id", "DateTime", "lat", "lon"];

/// A WGS-style coordinate pair in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Builds a point, rejecting out-of-range or non-finite coordinates.
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        let p = GeoPoint { lat, lon };
        if p.in_range() {
            Ok(p)
        } else {
            Err(Error::InvalidParameter(format!(
                "coordinates ({lat}, {lon}) out of range"
            )))
        }
    }

    pub(crate) fn in_range(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

/// One recorded fix: a timestamp, a position, and any pass-through
/// attributes from the source file (kept as opaque strings).
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub timestamp: NaiveDateTime,
    pub position: GeoPoint,
    pub extras: IndexMap<String, String>,
}

impl TrajectoryPoint {
    pub fn new(timestamp: NaiveDateTime, position: GeoPoint) -> Self {
        TrajectoryPoint {
            timestamp,
            position,
            extras: IndexMap::new(),
        }
    }
}

/// A time-ordered sequence of points for one moving object, with an
/// optional class label.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: String,
    pub points: Vec<TrajectoryPoint>,
    pub label: Option<String>,
}

impl Trajectory {
    pub fn new(id: impl Into<String>, points: Vec<TrajectoryPoint>) -> Self {
        Trajectory {
            id: id.into(),
            points,
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A collection of trajectories keyed by id, iterated in id order so every
/// dataset-level result is independent of insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryDataset {
    trajectories: BTreeMap<String, Trajectory>,
    label_column: Option<String>,
}

impl TrajectoryDataset {
    pub fn new(label_column: Option<String>) -> Self {
        TrajectoryDataset {
            trajectories: BTreeMap::new(),
            label_column,
        }
    }

    /// Builds a dataset from trajectories, rejecting duplicate ids.
    pub fn from_trajectories<I>(trajectories: I, label_column: Option<String>) -> Result<Self>
    where
        I: IntoIterator<Item = Trajectory>,
    {
        let mut ds = TrajectoryDataset::new(label_column);
        for t in trajectories {
            ds.insert(t)?;
        }
        Ok(ds)
    }

    pub fn insert(&mut self, trajectory: Trajectory) -> Result<()> {
        if self.trajectories.contains_key(&trajectory.id) {
            return Err(Error::DuplicateId(trajectory.id));
        }
        self.trajectories.insert(trajectory.id.clone(), trajectory);
        Ok(())
    }

    pub fn label_column(&self) -> Option<&str> {
        self.label_column.as_deref()
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.trajectories.contains_key(id)
    }

    pub fn get(&self, id: &str) -> Option<&Trajectory> {
        self.trajectories.get(id)
    }

    /// Trajectories in id order.
    pub fn iter(&self) -> impl Iterator<Item = &Trajectory> {
        self.trajectories.values()
    }

    /// Ids in lexicographic order.
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.trajectories.keys().map(String::as_str)
    }

    /// Per-class trajectory ids, keyed by label, each id list in id order.
    /// Requires a label column.
    pub fn ids_by_class(&self) -> Result<BTreeMap<&str, Vec<&str>>> {
        if self.label_column.is_none() {
            return Err(Error::MissingLabelColumn);
        }
        let mut classes: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for t in self.iter() {
            let label = t.label.as_deref().ok_or_else(|| Error::MissingLabel {
                traj_id: t.id.clone(),
            })?;
            classes.entry(label).or_default().push(&t.id);
        }
        Ok(classes)
    }
}

/// Normalizes and checks a dataset: sorts each trajectory's points by
/// timestamp and enforces every structural invariant. Idempotent.
pub fn validate_dataset(raw: TrajectoryDataset) -> Result<TrajectoryDataset> {
    let TrajectoryDataset {
        trajectories,
        label_column,
    } = raw;
    let mut validated = BTreeMap::new();
    for (id, mut traj) in trajectories {
        if traj.points.len() < 2 {
            return Err(Error::TooFewPoints { traj_id: id });
        }
        traj.points.sort_by_key(|p| p.timestamp);
        for (index, point) in traj.points.iter().enumerate() {
            if !point.position.in_range() {
                return Err(Error::InvalidCoordinate { traj_id: id, index });
            }
            for key in point.extras.keys() {
                let reserved = RESERVED_COLUMNS.contains(&key.as_str())
                    || label_column.as_deref() == Some(key.as_str());
                if reserved {
                    return Err(Error::ReservedColumn {
                        traj_id: id,
                        column: key.clone(),
                    });
                }
            }
        }
        for pair in traj.points.windows(2) {
            if pair[0].timestamp == pair[1].timestamp {
                return Err(Error::DuplicateTimestamp {
                    traj_id: id,
                    timestamp: pair[0].timestamp.format("%Y-%m-%d %H:%M:%S%.f").to_string(),
                });
            }
        }
        if label_column.is_some() && traj.label.as_deref().is_none_or(str::is_empty) {
            return Err(Error::MissingLabel { traj_id: id });
        }
        validated.insert(id, traj);
    }
    Ok(TrajectoryDataset {
        trajectories: validated,
        label_column,
    })
}

/// The random stream handed to strategies. ChaCha keeps draws identical
/// across platforms for a fixed seed.
pub type RandomStream = ChaCha8Rng;

/// Master seed for a whole augmentation run. Every per-trajectory stream is
/// derived from it; see [`derive_stream`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomnessSpec {
    pub master_seed: u64,
}

impl RandomnessSpec {
    pub fn new(master_seed: u64) -> Self {
        RandomnessSpec { master_seed }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent random stream for one (trajectory, copy) pair.
///
/// Pure function of its inputs: the same (master seed, id, copy index)
/// always yields the same stream, regardless of call order or thread
/// scheduling, which is what makes parallel augmentation reproducible.
pub fn derive_stream(spec: &RandomnessSpec, traj_id: &str, copy_index: u64) -> RandomStream {
    let mut hash = fnv1a(FNV_OFFSET, &spec.master_seed.to_le_bytes());
    hash = fnv1a(hash, traj_id.as_bytes());
    // 0xFF cannot occur in UTF-8, so it unambiguously ends the id.
    hash = fnv1a(hash, &[0xFF]);
    hash = fnv1a(hash, &copy_index.to_le_bytes());

    let mut state = hash;
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
