//! Augmentation-candidate selection.
//!
//! Four strategies choose which training trajectories get augmented:
//! uniformly at random, per-class proportional, fewest-points-first, and
//! representative (segment statistics close to the dataset average).
//! Wherever a proportion applies, the count is max(1, floor(n * p)), so a
//! tiny class still contributes at least one candidate.

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::kinematics::dataset_features;
use crate::model::{RandomStream, TrajectoryDataset};

/// Relative-tolerance floor for representative closeness, so columns whose
/// dataset reference is 0 still admit exact matches.
pub const REPRESENTATIVE_ABS_FLOOR: f64 = 1e-9;

/// A parameterized candidate-selection strategy.
#[derive(Debug, Clone, PartialEq)]
pub enum SelectionStrategy {
    /// Uniform sample of the whole training set.
    Random { proportion: f64 },
    /// Uniform sample within each class.
    Proportional { proportion: f64 },
    /// The trajectories with the fewest points.
    Fewest { proportion: f64 },
    /// Trajectories whose segment statistics sit close to the dataset mean.
    Representative { cutoff: f64, tolerance: f64 },
}

impl SelectionStrategy {
    pub fn validate(&self) -> Result<()> {
        let check_proportion = |p: f64| {
            if p > 0.0 && p <= 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "proportion must be in (0, 1], got {p}"
                )))
            }
        };
        match *self {
            SelectionStrategy::Random { proportion }
            | SelectionStrategy::Proportional { proportion }
            | SelectionStrategy::Fewest { proportion } => check_proportion(proportion),
            SelectionStrategy::Representative { cutoff, tolerance } => {
                check_proportion(cutoff).map_err(|_| {
                    Error::InvalidParameter(format!("cutoff must be in (0, 1], got {cutoff}"))
                })?;
                if tolerance > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "tolerance must be > 0, got {tolerance}"
                    )))
                }
            }
        }
    }
}

/// The chosen candidate ids (sorted) together with the strategy that chose
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub traj_ids: Vec<String>,
    pub strategy: SelectionStrategy,
}

impl CandidateSet {
    fn new(mut traj_ids: Vec<String>, strategy: SelectionStrategy) -> Self {
        traj_ids.sort();
        CandidateSet { traj_ids, strategy }
    }

    pub fn len(&self) -> usize {
        self.traj_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traj_ids.is_empty()
    }
}

/// How many of `n` items a proportion selects: max(1, floor(n * p)), capped
/// at n. The epsilon absorbs binary rounding in products like 10 * 0.3.
pub(crate) fn proportional_count(n: usize, proportion: f64) -> usize {
    let raw = (n as f64 * proportion + 1e-9).floor() as usize;
    raw.clamp(1, n)
}

/// Selects floor-proportional many trajectories uniformly without
/// replacement. Deterministic for a fixed stream.
pub fn select_random(
    ds: &TrajectoryDataset,
    proportion: f64,
    stream: &mut RandomStream,
) -> Result<CandidateSet> {
    let strategy = SelectionStrategy::Random { proportion };
    strategy.validate()?;
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let ids: Vec<&str> = ds.ids().collect();
    let k = proportional_count(ids.len(), proportion);
    let chosen = sample(stream, ids.len(), k)
        .into_iter()
        .map(|i| ids[i].to_string())
        .collect();
    Ok(CandidateSet::new(chosen, strategy))
}

/// Selects floor-proportional many trajectories per class, uniformly without
/// replacement within the class.
pub fn select_proportional(
    ds: &TrajectoryDataset,
    proportion: f64,
    stream: &mut RandomStream,
) -> Result<CandidateSet> {
    let strategy = SelectionStrategy::Proportional { proportion };
    strategy.validate()?;
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut chosen = Vec::new();
    for (_, members) in ds.ids_by_class()? {
        let k = proportional_count(members.len(), proportion);
        chosen.extend(
            sample(stream, members.len(), k)
                .into_iter()
                .map(|i| members[i].to_string()),
        );
    }
    Ok(CandidateSet::new(chosen, strategy))
}

/// Selects the trajectories with the fewest points, ties broken by id.
/// Deterministic; no randomness involved.
pub fn select_fewest(ds: &TrajectoryDataset, proportion: f64) -> Result<CandidateSet> {
    let strategy = SelectionStrategy::Fewest { proportion };
    strategy.validate()?;
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut by_length: Vec<(usize, &str)> = ds.iter().map(|t| (t.len(), t.id.as_str())).collect();
    by_length.sort();
    let k = proportional_count(by_length.len(), proportion);
    let chosen = by_length[..k].iter().map(|(_, id)| id.to_string()).collect();
    Ok(CandidateSet::new(chosen, strategy))
}

/// Selects trajectories whose segment statistics are close to the dataset's
/// column means. A column counts as close when
/// |v - ref| <= tolerance * (|ref| + floor); the trajectory is selected when
/// at least `cutoff` of the considered columns are close. May select nothing
/// or everything; no minimum is enforced.
pub fn select_representative(
    ds: &TrajectoryDataset,
    cutoff: f64,
    tolerance: f64,
) -> Result<CandidateSet> {
    let strategy = SelectionStrategy::Representative { cutoff, tolerance };
    strategy.validate()?;
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let rows = dataset_features(ds);
    let columns = rows[0].values.len();
    let mut reference = vec![0.0f64; columns];
    for row in &rows {
        for (acc, v) in reference.iter_mut().zip(&row.values) {
            *acc += v;
        }
    }
    for r in reference.iter_mut() {
        *r /= rows.len() as f64;
    }
    let considered: Vec<usize> = (0..columns).filter(|&c| reference[c].is_finite()).collect();

    let mut chosen = Vec::new();
    for row in &rows {
        let close = considered
            .iter()
            .filter(|&&c| {
                let v = row.values[c];
                v.is_finite()
                    && (v - reference[c]).abs()
                        <= tolerance * (reference[c].abs() + REPRESENTATIVE_ABS_FLOOR)
            })
            .count();
        if !considered.is_empty() && close as f64 / considered.len() as f64 >= cutoff {
            chosen.push(row.traj_id.clone());
        }
    }
    Ok(CandidateSet::new(chosen, strategy))
}

/// Runs whichever strategy is described, drawing from `stream` only for the
/// randomized ones.
pub fn select(
    ds: &TrajectoryDataset,
    strategy: &SelectionStrategy,
    stream: &mut RandomStream,
) -> Result<CandidateSet> {
    match *strategy {
        SelectionStrategy::Random { proportion } => select_random(ds, proportion, stream),
        SelectionStrategy::Proportional { proportion } => {
            select_proportional(ds, proportion, stream)
        }
        SelectionStrategy::Fewest { proportion } => select_fewest(ds, proportion),
        SelectionStrategy::Representative { cutoff, tolerance } => {
            select_representative(ds, cutoff, tolerance)
        }
    }
}
