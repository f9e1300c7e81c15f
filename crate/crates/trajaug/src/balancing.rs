//! Class balancing by augmentation.
//!
//! Every class is brought up to the same target count:
//! floor(largest class count * multiplier). Synthetic sources within a class
//! are spread evenly by cycling a seed-shuffled ordering of the class's
//! trajectories, so per-original synthetic multiplicities differ by at most
//! one. Originals are never removed or altered.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{derive_stream, RandomnessSpec, Trajectory, TrajectoryDataset};
use crate::modification::{apply_modification, split_synthetic_id, synthetic_id, ModificationStrategy};

/// The per-class synthesis plan: a common target count and how many
/// synthetics each class still needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancePlan {
    pub target: usize,
    pub per_class_deficit: BTreeMap<String, usize>,
}

/// Computes the balance target and per-class deficits.
/// target = floor(max class count * multiplier); multiplier must be >= 1.
pub fn plan_balance(ds: &TrajectoryDataset, multiplier: f64) -> Result<BalancePlan> {
    if !multiplier.is_finite() || multiplier < 1.0 {
        return Err(Error::MultiplierBelowOne);
    }
    let classes = ds.ids_by_class()?;
    if classes.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let max_count = classes.values().map(Vec::len).max().unwrap_or(0);
    // epsilon absorbs products like 100 * 1.1 landing just below the integer
    let target = (max_count as f64 * multiplier + 1e-9).floor() as usize;
    let per_class_deficit = classes
        .into_iter()
        .map(|(label, members)| (label.to_string(), target - members.len()))
        .collect();
    Ok(BalancePlan {
        target,
        per_class_deficit,
    })
}

/// Augments every class up to the plan's target using the given modification
/// strategy. Copy indices continue the `#aug{k}` numbering per original, so
/// balancing an already-augmented dataset cannot collide.
pub fn balance_dataset(
    ds: &TrajectoryDataset,
    multiplier: f64,
    strategy: &ModificationStrategy,
    spec: &RandomnessSpec,
) -> Result<TrajectoryDataset> {
    strategy.validate()?;
    let plan = plan_balance(ds, multiplier)?;

    // highest existing copy index per source id; every id gets an entry so
    // synthetic trajectories can themselves serve as sources
    let mut next_copy: BTreeMap<&str, u64> = BTreeMap::new();
    for id in ds.ids() {
        next_copy.entry(id).or_insert(0);
        let (base, k) = split_synthetic_id(id);
        let entry = next_copy.entry(base).or_insert(0);
        *entry = (*entry).max(k);
    }

    let classes = ds.ids_by_class()?;
    let mut jobs: Vec<(&Trajectory, u64, String)> = Vec::new();
    for (label, members) in &classes {
        let deficit = plan.per_class_deficit[*label];
        if deficit == 0 {
            continue;
        }
        let mut order: Vec<&str> = members.clone();
        let mut shuffle_stream = derive_stream(spec, &format!("class::{label}"), 0);
        order.shuffle(&mut shuffle_stream);
        for i in 0..deficit {
            let source = order[i % order.len()];
            let counter = next_copy.get_mut(source).expect("source id is in the dataset");
            *counter += 1;
            let k = *counter;
            let orig = ds.get(source).expect("source id is in the dataset");
            jobs.push((orig, k, synthetic_id(source, k)));
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
