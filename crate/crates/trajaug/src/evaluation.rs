//! The seeded evaluation protocol.
//!
//! For each seed: split the labeled dataset 80/20 by whole trajectory
//! (stratified per class), pre-select augmentation candidates with all four
//! selection strategies, balance the training set with all four
//! modification strategies, then train and score one model per strategy
//! label. The grid is 21 labels per seed: the unaugmented base, 4 selections
//! x 4 modifications, and 4 balanced variants.
//!
//! Augmentation only ever touches the training partition. Result rows come
//! out ordered (seed, strategy, model) and serialize to a CSV with header
//! `seed,strategy,model,accuracy,f1_score`.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::index::sample;
use rayon::prelude::*;

use crate::balancing::balance_dataset;
use crate::error::{Error, Result};
use crate::geodesy::{Bearing, DistanceMeters};
use crate::kinematics::{dataset_features, SegmentFeatureRow};
use crate::model::{derive_stream, RandomStream, RandomnessSpec, TrajectoryDataset};
use crate::modification::{augment_dataset, ModificationStrategy, StretchMode};
use crate::selection::{
    select_fewest, select_proportional, select_random, select_representative, CandidateSet,
};

/// Bundled digit table: 4,000 decimals, enough for 1,000 four-digit seeds.
const PI_DIGITS: &str = include_str!("evaluation/pi_digits.txt");

/// Largest `n` accepted by [`pi_seeds`].
pub const MAX_PI_SEEDS: usize = 1000;

/// The first `n` non-overlapping 4-digit groups of pi's decimal expansion,
/// read as base-10 integers (leading zeros drop out: the 17th group "0781"
/// becomes 781).
pub fn pi_seeds(n: usize) -> Result<Vec<u64>> {
    if n == 0 || n > MAX_PI_SEEDS {
        return Err(Error::NOutOfRange { n, max: MAX_PI_SEEDS });
    }
    let digits = PI_DIGITS.trim();
    Ok((0..n)
        .map(|i| digits[4 * i..4 * i + 4].parse().expect("digit table is numeric"))
        .collect())
}

/// Stratified whole-trajectory split. Each class contributes
/// round(n_c * test_fraction) test trajectories, clamped so both partitions
/// see every class.
pub fn train_test_split(
    ds: &TrajectoryDataset,
    test_fraction: f64,
    stream: &mut RandomStream,
) -> Result<(TrajectoryDataset, TrajectoryDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let mut test_ids = std::collections::BTreeSet::new();
    for (label, members) in ds.ids_by_class()? {
        let n = members.len();
        if n < 2 {
            return Err(Error::ClassTooSmall(label.to_string()));
        }
        let t = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
        for i in sample(stream, n, t) {
            test_ids.insert(members[i].to_string());
        }
    }
    let label_column = ds.label_column().map(String::from);
    let mut train = TrajectoryDataset::new(label_column.clone());
    let mut test = TrajectoryDataset::new(label_column);
    for traj in ds.iter() {
        if test_ids.contains(&traj.id) {
            test.insert(traj.clone())?;
        } else {
            train.insert(traj.clone())?;
        }
    }
    Ok((train, test))
}

fn check_lengths<T, U>(y_true: &[T], y_pred: &[U]) -> Result<()> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// Fraction of predictions that match the truth.
pub fn accuracy(y_true: &[String], y_pred: &[String]) -> Result<f64> {
    check_lengths(y_true, y_pred)?;
    let correct = y_true.iter().zip(y_pred).filter(|(t, p)| t == p).count();
    Ok(correct as f64 / y_true.len() as f64)
}

/// Support-weighted mean of per-class F1 scores. A class's F1 is
/// 2 * precision * recall / (precision + recall), and 0 when both are 0.
pub fn f1_weighted(y_true: &[String], y_pred: &[String]) -> Result<f64> {
    check_lengths(y_true, y_pred)?;
    #[derive(Default)]
    struct Tally {
        tp: usize,
        fp: usize,
        fn_: usize,
    }
    let mut tallies: BTreeMap<&str, Tally> = BTreeMap::new();
    for (t, p) in y_true.iter().zip(y_pred) {
        if t == p {
            tallies.entry(t).or_default().tp += 1;
        } else {
            tallies.entry(t).or_default().fn_ += 1;
            tallies.entry(p).or_default().fp += 1;
        }
    }
    // accumulate support * f1 and divide once, so a perfect prediction
    // yields exactly 1.0 regardless of how the supports split
    let mut weighted = 0.0;
    for tally in tallies.values() {
        let support = tally.tp + tally.fn_;
        if support == 0 {
            continue; // predicted-only class: zero weight
        }
        let precision = if tally.tp + tally.fp > 0 {
            tally.tp as f64 / (tally.tp + tally.fp) as f64
        } else {
            0.0
        };
        let recall = tally.tp as f64 / support as f64;
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        weighted += support as f64 * f1;
    }
    Ok(weighted / y_true.len() as f64)
}

/// A classifier over segment-feature rows. The harness is model-agnostic;
/// anything implementing this slots into [`run_experiment_with_models`].
pub trait Classifier: Send + Sync {
    fn name(&self) -> &str;
    fn fit_predict(
        &self,
        train: &[SegmentFeatureRow],
        test: &[SegmentFeatureRow],
    ) -> Result<Vec<String>>;
}

/// Built-in baseline: k-nearest-neighbors over z-scored features.
///
/// Standardization is fitted on the training rows only; columns that are
/// constant in training contribute zero distance. Votes tie-break to the
/// lexicographically smallest label.
#[derive(Debug, Clone)]
pub struct KnnClassifier {
    pub k: usize,
}

impl Default for KnnClassifier {
    fn default() -> Self {
        KnnClassifier { k: 5 }
    }
}

impl KnnClassifier {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 || k.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "k must be a positive odd integer, got {k}"
            )));
        }
        Ok(KnnClassifier { k })
    }
}

impl Classifier for KnnClassifier {
    fn name(&self) -> &str {
        "knn"
    }

    fn fit_predict(
        &self,
        train: &[SegmentFeatureRow],
        test: &[SegmentFeatureRow],
    ) -> Result<Vec<String>> {
        if train.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        let width = train[0].values.len();
        if train.iter().chain(test).any(|r| r.values.len() != width) {
            return Err(Error::ColumnMismatch);
        }
        let labels: Vec<&str> = train
            .iter()
            .map(|r| {
                r.label.as_deref().ok_or_else(|| Error::MissingLabel {
                    traj_id: r.traj_id.clone(),
                })
            })
            .collect::<Result<_>>()?;

        let n = train.len() as f64;
        let mut mean = vec![0.0f64; width];
        for row in train {
            for (m, v) in mean.iter_mut().zip(&row.values) {
                *m += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= n;
        }
        let mut scale = vec![0.0f64; width];
        if train.len() > 1 {
            for row in train {
                for (s, (v, m)) in scale.iter_mut().zip(row.values.iter().zip(&mean)) {
                    *s += (v - m) * (v - m);
                }
            }
            for s in scale.iter_mut() {
                let std = (*s / (n - 1.0)).sqrt();
                *s = if std > 0.0 { 1.0 / std } else { 0.0 };
            }
        }

        let standardize = |row: &SegmentFeatureRow| -> Vec<f64> {
            row.values
                .iter()
                .zip(mean.iter().zip(&scale))
                .map(|(v, (m, s))| (v - m) * s)
                .collect()
        };
        let train_z: Vec<Vec<f64>> = train.iter().map(standardize).collect();
        let k = self.k.min(train.len());

        Ok(test
            .iter()
            .map(|row| {
                let z = standardize(row);
                let mut dist: Vec<(f64, usize)> = train_z
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        let d2 = t
                            .iter()
                            .zip(&z)
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>();
                        (d2, i)
                    })
                    .collect();
                dist.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
                let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
                for &(_, i) in dist.iter().take(k) {
                    *votes.entry(labels[i]).or_insert(0) += 1;
                }
                // iterating in label order makes ties pick the smallest label
                let mut best = ("", 0usize);
                for (label, count) in votes {
                    if count > best.1 {
                        best = (label, count);
                    }
                }
                best.0.to_string()
            })
            .collect())
    }
}

/// Selection half of a strategy label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SelectionKind {
    Random,
    Proportional,
    Fewest,
    Representative,
}

impl SelectionKind {
    pub const ALL: [SelectionKind; 4] = [
        SelectionKind::Random,
        SelectionKind::Proportional,
        SelectionKind::Fewest,
        SelectionKind::Representative,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SelectionKind::Random => "random",
            SelectionKind::Proportional => "proportional",
            SelectionKind::Fewest => "fewest",
            SelectionKind::Representative => "representative",
        }
    }
}

/// Modification half of a strategy label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ModificationKind {
    OnCircle,
    InCircle,
    Stretch,
    Drop,
}

impl ModificationKind {
    pub const ALL: [ModificationKind; 4] = [
        ModificationKind::OnCircle,
        ModificationKind::InCircle,
        ModificationKind::Stretch,
        ModificationKind::Drop,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModificationKind::OnCircle => "on",
            ModificationKind::InCircle => "in",
            ModificationKind::Stretch => "stretch",
            ModificationKind::Drop => "drop",
        }
    }
}

/// One cell of the strategy grid: the unaugmented base, a selection plus
/// modification pair, or a balanced variant. 21 labels in total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StrategyLabel {
    Base,
    Selected(SelectionKind, ModificationKind),
    Balanced(ModificationKind),
}

impl StrategyLabel {
    /// All 21 labels in canonical grid order.
    pub fn all() -> Vec<StrategyLabel> {
        let mut labels = vec![StrategyLabel::Base];
        for sel in SelectionKind::ALL {
            for m in ModificationKind::ALL {
                labels.push(StrategyLabel::Selected(sel, m));
            }
        }
        for m in ModificationKind::ALL {
            labels.push(StrategyLabel::Balanced(m));
        }
        labels
    }
}

impl fmt::Display for StrategyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyLabel::Base => write!(f, "base"),
            StrategyLabel::Selected(sel, m) => {
                write!(f, "{}-selected-{}", sel.as_str(), m.as_str())
            }
            StrategyLabel::Balanced(m) => write!(f, "balanced-{}", m.as_str()),
        }
    }
}

/// Everything a full experiment run needs besides the dataset and models.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    pub test_fraction: f64,
    pub copies: u32,
    pub proportion: f64,
    pub cutoff: f64,
    pub tolerance: f64,
    pub max_stretch: f64,
    pub bearing: f64,
    pub stretch_mode: StretchMode,
    pub drop_prob: f64,
    pub multiplier: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seeds: pi_seeds(20).expect("20 <= MAX_PI_SEEDS"),
            test_fraction: 0.2,
            copies: 3,
            proportion: 0.2,
            cutoff: 0.6,
            tolerance: 0.5,
            max_stretch: 20.0,
            bearing: 0.0,
            stretch_mode: StretchMode::RandomInRange,
            drop_prob: 0.2,
            multiplier: 1.1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameter("seed list is empty".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "test fraction must be in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if self.copies == 0 {
            return Err(Error::InvalidParameter("copies must be >= 1".into()));
        }
        self.modification(ModificationKind::Stretch).validate()?;
        self.modification(ModificationKind::Drop).validate()?;
        crate::selection::SelectionStrategy::Random {
            proportion: self.proportion,
        }
        .validate()?;
        crate::selection::SelectionStrategy::Representative {
            cutoff: self.cutoff,
            tolerance: self.tolerance,
        }
        .validate()?;
        if !self.multiplier.is_finite() || self.multiplier < 1.0 {
            return Err(Error::MultiplierBelowOne);
        }
        Ok(())
    }

    fn modification(&self, kind: ModificationKind) -> ModificationStrategy {
        match kind {
            ModificationKind::OnCircle => ModificationStrategy::OnCircle,
            ModificationKind::InCircle => ModificationStrategy::InCircle,
            ModificationKind::Stretch => ModificationStrategy::Stretch {
                mode: self.stretch_mode,
                max_distance: DistanceMeters::new(self.max_stretch.max(0.0))
                    .expect("clamped non-negative"),
                bearing: Bearing::new(self.bearing),
            },
            ModificationKind::Drop => ModificationStrategy::Drop {
                p_drop: self.drop_prob,
            },
        }
    }
}

/// One output line of the harness.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResultRow {
    pub seed: u64,
    pub strategy: StrategyLabel,
    pub model: String,
    pub accuracy: f64,
    pub f1: f64,
}

/// Stream ids for the per-seed protocol stages. These share the
/// derive_stream namespace with trajectory ids; the prefix keeps them from
/// colliding with plausible data.
const SPLIT_STREAM_ID: &str = "protocol::split";
const SELECT_RANDOM_STREAM_ID: &str = "protocol::select-random";
const SELECT_PROPORTIONAL_STREAM_ID: &str = "protocol::select-proportional";

/// The train/test partition the harness uses for one seed.
pub fn split_for_seed(
    ds: &TrajectoryDataset,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(TrajectoryDataset, TrajectoryDataset)> {
    let spec = RandomnessSpec::new(seed);
    let mut stream = derive_stream(&spec, SPLIT_STREAM_ID, 0);
    train_test_split(ds, cfg.test_fraction, &mut stream)
}

/// Builds the 21 training sets for one seed, in canonical label order:
/// the base set, each candidate selection augmented with each modification,
/// and the four balanced variants.
pub fn strategy_training_sets(
    train: &TrajectoryDataset,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<Vec<(StrategyLabel, TrajectoryDataset)>> {
    let spec = RandomnessSpec::new(seed);
    let candidate_for = |kind: SelectionKind| -> Result<CandidateSet> {
        match kind {
            SelectionKind::Random => {
                let mut stream = derive_stream(&spec, SELECT_RANDOM_STREAM_ID, 0);
                select_random(train, cfg.proportion, &mut stream)
            }
            SelectionKind::Proportional => {
                let mut stream = derive_stream(&spec, SELECT_PROPORTIONAL_STREAM_ID, 0);
                select_proportional(train, cfg.proportion, &mut stream)
            }
            SelectionKind::Fewest => select_fewest(train, cfg.proportion),
            SelectionKind::Representative => {
                select_representative(train, cfg.cutoff, cfg.tolerance)
            }
        }
    };

    let mut sets = Vec::with_capacity(21);
    sets.push((StrategyLabel::Base, train.clone()));
    for sel in SelectionKind::ALL {
        let candidates = candidate_for(sel)?;
        for m in ModificationKind::ALL {
            let training =
                augment_dataset(train, &candidates, &cfg.modification(m), cfg.copies, &spec)?;
            sets.push((StrategyLabel::Selected(sel, m), training));
        }
    }
    for m in ModificationKind::ALL {
        let training = balance_dataset(train, cfg.multiplier, &cfg.modification(m), &spec)?;
        sets.push((StrategyLabel::Balanced(m), training));
    }
    Ok(sets)
}

fn run_seed(
    ds: &TrajectoryDataset,
    cfg: &ExperimentConfig,
    models: &[&dyn Classifier],
    seed: u64,
) -> Result<Vec<ExperimentResultRow>> {
    let (train, test) = split_for_seed(ds, cfg, seed)?;
    let test_rows = dataset_features(&test);
    let y_true: Vec<String> = test_rows
        .iter()
        .map(|r| r.label.clone().expect("split requires labels"))
        .collect();

    let mut rows = Vec::with_capacity(21 * models.len());
    for (label, training) in strategy_training_sets(&train, cfg, seed)? {
        // augmentation must never leak into the held-out partition
        for test_id in test.ids() {
            assert!(
                !training.contains(test_id),
                "test trajectory {test_id} leaked into training set {label}"
            );
        }
        let train_rows = dataset_features(&training);
        for model in models {
            let predictions = model.fit_predict(&train_rows, &test_rows)?;
            rows.push(ExperimentResultRow {
                seed,
                strategy: label,
                model: model.name().to_string(),
                accuracy: accuracy(&y_true, &predictions)?,
                f1: f1_weighted(&y_true, &predictions)?,
            });
        }
    }
    Ok(rows)
}

/// Runs the full protocol with caller-supplied models. Seeds run in
/// parallel; rows come back ordered (seed, strategy, model) regardless of
/// scheduling.
pub fn run_experiment_with_models(
    ds: &TrajectoryDataset,
    cfg: &ExperimentConfig,
    models: &[&dyn Classifier],
) -> Result<Vec<ExperimentResultRow>> {
    cfg.validate()?;
    if ds.label_column().is_none() {
        return Err(Error::MissingLabelColumn);
    }
    if models.is_empty() {
        return Err(Error::InvalidParameter("no models supplied".into()));
    }
    let per_seed: Vec<Vec<ExperimentResultRow>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| run_seed(ds, cfg, models, seed))
        .collect::<Result<_>>()?;
    Ok(per_seed.into_iter().flatten().collect())
}

/// Runs the full protocol with the built-in k-NN baseline.
pub fn run_experiment(
    ds: &TrajectoryDataset,
    cfg: &ExperimentConfig,
) -> Result<Vec<ExperimentResultRow>> {
    run_experiment_with_models(ds, cfg, &[&KnnClassifier::default()])
}

/// Serializes result rows in the harness output format.
pub fn results_to_csv(rows: &[ExperimentResultRow]) -> String {
    let mut out = String::from("seed,strategy,model,accuracy,f1_score\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.seed, r.strategy, r.model, r.accuracy, r.f1
        ));
    }
    out
}
