//! Command-line interface for the trajaug library.
//!
//! Subcommands mirror the pipeline stages: `features`, `select`, `augment`,
//! `balance`, and `evaluate`. Flags override values from an optional
//! `key=value` config file (`--config`). Exit codes: 0 on success, 1 on
//! usage errors, 2 on data errors.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use trajaug::error::Error;
use trajaug::evaluation::{pi_seeds, run_experiment, results_to_csv, ExperimentConfig};
use trajaug::geodesy::{Bearing, DistanceMeters};
use trajaug::io::{load_csv, parse_config, write_candidates, write_csv, write_features_to};
use trajaug::kinematics::dataset_features;
use trajaug::model::{derive_stream, RandomnessSpec, TrajectoryDataset};
use trajaug::modification::{augment_dataset, ModificationStrategy, StretchMode};
use trajaug::selection::{select, SelectionStrategy};

#[derive(Parser)]
#[command(name = "trajaug", version, about = "Point-based trajectory data augmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a trajectory CSV to segment-form feature rows
    Features(FeaturesArgs),
    /// Choose augmentation candidates and print their ids
    Select(SelectArgs),
    /// Add synthetic copies of selected candidate trajectories
    Augment(AugmentArgs),
    /// Augment every class up to a common target count
    Balance(BalanceArgs),
    /// Run the seeded strategy-grid evaluation and emit a results CSV
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Input trajectory CSV
    input: PathBuf,
    /// Output file (stdout when omitted)
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Name of the class-label column in the input
    #[arg(long)]
    label_column: Option<String>,
    /// key=value config file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FeaturesArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectStrategyArg {
    Random,
    Proportional,
    Fewest,
    Representative,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModifyArg {
    OnCircle,
    InCircle,
    Stretch,
    Drop,
}

#[derive(Clone, Copy, ValueEnum)]
enum StretchModeArg {
    Min,
    Max,
    RandomEndpoint,
    RandomInRange,
}

impl From<StretchModeArg> for StretchMode {
    fn from(mode: StretchModeArg) -> Self {
        match mode {
            StretchModeArg::Min => StretchMode::MinPoint,
            StretchModeArg::Max => StretchMode::MaxPoint,
            StretchModeArg::RandomEndpoint => StretchMode::RandomEndpoint,
            StretchModeArg::RandomInRange => StretchMode::RandomInRange,
        }
    }
}

#[derive(Args)]
struct SelectionFlags {
    /// Proportion selected (random/proportional/fewest)
    #[arg(long)]
    proportion: Option<f64>,
    /// Closeness cutoff (representative)
    #[arg(long)]
    cutoff: Option<f64>,
    /// Relative closeness tolerance (representative)
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Args)]
struct ModificationFlags {
    /// Maximum stretch displacement in meters
    #[arg(long)]
    max_stretch: Option<f64>,
    /// Stretch bearing in degrees clockwise from north
    #[arg(long)]
    bearing: Option<f64>,
    /// How stretch picks the new point on the bearing line
    #[arg(long)]
    stretch_mode: Option<StretchModeArg>,
    /// Interior-point drop probability
    #[arg(long)]
    drop_prob: Option<f64>,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Selection strategy
    #[arg(long)]
    strategy: SelectStrategyArg,
    #[command(flatten)]
    selection: SelectionFlags,
    /// Master seed for the randomized strategies
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AugmentArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Candidate-selection strategy
    #[arg(long)]
    select_strategy: SelectStrategyArg,
    /// Point-modification strategy
    #[arg(long)]
    modify: ModifyArg,
    /// Synthetic copies per candidate
    #[arg(long)]
    copies: Option<u32>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    selection: SelectionFlags,
    #[command(flatten)]
    modification: ModificationFlags,
}

#[derive(Args)]
struct BalanceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Target multiplier over the largest class
    #[arg(long)]
    multiplier: Option<f64>,
    /// Point-modification strategy
    #[arg(long)]
    modify: ModifyArg,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    modification: ModificationFlags,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Use the first N pi-derived seeds
    #[arg(long, conflicts_with = "seed_list")]
    seeds: Option<usize>,
    /// Comma-separated explicit seed list
    #[arg(long)]
    seed_list: Option<String>,
    /// Fraction of trajectories held out per class
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Synthetic copies per candidate
    #[arg(long)]
    copies: Option<u32>,
    /// Balance multiplier for the balanced variants
    #[arg(long)]
    multiplier: Option<f64>,
    #[command(flatten)]
    selection: SelectionFlags,
    #[command(flatten)]
    modification: ModificationFlags,
}

/// Flag value, else config-file value, else default.
struct Resolver {
    config: BTreeMap<String, String>,
}

impl Resolver {
    fn load(path: Option<&PathBuf>) -> Result<Self, Error> {
        let config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    Error::InvalidParameter(format!("cannot read config {}: {e}", p.display()))
                })?;
                parse_config(&text).map_err(|e| Error::InvalidParameter(e.to_string()))?
            }
            None => BTreeMap::new(),
        };
        Ok(Resolver { config })
    }

    fn value<T: std::str::FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, Error> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.config.get(key) {
            Some(raw) => raw.parse().map_err(|_| {
                Error::InvalidParameter(format!("config key {key}: cannot parse {raw:?}"))
            }),
            None => Ok(default),
        }
    }

    fn stretch_mode(
        &self,
        flag: Option<StretchModeArg>,
        default: StretchMode,
    ) -> Result<StretchMode, Error> {
        if let Some(v) = flag {
            return Ok(v.into());
        }
        match self.config.get("stretch-mode") {
            Some(raw) => StretchModeArg::from_str(raw, true)
                .map(Into::into)
                .map_err(|_| {
                    Error::InvalidParameter(format!("config key stretch-mode: unknown mode {raw:?}"))
                }),
            None => Ok(default),
        }
    }
}

const DEFAULTS: ExperimentConfig = ExperimentConfig {
    seeds: Vec::new(),
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
};

fn selection_strategy(
    arg: SelectStrategyArg,
    flags: &SelectionFlags,
    resolver: &Resolver,
) -> Result<SelectionStrategy, Error> {
    let proportion = resolver.value(flags.proportion, "proportion", DEFAULTS.proportion)?;
    let cutoff = resolver.value(flags.cutoff, "cutoff", DEFAULTS.cutoff)?;
    let tolerance = resolver.value(flags.tolerance, "tolerance", DEFAULTS.tolerance)?;
    let strategy = match arg {
        SelectStrategyArg::Random => SelectionStrategy::Random { proportion },
        SelectStrategyArg::Proportional => SelectionStrategy::Proportional { proportion },
        SelectStrategyArg::Fewest => SelectionStrategy::Fewest { proportion },
        SelectStrategyArg::Representative => SelectionStrategy::Representative { cutoff, tolerance },
    };
    strategy.validate()?;
    Ok(strategy)
}

fn modification_strategy(
    arg: ModifyArg,
    flags: &ModificationFlags,
    resolver: &Resolver,
) -> Result<ModificationStrategy, Error> {
    let strategy = match arg {
        ModifyArg::OnCircle => ModificationStrategy::OnCircle,
        ModifyArg::InCircle => ModificationStrategy::InCircle,
        ModifyArg::Stretch => {
            let max_stretch = resolver.value(flags.max_stretch, "max-stretch", DEFAULTS.max_stretch)?;
            ModificationStrategy::Stretch {
                mode: resolver.stretch_mode(flags.stretch_mode, DEFAULTS.stretch_mode)?,
                max_distance: DistanceMeters::new(max_stretch)?,
                bearing: Bearing::new(resolver.value(flags.bearing, "bearing", DEFAULTS.bearing)?),
            }
        }
        ModifyArg::Drop => ModificationStrategy::Drop {
            p_drop: resolver.value(flags.drop_prob, "drop-prob", DEFAULTS.drop_prob)?,
        },
    };
    strategy.validate()?;
    Ok(strategy)
}

fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn load_input(common: &CommonArgs) -> Result<TrajectoryDataset, Error> {
    load_csv(&common.input, common.label_column.as_deref()).map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", common.input.display()),
        )),
        other => other,
    })
}

/// The id the CLI derives its candidate-selection stream from; `select` and
/// `augment` share it so a printed candidate list predicts an augment run.
const CLI_SELECT_STREAM_ID: &str = "cli::select";

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Features(args) => {
            let ds = load_input(&args.common)?;
            let rows = dataset_features(&ds);
            write_features_to(&rows, ds.label_column(), open_output(args.common.output.as_ref())?)
        }
        Command::Select(args) => {
            let resolver = Resolver::load(args.common.config.as_ref())?;
            let strategy = selection_strategy(args.strategy, &args.selection, &resolver)?;
            let seed = resolver.value(args.seed, "seed", 0)?;
            let ds = load_input(&args.common)?;
            let spec = RandomnessSpec::new(seed);
            let mut stream = derive_stream(&spec, CLI_SELECT_STREAM_ID, 0);
            let set = select(&ds, &strategy, &mut stream)?;
            let over_selected = matches!(strategy, SelectionStrategy::Representative { .. })
                && set.len() * 10 > ds.len() * 9;
            if over_selected {
                eprintln!(
                    "warning: representative selection kept {} of {} trajectories; consider a tighter tolerance",
                    set.len(),
                    ds.len()
                );
            }
            write_candidates(&set, open_output(args.common.output.as_ref())?)
        }
        Command::Augment(args) => {
            let resolver = Resolver::load(args.common.config.as_ref())?;
            let selection = selection_strategy(args.select_strategy, &args.selection, &resolver)?;
            let modification = modification_strategy(args.modify, &args.modification, &resolver)?;
            let copies = resolver.value(args.copies, "copies", DEFAULTS.copies)?;
            let seed = resolver.value(args.seed, "seed", 0)?;
            let ds = load_input(&args.common)?;
            let spec = RandomnessSpec::new(seed);
            let mut stream = derive_stream(&spec, CLI_SELECT_STREAM_ID, 0);
            let candidates = select(&ds, &selection, &mut stream)?;
            let augmented = augment_dataset(&ds, &candidates, &modification, copies, &spec)?;
            write_csv_out(&augmented, &args.common)
        }
        Command::Balance(args) => {
            let resolver = Resolver::load(args.common.config.as_ref())?;
            let modification = modification_strategy(args.modify, &args.modification, &resolver)?;
            let multiplier = resolver.value(args.multiplier, "multiplier", DEFAULTS.multiplier)?;
            let seed = resolver.value(args.seed, "seed", 0)?;
            let ds = load_input(&args.common)?;
            let balanced =
                trajaug::balancing::balance_dataset(&ds, multiplier, &modification, &RandomnessSpec::new(seed))?;
            write_csv_out(&balanced, &args.common)
        }
        Command::Evaluate(args) => {
            let resolver = Resolver::load(args.common.config.as_ref())?;
            let seeds = match &args.seed_list {
                Some(list) => parse_seed_list(list)?,
                None => {
                    let n = resolver.value(args.seeds, "seeds", 20)?;
                    pi_seeds(n)?
                }
            };
            let cfg = ExperimentConfig {
                seeds,
                test_fraction: resolver.value(args.test_fraction, "test-fraction", DEFAULTS.test_fraction)?,
                copies: resolver.value(args.copies, "copies", DEFAULTS.copies)?,
                proportion: resolver.value(args.selection.proportion, "proportion", DEFAULTS.proportion)?,
                cutoff: resolver.value(args.selection.cutoff, "cutoff", DEFAULTS.cutoff)?,
                tolerance: resolver.value(args.selection.tolerance, "tolerance", DEFAULTS.tolerance)?,
                max_stretch: resolver.value(args.modification.max_stretch, "max-stretch", DEFAULTS.max_stretch)?,
                bearing: resolver.value(args.modification.bearing, "bearing", DEFAULTS.bearing)?,
                stretch_mode: resolver.stretch_mode(args.modification.stretch_mode, DEFAULTS.stretch_mode)?,
                drop_prob: resolver.value(args.modification.drop_prob, "drop-prob", DEFAULTS.drop_prob)?,
                multiplier: resolver.value(args.multiplier, "multiplier", DEFAULTS.multiplier)?,
            };
            cfg.validate()?;
            let ds = load_input(&args.common)?;
            let rows = run_experiment(&ds, &cfg)?;
            let mut out = open_output(args.common.output.as_ref())?;
            out.write_all(results_to_csv(&rows).as_bytes())?;
            Ok(())
        }
    }
}

fn write_csv_out(ds: &TrajectoryDataset, common: &CommonArgs) -> Result<(), Error> {
    match &common.output {
        Some(path) => write_csv(ds, path),
        None => trajaug::io::write_csv_to(ds, std::io::stdout().lock()),
    }
}

fn parse_seed_list(list: &str) -> Result<Vec<u64>, Error> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad seed {s:?} in seed list")))
        })
        .collect()
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidParameter(_) | Error::MultiplierBelowOne | Error::NOutOfRange { .. } => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
