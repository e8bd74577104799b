//! `biasslice` command-line tool.
//!
//! Every flag can also be set through an environment variable named
//! `BIASSLICE_<FLAG>`, e.g. `BIASSLICE_SUPPORT_MIN=0.05`. Exit codes: 0 on
//! success, 1 on any error, 2 when the model shows no bias to explain.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use biasslice::dataset::{discretize, load_dataset_with_schema, Role, Schema};
use biasslice::fairness::{compute_bias, FairnessMetric};
use biasslice::forest::{DareForest, ForestParams};
use biasslice::lattice::{CompareStrategy, SearchConfig};
use biasslice::pipeline::{
    bench_csv, cmd_bench, cmd_debug, fidelity_on, prepare, write_json, BenchConfig, DebugOutcome, FidelityConfig,
    PipelineError, RunConfig,
};
use biasslice::report::Format;
use clap::{ArgAction, Args, Parser, Subcommand};

const DEFAULT_TEST_SPLIT: f64 = 0.2;

#[derive(Debug, Parser)]
#[command(name = "biasslice", version, about = "Find training-data subsets responsible for a model's unfairness")]
struct Cli {
    /// Cap on worker threads (defaults to one per core).
    #[arg(long, global = true, env = "BIASSLICE_THREADS", value_parser = positive)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit, measure bias, search for responsible subsets and write reports.
    Debug(DebugArgs),
    /// Compare unlearned and retrained fairness on sampled subsets.
    Fidelity(FidelityArgs),
    /// Time fitting, deletion and retraining on synthetic data.
    Bench(BenchArgs),
    /// Fit a forest and print its bias on the test data.
    Bias(BiasArgs),
    /// Quantile-bin continuous attributes and write the result.
    Discretize(DiscretizeArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Training data CSV.
    #[arg(long, env = "BIASSLICE_TRAIN")]
    train: PathBuf,
    /// Test data CSV. Without it, a stratified split of the training data is held out.
    #[arg(long, env = "BIASSLICE_TEST", conflicts_with = "test_split")]
    test: Option<PathBuf>,
    /// Schema JSON describing the columns.
    #[arg(long, env = "BIASSLICE_SCHEMA")]
    schema: PathBuf,
    /// Fraction of the training data held out for testing [default: 0.2].
    #[arg(long, env = "BIASSLICE_TEST_SPLIT", value_parser = open_fraction)]
    test_split: Option<f64>,
    /// Quantile bins per continuous attribute.
    #[arg(long, env = "BIASSLICE_BINS", default_value_t = biasslice::dataset::DEFAULT_BINS, value_parser = at_least_two)]
    bins: usize,
}

#[derive(Debug, Args)]
struct ForestArgs {
    #[arg(long, env = "BIASSLICE_TREES", default_value_t = 100, value_parser = positive)]
    trees: usize,
    #[arg(long, env = "BIASSLICE_MAX_DEPTH", default_value_t = 10)]
    max_depth: usize,
    /// Top levels that use random splits.
    #[arg(long, env = "BIASSLICE_D_RAND", default_value_t = 2)]
    d_rand: usize,
    /// Candidate thresholds cached per sampled attribute.
    #[arg(long, env = "BIASSLICE_K_THRESHOLDS", default_value_t = 5, value_parser = positive)]
    k_thresholds: usize,
    #[arg(long, env = "BIASSLICE_SEED", default_value_t = 0)]
    seed: u64,
}

impl ForestArgs {
    fn params(&self) -> ForestParams {
        ForestParams {
            n_trees: self.trees,
            max_depth: self.max_depth,
            d_rand: self.d_rand,
            k_thresholds: self.k_thresholds,
            seed: self.seed,
            ..ForestParams::default()
        }
    }
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// Fairness metric: sp, pp or eo.
    #[arg(long, env = "BIASSLICE_METRIC", default_value = "sp")]
    metric: FairnessMetric,
    #[arg(long, env = "BIASSLICE_SUPPORT_MIN", default_value_t = 0.05, value_parser = closed_fraction)]
    support_min: f64,
    #[arg(long, env = "BIASSLICE_SUPPORT_MAX", default_value_t = 0.15, value_parser = closed_fraction)]
    support_max: f64,
    #[arg(long, env = "BIASSLICE_MAX_LITERALS", default_value_t = 2, value_parser = positive)]
    max_literals: usize,
    /// normal or perInstance.
    #[arg(long, env = "BIASSLICE_COMPARE_STRATEGY", default_value = "normal")]
    compare_strategy: CompareStrategy,
    /// Only expand subsets whose removal reduces bias.
    #[arg(long, env = "BIASSLICE_COMPARE_ORIGINAL_PARITY", default_value_t = true, action = ArgAction::Set)]
    compare_original_parity: bool,
    /// Number of explanations to report.
    #[arg(long, env = "BIASSLICE_K", default_value_t = 5, value_parser = positive)]
    k: usize,
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        SearchConfig {
            max_literals: self.max_literals,
            support_min: self.support_min,
            support_max: self.support_max,
            compare_strategy: self.compare_strategy,
            compare_original_parity: self.compare_original_parity,
            k: self.k,
            metric: self.metric,
            ..SearchConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct DebugArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    forest: ForestArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Retrain without each reported subset to confirm its effect.
    #[arg(long, env = "BIASSLICE_VERIFY", default_value_t = true, action = ArgAction::Set)]
    verify: bool,
    /// Also write the full search trace as JSON lines.
    #[arg(long, env = "BIASSLICE_TRACE")]
    trace: bool,
    /// Table format: csv, json or md.
    #[arg(long, env = "BIASSLICE_FORMAT", default_value = "md")]
    format: Format,
    /// Compute diagnostic importances by retraining instead of unlearning.
    #[arg(long, env = "BIASSLICE_RETRAIN_DIAGNOSTICS")]
    retrain_diagnostics: bool,
    /// Output directory.
    #[arg(long, env = "BIASSLICE_OUT", default_value = "biasslice-out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FidelityArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    forest: ForestArgs,
    #[arg(long, env = "BIASSLICE_N_RANDOM", default_value_t = 100)]
    n_random: usize,
    #[arg(long, env = "BIASSLICE_N_COHERENT", default_value_t = 100)]
    n_coherent: usize,
    #[arg(long, env = "BIASSLICE_SUPPORT_MIN", default_value_t = 0.0, value_parser = closed_fraction)]
    support_min: f64,
    #[arg(long, env = "BIASSLICE_SUPPORT_MAX", default_value_t = 0.05, value_parser = closed_fraction)]
    support_max: f64,
    /// Literal cap for coherent subsets.
    #[arg(long, env = "BIASSLICE_MAX_LITERALS", default_value_t = 3, value_parser = positive)]
    max_literals: usize,
    /// Metrics to score; repeat for several [default: all].
    #[arg(long, env = "BIASSLICE_METRIC")]
    metric: Vec<FairnessMetric>,
    /// Output directory.
    #[arg(long, env = "BIASSLICE_OUT", default_value = "biasslice-out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    forest: ForestArgs,
    /// Dataset sizes to time.
    #[arg(long, env = "BIASSLICE_SIZES", value_delimiter = ',', default_value = "2500,5000,10000")]
    sizes: Vec<usize>,
    #[arg(long, env = "BIASSLICE_CONTINUOUS", default_value_t = 10)]
    continuous_attributes: usize,
    #[arg(long, env = "BIASSLICE_DELETE_FRACTION", default_value_t = 0.05, value_parser = open_fraction)]
    delete_fraction: f64,
    /// CSV output file; printed to stdout when absent.
    #[arg(long, env = "BIASSLICE_OUT")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BiasArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    forest: ForestArgs,
    /// Metrics to report; repeat for several [default: all].
    #[arg(long, env = "BIASSLICE_METRIC")]
    metric: Vec<FairnessMetric>,
}

#[derive(Debug, Args)]
struct DiscretizeArgs {
    #[arg(long, env = "BIASSLICE_TRAIN")]
    train: PathBuf,
    #[arg(long, env = "BIASSLICE_SCHEMA")]
    schema: PathBuf,
    #[arg(long, env = "BIASSLICE_BINS", default_value_t = biasslice::dataset::DEFAULT_BINS, value_parser = at_least_two)]
    bins: usize,
    /// Output directory for binned.csv and binned_schema.json.
    #[arg(long, env = "BIASSLICE_OUT", default_value = "biasslice-out")]
    out: PathBuf,
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn at_least_two(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 2 => Ok(v),
        Ok(_) => Err("must be at least 2".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn closed_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err("must lie in [0, 1]".into())
    }
}

fn open_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err("must lie strictly between 0 and 1".into())
    }
}

impl DataArgs {
    fn run_config(&self, forest: ForestParams, out: PathBuf) -> RunConfig {
        let mut cfg = RunConfig::new(self.train.clone(), self.schema.clone(), out);
        cfg.test = self.test.clone();
        cfg.test_split = match &self.test {
            Some(_) => None,
            None => Some(self.test_split.unwrap_or(DEFAULT_TEST_SPLIT)),
        };
        cfg.bins = self.bins;
        cfg.forest = forest;
        cfg
    }
}

fn metrics_or_all(metrics: &[FairnessMetric]) -> Vec<FairnessMetric> {
    if metrics.is_empty() {
        FairnessMetric::ALL.to_vec()
    } else {
        metrics.to_vec()
    }
}

fn run_debug(args: DebugArgs) -> Result<ExitCode, PipelineError> {
    let mut cfg = args.data.run_config(args.forest.params(), args.out);
    cfg.search = args.search.config();
    cfg.verify = args.verify;
    cfg.trace = args.trace;
    cfg.format = args.format;
    cfg.retrain_diagnostics = args.retrain_diagnostics;
    let outcome = cmd_debug(&cfg)?;
    match &outcome {
        DebugOutcome::NothingToDebug { bias, .. } => {
            println!("nothing to debug: {} is {} on the test data", bias.metric, bias.value);
        }
        DebugOutcome::Explained(a) => {
            println!("{} = {:.4}, accuracy {:.4}", a.bias.metric, a.bias.value, a.accuracy);
            if let Some(n) = &a.notice {
                println!("{n}");
            }
            for e in &a.explanations {
                println!("{:>2}. {} (support {:.2}%, bias reduction {:.2}%)", e.rank, e.predicate, 100.0 * e.support, e.bias_reduction);
            }
            for f in &a.files {
                log::info!("wrote {}", f.display());
            }
        }
    }
    Ok(ExitCode::from(outcome.exit_code() as u8))
}

fn run_fidelity(args: FidelityArgs) -> Result<ExitCode, PipelineError> {
    let run = args.data.run_config(args.forest.params(), args.out.clone());
    run.validate()?;
    let prepared = prepare(&run)?;
    let cfg = FidelityConfig {
        n_random: args.n_random,
        n_coherent: args.n_coherent,
        support_band: [args.support_min, args.support_max],
        max_literals: args.max_literals,
        metrics: metrics_or_all(&args.metric),
        seed: args.forest.seed,
    };
    if cfg.support_band[0] > cfg.support_band[1] {
        return Err(PipelineError::Config("support-min exceeds support-max".into()));
    }
    let report = fidelity_on(&prepared, &run.forest, &cfg)?;
    for (key, s) in &report.summary {
        println!(
            "{key}: {} pairs, mean {:.4}, p95 {:.4}, max {:.4}, {} undefined",
            s.pairs, s.mean_abs_diff, s.p95_abs_diff, s.max_abs_diff, s.undefined
        );
    }
    write_json(&args.out.join("fidelity.json"), &report)?;
    Ok(ExitCode::SUCCESS)
}

fn run_bench(args: BenchArgs) -> Result<ExitCode, PipelineError> {
    let cfg = BenchConfig {
        sizes: args.sizes,
        continuous_attributes: args.continuous_attributes,
        delete_fraction: args.delete_fraction,
        forest: args.forest.params(),
    };
    let csv = bench_csv(&cmd_bench(&cfg)?);
    match args.out {
        Some(path) => fs::write(&path, csv).map_err(|source| PipelineError::Write { path, source })?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn run_bias(args: BiasArgs) -> Result<ExitCode, PipelineError> {
    let run = args.data.run_config(args.forest.params(), PathBuf::new());
    run.validate()?;
    let prepared = prepare(&run)?;
    let forest = DareForest::fit(&prepared.train, &run.forest).map_err(PipelineError::Fit)?;
    let pred = forest.predict(&prepared.test).map_err(PipelineError::Fit)?;
    let reports = metrics_or_all(&args.metric)
        .into_iter()
        .map(|m| compute_bias(m, &pred.labels, prepared.test.labels(), prepared.test.sensitive()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(PipelineError::Bias)?;
    println!("{}", serde_json::to_string_pretty(&reports).expect("bias reports serialize"));
    Ok(ExitCode::SUCCESS)
}

fn run_discretize(args: DiscretizeArgs) -> Result<ExitCode, PipelineError> {
    let schema = Schema::from_path(&args.schema).map_err(PipelineError::Load)?;
    let data = load_dataset_with_schema(&args.train, &schema, Role::Train).map_err(PipelineError::Load)?;
    let binned = discretize(&data, args.bins).map_err(PipelineError::Discretize)?;
    for w in &binned.warnings {
        log::warn!("{w}");
    }
    fs::create_dir_all(&args.out).map_err(|source| PipelineError::Write { path: args.out.clone(), source })?;
    let csv_path = args.out.join("binned.csv");
    let file = fs::File::create(&csv_path).map_err(|source| PipelineError::Write { path: csv_path.clone(), source })?;
    binned.dataset.write_csv(file).map_err(PipelineError::Discretize)?;
    let schema_path = args.out.join("binned_schema.json");
    fs::write(&schema_path, binned.dataset.schema().to_json_pretty() + "\n")
        .map_err(|source| PipelineError::Write { path: schema_path, source })?;
    println!("wrote {}", csv_path.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own usage-error code would collide with "nothing to debug".
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Debug(a) => run_debug(a),
        Command::Fidelity(a) => run_fidelity(a),
        Command::Bench(a) => run_bench(a),
        Command::Bias(a) => run_bias(a),
        Command::Discretize(a) => run_discretize(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::FAILURE
    })
}
