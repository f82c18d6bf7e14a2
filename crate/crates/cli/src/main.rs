//! `claimpred`: prediction intervals for nonnegative responses.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or domain error,
//! 3 sample too small for the requested level.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

use claimpred_core::conformal::{self, LabeledPoint};
use claimpred_core::data::{self, LoadOptions, RawTable, VariableSummary};
use claimpred_core::intervals::{self, IntervalError, RegressionSample};
use claimpred_core::order_stats::OrderStatError;
use claimpred_core::simulation::{self, ExperimentConfig, SimError};
use claimpred_core::transform::TransformExpr;

#[derive(Debug, Parser)]
#[command(
    name = "claimpred",
    version,
    about = "Finite-sample valid prediction intervals for nonnegative responses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte Carlo coverage experiment.
    Simulate(SimulateArgs),
    /// Build a prediction interval for a new observation from CSV data.
    Predict(PredictArgs),
    /// Print min, quartiles, max and mean of selected columns.
    Summarize(SummarizeArgs),
    /// Conformal plausibility of a candidate response.
    Plausibility(PlausibilityArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["config", "example"])))]
struct SimulateArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in experiment (1, 2 or 3).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    example: Option<u8>,
    /// Number of replications (overrides the config).
    #[arg(long)]
    reps: Option<usize>,
    /// Training sample size (overrides the config).
    #[arg(long)]
    n: Option<usize>,
    /// Miscoverage level alpha; the interval targets 1 - alpha coverage.
    #[arg(long)]
    alpha: Option<f64>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report as CSV to this path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, env = "CLAIMPRED_WORKERS")]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Tokens treated as missing (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = data::DEFAULT_MISSING_MARKERS.map(String::from))]
    missing: Vec<String>,
    /// Value substituted for missing cells.
    #[arg(long, default_value_t = 0.0)]
    impute: f64,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("query").required(true).args(["x_new", "holdout_last"])))]
struct PredictArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Response column.
    #[arg(long)]
    response: String,
    /// Predictor columns, in the order t1, t2, ...
    #[arg(long, value_delimiter = ',')]
    predictors: Vec<String>,
    /// Transformation h over t1..tp, e.g. "log(1+t1+t2)".
    #[arg(long, allow_hyphen_values = true)]
    transform: String,
    /// Miscoverage level alpha; the interval targets 1 - alpha coverage.
    #[arg(long)]
    alpha: f64,
    /// Predictor values of the new observation.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x_new: Option<Vec<f64>>,
    /// Predict the last row from all earlier rows.
    #[arg(long)]
    holdout_last: bool,
    /// Two-sided interval with no sign constraint on the response.
    #[arg(long)]
    two_sided: bool,
}

#[derive(Debug, Args)]
struct SummarizeArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Columns to summarize.
    #[arg(long, value_delimiter = ',', required = true)]
    cols: Vec<String>,
}

#[derive(Debug, Args)]
struct PlausibilityArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Response column.
    #[arg(long)]
    response: String,
    /// Predictor columns.
    #[arg(long, value_delimiter = ',')]
    predictors: Vec<String>,
    /// Predictor values of the new observation.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x_new: Vec<f64>,
    /// Candidate value for the new response.
    #[arg(long, allow_hyphen_values = true)]
    y_candidate: f64,
    /// Level used for the validity threshold.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Infeasible(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Infeasible(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Infeasible(m) => m,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        if e.is_infeasible() {
            CliError::Infeasible(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

impl From<IntervalError> for CliError {
    fn from(e: IntervalError) -> Self {
        match e {
            IntervalError::OrderStat(OrderStatError::Infeasible { .. }) => CliError::Infeasible(e.to_string()),
            IntervalError::OrderStat(OrderStatError::InvalidAlpha(_)) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<data::DataError> for CliError {
    fn from(e: data::DataError) -> Self {
        match e {
            data::DataError::Io { .. } => CliError::Usage(e.to_string()),
            data::DataError::UnknownColumn(_) => CliError::Usage(e.to_string()),
            data::DataError::Interval(ie) => ie.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Predict(a) => predict(a),
        Command::Summarize(a) => summarize(a),
        Command::Plausibility(a) => plausibility(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn read_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    Ok(ExperimentConfig::from_json(&text)?)
}

fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let mut config = match (&a.config, a.example) {
        (Some(path), _) => read_config(path)?,
        (None, Some(id)) => simulation::builtin_example(id)?,
        (None, None) => unreachable!("clap enforces the source group"),
    };
    if let Some(reps) = a.reps {
        config.reps = reps;
    }
    if let Some(n) = a.n {
        config.n = n;
    }
    if let Some(alpha) = a.alpha {
        config.alpha = alpha;
    }
    if let Some(seed) = a.seed {
        config.master_seed = seed;
    }
    let report = simulation::run_experiment_with_workers(&config, a.workers)?;
    let (table, csv) = simulation::report_table(&report);
    print!("{table}");
    if let Some(out) = a.out {
        std::fs::write(&out, csv).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", out.display())))?;
    }
    Ok(())
}

fn load(args: &DataArgs) -> Result<RawTable, CliError> {
    let opts = LoadOptions {
        missing_markers: args.missing.clone(),
    };
    Ok(data::load_csv(&args.data, &opts)?)
}

fn predict(a: PredictArgs) -> Result<(), CliError> {
    let table = load(&a.data)?;
    let predictors: Vec<&str> = a.predictors.iter().map(String::as_str).collect();
    let dataset = data::prepare(&table, &a.response, &predictors, a.data.impute)?;
    let h = TransformExpr::parse(&a.transform, predictors.len())
        .map_err(|e| CliError::Usage(format!("--transform: {e}")))?;

    let full = &dataset.sample;
    let (train, x_new, held_out) = if a.holdout_last {
        let n = full.len();
        if n < 2 {
            return Err(CliError::Data("--holdout-last needs at least two rows".into()));
        }
        let train = RegressionSample::new(full.features()[..n - 1].to_vec(), full.responses()[..n - 1].to_vec())
            .map_err(CliError::from)?;
        (train, full.features()[n - 1].clone(), Some(full.responses()[n - 1]))
    } else {
        let x = a.x_new.clone().unwrap_or_default();
        if x.len() != predictors.len() {
            return Err(CliError::Usage(format!(
                "--x-new has {} value(s) but {} predictor(s) were given",
                x.len(),
                predictors.len()
            )));
        }
        (full.clone(), x, None)
    };

    println!("n: {}", train.len());
    println!("alpha: {}", a.alpha);
    println!("transform: {h}");
    if a.two_sided {
        let pi = intervals::general_interval(&train, &h, &x_new, a.alpha)?;
        println!("interval: {pi}");
        println!("lower: {}", pi.lower);
        println!("upper: {}", pi.upper);
        println!("degenerate: {}", pi.is_degenerate());
        if let Some(y) = held_out {
            println!("held-out response: {y} (covered: {})", pi.contains(y));
        }
        return Ok(());
    }
    let ci = intervals::constrained_interval(&train, &h, &x_new, a.alpha)?;
    println!("rank: {}", ci.rank);
    println!("interval: {}", ci.interval);
    println!("upper: {}", ci.upper());
    println!(
        "branch: {}",
        match ci.branch {
            intervals::Branch::Positive => "positive",
            intervals::Branch::Fallback => "fallback",
        }
    );
    println!("degenerate: {}", ci.degenerate);
    if let Some(y) = held_out {
        println!("held-out response: {y} (covered: {})", ci.interval.contains(y));
    }
    Ok(())
}

fn summarize(a: SummarizeArgs) -> Result<(), CliError> {
    let table = load(&a.data)?;
    let mut rows = Vec::new();
    for col in &a.cols {
        let values: Vec<f64> = table
            .column(col)
            .ok_or_else(|| CliError::Usage(format!("unknown column '{col}'")))?
            .iter()
            .map(|v| v.unwrap_or(a.data.impute))
            .collect();
        if values.is_empty() {
            return Err(CliError::Data("no data rows".into()));
        }
        rows.push(VariableSummary::of(col, &values)?);
    }
    print!("{}", data::summary_table(&rows));
    Ok(())
}

fn plausibility(a: PlausibilityArgs) -> Result<(), CliError> {
    let table = load(&a.data)?;
    let predictors: Vec<&str> = a.predictors.iter().map(String::as_str).collect();
    let dataset = data::prepare(&table, &a.response, &predictors, a.data.impute)?;
    if a.x_new.len() != predictors.len() {
        return Err(CliError::Usage(format!(
            "--x-new has {} value(s) but {} predictor(s) were given",
            a.x_new.len(),
            predictors.len()
        )));
    }
    let points: Vec<LabeledPoint> = dataset
        .sample
        .features()
        .iter()
        .zip(dataset.sample.responses())
        .map(|(x, &y)| LabeledPoint::new(x.clone(), y))
        .collect();
    let measure = conformal::builtin_measure_abs_deviation();
    let r = conformal::plausibility(&points, &a.x_new, a.y_candidate, a.alpha, &measure).map_err(|e| match e {
        conformal::ConformalError::Alpha(_) => CliError::Usage(e.to_string()),
        _ => CliError::Data(e.to_string()),
    })?;
    println!("n: {}", r.n);
    println!("plausibility: {}", r.plausibility);
    println!("threshold: {}", r.threshold);
    println!("alpha: {}", r.alpha);
    println!("rejected: {}", r.rejected());
    Ok(())
}
