//! Monte Carlo coverage experiments.
//!
//! Each replication draws `n + 1` pairs from the configured generator,
//! builds every interval from the first `n` pairs and the last pair's
//! predictors, and records whether the last response is covered and how
//! long the interval is. Replication `i` always uses RNG stream `i`, and the
//! per-replication outcomes are summed in index order, so reports are
//! bit-identical for any number of worker threads.

mod config;
mod examples;
mod report;

pub use config::{ExperimentConfig, GeneratorSpec, NamedTransform, OracleSpec, PredictorSpec};
pub use examples::{builtin_example, EXAMPLE_IDS};
pub use report::{report_table, ExperimentReport, MethodSummary, LOW_PRECISION_REPS};

use rayon::prelude::*;
use thiserror::Error;

use crate::distributions::{ParamError, QuantileError};
use crate::intervals::{constrained_interval, unsupervised_claim_interval, Branch, IntervalError, RegressionSample};
use crate::order_stats::{empirical_quantile, OrderStatError, Sample};
use crate::rng::{SeededRng, PILOT_STREAM};
use crate::transform::{EvalError, ParseError};
use config::{CompiledExperiment, CompiledGenerator, CompiledOracle};

pub const BASELINE_NAME: &str = "[0, Y_(r))";

/// Number of generator draws used to validate that responses are nonnegative.
const PILOT_CHECK_DRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("cannot parse {what}: {source}")]
    Expr { what: String, source: ParseError },
    #[error("response formula failed: {0}")]
    Response(EvalError),
    #[error("generator produced a negative response ({value}) on stream {stream}")]
    NegativeResponse { value: f64, stream: u64 },
    #[error("method '{method}' failed in replication {rep}: {source}")]
    Interval {
        method: String,
        rep: usize,
        source: IntervalError,
    },
    #[error(transparent)]
    Quantile(#[from] QuantileError),
    #[error(transparent)]
    OrderStat(#[from] OrderStatError),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

impl SimError {
    /// True for failures caused by too few observations for the requested level.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            SimError::OrderStat(OrderStatError::Infeasible { .. })
                | SimError::Interval {
                    source: IntervalError::OrderStat(OrderStatError::Infeasible { .. }),
                    ..
                }
        )
    }
}

impl CompiledGenerator {
    fn draw_pair(&self, rng: &mut SeededRng) -> Result<(Vec<f64>, f64), SimError> {
        let mut point = Vec::with_capacity(self.predictors.len() + 1);
        for (sampler, negate) in &self.predictors {
            let v = sampler.sample(rng);
            point.push(if *negate { -v } else { v });
        }
        point.push(self.noise.sample(rng));
        let y = self.response.evaluate(&point).map_err(SimError::Response)?;
        if y < 0.0 {
            return Err(SimError::NegativeResponse {
                value: y,
                stream: rng.stream_id(),
            });
        }
        point.pop();
        Ok((point, y))
    }

    fn draw(&self, count: usize, rng: &mut SeededRng) -> Result<(Vec<Vec<f64>>, Vec<f64>), SimError> {
        let mut xs = Vec::with_capacity(count);
        let mut ys = Vec::with_capacity(count);
        for _ in 0..count {
            let (x, y) = self.draw_pair(rng)?;
            xs.push(x);
            ys.push(y);
        }
        Ok((xs, ys))
    }
}

/// Upper bound of the oracle interval `[0, u_alpha)`.
pub fn oracle_upper(config: &ExperimentConfig) -> Result<f64, SimError> {
    let compiled = config.compile()?;
    compiled_oracle_upper(config, &compiled)
}

fn compiled_oracle_upper(config: &ExperimentConfig, compiled: &CompiledExperiment) -> Result<f64, SimError> {
    match compiled.oracle {
        CompiledOracle::ClosedForm(g) => Ok(g.quantile(1.0 - config.alpha)?),
        CompiledOracle::Empirical(m) => {
            let mut rng = SeededRng::new(config.master_seed, PILOT_STREAM);
            let (_, ys) = compiled.generator.draw(m, &mut rng)?;
            Ok(empirical_quantile(&Sample::new(ys)?, 1.0 - config.alpha)?)
        }
    }
}

/// Per-replication outcome for one method.
#[derive(Debug, Clone, Copy, Default)]
struct Outcome {
    covered: bool,
    length: f64,
    fallback: bool,
    degenerate: bool,
}

fn replicate(config: &ExperimentConfig, compiled: &CompiledExperiment, rep: usize) -> Result<Vec<Outcome>, SimError> {
    let mut rng = SeededRng::new(config.master_seed, rep as u64);
    let (mut xs, mut ys) = compiled.generator.draw(config.n + 1, &mut rng)?;
    let x_new = xs.pop().expect("n + 1 rows");
    let y_new = ys.pop().expect("n + 1 rows");

    let mut out = Vec::with_capacity(compiled.transforms.len() + 1);
    let fail = |method: &str, source: IntervalError| SimError::Interval {
        method: method.to_string(),
        rep,
        source,
    };
    let baseline = unsupervised_claim_interval(&ys, config.alpha).map_err(|e| fail(BASELINE_NAME, e))?;
    out.push(Outcome {
        covered: baseline.contains(y_new),
        length: baseline.length(),
        fallback: false,
        degenerate: baseline.is_degenerate(),
    });
    let sample = RegressionSample::new(xs, ys).map_err(|e| fail("data", e))?;
    for (name, _, h) in &compiled.transforms {
        let ci = constrained_interval(&sample, h, &x_new, config.alpha).map_err(|e| fail(name, e))?;
        out.push(Outcome {
            covered: ci.interval.contains(y_new),
            length: ci.interval.length(),
            fallback: ci.branch == Branch::Fallback,
            degenerate: ci.degenerate,
        });
    }
    Ok(out)
}

fn validate_generator(config: &ExperimentConfig, compiled: &CompiledExperiment) -> Result<(), SimError> {
    // a stream id that no replication (index < reps <= usize::MAX) and not
    // the oracle pilot uses
    let mut rng = SeededRng::new(config.master_seed, PILOT_STREAM - 1);
    compiled.generator.draw(PILOT_CHECK_DRAWS, &mut rng).map(|_| ())
}

/// Runs the experiment on the global rayon pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, SimError> {
    run_experiment_with_workers(config, None)
}

/// Runs the experiment on a dedicated pool of `workers` threads (or the
/// global pool when `None`). The report does not depend on the choice.
pub fn run_experiment_with_workers(
    config: &ExperimentConfig,
    workers: Option<usize>,
) -> Result<ExperimentReport, SimError> {
    let compiled = config.compile()?;
    validate_generator(config, &compiled)?;
    let oracle = compiled_oracle_upper(config, &compiled)?;

    let work = || -> Result<Vec<Vec<Outcome>>, SimError> {
        (0..config.reps)
            .into_par_iter()
            .map(|rep| replicate(config, &compiled, rep))
            .collect()
    };
    let outcomes = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| SimError::Pool(e.to_string()))?
            .install(work)?,
        None => work()?,
    };

    let mut names = vec![(BASELINE_NAME.to_string(), String::new())];
    names.extend(compiled.transforms.iter().map(|(n, e, _)| (n.clone(), e.clone())));
    let methods = names
        .into_iter()
        .enumerate()
        .map(|(k, (name, expr))| MethodSummary::aggregate(name, expr, outcomes.iter().map(|o| o[k]), oracle))
        .collect();
    Ok(ExperimentReport {
        name: config.name.clone(),
        n: config.n,
        reps: config.reps,
        alpha: config.alpha,
        master_seed: config.master_seed,
        oracle_length: oracle,
        methods,
    })
}

impl MethodSummary {
    fn aggregate(name: String, expr: String, outcomes: impl Iterator<Item = Outcome>, oracle: f64) -> Self {
        let (mut covered, mut fallback, mut degenerate, mut count) = (0usize, 0usize, 0usize, 0usize);
        let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
        for o in outcomes {
            count += 1;
            covered += usize::from(o.covered);
            fallback += usize::from(o.fallback);
            degenerate += usize::from(o.degenerate);
            sum += o.length;
            sum_sq += o.length * o.length;
        }
        let n = count as f64;
        let coverage = covered as f64 / n;
        let mean_length = sum / n;
        let var = if count > 1 {
            ((sum_sq - n * mean_length * mean_length) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        let mean_length_se = (var / n).sqrt();
        MethodSummary {
            name,
            expr,
            covered,
            coverage,
            coverage_se: (coverage * (1.0 - coverage) / n).sqrt(),
            mean_length,
            mean_length_se,
            length_ratio: mean_length / oracle,
            length_ratio_se: mean_length_se / oracle,
            fallback_count: fallback,
            degenerate_count: degenerate,
        }
    }
}
