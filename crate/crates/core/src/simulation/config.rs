use serde::{Deserialize, Serialize};

use super::SimError;
use crate::distributions::{Family, GammaParams, Sampler};
use crate::order_stats::check_alpha;
use crate::transform::TransformExpr;

/// One predictor column: a distribution, optionally negated (a predictor
/// `X` with `-X ~ Bern(p)` is `{"family": "bernoulli", "p": p, "negate": true}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorSpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub negate: bool,
}

/// Data-generating mechanism `Y = f(X_1, ..., X_p, eps)`.
///
/// `response` is an expression over `t1..tp` (the predictors) and
/// `t{p+1}` (the noise draw).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub predictors: Vec<PredictorSpec>,
    pub noise: Family,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTransform {
    pub name: String,
    pub expr: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleSpec {
    /// The response is Gamma(shape, rate); the oracle bound is its exact quantile.
    ClosedForm { shape: f64, rate: f64 },
    /// Empirical quantile of `m` responses drawn on a dedicated stream.
    Empirical { m: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub generator: GeneratorSpec,
    pub n: usize,
    pub reps: usize,
    pub alpha: f64,
    #[serde(default)]
    pub transforms: Vec<NamedTransform>,
    pub oracle: OracleSpec,
    #[serde(default)]
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Config(format!("invalid experiment config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub(crate) fn compile(&self) -> Result<CompiledExperiment, SimError> {
        if self.n == 0 {
            return Err(SimError::Config("n must be at least 1".into()));
        }
        if self.reps == 0 {
            return Err(SimError::Config("reps must be at least 1".into()));
        }
        check_alpha(self.alpha).map_err(|e| SimError::Config(e.to_string()))?;
        let p = self.generator.predictors.len();
        let predictors = self
            .generator
            .predictors
            .iter()
            .map(|s| Ok((s.family.build()?, s.negate)))
            .collect::<Result<Vec<_>, SimError>>()?;
        let noise = self.generator.noise.build()?;
        let response = TransformExpr::parse(&self.generator.response, p + 1).map_err(|source| SimError::Expr {
            what: "response".into(),
            source,
        })?;
        let transforms = self
            .transforms
            .iter()
            .map(|t| {
                TransformExpr::parse(&t.expr, p)
                    .map(|e| (t.name.clone(), t.expr.clone(), e))
                    .map_err(|source| SimError::Expr {
                        what: format!("transform '{}'", t.name),
                        source,
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let oracle = match self.oracle {
            OracleSpec::ClosedForm { shape, rate } => CompiledOracle::ClosedForm(GammaParams::new(shape, rate)?),
            OracleSpec::Empirical { m } => {
                if m == 0 {
                    return Err(SimError::Config("empirical oracle needs m >= 1".into()));
                }
                CompiledOracle::Empirical(m)
            }
        };
        Ok(CompiledExperiment {
            generator: CompiledGenerator {
                predictors,
                noise,
                response,
            },
            transforms,
            oracle,
        })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledGenerator {
    pub predictors: Vec<(Sampler, bool)>,
    pub noise: Sampler,
    pub response: TransformExpr,
}

#[derive(Debug, Clone)]
pub(crate) enum CompiledOracle {
    ClosedForm(GammaParams),
    Empirical(usize),
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledExperiment {
    pub generator: CompiledGenerator,
    pub transforms: Vec<(String, String, TransformExpr)>,
    pub oracle: CompiledOracle,
}
