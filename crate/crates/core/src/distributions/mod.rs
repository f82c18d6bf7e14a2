//! Samplers and quantile functions for the gamma, Pareto type II and
//! Bernoulli families, plus a small [`Family`] enum used by experiment
//! generators.

pub mod special;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("gamma parameters must be positive and finite (shape={shape}, rate={rate})")]
    Gamma { shape: f64, rate: f64 },
    #[error("Pareto II parameters must be positive and finite (beta={beta}, theta={theta})")]
    ParetoII { beta: f64, theta: f64 },
    #[error("Bernoulli probability must lie strictly inside (0, 1), got {0}")]
    Bernoulli(f64),
    #[error("uniform bounds must be finite with low < high (low={low}, high={high})")]
    Uniform { low: f64, high: f64 },
    #[error("discrete uniform bounds must satisfy low <= high (low={low}, high={high})")]
    DiscreteUniform { low: i64, high: i64 },
    #[error("constant value must be finite, got {0}")]
    Constant(f64),
    #[error("probability must lie strictly inside (0, 1), got {0}")]
    Probability(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("gamma quantile inversion did not converge (shape={shape}, rate={rate}, p={p})")]
pub struct QuantileError {
    pub shape: f64,
    pub rate: f64,
    pub p: f64,
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn check_probability(p: f64) -> Result<(), ParamError> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(ParamError::Probability(p))
    }
}

/// Gamma distribution with density `rate^shape / Γ(shape) x^(shape-1) e^(-rate x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaParams {
    shape: f64,
    rate: f64,
}

impl GammaParams {
    pub fn new(shape: f64, rate: f64) -> Result<Self, ParamError> {
        if positive(shape) && positive(rate) {
            Ok(Self { shape, rate })
        } else {
            Err(ParamError::Gamma { shape, rate })
        }
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn cdf(&self, x: f64) -> f64 {
        special::reg_lower_gamma(self.shape, self.rate * x)
    }

    /// Marsaglia-Tsang squeeze/rejection. Shapes below one draw at
    /// `shape + 1` and rescale by `U^(1/shape)`.
    pub fn sample(&self, rng: &mut SeededRng) -> f64 {
        if self.shape < 1.0 {
            let g = marsaglia_tsang(self.shape + 1.0, rng);
            let u = rng.open_unit();
            return g * u.powf(1.0 / self.shape) / self.rate;
        }
        marsaglia_tsang(self.shape, rng) / self.rate
    }

    /// Inverts the CDF by bisection, returning `x` with `|F(x) - p| <= 1e-10`.
    pub fn quantile(&self, p: f64) -> Result<f64, QuantileError> {
        let fail = || QuantileError {
            shape: self.shape,
            rate: self.rate,
            p,
        };
        if !(p > 0.0 && p < 1.0) {
            return Err(fail());
        }
        // bracket in the unit-rate scale, rescale at the end
        let a = self.shape;
        let cdf = |x: f64| special::reg_lower_gamma(a, x);
        let mut hi = a.max(1.0);
        while cdf(hi) < p {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(fail());
            }
        }
        let mut lo = hi;
        while cdf(lo) >= p {
            lo *= 0.5;
            if lo == 0.0 {
                return Err(fail());
            }
        }
        for _ in 0..4096 {
            let mid = if hi > 2.0 * lo {
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            };
            if mid <= lo || mid >= hi {
                break;
            }
            let f = cdf(mid);
            if f < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        let (x, fx) = {
            let (flo, fhi) = (cdf(lo), cdf(hi));
            if (flo - p).abs() <= (fhi - p).abs() {
                (lo, flo)
            } else {
                (hi, fhi)
            }
        };
        if (fx - p).abs() <= 1e-10 {
            Ok(x / self.rate)
        } else {
            Err(fail())
        }
    }
}

fn marsaglia_tsang(shape: f64, rng: &mut SeededRng) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = StandardNormal.sample(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.open_unit();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Pareto type II (Lomax) with survival function `(theta / (theta + x))^beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParetoIIParams {
    beta: f64,
    theta: f64,
}

impl ParetoIIParams {
    pub fn new(beta: f64, theta: f64) -> Result<Self, ParamError> {
        if positive(beta) && positive(theta) {
            Ok(Self { beta, theta })
        } else {
            Err(ParamError::ParetoII { beta, theta })
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            1.0 - (self.theta / (self.theta + x)).powf(self.beta)
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64, ParamError> {
        check_probability(p)?;
        Ok(self.theta * ((1.0 - p).powf(-1.0 / self.beta) - 1.0))
    }

    pub fn sample(&self, rng: &mut SeededRng) -> f64 {
        let u = rng.open_unit();
        self.theta * ((1.0 - u).powf(-1.0 / self.beta) - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BernoulliParams {
    p: f64,
}

impl BernoulliParams {
    pub fn new(p: f64) -> Result<Self, ParamError> {
        if p > 0.0 && p < 1.0 {
            Ok(Self { p })
        } else {
            Err(ParamError::Bernoulli(p))
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn sample(&self, rng: &mut SeededRng) -> u8 {
        u8::from(rng.open_unit() < self.p)
    }
}

/// Distribution families available to experiment generators.
///
/// Gamma, Pareto II and Bernoulli carry the experiments; the remaining
/// families exist for adversarial validity checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Gamma { shape: f64, rate: f64 },
    Pareto2 { beta: f64, theta: f64 },
    Bernoulli { p: f64 },
    Uniform { low: f64, high: f64 },
    DiscreteUniform { low: i64, high: i64 },
    Constant { value: f64 },
}

/// A validated [`Family`] ready to draw from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampler {
    Gamma(GammaParams),
    Pareto2(ParetoIIParams),
    Bernoulli(BernoulliParams),
    Uniform { low: f64, high: f64 },
    DiscreteUniform { low: i64, high: i64 },
    Constant(f64),
}

impl Family {
    pub fn build(&self) -> Result<Sampler, ParamError> {
        Ok(match *self {
            Family::Gamma { shape, rate } => Sampler::Gamma(GammaParams::new(shape, rate)?),
            Family::Pareto2 { beta, theta } => Sampler::Pareto2(ParetoIIParams::new(beta, theta)?),
            Family::Bernoulli { p } => Sampler::Bernoulli(BernoulliParams::new(p)?),
            Family::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return Err(ParamError::Uniform { low, high });
                }
                Sampler::Uniform { low, high }
            }
            Family::DiscreteUniform { low, high } => {
                if low > high {
                    return Err(ParamError::DiscreteUniform { low, high });
                }
                Sampler::DiscreteUniform { low, high }
            }
            Family::Constant { value } => {
                if !value.is_finite() {
                    return Err(ParamError::Constant(value));
                }
                Sampler::Constant(value)
            }
        })
    }
}

impl Sampler {
    pub fn sample(&self, rng: &mut SeededRng) -> f64 {
        match *self {
            Sampler::Gamma(g) => g.sample(rng),
            Sampler::Pareto2(p) => p.sample(rng),
            Sampler::Bernoulli(b) => f64::from(b.sample(rng)),
            Sampler::Uniform { low, high } => low + (high - low) * rng.open_unit(),
            Sampler::DiscreteUniform { low, high } => {
                let span = (high - low + 1) as f64;
                let k = (rng.open_unit() * span).floor() as i64;
                (low + k.min(high - low)) as f64
            }
            Sampler::Constant(v) => v,
        }
    }
}
