//! Conformal plausibility of a single candidate response.
//!
//! For data `z_1..z_n`, a query `x` and a candidate `y`, put
//! `z_{n+1} = (x, y)` and score every point against the bag of all the
//! others: `mu_i = M(z^{n+1} \ {z_i}, z_i)`. The plausibility is the share
//! of scores at least as large as the candidate's own,
//!
//! ```text
//! pl(x, y) = #{i : mu_i >= mu_{n+1}} / (n + 1)
//! ```
//!
//! Under exchangeability `P{pl <= floor((n + 1) alpha)/(n + 1)} <= alpha`.
//!
//! Only pointwise evaluation is offered. Sweeping `y` over a finite grid to
//! trace out a region gives an approximation with no coverage guarantee.

use serde::Serialize;
use thiserror::Error;

use crate::order_stats::{check_alpha, floor_tol, OrderStatError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConformalError {
    #[error("need at least one data point")]
    EmptyData,
    #[error(transparent)]
    Alpha(#[from] OrderStatError),
    #[error("non-conformity measure failed: {0}")]
    Measure(String),
    #[error("non-conformity score {score} for point {index} is not a nonnegative finite number")]
    BadScore { index: usize, score: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledPoint {
    pub x: Vec<f64>,
    pub y: f64,
}

impl LabeledPoint {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Self { x, y }
    }
}

/// All points of an augmented sample except one.
#[derive(Debug, Clone, Copy)]
pub struct Bag<'a> {
    points: &'a [LabeledPoint],
    skip: usize,
}

impl<'a> Bag<'a> {
    pub fn new(points: &'a [LabeledPoint], skip: usize) -> Self {
        Self { points, skip }
    }

    pub fn len(&self) -> usize {
        self.points.len() - usize::from(self.skip < self.points.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &'a LabeledPoint> + '_ {
        self.points
            .iter()
            .enumerate()
            .filter(move |(i, _)| *i != self.skip)
            .map(|(_, p)| p)
    }
}

/// Scores how poorly `z` conforms to `bag`. Implementations must be
/// deterministic and depend on `bag` only as a multiset.
pub trait NonConformityMeasure {
    fn score(&self, bag: &Bag<'_>, z: &LabeledPoint) -> Result<f64, ConformalError>;
}

impl<F> NonConformityMeasure for F
where
    F: Fn(&Bag<'_>, &LabeledPoint) -> Result<f64, ConformalError>,
{
    fn score(&self, bag: &Bag<'_>, z: &LabeledPoint) -> Result<f64, ConformalError> {
        self(bag, z)
    }
}

/// `|y - mean of bag responses|`.
#[derive(Debug, Clone, Copy, Default)]
pub struct AbsDeviation;

impl NonConformityMeasure for AbsDeviation {
    fn score(&self, bag: &Bag<'_>, z: &LabeledPoint) -> Result<f64, ConformalError> {
        if bag.is_empty() {
            return Err(ConformalError::Measure("empty bag".into()));
        }
        // sum in sorted order so the mean does not depend on bag order
        let mut ys: Vec<f64> = bag.iter().map(|p| p.y).collect();
        ys.sort_by(f64::total_cmp);
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        Ok((z.y - mean).abs())
    }
}

pub fn builtin_measure_abs_deviation() -> AbsDeviation {
    AbsDeviation
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlausibilityResult {
    pub plausibility: f64,
    /// Number of scores `>=` the candidate's score (including its own).
    pub count: usize,
    pub threshold: f64,
    pub n: usize,
    pub alpha: f64,
    pub scores: Vec<f64>,
}

impl PlausibilityResult {
    /// True when the candidate would be excluded at level `alpha`.
    pub fn rejected(&self) -> bool {
        self.plausibility <= self.threshold
    }
}

/// `floor((n + 1) alpha) / (n + 1)`
pub fn validity_threshold(n: usize, alpha: f64) -> Result<f64, ConformalError> {
    if n == 0 {
        return Err(ConformalError::EmptyData);
    }
    check_alpha(alpha)?;
    let m = (n + 1) as f64;
    Ok(floor_tol(m * alpha) as f64 / m)
}

pub fn plausibility(
    data: &[LabeledPoint],
    x_new: &[f64],
    y_candidate: f64,
    alpha: f64,
    measure: &dyn NonConformityMeasure,
) -> Result<PlausibilityResult, ConformalError> {
    let n = data.len();
    let threshold = validity_threshold(n, alpha)?;
    let mut augmented = Vec::with_capacity(n + 1);
    augmented.extend_from_slice(data);
    augmented.push(LabeledPoint::new(x_new.to_vec(), y_candidate));

    let scores = (0..=n)
        .map(|i| {
            let s = measure.score(&Bag::new(&augmented, i), &augmented[i])?;
            if s.is_finite() && s >= 0.0 {
                Ok(s)
            } else {
                Err(ConformalError::BadScore { index: i, score: s })
            }
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let own = scores[n];
    let count = scores.iter().filter(|&&s| s >= own).count();
    Ok(PlausibilityResult {
        plausibility: count as f64 / (n + 1) as f64,
        count,
        threshold,
        n,
        alpha,
        scores,
    })
}
