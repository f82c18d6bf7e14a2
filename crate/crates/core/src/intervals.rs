//! Prediction intervals in the regression setting.
//!
//! Writing `Y = h(X) + W` with a user-chosen transformation `h` turns the
//! pairs `(X_i, Y_i)` into an exchangeable sample `W_i = Y_i - h(X_i)`.
//! Any interval for `W_{n+1}` built from order statistics of the `W_i`
//! shifts back by `h(x_{n+1})` to an interval for `Y_{n+1}` with the same
//! finite-sample coverage.
//!
//! For nonnegative responses the interval is one-sided, `[0, u]`:
//!
//! ```text
//! u = W_(r) + h(x)             if W_(r) + h(x) > 0
//! u = min{Y_(r), h(x)}         otherwise
//! r = min{n, floor((n + 1)(1 - alpha)) + 1}
//! ```
//!
//! The first branch must not be tightened to `min{Y_(r), W_(r) + h(x)}`;
//! that loses the coverage guarantee.
//!
//! Upper endpoints are closed. The guarantee is for the event
//! `Y_{n+1} <= u`; for continuous responses this agrees with `[0, u)`
//! almost surely, and for atoms (point masses, discrete responses) only the
//! closed form keeps coverage.

use serde::Serialize;
use thiserror::Error;

use crate::interval::PredictionInterval;
use crate::order_stats::{self, OrderStatError, Sample};
use crate::transform::{EvalError, RowEvalError, TransformExpr};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntervalError {
    #[error(transparent)]
    OrderStat(#[from] OrderStatError),
    #[error("transformation evaluation failed at {0}")]
    Eval(#[from] RowEvalError),
    #[error("transformation evaluation failed at the query point: {0}")]
    QueryEval(EvalError),
    #[error("transformation takes {h_arity} variable(s) but the data has {p} predictor(s)")]
    ArityMismatch { h_arity: usize, p: usize },
    #[error("response at row {row} is negative ({value})")]
    NegativeResponse { row: usize, value: f64 },
    #[error("transformation is negative at row {row} ({value}); h must be nonnegative on the data")]
    NegativeTransform { row: usize, value: f64 },
    #[error("transformation is negative at the query point ({0}); h must be nonnegative there")]
    NegativeTransformAtQuery(f64),
    #[error("feature row {row} has {got} value(s), expected {expected}")]
    RaggedFeatures { row: usize, expected: usize, got: usize },
    #[error("{features} feature row(s) but {responses} response(s)")]
    LengthMismatch { features: usize, responses: usize },
    #[error("non-finite value in {what} at row {row}")]
    NonFinite { what: &'static str, row: usize },
}

/// Paired features (n x p) and responses (n).
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSample {
    features: Vec<Vec<f64>>,
    responses: Vec<f64>,
    p: usize,
}

impl RegressionSample {
    pub fn new(features: Vec<Vec<f64>>, responses: Vec<f64>) -> Result<Self, IntervalError> {
        if features.len() != responses.len() {
            return Err(IntervalError::LengthMismatch {
                features: features.len(),
                responses: responses.len(),
            });
        }
        if responses.is_empty() {
            return Err(OrderStatError::Empty.into());
        }
        let p = features[0].len();
        for (row, x) in features.iter().enumerate() {
            if x.len() != p {
                return Err(IntervalError::RaggedFeatures {
                    row,
                    expected: p,
                    got: x.len(),
                });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(IntervalError::NonFinite { what: "features", row });
            }
        }
        if let Some(row) = responses.iter().position(|v| !v.is_finite()) {
            return Err(IntervalError::NonFinite { what: "responses", row });
        }
        Ok(Self { features, responses, p })
    }

    /// Responses only; every feature row is empty (p = 0).
    pub fn responses_only(responses: Vec<f64>) -> Result<Self, IntervalError> {
        let features = vec![Vec::new(); responses.len()];
        Self::new(features, responses)
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn num_predictors(&self) -> usize {
        self.p
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    fn check_nonnegative_responses(&self) -> Result<(), IntervalError> {
        match self.responses.iter().position(|&y| y < 0.0) {
            Some(row) => Err(IntervalError::NegativeResponse {
                row,
                value: self.responses[row],
            }),
            None => Ok(()),
        }
    }
}

/// `W_i = Y_i - h(X_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedResiduals {
    pub w_values: Vec<f64>,
}

impl TransformedResiduals {
    pub fn mean(&self) -> f64 {
        self.w_values.iter().sum::<f64>() / self.w_values.len() as f64
    }
}

fn check_arity(sample: &RegressionSample, h: &TransformExpr) -> Result<(), IntervalError> {
    if h.arity() != sample.p {
        Err(IntervalError::ArityMismatch {
            h_arity: h.arity(),
            p: sample.p,
        })
    } else {
        Ok(())
    }
}

fn h_values(sample: &RegressionSample, h: &TransformExpr) -> Result<Vec<f64>, IntervalError> {
    check_arity(sample, h)?;
    sample
        .features
        .iter()
        .enumerate()
        .map(|(row, x)| h.evaluate(x).map_err(|source| RowEvalError { row, source }.into()))
        .collect()
}

pub fn residualize(sample: &RegressionSample, h: &TransformExpr) -> Result<TransformedResiduals, IntervalError> {
    let hv = h_values(sample, h)?;
    let w_values = sample.responses.iter().zip(&hv).map(|(y, hx)| y - hx).collect();
    Ok(TransformedResiduals { w_values })
}

fn eval_query(h: &TransformExpr, x_new: &[f64]) -> Result<f64, IntervalError> {
    h.evaluate(x_new).map_err(IntervalError::QueryEval)
}

/// Two-sided `(W_(l) + h(x), W_(r) + h(x))` with no sign constraint on `Y`.
pub fn general_interval(
    sample: &RegressionSample,
    h: &TransformExpr,
    x_new: &[f64],
    alpha: f64,
) -> Result<PredictionInterval, IntervalError> {
    let w = residualize(sample, h)?;
    let hx = eval_query(h, x_new)?;
    let base = order_stats::two_sided_interval(&Sample::new(w.w_values)?, alpha)?;
    Ok(base.shifted(hx))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `W_(r) + h(x) > 0`
    Positive,
    /// `W_(r) + h(x) <= 0`, bound falls back to `min{Y_(r), h(x)}`
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstrainedInterval {
    pub interval: PredictionInterval,
    pub branch: Branch,
    /// Set when the upper bound is zero, i.e. the interval is `{0}`.
    pub degenerate: bool,
    pub rank: usize,
}

impl ConstrainedInterval {
    pub fn upper(&self) -> f64 {
        self.interval.upper
    }
}

/// The first-stage form `[0, b + h(x))`, falling back to `[0, h(x))` when
/// `b + h(x) <= 0`. Kept for reference; [`constrained_interval`] refines the
/// fallback by capping it at the response-only bound.
#[allow(dead_code)]
fn first_stage_upper(b: f64, hx: f64) -> (f64, Branch) {
    if b + hx > 0.0 {
        (b + hx, Branch::Positive)
    } else {
        (hx, Branch::Fallback)
    }
}

/// `[0, u]` for a nonnegative response at the query point `x_new`.
///
/// Requires `Y_i >= 0` and `h >= 0` on every training row and at `x_new`.
pub fn constrained_interval(
    sample: &RegressionSample,
    h: &TransformExpr,
    x_new: &[f64],
    alpha: f64,
) -> Result<ConstrainedInterval, IntervalError> {
    sample.check_nonnegative_responses()?;
    let hv = h_values(sample, h)?;
    if let Some(row) = hv.iter().position(|&v| v < 0.0) {
        return Err(IntervalError::NegativeTransform { row, value: hv[row] });
    }
    let hx = eval_query(h, x_new)?;
    if hx < 0.0 {
        return Err(IntervalError::NegativeTransformAtQuery(hx));
    }
    let n = sample.len();
    let r = order_stats::upper_rank(n, alpha)?;
    let w: Vec<f64> = sample.responses.iter().zip(&hv).map(|(y, h)| y - h).collect();
    let w_r = Sample::new(w)?.order_stat(r);
    let (upper, branch) = if w_r + hx > 0.0 {
        (w_r + hx, Branch::Positive)
    } else {
        let y_r = Sample::from_slice(&sample.responses)?.order_stat(r);
        (y_r.min(hx), Branch::Fallback)
    };
    Ok(ConstrainedInterval {
        interval: PredictionInterval::from_zero(upper, alpha),
        branch,
        degenerate: upper <= 0.0,
        rank: r,
    })
}

/// `[0, Y_(r)]` from the responses alone.
pub fn unsupervised_claim_interval(responses: &[f64], alpha: f64) -> Result<PredictionInterval, IntervalError> {
    if let Some(row) = responses.iter().position(|&y| y < 0.0) {
        return Err(IntervalError::NegativeResponse {
            row,
            value: responses[row],
        });
    }
    let s = Sample::from_slice(responses)?;
    let r = order_stats::upper_rank(s.len(), alpha)?;
    Ok(PredictionInterval::from_zero(s.order_stat(r), alpha))
}

/// Produces a point prediction of the next residual from the observed ones.
pub trait ResidualPredictor {
    fn predict(&self, residuals: &TransformedResiduals) -> f64;
}

/// The sample mean of the residuals.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanResidual;

impl ResidualPredictor for MeanResidual {
    fn predict(&self, residuals: &TransformedResiduals) -> f64 {
        residuals.mean()
    }
}

/// `h(x_new) + w_hat`
pub fn point_predict(h: &TransformExpr, w_hat: f64, x_new: &[f64]) -> Result<f64, IntervalError> {
    Ok(eval_query(h, x_new)? + w_hat)
}

/// Residualizes `sample`, asks `predictor` for `w_hat`, and returns
/// `h(x_new) + w_hat`.
pub fn point_predict_with(
    sample: &RegressionSample,
    h: &TransformExpr,
    predictor: &dyn ResidualPredictor,
    x_new: &[f64],
) -> Result<f64, IntervalError> {
    let w = residualize(sample, h)?;
    point_predict(h, predictor.predict(&w), x_new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy() -> RegressionSample {
        RegressionSample::new(
            vec![vec![0.5], vec![1.0], vec![2.0], vec![5.0]],
            vec![1.0, 2.0, 3.0, 10.0],
        )
        .unwrap()
    }

    fn h(src: &str, p: usize) -> TransformExpr {
        TransformExpr::parse(src, p).unwrap()
    }

    #[test]
    fn residualize_examples() {
        let s = toy();
        assert_eq!(residualize(&s, &h("t1", 1)).unwrap().w_values, vec![0.5, 1.0, 1.0, 5.0]);
        assert_eq!(
            residualize(&s, &TransformExpr::zero(1)).unwrap().w_values,
            s.responses()
        );
        let exact = RegressionSample::new(vec![vec![1.5], vec![3.0]], vec![1.5, 3.0]).unwrap();
        assert_eq!(residualize(&exact, &h("t1", 1)).unwrap().w_values, vec![0.0, 0.0]);
    }

    #[test]
    fn residualize_reports_row() {
        let s = RegressionSample::new(vec![vec![1.0], vec![-1.0]], vec![1.0, 1.0]).unwrap();
        let err = residualize(&s, &h("log(1+t1)", 1)).unwrap_err();
        assert!(matches!(err, IntervalError::Eval(RowEvalError { row: 1, .. })));
        let err = residualize(&s, &h("t1+t2", 2)).unwrap_err();
        assert_eq!(err, IntervalError::ArityMismatch { h_arity: 2, p: 1 });
    }

    #[test]
    fn constrained_positive_branch() {
        let ci = constrained_interval(&toy(), &h("t1", 1), &[3.0], 0.2).unwrap();
        assert_eq!(ci.rank, 4);
        assert_eq!(ci.branch, Branch::Positive);
        assert_eq!(ci.upper(), 8.0);
        assert_eq!(ci.interval.lower, 0.0);
        assert!(!ci.degenerate);
    }

    #[test]
    fn constrained_fallback_branch() {
        let s = RegressionSample::new(vec![vec![5.0], vec![6.0]], vec![0.1, 0.2]).unwrap();
        let ci = constrained_interval(&s, &h("t1", 1), &[2.0], 0.2).unwrap();
        assert_eq!(ci.rank, 2);
        assert_eq!(ci.branch, Branch::Fallback);
        assert_eq!(ci.upper(), 0.2);
    }

    #[test]
    fn constrained_fallback_can_degenerate() {
        let s = RegressionSample::new(vec![vec![5.0], vec![6.0]], vec![0.1, 0.2]).unwrap();
        let ci = constrained_interval(&s, &h("t1", 1), &[0.0], 0.2).unwrap();
        assert_eq!(ci.branch, Branch::Fallback);
        assert_eq!(ci.upper(), 0.0);
        assert!(ci.degenerate);
        assert!(ci.interval.contains(0.0));
    }

    #[test]
    fn first_stage_fallback_uses_h_only() {
        assert_eq!(first_stage_upper(-4.9, 2.0), (2.0, Branch::Fallback));
        assert_eq!(first_stage_upper(5.0, 3.0), (8.0, Branch::Positive));
    }

    #[test]
    fn constrained_zero_h_is_baseline() {
        let s = toy();
        let ci = constrained_interval(&s, &TransformExpr::zero(1), &[3.0], 0.2).unwrap();
        assert_eq!(ci.interval, unsupervised_claim_interval(s.responses(), 0.2).unwrap());
        assert_eq!(ci.upper(), 10.0);
    }

    #[test]
    fn constrained_rejects_negative_inputs() {
        let s = RegressionSample::new(vec![vec![1.0], vec![2.0]], vec![1.0, -0.5]).unwrap();
        assert_eq!(
            constrained_interval(&s, &h("t1", 1), &[1.0], 0.2).unwrap_err(),
            IntervalError::NegativeResponse { row: 1, value: -0.5 }
        );
        let s = toy();
        assert_eq!(
            constrained_interval(&s, &h("t1-1", 1), &[3.0], 0.2).unwrap_err(),
            IntervalError::NegativeTransform { row: 0, value: -0.5 }
        );
        assert_eq!(
            constrained_interval(&s, &h("t1", 1), &[-3.0], 0.2).unwrap_err(),
            IntervalError::NegativeTransformAtQuery(-3.0)
        );
        assert!(matches!(
            constrained_interval(&s, &h("log(t1-1)", 1), &[3.0], 0.2).unwrap_err(),
            IntervalError::Eval(RowEvalError { row: 0, .. })
        ));
    }

    #[test]
    fn unsupervised_examples() {
        let y: Vec<f64> = (1..=50).map(f64::from).collect();
        assert_eq!(unsupervised_claim_interval(&y, 0.1).unwrap().upper, 46.0);
        let y: Vec<f64> = (1..=1340).rev().map(|k| k as f64 * 0.5).collect();
        assert_eq!(unsupervised_claim_interval(&y, 0.1).unwrap().upper, 1207.0 * 0.5);
        assert_eq!(unsupervised_claim_interval(&[3.25], 0.5).unwrap().upper, 3.25);
    }

    #[test]
    fn general_interval_reduces_to_unsupervised() {
        let y: Vec<f64> = vec![
            7., 3., 12., 1., 19., 5., 14., 9., 2., 17., 20., 4., 8., 11., 16., 6., 13., 18., 10., 15.,
        ];
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![(i * 37 % 11) as f64]).collect();
        let s = RegressionSample::new(x, y.clone()).unwrap();
        let gi = general_interval(&s, &TransformExpr::zero(1), &[4.0], 0.2).unwrap();
        let rp = order_stats::two_sided_ranks(20, 0.2).unwrap();
        assert_eq!((rp.l, rp.r), (2, 19));
        assert_eq!((gi.lower, gi.upper), (2.0, 19.0));
        let direct = order_stats::two_sided_interval(&Sample::new(y).unwrap(), 0.2).unwrap();
        assert_eq!(gi, direct);
    }

    #[test]
    fn point_prediction_examples() {
        let s = toy();
        let t = h("t1", 1);
        assert_eq!(point_predict(&t, 0.0, &[3.0]).unwrap(), 3.0);
        let w = residualize(&s, &t).unwrap();
        assert_eq!(w.mean(), 1.875);
        assert_eq!(point_predict_with(&s, &t, &MeanResidual, &[3.0]).unwrap(), 4.875);
        let mean_y = s.responses().iter().sum::<f64>() / 4.0;
        assert_eq!(
            point_predict_with(&s, &TransformExpr::zero(1), &MeanResidual, &[3.0]).unwrap(),
            mean_y
        );
    }

    #[test]
    fn sample_validation() {
        assert!(matches!(
            RegressionSample::new(vec![vec![1.0]], vec![1.0, 2.0]),
            Err(IntervalError::LengthMismatch { .. })
        ));
        assert!(matches!(
            RegressionSample::new(vec![vec![1.0], vec![1.0, 2.0]], vec![1.0, 2.0]),
            Err(IntervalError::RaggedFeatures { row: 1, .. })
        ));
        assert!(matches!(
            RegressionSample::new(vec![vec![f64::NAN]], vec![1.0]),
            Err(IntervalError::NonFinite {
                what: "features",
                row: 0
            })
        ));
    }

    fn arb_data() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
        (1usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(prop::collection::vec(0.0f64..20.0, 2), n),
                prop::collection::vec(0.0f64..50.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn membership_equivalence(
            (x, y) in arb_data(),
            x_new in prop::collection::vec(0.0f64..20.0, 2),
            y_new in 0.0f64..60.0,
        ) {
            // L < W < U  <=>  L + h(x) < Y < U + h(x), evaluated directly
            let s = RegressionSample::new(x, y).unwrap();
            let t = h("t1 + 0.5*t2", 2);
            let w = residualize(&s, &t).unwrap();
            let ws = Sample::new(w.w_values).unwrap();
            let lo = ws.min();
            let hi = ws.max();
            let hx = t.evaluate(&x_new).unwrap();
            let w_new = y_new - hx;
            let left = lo < w_new && w_new < hi;
            let right = lo + hx < y_new && y_new < hi + hx;
            // float rounding can only matter within an ulp of the boundary
            let near = [lo + hx, hi + hx].iter().any(|b| (b - y_new).abs() < 1e-9);
            prop_assert!(left == right || near);
        }

        #[test]
        fn general_interval_shift_invariant(
            (x, y) in arb_data().prop_filter("n >= 19", |(x, _)| x.len() >= 19),
            x_new in prop::collection::vec(0.0f64..20.0, 2),
            c in -100.0f64..100.0,
        ) {
            let s = RegressionSample::new(x, y).unwrap();
            let base = h("t1 + t2^2", 2);
            let shifted = h(&format!("t1 + t2^2 + {}", c.abs()), 2);
            let shifted = if c < 0.0 { h(&format!("t1 + t2^2 - {}", c.abs()), 2) } else { shifted };
            let a = general_interval(&s, &base, &x_new, 0.1).unwrap();
            let b = general_interval(&s, &shifted, &x_new, 0.1).unwrap();
            prop_assert!((a.lower - b.lower).abs() <= 1e-10 * a.lower.abs().max(1.0));
            prop_assert!((a.upper - b.upper).abs() <= 1e-10 * a.upper.abs().max(1.0));
        }

        #[test]
        fn zero_h_matches_baseline((x, y) in arb_data(), alpha in 0.01f64..0.99) {
            let s = RegressionSample::new(x, y).unwrap();
            let ci = constrained_interval(&s, &TransformExpr::zero(2), &[1.0, 1.0], alpha).unwrap();
            prop_assert_eq!(ci.interval, unsupervised_claim_interval(s.responses(), alpha).unwrap());
        }

        #[test]
        fn upper_positive_unless_fallback_hits_zero((x, y) in arb_data(), x_new in prop::collection::vec(0.0f64..20.0, 2)) {
            let s = RegressionSample::new(x, y).unwrap();
            let t = h("t1", 2);
            let ci = constrained_interval(&s, &t, &x_new, 0.1).unwrap();
            if ci.upper() <= 0.0 {
                prop_assert_eq!(ci.branch, Branch::Fallback);
                let y_r = Sample::from_slice(s.responses()).unwrap().order_stat(ci.rank);
                prop_assert!(y_r == 0.0 || t.evaluate(&x_new).unwrap() == 0.0);
            }
        }
    }
}
