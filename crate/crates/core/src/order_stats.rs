//! Order statistics and the rank formulas behind distribution-free
//! prediction intervals for an iid (exchangeable) sample.

use thiserror::Error;

use crate::interval::PredictionInterval;

/// Products such as `(n + 1) * (1 - alpha)` that land within this distance
/// of an integer are treated as that integer before flooring.
const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrderStatError {
    #[error("sample is empty")]
    Empty,
    #[error("sample value at index {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("miscoverage level must lie strictly inside (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("probability must lie strictly inside (0, 1), got {0}")]
    InvalidProbability(f64),
    #[error("no rank pair 1 <= l < r <= {n} gives (r - l)/(n + 1) >= 1 - {alpha}; sample too small")]
    Infeasible { n: usize, alpha: f64 },
}

pub(crate) fn check_alpha(alpha: f64) -> Result<(), OrderStatError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(OrderStatError::InvalidAlpha(alpha))
    }
}

pub(crate) fn floor_tol(x: f64) -> usize {
    (x + RANK_TOL).floor().max(0.0) as usize
}

fn ceil_tol(x: f64) -> usize {
    (x - RANK_TOL).ceil().max(0.0) as usize
}

/// A nonempty sample of finite reals, stored sorted (stable, so ties keep
/// their input order).
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    sorted: Vec<f64>,
}

impl Sample {
    pub fn new(mut values: Vec<f64>) -> Result<Self, OrderStatError> {
        if values.is_empty() {
            return Err(OrderStatError::Empty);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(OrderStatError::NonFinite { index, value });
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { sorted: values })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self, OrderStatError> {
        Self::new(values.to_vec())
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// The `k`-th smallest value, 1-based. Panics if `k` is outside `1..=n`.
    pub fn order_stat(&self, k: usize) -> f64 {
        assert!(
            k >= 1 && k <= self.sorted.len(),
            "rank {k} out of 1..={}",
            self.sorted.len()
        );
        self.sorted[k - 1]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }
}

/// A two-sided rank pair satisfying `1 <= l < r <= n` and
/// `(r - l)/(n + 1) >= 1 - alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankPair {
    pub l: usize,
    pub r: usize,
    pub n: usize,
}

impl RankPair {
    pub fn guaranteed_coverage(&self) -> f64 {
        (self.r - self.l) as f64 / (self.n + 1) as f64
    }
}

/// `min{n, floor((n + 1)(1 - alpha)) + 1}`
pub fn upper_rank(n: usize, alpha: f64) -> Result<usize, OrderStatError> {
    if n == 0 {
        return Err(OrderStatError::Empty);
    }
    check_alpha(alpha)?;
    Ok(n.min(floor_tol((n + 1) as f64 * (1.0 - alpha)) + 1))
}

/// `(-inf, W_(r)]` with `r = upper_rank(n, alpha)`.
pub fn one_sided_upper_interval(sample: &Sample, alpha: f64) -> Result<PredictionInterval, OrderStatError> {
    let r = upper_rank(sample.len(), alpha)?;
    Ok(PredictionInterval::upper_ray(sample.order_stat(r), alpha))
}

/// Symmetric ranks `l = max{1, floor((n + 1) alpha / 2)}`, `r = n + 1 - l`.
///
/// Whenever any admissible pair exists this one is admissible too, so an
/// error here means the sample is too small for the requested level.
pub fn two_sided_ranks(n: usize, alpha: f64) -> Result<RankPair, OrderStatError> {
    if n == 0 {
        return Err(OrderStatError::Empty);
    }
    check_alpha(alpha)?;
    let l = floor_tol((n + 1) as f64 * alpha / 2.0).max(1);
    let infeasible = OrderStatError::Infeasible { n, alpha };
    if l > n {
        return Err(infeasible);
    }
    let r = n + 1 - l;
    if !(1 <= l && l < r && r <= n) {
        return Err(infeasible);
    }
    if ((r - l) as f64) < (1.0 - alpha) * (n + 1) as f64 - RANK_TOL {
        return Err(infeasible);
    }
    Ok(RankPair { l, r, n })
}

/// `(W_(l), W_(r))`, open at both ends.
pub fn two_sided_interval(sample: &Sample, alpha: f64) -> Result<PredictionInterval, OrderStatError> {
    let ranks = two_sided_ranks(sample.len(), alpha)?;
    Ok(PredictionInterval::open(
        sample.order_stat(ranks.l),
        sample.order_stat(ranks.r),
        alpha,
    ))
}

/// Inverse-CDF (type 1) empirical quantile: the order statistic at rank
/// `ceil(p n)`, clamped to `1..=n`.
pub fn empirical_quantile(sample: &Sample, p: f64) -> Result<f64, OrderStatError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(OrderStatError::InvalidProbability(p));
    }
    let n = sample.len();
    let k = ceil_tol(p * n as f64).clamp(1, n);
    Ok(sample.order_stat(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive search for any admissible pair.
    fn brute_force_feasible(n: usize, alpha: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for l in 1..=n {
            for r in (l + 1)..=n {
                if (r - l) as f64 / (n + 1) as f64 >= 1.0 - alpha - 1e-12 {
                    out.push((l, r));
                }
            }
        }
        out
    }

    #[test]
    fn upper_rank_examples() {
        assert_eq!(upper_rank(50, 0.1).unwrap(), 46);
        assert_eq!(upper_rank(1340, 0.1).unwrap(), 1207);
        assert_eq!(upper_rank(4, 0.2).unwrap(), 4);
        assert_eq!(upper_rank(1, 0.5).unwrap(), 1);
    }

    #[test]
    fn upper_rank_rejects_bad_input() {
        assert_eq!(upper_rank(0, 0.1), Err(OrderStatError::Empty));
        assert!(matches!(upper_rank(10, 0.0), Err(OrderStatError::InvalidAlpha(_))));
        assert!(matches!(upper_rank(10, 1.0), Err(OrderStatError::InvalidAlpha(_))));
    }

    #[test]
    fn one_sided_examples() {
        let s = Sample::new(vec![0.5, 1.0, 1.0, 5.0]).unwrap();
        assert_eq!(one_sided_upper_interval(&s, 0.2).unwrap().upper, 5.0);
        let s = Sample::new(vec![7.0]).unwrap();
        assert_eq!(one_sided_upper_interval(&s, 0.5).unwrap().upper, 7.0);
        let s = Sample::new(vec![3.0, -2.0, 11.0, 4.0, 0.0]).unwrap();
        assert_eq!(one_sided_upper_interval(&s, 1e-6).unwrap().upper, 11.0);
    }

    #[test]
    fn two_sided_rank_examples() {
        let rp = two_sided_ranks(50, 0.1).unwrap();
        assert_eq!((rp.l, rp.r), (2, 49));
        assert!(brute_force_feasible(50, 0.1).contains(&(2, 49)));
        assert!(rp.guaranteed_coverage() >= 0.9);

        assert!(matches!(
            two_sided_ranks(5, 0.1),
            Err(OrderStatError::Infeasible { .. })
        ));
        assert!(brute_force_feasible(5, 0.1).is_empty());

        let rp = two_sided_ranks(19, 0.1).unwrap();
        assert_eq!((rp.l, rp.r), (1, 19));
        // the smallest n for which alpha = 0.1 is attainable
        assert!(brute_force_feasible(18, 0.1).is_empty());
        assert_eq!(brute_force_feasible(19, 0.1), vec![(1, 19)]);
    }

    #[test]
    fn two_sided_interval_example() {
        let s = Sample::new(vec![
            3., 1., 4., 1., 5., 9., 2., 6., 8., 7., 10., 12., 11., 13., 14., 15., 16., 17., 18., 19.,
        ])
        .unwrap();
        let i = two_sided_interval(&s, 0.2).unwrap();
        assert_eq!((i.lower, i.upper), (1.0, 18.0));
        assert!(i.lower_open && i.upper_open);
    }

    #[test]
    fn two_sided_constant_sample_degenerates() {
        let s = Sample::new(vec![2.5; 30]).unwrap();
        let i = two_sided_interval(&s, 0.1).unwrap();
        assert_eq!((i.lower, i.upper), (2.5, 2.5));
        assert!(i.is_degenerate());
        assert!(!i.contains(2.5));
    }

    #[test]
    fn two_sided_infeasible_propagates() {
        let s = Sample::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            two_sided_interval(&s, 0.3),
            Err(OrderStatError::Infeasible { .. })
        ));
    }

    #[test]
    fn empirical_quantile_examples() {
        let s = Sample::new((1..=10).map(f64::from).collect()).unwrap();
        assert_eq!(empirical_quantile(&s, 0.9).unwrap(), 9.0);
        let s = Sample::new(vec![42.0]).unwrap();
        assert_eq!(empirical_quantile(&s, 0.01).unwrap(), 42.0);
        assert_eq!(empirical_quantile(&s, 0.99).unwrap(), 42.0);
        assert!(empirical_quantile(&s, 1.0).is_err());
    }

    #[test]
    fn empirical_quantile_gamma_consistency() {
        use crate::distributions::GammaParams;
        use crate::rng::SeededRng;
        let g = GammaParams::new(5.5, 4.0).unwrap();
        let mut rng = SeededRng::new(2024, 0);
        let s = Sample::new((0..5000).map(|_| g.sample(&mut rng)).collect()).unwrap();
        let q = empirical_quantile(&s, 0.9).unwrap();
        assert!((q - g.quantile(0.9).unwrap()).abs() < 0.05, "q = {q}");
    }

    #[test]
    fn sample_rejects_bad_values() {
        assert_eq!(Sample::new(vec![]), Err(OrderStatError::Empty));
        assert!(matches!(
            Sample::new(vec![1.0, f64::NAN]),
            Err(OrderStatError::NonFinite { index: 1, .. })
        ));
    }

    proptest! {
        #[test]
        fn upper_rank_monotone(n in 1usize..3000, a in 0.001f64..0.999, b in 0.001f64..0.999) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(upper_rank(n, lo).unwrap() >= upper_rank(n, hi).unwrap());
            prop_assert!(upper_rank(n + 1, lo).unwrap() >= upper_rank(n, lo).unwrap());
        }

        #[test]
        fn two_sided_ranks_agree_with_brute_force(n in 1usize..120, alpha in 0.01f64..0.99) {
            let feasible = brute_force_feasible(n, alpha);
            match two_sided_ranks(n, alpha) {
                Ok(rp) => {
                    prop_assert!(1 <= rp.l && rp.l < rp.r && rp.r <= n);
                    prop_assert!(rp.guaranteed_coverage() >= 1.0 - alpha - 1e-12);
                    prop_assert!(feasible.contains(&(rp.l, rp.r)));
                }
                Err(OrderStatError::Infeasible { .. }) => prop_assert!(feasible.is_empty()),
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
        }

        #[test]
        fn one_sided_shift_equivariant(
            values in prop::collection::vec(-1e3f64..1e3, 1..60),
            c in -1e3f64..1e3,
            alpha in 0.01f64..0.99,
        ) {
            let base = one_sided_upper_interval(&Sample::from_slice(&values).unwrap(), alpha).unwrap();
            let shifted: Vec<f64> = values.iter().map(|v| v + c).collect();
            let moved = one_sided_upper_interval(&Sample::new(shifted).unwrap(), alpha).unwrap();
            prop_assert_eq!(moved.upper, base.upper + c);
        }
    }
}
