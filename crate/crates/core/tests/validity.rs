use claimpred_core::distributions::{Family, Sampler};
use claimpred_core::order_stats::{one_sided_upper_interval, two_sided_interval, Sample};
use claimpred_core::simulation::{builtin_example, run_experiment};
use claimpred_core::SeededRng;

const N: usize = 50;
const REPS: usize = 5000;

fn floor(alpha: f64, reps: usize) -> f64 {
    (1.0 - alpha) - 3.0 * (alpha * (1.0 - alpha) / reps as f64).sqrt()
}

fn coverage(sampler: Sampler, alpha: f64, seed: u64) -> (f64, f64) {
    let (mut one, mut two) = (0usize, 0usize);
    for rep in 0..REPS {
        let mut rng = SeededRng::new(seed, rep as u64);
        let mut ys: Vec<f64> = (0..=N).map(|_| sampler.sample(&mut rng)).collect();
        let y_new = ys.pop().unwrap();
        let s = Sample::new(ys).unwrap();
        one += one_sided_upper_interval(&s, alpha).unwrap().contains(y_new) as usize;
        two += two_sided_interval(&s, alpha).unwrap().contains(y_new) as usize;
    }
    (one as f64 / REPS as f64, two as f64 / REPS as f64)
}

#[test]
fn order_statistic_intervals_are_valid_for_continuous_laws() {
    let laws = [
        Family::Gamma { shape: 2.0, rate: 1.0 },
        Family::Pareto2 { beta: 3.0, theta: 5.0 },
        Family::Uniform { low: 0.0, high: 1.0 },
    ];
    for (i, law) in laws.iter().enumerate() {
        let sampler = law.build().unwrap();
        for alpha in [0.05, 0.1, 0.2] {
            let (one, two) = coverage(sampler, alpha, 900 + i as u64);
            assert!(one >= floor(alpha, REPS), "{law:?} alpha={alpha}: one-sided {one}");
            assert!(two >= floor(alpha, REPS), "{law:?} alpha={alpha}: two-sided {two}");
        }
    }
}

#[test]
fn example_one_mechanism_covers_at_nominal_level() {
    let config = builtin_example(1).unwrap();
    let report = run_experiment(&config).unwrap();
    for m in &report.methods {
        assert!(
            m.coverage >= floor(config.alpha, config.reps),
            "{} coverage {}",
            m.name,
            m.coverage
        );
    }
}
