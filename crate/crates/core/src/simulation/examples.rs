use super::{ExperimentConfig, SimError};

pub const EXAMPLE_IDS: [u8; 3] = [1, 2, 3];

const EXAMPLE1: &str = include_str!("../../configs/example1.json");
const EXAMPLE2: &str = include_str!("../../configs/example2.json");
const EXAMPLE3: &str = include_str!("../../configs/example3.json");

/// The shipped experiment configs:
///
/// 1. `Y = X + eps`, `X ~ Gamma(5, 4)`, `eps ~ Gamma(0.5, 4)`; the response is
///    Gamma(5.5, 4), so the oracle is exact.
/// 2. `Y = X1 + X2 + eps`, `X1 ~ Gamma(5, 2)`, `X2 ~ Pareto II(3, 5)`,
///    `eps ~ Gamma(0.5, 3)`; empirical oracle from 5000 draws.
/// 3. `Y = 1 + X1 + X2 + X3 + eps`, `X1 ~ Gamma(5, 4)`, `X2 ~ Pareto II(3, 5)`,
///    `-X3 ~ Bern(1/3)`, `eps ~ Gamma(0.5, 4)`; empirical oracle.
pub fn builtin_example(id: u8) -> Result<ExperimentConfig, SimError> {
    let text = match id {
        1 => EXAMPLE1,
        2 => EXAMPLE2,
        3 => EXAMPLE3,
        _ => return Err(SimError::Config(format!("no built-in example {id}; choose 1, 2 or 3"))),
    };
    ExperimentConfig::from_json(text)
}
