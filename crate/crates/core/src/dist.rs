//! Integer-valued distributions used by grammar generation.

use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Constant {
        value: u32,
    },
    /// Inclusive on both ends.
    Uniform {
        min: u32,
        max: u32,
    },
    /// `1 + Poisson(lambda)`.
    PoissonShifted {
        lambda: f64,
    },
    /// Value `i` with probability proportional to `weights[i]`.
    Categorical {
        weights: Vec<f64>,
    },
}

impl DistSpec {
    pub fn validate(&self) -> Result<(), &'static str> {
        match self {
            DistSpec::Constant { .. } => Ok(()),
            DistSpec::Uniform { min, max } if min > max => Err("uniform range has min > max"),
            DistSpec::Uniform { .. } => Ok(()),
            DistSpec::PoissonShifted { lambda } if !(lambda.is_finite() && *lambda > 0.0) => {
                Err("poisson lambda must be positive and finite")
            }
            DistSpec::PoissonShifted { .. } => Ok(()),
            DistSpec::Categorical { weights } => {
                if weights.is_empty() {
                    Err("categorical needs at least one weight")
                } else if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    Err("categorical weights must be finite and non-negative")
                } else if weights.iter().all(|w| *w == 0.0) {
                    Err("categorical weights are all zero")
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Draws one value. The spec must have passed [`DistSpec::validate`].
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match self {
            DistSpec::Constant { value } => *value,
            DistSpec::Uniform { min, max } => rng.random_range(*min..=*max),
            DistSpec::PoissonShifted { lambda } => {
                let p = Poisson::new(*lambda).expect("validated lambda");
                let k: f64 = p.sample(rng);
                1 + k as u32
            }
            DistSpec::Categorical { weights } => {
                WeightedIndex::new(weights).expect("validated weights").sample(rng) as u32
            }
        }
    }

    /// Largest value the distribution can produce, if bounded.
    pub fn upper_bound(&self) -> Option<u32> {
        match self {
            DistSpec::Constant { value } => Some(*value),
            DistSpec::Uniform { max, .. } => Some(*max),
            DistSpec::PoissonShifted { .. } => None,
            DistSpec::Categorical { weights } => Some(weights.len() as u32 - 1),
        }
    }
}
