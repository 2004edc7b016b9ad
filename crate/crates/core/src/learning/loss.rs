//! Surrogates for the 0/1 ranking indicator, as functions of the score
//! difference z = f(x⁺) − f(x⁻).

use serde::{Deserialize, Serialize};

use super::LearnError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Surrogate {
    /// (1 − z)²
    Psl,
    /// max(1 − z, 0)
    Phl,
    /// ln(1 + exp(−βz))
    Pll { beta: f64 },
    /// (γ − z)^p below γ, 0 above. `printed` flips the active side to z > γ
    /// and then requires an integer p.
    R {
        gamma: f64,
        p: f64,
        #[serde(default)]
        printed: bool,
    },
    /// max(8 − (1 + z)³, 0)
    Pcl1,
    /// max((1 − z)³, 0)
    Pcl2,
}

impl Surrogate {
    pub const NAMES: [&'static str; 6] = ["psl", "phl", "pll", "r", "pcl1", "pcl2"];

    /// The six losses with the parameters used in the hotspot experiments.
    pub fn defaults() -> [Surrogate; 6] {
        [
            Surrogate::Psl,
            Surrogate::Phl,
            Surrogate::Pll { beta: 3.0 },
            Surrogate::R { gamma: 0.7, p: 2.0, printed: false },
            Surrogate::Pcl1,
            Surrogate::Pcl2,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Surrogate::Psl => "psl",
            Surrogate::Phl => "phl",
            Surrogate::Pll { .. } => "pll",
            Surrogate::R { .. } => "r",
            Surrogate::Pcl1 => "pcl1",
            Surrogate::Pcl2 => "pcl2",
        }
    }

    /// Parses a loss name into its default parameterization.
    pub fn from_name(name: &str) -> Option<Surrogate> {
        Self::defaults().into_iter().find(|s| s.name().eq_ignore_ascii_case(name))
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        match *self {
            Surrogate::Pll { beta } if !(beta > 0.0 && beta.is_finite()) => {
                Err(LearnError::Config(format!("PLL beta must be positive (got {beta})")))
            }
            Surrogate::R { gamma, p, printed } => {
                if !(gamma > 0.0 && gamma < 1.0) || !(p > 1.0 && p.is_finite()) {
                    return Err(LearnError::Config(format!("R loss needs 0 < gamma < 1 and p > 1 (got {gamma}, {p})")));
                }
                if printed && p.fract() != 0.0 {
                    return Err(LearnError::Config(format!("the z > gamma form needs an integer p (got {p})")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, z: f64) -> f64 {
        match *self {
            Surrogate::Psl => (1.0 - z).powi(2),
            Surrogate::Phl => (1.0 - z).max(0.0),
            Surrogate::Pll { beta } => softplus(-beta * z),
            Surrogate::R { gamma, p, printed: false } => {
                if z < gamma {
                    (gamma - z).powf(p)
                } else {
                    0.0
                }
            }
            Surrogate::R { gamma, p, printed: true } => {
                if z > gamma {
                    (gamma - z).powi(p as i32)
                } else {
                    0.0
                }
            }
            Surrogate::Pcl1 => (8.0 - (1.0 + z).powi(3)).max(0.0),
            Surrogate::Pcl2 => (1.0 - z).powi(3).max(0.0),
        }
    }

    /// dΦ/dz; zero exactly at a kink.
    pub fn grad(&self, z: f64) -> f64 {
        match *self {
            Surrogate::Psl => -2.0 * (1.0 - z),
            Surrogate::Phl => {
                if z < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Surrogate::Pll { beta } => -beta * sigmoid(-beta * z),
            Surrogate::R { gamma, p, printed: false } => {
                if z < gamma {
                    -p * (gamma - z).powf(p - 1.0)
                } else {
                    0.0
                }
            }
            Surrogate::R { gamma, p, printed: true } => {
                if z > gamma {
                    -p * (gamma - z).powi(p as i32 - 1)
                } else {
                    0.0
                }
            }
            Surrogate::Pcl1 => {
                if z < 1.0 {
                    -3.0 * (1.0 + z).powi(2)
                } else {
                    0.0
                }
            }
            Surrogate::Pcl2 => {
                if z < 1.0 {
                    -3.0 * (1.0 - z).powi(2)
                } else {
                    0.0
                }
            }
        }
    }

    /// Points where the derivative is discontinuous.
    pub fn kinks(&self) -> Vec<f64> {
        match *self {
            Surrogate::Phl | Surrogate::Pcl1 | Surrogate::Pcl2 => vec![1.0],
            Surrogate::R { gamma, .. } => vec![gamma],
            _ => Vec::new(),
        }
    }
}

/// ln(1 + eˣ) without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
