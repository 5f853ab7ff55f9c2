//! JSON description of a distribution: either an explicit pmf or a named
//! generator with parameters.
//!
//! ```json
//! {"n": 4, "pmf": [0.1, 0.2, 0.3, 0.4]}
//! {"generator": "zipf", "params": {"n": 100, "s": 1.2}}
//! ```

use std::path::Path;

use mixtest_core::{seeded_rng, Distribution};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{HarnessError, Result};
use crate::generators::kflat_random;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistributionSpec {
    Explicit {
        n: usize,
        pmf: Vec<f64>,
    },
    Generated {
        generator: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        #[serde(default)]
        params: Map<String, Value>,
    },
}

fn param_f64(params: &Map<String, Value>, key: &'static str) -> Result<f64> {
    params
        .get(key)
        .and_then(Value::as_f64)
        .ok_or(HarnessError::MissingField(key))
}

fn param_u64(params: &Map<String, Value>, key: &'static str) -> Result<u64> {
    params
        .get(key)
        .and_then(Value::as_u64)
        .ok_or(HarnessError::MissingField(key))
}

impl DistributionSpec {
    pub fn explicit(d: &Distribution) -> Self {
        Self::Explicit {
            n: d.n(),
            pmf: d.pmf().to_vec(),
        }
    }

    pub fn build(&self) -> Result<Distribution> {
        match self {
            Self::Explicit { n, pmf } => {
                if *n != pmf.len() {
                    return Err(HarnessError::InvalidParameter(format!(
                        "n = {n} but pmf has {} entries",
                        pmf.len()
                    )));
                }
                Ok(Distribution::from_pmf(pmf.clone())?)
            }
            Self::Generated { generator, n, params } => {
                let n = match n {
                    Some(n) => *n,
                    None => param_u64(params, "n")? as usize,
                };
                if n == 0 {
                    return Err(mixtest_core::Error::EmptyDomain.into());
                }
                match generator.as_str() {
                    "uniform" => Ok(Distribution::uniform(n)),
                    "zipf" => {
                        let s = params.get("s").and_then(Value::as_f64).unwrap_or(1.0);
                        let w: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-s)).collect();
                        Ok(Distribution::from_weights(&w)?)
                    }
                    "two_step" => {
                        let frac = param_f64(params, "hi_fraction")?;
                        let mass = param_f64(params, "hi_mass")?;
                        two_step(n, frac, mass)
                    }
                    "kflat_random" => {
                        let k = param_u64(params, "k")? as usize;
                        let seed = param_u64(params, "seed")?;
                        kflat_random(n, k, &mut seeded_rng(seed))
                    }
                    other => Err(HarnessError::UnknownGenerator(other.to_string())),
                }
            }
        }
    }
}

/// The first `⌈hi_fraction · n⌉` elements share `hi_mass`, the rest share
/// the remainder.
pub fn two_step(n: usize, hi_fraction: f64, hi_mass: f64) -> Result<Distribution> {
    if !(0.0..=1.0).contains(&hi_fraction) || !(0.0..=1.0).contains(&hi_mass) {
        return Err(HarnessError::InvalidParameter(
            "hi_fraction and hi_mass must lie in [0, 1]".into(),
        ));
    }
    let hi = ((hi_fraction * n as f64).ceil() as usize).min(n);
    let lo = n - hi;
    let w: Vec<f64> = (0..n)
        .map(|i| {
            if i < hi {
                hi_mass / hi as f64
            } else {
                (1.0 - hi_mass) / lo as f64
            }
        })
        .collect();
    Ok(Distribution::from_weights(&w)?)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_distribution(path: &Path) -> Result<Distribution> {
    read_json::<DistributionSpec>(path)?.build()
}
