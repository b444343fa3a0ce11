//! Text notation for circle measures and driving measures.
//!
//! ```text
//! uniform              normalized arc length
//! dirac:<angle>        unit point mass at the angle (radians)
//! cosine:<a>           density (1 + a cos θ)/2π, |a| ≤ 1
//! slabs:[s1,s2,...]    equal time slabs, each one of the forms above
//! bm:<kappa>           circular Brownian motion with variance κ on [0, 1]
//! ```
//!
//! As a circle measure, `bm:<kappa>` is the average occupation measure of the
//! sampled path at `t = 1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circle_bm::{average_occupation, min_steps, occupation_measure, sample_circle_bm};
use crate::error::{Error, Result};
use crate::measures::{DrivingMeasure, MeasureS1};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DrivingSpec {
    Uniform,
    Dirac(f64),
    Cosine(f64),
    Slabs(Vec<DrivingSpec>),
    Bm(f64),
}

fn parse_err(input: &str, reason: impl Into<String>) -> Error {
    Error::Parse {
        input: input.to_string(),
        reason: reason.into(),
    }
}

fn number(input: &str, text: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| parse_err(input, format!("`{text}` is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(parse_err(input, "value must be finite"))
    }
}

impl FromStr for DrivingSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s, None),
        };
        match (head, arg) {
            ("uniform", None) => Ok(DrivingSpec::Uniform),
            ("dirac", Some(a)) => Ok(DrivingSpec::Dirac(number(s, a)?)),
            ("cosine", Some(a)) => {
                let a = number(s, a)?;
                if a.abs() > 1.0 {
                    return Err(parse_err(s, "cosine amplitude must lie in [-1, 1]"));
                }
                Ok(DrivingSpec::Cosine(a))
            }
            ("bm", Some(k)) => {
                let k = number(s, k)?;
                if k < 0.0 {
                    return Err(parse_err(s, "kappa must be >= 0"));
                }
                Ok(DrivingSpec::Bm(k))
            }
            ("slabs", Some(list)) => {
                let inner = list
                    .strip_prefix('[')
                    .and_then(|l| l.strip_suffix(']'))
                    .ok_or_else(|| parse_err(s, "expected slabs:[spec,spec,...]"))?;
                let slabs = inner
                    .split(',')
                    .map(|part| match part.parse::<DrivingSpec>()? {
                        DrivingSpec::Slabs(_) | DrivingSpec::Bm(_) => {
                            Err(parse_err(s, "slabs must be uniform, dirac:<angle> or cosine:<a>"))
                        }
                        other => Ok(other),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(DrivingSpec::Slabs(slabs))
            }
            _ => Err(parse_err(
                s,
                "expected uniform, dirac:<angle>, cosine:<a>, slabs:[...] or bm:<kappa>",
            )),
        }
    }
}

impl TryFrom<String> for DrivingSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DrivingSpec> for String {
    fn from(d: DrivingSpec) -> String {
        d.to_string()
    }
}

impl fmt::Display for DrivingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DrivingSpec::Uniform => f.write_str("uniform"),
            DrivingSpec::Dirac(a) => write!(f, "dirac:{a}"),
            DrivingSpec::Cosine(a) => write!(f, "cosine:{a}"),
            DrivingSpec::Bm(k) => write!(f, "bm:{k}"),
            DrivingSpec::Slabs(slabs) => {
                f.write_str("slabs:[")?;
                for (i, s) in slabs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{s}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl DrivingSpec {
    fn bm_path(kappa: f64, seed: u64) -> Result<crate::circle_bm::CirclePath> {
        sample_circle_bm(kappa, min_steps(kappa, 1.0), 1.0, seed)
    }

    /// The circle measure this names. Densities use `bins` cells.
    pub fn measure(&self, bins: usize, seed: u64) -> Result<MeasureS1> {
        match self {
            DrivingSpec::Uniform => Ok(MeasureS1::uniform(bins)),
            DrivingSpec::Dirac(a) => Ok(MeasureS1::dirac(*a)),
            DrivingSpec::Cosine(a) => MeasureS1::cosine(*a, bins),
            DrivingSpec::Bm(k) => {
                average_occupation(&occupation_measure(&Self::bm_path(*k, seed)?, 1.0, bins)?)
            }
            DrivingSpec::Slabs(_) => Err(parse_err(&self.to_string(), "slabs describe a driving measure, not a circle measure")),
        }
    }

    /// The driving measure this names; `bm` paths are seeded by `seed`.
    pub fn driving(&self, bins: usize, seed: u64) -> Result<DrivingMeasure> {
        match self {
            DrivingSpec::Slabs(slabs) => {
                DrivingMeasure::from_slabs(slabs.iter().map(|s| s.measure(bins, seed)).collect::<Result<_>>()?)
            }
            DrivingSpec::Bm(k) => DrivingMeasure::from_path(Self::bm_path(*k, seed)?, bins),
            other => DrivingMeasure::homogeneous(other.measure(bins, seed)?),
        }
    }
}
