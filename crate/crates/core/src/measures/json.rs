//! Versioned JSON envelopes for measures, driving measures and level tuples.
//!
//! ```json
//! { "schema_version": 1, "kind": "density", "masses": [0.25, 0.25, 0.25, 0.25] }
//! ```
//!
//! Floats are written in shortest round-trip form, so every value survives a
//! write/read cycle exactly.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{DrivingMeasure, LevelTuple, MeasureS1};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    schema_version: u32,
    #[serde(flatten)]
    value: T,
}

/// Types with a versioned JSON form.
pub trait Versioned: Serialize + DeserializeOwned + Clone {
    fn validate(&self) -> Result<()>;
}

impl Versioned for MeasureS1 {
    fn validate(&self) -> Result<()> {
        match self {
            MeasureS1::Atoms { atoms } => MeasureS1::from_atoms(atoms.clone()).map(|_| ()),
            MeasureS1::Density { masses } => MeasureS1::from_bin_masses(masses.clone()).map(|_| ()),
        }
    }
}

impl Versioned for DrivingMeasure {
    fn validate(&self) -> Result<()> {
        match self {
            DrivingMeasure::Slabs { slabs } => DrivingMeasure::from_slabs(slabs.clone()).map(|_| ()),
            DrivingMeasure::Path { path, bins } => {
                DrivingMeasure::from_path(path.clone(), *bins).map(|_| ())
            }
        }
    }
}

impl Versioned for LevelTuple {
    fn validate(&self) -> Result<()> {
        LevelTuple::new(self.level(), self.entries().to_vec()).map(|_| ())
    }
}

pub fn to_json<T: Versioned>(value: &T) -> String {
    serde_json::to_string_pretty(&Envelope {
        schema_version: SCHEMA_VERSION,
        value: value.clone(),
    })
    .expect("measure types serialize infallibly")
}

pub fn from_json<T: Versioned>(text: &str) -> Result<T> {
    let env: Envelope<T> = serde_json::from_str(text).map_err(|e| Error::Parse {
        input: "json".into(),
        reason: e.to_string(),
    })?;
    if env.schema_version != SCHEMA_VERSION {
        return Err(Error::Parse {
            input: "json".into(),
            reason: format!("unsupported schema_version {}", env.schema_version),
        });
    }
    env.value.validate()?;
    Ok(env.value)
}
