//! A numerical laboratory for radial Loewner evolution driven by circular
//! Brownian motion with large variance `κ`.
//!
//! * [`circle_bm`]: seeded circular Brownian paths, occupation measures, local time.
//! * [`measures`]: circle measures, driving measures, the dyadic projection lattice,
//!   circular Wasserstein distances.
//! * [`loewner`]: forward and inverse radial Loewner flows, hulls, traces and the
//!   uniform Carathéodory distance.
//! * [`rate`]: the Dirichlet rate `I`, its variational form, level rates `I_n` and
//!   the energy `E`.
//! * [`experiments`]: reproducible Monte Carlo experiments with JSON/CSV output.
//! * [`driving_spec`]: the text notation for measures used by configs and the CLI.
//! * [`cli`]: the `loewner-lab` command line.

pub mod circle_bm;
pub mod driving_spec;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod io;
pub mod loewner;
pub mod measures;
pub mod rate;
pub mod selftest;

pub use circle_bm::{
    average_occupation, local_time_field, occupation_measure, sample_circle_bm, CirclePath,
    OccupationMeasure,
};
pub use error::{Error, Result};
pub use loewner::{caratheodory_distance, DecayChain, SubordinationChain};
pub use measures::{
    coarsen, dirac_path_measure, dn_distance, embed_fn, project_pn, w1_circle, DrivingMeasure,
    LevelTuple, MeasureS1,
};
