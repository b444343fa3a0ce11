//! Rate functions for the occupation measures of circular Brownian motion.
//!
//! * [`dirichlet_rate`]: `I(μ) = ½∫|φ′|²` for `μ = φ² dθ`, with `φ′` obtained by
//!   spectral differentiation of the cell-center samples of `√density`.
//! * [`variational_rate`]: the supremum form `sup_u −∫ u″/(2u) dμ` over
//!   `u = e^h`, `h` a trigonometric polynomial.
//! * [`tuple_rate`] and [`energy`]: the level rates `I_n` and the chain energy
//!   `E(ρ) = ∫₀¹ I(ρ_t) dt`.
//!
//! Infinite rates are an explicit [`RateValue::Infinite`] marker.

mod variational;

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::measures::{DrivingMeasure, LevelTuple, MeasureS1};

pub use variational::{
    objective, objective_gradient, variational_rate, OptimizerSettings, VariationalWitness,
    DEFAULT_DEGREE, MAX_DEGREE,
};

/// Default positivity floor on cell density values.
pub const EPS_POS: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateValue {
    Finite { value: f64 },
    Infinite,
}

impl RateValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            RateValue::Finite { value } => Some(*value),
            RateValue::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, RateValue::Infinite)
    }

    /// The value as an `f64`, mapping the marker to `+∞` for arithmetic.
    pub fn as_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for RateValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateValue::Finite { value } => write!(f, "{value}"),
            RateValue::Infinite => f.write_str("+inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMethod {
    Dirichlet,
    Variational,
    LevelN,
    Energy,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Quadrature grid (number of cells).
    pub grid: Option<usize>,
    /// `|I_m − I_{m/2}|`, the coarse value from every other node.
    pub error_estimate: Option<f64>,
    pub iterations: Option<usize>,
    /// Sup-norm of the objective gradient at the returned witness.
    pub gradient_norm: Option<f64>,
    pub converged: bool,
    /// False for regularized evaluations.
    pub certified: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub value: RateValue,
    pub method: RateMethod,
    pub diagnostics: Diagnostics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<VariationalWitness>,
}

impl RateReport {
    fn infinite(method: RateMethod, note: impl Into<String>) -> Self {
        Self {
            value: RateValue::Infinite,
            method,
            diagnostics: Diagnostics {
                converged: true,
                certified: true,
                note: Some(note.into()),
                ..Diagnostics::default()
            },
            witness: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rate reports serialize infallibly")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletOptions {
    /// Cells with density below this value make the rate `+∞`.
    pub floor: f64,
    /// Evaluate `(density + ε)` renormalized instead of refusing; the
    /// result is marked as not certified.
    pub regularize: Option<f64>,
}

impl Default for DirichletOptions {
    fn default() -> Self {
        Self {
            floor: EPS_POS,
            regularize: None,
        }
    }
}

/// `½ Σ |φ′_j|² Δ` for the density values on an equispaced grid.
///
/// Through Parseval this is `(π/m²) Σ_k k² |Φ_k|²` with `Φ = FFT(√ρ)`; the
/// Nyquist mode of an even grid has no real derivative and is dropped.
pub fn spectral_dirichlet(density: &[f64]) -> f64 {
    let m = density.len();
    let mut buf: Vec<Complex64> = density.iter().map(|&v| Complex64::new(v.sqrt(), 0.0)).collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let mut acc = 0.0;
    for (k, c) in buf.iter().enumerate() {
        if 2 * k == m {
            continue;
        }
        let freq = if 2 * k < m { k as f64 } else { k as f64 - m as f64 };
        acc += freq * freq * c.norm_sqr();
    }
    PI * acc / (m * m) as f64
}

/// Every other node: the same density sampled on a grid of half the size.
fn halve(density: &[f64]) -> Vec<f64> {
    density.iter().step_by(2).copied().collect()
}

/// The Dirichlet rate with default options.
pub fn dirichlet_rate(mu: &MeasureS1) -> Result<RateReport> {
    dirichlet_rate_with(mu, &DirichletOptions::default())
}

pub fn dirichlet_rate_with(mu: &MeasureS1, opts: &DirichletOptions) -> Result<RateReport> {
    mu.require_probability()?;
    let Some(mut density) = mu.density_values() else {
        return Ok(RateReport::infinite(RateMethod::Dirichlet, "atomic measure has no density"));
    };
    let mut certified = true;
    if let Some(eps) = opts.regularize {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(invalid("regularize", format!("must be finite and > 0, got {eps}")));
        }
        let scale = 1.0 / (1.0 + eps * 2.0 * PI);
        density.iter_mut().for_each(|v| *v = (*v + eps) * scale);
        certified = false;
    } else if let Some(j) = density.iter().position(|&v| v < opts.floor) {
        return Ok(RateReport::infinite(
            RateMethod::Dirichlet,
            format!("density {:e} in cell {j} is below the positivity floor {:e}", density[j], opts.floor),
        ));
    }
    let m = density.len();
    let value = spectral_dirichlet(&density);
    let error_estimate = (m % 2 == 0 && m >= 4).then(|| (value - spectral_dirichlet(&halve(&density))).abs());
    Ok(RateReport {
        value: RateValue::Finite { value },
        method: RateMethod::Dirichlet,
        diagnostics: Diagnostics {
            grid: Some(m),
            error_estimate,
            converged: true,
            certified,
            note: (!certified).then(|| "regularized evaluation, not certified".to_string()),
            ..Diagnostics::default()
        },
        witness: None,
    })
}

/// Pairwise summation with a fixed tree: split at the largest power of two
/// below the length.
pub(crate) fn tree_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => {
            let half = n.next_power_of_two() / 2;
            tree_sum(&xs[..half]) + tree_sum(&xs[half..])
        }
    }
}

fn averaged_rate(measures: &[MeasureS1], method: RateMethod) -> Result<RateReport> {
    let reports: Vec<RateReport> = measures.par_iter().map(dirichlet_rate).collect::<Result<_>>()?;
    if let Some(i) = reports.iter().position(|r| r.value.is_infinite()) {
        let why = reports[i].diagnostics.note.clone().unwrap_or_default();
        return Ok(RateReport::infinite(method, format!("entry {i}: {why}")));
    }
    let values: Vec<f64> = reports.iter().map(|r| r.value.as_f64()).collect();
    let value = tree_sum(&values) * (1.0 / measures.len() as f64);
    let errors: Vec<f64> = reports.iter().map(|r| r.diagnostics.error_estimate.unwrap_or(0.0)).collect();
    Ok(RateReport {
        value: RateValue::Finite { value },
        method,
        diagnostics: Diagnostics {
            grid: reports.iter().filter_map(|r| r.diagnostics.grid).max(),
            error_estimate: Some(tree_sum(&errors) * (1.0 / measures.len() as f64)),
            converged: true,
            certified: true,
            ..Diagnostics::default()
        },
        witness: None,
    })
}

/// `I_n = 2^{−n} Σ_i I(entry_i)`.
pub fn tuple_rate(tuple: &LevelTuple) -> Result<RateReport> {
    averaged_rate(tuple.entries(), RateMethod::LevelN)
}

/// `E(ρ) = Σ_slabs (slab width)·I(slab)`; `+∞` for path-backed driving.
pub fn energy(rho: &DrivingMeasure) -> Result<RateReport> {
    match rho.slabs() {
        Some(slabs) => averaged_rate(slabs, RateMethod::Energy),
        None => Ok(RateReport::infinite(RateMethod::Energy, "point-driven measure")),
    }
}

#[cfg(test)]
mod tests;
