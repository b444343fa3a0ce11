//! Covariance oracles for the local-time fluctuation field.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentResult, ExperimentSpec};
use crate::circle_bm::rng_for;
use crate::error::{invalid, Error, Result};

/// Streams at and above this value are reserved for the bridge check.
const BRIDGE_STREAM: u64 = 1 << 63;
const BRIDGE_CHUNK: usize = 10_000;
/// Largest accepted disagreement between the closed form and the bridge
/// simulation.
pub const ORACLE_TOLERANCE: f64 = 0.005;

pub(crate) fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

/// Cell of each angle; angles on a cell boundary map to the cell starting
/// there.
pub(crate) fn cells_for(thetas: &[f64], bins: usize) -> Result<Vec<usize>> {
    if thetas.is_empty() {
        return Err(invalid("theta_grid", "need at least one angle"));
    }
    thetas
        .iter()
        .map(|&t| {
            if !t.is_finite() {
                return Err(invalid("theta_grid", "angles must be finite"));
            }
            let x = t.rem_euclid(TAU) / TAU * bins as f64;
            let j = if (x - x.round()).abs() < 1e-9 { x.round() } else { x.floor() };
            Ok(j as usize % bins)
        })
        .collect()
}

/// `Cov(b_s, b_u) = s∧u − su/2π` for the bridge on `[0, 2π]`.
fn bridge_cov(s: f64, u: f64) -> f64 {
    s.min(u) - s * u / TAU
}

/// `∫₀^{2π} Cov(b_s, b_τ) dτ = πs − s²/2`.
fn bridge_cov_integral(s: f64) -> f64 {
    PI * s - 0.5 * s * s
}

/// Covariance of `Y(θ) = 2b_θ − (1/π)∫₀^{2π} b_τ dτ` by closed-form
/// integration of the bridge covariance.
pub fn analytic_covariance(thetas: &[f64]) -> Vec<Vec<f64>> {
    let double = 2.0 * PI.powi(3) / 3.0;
    thetas
        .iter()
        .map(|&s| {
            let s = s.rem_euclid(TAU);
            thetas
                .iter()
                .map(|&u| {
                    let u = u.rem_euclid(TAU);
                    4.0 * bridge_cov(s, u) - (2.0 / PI) * (bridge_cov_integral(s) + bridge_cov_integral(u))
                        + double / (PI * PI)
                })
                .collect()
        })
        .collect()
}

/// `2·B₂(d/2π)` with `B₂(x) = x² − x + 1/6`: the asymptotic covariance of
/// `√t(ℓ_t/t − 1/2π)` obtained from the Green function of `½ d²/dθ²` on the
/// circle, for `ℓ_t` a density in `θ` of a variance-1 motion.
pub fn green_covariance(thetas: &[f64]) -> Vec<Vec<f64>> {
    thetas
        .iter()
        .map(|&s| {
            thetas
                .iter()
                .map(|&u| {
                    let x = (s - u).rem_euclid(TAU) / TAU;
                    2.0 * (x * x - x + 1.0 / 6.0)
                })
                .collect()
        })
        .collect()
}

/// Sample variance of `2b_θ − (1/π)∫b` over `samples` bridges discretized
/// on `nodes` intervals, with `θ` at node `k`.
pub fn simulate_bridge_variance(k: usize, samples: usize, nodes: usize, seed: u64) -> f64 {
    let h = TAU / nodes as f64;
    let sd = h.sqrt();
    let chunks = samples.div_ceil(BRIDGE_CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_for(seed, BRIDGE_STREAM + c as u64);
            let count = BRIDGE_CHUNK.min(samples - c * BRIDGE_CHUNK);
            let mut walk = vec![0.0; nodes + 1];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                for i in 1..=nodes {
                    let z: f64 = rng.sample(StandardNormal);
                    walk[i] = walk[i - 1] + sd * z;
                }
                let end = walk[nodes];
                let bridge = |i: usize| walk[i] - end * i as f64 / nodes as f64;
                // endpoints vanish, so the trapezoid rule is a plain sum
                let integral: f64 = h * (1..nodes).map(bridge).sum::<f64>();
                let y = 2.0 * bridge(k) - integral / PI;
                s1 += y;
                s2 += y * y;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples as f64;
    (s2 - s1 * s1 / n) / (n - 1.0)
}

/// Agreement of the closed-form variance of `Y(π)` with bridge simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgeCheck {
    pub theta: f64,
    pub analytic: f64,
    pub simulated: f64,
    pub rel_diff: f64,
    pub samples: usize,
    pub nodes: usize,
}

pub(crate) fn check_oracle(spec: &ExperimentSpec) -> Result<BridgeCheck> {
    if spec.bridge_nodes % 2 != 0 {
        return Err(invalid("bridge_nodes", "must be even so that π is a node"));
    }
    let analytic = analytic_covariance(&[PI])[0][0];
    let simulated = simulate_bridge_variance(spec.bridge_nodes / 2, spec.bridge_samples, spec.bridge_nodes, spec.base_seed);
    let rel_diff = (simulated - analytic).abs() / analytic;
    if rel_diff > ORACLE_TOLERANCE {
        return Err(Error::OracleMismatch {
            what: "Var Y(pi), closed form vs bridge simulation".into(),
            expected: analytic,
            found: simulated,
        });
    }
    Ok(BridgeCheck {
        theta: PI,
        analytic,
        simulated,
        rel_diff,
        samples: spec.bridge_samples,
        nodes: spec.bridge_nodes,
    })
}

/// `max_ij |E_ij − C_ij| / √(C_ii C_jj)`; `None` on a size mismatch.
pub fn max_rel_error(empirical: &[Vec<f64>], reference: &[Vec<f64>]) -> Option<f64> {
    let n = reference.len();
    if empirical.len() != n {
        return None;
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let scale = (reference[i][i] * reference[j][j]).sqrt();
            worst = worst.max((empirical[i][j] - reference[i][j]).abs() / scale);
        }
    }
    Some(worst)
}

/// Empirical covariance of the field at one final time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluctTime {
    pub t: f64,
    pub replicas_ok: usize,
    pub empirical: Vec<Vec<f64>>,
    /// Against [`analytic_covariance`]; `None` without successful replicas.
    pub max_rel_error: Option<f64>,
    /// Against [`green_covariance`].
    pub max_rel_error_green: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluctAnalysis {
    pub theta: Vec<f64>,
    pub bins: usize,
    pub analytic: Vec<Vec<f64>>,
    pub green: Vec<Vec<f64>>,
    pub bridge_check: BridgeCheck,
    pub times: Vec<FluctTime>,
}

fn sample_covariance(rows: &[&Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let d = if n < 2 { 0 } else { rows[0].len() };
    let mean: Vec<f64> = (0..d).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / n as f64).collect();
    let denom = (n.max(2) - 1) as f64;
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| rows.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / denom)
                .collect()
        })
        .collect()
}

impl FluctAnalysis {
    pub(crate) fn new(result: &ExperimentResult, thetas: &[f64], bins: usize, bridge_check: BridgeCheck) -> Self {
        let analytic = analytic_covariance(thetas);
        let green = green_covariance(thetas);
        let times = result
            .summary
            .iter()
            .enumerate()
            .map(|(c, s)| {
                let rows: Vec<&Vec<f64>> = result
                    .records
                    .iter()
                    .filter(|r| r.config == c)
                    .filter_map(|r| r.values.as_ref())
                    .collect();
                let empirical = sample_covariance(&rows);
                FluctTime {
                    t: s.param,
                    replicas_ok: rows.len(),
                    max_rel_error: max_rel_error(&empirical, &analytic),
                    max_rel_error_green: max_rel_error(&empirical, &green),
                    empirical,
                }
            })
            .collect();
        Self {
            theta: thetas.to_vec(),
            bins,
            analytic,
            green,
            bridge_check,
            times,
        }
    }
}
