use serde::{Deserialize, Serialize};

use super::fluctuations::{self, FluctAnalysis};
use super::{assemble, run_replicas, start, Analysis, ExperimentKind, ExperimentResult, ExperimentSpec};
use crate::circle_bm::{local_time_field, occupation_measure, sample_circle_bm_stream};
use crate::error::{invalid, Result};
use crate::loewner::{caratheodory_distance, DecayChain, SolverSettings, SubordinationChain};
use crate::measures::{dn_distance, w1_bins, DrivingMeasure, MeasureS1};
use crate::rate::dirichlet_rate;

/// Law of large numbers: distance of the average occupation measure at
/// `t = 1` from the uniform measure, in `W1` and in the projective-limit
/// distance of the driving measures.
pub fn run_lln(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let started = start(spec, ExperimentKind::Lln)?;
    let uniform_bins = MeasureS1::uniform(spec.bins).to_bins(spec.bins);
    let uniform_driving = DrivingMeasure::homogeneous(MeasureS1::uniform(spec.bins))?;
    let records = run_replicas(spec, |_, kappa, stream| {
        let path = sample_circle_bm_stream(kappa, spec.steps_for(kappa, 1.0), 1.0, spec.base_seed, stream)?;
        let occ = occupation_measure(&path, 1.0, spec.bins)?;
        let w1 = w1_bins(&occ.bins, &uniform_bins);
        let rho = DrivingMeasure::from_path(path, spec.bins)?;
        let dn = dn_distance(&rho, &uniform_driving, spec.depth)?;
        Ok(vec![w1, dn])
    })?;
    Ok(assemble(spec, &["w1_uniform", "dn_uniform"], records, Analysis::Lln, started))
}

/// Uniform Carathéodory distance between the chain driven by a sampled path
/// and the decay chain `e^{−t}z`, with the uniform-driving chain as control.
pub fn run_chain_convergence(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let started = start(spec, ExperimentKind::ChainConvergence)?;
    let settings = SolverSettings::default();
    let control = SubordinationChain::new(DrivingMeasure::uniform(), 1.0, settings)?;
    let control_distance = caratheodory_distance(&control, &DecayChain, spec.r_compact, spec.time_grid)?;
    let records = run_replicas(spec, |_, kappa, stream| {
        let path = sample_circle_bm_stream(kappa, spec.steps_for(kappa, 1.0), 1.0, spec.base_seed, stream)?;
        let chain = SubordinationChain::new(DrivingMeasure::from_path(path, spec.bins)?, 1.0, settings)?;
        Ok(vec![caratheodory_distance(&chain, &DecayChain, spec.r_compact, spec.time_grid)?])
    })?;
    Ok(assemble(
        spec,
        &["caratheodory"],
        records,
        Analysis::ChainConvergence { control_distance },
        started,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdpRow {
    pub kappa: f64,
    pub replicas_ok: usize,
    pub hits: usize,
    /// `hits / replicas_ok`.
    pub p: f64,
    /// No hits: only `p < 1/replicas_ok` is known.
    pub censored: bool,
    /// `−log(p)/κ`, absent for censored rows.
    pub rate_estimate: Option<f64>,
}

/// Ball-probability decay against `κ`.
///
/// `rate_proxy` is `I(target)`. The exponent of the ball probability is the
/// infimum of `I` over the ball, which is at most `I(target)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdpAnalysis {
    pub epsilon: f64,
    pub rate_proxy: f64,
    pub rows: Vec<LdpRow>,
    /// Least-squares slope of `−log p` against `κ` over uncensored rows.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub fit_points: usize,
}

/// Recomputes the ball statistics of an LDP result for another radius.
pub fn ldp_analysis(result: &ExperimentResult, epsilon: f64, rate_proxy: f64) -> Result<LdpAnalysis> {
    let k = result
        .metric("w1_target")
        .ok_or_else(|| invalid("result", "not an ldp_slope result"))?;
    let rows: Vec<LdpRow> = result
        .summary
        .iter()
        .enumerate()
        .map(|(c, s)| {
            let hits = result
                .records
                .iter()
                .filter(|r| r.config == c)
                .filter_map(|r| r.values.as_ref())
                .filter(|v| v[k] < epsilon)
                .count();
            let n = s.replicas_ok;
            let p = if n > 0 { hits as f64 / n as f64 } else { 0.0 };
            let censored = hits == 0;
            LdpRow {
                kappa: s.param,
                replicas_ok: n,
                hits,
                p,
                censored,
                rate_estimate: (!censored).then(|| -p.ln() / s.param),
            }
        })
        .collect();
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| !r.censored).map(|r| (r.kappa, -r.p.ln())).collect();
    let (slope, intercept) = least_squares(&pts).unzip();
    Ok(LdpAnalysis {
        epsilon,
        rate_proxy,
        rows,
        slope,
        intercept,
        fit_points: pts.len(),
    })
}

fn least_squares(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Probability that the average occupation measure at `t = 1` lies in the
/// `W1` ball of radius `epsilon` around `target`, for each `κ`.
pub fn run_ldp_slope(spec: &ExperimentSpec, target: &MeasureS1, epsilon: f64) -> Result<ExperimentResult> {
    let started = start(spec, ExperimentKind::LdpSlope)?;
    let floor = 4.0 * std::f64::consts::PI / spec.bins as f64;
    if !(epsilon >= floor) {
        return Err(invalid("epsilon", format!("must be at least 4π/bins = {floor:.6}, got {epsilon}")));
    }
    let rate = dirichlet_rate(target)?;
    let rate_proxy = rate
        .value
        .finite()
        .ok_or_else(|| invalid("target", "target must have a finite rate"))?;
    let target_bins = target.to_bins(spec.bins);
    let records = run_replicas(spec, |_, kappa, stream| {
        let path = sample_circle_bm_stream(kappa, spec.steps_for(kappa, 1.0), 1.0, spec.base_seed, stream)?;
        let occ = occupation_measure(&path, 1.0, spec.bins)?;
        Ok(vec![w1_bins(&occ.bins, &target_bins)])
    })?;
    let mut result = assemble(spec, &["w1_target"], records, Analysis::Lln, started);
    result.analysis = Analysis::LdpSlope(ldp_analysis(&result, epsilon, rate_proxy)?);
    Ok(result)
}

/// Local-time fluctuations of variance-1 circular Brownian motion at large
/// `t`, compared with the covariance of `2b_θ − (1/π)∫b` for a Brownian
/// bridge `b` on `[0, 2π]`.
///
/// The bridge oracle is first checked against direct simulation; the run
/// aborts if the two disagree by more than 0.5%.
pub fn run_fluctuations(spec: &ExperimentSpec, theta_grid: &[f64]) -> Result<ExperimentResult> {
    let started = start(spec, ExperimentKind::Fluctuations)?;
    let cells = fluctuations::cells_for(theta_grid, spec.bins)?;
    let bridge_check = fluctuations::check_oracle(spec)?;
    let records = run_replicas(spec, |_, t, stream| {
        let path = sample_circle_bm_stream(1.0, spec.steps_for(1.0, t), t, spec.base_seed, stream)?;
        let lt = local_time_field(&path, t, spec.bins)?;
        let centre = 1.0 / std::f64::consts::TAU;
        Ok(cells.iter().map(|&j| t.sqrt() * (lt[j] / t - centre)).collect())
    })?;
    let names: Vec<String> = (0..theta_grid.len()).map(|k| format!("x{k}")).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut result = assemble(spec, &name_refs, records, Analysis::Lln, started);
    result.analysis = Analysis::Fluctuations(FluctAnalysis::new(&result, theta_grid, spec.bins, bridge_check));
    Ok(result)
}
