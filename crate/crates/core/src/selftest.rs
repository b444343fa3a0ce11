//! Fast invariant checks run by `loewner-lab selftest`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::circle_bm::sample_circle_bm_stream;
use crate::error::Result;
use crate::experiments::analytic_covariance;
use crate::loewner::{SolverSettings, SubordinationChain};
use crate::measures::{coarsen, project_pn, w1_circle, DrivingMeasure, MeasureS1};
use crate::rate::{dirichlet_rate, energy, tuple_rate, variational_rate, OptimizerSettings};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> Check {
    match outcome {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn cosine_slabs() -> Result<DrivingMeasure> {
    DrivingMeasure::from_slabs(vec![MeasureS1::cosine(0.5, 64)?, MeasureS1::uniform(64), MeasureS1::cosine(-0.3, 64)?])
}

/// Runs every check; never panics.
pub fn run() -> SelftestReport {
    let checks = vec![
        check("uniform chain is e^-t z", (|| {
            let chain = SubordinationChain::new(DrivingMeasure::uniform(), 1.0, SolverSettings::default())?;
            let z = Complex64::new(0.3, -0.2);
            let gap = (chain.inverse_map(z, 0.7)? - z * (-0.7f64).exp()).norm();
            Ok((gap < 1e-9, format!("|f_0.7(z) - e^-0.7 z| = {gap:.2e}")))
        })()),
        check("capacity normalization f_t'(0) = e^-t", (|| {
            let chain = SubordinationChain::new(cosine_slabs()?, 1.0, SolverSettings::default())?;
            let d = chain.f_derivative_at_origin(0.5, 0.05)?;
            let rel = (d / (-0.5f64).exp() - 1.0).abs();
            Ok((rel < 1e-6, format!("relative error {rel:.2e}")))
        })()),
        check("antipodal atoms are pi apart", (|| {
            let d = w1_circle(&MeasureS1::dirac(0.0), &MeasureS1::dirac(PI))?;
            Ok(((d - PI).abs() < 1e-12, format!("W1 = {d}")))
        })()),
        check("rate of cosine density", (|| {
            let a: f64 = 0.5;
            let exact = (1.0 - (1.0 - a * a).sqrt()) / 8.0;
            let mu = MeasureS1::cosine(a, 256)?;
            let got = dirichlet_rate(&mu)?.value.as_f64();
            let uniform = dirichlet_rate(&MeasureS1::uniform(256))?.value.as_f64();
            let rel = (got / exact - 1.0).abs();
            Ok((rel < 1e-6 && uniform == 0.0, format!("I = {got:.9} vs {exact:.9}, I(uniform) = {uniform}")))
        })()),
        check("variational rate matches Dirichlet rate", (|| {
            let mu = MeasureS1::cosine(0.5, 256)?;
            let d = dirichlet_rate(&mu)?.value.as_f64();
            let v = variational_rate(&mu, 16, &OptimizerSettings::default())?.value.as_f64();
            let rel = (v / d - 1.0).abs();
            Ok((rel < 0.01, format!("relative gap {rel:.2e}")))
        })()),
        check("projections are coherent", (|| {
            let rho = cosine_slabs()?;
            let mut worst: f64 = 0.0;
            for n in 0..4 {
                let coarse = project_pn(&rho, n)?;
                let from_fine = coarsen(&project_pn(&rho, n + 1)?)?;
                for (x, y) in coarse.entries().iter().zip(from_fine.entries()) {
                    for (p, q) in x.to_bins(64).iter().zip(y.to_bins(64)) {
                        worst = worst.max((p - q).abs());
                    }
                }
            }
            Ok((worst == 0.0, format!("max gap {worst:e}")))
        })()),
        check("level rates increase to the energy", (|| {
            let rho = cosine_slabs()?;
            let e = energy(&rho)?.value.as_f64();
            let levels: Vec<f64> = (0..5)
                .map(|n| Ok(tuple_rate(&project_pn(&rho, n)?)?.value.as_f64()))
                .collect::<Result<_>>()?;
            let monotone = levels.windows(2).all(|w| w[0] <= w[1] + 1e-15);
            let top = *levels.last().unwrap_or(&0.0);
            Ok((monotone && top <= e + 1e-12, format!("I_0..I_4 = {levels:.6?}, E = {e:.6}")))
        })()),
        check("seeded paths are reproducible", (|| {
            let a = sample_circle_bm_stream(50.0, 4000, 1.0, 7, 3)?;
            let b = sample_circle_bm_stream(50.0, 4000, 1.0, 7, 3)?;
            let c = sample_circle_bm_stream(50.0, 4000, 1.0, 7, 4)?;
            Ok((a == b && a != c, "same seed and stream give the same path".into()))
        })()),
        check("bridge field variance is 2pi/3", (|| {
            let v = analytic_covariance(&[0.0, 1.0, TAU - 1.0]);
            let diag = v.iter().enumerate().map(|(i, r)| (r[i] - 2.0 * PI / 3.0).abs()).fold(0.0, f64::max);
            Ok((diag < 1e-12 && (v[0][1] - v[0][2]).abs() < 1e-12, format!("diagonal error {diag:.1e}")))
        })()),
    ];
    SelftestReport { checks }
}
