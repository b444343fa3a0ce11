//! Radial Loewner chains: the uniform chain against e^{-t}z, the capacity
//! normalization of a slab-driven chain, the hull of a constant driving point
//! and its trace.

use std::f64::consts::PI;

use loewner_lab::loewner::{PolarGrid, SolverSettings};
use loewner_lab::measures::{DrivingMeasure, MeasureS1};
use loewner_lab::{sample_circle_bm, SubordinationChain};
use num_complex::Complex64;

fn main() -> loewner_lab::Result<()> {
    let settings = SolverSettings::default();

    let uniform = SubordinationChain::new(DrivingMeasure::uniform(), 1.0, settings)?;
    let z = Complex64::new(0.4, 0.1);
    let gap = (uniform.inverse_map(z, 1.0)? - z * (-1.0f64).exp()).norm();
    println!("uniform driving: |f_1(z) - e^-1 z| = {gap:.2e}");

    let slabs = DrivingMeasure::from_slabs(vec![MeasureS1::cosine(0.8, 128)?, MeasureS1::cosine(-0.5, 128)?])?;
    let chain = SubordinationChain::new(slabs, 1.0, settings)?;
    for t in [0.25, 0.5, 1.0] {
        let d = chain.g_derivative_at_origin(t, 1e-3)?;
        println!("slab driving: g_t'(0) / e^t at t={t} is {:.10}", d / t.exp());
    }

    let point = SubordinationChain::new(DrivingMeasure::homogeneous(MeasureS1::dirac(0.0))?, 1.0, settings)?;
    let hull = point.hull_grid(0.5, PolarGrid::square(32))?;
    println!("constant point at angle 0: {} of {} probes swallowed by t = 0.5", hull.swallowed().count(), hull.points.len());
    for est in point.trace_polyline(0.5, 4)? {
        println!("  trace t={:.3} tip={:.4} gauge={:.1e}", est.t, est.extrapolated, est.gauge);
    }

    let path = sample_circle_bm(16.0, 2048, 1.0, 3)?;
    let bm = SubordinationChain::new(DrivingMeasure::from_path(path, 256)?, 1.0, settings)?;
    let tip = bm.trace_refined(0.5)?;
    println!("kappa=16 path: trace at t=0.5 is {:.4} (argument {:.3} pi)", tip.extrapolated, tip.extrapolated.arg() / PI);
    Ok(())
}
