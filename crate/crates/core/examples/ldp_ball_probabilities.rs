//! Probabilities that the average occupation measure falls in a W1 ball
//! around a cosine density, with the fitted exponential slope.

use loewner_lab::driving_spec::DrivingSpec;
use loewner_lab::experiments::{run, Analysis, ExperimentKind, ExperimentSpec};

fn main() -> loewner_lab::Result<()> {
    let spec = ExperimentSpec {
        kappas: vec![4.0, 8.0, 16.0, 32.0],
        replicas: 5000,
        target: DrivingSpec::Cosine(0.5),
        epsilon: 0.2,
        ..ExperimentSpec::new(ExperimentKind::LdpSlope)
    };
    let result = run(&spec)?;
    if let Analysis::LdpSlope(a) = &result.analysis {
        for row in &a.rows {
            println!("kappa={:<3} hits={:<5} p={:.4} -log(p)/kappa={:?}", row.kappa, row.hits, row.p, row.rate_estimate);
        }
        println!("slope={:?} I(target)={:.5}", a.slope, a.rate_proxy);
    }
    Ok(())
}
