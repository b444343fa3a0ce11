//! Covariance of the centred local-time field against the bridge-based
//! closed form and the Green-function form.

use loewner_lab::experiments::{run, Analysis, ExperimentKind, ExperimentSpec};

fn main() -> loewner_lab::Result<()> {
    let spec = ExperimentSpec {
        times: vec![20.0],
        replicas: 400,
        bins: 64,
        steps_per_unit: 256,
        theta_points: 4,
        bridge_samples: 200_000,
        bridge_nodes: 64,
        ..ExperimentSpec::new(ExperimentKind::Fluctuations)
    };
    let result = run(&spec)?;
    if let Analysis::Fluctuations(f) = &result.analysis {
        println!("bridge check: closed form {:.4}, simulated {:.4}", f.bridge_check.analytic, f.bridge_check.simulated);
        for t in &f.times {
            println!("t={} empirical Var x0 = {:.4}", t.t, t.empirical[0][0]);
            println!("  closed form {:.4}, Green function {:.4}", f.analytic[0][0], f.green[0][0]);
            println!("  max relative errors: {:?} / {:?}", t.max_rel_error, t.max_rel_error_green);
        }
    }
    Ok(())
}
