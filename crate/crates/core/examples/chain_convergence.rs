//! Carathéodory distance between path-driven chains and the decay chain
//! e^{-t}z for growing variance.

use loewner_lab::experiments::{run, Analysis, ExperimentKind, ExperimentSpec};

fn main() -> loewner_lab::Result<()> {
    let spec = ExperimentSpec {
        kappas: vec![4.0, 16.0, 64.0],
        replicas: 4,
        ..ExperimentSpec::new(ExperimentKind::ChainConvergence)
    };
    let result = run(&spec)?;
    for (kappa, d) in spec.kappas.iter().zip(result.means("caratheodory").unwrap_or_default()) {
        println!("kappa={kappa:<4} mean distance to e^-t z = {d:.4}");
    }
    if let Analysis::ChainConvergence { control_distance } = result.analysis {
        println!("uniform driving control: {control_distance:.2e}");
    }
    Ok(())
}
