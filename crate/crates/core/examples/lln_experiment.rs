//! A small law-of-large-numbers run written to JSON and CSV.

use loewner_lab::experiments::{persist, run, ExperimentKind, ExperimentSpec};

fn main() -> loewner_lab::Result<()> {
    let spec = ExperimentSpec {
        kappas: vec![10.0, 100.0, 1000.0],
        replicas: 20,
        depth: 4,
        ..ExperimentSpec::new(ExperimentKind::Lln)
    };
    let result = run(&spec)?;
    for (kappa, w1) in spec.kappas.iter().zip(result.means("w1_uniform").unwrap_or_default()) {
        println!("kappa={kappa:<6} mean W1 to uniform = {w1:.4}");
    }
    let dir = std::env::temp_dir().join("loewner-lab-examples");
    let (json, csv) = persist(&result, &dir.join("lln"))?;
    println!("wrote {} and {}", json.display(), csv.display());
    Ok(())
}
