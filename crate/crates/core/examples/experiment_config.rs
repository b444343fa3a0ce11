//! Experiment specs as TOML: parse, validate, run, and check that a rerun
//! reproduces every number.

use loewner_lab::experiments::{run, ExperimentSpec};

const CONFIG: &str = r#"
kind = "lln"
kappas = [5.0, 50.0]
replicas = 6
base_seed = 2024
depth = 3
"#;

fn main() -> loewner_lab::Result<()> {
    let spec = ExperimentSpec::from_toml(CONFIG)?;
    spec.validate()?;
    let first = run(&spec)?;
    let second = run(&spec)?;
    println!("identical rerun: {}", first.without_timestamps() == second.without_timestamps());
    println!("{}", spec.to_toml());
    Ok(())
}
