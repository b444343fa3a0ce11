//! The Dirichlet rate, its variational form, the level rates of a driving
//! measure and its energy.

use loewner_lab::measures::{project_pn, DrivingMeasure, MeasureS1};
use loewner_lab::rate::{dirichlet_rate, energy, tuple_rate, variational_rate, OptimizerSettings};

fn main() -> loewner_lab::Result<()> {
    for a in [0.0, 0.1, 0.5, 0.9] {
        let mu = MeasureS1::cosine(a, 256)?;
        let exact = (1.0 - (1.0 - a * a).sqrt()) / 8.0;
        let i = dirichlet_rate(&mu)?;
        let v = variational_rate(&mu, 16, &OptimizerSettings::default())?;
        println!("a={a}: I={} I~={} closed form {exact:.9}", i.value, v.value);
    }
    println!("I(dirac) = {}", dirichlet_rate(&MeasureS1::dirac(1.0))?.value);

    let rho = DrivingMeasure::from_slabs(vec![
        MeasureS1::cosine(0.5, 128)?,
        MeasureS1::uniform(128),
        MeasureS1::cosine(0.9, 128)?,
        MeasureS1::cosine(-0.3, 128)?,
    ])?;
    for n in 0..=3 {
        println!("I_{n}(P_{n} rho) = {}", tuple_rate(&project_pn(&rho, n)?)?.value);
    }
    println!("E(rho) = {}", energy(&rho)?.value);
    Ok(())
}
