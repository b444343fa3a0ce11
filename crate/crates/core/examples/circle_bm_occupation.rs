//! Samples circular Brownian motion at several variances and prints how far
//! the average occupation measure at t = 1 sits from the uniform measure.

use loewner_lab::circle_bm::{local_time_field, min_steps};
use loewner_lab::measures::{w1_circle, MeasureS1};
use loewner_lab::{average_occupation, occupation_measure, sample_circle_bm};

fn main() -> loewner_lab::Result<()> {
    let bins = 256;
    for kappa in [1.0, 10.0, 100.0, 1000.0] {
        let path = sample_circle_bm(kappa, min_steps(kappa, 1.0), 1.0, 7)?;
        let occ = occupation_measure(&path, 1.0, bins)?;
        let avg = average_occupation(&occ)?;
        let w1 = w1_circle(&avg, &MeasureS1::uniform(bins))?;
        let lt = local_time_field(&path, 1.0, bins)?;
        let peak = lt.iter().cloned().fold(0.0, f64::max);
        println!("kappa={kappa:<6} steps={:<6} W1(avg occupation, uniform)={w1:.4} peak local time={peak:.3}", path.n_steps());
    }
    Ok(())
}
