//! Dyadic time projections of a driving measure: coherence of the levels,
//! round trips through the piecewise-constant embedding and the
//! projective-limit distance.

use loewner_lab::measures::{coarsen, dn_distance, embed_fn, project_pn, DrivingMeasure, MeasureS1};

fn main() -> loewner_lab::Result<()> {
    let slabs = (0..8)
        .map(|k| MeasureS1::cosine((k as f64 * 0.8).sin() * 0.9, 128))
        .collect::<Result<Vec<_>, _>>()?;
    let rho = DrivingMeasure::from_slabs(slabs)?;
    for n in 0..=5 {
        let tuple = project_pn(&rho, n)?;
        let same = coarsen(&project_pn(&rho, n + 1)?)? == tuple;
        let d = dn_distance(&embed_fn(&tuple), &rho, 8)?;
        println!("n={n} entries={:<3} coherent={same} d(F_n P_n rho, rho)={d:.3e}", tuple.entries().len());
    }
    Ok(())
}
