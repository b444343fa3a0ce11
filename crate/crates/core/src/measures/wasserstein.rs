use std::f64::consts::TAU;

use super::MeasureS1;
use crate::error::Result;

/// Circular 1-Wasserstein distance between two cell-mass vectors on the same
/// grid, with arc length as ground metric.
///
/// Mass sits at cell centers. With `D_j` the cumulative difference up to cell
/// `j`, `W1 = Δ · min_c Σ_j |D_j − c|`, and the minimizing shift `c` is a
/// median of the `D_j`.
pub fn w1_bins(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "w1_bins needs a common grid");
    let m = p.len();
    let mut cum = Vec::with_capacity(m);
    let mut acc = 0.0;
    for (a, b) in p.iter().zip(q) {
        acc += a - b;
        cum.push(acc);
    }
    let mut sorted = cum.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    let median = sorted[m / 2];
    let width = TAU / m as f64;
    width * cum.iter().map(|d| (d - median).abs()).sum::<f64>()
}

/// Circular 1-Wasserstein distance between two probability measures.
///
/// Both measures are rendered on the larger of their grids (atoms-only pairs
/// use [`super::DEFAULT_BINS`]) before the exact grid computation.
pub fn w1_circle(mu: &MeasureS1, nu: &MeasureS1) -> Result<f64> {
    mu.require_probability()?;
    nu.require_probability()?;
    let m = match (mu.grid(), nu.grid()) {
        (Some(a), Some(b)) => a.max(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => super::DEFAULT_BINS,
    };
    Ok(w1_bins(&mu.to_bins(m), &nu.to_bins(m)))
}
