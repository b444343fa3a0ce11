//! Measures on the circle, driving measures on `S¹ × [0, 1]`, and the dyadic
//! projection lattice.

mod driving;
pub mod json;
mod wasserstein;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::circle_bm::angle_bin;
use crate::error::{invalid, Error, Result};

pub use driving::{
    coarsen, dirac_path_measure, dn_distance, embed_fn, project_pn, DrivingMeasure, LevelTuple,
    MAX_DEPTH,
};
pub use wasserstein::{w1_bins, w1_circle};

/// Grid used when atoms must be rendered without a density partner.
pub const DEFAULT_BINS: usize = 256;

/// Tolerance on `|total − 1|` accepted for probability inputs.
pub const PROBABILITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub angle: f64,
    pub weight: f64,
}

/// A finite measure on the circle, either atomic or a piecewise-constant
/// density on `m` equal cells `[2πj/m, 2π(j+1)/m)`.
///
/// The density form stores cell masses, not density values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureS1 {
    Atoms { atoms: Vec<Atom> },
    Density { masses: Vec<f64> },
}

impl MeasureS1 {
    pub fn uniform(m: usize) -> Self {
        MeasureS1::Density {
            masses: vec![1.0 / m as f64; m],
        }
    }

    /// Unit point mass at `angle`.
    pub fn dirac(angle: f64) -> Self {
        MeasureS1::Atoms {
            atoms: vec![Atom {
                angle: angle.rem_euclid(TAU),
                weight: 1.0,
            }],
        }
    }

    pub fn from_atoms(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(invalid("atoms", "need at least one atom"));
        }
        let mut out = Vec::with_capacity(atoms.len());
        for a in atoms {
            if !a.angle.is_finite() || !(a.weight > 0.0) || !a.weight.is_finite() {
                return Err(invalid("atoms", "angles must be finite and weights positive"));
            }
            out.push(Atom {
                angle: a.angle.rem_euclid(TAU),
                weight: a.weight,
            });
        }
        Ok(MeasureS1::Atoms { atoms: out })
    }

    pub fn from_bin_masses(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(invalid("masses", "need at least one cell"));
        }
        if masses.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("masses", "cell masses must be finite and nonnegative"));
        }
        if !(masses.iter().sum::<f64>() > 0.0) {
            return Err(invalid("masses", "total mass must be positive"));
        }
        Ok(MeasureS1::Density { masses })
    }

    /// Probability measure whose cell `j` carries mass proportional to
    /// `f(θ_j)`, `θ_j` the cell center. For trigonometric polynomials of
    /// degree below `m` the normalization is exact, so the cell densities
    /// equal `f(θ_j)` when `f` already integrates to one.
    pub fn from_density_fn(m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if m == 0 {
            return Err(invalid("m", "need at least one cell"));
        }
        let width = TAU / m as f64;
        let raw: Vec<f64> = (0..m).map(|j| f((j as f64 + 0.5) * width)).collect();
        let total: f64 = raw.iter().sum();
        if raw.iter().any(|v| !v.is_finite() || *v < 0.0) || !(total > 0.0) {
            return Err(invalid("density", "must be finite, nonnegative and not identically zero"));
        }
        Ok(MeasureS1::Density {
            masses: raw.into_iter().map(|v| v / total).collect(),
        })
    }

    /// The density `(1 + a cos θ)/(2π)`, `|a| ≤ 1`.
    pub fn cosine(a: f64, m: usize) -> Result<Self> {
        if !(a.abs() <= 1.0) {
            return Err(invalid("a", format!("cosine amplitude must lie in [-1, 1], got {a}")));
        }
        Self::from_density_fn(m, |t| (1.0 + a * t.cos()) / TAU)
    }

    pub fn total(&self) -> f64 {
        match self {
            MeasureS1::Atoms { atoms } => atoms.iter().map(|a| a.weight).sum(),
            MeasureS1::Density { masses } => masses.iter().sum(),
        }
    }

    pub fn is_probability(&self) -> bool {
        (self.total() - 1.0).abs() <= PROBABILITY_TOL
    }

    pub(crate) fn require_probability(&self) -> Result<()> {
        if self.is_probability() {
            Ok(())
        } else {
            Err(Error::NotProbability { total: self.total() })
        }
    }

    /// Number of cells for density measures.
    pub fn grid(&self) -> Option<usize> {
        match self {
            MeasureS1::Atoms { .. } => None,
            MeasureS1::Density { masses } => Some(masses.len()),
        }
    }

    pub fn bin_masses(&self) -> Option<&[f64]> {
        match self {
            MeasureS1::Atoms { .. } => None,
            MeasureS1::Density { masses } => Some(masses),
        }
    }

    /// Density values (mass per unit arc length) at the cells.
    pub fn density_values(&self) -> Option<Vec<f64>> {
        self.bin_masses().map(|ms| {
            let inv = ms.len() as f64 / TAU;
            ms.iter().map(|v| v * inv).collect()
        })
    }

    /// Cell masses on an `m`-cell grid. Atoms land in the cell containing
    /// them; densities are rebinned conservatively.
    pub fn to_bins(&self, m: usize) -> Vec<f64> {
        match self {
            MeasureS1::Atoms { atoms } => {
                let mut bins = vec![0.0; m];
                for a in atoms {
                    bins[angle_bin(a.angle, m)] += a.weight;
                }
                bins
            }
            MeasureS1::Density { masses } => rebin(masses, m),
        }
    }

    /// Rotation by `k` whole cells (density measures only).
    pub fn rotate_cells(&self, k: usize) -> Option<Self> {
        self.bin_masses().map(|ms| {
            let m = ms.len();
            let mut out = vec![0.0; m];
            for (j, v) in ms.iter().enumerate() {
                out[(j + k) % m] = *v;
            }
            MeasureS1::Density { masses: out }
        })
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, MeasureS1::Atoms { .. })
    }
}

/// Conservative rebinning: the mass of each source cell is split over the
/// target cells in proportion to their overlap.
pub fn rebin(masses: &[f64], m_dst: usize) -> Vec<f64> {
    let m_src = masses.len();
    if m_src == m_dst {
        return masses.to_vec();
    }
    // cell i of the source spans [i*m_dst, (i+1)*m_dst) in units of 1/(m_src*m_dst)
    let mut out = vec![0.0; m_dst];
    for (i, &mass) in masses.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let (lo, hi) = (i * m_dst, (i + 1) * m_dst);
        let mut j = lo / m_src;
        while j < m_dst && j * m_src < hi {
            let (a, b) = (lo.max(j * m_src), hi.min((j + 1) * m_src));
            if b > a {
                out[j] += mass * (b - a) as f64 / m_dst as f64;
            }
            j += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_validate() {
        assert!(MeasureS1::from_bin_masses(vec![]).is_err());
        assert!(MeasureS1::from_bin_masses(vec![0.0, 0.0]).is_err());
        assert!(MeasureS1::from_bin_masses(vec![0.5, -0.1]).is_err());
        assert!(MeasureS1::from_atoms(vec![Atom { angle: 1.0, weight: 0.0 }]).is_err());
        assert!(MeasureS1::cosine(1.5, 16).is_err());
        let d = MeasureS1::dirac(-1.0);
        match d {
            MeasureS1::Atoms { atoms } => assert!((atoms[0].angle - (TAU - 1.0)).abs() < 1e-15),
            _ => unreachable!(),
        }
    }

    #[test]
    fn cosine_density_is_exact_at_centers() {
        let mu = MeasureS1::cosine(0.5, 64).unwrap();
        assert!((mu.total() - 1.0).abs() < 1e-14);
        let d = mu.density_values().unwrap();
        for (j, v) in d.iter().enumerate() {
            let t = (j as f64 + 0.5) * TAU / 64.0;
            assert!((v - (1.0 + 0.5 * t.cos()) / TAU).abs() < 1e-14);
        }
    }

    #[test]
    fn rebin_conserves_mass() {
        let src: Vec<f64> = (0..7).map(|i| (i as f64 + 1.0) / 28.0).collect();
        for m in [1, 3, 7, 10, 14, 256] {
            let r = rebin(&src, m);
            assert_eq!(r.len(), m);
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
        // refining by an integer factor splits evenly
        let r = rebin(&[1.0, 0.0], 4);
        assert_eq!(r, vec![0.5, 0.5, 0.0, 0.0]);
        let r = rebin(&[0.25, 0.25, 0.25, 0.25], 2);
        assert_eq!(r, vec![0.5, 0.5]);
    }

    #[test]
    fn atoms_bin_into_their_cell() {
        let mu = MeasureS1::from_atoms(vec![
            Atom { angle: 0.0, weight: 0.25 },
            Atom { angle: std::f64::consts::PI, weight: 0.75 },
        ])
        .unwrap();
        let b = mu.to_bins(8);
        assert_eq!(b[0], 0.25);
        assert_eq!(b[4], 0.75);
    }
}
