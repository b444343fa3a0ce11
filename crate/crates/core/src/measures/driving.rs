use serde::{Deserialize, Serialize};

use super::{rebin, w1_bins, MeasureS1, DEFAULT_BINS};
use crate::circle_bm::{occupation_window, CirclePath};
use crate::error::{invalid, Result};

/// Deepest supported dyadic level (4096 time windows).
pub const MAX_DEPTH: u32 = 12;

/// An element of the space of measures on `S¹ × [0, 1]` with uniform time
/// marginal, stored through its disintegration `{ρ_t}`.
///
/// Slab-backed measures hold one probability measure per equal time slab.
/// Path-backed measures stand for `{δ_{ζ_t}}` of a sampled trajectory; their
/// window averages are normalized occupation measures on `bins` cells.
///
/// Past `t = 1` a slab-backed measure keeps its last slab; the Loewner
/// solver relies on this when flows are run beyond unit time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DrivingMeasure {
    Slabs { slabs: Vec<MeasureS1> },
    Path { path: CirclePath, bins: usize },
}

impl DrivingMeasure {
    pub fn from_slabs(slabs: Vec<MeasureS1>) -> Result<Self> {
        if slabs.is_empty() {
            return Err(invalid("slabs", "need at least one slab"));
        }
        for s in &slabs {
            s.require_probability()?;
        }
        Ok(DrivingMeasure::Slabs { slabs })
    }

    /// Time-homogeneous driving by a single measure.
    pub fn homogeneous(mu: MeasureS1) -> Result<Self> {
        Self::from_slabs(vec![mu])
    }

    pub fn uniform() -> Self {
        DrivingMeasure::Slabs {
            slabs: vec![MeasureS1::uniform(DEFAULT_BINS)],
        }
    }

    pub fn from_path(path: CirclePath, bins: usize) -> Result<Self> {
        if path.t_max() < 1.0 {
            return Err(invalid(
                "path",
                format!("driving path must cover [0, 1], ends at {}", path.t_max()),
            ));
        }
        if bins == 0 {
            return Err(invalid("bins", "must be at least 1"));
        }
        Ok(DrivingMeasure::Path { path, bins })
    }

    pub fn slabs(&self) -> Option<&[MeasureS1]> {
        match self {
            DrivingMeasure::Slabs { slabs } => Some(slabs),
            DrivingMeasure::Path { .. } => None,
        }
    }

    pub fn path(&self) -> Option<&CirclePath> {
        match self {
            DrivingMeasure::Path { path, .. } => Some(path),
            DrivingMeasure::Slabs { .. } => None,
        }
    }

    /// Mass of `S¹ × [a, b]` for slab-aligned `a ≤ b`; equals `b − a` by
    /// construction.
    pub fn marginal(&self, a: f64, b: f64) -> f64 {
        match self {
            DrivingMeasure::Slabs { slabs } => {
                let n = slabs.len() as f64;
                let (i0, i1) = ((a * n).round() as usize, (b * n).round() as usize);
                slabs[i0..i1].iter().map(|s| s.total() / n).sum()
            }
            DrivingMeasure::Path { path, bins } => {
                occupation_window(path, a, b, *bins).iter().sum()
            }
        }
    }
}

/// A point of `Y_n`: `2^n` probability measures indexed by the dyadic
/// windows of level `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelTuple {
    level: u32,
    entries: Vec<MeasureS1>,
}

impl LevelTuple {
    pub fn new(level: u32, entries: Vec<MeasureS1>) -> Result<Self> {
        if level > MAX_DEPTH {
            return Err(invalid("level", format!("must be <= {MAX_DEPTH}")));
        }
        if entries.len() != 1 << level {
            return Err(invalid("entries", format!("level {level} needs {} entries", 1 << level)));
        }
        for e in &entries {
            e.require_probability()?;
        }
        Ok(Self { level, entries })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn entries(&self) -> &[MeasureS1] {
        &self.entries
    }

    fn from_cells(level: u32, cells: Vec<Vec<f64>>) -> Self {
        Self {
            level,
            entries: cells
                .into_iter()
                .map(|masses| MeasureS1::Density { masses })
                .collect(),
        }
    }
}

fn common_grid<'a>(measures: impl IntoIterator<Item = &'a MeasureS1>) -> usize {
    measures
        .into_iter()
        .filter_map(MeasureS1::grid)
        .max()
        .unwrap_or(DEFAULT_BINS)
}

fn average_pairs(cells: &[Vec<f64>]) -> Vec<Vec<f64>> {
    cells
        .chunks_exact(2)
        .map(|pair| {
            pair[0]
                .iter()
                .zip(&pair[1])
                .map(|(a, b)| (a + b) * 0.5)
                .collect()
        })
        .collect()
}

fn dyadic_log2(n: usize) -> Option<u32> {
    n.is_power_of_two().then(|| n.trailing_zeros())
}

/// Level-`base` cells of a slab-backed measure.
fn slab_cells(slabs: &[MeasureS1], base: u32, m: usize) -> Vec<Vec<f64>> {
    let binned: Vec<Vec<f64>> = slabs.iter().map(|s| s.to_bins(m)).collect();
    let n_slabs = slabs.len();
    let windows = 1usize << base;
    if windows % n_slabs == 0 {
        let repeat = windows / n_slabs;
        return (0..windows).map(|i| binned[i / repeat].clone()).collect();
    }
    // general layout: overlap weights between window i and slab j
    (0..windows)
        .map(|i| {
            let mut cell = vec![0.0; m];
            // window spans [i*n_slabs, (i+1)*n_slabs) in units of 1/(windows*n_slabs)
            let (lo, hi) = (i * n_slabs, (i + 1) * n_slabs);
            for (j, masses) in binned.iter().enumerate() {
                let (a, b) = (lo.max(j * windows), hi.min((j + 1) * windows));
                if b > a {
                    let w = (b - a) as f64 / n_slabs as f64;
                    for (c, v) in cell.iter_mut().zip(masses) {
                        *c += w * v;
                    }
                }
            }
            cell
        })
        .collect()
}

/// The projection `P_n`: average of the driving measure over each dyadic
/// window of level `n`, rescaled to a probability measure.
///
/// Slab-backed measures are first rendered at a fixed base level (the slab
/// level for dyadic layouts, [`MAX_DEPTH`] otherwise) and then coarsened pair
/// by pair, so `P_n = P_{n,n+1} ∘ P_{n+1}` holds bit for bit.
pub fn project_pn(rho: &DrivingMeasure, n: u32) -> Result<LevelTuple> {
    if n > MAX_DEPTH {
        return Err(invalid("n", format!("projection level must be <= {MAX_DEPTH}, got {n}")));
    }
    match rho {
        DrivingMeasure::Slabs { slabs } => {
            let m = common_grid(slabs);
            let base = match dyadic_log2(slabs.len()) {
                Some(k) => k.max(n),
                None => MAX_DEPTH,
            };
            let mut cells = slab_cells(slabs, base, m);
            for _ in n..base {
                cells = average_pairs(&cells);
            }
            Ok(LevelTuple::from_cells(n, cells))
        }
        DrivingMeasure::Path { path, bins } => {
            let windows = 1usize << n;
            let scale = windows as f64;
            let cells = (0..windows)
                .map(|i| {
                    let (a, b) = (i as f64 / scale, (i + 1) as f64 / scale);
                    let inv = 1.0 / (b - a);
                    occupation_window(path, a, b, *bins)
                        .into_iter()
                        .map(|v| v * inv)
                        .collect()
                })
                .collect();
            Ok(LevelTuple::from_cells(n, cells))
        }
    }
}

/// The embedding `F_n`: the slab-backed measure equal to entry `i` on the
/// `i`-th dyadic window.
pub fn embed_fn(tuple: &LevelTuple) -> DrivingMeasure {
    DrivingMeasure::Slabs {
        slabs: tuple.entries.clone(),
    }
}

/// `P_{n,n+1}`: averages adjacent pairs of entries.
pub fn coarsen(tuple: &LevelTuple) -> Result<LevelTuple> {
    if tuple.level == 0 {
        return Err(invalid("level", "cannot coarsen a level-0 tuple"));
    }
    let m = common_grid(&tuple.entries);
    let cells: Vec<Vec<f64>> = tuple.entries.iter().map(|e| e.to_bins(m)).collect();
    Ok(LevelTuple::from_cells(tuple.level - 1, average_pairs(&cells)))
}

/// `{δ_{ζ_t}}` for a sampled path, rendered on [`DEFAULT_BINS`] cells.
pub fn dirac_path_measure(path: &CirclePath) -> Result<DrivingMeasure> {
    DrivingMeasure::from_path(path.clone(), DEFAULT_BINS)
}

/// Projective-limit distance `Σ_{n ≤ depth} 2^{−n} max_i W1(P_n^i ρ, P_n^i σ)`.
pub fn dn_distance(rho: &DrivingMeasure, sigma: &DrivingMeasure, depth: u32) -> Result<f64> {
    if depth > MAX_DEPTH {
        return Err(invalid("depth", format!("must be <= {MAX_DEPTH}, got {depth}")));
    }
    let mut total = 0.0;
    for n in 0..=depth {
        let (a, b) = (project_pn(rho, n)?, project_pn(sigma, n)?);
        let m = common_grid(a.entries.iter().chain(&b.entries));
        let worst = a
            .entries
            .iter()
            .zip(&b.entries)
            .map(|(x, y)| w1_bins(&rebin_measure(x, m), &rebin_measure(y, m)))
            .fold(0.0, f64::max);
        total += worst / (1u64 << n) as f64;
    }
    Ok(total)
}

fn rebin_measure(mu: &MeasureS1, m: usize) -> Vec<f64> {
    match mu.bin_masses() {
        Some(ms) => rebin(ms, m),
        None => mu.to_bins(m),
    }
}
