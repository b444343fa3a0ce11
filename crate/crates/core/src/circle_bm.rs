//! Circular Brownian motion `ζ_t = exp(i W_{κt})` and its occupation statistics.
//!
//! Paths are stored as unwrapped angles on a uniform time grid. Wrapping onto
//! the circle happens only when binning, so the Gaussian increment structure
//! of the stored angles is preserved exactly.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`), seeded from a 64-bit seed
//! and a 64-bit stream index. Normal variates use the ziggurat sampler of
//! `rand_distr::StandardNormal`. Both algorithms are platform independent, so
//! a `(seed, stream)` pair reproduces the same path everywhere.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::measures::MeasureS1;

/// Largest admissible `κ·Δt`; a single increment then has standard deviation
/// at most `π/8`.
pub const MAX_KAPPA_DT: f64 = (PI / 8.0) * (PI / 8.0);

/// Steps per unit of `κ·t` used by the command line and the experiment
/// runners.
pub const STEPS_PER_KAPPA_TIME: f64 = 64.0;

/// Smallest step count satisfying the `n ≥ ⌈64·κ·t_max⌉` rule (at least one).
pub fn min_steps(kappa: f64, t_max: f64) -> usize {
    ((STEPS_PER_KAPPA_TIME * kappa * t_max).ceil() as usize).max(1)
}

/// Deterministic generator for `(seed, stream)`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A sampled circular Brownian trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CirclePath {
    kappa: f64,
    times: Vec<f64>,
    angles: Vec<f64>,
    seed: u64,
    stream: u64,
}

impl CirclePath {
    /// Builds a path from explicit data. `times` must start at 0 and be
    /// strictly increasing; `angles[0]` must be 0.
    pub fn from_parts(kappa: f64, times: Vec<f64>, angles: Vec<f64>) -> Result<Self> {
        if !kappa.is_finite() || kappa < 0.0 {
            return Err(invalid("kappa", format!("must be finite and >= 0, got {kappa}")));
        }
        if times.len() < 2 || times.len() != angles.len() {
            return Err(invalid("times", "need at least two samples and one angle per time"));
        }
        if times[0] != 0.0 || angles[0] != 0.0 {
            return Err(invalid("times", "path must start at t = 0 with angle 0"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || angles.iter().any(|a| !a.is_finite()) {
            return Err(invalid("times", "times must be strictly increasing and angles finite"));
        }
        Ok(Self {
            kappa,
            times,
            angles,
            seed: 0,
            stream: 0,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Unwrapped angles, one per time sample.
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().expect("non-empty grid")
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    /// Index `k` of the step `[t_k, t_{k+1})` containing `t`; `t = t_max`
    /// maps to the last step.
    pub fn step_index(&self, t: f64) -> usize {
        let n = self.n_steps();
        match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            k => (k - 1).min(n - 1),
        }
    }

    /// Index of the step whose closed right end is `t`, i.e. the driving
    /// value in force just before `t`. `t = 0` gives 0.
    pub fn left_limit_index(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&s| s < t);
        k.saturating_sub(1).min(self.n_steps() - 1)
    }

    /// Wrapped position `exp(i·angle)` at sample `k`.
    pub fn position(&self, k: usize) -> num_complex::Complex64 {
        num_complex::Complex64::from_polar(1.0, self.angles[k])
    }
}

/// Samples circular Brownian motion with variance `kappa` on `[0, t_max]`
/// using stream 0 of `seed`.
pub fn sample_circle_bm(kappa: f64, n_steps: usize, t_max: f64, seed: u64) -> Result<CirclePath> {
    sample_circle_bm_stream(kappa, n_steps, t_max, seed, 0)
}

/// As [`sample_circle_bm`] on an explicit generator stream.
pub fn sample_circle_bm_stream(
    kappa: f64,
    n_steps: usize,
    t_max: f64,
    seed: u64,
    stream: u64,
) -> Result<CirclePath> {
    if n_steps == 0 {
        return Err(invalid("n_steps", "must be at least 1"));
    }
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(invalid("kappa", format!("must be finite and >= 0, got {kappa}")));
    }
    if !t_max.is_finite() || t_max <= 0.0 {
        return Err(invalid("t_max", format!("must be finite and > 0, got {t_max}")));
    }
    let dt = t_max / n_steps as f64;
    if kappa * dt > MAX_KAPPA_DT {
        return Err(invalid(
            "n_steps",
            format!(
                "kappa*dt = {} exceeds (pi/8)^2; use at least {} steps",
                kappa * dt,
                (kappa * t_max / MAX_KAPPA_DT).ceil()
            ),
        ));
    }
    let sd = (kappa * dt).sqrt();
    let mut rng = rng_for(seed, stream);
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut angles = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    angles.push(0.0);
    let mut angle = 0.0;
    for k in 1..=n_steps {
        let z: f64 = rng.sample(StandardNormal);
        angle += sd * z;
        times.push(if k == n_steps { t_max } else { k as f64 * dt });
        angles.push(angle);
    }
    Ok(CirclePath {
        kappa,
        times,
        angles,
        seed,
        stream,
    })
}

/// Bin index of an (unwrapped) angle on an `m`-cell grid of `[0, 2π)`.
pub fn angle_bin(angle: f64, m: usize) -> usize {
    let x = angle.rem_euclid(TAU) / TAU * m as f64;
    (x as usize).min(m - 1)
}

/// Time spent by the path in each angular cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupationMeasure {
    pub total_mass: f64,
    pub bins: Vec<f64>,
}

impl OccupationMeasure {
    pub fn m_bins(&self) -> usize {
        self.bins.len()
    }
}

/// Occupation masses of `path` over the window `[a, b]`, with the angle held
/// at its left-endpoint value on every step.
pub(crate) fn occupation_window(path: &CirclePath, a: f64, b: f64, m: usize) -> Vec<f64> {
    let mut bins = vec![0.0; m];
    if b <= a {
        return bins;
    }
    let times = path.times();
    let start = path.step_index(a);
    for k in start..path.n_steps() {
        let (s0, s1) = (times[k], times[k + 1]);
        if s0 >= b {
            break;
        }
        let overlap = s1.min(b) - s0.max(a);
        if overlap > 0.0 {
            bins[angle_bin(path.angles()[k], m)] += overlap;
        }
    }
    bins
}

fn check_window(path: &CirclePath, t: f64, m_bins: usize) -> Result<()> {
    if m_bins == 0 {
        return Err(invalid("m_bins", "must be at least 1"));
    }
    if !(0.0..=path.t_max()).contains(&t) {
        return Err(Error::TimeOutOfRange {
            t,
            t_max: path.t_max(),
        });
    }
    Ok(())
}

/// Occupation measure of the path up to time `t` on `m_bins` equal cells.
pub fn occupation_measure(path: &CirclePath, t: f64, m_bins: usize) -> Result<OccupationMeasure> {
    check_window(path, t, m_bins)?;
    Ok(OccupationMeasure {
        total_mass: t,
        bins: occupation_window(path, 0.0, t, m_bins),
    })
}

/// Normalized occupation `oc_t / t`.
pub fn average_occupation(occ: &OccupationMeasure) -> Result<MeasureS1> {
    if !(occ.total_mass > 0.0) {
        return Err(invalid("total_mass", "average occupation needs positive elapsed time"));
    }
    let inv = 1.0 / occ.total_mass;
    MeasureS1::from_bin_masses(occ.bins.iter().map(|v| v * inv).collect())
}

/// Binned local time: occupation mass per unit arc length.
pub fn local_time_field(path: &CirclePath, t: f64, m_bins: usize) -> Result<Vec<f64>> {
    let occ = occupation_measure(path, t, m_bins)?;
    let width = TAU / m_bins as f64;
    Ok(occ.bins.into_iter().map(|v| v / width).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_kappa_stays_at_one() {
        let p = sample_circle_bm(0.0, 100, 1.0, 3).unwrap();
        assert!(p.angles().iter().all(|&a| a == 0.0));
        assert_eq!(p.position(57), num_complex::Complex64::new(1.0, 0.0));
        assert_eq!(p.t_max(), 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(sample_circle_bm(1.0, 0, 1.0, 0).is_err());
        assert!(sample_circle_bm(f64::NAN, 10, 1.0, 0).is_err());
        assert!(sample_circle_bm(f64::INFINITY, 10, 1.0, 0).is_err());
        assert!(sample_circle_bm(-1.0, 10, 1.0, 0).is_err());
        // kappa*dt = 10 is far too coarse
        assert!(sample_circle_bm(100.0, 10, 1.0, 0).is_err());
    }

    #[test]
    fn same_seed_same_bits() {
        let a = sample_circle_bm(7.5, 1000, 1.0, 99).unwrap();
        let b = sample_circle_bm(7.5, 1000, 1.0, 99).unwrap();
        let c = sample_circle_bm_stream(7.5, 1000, 1.0, 99, 1).unwrap();
        assert_eq!(a.angles(), b.angles());
        assert_ne!(a.angles(), c.angles());
    }

    #[test]
    fn terminal_variance_matches_kappa_t() {
        let n = 10_000;
        let finals: Vec<f64> = (0..n)
            .map(|s| *sample_circle_bm(4.0, 256, 1.0, s).unwrap().angles().last().unwrap())
            .collect();
        let mean = finals.iter().sum::<f64>() / n as f64;
        let var = finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // standard error of a Gaussian sample variance: sigma^2 * sqrt(2/(n-1))
        let se = 4.0 * (2.0 / (n - 1) as f64).sqrt();
        assert!((var - 4.0).abs() < 3.0 * se, "var = {var}");
    }

    #[test]
    fn dirac_occupation_for_constant_path() {
        let p = sample_circle_bm(0.0, 64, 1.0, 0).unwrap();
        let occ = occupation_measure(&p, 1.0, 16).unwrap();
        assert_eq!(occ.total_mass, 1.0);
        assert!((occ.bins[0] - 1.0).abs() < 1e-12);
        assert!(occ.bins[1..].iter().all(|&v| v == 0.0));
        let field = local_time_field(&p, 1.0, 4).unwrap();
        assert!((field[0] - 2.0 / PI).abs() < 1e-12);
        assert!(field[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn occupation_mass_is_elapsed_time() {
        let p = sample_circle_bm(50.0, 4000, 1.0, 11).unwrap();
        for &t in &[0.0, 0.1234, 0.5, 0.99999, 1.0] {
            let occ = occupation_measure(&p, t, 37).unwrap();
            let s: f64 = occ.bins.iter().sum();
            assert!((s - t).abs() <= 1e-12 * t.max(1.0), "t={t} sum={s}");
            assert!(occ.bins.iter().all(|&v| v >= 0.0));
            let field = local_time_field(&p, t, 37).unwrap();
            let integral: f64 = field.iter().sum::<f64>() * TAU / 37.0;
            assert!((integral - t).abs() <= 1e-12 * t.max(1.0));
        }
        assert!(occupation_measure(&p, 1.5, 8).is_err());
        assert!(occupation_measure(&p, -0.1, 8).is_err());
    }

    #[test]
    fn average_occupation_normalizes() {
        let occ = OccupationMeasure {
            total_mass: 0.5,
            bins: vec![0.125; 4],
        };
        let mu = average_occupation(&occ).unwrap();
        assert_eq!(mu.bin_masses().unwrap(), &[0.25; 4]);
        let empty = OccupationMeasure {
            total_mass: 0.0,
            bins: vec![0.0; 4],
        };
        assert!(average_occupation(&empty).is_err());

        let p = sample_circle_bm(20.0, 2000, 1.0, 5).unwrap();
        let mu = average_occupation(&occupation_measure(&p, 0.7, 64).unwrap()).unwrap();
        assert!((mu.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn step_index_lookup() {
        let p = sample_circle_bm(0.1, 4, 1.0, 0).unwrap();
        assert_eq!(p.step_index(0.0), 0);
        assert_eq!(p.step_index(0.25), 1);
        assert_eq!(p.step_index(0.3), 1);
        assert_eq!(p.step_index(1.0), 3);
        assert_eq!(p.left_limit_index(0.0), 0);
        assert_eq!(p.left_limit_index(0.25), 0);
        assert_eq!(p.left_limit_index(0.26), 1);
        assert_eq!(p.left_limit_index(1.0), 3);
    }
}
