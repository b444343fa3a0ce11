//! Radial Loewner evolution driven by points and by measures.
//!
//! The forward flow solves `∂_t g = −g ∫ (g+ζ)/(g−ζ) ρ_t(dζ)` from `g_0 = z`
//! until the point is swallowed; the inverse map `f_t` is obtained by running
//! the reversed ODE `∂_s h = h ∫ (h+ζ)/(h−ζ) ρ_{t−s}(dζ)` from `h_0 = z`
//! over `s ∈ [0, t]`. Driving is constant on each slab or path step, and the
//! integrator restarts at every such boundary.

mod field;
mod hull;
mod ode;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::measures::DrivingMeasure;
use field::{Kernel, Schedule};
use ode::{Outcome, Tolerances};

pub use hull::{
    write_distance_table, write_trace_csv, HullGrid, HullPoint, PolarGrid, ProbeStatus, TraceEstimate,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    /// Swallowing trigger `|g − ζ| <` this, for atomic driving.
    pub tol_singularity: f64,
    /// Swallowing trigger `|g| > 1 −` this.
    pub tol_boundary: f64,
    /// Step cap `c·|g − ζ|²` near atoms.
    pub singular_step_factor: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-13,
            max_step: 0.1,
            tol_singularity: 1e-5,
            tol_boundary: 1e-6,
            singular_step_factor: 0.1,
        }
    }
}

impl SolverSettings {
    /// Tighter tolerances for derivative-at-origin checks.
    pub fn precise() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-15,
            ..Self::default()
        }
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances {
            rtol: self.rtol,
            atol: self.atol,
            max_step: self.max_step,
        }
    }
}

/// Why a forward flow stopped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Swallowing {
    /// Came within `tol_singularity` of a driving atom.
    Singularity,
    /// Reached `|g| > 1 − tol_boundary`.
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Survival {
    Swallowed { time: f64, cause: Swallowing },
    Survived,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowResult {
    pub survival: Survival,
    /// `(t, g_t(z))` at the requested sample times reached before swallowing.
    pub trajectory: Vec<(f64, Complex64)>,
    /// Value at the stopping time (`t_end` or the swallowing time).
    pub last: Complex64,
}

impl FlowResult {
    pub fn survival_time(&self) -> Option<f64> {
        match self.survival {
            Survival::Swallowed { time, .. } => Some(time),
            Survival::Survived => None,
        }
    }

    pub fn blew_up(&self) -> bool {
        matches!(self.survival, Survival::Swallowed { .. })
    }
}

/// Anything that can be evaluated as a normalized chain `f(z, t)`.
pub trait ChainMap: Sync {
    fn eval(&self, z: Complex64, t: f64) -> Result<Complex64>;
}

/// The chain `f(z, t) = e^{−t} z` generated by uniform driving.
#[derive(Clone, Copy, Debug, Default)]
pub struct DecayChain;

impl ChainMap for DecayChain {
    fn eval(&self, z: Complex64, t: f64) -> Result<Complex64> {
        Ok(z * (-t).exp())
    }
}

/// The normalized chain generated by a driving measure on `[0, t_max]`.
#[derive(Clone, Debug)]
pub struct SubordinationChain {
    driving: DrivingMeasure,
    schedule: Schedule,
    t_max: f64,
    settings: SolverSettings,
}

fn check_disk(z: Complex64) -> Result<()> {
    if z.is_finite() && z.norm() < 1.0 {
        Ok(())
    } else {
        Err(Error::OutsideDisk { re: z.re, im: z.im })
    }
}

impl SubordinationChain {
    pub fn new(driving: DrivingMeasure, t_max: f64, settings: SolverSettings) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(invalid("t_max", format!("must be finite and positive, got {t_max}")));
        }
        let schedule = Schedule::new(&driving);
        if t_max > schedule.horizon() {
            return Err(invalid(
                "t_max",
                format!("driving is only defined up to {}", schedule.horizon()),
            ));
        }
        Ok(Self {
            driving,
            schedule,
            t_max,
            settings,
        })
    }

    pub fn driving(&self) -> &DrivingMeasure {
        &self.driving
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn with_settings(&self, settings: SolverSettings) -> Self {
        Self {
            settings,
            ..self.clone()
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if (0.0..=self.t_max).contains(&t) {
            Ok(())
        } else {
            Err(Error::TimeOutOfRange { t, t_max: self.t_max })
        }
    }

    pub fn is_point_driven(&self) -> bool {
        self.schedule.is_point_driven()
    }

    fn swallowed_by(&self, kernel: &Kernel, g: Complex64) -> Option<Swallowing> {
        if kernel.singular_distance(g) < self.settings.tol_singularity {
            Some(Swallowing::Singularity)
        } else if !(g.norm() <= 1.0 - self.settings.tol_boundary) {
            Some(Swallowing::Boundary)
        } else {
            None
        }
    }

    /// Runs `g_t(z)` forward up to `t_end`, recording the requested sample
    /// times, and stops at the first swallowing trigger.
    pub fn forward_flow(&self, z: Complex64, t_end: f64, sample_times: &[f64]) -> Result<FlowResult> {
        check_disk(z)?;
        self.check_time(t_end)?;
        let mut samples: Vec<f64> = sample_times.iter().copied().filter(|s| (0.0..=t_end).contains(s)).collect();
        samples.sort_by(f64::total_cmp);
        samples.dedup();

        let mut trajectory = Vec::with_capacity(samples.len());
        let mut next_sample = samples.iter().peekable();
        while next_sample.peek().is_some_and(|&&s| s == 0.0) {
            trajectory.push((0.0, z));
            next_sample.next();
        }
        if z == Complex64::new(0.0, 0.0) {
            // fixed point of every Loewner vector field
            trajectory.extend(next_sample.map(|&s| (s, z)));
            return Ok(FlowResult {
                survival: Survival::Survived,
                trajectory,
                last: z,
            });
        }

        let tol = self.settings.tolerances();
        let mut g = z;
        let mut h = 1e-3;
        let mut bounds: Vec<f64> = samples.iter().copied().filter(|&s| s > 0.0).collect();
        bounds.push(t_end);
        for seg in self.schedule.segments(0.0, t_end) {
            let kernel = seg.kernel.get();
            if let Some(cause) = self.swallowed_by(kernel, g) {
                return Ok(FlowResult {
                    survival: Survival::Swallowed { time: seg.start, cause },
                    trajectory,
                    last: g,
                });
            }
            let f = |w: Complex64| -w * kernel.herglotz(w);
            let factor = self.settings.singular_step_factor;
            let cap = |w: Complex64| {
                let d = kernel.singular_distance(w);
                if d.is_finite() {
                    factor * d * d
                } else {
                    0.5 * (1.0 - w.norm()).max(1e-12)
                }
            };
            let stop = |w: Complex64| self.swallowed_by(kernel, w).is_some();
            // split the segment at sample times
            let mut t = seg.start;
            let pieces = bounds
                .iter()
                .copied()
                .filter(|&s| s > seg.start && s < seg.end)
                .chain(std::iter::once(seg.end));
            for stop_at in pieces {
                match ode::integrate(&f, &cap, &stop, g, t, stop_at, h, &tol) {
                    Outcome::Reached { y, h_next } => {
                        g = y;
                        h = h_next;
                        t = stop_at;
                        while next_sample.peek().is_some_and(|&&s| s == t) {
                            trajectory.push((t, g));
                            next_sample.next();
                        }
                    }
                    Outcome::Stopped { t: hit, y } => {
                        let cause = self.swallowed_by(kernel, y).unwrap_or(Swallowing::Boundary);
                        return Ok(FlowResult {
                            survival: Survival::Swallowed { time: hit, cause },
                            trajectory,
                            last: y,
                        });
                    }
                    Outcome::Underflow { t, h } => return Err(Error::StepUnderflow { t, h }),
                }
            }
        }
        Ok(FlowResult {
            survival: Survival::Survived,
            trajectory,
            last: g,
        })
    }

    /// `g_t(z)`, or `None` when `z` is swallowed by time `t`.
    pub fn g(&self, z: Complex64, t: f64) -> Result<Option<Complex64>> {
        let flow = self.forward_flow(z, t, &[])?;
        Ok((!flow.blew_up()).then_some(flow.last))
    }

    /// Survival time `T_z` if it is at most `t_end`.
    pub fn survival_time(&self, z: Complex64, t_end: f64) -> Result<Option<f64>> {
        Ok(self.forward_flow(z, t_end, &[])?.survival_time())
    }

    /// The inverse map `f_t(z)` by the reversed flow.
    pub fn inverse_map(&self, z: Complex64, t: f64) -> Result<Complex64> {
        check_disk(z)?;
        self.check_time(t)?;
        if z == Complex64::new(0.0, 0.0) {
            return Ok(z);
        }
        let tol = self.settings.tolerances();
        let mut h_val = z;
        let mut h = 1e-3;
        let mut s = 0.0;
        for seg in self.schedule.segments(0.0, t).iter().rev() {
            let kernel = seg.kernel.get();
            let f = |w: Complex64| w * kernel.herglotz(w);
            let len = seg.end - seg.start;
            match ode::integrate(&f, &|_| f64::INFINITY, &|_| false, h_val, s, s + len, h, &tol) {
                Outcome::Reached { y, h_next } => {
                    h_val = y;
                    h = h_next;
                }
                Outcome::Stopped { .. } => unreachable!("reverse flow has no stop condition"),
                Outcome::Underflow { t, h } => return Err(Error::StepUnderflow { t, h }),
            }
            s += len;
        }
        Ok(h_val)
    }

    /// `g_t'(0)` from four samples on the circle of radius `radius`:
    /// `(1/4r) Σ_k i^{−k} g_t(r i^k)`, which cancels the quadratic and cubic
    /// Taylor terms.
    pub fn g_derivative_at_origin(&self, t: f64, radius: f64) -> Result<f64> {
        let d = four_point_derivative(radius, |z| {
            self.g(z, t)?.ok_or_else(|| invalid("radius", "probe point swallowed"))
        })?;
        Ok(d.re)
    }

    /// `f_t'(0)` with the same four-point stencil.
    pub fn f_derivative_at_origin(&self, t: f64, radius: f64) -> Result<f64> {
        Ok(four_point_derivative(radius, |z| self.inverse_map(z, t))?.re)
    }

    fn point_driver_before(&self, t: f64) -> Result<Complex64> {
        self.schedule.kernel_before(t).get().single_atom().ok_or(Error::NotPointDriven)
    }

    /// `f_t(r·ζ_t)`, the approach to the trace point `γ_t` along the radius
    /// through the current driving point.
    pub fn trace_point(&self, t: f64, r: f64) -> Result<Complex64> {
        if !self.is_point_driven() {
            return Err(Error::NotPointDriven);
        }
        if !(0.0..1.0).contains(&r) {
            return Err(invalid("r", format!("approach radius must lie in [0, 1), got {r}")));
        }
        let zeta = self.point_driver_before(t)?;
        self.inverse_map(zeta * r, t)
    }

    /// Two-radius trace estimate at `r ∈ {0.99, 0.999}` with the gauge
    /// `|f(0.999ζ) − f(0.99ζ)|`. The Richardson step assumes
    /// `f_t(rζ) − γ_t = O((1 − r)²)`, the behaviour at the tip of a slit.
    pub fn trace_refined(&self, t: f64) -> Result<TraceEstimate> {
        const R1: f64 = 0.99;
        const R2: f64 = 0.999;
        let a = self.trace_point(t, R1)?;
        let b = self.trace_point(t, R2)?;
        let (s1, s2) = ((1.0 - R1).powi(2), (1.0 - R2).powi(2));
        Ok(TraceEstimate {
            t,
            coarse: a,
            fine: b,
            extrapolated: (b * s1 - a * s2) / (s1 - s2),
            gauge: (b - a).norm(),
        })
    }
}

impl ChainMap for SubordinationChain {
    fn eval(&self, z: Complex64, t: f64) -> Result<Complex64> {
        self.inverse_map(z, t)
    }
}

fn four_point_derivative(radius: f64, mut f: impl FnMut(Complex64) -> Result<Complex64>) -> Result<Complex64> {
    if !(radius > 0.0 && radius < 1.0) {
        return Err(invalid("radius", "must lie in (0, 1)"));
    }
    let units = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ];
    let mut acc = Complex64::new(0.0, 0.0);
    for u in units {
        acc += f(u * radius)? / u;
    }
    Ok(acc / (4.0 * radius))
}

/// Probe layout for [`caratheodory_distance`]: the origin plus `radial`
/// circles `|z| = r_compact·k/radial` with `angular` points each.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompactProbes {
    pub radial: usize,
    pub angular: usize,
}

impl Default for CompactProbes {
    fn default() -> Self {
        Self { radial: 4, angular: 8 }
    }
}

impl CompactProbes {
    pub fn points(&self, r_compact: f64) -> Vec<Complex64> {
        let mut pts = vec![Complex64::new(0.0, 0.0)];
        for k in 1..=self.radial {
            let r = r_compact * k as f64 / self.radial as f64;
            for j in 0..self.angular {
                pts.push(Complex64::from_polar(r, std::f64::consts::TAU * j as f64 / self.angular as f64));
            }
        }
        pts
    }
}

/// `max |f_a(z,t) − f_b(z,t)|` over the default probes of `|z| ≤ r_compact`
/// and the times `k/time_grid`, `k = 0..=time_grid`.
pub fn caratheodory_distance(
    a: &dyn ChainMap,
    b: &dyn ChainMap,
    r_compact: f64,
    time_grid: usize,
) -> Result<f64> {
    caratheodory_distance_with(a, b, r_compact, time_grid, CompactProbes::default())
}

pub fn caratheodory_distance_with(
    a: &dyn ChainMap,
    b: &dyn ChainMap,
    r_compact: f64,
    time_grid: usize,
    probes: CompactProbes,
) -> Result<f64> {
    if !(r_compact > 0.0 && r_compact < 1.0) {
        return Err(invalid("r_compact", "must lie in (0, 1)"));
    }
    if time_grid == 0 {
        return Err(invalid("time_grid", "must be at least 1"));
    }
    let points = probes.points(r_compact);
    let jobs: Vec<(f64, Complex64)> = (0..=time_grid)
        .flat_map(|k| {
            let t = k as f64 / time_grid as f64;
            points.iter().map(move |&z| (t, z))
        })
        .collect();
    let gaps: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(t, z)| Ok((a.eval(z, t)? - b.eval(z, t)?).norm()))
        .collect();
    let mut worst: f64 = 0.0;
    for g in gaps {
        worst = worst.max(g?);
    }
    Ok(worst)
}
