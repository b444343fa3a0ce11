use std::f64::consts::TAU;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SubordinationChain;
use crate::error::{invalid, Result};
use crate::io::{fmt17, write_csv};

/// Polar probe grid of the disk: radii `(i + ½)/radial`, angles `2πj/angular`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub radial: usize,
    pub angular: usize,
}

impl PolarGrid {
    pub fn square(n: usize) -> Self {
        Self { radial: n, angular: n }
    }

    pub fn points(&self) -> Vec<Complex64> {
        let mut pts = Vec::with_capacity(self.radial * self.angular);
        for i in 0..self.radial {
            let r = (i as f64 + 0.5) / self.radial as f64;
            for j in 0..self.angular {
                pts.push(Complex64::from_polar(r, TAU * j as f64 / self.angular as f64));
            }
        }
        pts
    }

    /// Radial spacing of the grid.
    pub fn cell(&self) -> f64 {
        1.0 / self.radial as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeStatus {
    Alive,
    Swallowed,
    /// The solver failed before deciding.
    Undetermined,
}

impl ProbeStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProbeStatus::Alive => "alive",
            ProbeStatus::Swallowed => "swallowed",
            ProbeStatus::Undetermined => "undetermined",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullPoint {
    pub z: Complex64,
    pub survival_time: Option<f64>,
    pub status: ProbeStatus,
}

/// Classification of a probe grid at time `t` into hull and surviving domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullGrid {
    pub t: f64,
    pub grid: PolarGrid,
    pub points: Vec<HullPoint>,
    pub undetermined: usize,
}

impl HullGrid {
    pub fn swallowed(&self) -> impl Iterator<Item = &HullPoint> {
        self.points.iter().filter(|p| p.status == ProbeStatus::Swallowed)
    }

    /// Columns `re, im, survival_time, status`; survivors get an empty
    /// survival time.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_csv(
            path,
            &["re", "im", "survival_time", "status"],
            self.points.iter().map(|p| {
                vec![
                    fmt17(p.z.re),
                    fmt17(p.z.im),
                    p.survival_time.map(fmt17).unwrap_or_default(),
                    p.status.as_str().to_string(),
                ]
            }),
        )
    }
}

/// Trace estimate at one time from approach radii 0.99 and 0.999.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEstimate {
    pub t: f64,
    pub coarse: Complex64,
    pub fine: Complex64,
    pub extrapolated: Complex64,
    pub gauge: f64,
}

/// Writes a trace polyline with columns `t, re, im, error_gauge`, using the
/// extrapolated point.
pub fn write_trace_csv(path: &Path, trace: &[TraceEstimate]) -> Result<()> {
    write_csv(
        path,
        &["t", "re", "im", "error_gauge"],
        trace.iter().map(|e| {
            vec![
                fmt17(e.t),
                fmt17(e.extrapolated.re),
                fmt17(e.extrapolated.im),
                fmt17(e.gauge),
            ]
        }),
    )
}

impl SubordinationChain {
    /// Survival classification of every probe point up to time `t`.
    pub fn hull_grid(&self, t: f64, grid: PolarGrid) -> Result<HullGrid> {
        self.check_time(t)?;
        if grid.radial == 0 || grid.angular == 0 {
            return Err(invalid("grid", "probe grid needs at least one radius and one angle"));
        }
        let points: Vec<HullPoint> = grid
            .points()
            .into_par_iter()
            .map(|z| match self.forward_flow(z, t, &[]) {
                Ok(flow) => match flow.survival_time() {
                    Some(time) => HullPoint {
                        z,
                        survival_time: Some(time),
                        status: ProbeStatus::Swallowed,
                    },
                    None => HullPoint {
                        z,
                        survival_time: None,
                        status: ProbeStatus::Alive,
                    },
                },
                Err(_) => HullPoint {
                    z,
                    survival_time: None,
                    status: ProbeStatus::Undetermined,
                },
            })
            .collect();
        let undetermined = points.iter().filter(|p| p.status == ProbeStatus::Undetermined).count();
        Ok(HullGrid {
            t,
            grid,
            points,
            undetermined,
        })
    }

    /// Trace estimates at `k·t_end/steps`, `k = 0..=steps`.
    pub fn trace_polyline(&self, t_end: f64, steps: usize) -> Result<Vec<TraceEstimate>> {
        self.check_time(t_end)?;
        let steps = steps.max(1);
        (0..=steps)
            .into_par_iter()
            .map(|k| self.trace_refined(t_end * k as f64 / steps as f64))
            .collect()
    }
}

/// Writes a chain-distance table with columns `label, distance`.
pub fn write_distance_table(path: &Path, rows: &[(String, f64)]) -> Result<()> {
    write_csv(
        path,
        &["label", "distance"],
        rows.iter().map(|(l, d)| vec![l.clone(), fmt17(*d)]),
    )
}
