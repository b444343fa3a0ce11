//! Herglotz integrals `H(g) = ∫ (g+ζ)/(g−ζ) ρ(dζ)` for the supported kinds of
//! circle measure, and the time segmentation of a driving measure into
//! stretches where `ρ_t` is constant.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::circle_bm::CirclePath;
use crate::measures::{DrivingMeasure, MeasureS1};

/// A circle measure prepared for repeated Herglotz evaluation.
#[derive(Clone, Debug)]
pub(crate) enum Kernel {
    /// Normalized arc length; `H ≡ −1` on the disk.
    Uniform,
    Atoms(Vec<(Complex64, f64)>),
    /// Piecewise-constant density: cell masses and the `m + 1` cell
    /// boundary points `exp(2πij/m)`.
    Cells { masses: Vec<f64>, edges: Vec<Complex64> },
}

impl Kernel {
    pub fn new(mu: &MeasureS1) -> Self {
        match mu {
            MeasureS1::Atoms { atoms } => Kernel::Atoms(
                atoms
                    .iter()
                    .map(|a| (Complex64::from_polar(1.0, a.angle), a.weight))
                    .collect(),
            ),
            MeasureS1::Density { masses } => {
                let first = masses[0];
                if masses.iter().all(|&v| v == first) {
                    return Kernel::Uniform;
                }
                let m = masses.len();
                let edges = (0..=m)
                    .map(|j| Complex64::from_polar(1.0, TAU * (j % m) as f64 / m as f64))
                    .collect();
                Kernel::Cells {
                    masses: masses.clone(),
                    edges,
                }
            }
        }
    }

    pub fn point(zeta: Complex64) -> Self {
        Kernel::Atoms(vec![(zeta, 1.0)])
    }

    /// `H(g)` for `|g| < 1`.
    ///
    /// On a cell `[θ_a, θ_b]` carrying density `w/Δ` the integral is exact:
    /// `(w/Δ)·(Δ − 2·Δarg(ζ − g) + 2i·Δln|g − ζ|)`, where the argument of
    /// `ζ − g` increases monotonically along the arc for interior `g`.
    pub fn herglotz(&self, g: Complex64) -> Complex64 {
        match self {
            Kernel::Uniform => Complex64::new(-1.0, 0.0),
            Kernel::Atoms(atoms) => atoms
                .iter()
                .map(|&(z, w)| w * (g + z) / (g - z))
                .sum(),
            Kernel::Cells { masses, edges } => {
                let m = masses.len();
                let width = TAU / m as f64;
                let mut re = 0.0;
                let mut im = 0.0;
                let d0 = edges[0] - g;
                let (mut arg_prev, mut ln_prev) = (d0.arg(), 0.5 * d0.norm_sqr().ln());
                let (arg_first, ln_first) = (arg_prev, ln_prev);
                for j in 0..m {
                    let (arg_next, ln_next) = if j + 1 == m {
                        (arg_first, ln_first)
                    } else {
                        let d = edges[j + 1] - g;
                        (d.arg(), 0.5 * d.norm_sqr().ln())
                    };
                    let mut swept = arg_next - arg_prev;
                    if swept <= 0.0 {
                        swept += TAU;
                    }
                    let w = masses[j];
                    re += w * (width - 2.0 * swept);
                    im += w * 2.0 * (ln_next - ln_prev);
                    arg_prev = arg_next;
                    ln_prev = ln_next;
                }
                Complex64::new(re, im) / width
            }
        }
    }

    /// Distance from `g` to the nearest atom, `+∞` for densities.
    pub fn singular_distance(&self, g: Complex64) -> f64 {
        match self {
            Kernel::Atoms(atoms) => atoms.iter().map(|(z, _)| (g - z).norm()).fold(f64::INFINITY, f64::min),
            _ => f64::INFINITY,
        }
    }

    pub fn single_atom(&self) -> Option<Complex64> {
        match self {
            Kernel::Atoms(a) if a.len() == 1 => Some(a[0].0),
            _ => None,
        }
    }
}

/// Time-segmented view of a driving measure.
#[derive(Clone, Debug)]
pub(crate) enum Schedule {
    /// Equal slabs on `[0, 1]`; the last slab continues past `t = 1`.
    Slabs(Vec<Kernel>),
    /// Point driving `exp(i·angle_k)` on `[t_k, t_{k+1})`.
    Path(CirclePath),
}

/// A stretch `[start, end)` of constant driving.
pub(crate) struct Segment<'a> {
    pub start: f64,
    pub end: f64,
    pub kernel: KernelRef<'a>,
}

pub(crate) enum KernelRef<'a> {
    Borrowed(&'a Kernel),
    Owned(Kernel),
}

impl KernelRef<'_> {
    pub fn get(&self) -> &Kernel {
        match self {
            KernelRef::Borrowed(k) => k,
            KernelRef::Owned(k) => k,
        }
    }
}

impl Schedule {
    pub fn new(driving: &DrivingMeasure) -> Self {
        match driving {
            DrivingMeasure::Slabs { slabs } => Schedule::Slabs(slabs.iter().map(Kernel::new).collect()),
            DrivingMeasure::Path { path, .. } => Schedule::Path(path.clone()),
        }
    }

    /// Largest time the driving is defined up to.
    pub fn horizon(&self) -> f64 {
        match self {
            Schedule::Slabs(_) => f64::INFINITY,
            Schedule::Path(p) => p.t_max(),
        }
    }

    fn slab_bounds(n: usize, i: usize) -> (f64, f64) {
        let end = if i + 1 == n { f64::INFINITY } else { (i + 1) as f64 / n as f64 };
        (i as f64 / n as f64, end)
    }

    /// Segments covering `[a, b]`, clipped to it, in increasing time order.
    pub fn segments(&self, a: f64, b: f64) -> Vec<Segment<'_>> {
        let mut out = Vec::new();
        if b <= a {
            return out;
        }
        match self {
            Schedule::Slabs(kernels) => {
                let n = kernels.len();
                let first = ((a * n as f64).floor() as usize).min(n - 1);
                for (i, k) in kernels.iter().enumerate().skip(first) {
                    let (s, e) = Self::slab_bounds(n, i);
                    if s >= b {
                        break;
                    }
                    let (lo, hi) = (s.max(a), e.min(b));
                    if hi > lo {
                        out.push(Segment {
                            start: lo,
                            end: hi,
                            kernel: KernelRef::Borrowed(k),
                        });
                    }
                }
            }
            Schedule::Path(path) => {
                let times = path.times();
                for k in path.step_index(a)..path.n_steps() {
                    let (s, e) = (times[k], times[k + 1]);
                    if s >= b {
                        break;
                    }
                    let (lo, hi) = (s.max(a), e.min(b));
                    if hi > lo {
                        out.push(Segment {
                            start: lo,
                            end: hi,
                            kernel: KernelRef::Owned(Kernel::point(path.position(k))),
                        });
                    }
                }
            }
        }
        out
    }

    /// Driving kernel in force just before `t` (at `t = 0`, the initial one).
    pub fn kernel_before(&self, t: f64) -> KernelRef<'_> {
        match self {
            Schedule::Slabs(kernels) => {
                let n = kernels.len();
                let i = if t <= 0.0 { 0 } else { (((t * n as f64).ceil() as usize).max(1) - 1).min(n - 1) };
                KernelRef::Borrowed(&kernels[i])
            }
            Schedule::Path(path) => KernelRef::Owned(Kernel::point(path.position(path.left_limit_index(t)))),
        }
    }

    /// Whether every stretch is driven by a single point mass.
    pub fn is_point_driven(&self) -> bool {
        match self {
            Schedule::Slabs(kernels) => kernels.iter().all(|k| k.single_atom().is_some()),
            Schedule::Path(_) => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force Herglotz integral of a cell density by composite Simpson
    /// on each cell.
    fn simpson_herglotz(masses: &[f64], g: Complex64, per_cell: usize) -> Complex64 {
        let m = masses.len();
        let width = TAU / m as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, w) in masses.iter().enumerate() {
            let h = width / per_cell as f64;
            let a = j as f64 * width;
            let f = |t: f64| {
                let z = Complex64::from_polar(1.0, t);
                (g + z) / (g - z)
            };
            let mut s = f(a) + f(a + width);
            for k in 1..per_cell {
                s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            acc += s * h / 3.0 * (w / width);
        }
        acc
    }

    #[test]
    fn uniform_cells_give_minus_one() {
        let mut masses = vec![1.0 / 16.0; 16];
        masses[0] += 1e-17; // defeat the uniform shortcut
        let k = Kernel::Cells {
            masses: masses.clone(),
            edges: (0..=16).map(|j| Complex64::from_polar(1.0, TAU * (j % 16) as f64 / 16.0)).collect(),
        };
        for g in [Complex64::new(0.0, 0.0), Complex64::new(0.3, -0.2), Complex64::new(0.999, 0.0)] {
            assert!((k.herglotz(g) + 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn exact_cells_match_simpson() {
        let mu = MeasureS1::cosine(0.7, 12).unwrap();
        let k = Kernel::new(&mu);
        let masses = mu.bin_masses().unwrap();
        for g in [Complex64::new(0.2, 0.1), Complex64::new(-0.5, 0.6), Complex64::new(0.9, 0.05)] {
            let exact = k.herglotz(g);
            let brute = simpson_herglotz(masses, g, 2000);
            assert!((exact - brute).norm() < 1e-9, "{exact} vs {brute}");
        }
    }

    #[test]
    fn atom_kernel() {
        let k = Kernel::point(Complex64::new(1.0, 0.0));
        let g = Complex64::new(0.5, 0.0);
        assert!((k.herglotz(g) - Complex64::new(-3.0, 0.0)).norm() < 1e-15);
        assert!((k.singular_distance(g) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn slab_segments_extend_past_one() {
        let s = Schedule::new(&DrivingMeasure::from_slabs(vec![MeasureS1::uniform(4); 4]).unwrap());
        let segs = s.segments(0.1, 1.7);
        let bounds: Vec<(f64, f64)> = segs.iter().map(|g| (g.start, g.end)).collect();
        assert_eq!(bounds, vec![(0.1, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.7)]);
    }
}
