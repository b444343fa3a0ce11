//! Dormand–Prince 5(4) for a scalar complex autonomous ODE `y' = F(y)`.

use num_complex::Complex64;

// Butcher tableau (the field is autonomous, so the abscissae are not needed)
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
}

pub(crate) struct StepResult {
    pub y: Complex64,
    pub err: f64,
}

/// One Dormand–Prince step; `err` is the scaled local error estimate.
pub(crate) fn step(f: &impl Fn(Complex64) -> Complex64, y: Complex64, h: f64, tol: &Tolerances) -> StepResult {
    let k1 = f(y);
    let k2 = f(y + h * (A21 * k1));
    let k3 = f(y + h * (A31 * k1 + A32 * k2));
    let k4 = f(y + h * (A41 * k1 + A42 * k2 + A43 * k3));
    let k5 = f(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
    let k6 = f(y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
    let y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
    let k7 = f(y_new);
    let e = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    let scale = tol.atol + tol.rtol * y.norm().max(y_new.norm());
    let err = e.norm() / scale;
    StepResult {
        y: y_new,
        err: if y_new.is_finite() && err.is_finite() { err } else { f64::INFINITY },
    }
}

pub(crate) enum Outcome {
    /// Reached the end of the interval.
    Reached { y: Complex64, h_next: f64 },
    /// `stop` fired; `t` is the located trigger time.
    Stopped { t: f64, y: Complex64 },
    Underflow { t: f64, h: f64 },
}

/// Integrates from `t0` to `t1` with adaptive steps, never exceeding
/// `cap(y)` per step, and halts at the first time `stop(y)` holds.
pub(crate) fn integrate(
    f: &impl Fn(Complex64) -> Complex64,
    cap: &impl Fn(Complex64) -> f64,
    stop: &impl Fn(Complex64) -> bool,
    mut y: Complex64,
    t0: f64,
    t1: f64,
    h_guess: f64,
    tol: &Tolerances,
) -> Outcome {
    let mut t = t0;
    let mut h = h_guess.min(tol.max_step);
    let h_floor = 1e-15 * t1.abs().max(1.0);
    while t < t1 {
        let remaining = t1 - t;
        let try_h = h.min(remaining).min(cap(y)).min(tol.max_step);
        if try_h < h_floor && try_h < remaining {
            return Outcome::Underflow { t, h: try_h };
        }
        let s = step(f, y, try_h, tol);
        if s.err <= 1.0 {
            if stop(s.y) {
                let (tau, y_hit) = locate(f, stop, y, try_h, tol);
                return Outcome::Stopped { t: t + tau, y: y_hit };
            }
            t = if try_h >= remaining { t1 } else { t + try_h };
            y = s.y;
            let factor = if s.err == 0.0 { 5.0 } else { (0.9 * s.err.powf(-0.2)).clamp(0.2, 5.0) };
            h = try_h * factor;
        } else {
            let factor = if s.err.is_finite() { (0.9 * s.err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
            h = try_h * factor;
            if h < h_floor {
                return Outcome::Underflow { t, h };
            }
        }
    }
    Outcome::Reached { y, h_next: h }
}

/// Bisection on the step length for the first trigger of `stop`.
fn locate(
    f: &impl Fn(Complex64) -> Complex64,
    stop: &impl Fn(Complex64) -> bool,
    y: Complex64,
    h: f64,
    tol: &Tolerances,
) -> (f64, Complex64) {
    let (mut lo, mut hi) = (0.0, h);
    let mut y_hi = step(f, y, h, tol).y;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = step(f, y, mid, tol);
        if !s.y.is_finite() || stop(s.y) {
            hi = mid;
            y_hi = s.y;
        } else {
            lo = mid;
        }
    }
    (hi, y_hi)
}
