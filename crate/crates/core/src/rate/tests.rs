use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::circle_bm::{rng_for, sample_circle_bm};
use crate::measures::project_pn;

fn closed_form(a: f64) -> f64 {
    (1.0 - (1.0 - a * a).sqrt()) / 8.0
}

/// `½∫ρ′²/(4ρ) dθ` for `ρ = (1 + a cos θ)/2π` by the periodic trapezoid rule
/// on `n` nodes, using the analytic derivative.
fn trapezoid_oracle(a: f64, n: usize) -> f64 {
    let h = TAU / n as f64;
    let sum: f64 = (0..n)
        .map(|j| {
            let t = j as f64 * h;
            let rho = (1.0 + a * t.cos()) / TAU;
            let drho = -a * t.sin() / TAU;
            drho * drho / (4.0 * rho)
        })
        .sum();
    0.5 * sum * h
}

/// Positive trig polynomial density with coefficients bounded so the
/// minimum stays above `0.1/2π`.
fn trig_density(coeffs: &[(f64, f64)], m: usize) -> MeasureS1 {
    let total: f64 = coeffs.iter().map(|(a, b)| a.abs() + b.abs()).sum();
    let scale = if total > 0.9 { 0.9 / total } else { 1.0 };
    MeasureS1::from_density_fn(m, |t| {
        let mut v = 1.0;
        for (i, (a, b)) in coeffs.iter().enumerate() {
            let k = (i + 1) as f64;
            v += scale * (a * (k * t).cos() + b * (k * t).sin());
        }
        v / TAU
    })
    .unwrap()
}

fn value(r: &RateReport) -> f64 {
    r.value.finite().expect("finite rate")
}

#[test]
fn closed_form_agrees_with_quadrature_oracle() {
    for a in [0.1, 0.5, 0.9] {
        let q = trapezoid_oracle(a, 1 << 14);
        assert!((q - closed_form(a)).abs() / closed_form(a) < 1e-12, "a={a}: {q} vs {}", closed_form(a));
    }
    assert!((closed_form(0.5) - 0.0167468).abs() < 1e-7);
}

#[test]
fn cosine_rates_match_closed_form() {
    for a in [0.1, 0.5, 0.9] {
        let r = dirichlet_rate(&MeasureS1::cosine(a, 256).unwrap()).unwrap();
        let rel = (value(&r) - closed_form(a)).abs() / closed_form(a);
        assert!(rel < 1e-6, "a={a}: rel {rel}");
        assert!(r.diagnostics.certified);
        assert!(r.diagnostics.error_estimate.unwrap() < 1e-6);
    }
}

#[test]
fn uniform_rate_is_zero() {
    for m in [1, 7, 64, 256] {
        assert!(value(&dirichlet_rate(&MeasureS1::uniform(m)).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn singular_inputs_are_infinite() {
    let r = dirichlet_rate(&MeasureS1::dirac(0.0)).unwrap();
    assert_eq!(r.value, RateValue::Infinite);
    let mut masses = vec![1.0 / 63.0; 64];
    masses[10] = 0.0;
    let holed = MeasureS1::from_bin_masses(masses).unwrap();
    assert!(dirichlet_rate(&holed).unwrap().value.is_infinite());
    let opts = DirichletOptions {
        regularize: Some(1e-3),
        ..DirichletOptions::default()
    };
    let reg = dirichlet_rate_with(&holed, &opts).unwrap();
    assert!(value(&reg) > 0.0);
    assert!(!reg.diagnostics.certified);
}

#[test]
fn rejects_non_probability() {
    let half = MeasureS1::from_bin_masses(vec![0.25, 0.25]).unwrap();
    assert!(dirichlet_rate(&half).is_err());
    assert!(variational_rate(&half, 4, &OptimizerSettings::default()).is_err());
}

#[test]
fn grid_rotation_invariance() {
    let mu = trig_density(&[(0.3, -0.2), (0.1, 0.25), (0.0, 0.1)], 128);
    let base = value(&dirichlet_rate(&mu).unwrap());
    for k in [1, 5, 64, 127] {
        let rotated = value(&dirichlet_rate(&mu.rotate_cells(k).unwrap()).unwrap());
        assert!((rotated - base).abs() <= 1e-14 * base);
    }
}

#[test]
fn non_uniform_densities_have_positive_rate() {
    let mut rng = rng_for(11, 0);
    for _ in 0..50 {
        let coeffs: Vec<(f64, f64)> = (0..4).map(|_| (rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3))).collect();
        assert!(value(&dirichlet_rate(&trig_density(&coeffs, 64)).unwrap()) > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn midpoint_convexity(
        a in prop::collection::vec((-0.4f64..0.4, -0.4f64..0.4), 3),
        b in prop::collection::vec((-0.4f64..0.4, -0.4f64..0.4), 3),
    ) {
        let (mu, nu) = (trig_density(&a, 64), trig_density(&b, 64));
        let mid: Vec<f64> = mu.bin_masses().unwrap().iter().zip(nu.bin_masses().unwrap())
            .map(|(x, y)| 0.5 * x + 0.5 * y).collect();
        let mid = MeasureS1::from_bin_masses(mid).unwrap();
        let lhs = value(&dirichlet_rate(&mid).unwrap());
        let rhs = 0.5 * value(&dirichlet_rate(&mu).unwrap()) + 0.5 * value(&dirichlet_rate(&nu).unwrap());
        prop_assert!(lhs <= rhs + 1e-15);
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = rng_for(5, 1);
    let mu = trig_density(&[(0.4, 0.1), (-0.2, 0.2)], 96);
    for degree in [1, 3, 8] {
        let mut w = VariationalWitness::zero(degree);
        for k in 0..degree {
            w.cos[k] = rng.random_range(-0.5..0.5);
            w.sin[k] = rng.random_range(-0.5..0.5);
        }
        let grad = objective_gradient(&mu, &w);
        let h = 1e-5;
        for i in 0..2 * degree {
            let bump = |delta: f64| {
                let mut v = w.clone();
                if i % 2 == 0 {
                    v.cos[i / 2] += delta;
                } else {
                    v.sin[i / 2] += delta;
                }
                objective(&mu, &v)
            };
            let fd = (bump(h) - bump(-h)) / (2.0 * h);
            let scale = grad[i].abs().max(1e-3);
            assert!((fd - grad[i]).abs() / scale < 1e-6, "degree {degree} coeff {i}: {fd} vs {}", grad[i]);
        }
    }
}

#[test]
fn variational_uniform_is_zero_with_zero_witness() {
    let r = variational_rate(&MeasureS1::uniform(64), 16, &OptimizerSettings::default()).unwrap();
    assert_eq!(value(&r), 0.0);
    let w = r.witness.unwrap();
    assert!(w.cos.iter().chain(&w.sin).all(|c| *c == 0.0));
    assert!(r.diagnostics.converged);
}

#[test]
fn variational_matches_dirichlet() {
    for a in [0.1, 0.5, 0.9] {
        let mu = MeasureS1::cosine(a, 256).unwrap();
        let v = variational_rate(&mu, 16, &OptimizerSettings::default()).unwrap();
        let d = value(&dirichlet_rate(&mu).unwrap());
        assert!(v.diagnostics.converged, "{:?}", v.diagnostics);
        assert!((value(&v) - d).abs() / d < 0.01, "a={a}: {} vs {d}", value(&v));
        // the witness approximates h = ½ log ρ, whose first coefficient is positive
        assert!(v.witness.as_ref().unwrap().cos[0] > 0.0);
        assert!(v.witness.unwrap().u(PI) > 0.0);
    }
}

#[test]
fn reported_supremum_dominates_random_witnesses() {
    let mu = MeasureS1::cosine(0.5, 128).unwrap();
    let r = variational_rate(&mu, 8, &OptimizerSettings::default()).unwrap();
    let best = value(&r);
    assert!((objective(&mu, r.witness.as_ref().unwrap()) - best).abs() < 1e-12);
    let mut rng = rng_for(2, 2);
    for _ in 0..200 {
        let mut w = VariationalWitness::zero(8);
        let scale = rng.random_range(0.0..0.6);
        for k in 0..8 {
            w.cos[k] = scale * rng.random_range(-1.0..1.0) / (k + 1) as f64;
            w.sin[k] = scale * rng.random_range(-1.0..1.0) / (k + 1) as f64;
        }
        assert!(objective(&mu, &w) <= best + 1e-12);
    }
}

#[test]
fn variational_rotation_invariance() {
    let mu = trig_density(&[(0.3, 0.2), (-0.1, 0.15)], 128);
    let s = OptimizerSettings::default();
    let base = value(&variational_rate(&mu, 12, &s).unwrap());
    let rot = value(&variational_rate(&mu.rotate_cells(37).unwrap(), 12, &s).unwrap());
    assert!((base - rot).abs() < 1e-9);
}

#[test]
fn degree_bounds() {
    let mu = MeasureS1::uniform(16);
    assert!(variational_rate(&mu, 0, &OptimizerSettings::default()).is_err());
    assert!(variational_rate(&mu, MAX_DEGREE + 1, &OptimizerSettings::default()).is_err());
}

#[test]
fn atomic_variational_does_not_converge() {
    let r = variational_rate(&MeasureS1::dirac(1.0), 4, &OptimizerSettings::default()).unwrap();
    assert!(!r.diagnostics.converged);
    assert!(value(&r) > 1.0);
}

#[test]
fn tuple_rate_examples() {
    let cos = MeasureS1::cosine(0.5, 256).unwrap();
    let uni = LevelTuple::new(2, vec![MeasureS1::uniform(32); 4]).unwrap();
    assert_eq!(value(&tuple_rate(&uni).unwrap()), 0.0);
    let mixed = LevelTuple::new(1, vec![MeasureS1::uniform(256), cos.clone()]).unwrap();
    assert!((value(&tuple_rate(&mixed).unwrap()) - 0.5 * closed_form(0.5)).abs() < 1e-8);
    let atomic = LevelTuple::new(1, vec![cos, MeasureS1::dirac(0.0)]).unwrap();
    assert!(tuple_rate(&atomic).unwrap().value.is_infinite());
}

#[test]
fn energy_examples() {
    assert_eq!(value(&energy(&DrivingMeasure::uniform()).unwrap()), 0.0);
    let rho = DrivingMeasure::from_slabs(vec![MeasureS1::uniform(256), MeasureS1::cosine(0.5, 256).unwrap()]).unwrap();
    assert!((value(&energy(&rho).unwrap()) - 0.5 * closed_form(0.5)).abs() < 1e-8);
    let path = sample_circle_bm(1.0, 64, 1.0, 3).unwrap();
    let bm = DrivingMeasure::from_path(path, 64).unwrap();
    assert!(energy(&bm).unwrap().value.is_infinite());
}

#[test]
fn level_rates_increase_to_the_energy() {
    let slabs: Vec<MeasureS1> = (0..8)
        .map(|i| MeasureS1::cosine(-0.8 + 0.2 * i as f64, 128).unwrap().rotate_cells(9 * i).unwrap())
        .collect();
    let rho = DrivingMeasure::from_slabs(slabs).unwrap();
    let e = value(&energy(&rho).unwrap());
    let mut prev = 0.0;
    for n in 0..=5 {
        let i_n = value(&tuple_rate(&project_pn(&rho, n).unwrap()).unwrap());
        assert!(prev <= i_n + 1e-12, "n={n}: {prev} > {i_n}");
        assert!(i_n <= e + 1e-12);
        if n >= 3 {
            assert_eq!(i_n, e);
        }
        prev = i_n;
    }
}

#[test]
fn tree_sum_is_pairwise() {
    assert_eq!(tree_sum(&[]), 0.0);
    assert_eq!(tree_sum(&[1.0, 2.0, 3.0]), (1.0 + 2.0) + 3.0);
    let xs: Vec<f64> = (0..8).map(|i| i as f64 * 0.1).collect();
    let expect = ((xs[0] + xs[1]) + (xs[2] + xs[3])) + ((xs[4] + xs[5]) + (xs[6] + xs[7]));
    assert_eq!(tree_sum(&xs), expect);
}

#[test]
fn report_json_round_trip() {
    let r = variational_rate(&MeasureS1::cosine(0.3, 64).unwrap(), 4, &OptimizerSettings::default()).unwrap();
    let back: RateReport = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back, r);
    let inf = dirichlet_rate(&MeasureS1::dirac(0.0)).unwrap();
    assert!(inf.to_json().contains("\"infinite\""));
}
