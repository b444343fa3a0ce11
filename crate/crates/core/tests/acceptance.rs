//! Acceptance criteria. Every criterion prints one `PASS` or `FAIL` line to
//! stderr (uncaptured) and the test fails if any criterion fails.

use std::f64::consts::TAU;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use loewner_lab::circle_bm::{min_steps, rng_for};
use loewner_lab::driving_spec::DrivingSpec;
use loewner_lab::experiments::{self, Analysis, ExperimentKind, ExperimentResult, ExperimentSpec};
use loewner_lab::loewner::{caratheodory_distance_with, CompactProbes, SolverSettings};
use loewner_lab::measures::{coarsen, project_pn, DrivingMeasure, MeasureS1};
use loewner_lab::rate::{dirichlet_rate, energy, tuple_rate, variational_rate, OptimizerSettings};
use loewner_lab::{sample_circle_bm, DecayChain, SubordinationChain};
use rand::Rng;

const EXACT_CHAIN_TOL: f64 = 1e-7;
const EXACT_CHAIN_BUDGET: Duration = Duration::from_secs(10);
const CONFORMAL_RADIUS_TOL: f64 = 1e-6;
const CONFORMAL_RADIUS_PROBE: f64 = 1e-3;
const CONFORMAL_RADIUS_BUDGET: Duration = Duration::from_secs(120);
const UNIFORM_RATE_TOL: f64 = 1e-12;
const COSINE_RATE_TOL: f64 = 1e-6;
const QUADRATURE_ORACLE_TOL: f64 = 1e-12;
const RATE_BUDGET: Duration = Duration::from_secs(1);
const VARIATIONAL_TOL: f64 = 0.01;
const VARIATIONAL_DEGREE: usize = 16;
const VARIATIONAL_BUDGET: Duration = Duration::from_secs(60);
const JENSEN_SLACK: f64 = 1e-12;
const ENERGY_TOL: f64 = 1e-9;
const PROJECTION_BUDGET: Duration = Duration::from_secs(60);
const LLN_THRESHOLD: f64 = 0.05;
const LLN_BUDGET: Duration = Duration::from_secs(300);
const CHAIN_BUDGET: Duration = Duration::from_secs(1800);
const LDP_FACTOR: f64 = 2.0;
const LDP_BUDGET: Duration = Duration::from_secs(1800);
const FLUCT_TOL: f64 = 0.10;
const FLUCT_BUDGET: Duration = Duration::from_secs(1200);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, budget: Duration) -> (bool, String) {
    (elapsed <= budget, format!("{:.1} s of {} s", elapsed.as_secs_f64(), budget.as_secs()))
}

fn report(id: usize, name: &str, result: &Outcome) {
    let status = if result.passed { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {id:>2} {status} {name}: {}", result.detail);
}

/// `(1/8)∫ρ′²/ρ` for `ρ = (1 + a cos θ)/2π` by the periodic trapezoid rule
/// with the analytic derivative.
fn cosine_rate_quadrature(a: f64, n: usize) -> f64 {
    let h = TAU / n as f64;
    let sum: f64 = (0..n)
        .map(|j| {
            let t = j as f64 * h;
            let rho = (1.0 + a * t.cos()) / TAU;
            let d = -a * t.sin() / TAU;
            d * d / rho
        })
        .sum();
    sum * h / 8.0
}

fn cosine_closed_form(a: f64) -> f64 {
    (1.0 - (1.0 - a * a).sqrt()) / 8.0
}

/// Strictly positive trigonometric polynomial of degree 3 with random
/// coefficients, as a probability measure on `m` cells.
fn random_trig_density(rng: &mut impl Rng, m: usize) -> MeasureS1 {
    let coeffs: Vec<(f64, f64)> = (0..3).map(|_| (rng.random_range(-0.15..0.15), rng.random_range(-0.15..0.15))).collect();
    MeasureS1::from_density_fn(m, |t| {
        1.0 + coeffs
            .iter()
            .enumerate()
            .map(|(k, (a, b))| a * ((k + 1) as f64 * t).cos() + b * ((k + 1) as f64 * t).sin())
            .sum::<f64>()
    })
    .unwrap()
}

fn random_cell_measure(rng: &mut impl Rng, m: usize) -> MeasureS1 {
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    MeasureS1::from_bin_masses(raw.into_iter().map(|v| v / total).collect()).unwrap()
}

fn exact_chain() -> Outcome {
    let clock = Instant::now();
    let chain = SubordinationChain::new(DrivingMeasure::uniform(), 1.0, SolverSettings::default()).unwrap();
    let probes = CompactProbes { radial: 8, angular: 16 };
    let err = caratheodory_distance_with(&chain, &DecayChain, 0.5, 20, probes).unwrap();
    let (fast, time) = within(clock.elapsed(), EXACT_CHAIN_BUDGET);
    outcome(
        err < EXACT_CHAIN_TOL && fast,
        format!("max |f_t(z) - e^-t z| = {err:.2e} over |z| <= 0.5, t in [0, 1] (tol {EXACT_CHAIN_TOL:e}); {time}"),
    )
}

fn conformal_radius() -> Outcome {
    let clock = Instant::now();
    let mut rng = rng_for(2, 0);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for k in 0..20 {
        let rho = if k % 2 == 0 {
            let slabs = rng.random_range(1..=8);
            DrivingMeasure::from_slabs((0..slabs).map(|_| random_trig_density(&mut rng, 128)).collect()).unwrap()
        } else {
            let kappa = rng.random_range(1.0..=256.0);
            let path = sample_circle_bm(kappa, min_steps(kappa, 1.0), 1.0, 100 + k).unwrap();
            DrivingMeasure::from_path(path, 256).unwrap()
        };
        let chain = SubordinationChain::new(rho, 1.0, SolverSettings::default()).unwrap();
        for t in [0.25, 0.5, 1.0] {
            let d = chain.g_derivative_at_origin(t, CONFORMAL_RADIUS_PROBE).unwrap();
            worst = worst.max((d / t.exp() - 1.0).abs());
        }
        count += 1;
    }
    let (fast, time) = within(clock.elapsed(), CONFORMAL_RADIUS_BUDGET);
    outcome(
        worst < CONFORMAL_RADIUS_TOL && fast,
        format!("{count} driving measures, max |g_t'(0) e^-t - 1| = {worst:.2e} (tol {CONFORMAL_RADIUS_TOL:e}); {time}"),
    )
}

fn rate_values() -> Outcome {
    let clock = Instant::now();
    let uniform = dirichlet_rate(&MeasureS1::uniform(256)).unwrap().value.as_f64();
    let mut oracle_gap: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for a in [0.1, 0.5, 0.9] {
        let exact = cosine_closed_form(a);
        oracle_gap = oracle_gap.max((cosine_rate_quadrature(a, 1 << 14) / exact - 1.0).abs());
        let got = dirichlet_rate(&MeasureS1::cosine(a, 256).unwrap()).unwrap().value.as_f64();
        worst = worst.max((got / exact - 1.0).abs());
    }
    let (fast, time) = within(clock.elapsed(), RATE_BUDGET);
    outcome(
        uniform.abs() < UNIFORM_RATE_TOL && oracle_gap < QUADRATURE_ORACLE_TOL && worst < COSINE_RATE_TOL && fast,
        format!(
            "I(uniform) = {uniform:e}; closed form vs quadrature oracle {oracle_gap:.1e}; cosine rel error {worst:.2e} (tol {COSINE_RATE_TOL:e}); {time}"
        ),
    )
}

fn variational_equality() -> Outcome {
    let clock = Instant::now();
    let mut rng = rng_for(4, 0);
    let mut measures: Vec<MeasureS1> = [0.1, 0.5, 0.9].iter().map(|&a| MeasureS1::cosine(a, 256).unwrap()).collect();
    measures.push(random_trig_density(&mut rng, 256));
    measures.push(random_trig_density(&mut rng, 256));
    let mut worst: f64 = 0.0;
    for mu in &measures {
        let i = dirichlet_rate(mu).unwrap().value.as_f64();
        let v = variational_rate(mu, VARIATIONAL_DEGREE, &OptimizerSettings::default()).unwrap().value.as_f64();
        worst = worst.max((v - i).abs() / i);
    }
    let (fast, time) = within(clock.elapsed(), VARIATIONAL_BUDGET);
    outcome(
        worst < VARIATIONAL_TOL && fast,
        format!("{} densities, max |I~ - I|/I = {worst:.2e} at degree {VARIATIONAL_DEGREE} (tol {VARIATIONAL_TOL}); {time}", measures.len()),
    )
}

fn projection_lattice() -> Outcome {
    let clock = Instant::now();
    let mut rng = rng_for(5, 0);
    let mut incoherent = 0;
    let mut jensen_violation: f64 = 0.0;
    for _ in 0..100 {
        let slabs = rng.random_range(1..=40);
        let m = [16, 32, 64][rng.random_range(0..3)];
        let rho = DrivingMeasure::from_slabs((0..slabs).map(|_| random_cell_measure(&mut rng, m)).collect()).unwrap();
        let tuples: Vec<_> = (0..=9).map(|n| project_pn(&rho, n).unwrap()).collect();
        for n in 0..=8 {
            if coarsen(&tuples[n + 1]).unwrap() != tuples[n] {
                incoherent += 1;
            }
        }
        let rates: Vec<f64> = tuples[..=8].iter().map(|t| tuple_rate(t).unwrap().value.as_f64()).collect();
        for w in rates.windows(2) {
            jensen_violation = jensen_violation.max(w[0] - w[1]);
        }
    }
    let mut energy_gap: f64 = 0.0;
    for k in 0..=4 {
        let rho = DrivingMeasure::from_slabs((0..1 << k).map(|_| random_trig_density(&mut rng, 128)).collect()).unwrap();
        let e = energy(&rho).unwrap().value.as_f64();
        for n in k..=8 {
            energy_gap = energy_gap.max((tuple_rate(&project_pn(&rho, n).unwrap()).unwrap().value.as_f64() - e).abs());
        }
    }
    let (fast, time) = within(clock.elapsed(), PROJECTION_BUDGET);
    outcome(
        incoherent == 0 && jensen_violation <= JENSEN_SLACK && energy_gap < ENERGY_TOL && fast,
        format!(
            "100 slab measures: {incoherent} incoherent levels, max I_n - I_(n+1) = {jensen_violation:.1e}; dyadic slabs |I_n - E| <= {energy_gap:.1e}; {time}"
        ),
    )
}

fn lln_trend() -> Outcome {
    let clock = Instant::now();
    let spec = ExperimentSpec {
        kappas: vec![10.0, 100.0, 1000.0, 10000.0],
        replicas: 100,
        ..ExperimentSpec::new(ExperimentKind::Lln)
    };
    let r = experiments::run(&spec).unwrap();
    let m = r.means("w1_uniform").unwrap();
    let decreasing = m.windows(2).all(|w| w[1] < w[0]);
    let (fast, time) = within(clock.elapsed(), LLN_BUDGET);
    outcome(
        decreasing && m[3] < LLN_THRESHOLD && fast,
        format!("mean W1 to uniform {m:.4?} for kappa {:?} (last < {LLN_THRESHOLD}); {time}", spec.kappas),
    )
}

fn chain_trend() -> Outcome {
    let clock = Instant::now();
    let spec = ExperimentSpec::new(ExperimentKind::ChainConvergence);
    let r = experiments::run(&spec).unwrap();
    let m = r.means("caratheodory").unwrap();
    let decreasing = m.windows(2).all(|w| w[1] < w[0]);
    let (fast, time) = within(clock.elapsed(), CHAIN_BUDGET);
    outcome(
        decreasing && fast && spec.replicas == 30 && spec.kappas == [16.0, 64.0, 256.0, 1024.0],
        format!("mean distance to e^-t z {m:.4?} for kappa {:?}, {} replicas; {time}", spec.kappas, spec.replicas),
    )
}

fn ldp_slope() -> Outcome {
    let clock = Instant::now();
    let spec = ExperimentSpec {
        kappas: vec![4.0, 8.0, 16.0, 32.0],
        replicas: 100_000,
        target: DrivingSpec::Cosine(0.5),
        epsilon: 0.08,
        ..ExperimentSpec::new(ExperimentKind::LdpSlope)
    };
    let r = experiments::run(&spec).unwrap();
    let Analysis::LdpSlope(a) = &r.analysis else { unreachable!() };
    let (fast, time) = within(clock.elapsed(), LDP_BUDGET);
    let rows: Vec<String> = a.rows.iter().map(|row| format!("{}:{}", row.kappa, row.hits)).collect();
    let in_window = a.slope.is_some_and(|s| s >= a.rate_proxy / LDP_FACTOR && s <= a.rate_proxy * LDP_FACTOR);
    outcome(
        in_window && fast,
        format!(
            "slope {:?} vs I(target) = {:.5}, window [{:.5}, {:.5}]; hits per kappa {}; {time}",
            a.slope,
            a.rate_proxy,
            a.rate_proxy / LDP_FACTOR,
            a.rate_proxy * LDP_FACTOR,
            rows.join(" ")
        ),
    )
}

fn fluctuations() -> Outcome {
    let clock = Instant::now();
    let spec = ExperimentSpec {
        times: vec![200.0],
        replicas: 10_000,
        ..ExperimentSpec::new(ExperimentKind::Fluctuations)
    };
    let r = experiments::run(&spec).unwrap();
    let Analysis::Fluctuations(f) = &r.analysis else { unreachable!() };
    let t = &f.times[0];
    let (fast, time) = within(clock.elapsed(), FLUCT_BUDGET);
    let err = t.max_rel_error.unwrap_or(f64::INFINITY);
    outcome(
        err < FLUCT_TOL && f.bridge_check.rel_diff <= experiments::ORACLE_TOLERANCE && fast,
        format!(
            "bridge oracle rel diff {:.2e}; max rel covariance error {err:.3} (tol {FLUCT_TOL}); Green-function form {:.3}; Var x0 {:.4} vs {:.4}; {time}",
            f.bridge_check.rel_diff,
            t.max_rel_error_green.unwrap_or(f64::NAN),
            t.empirical[0][0],
            f.analytic[0][0]
        ),
    )
}

fn persisted(result: &ExperimentResult, dir: &std::path::Path, name: &str) -> (String, String) {
    let (json, csv) = experiments::persist(&result.without_timestamps(), &dir.join(name)).unwrap();
    (std::fs::read_to_string(json).unwrap(), std::fs::read_to_string(csv).unwrap())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let specs = [
        ExperimentSpec {
            kappas: vec![10.0, 1000.0],
            replicas: 20,
            ..ExperimentSpec::new(ExperimentKind::Lln)
        },
        ExperimentSpec {
            kappas: vec![16.0, 64.0],
            replicas: 3,
            ..ExperimentSpec::new(ExperimentKind::ChainConvergence)
        },
        ExperimentSpec {
            replicas: 2000,
            ..ExperimentSpec::new(ExperimentKind::LdpSlope)
        },
        ExperimentSpec {
            times: vec![10.0],
            replicas: 100,
            steps_per_unit: 256,
            bridge_samples: 200_000,
            bridge_nodes: 64,
            ..ExperimentSpec::new(ExperimentKind::Fluctuations)
        },
    ];
    let mut differing = Vec::new();
    for (k, spec) in specs.iter().enumerate() {
        let a = experiments::run(spec).unwrap();
        let b = experiments::run(spec).unwrap();
        let same = a.records == b.records
            && a.without_timestamps() == b.without_timestamps()
            && persisted(&a, dir.path(), &format!("a{k}")) == persisted(&b, dir.path(), &format!("b{k}"));
        if !same {
            differing.push(format!("{:?}", spec.kind));
        }
    }
    outcome(
        differing.is_empty(),
        format!("{} experiment kinds rerun; differing output: {:?}", specs.len(), differing),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("exact uniform chain", exact_chain),
        ("conformal radius", conformal_radius),
        ("rate values", rate_values),
        ("variational equality", variational_equality),
        ("projection lattice", projection_lattice),
        ("law of large numbers trend", lln_trend),
        ("chain convergence trend", chain_trend),
        ("ball probability slope", ldp_slope),
        ("local-time fluctuations", fluctuations),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        report(i + 1, name, &result);
        if !result.passed {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
