//! The `loewner-lab` command line.
//!
//! Exit codes: 0 on success, 1 for invalid input (bad flags, out-of-range
//! values, malformed specs), 2 for failures while running.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::circle_bm::{min_steps, occupation_measure, sample_circle_bm_stream};
use crate::driving_spec::DrivingSpec;
use crate::error::{invalid, Error, Result};
use crate::experiments::{self, Analysis, ExperimentKind, ExperimentResult, ExperimentSpec, MAX_BINS};
use crate::io::{fmt17, write_csv};
use crate::loewner::{write_trace_csv, PolarGrid, SolverSettings, SubordinationChain};
use crate::measures::{coarsen, dn_distance, embed_fn, project_pn, w1_bins, MAX_DEPTH};
use crate::rate::{dirichlet_rate_with, energy, tuple_rate, variational_rate, DirichletOptions, OptimizerSettings};

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "LOEWNER_LAB_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "loewner-lab", version, about = "Radial Loewner chains driven by fast circular Brownian motion")]
pub struct Cli {
    /// Base seed for every random draw
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Directory for output files
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "out")]
    pub out_dir: PathBuf,

    /// Worker threads for experiment replicas (default: all cores)
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..=1024))]
    pub workers: Option<u64>,

    /// More progress output on stderr (repeatable)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    /// TOML experiment spec; command-line flags override its entries
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample circular Brownian motion and write the path and its occupation
    Simulate(SimulateArgs),
    /// Hull classification and trace of the chain of a driving measure
    Chain(ChainArgs),
    /// Rate function report for a circle measure or a driving measure
    Rate(RateArgs),
    /// Projection lattice diagnostics P_n / F_n of a driving measure
    Project(ProjectArgs),
    /// Law of large numbers for the average occupation measure
    Lln(LlnArgs),
    /// Convergence of SLE_kappa chains to the decay chain
    ChainConv(ChainConvArgs),
    /// Ball probabilities of the average occupation measure against kappa
    Ldp(LdpArgs),
    /// Covariance of the local-time fluctuation field
    Fluct(FluctArgs),
    /// Run the built-in invariant checks
    Selftest,
}

fn bins_parser() -> clap::builder::RangedU64ValueParser<usize> {
    clap::builder::RangedU64ValueParser::<usize>::new().range(1..=MAX_BINS as u64)
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Variance kappa of the motion
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    /// Final time
    #[arg(long, default_value_t = 1.0)]
    pub t_max: f64,
    /// Time steps (default: ceil(64 * kappa * t_max))
    #[arg(long)]
    pub steps: Option<usize>,
    /// Cells of the occupation histogram
    #[arg(long, default_value_t = 256, value_parser = bins_parser())]
    pub bins: usize,
    /// Generator stream of the seed
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Driving measure: uniform, dirac:<angle>, cosine:<a>, slabs:[...], bm:<kappa>
    #[arg(long)]
    pub driving: DrivingSpec,
    /// Capacity time of the hull
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Probe grid resolution (radii and angles)
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..=1024))]
    pub probe: u64,
    /// Trace samples for point-driven chains (0 disables the trace)
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(0..=100_000))]
    pub trace_steps: u64,
    /// Cells for density slabs and path occupation
    #[arg(long, default_value_t = 256, value_parser = bins_parser())]
    pub bins: usize,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// Circle measure: uniform, dirac:<angle>, cosine:<a>, bm:<kappa>
    #[arg(long, conflicts_with = "driving", required_unless_present = "driving")]
    pub measure: Option<DrivingSpec>,
    /// Driving measure, for the energy and the level rates
    #[arg(long)]
    pub driving: Option<DrivingSpec>,
    /// Cells for densities
    #[arg(long, default_value_t = 256, value_parser = bins_parser())]
    pub bins: usize,
    /// Degree of the trigonometric test polynomial
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..=64))]
    pub degree: u64,
    /// Positivity floor on density values
    #[arg(long, default_value_t = crate::rate::EPS_POS)]
    pub floor: f64,
    /// Evaluate (density + eps) renormalized; the result is not certified
    #[arg(long)]
    pub regularize: Option<f64>,
    /// Deepest level rate I_n printed for driving measures
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(0..=MAX_DEPTH as i64))]
    pub depth: u32,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// Driving measure
    #[arg(long)]
    pub driving: DrivingSpec,
    /// Deepest projection level
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(0..=MAX_DEPTH as i64))]
    pub depth: u32,
    /// Cells for densities and path occupation
    #[arg(long, default_value_t = 256, value_parser = bins_parser())]
    pub bins: usize,
}

#[derive(Debug, Args)]
pub struct CommonExp {
    /// Number of replicas per configuration
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Histogram cells
    #[arg(long, value_parser = bins_parser())]
    pub bins: Option<usize>,
    /// Minimum time steps per unit time
    #[arg(long)]
    pub steps_per_unit: Option<usize>,
    /// Output file stem inside the output directory (default: the subcommand)
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct LlnArgs {
    /// Comma-separated kappa values
    #[arg(long, value_delimiter = ',')]
    pub kappas: Option<Vec<f64>>,
    /// Depth of the projective-limit distance
    #[arg(long, value_parser = clap::value_parser!(u32).range(0..=MAX_DEPTH as i64))]
    pub depth: Option<u32>,
    #[command(flatten)]
    pub common: CommonExp,
}

#[derive(Debug, Args)]
pub struct ChainConvArgs {
    /// Comma-separated kappa values
    #[arg(long, value_delimiter = ',')]
    pub kappas: Option<Vec<f64>>,
    /// Radius of the compact set {|z| <= r}
    #[arg(long)]
    pub r_compact: Option<f64>,
    /// Number of time intervals on [0, 1]
    #[arg(long)]
    pub time_grid: Option<usize>,
    #[command(flatten)]
    pub common: CommonExp,
}

#[derive(Debug, Args)]
pub struct LdpArgs {
    /// Comma-separated kappa values
    #[arg(long, value_delimiter = ',')]
    pub kappas: Option<Vec<f64>>,
    /// Target circle measure
    #[arg(long)]
    pub target: Option<DrivingSpec>,
    /// W1 ball radius, at least 4*pi/bins
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[command(flatten)]
    pub common: CommonExp,
}

#[derive(Debug, Args)]
pub struct FluctArgs {
    /// Comma-separated final times
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// Number of equally spaced evaluation angles
    #[arg(long)]
    pub theta_points: Option<usize>,
    /// Bridge samples for the oracle check
    #[arg(long)]
    pub bridge_samples: Option<usize>,
    /// Bridge discretization intervals (even)
    #[arg(long)]
    pub bridge_nodes: Option<usize>,
    #[command(flatten)]
    pub common: CommonExp,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// 1 for input errors, 2 for runtime failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter { .. }
        | Error::NotProbability { .. }
        | Error::TimeOutOfRange { .. }
        | Error::OutsideDisk { .. }
        | Error::NotPointDriven
        | Error::Parse { .. } => 1,
        _ => 2,
    }
}

struct Ctx<'a> {
    cli: &'a Cli,
}

impl Ctx<'_> {
    fn info(&self, msg: impl AsRef<str>) {
        if self.cli.verbose > 0 {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn out(&self, file: &str) -> PathBuf {
        self.cli.out_dir.join(file)
    }

    fn wrote(&self, path: &Path) {
        println!("wrote {}", path.display());
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let ctx = Ctx { cli };
    if cli.config.is_some() && !matches!(cli.command, Command::Lln(_) | Command::ChainConv(_) | Command::Ldp(_) | Command::Fluct(_)) {
        return Err(invalid("config", "--config applies to lln, chain-conv, ldp and fluct"));
    }
    match &cli.command {
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Chain(a) => chain(&ctx, a),
        Command::Rate(a) => rate(&ctx, a),
        Command::Project(a) => project(&ctx, a),
        Command::Lln(a) => {
            let mut spec = base_spec(cli, ExperimentKind::Lln)?;
            set(&mut spec.kappas, &a.kappas);
            set(&mut spec.depth, &a.depth);
            apply_common(&mut spec, &a.common);
            run_experiment(&ctx, spec, &a.common.name, "lln")
        }
        Command::ChainConv(a) => {
            let mut spec = base_spec(cli, ExperimentKind::ChainConvergence)?;
            set(&mut spec.kappas, &a.kappas);
            set(&mut spec.r_compact, &a.r_compact);
            set(&mut spec.time_grid, &a.time_grid);
            apply_common(&mut spec, &a.common);
            run_experiment(&ctx, spec, &a.common.name, "chain-conv")
        }
        Command::Ldp(a) => {
            let mut spec = base_spec(cli, ExperimentKind::LdpSlope)?;
            set(&mut spec.kappas, &a.kappas);
            set(&mut spec.target, &a.target);
            set(&mut spec.epsilon, &a.epsilon);
            apply_common(&mut spec, &a.common);
            run_experiment(&ctx, spec, &a.common.name, "ldp")
        }
        Command::Fluct(a) => {
            let mut spec = base_spec(cli, ExperimentKind::Fluctuations)?;
            set(&mut spec.times, &a.times);
            set(&mut spec.theta_points, &a.theta_points);
            set(&mut spec.bridge_samples, &a.bridge_samples);
            set(&mut spec.bridge_nodes, &a.bridge_nodes);
            apply_common(&mut spec, &a.common);
            run_experiment(&ctx, spec, &a.common.name, "fluct")
        }
        Command::Selftest => {
            let report = crate::selftest::run();
            for c in &report.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if report.all_passed() {
                Ok(())
            } else {
                Err(Error::OracleMismatch {
                    what: "selftest".into(),
                    expected: report.checks.len() as f64,
                    found: report.checks.iter().filter(|c| c.passed).count() as f64,
                })
            }
        }
    }
}

fn set<T: Clone>(slot: &mut T, value: &Option<T>) {
    if let Some(v) = value {
        *slot = v.clone();
    }
}

fn base_spec(cli: &Cli, kind: ExperimentKind) -> Result<ExperimentSpec> {
    let mut spec = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(crate::io::io_err(path))?;
            let spec: ExperimentSpec = toml::from_str(&text).map_err(|e| Error::Parse {
                input: path.display().to_string(),
                reason: e.to_string(),
            })?;
            if spec.kind != kind {
                return Err(invalid("config", format!("{} holds a {:?} spec", path.display(), spec.kind)));
            }
            spec
        }
        None => ExperimentSpec::new(kind),
    };
    spec.base_seed = cli.seed;
    if let Some(w) = cli.workers {
        spec.workers = Some(w as usize);
    }
    Ok(spec)
}

fn apply_common(spec: &mut ExperimentSpec, c: &CommonExp) {
    set(&mut spec.replicas, &c.replicas);
    set(&mut spec.bins, &c.bins);
    set(&mut spec.steps_per_unit, &c.steps_per_unit);
}

fn run_experiment(ctx: &Ctx, mut spec: ExperimentSpec, name: &Option<String>, default: &str) -> Result<()> {
    spec.validate()?;
    let stem = match &spec.output {
        Some(p) if name.is_none() => p.clone(),
        _ => ctx.out(name.as_deref().unwrap_or(default)),
    };
    spec.output = Some(stem.clone());
    ctx.info(format!("running {:?} with {} replicas per configuration", spec.kind, spec.replicas));
    let clock = Instant::now();
    let result = experiments::run(&spec)?;
    ctx.info(format!("finished in {:.1} s", clock.elapsed().as_secs_f64()));
    print_summary(&result);
    let (json, csv) = experiments::persist(&result, &stem)?;
    ctx.wrote(&json);
    ctx.wrote(&csv);
    Ok(())
}

fn print_summary(r: &ExperimentResult) {
    for s in &r.summary {
        let parts: Vec<String> = r
            .metric_names
            .iter()
            .zip(s.mean.iter().zip(&s.std_error))
            .map(|(n, (m, e))| match (m, e) {
                (Some(m), Some(e)) => format!("{n}={m:.6} ± {e:.2e}"),
                (Some(m), None) => format!("{n}={m:.6}"),
                _ => format!("{n}=n/a"),
            })
            .collect();
        println!("{}={} ok={} failed={} {}", r.param_name, s.param, s.replicas_ok, s.failures, parts.join(" "));
    }
    match &r.analysis {
        Analysis::Lln => {}
        Analysis::ChainConvergence { control_distance } => {
            println!("uniform-driving control distance = {control_distance:.3e}");
        }
        Analysis::LdpSlope(a) => {
            for row in &a.rows {
                match row.rate_estimate {
                    Some(rate) => println!("kappa={} hits={}/{} p={:.3e} -log(p)/kappa={rate:.6}", row.kappa, row.hits, row.replicas_ok, row.p),
                    None => println!("kappa={} hits=0/{} censored (p < {:.1e})", row.kappa, row.replicas_ok, 1.0 / row.replicas_ok.max(1) as f64),
                }
            }
            match a.slope {
                Some(s) => println!("fitted slope = {s:.6}, rate proxy I(target) = {:.6}", a.rate_proxy),
                None => println!("fitted slope unavailable ({} uncensored points)", a.fit_points),
            }
        }
        Analysis::Fluctuations(f) => {
            println!(
                "bridge check: Var Y(pi) closed form {:.6}, simulated {:.6} (rel {:.2e})",
                f.bridge_check.analytic, f.bridge_check.simulated, f.bridge_check.rel_diff
            );
            for t in &f.times {
                let fmt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.4}"));
                println!(
                    "t={} max rel covariance error: bridge field {}, Green function {}",
                    t.t,
                    fmt(t.max_rel_error),
                    fmt(t.max_rel_error_green)
                );
            }
        }
    }
}

fn simulate(ctx: &Ctx, a: &SimulateArgs) -> Result<()> {
    if !(a.t_max > 0.0 && a.t_max.is_finite()) {
        return Err(invalid("t-max", format!("must be finite and > 0, got {}", a.t_max)));
    }
    let steps = a.steps.unwrap_or_else(|| min_steps(a.kappa, a.t_max));
    if steps > experiments::MAX_PATH_STEPS {
        return Err(invalid("steps", format!("must be at most {}", experiments::MAX_PATH_STEPS)));
    }
    let path = sample_circle_bm_stream(a.kappa, steps, a.t_max, ctx.cli.seed, a.stream)?;
    let occ = occupation_measure(&path, a.t_max, a.bins)?;
    let path_csv = ctx.out("simulate_path.csv");
    write_csv(
        &path_csv,
        &["t", "angle", "re", "im"],
        path.times().iter().zip(path.angles()).map(|(t, th)| {
            vec![fmt17(*t), fmt17(*th), fmt17(th.cos()), fmt17(th.sin())]
        }),
    )?;
    let width = std::f64::consts::TAU / a.bins as f64;
    let occ_csv = ctx.out("simulate_occupation.csv");
    write_csv(
        &occ_csv,
        &["bin", "theta_lo", "theta_hi", "occupation", "average_occupation", "local_time"],
        occ.bins.iter().enumerate().map(|(j, m)| {
            vec![
                j.to_string(),
                fmt17(j as f64 * width),
                fmt17((j + 1) as f64 * width),
                fmt17(*m),
                fmt17(m / a.t_max),
                fmt17(m / width),
            ]
        }),
    )?;
    let uniform = vec![1.0 / a.bins as f64; a.bins];
    let avg: Vec<f64> = occ.bins.iter().map(|m| m / a.t_max).collect();
    println!("kappa={} steps={} W1(average occupation, uniform)={:.6}", a.kappa, steps, w1_bins(&avg, &uniform));
    ctx.wrote(&path_csv);
    ctx.wrote(&occ_csv);
    Ok(())
}

fn chain(ctx: &Ctx, a: &ChainArgs) -> Result<()> {
    if !(a.t >= 0.0 && a.t.is_finite()) {
        return Err(invalid("t", format!("must be finite and >= 0, got {}", a.t)));
    }
    if matches!(a.driving, DrivingSpec::Bm(_)) && a.t > 1.0 {
        return Err(invalid("t", "bm driving is sampled on [0, 1]; use t <= 1"));
    }
    let rho = a.driving.driving(a.bins, ctx.cli.seed)?;
    let t_max = a.t.max(f64::MIN_POSITIVE);
    let chain = SubordinationChain::new(rho, t_max, SolverSettings::default())?;
    let grid = PolarGrid::square(a.probe as usize);
    let clock = Instant::now();
    let hull = chain.hull_grid(a.t, grid)?;
    ctx.info(format!("classified {} probes in {:.1} s", hull.points.len(), clock.elapsed().as_secs_f64()));
    let hull_csv = ctx.out("chain_hull.csv");
    hull.write_csv(&hull_csv)?;
    println!(
        "driving={} t={} probes={} swallowed={} undetermined={}",
        a.driving,
        a.t,
        hull.points.len(),
        hull.swallowed().count(),
        hull.undetermined
    );
    if matches!(a.driving, DrivingSpec::Uniform) {
        println!("exact hull: annulus e^-t <= |z| < 1 with e^-t = {:.6}", (-a.t).exp());
    }
    ctx.wrote(&hull_csv);
    if chain.is_point_driven() && a.trace_steps > 0 && a.t > 0.0 {
        let trace = chain.trace_polyline(a.t, a.trace_steps as usize)?;
        let trace_csv = ctx.out("chain_trace.csv");
        write_trace_csv(&trace_csv, &trace)?;
        let gauge = trace.iter().map(|e| e.gauge).fold(0.0, f64::max);
        println!("trace points={} max gauge={gauge:.3e}", trace.len());
        ctx.wrote(&trace_csv);
    }
    Ok(())
}

fn rate(ctx: &Ctx, a: &RateArgs) -> Result<()> {
    let opts = DirichletOptions {
        floor: a.floor,
        regularize: a.regularize,
    };
    if !(a.floor >= 0.0) {
        return Err(invalid("floor", "must be >= 0"));
    }
    let mut reports = Vec::new();
    if let Some(spec) = &a.measure {
        let mu = spec.measure(a.bins, ctx.cli.seed)?;
        let d = dirichlet_rate_with(&mu, &opts)?;
        println!("I = {}", d.value);
        if let Some(note) = &d.diagnostics.note {
            println!("  note: {note}");
        }
        let v = variational_rate(&mu, a.degree as usize, &OptimizerSettings::default())?;
        println!(
            "I~ = {} (degree {}, {} iterations, converged: {})",
            v.value,
            a.degree,
            v.diagnostics.iterations.unwrap_or(0),
            v.diagnostics.converged
        );
        reports.push(("dirichlet".to_string(), d));
        reports.push(("variational".to_string(), v));
    }
    if let Some(spec) = &a.driving {
        let rho = spec.driving(a.bins, ctx.cli.seed)?;
        let e = energy(&rho)?;
        println!("E = {}", e.value);
        for n in 0..=a.depth {
            let r = tuple_rate(&project_pn(&rho, n)?)?;
            println!("I_{n} = {}", r.value);
            reports.push((format!("level_{n}"), r));
        }
        reports.push(("energy".to_string(), e));
    }
    let json = ctx.out("rate.json");
    let map: serde_json::Map<String, serde_json::Value> = reports
        .into_iter()
        .map(|(k, r)| (k, serde_json::to_value(r).expect("rate reports serialize")))
        .collect();
    if let Some(dir) = json.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(crate::io::io_err(dir))?;
    }
    let text = serde_json::to_string_pretty(&map).expect("json values serialize");
    std::fs::write(&json, text).map_err(crate::io::io_err(&json))?;
    ctx.wrote(&json);
    Ok(())
}

fn project(ctx: &Ctx, a: &ProjectArgs) -> Result<()> {
    let rho = a.driving.driving(a.bins, ctx.cli.seed)?;
    let mut rows = Vec::new();
    for n in 0..=a.depth {
        let tuple = project_pn(&rho, n)?;
        let level_rate = tuple_rate(&tuple)?.value;
        let roundtrip = dn_distance(&embed_fn(&tuple), &rho, a.depth)?;
        let coherence = if n < MAX_DEPTH {
            let finer = coarsen(&project_pn(&rho, n + 1)?)?;
            tuple
                .entries()
                .iter()
                .zip(finer.entries())
                .flat_map(|(x, y)| {
                    let m = x.grid().unwrap_or(a.bins).max(y.grid().unwrap_or(a.bins));
                    x.to_bins(m).into_iter().zip(y.to_bins(m)).map(|(p, q)| (p - q).abs()).collect::<Vec<_>>()
                })
                .fold(0.0, f64::max)
        } else {
            0.0
        };
        println!("n={n} I_n={level_rate} d(F_n P_n rho, rho)={roundtrip:.6e} coherence gap={coherence:e}");
        rows.push(vec![
            n.to_string(),
            level_rate.finite().map(fmt17).unwrap_or_else(|| "inf".into()),
            fmt17(roundtrip),
            fmt17(coherence),
        ]);
    }
    let csv = ctx.out("project.csv");
    write_csv(&csv, &["level", "level_rate", "roundtrip_distance", "coherence_gap"], rows)?;
    ctx.wrote(&csv);
    Ok(())
}
