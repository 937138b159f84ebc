//! Command-line driver.
//!
//! A single JSON config file fully determines a reproducible run; flags
//! override the file. Human-readable tables go to stdout (5 significant
//! digits), machine artifacts to the output directory (JSON with exact
//! round-trip floats, CSV at 17 significant digits). Artifacts are staged
//! with a `.tmp` suffix and renamed only after every write succeeds, so a
//! failed run never leaves partial outputs behind.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mme_core::intensity::{check_conditions, ConditionCheckConfig, ConditionReport};
use mme_core::montecarlo::{run_experiment, ExperimentConfig, MonteCarloReport};
use mme_core::simulate::{PathSampler, PathSeed};
use mme_core::{
    am_coefficients, builtin_model, closed_form, closed_form_mme, expansion_coefficients,
    inverse_map, mme_estimate, moment_map, ExpansionCoefficients,
};

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(
    name = "mme",
    version,
    about = "Moment-matching estimation for inhomogeneous Poisson processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config file (JSON); defaults to the built-in
    /// periodic-sine preset when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Paths-per-replication override.
    #[arg(long, global = true)]
    n: Option<u32>,

    /// Replication-count override.
    #[arg(long = "N", global = true)]
    replications: Option<u32>,

    /// True-parameter override.
    #[arg(long, global = true)]
    theta0: Option<f64>,

    /// Output directory for artifacts (default: config output_dir, else "out").
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for the replication engine.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Print the fully resolved config as JSON and exit without running.
    #[arg(long, global = true)]
    dump_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Compute and save the expansion coefficients at theta0.
    Coeffs,
    /// Sample paths and write paths.csv (replication, path_index, event_time).
    Simulate,
    /// Estimate theta from a literal mbar, or from one freshly sampled batch.
    Estimate {
        /// Empirical moment value in the model's own convention.
        #[arg(long)]
        mbar: Option<f64>,
    },
    /// Run the experiment and compare the scaled second moment with its prediction.
    ValidateMoments,
    /// Run the experiment and emit the KS table plus cdf.csv.
    ValidateCdf,
    /// Run the built-in periodic-sine benchmark preset
    /// (theta0 = pi/3, n = 1000, N = 10000); ignores --config.
    #[command(name = "reproduce-example4")]
    ReproduceExample4,
    /// Numerically probe the regularity conditions for the configured model.
    CheckConditions,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let mut config = match (&cli.command, &cli.config) {
        (Command::ReproduceExample4, _) => ExperimentConfig::periodic_sine_preset(),
        (_, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| format!("cannot parse config {}: {e}", path.display()))?
        }
        (_, None) => ExperimentConfig::periodic_sine_preset(),
    };

    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(n) = cli.n {
        config.n = n;
    }
    if let Some(reps) = cli.replications {
        config.replications = reps;
    }
    if let Some(theta0) = cli.theta0 {
        config.theta0 = theta0;
    }
    if let Some(out) = &cli.out {
        config.output_dir = Some(out.display().to_string());
    }

    if cli.dump_config {
        println!("{}", serde_json::to_string_pretty(&config)?);
        return Ok(());
    }

    let out_dir = cli
        .out
        .clone()
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    let workers = cli.workers;
    match cli.command {
        Command::Coeffs => cmd_coeffs(&config, &out_dir),
        Command::Simulate => cmd_simulate(&config, &out_dir),
        Command::Estimate { mbar } => cmd_estimate(&config, mbar),
        Command::ValidateMoments => {
            let report = with_workers(workers, || run_experiment(&config))?;
            cmd_validate_moments(&report, &out_dir)
        }
        Command::ValidateCdf => {
            let report = with_workers(workers, || run_experiment(&config))?;
            cmd_validate_cdf(&report, &out_dir)
        }
        Command::ReproduceExample4 => {
            let report = with_workers(workers, || run_experiment(&config))?;
            cmd_reproduce(&report, &out_dir)
        }
        Command::CheckConditions => cmd_check_conditions(&config, &out_dir),
    }
}

#[cfg(feature = "parallel")]
fn with_workers<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> mme_core::Result<T> + Send,
) -> mme_core::Result<T> {
    match workers {
        Some(w) if w > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .expect("thread pool")
            .install(f),
        _ => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_workers<T>(
    workers: Option<usize>,
    f: impl FnOnce() -> mme_core::Result<T>,
) -> mme_core::Result<T> {
    if workers.is_some_and(|w| w > 1) {
        eprintln!("note: sequential build (no `parallel` feature); --workers has no effect");
    }
    f()
}

fn build_coefficients(config: &ExperimentConfig) -> CliResult<ExpansionCoefficients> {
    let (model, weight) = builtin_model(&config.model)?;
    let map = moment_map(&model, &weight, config.quadrature_tol)?;
    let am = am_coefficients(&map, config.theta0)?;
    let inv = inverse_map(map, config.root_tol)?;
    let psi = inv.psi(config.theta0)?;
    Ok(expansion_coefficients(&psi, &am)?)
}

fn cmd_coeffs(config: &ExperimentConfig, out_dir: &Path) -> CliResult<()> {
    let c = build_coefficients(config)?;
    println!(
        "expansion coefficients: {} at theta0 = {}",
        config.model.name(),
        sig5(config.theta0)
    );
    println!("  psi1 = {:>12}   a2    = {:>12}", sig5(c.psi.psi1), sig5(c.am.a2));
    println!("  psi2 = {:>12}   a3    = {:>12}", sig5(c.psi.psi2), sig5(c.am.a3));
    println!("  psi3 = {:>12}   a4    = {:>12}", sig5(c.psi.psi3), sig5(c.am.a4));
    println!("  b2   = {:>12}   ahat3 = {:>12}", sig5(c.b2), sig5(c.am.ahat3));
    println!("  b3   = {:>12}   ahat4 = {:>12}", sig5(c.b3), sig5(c.am.ahat4));
    println!("  B1   = {:>12}   B2    = {:>12}", sig5(c.big_b1), sig5(c.big_b2));
    println!("  B3   = {:>12}   B4    = {:>12}", sig5(c.big_b3), sig5(c.big_b4));
    println!("  B6   = {:>12}   K     = {:>12}", sig5(c.big_b6), sig5(c.k_bound));

    let mut w = ArtifactWriter::new(out_dir)?;
    w.stage("coeffs.json", &serde_json::to_string_pretty(&c)?)?;
    w.commit()
}

fn cmd_simulate(config: &ExperimentConfig, out_dir: &Path) -> CliResult<()> {
    config.validate()?;
    let (model, _) = builtin_model(&config.model)?;
    let sampler = PathSampler::new(&model, config.theta0, config.method, config.quadrature_tol)?;
    let mut csv = String::from("replication,path_index,event_time\n");
    let mut events = 0usize;
    for i in 0..config.replications {
        for j in 0..config.n {
            let path = sampler.sample(PathSeed::new(config.master_seed, i, j))?;
            for &t in &path.times {
                writeln!(csv, "{i},{j},{t:.16e}").expect("string write");
                events += 1;
            }
        }
    }
    println!(
        "simulated {} paths x {} replications of {} ({} events)",
        config.n,
        config.replications,
        config.model.name(),
        events
    );
    let mut w = ArtifactWriter::new(out_dir)?;
    w.stage("paths.csv", &csv)?;
    w.commit()
}

fn cmd_estimate(config: &ExperimentConfig, mbar: Option<f64>) -> CliResult<()> {
    let (model, weight) = builtin_model(&config.model)?;
    let map = moment_map(&model, &weight, config.quadrature_tol)?;
    let direction = map.direction();
    let inv = inverse_map(map, config.root_tol)?;

    // Raw convention at the boundary; normalized inside.
    let (mbar_raw, source) = match mbar {
        Some(v) => (v, "literal".to_string()),
        None => {
            let sampler =
                PathSampler::new(&model, config.theta0, config.method, config.quadrature_tol)?;
            let batch = mme_core::sample_batch(
                &sampler,
                inv.map(),
                config.theta0,
                config.n,
                config.master_seed,
                0,
            )?;
            (
                direction.sign() * batch.mbar,
                format!("sampled batch of n = {}", config.n),
            )
        }
    };
    let result = mme_estimate(&inv, direction.normalize(mbar_raw))?;

    println!("estimate for {} ({source})", config.model.name());
    println!("  mbar      = {}", sig5(mbar_raw));
    println!("  theta_hat = {}", sig5(result.theta_hat));
    println!("  clamped   = {:?}", result.clamped);
    if let Ok(form) = closed_form(&config.model) {
        match closed_form_mme(&form, mbar_raw) {
            Ok(v) => println!("  closed-form (unclamped) = {}", sig5(v)),
            Err(e) => println!("  closed-form (unclamped) = n/a ({e})"),
        }
    }
    Ok(())
}

fn cmd_validate_moments(report: &MonteCarloReport, out_dir: &Path) -> CliResult<()> {
    let e = &report.empirical;
    let p = &report.predictions;
    println!(
        "scaled second moment  n*E(theta_hat - theta0)^2  [{} at theta0 = {}, n = {}, N = {}]",
        report.model,
        sig5(report.theta0),
        report.n,
        report.replications
    );
    println!(
        "  empirical  = {} (se {})",
        sig5(e.second_moment_scaled.value),
        sig5(e.second_moment_scaled.se)
    );
    println!("  predicted  = {}", sig5(p.second_moment_scaled));
    println!("  limit      = {}", sig5(p.second_moment_limit));
    println!(
        "  mean bias: empirical {} (se {}), predicted {}",
        sig5(e.mean_bias.value),
        sig5(e.mean_bias.se),
        sig5(p.mean_bias)
    );
    println!(
        "  eta moments (emp vs pred): m2 {} / {}   m3 {} / {}   m4 {} / {}",
        sig5(e.eta_moment2.value),
        sig5(p.eta_moment2),
        sig5(e.eta_moment3.value),
        sig5(p.eta_moment3),
        sig5(e.eta_moment4.value),
        sig5(p.eta_moment4)
    );
    println!(
        "  clamp freq = {} ({} lower, {} upper)",
        sig5(e.clamp_freq.value),
        sig5(e.clamp_lower_freq.value),
        sig5(e.clamp_upper_freq.value)
    );

    let mut w = ArtifactWriter::new(out_dir)?;
    w.stage("report.json", &report.to_json())?;
    w.commit()
}

fn cmd_validate_cdf(report: &MonteCarloReport, out_dir: &Path) -> CliResult<()> {
    println!(
        "KS distances of the normalized error [{} at theta0 = {}, n = {}, N = {}]",
        report.model,
        sig5(report.theta0),
        report.n,
        report.replications
    );
    println!("  vs gaussian           = {}", sig5(report.ks.gaussian));
    println!("  vs order-1 correction = {}", sig5(report.ks.edgeworth1));
    println!("  vs order-2 correction = {}", sig5(report.ks.edgeworth2));
    let g = &report.good_sets;
    println!(
        "  locality violations: |dev| >= {} with freq {}; eta threshold {} exceeded with freq {}",
        sig5(g.delta),
        sig5(g.b1_violation_freq.value),
        sig5(g.b2_eta_threshold),
        sig5(g.b2_violation_freq.value)
    );

    let mut w = ArtifactWriter::new(out_dir)?;
    w.stage("report.json", &report.to_json())?;
    w.stage("cdf.csv", &report.cdf_csv())?;
    w.commit()
}

fn cmd_reproduce(report: &MonteCarloReport, out_dir: &Path) -> CliResult<()> {
    println!(
        "benchmark preset: {} at theta0 = {}, n = {}, N = {}",
        report.model,
        sig5(report.theta0),
        report.n,
        report.replications
    );
    println!(
        "  predicted n*E(theta_hat - theta0)^2 = {}",
        sig5(report.predictions.second_moment_scaled)
    );
    println!(
        "  limit value                          = {}",
        sig5(report.predictions.second_moment_limit)
    );
    println!(
        "  empirical                            = {} (se {})",
        sig5(report.empirical.second_moment_scaled.value),
        sig5(report.empirical.second_moment_scaled.se)
    );

    let mut w = ArtifactWriter::new(out_dir)?;
    w.stage("report.json", &report.to_json())?;
    w.commit()
}

fn cmd_check_conditions(config: &ExperimentConfig, out_dir: &Path) -> CliResult<()> {
    let (model, weight) = builtin_model(&config.model)?;
    let check_cfg = ConditionCheckConfig {
        theta0: Some(config.theta0),
        ..ConditionCheckConfig::default()
    };
    let report = check_conditions(&model, &weight, 8, &check_cfg)?;
    print_condition_report(config, &report);

    let mut w = ArtifactWriter::new(out_dir)?;
    w.stage("conditions.json", &serde_json::to_string_pretty(&report)?)?;
    w.commit()
}

fn print_condition_report(config: &ExperimentConfig, report: &ConditionReport) {
    println!("condition checks for {}", config.model.name());
    let worst = report
        .integrability
        .iter()
        .max_by(|a, b| a.sup_value.total_cmp(&b.sup_value));
    println!(
        "  integrability (orders 1..={}): {} (largest sup {})",
        report.integrability.len(),
        pass(report.integrable),
        worst.map_or_else(|| "-".into(), |e| sig5(e.sup_value))
    );
    println!(
        "  monotone map: {} with kappa = {}",
        pass(report.monotone && report.kappa_positive),
        sig5(report.kappa)
    );
    let worst_order = report
        .smoothness
        .iter()
        .max_by(|a, b| a.max_rel_change.total_cmp(&b.max_rel_change));
    println!(
        "  smoothness proxy (orders 1..=5): {} (worst rel change {})",
        pass(report.smooth),
        worst_order.map_or_else(|| "-".into(), |e| sig5(e.max_rel_change))
    );
    println!(
        "  non-lattice weight: {} (min {} at v = {}, scale {})",
        pass(report.cramer_ok),
        sig5(report.cramer_min),
        sig5(report.cramer_min_v),
        sig5(report.cramer_scale)
    );
    println!("  verified: {}", pass(report.verified));
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

/// Five significant digits for human tables.
fn sig5(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-3..=6).contains(&mag) {
        let decimals = (4 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.4e}")
    }
}

/// Stages artifacts as `<name>.tmp` and renames them all at commit time.
/// Dropped without commit (any earlier error), the staged files are removed.
struct ArtifactWriter {
    dir: PathBuf,
    staged: Vec<(PathBuf, PathBuf)>,
    committed: bool,
}

impl ArtifactWriter {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| format!("cannot create output dir {}: {e}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            staged: Vec::new(),
            committed: false,
        })
    }

    fn stage(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let target = self.dir.join(name);
        let tmp = self.dir.join(format!("{name}.tmp"));
        fs::write(&tmp, contents)
            .map_err(|e| format!("cannot write {}: {e}", tmp.display()))?;
        self.staged.push((target, tmp));
        Ok(())
    }

    fn commit(mut self) -> CliResult<()> {
        for (target, tmp) in &self.staged {
            fs::rename(tmp, target)
                .map_err(|e| format!("cannot finalize {}: {e}", target.display()))?;
        }
        self.committed = true;
        let written: Vec<String> = self
            .staged
            .iter()
            .map(|(t, _)| t.display().to_string())
            .collect();
        println!("wrote {}", written.join(", "));
        Ok(())
    }
}

impl Drop for ArtifactWriter {
    fn drop(&mut self) {
        if !self.committed {
            for (_, tmp) in &self.staged {
                let _ = fs::remove_file(tmp);
            }
        }
    }
}
