//! `coordbf` command-line front end.
//!
//! Exit codes: 0 on success, 1 on a usage or configuration error, 2 when a
//! run cannot complete (I/O failure, solver failure of a single run).

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coordbf::experiment::{
    convergence_series, mix_seed, run_experiment, upper_bound, write_csv_file, write_trials_jsonl, ExperimentSpec,
};
use coordbf::{generate_channels, nominal_power_budget, run_algorithm, Algorithm, ScenarioConfig, SystemModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "coordbf", version, about = "Coordinated MIMO beamforming for underlay spectrum sharing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment file and write its result table.
    Run(RunArgs),
    /// Check an experiment file without running it.
    Validate {
        config: PathBuf,
    },
    /// Run one algorithm on one channel realization and print a summary.
    Single(SingleArgs),
    /// Print residual-versus-iteration series of all four variants on one realization.
    Convergence(ConvergenceArgs),
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; overrides the file's `output`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// JSON-lines file with one record per trial and algorithm.
    #[arg(long)]
    trace_output: Option<PathBuf>,
    /// Suppress the summary table.
    #[arg(long)]
    quiet: bool,
}

/// Scenario flags; each overrides the matching field of `--config`.
#[derive(Args)]
struct ScenarioArgs {
    /// Experiment file whose `[scenario]` table is the starting point.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<SystemModel>,
    #[arg(long)]
    nt: Option<usize>,
    #[arg(long)]
    nr: Option<usize>,
    #[arg(long)]
    ns: Option<usize>,
    #[arg(long)]
    np: Option<usize>,
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    snr_dev_db: Option<f64>,
    /// Transmit budget in linear units; derived from the SNR when absent.
    #[arg(long)]
    p_t: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    noise_var: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SingleArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value = "srm")]
    algo: Algorithm,
    /// Print the full trace as JSON instead of the summary.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<coordbf::ConfigError> for Failure {
    fn from(e: coordbf::ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<coordbf::ExperimentError> for Failure {
    fn from(e: coordbf::ExperimentError) -> Self {
        match e {
            coordbf::ExperimentError::Config(_) | coordbf::ExperimentError::Parse { .. } => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Validate { config } => validate(&config),
        Command::Single(a) => single(a),
        Command::Convergence(a) => convergence(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

/// Any problem reading the experiment file is the caller's input error.
fn load_spec(path: &Path) -> Result<ExperimentSpec, Failure> {
    ExperimentSpec::load(path).map_err(|e| Failure::Config(e.to_string()))
}

fn run(a: RunArgs) -> Result<(), Failure> {
    let mut spec = load_spec(&a.config)?;
    if let Some(t) = a.trials {
        spec.trials = t;
    }
    if let Some(s) = a.seed {
        spec.base.seed = s;
    }
    if a.output.is_some() {
        spec.output = a.output;
    }
    if a.trace_output.is_some() {
        spec.trace_output = a.trace_output;
    }
    spec.validate()?;
    let out = spec.resolve_output(&a.config);
    let res = run_experiment(&spec)?;
    write_csv_file(&res.rows, &out)?;
    if let Some(p) = &spec.trace_output {
        write_trials_jsonl(&res.trials, p)?;
    }
    if !a.quiet {
        println!("{:>5} {:>13} {:>7} {:>7} {:>10} {:>8} {:>7} {:>5}", "point", "algorithm", "snr_db", "dev_db", "sum_rate", "theta", "iters", "fail");
        for r in &res.rows {
            println!(
                "{:>5} {:>13} {:>7.1} {:>7.1} {:>10.4} {:>8.4} {:>7.1} {:>5}",
                r.point, r.algorithm, r.snr_db, r.snr_dev_db, r.mean_sum_rate, r.mean_normalized_sum_rate, r.mean_iterations, r.failures
            );
        }
    }
    println!("wrote {} rows to {}", res.rows.len(), out.display());
    Ok(())
}

fn validate(path: &Path) -> Result<(), Failure> {
    let spec = load_spec(path)?;
    println!(
        "ok: {} points x {} algorithms x {} trials",
        spec.points().len(),
        spec.algorithms.len(),
        spec.trials
    );
    Ok(())
}

impl ScenarioArgs {
    fn resolve(&self, defaults: ScenarioConfig) -> Result<ScenarioConfig, Failure> {
        let (mut cfg, mut fixed) = match &self.config {
            Some(p) => {
                let spec = load_spec(p)?;
                (spec.base, spec.fixed_p_t)
            }
            None => (defaults, false),
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => { $( if let Some(v) = self.$flag { cfg.$field = v; } )* };
        }
        set!(model => model, nt => n_t, nr => n_r, ns => n_s, np => n_p, snr_dev_db => snr_dev_db,
             gamma => gamma, noise_var => noise_var, epsilon => epsilon, max_iters => max_outer_iters, seed => seed);
        if let Some(s) = self.snr_db {
            cfg.snr_db = s;
            fixed = false;
        }
        match self.p_t {
            Some(p) => cfg.p_t = p,
            None if !fixed => cfg.p_t = nominal_power_budget(&cfg),
            None => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn single(a: SingleArgs) -> Result<(), Failure> {
    let cfg = a.scenario.resolve(ScenarioConfig::default())?;
    if a.algo.is_fairness() {
        cfg.validate_fairness()?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let channels = generate_channels(&cfg, &mut rng)?;
    let mut init = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 1));
    let trace = run_algorithm(&cfg, &channels, a.algo, &mut init)?;
    let bound = upper_bound(&channels, &cfg);
    let rate = trace.final_sum_rate();
    let theta = if bound > 0.0 { rate / bound } else { 0.0 };

    let mut out = String::new();
    if a.json {
        let doc = serde_json::json!({
            "config": cfg,
            "channel_digest": channels.digest(),
            "upper_bound": bound,
            "normalized_sum_rate": theta,
            "trace": trace,
        });
        out = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Runtime(e.to_string()))?;
        out.push('\n');
    } else {
        let last = trace.final_record();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "algorithm        {}", trace.algorithm);
        let _ = writeln!(
            out,
            "scenario         {} n_t={} n_r={} n_s={} n_p={} snr_db={} snr_dev_db={} p_t={} gamma={:e} seed={}",
            cfg.model, cfg.n_t, cfg.n_r, cfg.n_s, cfg.n_p, cfg.snr_db, cfg.snr_dev_db, cfg.p_t, cfg.gamma, cfg.seed
        );
        let _ = writeln!(out, "iterations       {}", trace.iterations);
        let _ = writeln!(out, "stop_reason      {}", trace.stop_reason.as_str());
        let _ = writeln!(out, "converged        {}", trace.converged);
        let _ = writeln!(out, "sum_rate         {rate:.6}");
        let _ = writeln!(out, "upper_bound      {bound:.6}");
        let _ = writeln!(out, "theta            {theta:.6}");
        let _ = writeln!(out, "min_sinr         {:.6}", last.min_sinr);
        let _ = writeln!(out, "sinr             {}", list(&last.sinrs));
        let _ = writeln!(out, "tx_power         {}", list(&last.tx_power));
        let _ = writeln!(out, "pu_interference  {}", last.pu_interference.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" "));
        let _ = writeln!(out, "relaxation_gap   {}", trace.relaxation_gap);
        let _ = writeln!(out, "rejected_updates {}", trace.rejected_updates);
        let _ = writeln!(out, "wall_time_s      {:.3}", trace.wall_time_s);
    }
    print!("{out}");
    match trace.failure {
        Some(status) => Err(Failure::Runtime(format!("transmit subproblem failed with status {}", status.as_str()))),
        None => Ok(()),
    }
}

fn convergence(a: ConvergenceArgs) -> Result<(), Failure> {
    let defaults = ScenarioConfig {
        model: SystemModel::Ic,
        n_t: 4,
        n_r: 4,
        n_s: 10,
        n_p: 2,
        snr_dev_db: 5.0,
        ..ScenarioConfig::default()
    };
    let cfg = a.scenario.resolve(defaults)?;
    let series = convergence_series(&cfg, &Algorithm::ALL)?;
    let mut text = String::from("algorithm,iteration,objective,residual\n");
    for s in &series {
        for (i, (obj, res)) in s.objective.iter().zip(&s.residual).enumerate() {
            let _ = writeln!(text, "{},{},{obj:e},{res:e}", s.algorithm, i + 1);
        }
    }
    match &a.output {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
            }
            std::fs::write(p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?;
            println!("wrote convergence series to {}", p.display());
        }
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Runtime(e.to_string()))?;
        }
    }
    Ok(())
}
