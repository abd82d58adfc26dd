//! Config-driven Monte Carlo runner.
//!
//! An experiment file is TOML:
//!
//! ```toml
//! schema_version = 1
//! algorithms = ["fairness", "srm"]
//! trials = 100
//! metrics = ["sum_rate", "normalized_sum_rate"]
//! output = "results/ic_snr.csv"          # optional
//! trace_output = "results/ic_snr.jsonl"  # optional
//!
//! [scenario]
//! model = "ic"
//! n_s = 2
//! n_p = 1
//! n_t = 2
//! n_r = 2
//! snr_db = 10.0
//!
//! [sweep]
//! snr_db = [0.0, 10.0, 20.0, 30.0]
//! ```
//!
//! Every `[scenario]` key is optional and defaults to [`ScenarioConfig`]'s
//! default. `p_t` is derived from `snr_db` unless given; giving it while
//! sweeping `snr_db` is an error. `[sweep]` holds at most two of `snr_db`,
//! `n_s`, `n_p`, `antennas` (a list of `[n_t, n_r]` pairs) and
//! `snr_dev_db`; points are the Cartesian product in that key order with
//! the last key varying fastest.
//!
//! Trial `t` uses a seed derived from the scenario seed and `t` only, so
//! every sweep point and every algorithm sees the same random stream.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algorithms::{run_algorithm, Algorithm, RunTrace};
use crate::channel::{generate_channels, nominal_power_budget, ChannelSet, ScenarioConfig, SystemModel};
use crate::error::{ConfigError, ExperimentError};
use crate::linalg::spectral_norm;

pub const SCHEMA_VERSION: u32 = 1;
pub const OUTPUT_DIR_ENV: &str = "COORDBF_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "results";
pub const DEFAULT_TRIALS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    SumRate,
    NormalizedSumRate,
    ConvergenceResiduals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepDim {
    SnrDb(Vec<f64>),
    NS(Vec<usize>),
    NP(Vec<usize>),
    Antennas(Vec<(usize, usize)>),
    SnrDevDb(Vec<f64>),
}

impl SweepDim {
    pub fn key(&self) -> &'static str {
        match self {
            SweepDim::SnrDb(_) => "snr_db",
            SweepDim::NS(_) => "n_s",
            SweepDim::NP(_) => "n_p",
            SweepDim::Antennas(_) => "antennas",
            SweepDim::SnrDevDb(_) => "snr_dev_db",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SweepDim::SnrDb(v) | SweepDim::SnrDevDb(v) => v.len(),
            SweepDim::NS(v) | SweepDim::NP(v) => v.len(),
            SweepDim::Antennas(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn apply(&self, i: usize, cfg: &mut ScenarioConfig) {
        match self {
            SweepDim::SnrDb(v) => cfg.snr_db = v[i],
            SweepDim::NS(v) => cfg.n_s = v[i],
            SweepDim::NP(v) => cfg.n_p = v[i],
            SweepDim::Antennas(v) => (cfg.n_t, cfg.n_r) = v[i],
            SweepDim::SnrDevDb(v) => cfg.snr_dev_db = v[i],
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    model: Option<SystemModel>,
    n_s: Option<usize>,
    n_p: Option<usize>,
    n_t: Option<usize>,
    n_r: Option<usize>,
    snr_db: Option<f64>,
    snr_dev_db: Option<f64>,
    p_t: Option<f64>,
    gamma: Option<f64>,
    noise_var: Option<f64>,
    epsilon: Option<f64>,
    max_outer_iters: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    snr_db: Option<Vec<f64>>,
    n_s: Option<Vec<usize>>,
    n_p: Option<Vec<usize>>,
    antennas: Option<Vec<(usize, usize)>>,
    snr_dev_db: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    schema_version: u32,
    #[serde(default)]
    scenario: ScenarioFile,
    #[serde(default)]
    sweep: SweepFile,
    algorithms: Vec<String>,
    trials: Option<usize>,
    metrics: Option<Vec<Metric>>,
    output: Option<PathBuf>,
    trace_output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub base: ScenarioConfig,
    /// `p_t` given explicitly rather than derived from `snr_db`.
    pub fixed_p_t: bool,
    pub sweep: Vec<SweepDim>,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub metrics: BTreeSet<Metric>,
    pub output: Option<PathBuf>,
    pub trace_output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub index: usize,
    pub config: ScenarioConfig,
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self, ExperimentError> {
        let file: SpecFile = toml::from_str(text).map_err(|source| ExperimentError::Parse {
            path: origin.to_path_buf(),
            source,
        })?;
        Ok(Self::from_file(file)?)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    fn from_file(file: SpecFile) -> Result<Self, ConfigError> {
        if file.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::new(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", file.schema_version),
            ));
        }
        let s = file.scenario;
        let mut base = ScenarioConfig::default();
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = s.$f { base.$f = v; } )* };
        }
        take!(model, n_s, n_p, n_t, n_r, snr_db, snr_dev_db, gamma, noise_var, epsilon, max_outer_iters, seed);
        let fixed_p_t = s.p_t.is_some();
        base.p_t = s.p_t.unwrap_or_else(|| nominal_power_budget(&base));

        let w = file.sweep;
        let mut sweep = Vec::new();
        if let Some(v) = w.snr_db {
            sweep.push(SweepDim::SnrDb(v));
        }
        if let Some(v) = w.n_s {
            sweep.push(SweepDim::NS(v));
        }
        if let Some(v) = w.n_p {
            sweep.push(SweepDim::NP(v));
        }
        if let Some(v) = w.antennas {
            sweep.push(SweepDim::Antennas(v));
        }
        if let Some(v) = w.snr_dev_db {
            sweep.push(SweepDim::SnrDevDb(v));
        }

        let algorithms = file
            .algorithms
            .iter()
            .map(|a| a.parse::<Algorithm>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ConfigError::new("algorithms", e.message))?;
        let metrics = file
            .metrics
            .map(|m| m.into_iter().collect())
            .unwrap_or_else(|| [Metric::SumRate, Metric::NormalizedSumRate].into_iter().collect());

        let spec = Self {
            base,
            fixed_p_t,
            sweep,
            algorithms,
            trials: file.trials.unwrap_or(DEFAULT_TRIALS),
            metrics,
            output: file.output,
            trace_output: file.trace_output,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the spec and every scenario it expands to.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.trials < 1 {
            return Err(ConfigError::new("trials", "must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(ConfigError::new("algorithms", "at least one algorithm is required"));
        }
        let mut seen = BTreeSet::new();
        for a in &self.algorithms {
            if !seen.insert(a.as_str()) {
                return Err(ConfigError::new("algorithms", format!("'{a}' listed twice")));
            }
        }
        if self.sweep.len() > 2 {
            return Err(ConfigError::new(
                "sweep",
                format!("at most two swept dimensions are supported, got {}", self.sweep.len()),
            ));
        }
        for d in &self.sweep {
            if d.is_empty() {
                return Err(ConfigError::new(format!("sweep.{}", d.key()), "value list is empty"));
            }
            if self.fixed_p_t && matches!(d, SweepDim::SnrDb(_)) {
                return Err(ConfigError::new(
                    "scenario.p_t",
                    "cannot be fixed while sweeping snr_db (the budget is derived from each SNR)",
                ));
            }
        }
        let needs_fairness = self.algorithms.iter().any(|a| a.is_fairness());
        for p in self.points() {
            let check = if needs_fairness {
                p.config.validate_fairness()
            } else {
                p.config.validate()
            };
            check.map_err(|e| {
                let field = if self.sweep.is_empty() {
                    format!("scenario.{}", e.field)
                } else {
                    format!("sweep point {} ({})", p.index, e.field)
                };
                ConfigError::new(field, e.message)
            })?;
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<SweepPoint> {
        let lens: Vec<usize> = self.sweep.iter().map(SweepDim::len).collect();
        let total: usize = lens.iter().product();
        (0..total)
            .map(|index| {
                let mut cfg = self.base.clone();
                let mut rem = index;
                for (d, &len) in self.sweep.iter().zip(&lens).rev() {
                    d.apply(rem % len, &mut cfg);
                    rem /= len;
                }
                if !self.fixed_p_t {
                    cfg.p_t = nominal_power_budget(&cfg);
                }
                SweepPoint { index, config: cfg }
            })
            .collect()
    }

    /// CSV destination: the spec's `output`, else `<dir>/<stem>.csv` with
    /// `<dir>` from the environment or the default directory.
    pub fn resolve_output(&self, config_path: &Path) -> PathBuf {
        if let Some(p) = &self.output {
            return p.clone();
        }
        let dir = std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
        let stem = config_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "experiment".to_string());
        dir.join(format!("{stem}.csv"))
    }
}

/// Interference-free outer bound: every link alone with its best single
/// beam. IC and MAC streams each get `p_t`; BC streams share `p_t` through
/// water-filling over the per-link gains.
pub fn upper_bound(channels: &ChannelSet, config: &ScenarioConfig) -> f64 {
    let gains: Vec<f64> = (0..channels.n_s())
        .map(|l| spectral_norm(&channels.h_ss[l][l]).powi(2) / channels.noise_var[l])
        .collect();
    let powers = match config.model {
        SystemModel::Ic | SystemModel::Mac => vec![config.p_t; gains.len()],
        SystemModel::Bc => water_fill(&gains, config.p_t),
    };
    gains.iter().zip(&powers).map(|(g, p)| (1.0 + p * g).log2()).sum()
}

/// Maximizer of `sum log(1 + p_l g_l)` subject to `sum p_l = total`.
pub fn water_fill(gains: &[f64], total: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));
    let mut powers = vec![0.0; gains.len()];
    // Largest active set whose water level keeps every power positive.
    let mut active = order.len();
    while active > 0 {
        let level = (total + order[..active].iter().map(|&i| 1.0 / gains[i]).sum::<f64>()) / active as f64;
        if level > 1.0 / gains[order[active - 1]] {
            for &i in &order[..active] {
                powers[i] = level - 1.0 / gains[i];
            }
            break;
        }
        active -= 1;
    }
    powers
}

/// SplitMix64 step, used to derive independent per-trial seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Result of one algorithm on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub point: usize,
    pub trial: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub channel_digest: String,
    pub sum_rate: f64,
    pub upper_bound: f64,
    pub normalized_sum_rate: f64,
    pub iterations: usize,
    pub converged: bool,
    pub relaxation_gap: bool,
    pub failure: Option<String>,
    pub sinrs: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub residuals: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub point: usize,
    pub model: SystemModel,
    pub n_s: usize,
    pub n_p: usize,
    pub n_t: usize,
    pub n_r: usize,
    pub snr_db: f64,
    pub snr_dev_db: f64,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub mean_sum_rate: f64,
    pub std_sum_rate: f64,
    pub mean_normalized_sum_rate: f64,
    pub mean_upper_bound: f64,
    pub mean_iterations: f64,
    pub failures: usize,
    /// Digest over the realizations of every trial at this point.
    pub channel_digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub trials: Vec<TrialRecord>,
}

fn trial_record(
    point: usize,
    trial: usize,
    seed: u64,
    channels: &ChannelSet,
    digest: &str,
    bound: f64,
    algorithm: Algorithm,
    outcome: Result<RunTrace, ConfigError>,
    keep_residuals: bool,
) -> TrialRecord {
    match outcome {
        Ok(trace) => {
            let rate = trace.final_sum_rate();
            TrialRecord {
                point,
                trial,
                seed,
                algorithm,
                channel_digest: digest.to_string(),
                sum_rate: rate,
                upper_bound: bound,
                normalized_sum_rate: if bound > 0.0 { rate / bound } else { 0.0 },
                iterations: trace.iterations,
                converged: trace.converged,
                relaxation_gap: trace.relaxation_gap,
                failure: trace.failure.map(|s| s.as_str().to_string()),
                sinrs: trace.final_sinrs().to_vec(),
                residuals: keep_residuals.then(|| trace.convergence_residuals()),
            }
        }
        Err(e) => TrialRecord {
            point,
            trial,
            seed,
            algorithm,
            channel_digest: digest.to_string(),
            sum_rate: 0.0,
            upper_bound: bound,
            normalized_sum_rate: 0.0,
            iterations: 0,
            converged: false,
            relaxation_gap: false,
            failure: Some(e.to_string()),
            sinrs: vec![0.0; channels.n_s()],
            residuals: None,
        },
    }
}

/// Runs every algorithm on one seeded realization. All algorithms start
/// from the same random initialization.
pub fn run_trial(
    config: &ScenarioConfig,
    algorithms: &[Algorithm],
    point: usize,
    trial: usize,
    keep_residuals: bool,
) -> Vec<TrialRecord> {
    let seed = mix_seed(config.seed, trial as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channels = match generate_channels(config, &mut rng) {
        Ok(c) => c,
        Err(e) => {
            return algorithms
                .iter()
                .map(|&a| TrialRecord {
                    point,
                    trial,
                    seed,
                    algorithm: a,
                    channel_digest: String::new(),
                    sum_rate: 0.0,
                    upper_bound: 0.0,
                    normalized_sum_rate: 0.0,
                    iterations: 0,
                    converged: false,
                    relaxation_gap: false,
                    failure: Some(e.to_string()),
                    sinrs: Vec::new(),
                    residuals: None,
                })
                .collect()
        }
    };
    let digest = channels.digest();
    let bound = upper_bound(&channels, config);
    let init_seed = mix_seed(seed, 1);
    algorithms
        .iter()
        .map(|&a| {
            let mut init_rng = ChaCha8Rng::seed_from_u64(init_seed);
            let outcome = run_algorithm(config, &channels, a, &mut init_rng);
            trial_record(point, trial, seed, &channels, &digest, bound, a, outcome, keep_residuals)
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult, ExperimentError> {
    spec.validate()?;
    let points = spec.points();
    let keep = spec.metrics.contains(&Metric::ConvergenceResiduals);
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.trials).map(move |t| (p, t)))
        .collect();
    let per_job: Vec<Vec<TrialRecord>> = jobs
        .par_iter()
        .map(|&(p, t)| run_trial(&points[p].config, &spec.algorithms, p, t, keep))
        .collect();
    let trials: Vec<TrialRecord> = per_job.into_iter().flatten().collect();

    let mut rows = Vec::with_capacity(points.len() * spec.algorithms.len());
    for point in &points {
        let at_point: Vec<&TrialRecord> = trials.iter().filter(|r| r.point == point.index).collect();
        let mut h = Sha256::new();
        for r in at_point.iter().filter(|r| r.algorithm == spec.algorithms[0]) {
            h.update(r.channel_digest.as_bytes());
        }
        let digest = hex::encode(&h.finalize()[..8]);
        for &algorithm in &spec.algorithms {
            let recs: Vec<&TrialRecord> = at_point.iter().copied().filter(|r| r.algorithm == algorithm).collect();
            let rates: Vec<f64> = recs.iter().map(|r| r.sum_rate).collect();
            let theta: Vec<f64> = recs.iter().map(|r| r.normalized_sum_rate).collect();
            let bounds: Vec<f64> = recs.iter().map(|r| r.upper_bound).collect();
            let iters: Vec<f64> = recs.iter().map(|r| r.iterations as f64).collect();
            let c = &point.config;
            rows.push(ResultRow {
                point: point.index,
                model: c.model,
                n_s: c.n_s,
                n_p: c.n_p,
                n_t: c.n_t,
                n_r: c.n_r,
                snr_db: c.snr_db,
                snr_dev_db: c.snr_dev_db,
                algorithm,
                trials: recs.len(),
                mean_sum_rate: mean(&rates),
                std_sum_rate: sample_std(&rates),
                mean_normalized_sum_rate: mean(&theta),
                mean_upper_bound: mean(&bounds),
                mean_iterations: mean(&iters),
                failures: recs.iter().filter(|r| r.failure.is_some()).count(),
                channel_digest: digest.clone(),
            });
        }
    }
    Ok(ExperimentResult { rows, trials })
}

fn create_parent(path: &Path) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    }
    Ok(())
}

/// Serializes rows as CSV after one `#` comment line carrying a timestamp.
pub fn write_csv<W: Write>(rows: &[ResultRow], mut out: W) -> Result<(), ExperimentError> {
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    writeln!(out, "# coordbf results, unix_time={stamp}").map_err(|e| ExperimentError::io("<csv>", e))?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| ExperimentError::io("<csv>", e))?;
    Ok(())
}

pub fn write_csv_file(rows: &[ResultRow], path: &Path) -> Result<(), ExperimentError> {
    create_parent(path)?;
    let f = fs::File::create(path).map_err(|e| ExperimentError::io(path, e))?;
    write_csv(rows, std::io::BufWriter::new(f))
}

/// One JSON object per trial record per line.
pub fn write_trials_jsonl(trials: &[TrialRecord], path: &Path) -> Result<(), ExperimentError> {
    create_parent(path)?;
    let f = fs::File::create(path).map_err(|e| ExperimentError::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    for t in trials {
        serde_json::to_writer(&mut w, t)?;
        writeln!(w).map_err(|e| ExperimentError::io(path, e))?;
    }
    w.flush().map_err(|e| ExperimentError::io(path, e))?;
    Ok(())
}

/// Residual-versus-iteration series of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSeries {
    pub algorithm: Algorithm,
    pub objective: Vec<f64>,
    pub residual: Vec<f64>,
    pub converged: bool,
}

/// Runs each algorithm once on the realization drawn from `config.seed`.
pub fn convergence_series(
    config: &ScenarioConfig,
    algorithms: &[Algorithm],
) -> Result<Vec<ConvergenceSeries>, ConfigError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let channels = generate_channels(config, &mut rng)?;
    let init_seed = mix_seed(config.seed, 1);
    algorithms
        .iter()
        .map(|&a| {
            let mut init_rng = ChaCha8Rng::seed_from_u64(init_seed);
            let trace = run_algorithm(config, &channels, a, &mut init_rng)?;
            Ok(ConvergenceSeries {
                algorithm: a,
                objective: trace.objective_series(),
                residual: trace.convergence_residuals(),
                converged: trace.converged,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;

    fn spec(text: &str) -> Result<ExperimentSpec, ExperimentError> {
        ExperimentSpec::from_toml_str(text, Path::new("test.toml"))
    }

    #[test]
    fn identity_channel_bound() {
        let cfg = ScenarioConfig {
            n_p: 0,
            ..ScenarioConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ch = generate_channels(&cfg, &mut rng).unwrap();
        for l in 0..2 {
            ch.h_ss[l][l] = CMatrix::identity(2, 2);
        }
        let expect = 2.0 * (1.0 + cfg.p_t / cfg.noise_var).log2();
        assert!((upper_bound(&ch, &cfg) - expect).abs() < 1e-12);
        for l in 0..2 {
            ch.h_ss[l][l] = CMatrix::zeros(2, 2);
        }
        assert_eq!(upper_bound(&ch, &cfg), 0.0);
    }

    #[test]
    fn water_filling_sums_to_budget() {
        let p = water_fill(&[4.0, 1.0, 0.01], 2.0);
        assert!((p.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        assert!(p[0] > p[1]);
        assert_eq!(p[2], 0.0);
        assert_eq!(water_fill(&[0.0, 0.0], 1.0), vec![0.0, 0.0]);
    }

    #[test]
    fn sweep_points_are_cartesian() {
        let s = spec(
            r#"
            schema_version = 1
            algorithms = ["srm"]
            [scenario]
            n_t = 4
            n_r = 4
            [sweep]
            snr_db = [0.0, 10.0]
            n_p = [1, 2, 3]
            "#,
        )
        .unwrap();
        let pts = s.points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1].config.n_p, 2);
        assert_eq!(pts[3].config.snr_db, 10.0);
        assert!((pts[3].config.p_t - 10.0).abs() < 1e-12);
        assert_eq!(s.trials, DEFAULT_TRIALS);
    }

    #[test]
    fn fixed_budget_conflicts_with_snr_sweep() {
        let err = spec(
            r#"
            schema_version = 1
            algorithms = ["srm"]
            [scenario]
            p_t = 3.0
            [sweep]
            snr_db = [0.0]
            "#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("p_t"));
    }

    #[test]
    fn unknown_field_is_named() {
        let err = spec("schema_version = 1\nalgorithms = [\"srm\"]\n[scenario]\nn_xx = 3\n").unwrap_err();
        assert!(err.to_string().contains("n_xx"), "{err}");
    }

    #[test]
    fn fairness_limit_checked_per_point() {
        let err = spec(
            r#"
            schema_version = 1
            algorithms = ["fairness"]
            [scenario]
            model = "bc"
            n_p = 0
            [sweep]
            n_s = [2, 3]
            "#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("n_s <= n_t"), "{err}");
    }

    #[test]
    fn seeds_are_distinct() {
        let a: BTreeSet<u64> = (0..1000).map(|t| mix_seed(7, t)).collect();
        assert_eq!(a.len(), 1000);
    }
}
